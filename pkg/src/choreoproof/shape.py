"""Endpoint identification and the figure-eight sign analysis.

At Omega = 0 the body curve is ``U = (0, u2, sqrt(a) u3)`` and
``mu = U_y U_z' - U_z U_y' = sqrt(a) (u2 v3 - u3 v2)`` on a true solution
(where ``v = u'``).  The eight shape follows from ``mu < 0`` on
``[0, 3/2]`` together with ``mu''' > 0`` on ``[3/2, pi/2]`` and the
vanishing of ``mu, mu', mu''`` at ``pi/2``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import model, series, solver
from .rigor import PI, TRIG_EPS, Ball, Interval, U, gamma, sqrt, up

HALF_PI = PI * 0.5


class ShapeError(RuntimeError):
    """A structural precondition of the shape analysis does not hold."""


class SignCertificationError(RuntimeError):
    def __init__(self, msg, subinterval=None):
        super().__init__(msg)
        self.subinterval = subinterval


# ---------------------------------------------------------------------------
# endpoint slices


def slice_enclosure(b, omega: float) -> Ball:
    """Enclosure of the coordinates of x-bar at an endpoint of the domain."""
    lo, hi = b.params.domain
    if omega == hi:
        s = 1.0
    elif omega == lo:
        s = -1.0
    else:
        raise ValueError("only domain endpoints are evaluated exactly")
    n = b.xbar.shape[1]
    signs = np.ones(n) if s == 1.0 else (-1.0) ** np.arange(n)
    return (b.xbar * Ball(signs[None, :])).sum(axis=1)


# exact targets are enclosed; an enclosure wider than this cannot certify
# equality of the pinned coefficients
_PIN_TOL = 1e-10


def check_triangle_endpoint(b) -> bool:
    """Omega = 1 slice equals the Lagrange triangle coordinatewise."""
    if b.params.domain[1] != 1.0:
        return False
    lay = b.layout
    sl = slice_enclosure(b, 1.0)
    lo, hi = sl.lo_hi()
    tlo, thi = np.zeros(lay.dim), np.zeros(lay.dim)
    for key, iv in solver.triangle_values(lay.K).items():
        i = solver._coord(lay, *key)
        tlo[i], thi[i] = iv.lo, iv.hi
    ok = (lo <= tlo) & (thi <= hi) & (sl.radius() <= _PIN_TOL)
    return bool(np.all(ok))


def check_planar_endpoint(b) -> bool:
    """u1 and v1 vanish identically at Omega = 0."""
    if b.params.domain[0] != 0.0:
        return False
    lay = b.layout
    sl = slice_enclosure(b, 0.0)
    idx = np.r_[lay["u1"].slice, lay["v1"].slice]
    s = sl[idx]
    return bool(np.all(s.contains_zero() & (s.radius() <= _PIN_TOL)))


# ---------------------------------------------------------------------------
# mu and its derivatives


def _omega0_component(b, name: str) -> Ball:
    """Complex Fourier coefficients of one component at Omega = 0."""
    lay = b.layout
    blk = lay[name]
    sl = slice_enclosure(b, 0.0)
    c = model.from_coords(Ball(sl.mid[blk.slice, None], sl.radius()[blk.slice, None]), blk, lay.K)
    return c


class MuEnclosure:
    """Callable enclosure of ``d^m mu / dt^m`` at Omega = 0 on the r-ball.

    Calling with an :class:`Interval` returns an :class:`Interval`;
    :meth:`batch` evaluates arrays of subintervals at once.
    """

    def __init__(self, b, r: float, m: int, orientation: int = 1):
        if m < 0:
            raise ValueError("derivative order must be >= 0")
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self.orientation = orientation
        p = b.params
        if p.domain[0] != 0.0:
            raise ShapeError("mu needs Omega = 0 in the domain")
        self.m = m
        self.r = float(r)
        lay = b.layout
        sl = slice_enclosure(b, 0.0)
        a0 = sl[lay["a"].start].to_interval().widen(self.r)
        if not a0.lo > 0:
            raise ShapeError(f"a(0) enclosure {a0} is not positive")
        self.sqrt_a = sqrt(a0)
        comps = {nm: _omega0_component(b, nm) for nm in ("u2", "u3", "v2", "v3")}
        phi = series.fc_convolve(comps["u2"], comps["v3"]) - series.fc_convolve(comps["u3"], comps["v2"])
        self.phi = phi[:, 0]
        Kp = (self.phi.shape[0] - 1) // 2
        self.ks = np.arange(-Kp, Kp + 1)
        # error of the true product inside the r-ball, in nu-norm
        nrm = {nm: series.nu_norm(c, p).hi for nm, c in comps.items()}
        rr = self.r
        err = (Interval(nrm["v3"] + nrm["u2"] + nrm["u3"] + nrm["v2"], nrm["v3"] + nrm["u2"] + nrm["u3"] + nrm["v2"]) * rr
               + Interval(2 * rr * rr, 2 * rr * rr))
        self.err_nu = err.hi
        self.err = (Interval(err.hi, err.hi) * series.derivative_gain(p, m)).hi
        self._absphi = np.abs(self.phi.mid) + self.phi.radius()

    def _D(self, j: int) -> float:
        """Upper bound of ``sum |k|^j |phi_k|``, a global bound of ``|phi^(j)|``."""
        ka = np.abs(self.ks).astype(float)
        return float(up(np.sum(self._absphi * ka ** j), len(ka) + 2))

    def _point(self, t: np.ndarray, j: int):
        """Midpoints and radii of ``phi^(j)(t)`` for float points ``t``."""
        ks = self.ks.astype(float)
        arg = np.outer(t, ks)
        e = np.exp(1j * arg)
        # libm error plus the rounding of k t
        e_err = np.abs(arg) * 2 * U + TRIG_EPS
        kj = np.abs(ks) ** j
        coef = self.phi.mid * ((1, 1j, -1, -1j)[j % 4] * np.sign(ks) ** j * kj)
        val = (e @ coef).real
        acoef = np.abs(coef)
        rad = e_err @ acoef + self.phi.radius() @ kj + gamma(len(ks) + 8) * (1.0 + e_err) @ acoef
        return val, up(rad, len(ks) + 8)

    def batch(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        tm = 0.5 * (lo + hi)
        h = up(np.maximum(tm - lo, hi - tm), 1)
        m = self.m
        f0, r0 = self._point(tm, m)
        f1, r1 = self._point(tm, m + 1)
        d1 = up(np.abs(f1) + r1 + self._D(m + 2) * h, 4)
        rad = up(r0 + h * d1 + self.err, 4)
        # multiply by sqrt(a(0)) > 0
        s = self.sqrt_a
        plo, phi_ = np.nextafter(f0 - rad, -np.inf), np.nextafter(f0 + rad, np.inf)
        cands = [plo * s.lo, plo * s.hi, phi_ * s.lo, phi_ * s.hi]
        out_lo = np.nextafter(np.minimum.reduce(cands), -np.inf)
        out_hi = np.nextafter(np.maximum.reduce(cands), np.inf)
        if self.orientation < 0:
            return -out_hi, -out_lo
        return out_lo, out_hi

    def __call__(self, t) -> Interval:
        t = Interval.coerce(t)
        lo, hi = self.batch([t.lo], [t.hi])
        return Interval(float(lo[0]), float(hi[0]))


def mu_enclosure(b, r: float, derivative_order: int = 0, orientation: int = 1) -> MuEnclosure:
    return MuEnclosure(b, r, derivative_order, orientation)


def orientation(b) -> int:
    """Sign that makes ``mu`` negative on the first quarter period.

    Reversing time maps the eight to itself traversed backwards and flips
    the sign of ``mu``; the sign checks are stated for the orientation in
    which ``mu < 0`` near ``t = 0``.
    """
    val = mu_enclosure(b, 0.0)(Interval(0.75, 0.75))
    return -1 if val.lo + val.hi > 0 else 1


def certify_sign(f, t0: float, t1: float, sign: str, min_width: float = 1e-4, max_pieces: int = 1 << 22) -> list:
    """Adaptive bisection proving a strict sign of ``f`` on ``[t0, t1]``.

    Returns the certified pieces ``(lo, hi, f_lo, f_hi)`` in increasing order.
    """
    if sign not in ("negative", "positive"):
        raise ValueError("sign must be 'negative' or 'positive'")
    if not t0 <= t1:
        raise ValueError("empty range")
    batch = getattr(f, "batch", None)
    if batch is None:
        def batch(lo, hi):
            out = [f(Interval(a, b)) for a, b in zip(lo, hi)]
            return np.array([o.lo for o in out]), np.array([o.hi for o in out])
    done = []
    lo, hi = np.array([t0]), np.array([t1])
    total = 0
    while lo.size:
        flo, fhi = batch(lo, hi)
        good = fhi < 0 if sign == "negative" else flo > 0
        done += list(zip(lo[good], hi[good], flo[good], fhi[good]))
        lo, hi = lo[~good], hi[~good]
        if not lo.size:
            break
        narrow = (hi - lo) < min_width
        if narrow.any():
            j = int(np.argmax(narrow))
            raise SignCertificationError(
                f"sign of f not certified on [{lo[j]!r}, {hi[j]!r}]", (float(lo[j]), float(hi[j])))
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        total += lo.size
        if total > max_pieces:
            raise SignCertificationError("too many subintervals", (float(lo[0]), float(hi[-1])))
    done.sort()
    return [tuple(float(x) for x in d) for d in done]


def covers(pieces, t0: float, t1: float) -> bool:
    """The pieces form a chain from t0 to t1 without gaps."""
    if not pieces:
        return False
    reach = t0
    for lo, hi, *_ in sorted(pieces):
        if lo > reach:
            return False
        reach = max(reach, hi)
    return pieces[0][0] <= t0 and reach >= t1


@dataclass
class ShapeReport:
    triangle_ok: bool | None
    planar_ok: bool
    orientation: int = 1
    mu_negative_on: list = field(default_factory=list)
    mu3_positive_on: list = field(default_factory=list)
    margin: float = 0.0
    identities: dict = field(default_factory=dict)
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return bool(self.planar_ok and self.failure is None and self.margin > 0
                    and all(self.identities.values()))

    def to_json(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        d["mu_negative_on"] = [list(p) for p in self.mu_negative_on]
        d["mu3_positive_on"] = [list(p) for p in self.mu3_positive_on]
        return d


def verify_eight(b, r: float, split: float = 1.5, min_width: float = 1e-4, raise_on_failure: bool = True) -> ShapeReport:
    """Planarity at Omega = 0 and the sign cascade for mu."""
    planar = check_planar_endpoint(b)
    if not planar:
        raise ShapeError("planar endpoint check failed; the sign analysis needs u1 = v1 = 0 at Omega = 0")
    tri = check_triangle_endpoint(b) if b.params.domain[1] == 1.0 else None
    sgn = orientation(b)
    rep = ShapeReport(tri, planar, orientation=sgn)
    half_pi = HALF_PI
    mu = mu_enclosure(b, r, 0, sgn)
    # the structural zeros at pi/2: mu, mu', mu'' contain 0
    for j in range(3):
        enc = mu_enclosure(b, r, j)(half_pi)
        rep.identities[f"mu{j}_half_pi_contains_zero"] = bool(enc.lo <= 0.0 <= enc.hi)
    try:
        neg = certify_sign(mu, 0.0, split, "negative", min_width)
        rep.mu_negative_on = neg
        mu3 = mu_enclosure(b, r, 3, sgn)
        pos = certify_sign(mu3, split, half_pi.hi, "positive", min_width)
        rep.mu3_positive_on = pos
    except SignCertificationError as exc:
        rep.failure = str(exc)
        if raise_on_failure:
            raise
        return rep
    if not (covers(neg, 0.0, split) and covers(pos, split, half_pi.hi)):
        rep.failure = "certified pieces do not cover the target ranges"
    margins = [-p[3] for p in neg] + [p[2] for p in pos]
    rep.margin = float(min(margins)) if margins else 0.0
    if rep.failure and raise_on_failure:
        raise SignCertificationError(rep.failure)
    return rep
