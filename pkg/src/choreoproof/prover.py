"""Rigorous Y, Z1, Z2 bounds and the contraction certificate.

The Newton-like operator is ``T(x) = x - A F(x)`` with ``A`` block
diagonal: ``A_fin`` (the Chebyshev-in-Omega matrix stored on the branch)
on modes ``|k| <= K`` and the inverse of ``d/dt`` on the Fourier tail.
All quantities returned here are upper bounds.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import model, series
from .rigor import SQRT3, Ball, Interval, gamma, int_pow, up
from .series import NormParams

log = logging.getLogger(__name__)

# bytes budget for one column chunk of the A * DF product
_CHUNK_BYTES = 160e6


def _iv(x: float) -> Interval:
    return Interval(float(x), float(x))


@dataclass
class Bound:
    """An upper bound together with the proof terms that produced it."""

    value: Interval
    items: dict = field(default_factory=dict)

    @property
    def hi(self) -> float:
        return self.value.hi


# ---------------------------------------------------------------------------
# norms of vectors and matrices in reduced coordinates


def column_norms(M: Ball, rows: model.Layout, p: NormParams, col_pairs=None) -> np.ndarray:
    """Upper bounds of the weighted row sums ``sum_r nu^|k_r| ||M[r, c]||_X``.

    ``M`` has shape ``(rows, cols, ncheb)``.  A cos/sin pair of a general
    block (rows from ``rows.pairs()``, columns from ``col_pairs``) is one
    complex mode, so a pair is bounded through the modulus, and a pair
    against a pair through the largest singular value of the 2x2 block.
    """
    mid = M.mid
    rad = M.radius()
    absM = np.abs(mid) + rad
    n = mid.shape[-1]
    w = series.cheb_weights(n)
    E = absM @ w
    ia, ib = (np.zeros(0, int), np.zeros(0, int)) if col_pairs is None else col_pairs
    if len(ia):
        Hc = np.hypot(absM[:, ia], absM[:, ib]) @ w
        E[:, ia] = Hc
        E[:, ib] = Hc
    rA, rB = rows.pairs()
    if len(rA):
        single = np.ones(mid.shape[1], dtype=bool)
        single[ia] = False
        single[ib] = False
        Hr = np.hypot(absM[rA][:, single], absM[rB][:, single]) @ w
        E[np.ix_(rA, single)] = Hr
        E[np.ix_(rB, single)] = 0.0
        if len(ia):
            pm, qm = mid[np.ix_(rA, ia)], mid[np.ix_(rA, ib)]
            rm, sm = mid[np.ix_(rB, ia)], mid[np.ix_(rB, ib)]
            pr, qr = rad[np.ix_(rA, ia)], rad[np.ix_(rA, ib)]
            rr, sr = rad[np.ix_(rB, ia)], rad[np.ix_(rB, ib)]
            s1 = np.hypot(np.abs(pm + sm) + pr + sr, np.abs(qm - rm) + qr + rr)
            s2 = np.hypot(np.abs(pm - sm) + pr + sr, np.abs(qm + rm) + qr + rr)
            sig = (0.5 * (s1 + s2)) @ w
            E[np.ix_(rA, ia)] = sig
            E[np.ix_(rA, ib)] = sig
            E[np.ix_(rB, ia)] = 0.0
            E[np.ix_(rB, ib)] = 0.0
    wr = rows.weights_hi(p)
    return up(wr @ E, n + mid.shape[0] + 16)


def _local_pairs(cols: model.Layout, idx: np.ndarray):
    """Pairs of ``cols`` restricted to the global indices ``idx`` (local numbering)."""
    ca, cb = cols.pairs()
    pos = {g: i for i, g in enumerate(idx)}
    keep = [(pos[a], pos[b]) for a, b in zip(ca, cb) if a in pos]
    if not keep:
        return np.zeros(0, int), np.zeros(0, int)
    la, lb = zip(*keep)
    return np.array(la), np.array(lb)


def op_norm_finite(M: Ball | np.ndarray, rows: model.Layout, cols: model.Layout, p: NormParams) -> Interval:
    """Induced norm of a Chebyshev-entried matrix ``(rows, cols, ncheb)``."""
    if not isinstance(M, Ball):
        M = Ball(np.asarray(M, dtype=float))
    if M.mid.ndim == 2:
        M = M[:, :, None]
    cn = column_norms(M, rows, p, cols.pairs())
    wc = cols.weights_lo(p)
    val = float(np.max(up(cn / wc, 2))) if cn.size else 0.0
    return Interval(0.0, val)


def vec_norm(v: Ball, lay: model.Layout, p: NormParams) -> Interval:
    """Norm of a coordinate vector ``(dim, ncheb)`` in the product space."""
    if v.mid.ndim == 1:
        v = v[:, None]
    cn = column_norms(v[:, None, :], lay, p)
    return Interval(0.0, float(cn[0]))


# ---------------------------------------------------------------------------
# Chebyshev matrix products


def cheb_matmul(A: np.ndarray, B: Ball) -> Ball:
    """Rigorous ``A(Omega) B(Omega)`` for Chebyshev coefficient stacks.

    ``A`` is ``(na, r, m)`` with exact float entries, ``B`` is ``(m, c, nb)``.
    Returns ``(r, c, na + nb - 1)`` using ``T_i T_l = (T_{i+l} + T_{|i-l|})/2``.
    """
    na, r, m = A.shape
    _, c, nb = B.shape
    nout = na + nb - 1
    g = gamma(m + 2 * na + 8)
    Bm = np.ascontiguousarray(np.moveaxis(B.mid, 2, 1)).reshape(m, nb * c)
    Babs = g * np.abs(Bm)
    if B.rad is not None:
        Babs += np.ascontiguousarray(np.moveaxis(B.rad, 2, 1)).reshape(m, nb * c)
    mid = np.zeros((r, nout, c))
    rad = np.zeros((r, nout, c))
    for i in range(na):
        Ai = A[i]
        P = (Ai @ Bm).reshape(r, nb, c) * 0.5
        Q = (np.abs(Ai) @ Babs).reshape(r, nb, c) * 0.5
        mid[:, i : i + nb] += P
        rad[:, i : i + nb] += Q
        L = min(i, nb - 1)
        mid[:, i - L : i + 1] += P[:, L::-1] if L > 0 else P[:, :1]
        rad[:, i - L : i + 1] += Q[:, L::-1] if L > 0 else Q[:, :1]
        if i + 1 < nb:
            mid[:, 1 : nb - i] += P[:, i + 1 :]
            rad[:, 1 : nb - i] += Q[:, i + 1 :]
    rad = up(rad, m + 2 * na + 8)
    return Ball(np.moveaxis(mid, 1, 2), np.moveaxis(rad, 1, 2))


# ---------------------------------------------------------------------------
# proof context


class ProofContext:
    """Quantities shared by the three bounds, computed once."""

    def __init__(self, b):
        self.b = b
        self.p: NormParams = b.params
        self.K = self.p.K
        self.state = b.state
        self.lay = model.unknown_layout(self.K)
        self.eq = model.equation_layout(self.K)
        self._mult = None
        self._A_norm = None
        self.timing: dict = {}

    @property
    def mult(self) -> dict:
        if self._mult is None:
            t0 = time.perf_counter()
            self._mult = model.multipliers(self.state, None)
            self.timing["multipliers"] = time.perf_counter() - t0
        return self._mult

    @property
    def A_norm(self) -> Interval:
        if self._A_norm is None:
            A = Ball(np.transpose(self.b.A, (1, 2, 0)))
            self._A_norm = op_norm_finite(A, self.lay, self.eq, self.p)
        return self._A_norm

    def nu_norm(self, phi) -> float:
        return series.nu_norm(phi, self.p).hi

    def tail_norm(self, phi) -> float:
        return series.nu_norm(series.project_and_tail(phi, self.K, "tail"), self.p).hi

    @property
    def inv_K1(self) -> Interval:
        return Interval(1.0, 1.0) / (self.K + 1)


def _ctx(b) -> ProofContext:
    return b if isinstance(b, ProofContext) else ProofContext(b)


def bound_Y(b) -> Bound:
    """Upper bound of ``||A F(x-bar)||``."""
    ctx = _ctx(b)
    t0 = time.perf_counter()
    F = model.eval_F(ctx.state, ctx.p, omega=None, check=True)
    FK = F.to_vector(ctx.eq)
    AF = cheb_matmul(ctx.b.A, FK[:, None, :])[:, 0, :]
    finite = vec_norm(AF, ctx.lay, ctx.p)
    tails = {name: ctx.tail_norm(c) for name, c in zip(("f1", "f2", "f3", "g1", "g2", "g3", "h"), F.components())}
    tail_sum = _iv(sum(tails.values()) * (1 + 1e-15))
    total = finite + tail_sum * ctx.inv_K1
    ctx.timing["Y"] = time.perf_counter() - t0
    items = {"finite": finite.hi, "tail_sum": tail_sum.hi, **{f"tail_{k}": v for k, v in tails.items()}}
    return Bound(Interval(0.0, total.hi), items)


def _tail_terms(ctx: ProofContext) -> dict:
    """Column-group bounds of DF minus its diagonal derivative part."""
    m = ctx.mult
    nn = ctx.nu_norm
    s3 = SQRT3
    om_n = series.x_norm(m["om"]).hi
    om2_n = series.x_norm(m["om2"]).hi
    w3 = nn(m["w3"])
    t_a = _iv(ctx.tail_norm(m["ha"]))
    t_u = max(((_iv(om2_n) if i < 2 else _iv(0.0)) + s3 * (_iv(w3) * 2 + _iv(nn(m["hu"][i])))).hi for i in range(3))
    t_v = max((_iv(1.0) + (_iv(om_n) * 2 if i < 2 else _iv(0.0)) + s3 * _iv(nn(m["hv"][i]))).hi for i in range(3))
    t_w = _iv(nn(m["hw"]))
    for i in range(3):
        t_w = t_w + _iv(nn(m["gw"][i])) + _iv(nn(m["gwR"][i]))
    return {"a": t_a.hi, "u": t_u, "v": t_v, "w": t_w.hi}


def _embedding(small: model.Layout, big: model.Layout) -> np.ndarray:
    """Index in ``big`` of every coordinate of ``small``."""
    key = {(int(big.block_of[i]), int(big.kind[i]), int(big.k[i])): i for i in range(big.dim)}
    return np.array([key[(int(small.block_of[i]), int(small.kind[i]), int(small.k[i]))] for i in range(small.dim)])


def _finite_defect_norm(ctx: ProofContext) -> Interval:
    """``|| Pi_K - A_fin Pi_K DF(x-bar) Pi_2K ||`` in reduced coordinates."""
    K = ctx.K
    D = model.assemble_DF(ctx.state, K, 2 * K, omega=None, mult=ctx.mult)
    cols = D.cols
    emb = _embedding(ctx.lay, cols)
    is_id = np.full(cols.dim, -1)
    is_id[emb] = np.arange(ctx.lay.dim)
    A = ctx.b.A
    na = A.shape[0]
    nb = D.M.shape[-1]
    per_col = ctx.lay.dim * (na + nb) * 8 * 4
    chunk = max(2, int(_CHUNK_BYTES // per_col))
    # chunks never split a cos/sin pair
    ca, cb = cols.pairs()
    partner = np.full(cols.dim, -1)
    partner[ca], partner[cb] = cb, ca
    order, seen = [], np.zeros(cols.dim, bool)
    for j in range(cols.dim):
        if seen[j]:
            continue
        grp = [j] if partner[j] < 0 else [j, int(partner[j])]
        seen[grp] = True
        order.append(grp)
    wc = cols.weights_lo(ctx.p)
    best = 0.0
    i = 0
    while i < len(order):
        grp, n = [], 0
        while i < len(order) and n < chunk:
            grp += order[i]
            n += len(order[i])
            i += 1
        idx = np.array(grp)
        P = cheb_matmul(A, D.M[:, idx, :])
        mid = -P.mid
        loc = np.nonzero(is_id[idx] >= 0)[0]
        mid[is_id[idx[loc]], loc, 0] += 1.0
        Dm = Ball(mid, up(P.radius() + U_REL * np.abs(mid), 2))
        cn = column_norms(Dm, ctx.lay, ctx.p, _local_pairs(cols, idx))
        best = max(best, float(np.max(up(cn / wc[idx], 2))))
    return Interval(0.0, best)


U_REL = 2.0 ** -52


def bound_Z1(b) -> Bound:
    """Upper bound of ``||I - A DF(x-bar)||``."""
    ctx = _ctx(b)
    t0 = time.perf_counter()
    m = ctx.mult
    K = ctx.K
    T = _tail_terms(ctx)
    tail = _iv(max(T.values())) * ctx.inv_K1

    fin_defect = _finite_defect_norm(ctx)
    finite = fin_defect + tail

    # columns beyond 2K only reach Pi_K rows through multiplier tails and
    # the t = 0 functionals
    nu_inv = Interval(1.0, 1.0) / int_pow(ctx.p.nu_iv, 2 * K + 1)
    tn = ctx.tail_norm
    w3t = _iv(tn(m["w3"]))
    i_u = max((SQRT3 * ((_iv(1.0 if i == 2 else 0.0) + _iv(series.x_norm(m["gu0"][i]).hi)) * nu_inv
                        + w3t * 2 + _iv(tn(m["hu"][i])))).hi for i in range(3))
    i_v = max((SQRT3 * _iv(tn(m["hv"][i]))).hi for i in range(3))
    i_w = _iv(series.x_norm(m["gw0"]).hi) * nu_inv + _iv(tn(m["hw"]))
    for i in range(3):
        i_w = i_w + _iv(tn(m["gw"][i])) + _iv(tn(m["gwR"][i]))
    inf_cols = _iv(max(i_u, i_v, i_w.hi))
    infinite = ctx.A_norm * inf_cols + tail

    val = max(finite.hi, infinite.hi)
    ctx.timing["Z1"] = time.perf_counter() - t0
    items = {
        "finite_defect": fin_defect.hi,
        "tail_over_K1": tail.hi,
        **{f"tail_{k}": v for k, v in T.items()},
        "finite": finite.hi,
        "A_norm": ctx.A_norm.hi,
        "infinite_u": i_u,
        "infinite_v": i_v,
        "infinite_w": i_w.hi,
        "infinite": infinite.hi,
    }
    return Bound(Interval(0.0, val), items)


def second_derivative_bound(a: float, u, v, w: float) -> Interval:
    """Bound of ``sup ||D^2 F||`` over the ball from hatted norms.

    Arguments are the hatted quantities (norm of the component plus r).
    """
    a, w = _iv(a), _iv(w)
    u = [_iv(x) for x in u]
    v = [_iv(x) for x in v]

    def mx(*xs):
        return _iv(max(x.hi for x in xs))

    one = _iv(1.0)
    zero = _iv(0.0)
    s3 = SQRT3
    w2, w3 = w * w, w * w * w

    c_a = mx(w2 * u[2], w * u[2] * u[2]) * 6 + mx(w3 * v[2], w3 * u[2], w2 * u[2] * v[2] * 3) * 3

    c_u, c_v = [], []
    for i in range(3):
        d3 = one if i == 2 else zero
        fa = a if i == 2 else one
        c_u.append(mx(d3 * w2 * u[i], fa * w2, fa * w * u[i] * 2) * 6
                   + s3 * w2 * 6
                   + mx(d3 * w3 * v[i], fa * w3, fa * w2 * v[i] * 3) * 3)
        c_v.append(mx(d3 * w3 * u[i], fa * w3, fa * w2 * u[i] * 3) * 3)

    c_w = mx(w * u[2] * u[2], w * u[0] * 2, w * u[1] * 2, w * a * u[2] * 2,
             u[0] * u[0] + u[1] * u[1] + a * u[2] * u[2]) * 6
    acc = zero
    for i in range(3):
        acc = acc + mx(w2, w * u[i] * 2)
    c_w = c_w + s3 * acc * 6
    c_w = c_w + mx(w2 * u[2] * v[2], w2 * v[0], w2 * v[1], w2 * a * v[2],
                   w2 * u[0], w2 * u[1], w2 * a * u[2],
                   w * (u[0] * v[0] + u[1] * v[1] + a * u[2] * v[2]) * 2) * 9
    return mx(c_a, *c_u, *c_v, c_w)


def bound_Z2(b, r: float) -> Bound:
    """Upper bound of ``sup ||A D^2F(x)||`` over the closed r-ball."""
    if not r >= 0:
        raise ValueError("r must be nonnegative")
    ctx = _ctx(b)
    x = ctx.state
    rr = _iv(r)
    a_h = (_iv(series.x_norm(x.a.ball).hi) + rr).hi
    u_h = [(_iv(ctx.nu_norm(c)) + rr).hi for c in x.u]
    v_h = [(_iv(ctx.nu_norm(c)) + rr).hi for c in x.v]
    w_h = (_iv(ctx.nu_norm(x.w)) + rr).hi
    d2 = second_derivative_bound(a_h, u_h, v_h, w_h)
    A_bound = _iv(max(ctx.A_norm.hi, ctx.inv_K1.hi))
    val = A_bound * d2
    items = {"A_bound": A_bound.hi, "D2F": d2.hi, "a_hat": a_h, "w_hat": w_h,
             **{f"u{i + 1}_hat": u_h[i] for i in range(3)}, **{f"v{i + 1}_hat": v_h[i] for i in range(3)}}
    return Bound(Interval(0.0, val.hi), items)


# ---------------------------------------------------------------------------
# certificate


@dataclass
class ProofCertificate:
    K: int
    N: int
    nu: str
    r: float
    domain: tuple
    Y: Interval
    Z1: Interval
    Z2: Interval
    kappa: Interval
    contraction_ok: bool
    injectivity_ok: bool
    endpoint_triangle_ok: bool | None = None
    endpoint_planar_ok: bool | None = None
    eight_shape_ok: bool | None = None
    shape: dict | None = None
    items: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    digests: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        flags = [self.contraction_ok, self.injectivity_ok]
        flags += [f for f in (self.endpoint_triangle_ok, self.endpoint_planar_ok, self.eight_shape_ok) if f is not None]
        return all(flags)

    def to_json(self) -> dict:
        d = asdict(self)
        for key in ("Y", "Z1", "Z2", "kappa"):
            iv = getattr(self, key)
            d[key] = [iv.lo, iv.hi]
        d["domain"] = list(self.domain)
        d["passed"] = self.passed
        return d

    @staticmethod
    def from_json(d: dict) -> "ProofCertificate":
        d = dict(d)
        d.pop("passed", None)
        for key in ("Y", "Z1", "Z2", "kappa"):
            d[key] = Interval(*d[key])
        d["domain"] = tuple(d["domain"])
        return ProofCertificate(**d)


def radii_check(Y: float, Z1: float, Z2: float, r: float) -> tuple[bool, Interval]:
    """``(contraction_ok, kappa)`` from the radii-polynomial inequalities."""
    rr = _iv(r)
    lhs = _iv(Y) + _iv(Z1) * rr + _iv(Z2) * rr * rr * 0.5
    kappa = _iv(Z1) + _iv(Z2) * rr
    ok = bool(lhs.hi <= r and kappa.hi < 1.0)
    return ok, Interval(0.0, kappa.hi)


def certify(b, r: float, shape_checks: bool = True, min_width: float = 1e-4) -> ProofCertificate:
    """Run the three bounds and, optionally, the endpoint and shape checks."""
    t0 = time.perf_counter()
    ctx = ProofContext(b)
    Y = bound_Y(ctx)
    log.info("Y  <= %.3e", Y.hi)
    Z1 = bound_Z1(ctx)
    log.info("Z1 <= %.6f", Z1.hi)
    Z2 = bound_Z2(ctx, r)
    log.info("Z2 <= %.3e", Z2.hi)
    ok, kappa = radii_check(Y.hi, Z1.hi, Z2.hi, r)
    p = ctx.p
    cert = ProofCertificate(
        K=p.K, N=p.N, nu=str(p.nu), r=float(r), domain=tuple(p.domain),
        Y=Y.value, Z1=Z1.value, Z2=Z2.value, kappa=kappa,
        contraction_ok=ok, injectivity_ok=bool(Z1.hi < 1.0),
        items={"Y": Y.items, "Z1": Z1.items, "Z2": Z2.items},
    )
    if shape_checks:
        from . import shape

        cert.endpoint_triangle_ok = shape.check_triangle_endpoint(b) if p.domain[1] == 1.0 else None
        cert.endpoint_planar_ok = shape.check_planar_endpoint(b) if p.domain[0] == 0.0 else None
        if p.domain[0] == 0.0:
            if ok and cert.endpoint_planar_ok:
                rep = shape.verify_eight(b, r, min_width=min_width, raise_on_failure=False)
                cert.eight_shape_ok = rep.ok
                cert.shape = rep.to_json()
            else:
                cert.eight_shape_ok = False
    ctx.timing["total"] = time.perf_counter() - t0
    cert.timing = dict(ctx.timing)
    return cert
