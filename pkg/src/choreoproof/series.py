"""Fourier-Chebyshev coefficient spaces.

A function ``phi(t, Omega)`` is stored as complex coefficients
``phi[k, n]`` of ``exp(i k t) T_n(s)`` where ``s`` is the affine image of
``Omega`` in ``[-1, 1]``.  The default parameter domain is ``[0, 1]`` so that
``s = 2 Omega - 1``.

The Omega norm is the l1 norm of the cosine coefficients of
``psi(cos theta)`` over all integer frequencies,

    ||psi||_X = (1 / 2 pi) sum_{n in Z} |int psi(cos th) cos(n th) d th|
              = |psi_0| + sum_{n>=1} |psi_n|,
    ||phi||_nu = sum_k nu^|k| ||phi_k||_X,

under which constants have norm one and both norms are submultiplicative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.fft

from . import rigor
from .rigor import ETA, Ball, Interval, gamma, up

CHEB_WEIGHT = 1.0  # weight of n >= 1 coefficients in the X-norm (theta form)

CLASSES = ("even-cos", "even-sin", "odd-cos", "odd-sin", "even-general", "general")


@dataclass(frozen=True)
class NormParams:
    nu: Fraction
    K: int
    N: int
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "nu", Fraction(self.nu))
        if self.nu < 1:
            raise ValueError("nu must be >= 1")
        if self.K < 1 or self.N < 1:
            raise ValueError("K and N must be >= 1")
        lo, hi = self.domain
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError("Omega domain must be a subinterval of [0, 1]")

    @property
    def nu_iv(self) -> Interval:
        return Interval.from_fraction(self.nu)

    def nu_pow_hi(self, kmax: int) -> np.ndarray:
        return np.array([p.hi for p in rigor.nu_powers(self.nu_iv, kmax)])

    def nu_pow_lo(self, kmax: int) -> np.ndarray:
        return np.array([p.lo for p in rigor.nu_powers(self.nu_iv, kmax)])


# ---------------------------------------------------------------------------
# symmetry classes


def _split(cls: str):
    if cls == "general":
        return None, "general"
    par, kind = cls.split("-")
    return par, kind


def _join(par, kind) -> str:
    if par is None:
        return "general"
    if kind == "general":
        return "even-general" if par == "even" else "general"
    return f"{par}-{kind}"


def product_class(a: str, b: str) -> str:
    pa, ka = _split(a)
    pb, kb = _split(b)
    par = None if pa is None or pb is None else ("even" if pa == pb else "odd")
    if "general" in (ka, kb):
        kind = "general"
    else:
        kind = "cos" if ka == kb else "sin"
    return _join(par, kind)


def sum_class(a: str, b: str) -> str:
    if a == b:
        return a
    pa, _ = _split(a)
    pb, _ = _split(b)
    return _join(pa if pa == pb else None, "general")


def shift_class(a: str) -> str:
    par, _ = _split(a)
    return _join(par, "general")


def diff_class(a: str) -> str:
    par, kind = _split(a)
    return _join(par, {"cos": "sin", "sin": "cos"}.get(kind, kind))


def class_modes(cls: str, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Nonnegative modes carrying a cos amplitude and a sin amplitude."""
    par, kind = _split(cls)
    ks = np.arange(0, K + 1)
    if par == "even":
        ks = ks[ks % 2 == 0]
    elif par == "odd":
        ks = ks[ks % 2 == 1]
    cos_k = ks if kind in ("cos", "general") else ks[:0]
    sin_k = ks[ks > 0] if kind in ("sin", "general") else ks[:0]
    return cos_k, sin_k


# ---------------------------------------------------------------------------
# Chebyshev series in Omega


def omega_coeffs(domain=(0.0, 1.0)) -> tuple[Ball, Ball]:
    """Chebyshev coefficients of Omega and Omega**2 on ``domain``."""
    lo, hi = domain
    c = Interval(lo, lo) * 0.5 + Interval(hi, hi) * 0.5
    d = Interval(hi, hi) * 0.5 - Interval(lo, lo) * 0.5
    om = Ball.from_intervals([c.lo, d.lo], [c.hi, d.hi])
    # (c + d s)^2 = c^2 + d^2/2 + 2cd T1 + d^2/2 T2
    dd = d * d * 0.5
    a0, a1 = c * c + dd, c * d * 2
    om2 = Ball.from_intervals([a0.lo, a1.lo, dd.lo], [a0.hi, a1.hi, dd.hi])
    return om, om2


def omega_to_s(omega, domain=(0.0, 1.0)):
    lo, hi = domain
    return (2.0 * np.asarray(omega) - (lo + hi)) / (hi - lo)


def s_interval(omega: Interval, domain=(0.0, 1.0)) -> Interval:
    lo, hi = domain
    if omega.lo < lo or omega.hi > hi:
        raise ValueError("Omega outside the parameter domain")
    s = (omega * 2.0 - (Interval(lo, lo) + hi)) / (Interval(hi, hi) - lo)
    return Interval(max(-1.0, s.lo), min(1.0, s.hi))


@dataclass(frozen=True)
class ChebSeries:
    """Coefficients ``psi_0..psi_N`` of ``sum psi_n T_n(s)``."""

    coeffs: np.ndarray
    rad: np.ndarray | None = None
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.atleast_1d(np.asarray(self.coeffs, dtype=float)))
        if self.rad is not None:
            r = np.atleast_1d(np.asarray(self.rad, dtype=float))
            object.__setattr__(self, "rad", r if np.any(r) else None)

    @staticmethod
    def from_ball(b: Ball, domain=(0.0, 1.0)) -> "ChebSeries":
        return ChebSeries(np.real(b.mid), b.rad, domain)

    @property
    def ball(self) -> Ball:
        return Ball(self.coeffs, self.rad)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, omega):
        return np.polynomial.chebyshev.chebval(omega_to_s(omega, self.domain), self.coeffs)

    def enclose(self, omega: Interval | float) -> Interval:
        s = s_interval(Interval.coerce(omega), self.domain)
        return cheb_eval_enclosure(self.ball, s).to_interval()

    def __add__(self, other: "ChebSeries") -> "ChebSeries":
        n = max(len(self.coeffs), len(other.coeffs))
        a, b = _pad1(self.ball, n), _pad1(other.ball, n)
        return ChebSeries.from_ball(a + b, self.domain)

    def __sub__(self, other: "ChebSeries") -> "ChebSeries":
        return self + ChebSeries(-other.coeffs, other.rad, other.domain)

    def __mul__(self, other: "ChebSeries") -> "ChebSeries":
        a = Ball(self.coeffs[None, :], None if self.rad is None else self.rad[None, :])
        b = Ball(other.coeffs[None, :], None if other.rad is None else other.rad[None, :])
        return ChebSeries.from_ball(fc_convolve(a, b)[0], self.domain)


def _pad1(b: Ball, n: int) -> Ball:
    m = np.zeros(n, dtype=b.mid.dtype)
    m[: b.mid.shape[0]] = b.mid
    r = None
    if b.rad is not None:
        r = np.zeros(n)
        r[: b.mid.shape[0]] = b.rad
    return Ball(m, r)


def cheb_eval_enclosure(c: Ball, s: Interval) -> Ball:
    """Enclosure of ``sum c_n T_n(s)`` over an interval ``s`` (trailing axis n).

    Uses ``T_n(s) = cos(n theta)`` with ``theta`` ranging over ``arccos(s)``
    for wide intervals and the three-term recurrence for points.
    """
    n = c.shape[-1]
    T = _cheb_T_enclosure(s, n)
    prod = c * Ball(T.mid, T.rad)
    return prod.sum(axis=-1)


def _cheb_T_enclosure(s: Interval, n: int) -> Ball:
    if s.lo == s.hi and s.lo in (-1.0, 1.0):
        sign = 1.0 if s.lo == 1.0 else -1.0
        return Ball(sign ** np.arange(n))
    if s.lo == s.hi:
        sb = Ball(np.float64(s.lo))
        T = [Ball(np.float64(1.0)), sb]
        for _ in range(2, n):
            T.append((sb * T[-1]).scale(2.0) - T[-2])
        T = T[:n]
        return Ball(np.array([t.mid for t in T]), np.array([t.radius() for t in T]))
    # interval argument: |T_n| <= 1 and T_n is a polynomial of degree n, use
    # the derivative bound |T_n'| <= n^2 around the midpoint value
    sm = Interval.point(s.mid)
    Tm = _cheb_T_enclosure(sm, n)
    h = s.rad
    rad = up(Tm.radius() + np.arange(n) ** 2 * h, 3)
    mid = Tm.mid
    lo = np.maximum(mid - rad, -1.0)
    hi = np.minimum(mid + rad, 1.0)
    return Ball.from_intervals(lo, hi)


def cheb_transform(values, N: int) -> np.ndarray:
    """Chebyshev interpolation coefficients from samples at the N+1 nodes.

    ``values`` has the node index on axis 0; extra axes are transformed
    independently.  Non-rigorous (floating point).
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] != N + 1:
        raise ValueError(f"expected {N + 1} node values, got {values.shape[0]}")
    y = scipy.fft.dct(values, type=1, axis=0) / N
    y[0] *= 0.5
    y[N] *= 0.5
    return y


def x_norm(psi: ChebSeries | Ball) -> Interval:
    b = psi.ball if isinstance(psi, ChebSeries) else psi
    hi = _xnorm_hi(b.mid, b.rad)
    lo = _xnorm_lo(b.mid, b.rad)
    return Interval(float(lo), float(hi))


def cheb_weights(n: int) -> np.ndarray:
    w = np.full(n, CHEB_WEIGHT)
    w[0] = 1.0
    return w


def _xnorm_hi(mid, rad, axis=-1):
    n = mid.shape[axis]
    a = np.abs(mid) if rad is None else np.abs(mid) + rad
    w = cheb_weights(n)
    return up(np.moveaxis(a, axis, -1) @ w, n + 4)


def _xnorm_lo(mid, rad, axis=-1):
    n = mid.shape[axis]
    a = np.abs(mid) if rad is None else np.maximum(np.abs(mid) - rad, 0.0)
    w = cheb_weights(n)
    s = np.moveaxis(a, axis, -1) @ w
    return np.maximum(s * (1.0 - gamma(n + 4)), 0.0)


# ---------------------------------------------------------------------------
# Fourier-Chebyshev arrays


@dataclass(frozen=True)
class FourierCheb:
    """Coefficients ``phi[k + K, n]`` for ``|k| <= K``, ``0 <= n <= N``."""

    coeffs: np.ndarray
    rad: np.ndarray | None = None
    sym: str = "general"
    real: bool = True
    domain: tuple[float, float] = field(default=(0.0, 1.0))

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] % 2 != 1:
            raise ValueError("Fourier axis must have odd length 2K+1")
        object.__setattr__(self, "coeffs", c)
        if self.rad is not None:
            r = np.asarray(self.rad, dtype=float).reshape(c.shape)
            object.__setattr__(self, "rad", r if np.any(r) else None)
        if self.sym not in CLASSES:
            raise ValueError(f"unknown symmetry class {self.sym!r}")

    @property
    def K(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def N(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def ball(self) -> Ball:
        return Ball(self.coeffs, self.rad)

    def with_ball(self, b: Ball, sym: str | None = None) -> "FourierCheb":
        return FourierCheb(b.mid, b.rad, sym or self.sym, self.real, self.domain)

    def mode(self, k: int) -> Ball:
        if abs(k) > self.K:
            return Ball(np.zeros(self.N + 1, dtype=complex))
        return self.ball[k + self.K]

    def padded(self, K: int, N: int | None = None) -> "FourierCheb":
        N = self.N if N is None else N
        return self.with_ball(pad(self.ball, K, N))

    def __add__(self, other: "FourierCheb") -> "FourierCheb":
        K, N = max(self.K, other.K), max(self.N, other.N)
        b = pad(self.ball, K, N) + pad(other.ball, K, N)
        return FourierCheb(b.mid, b.rad, sum_class(self.sym, other.sym), self.real and other.real, self.domain)

    def __neg__(self):
        return FourierCheb(-self.coeffs, self.rad, self.sym, self.real, self.domain)

    def __sub__(self, other: "FourierCheb") -> "FourierCheb":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, FourierCheb):
            return product(self, other)
        if isinstance(other, ChebSeries):
            return cheb_multiply(self, other)
        return self.with_ball(self.ball.scale(other))

    __rmul__ = __mul__

    def evaluate(self, t, omega):
        """Floating point evaluation on a grid of t values at one Omega."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s = omega_to_s(omega, self.domain)
        ck = np.polynomial.chebyshev.chebval(s, self.coeffs.T)  # (2K+1,)
        ks = np.arange(-self.K, self.K + 1)
        vals = np.exp(1j * np.outer(t, ks)) @ ck
        return vals.real if self.real else vals


def zeros(K: int, N: int, sym: str = "general", domain=(0.0, 1.0)) -> FourierCheb:
    return FourierCheb(np.zeros((2 * K + 1, N + 1), dtype=complex), None, sym, True, domain)


def pad(b: Ball, K: int, N: int) -> Ball:
    """Embed a ``(2K0+1, N0+1)`` ball array in a ``(2K+1, N+1)`` one."""
    K0 = (b.shape[0] - 1) // 2
    N0 = b.shape[1] - 1
    if K0 > K or N0 > N:
        raise ValueError("pad cannot shrink; use project")
    m = np.zeros((2 * K + 1, N + 1), dtype=complex)
    m[K - K0 : K + K0 + 1, : N0 + 1] = b.mid
    r = None
    if b.rad is not None:
        r = np.zeros(m.shape)
        r[K - K0 : K + K0 + 1, : N0 + 1] = b.rad
    return Ball(m, r)


def from_real_modes(cos_amp: dict, sin_amp: dict, K: int, N: int, sym: str, domain=(0.0, 1.0)) -> FourierCheb:
    """Build from ``{k: cheb coeffs}`` of ``a_k cos kt`` and ``b_k sin kt``."""
    c = np.zeros((2 * K + 1, N + 1), dtype=complex)
    for k, a in cos_amp.items():
        a = np.asarray(a, dtype=float)
        if k == 0:
            c[K, : len(a)] += a
        else:
            c[K + k, : len(a)] += a / 2
            c[K - k, : len(a)] += a / 2
    for k, b in sin_amp.items():
        b = np.asarray(b, dtype=float)
        c[K + k, : len(b)] += -0.5j * b
        c[K - k, : len(b)] += 0.5j * b
    return FourierCheb(c, None, sym, True, domain)


def fc_convolve(A: Ball, B: Ball) -> Ball:
    """Rigorous Fourier-Chebyshev product of coefficient arrays.

    Full linear convolution in k and the Chebyshev rule
    ``T_m T_n = (T_{m+n} + T_{|m-n|}) / 2`` in n.  Every summand of an
    output entry passes through at most ``depth`` roundings (a dot product
    of length ``min(ka, kb)`` in :func:`_cheb_conv`, then at most
    ``3 min(na, nb)`` accumulations), so the error is at most
    ``gamma_depth`` times the same product of absolute values.
    """
    (ka, na), (kb, nb) = A.mid.shape, B.mid.shape
    depth = min(ka, kb) + 3 * min(na, nb) + 4
    cplx = np.iscomplexobj(A.mid) or np.iscomplexobj(B.mid)
    g = gamma(2 * depth if cplx else depth)
    mid = _cheb_conv(A.mid, B.mid)
    aA, aB = np.abs(A.mid), np.abs(B.mid)
    R = _cheb_conv(aA, g * aB if B.rad is None else B.rad + g * aB)
    if A.rad is not None:
        R = R + _cheb_conv(A.rad, aB + B.radius())
    # underflowed products lose up to ETA each
    n_terms = 3 * min(ka, kb) * min(na, nb)
    return Ball(mid, up(R, 2 * depth + 8) + n_terms * ETA)


def _cheb_conv(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Linear convolution in k with the Chebyshev product rule in n.

    Implemented as one Toeplitz matrix product per Chebyshev index of the
    operand with more Fourier modes, so the work runs through BLAS.
    """
    if A.shape[0] < B.shape[0]:
        A, B = B, A
    ka, na = A.shape
    kb, nb = B.shape
    dt = np.result_type(A, B)
    ii = np.arange(ka + kb - 1)[:, None] - np.arange(kb)[None, :]
    valid = (ii >= 0) & (ii < ka)
    ii = np.clip(ii, 0, ka - 1)
    out = np.zeros((ka + kb - 1, na + nb - 1), dtype=dt)
    for m in range(na):
        Tm = np.where(valid, A[ii, m], 0)
        P = Tm @ B
        out[:, m : m + nb] += P
        L = min(m, nb - 1)
        out[:, m - L : m + 1] += P[:, L::-1]
        if m + 1 < nb:
            out[:, 1 : nb - m] += P[:, m + 1 :]
    return 0.5 * out


def product(phi: FourierCheb, chi: FourierCheb) -> FourierCheb:
    b = fc_convolve(phi.ball, chi.ball)
    return FourierCheb(b.mid, b.rad, product_class(phi.sym, chi.sym), phi.real and chi.real, phi.domain)


def cheb_multiply(phi: FourierCheb, psi: ChebSeries | Ball) -> FourierCheb:
    """Multiply every Fourier mode by a function of Omega only."""
    pb = psi.ball if isinstance(psi, ChebSeries) else psi
    pb = Ball(pb.mid[None, :], None if pb.rad is None else pb.rad[None, :])
    b = fc_convolve(phi.ball, pb)
    return phi.with_ball(b)


def _phase_balls(ks: np.ndarray, j: int) -> Ball:
    """Enclosures of ``exp(i k 4 pi j / 3)`` for an array of k."""
    r = (ks * j) % 3
    h = rigor.HALF_SQRT3
    hm, hr = h.mid, h.rad
    im = np.where(r == 1, -hm, np.where(r == 2, hm, 0.0))
    mid = np.where(r == 0, 1.0, -0.5) + 1j * im
    rad = np.where(r == 0, 0.0, hr)
    return Ball(mid, rad)


def shift(phi: FourierCheb, j: int) -> FourierCheb:
    """``phi(t + 4 pi j / 3)``."""
    if j not in (1, 2):
        raise ValueError("shift index must be 1 or 2")
    ks = np.arange(-phi.K, phi.K + 1)
    ph = _phase_balls(ks, j)
    b = phi.ball * Ball(ph.mid[:, None], ph.rad[:, None])
    exact = (ks * j) % 3 == 0
    mid = np.where(exact[:, None], phi.coeffs, b.mid)
    rad = b.radius().copy()
    rad[exact] = phi.rad[exact] if phi.rad is not None else 0.0
    # an exact zero coefficient stays exactly zero
    zero = phi.coeffs == 0
    if phi.rad is not None:
        zero &= phi.rad == 0
    rad[zero] = 0.0
    return FourierCheb(mid, rad, shift_class(phi.sym), phi.real, phi.domain)


def reflect(phi: FourierCheb) -> FourierCheb:
    """``phi(-t)``."""
    rad = None if phi.rad is None else phi.rad[::-1].copy()
    return FourierCheb(phi.coeffs[::-1].copy(), rad, phi.sym, phi.real, phi.domain)


def shift_defect_norm(K: int, j: int = 1) -> Interval:
    """Two-sided enclosure of the norm of ``I - S^j`` on modes ``|k| <= K``.

    The operator is diagonal with entries ``1 - exp(i 4 pi j k / 3)``, and a
    diagonal operator on a weighted l1 space has norm ``sup |entry|``.
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    best = Interval(0.0, 0.0)
    for k in range(min(K, 2) + 1):  # the entries are 3-periodic in k
        c, s = rigor.exp_phase(j * k)
        sq = rigor.int_pow(Interval(1.0, 1.0) - c, 2) + rigor.int_pow(s, 2)
        m = rigor.sqrt(sq.intersect(Interval(0.0, np.inf)))  # a sum of squares
        best = Interval(max(best.lo, m.lo), max(best.hi, m.hi))
    return best


def reflect_norm(K: int) -> Interval:
    """Norm of ``R``: it permutes ``k <-> -k``, which carry equal weights."""
    return Interval(1.0, 1.0) if K >= 0 else Interval(0.0, 0.0)


def diff_t(phi: FourierCheb) -> FourierCheb:
    ks = np.arange(-phi.K, phi.K + 1)
    mid = phi.coeffs * (1j * ks)[:, None]
    rad = None
    if phi.rad is not None:
        rad = up(phi.rad * np.abs(ks)[:, None], 1)
    return FourierCheb(mid, rad, diff_class(phi.sym), phi.real, phi.domain)


def project_and_tail(phi: FourierCheb, p: NormParams | int, which: str) -> FourierCheb:
    """Truncation ``"K"`` (|k| <= K), ``"NK"`` (also n <= N) or tail ``"tail"``."""
    K = p if isinstance(p, int) else p.K
    ks = np.abs(np.arange(-phi.K, phi.K + 1))
    keep = np.ones(phi.coeffs.shape, dtype=bool)
    if which in ("K", "NK"):
        keep &= (ks <= K)[:, None]
        if which == "NK":
            keep &= (np.arange(phi.N + 1) <= p.N)[None, :]
    elif which == "tail":
        keep &= (ks > K)[:, None]
    else:
        raise ValueError(f"unknown projection {which!r}")
    rad = None if phi.rad is None else np.where(keep, phi.rad, 0.0)
    return FourierCheb(np.where(keep, phi.coeffs, 0.0), rad, phi.sym, phi.real, phi.domain)


def mode_xnorms_hi(b: Ball) -> np.ndarray:
    """Upper bounds of the X-norm of every Fourier mode (axis 0)."""
    return _xnorm_hi(b.mid, b.rad)


def nu_norm(phi: FourierCheb | Ball, p: NormParams) -> Interval:
    b = phi.ball if isinstance(phi, FourierCheb) else phi
    K = (b.shape[0] - 1) // 2
    ka = np.abs(np.arange(-K, K + 1))
    hi = _xnorm_hi(b.mid, b.rad) @ p.nu_pow_hi(K)[ka]
    lo = _xnorm_lo(b.mid, b.rad) @ p.nu_pow_lo(K)[ka]
    n = 2 * K + 1
    return Interval(float(max(lo * (1 - gamma(n + 2)), 0.0)), float(up(hi, n + 2)))


def off_class_residual(phi: FourierCheb) -> Ball:
    """Components that must vanish for a real function of class ``phi.sym``."""
    par, kind = _split(phi.sym)
    b = phi.ball
    K = phi.K
    ks = np.arange(-K, K + 1)
    parts = []
    if par is not None:
        bad = (ks % 2 == 1) if par == "even" else (ks % 2 == 0)
        parts.append(b[bad])
    if phi.real:
        # reality: phi_{-k} = conj(phi_k)
        parts.append(b - b[::-1].conj())
    if kind == "cos":
        parts.append(b - b[::-1])
    elif kind == "sin":
        parts.append(b + b[::-1])
    if not parts:
        return Ball(np.zeros(0))
    mids = np.concatenate([p.mid.ravel() for p in parts])
    rads = np.concatenate([p.radius().ravel() for p in parts])
    return Ball(mids, rads)


def eval_enclosure(phi: FourierCheb, t: Interval, omega: Interval, tail_budget: float, p: NormParams | None = None) -> Interval:
    """Enclosure of the real function over ``t x omega`` plus a tail budget."""
    omega = Interval.coerce(omega)
    lo, hi = phi.domain
    if omega.lo < lo or omega.hi > hi:
        raise ValueError("Omega outside the parameter domain")
    s = s_interval(omega, phi.domain)
    ck = cheb_eval_enclosure(phi.ball, s)  # one complex ball per k
    K = phi.K
    cs = [rigor.cos(t * k) for k in range(-K, K + 1)]
    sn = [rigor.sin(t * k) for k in range(-K, K + 1)]
    cb = Ball.from_intervals([c.lo for c in cs], [c.hi for c in cs])
    sb = Ball.from_intervals([c.lo for c in sn], [c.hi for c in sn])
    # real part of ck * (cos + i sin)
    re = Ball(ck.mid.real, ck.rad) * cb - Ball(ck.mid.imag, ck.rad) * sb
    val = re.sum().to_interval()
    if tail_budget:
        nu = Interval.from_fraction(p.nu) if p is not None else None
        if nu is None:
            raise ValueError("tail budget requires NormParams")
        factor = Interval(1.0, 1.0) / rigor.int_pow(nu, K + 1)
        val = val.widen((Interval(tail_budget, tail_budget) * factor).hi)
    return val


def _eulerian(m: int) -> list[int]:
    """Coefficients of the Eulerian polynomial A_m."""
    A = [1]
    for n in range(1, m + 1):
        B = [0] * n
        for j in range(n):
            left = A[j] if j < len(A) else 0
            right = A[j - 1] if 1 <= j <= len(A) else 0
            B[j] = (j + 1) * left + (n - j) * right
        A = B
    return A


def tail_derivative_bound(norm_cap: float, p: NormParams, m: int) -> float:
    """Upper bound of ``norm_cap * sum_{k in Z} |k|^m nu^-|k|``.

    Closed form ``sum_{k>=1} k^m x^k = x A_m(x) / (1 - x)^(m+1)`` with the
    Eulerian polynomial A_m and ``x = 1/nu``.
    """
    if p.nu <= 1:
        raise ValueError("nu must exceed 1 for a convergent bound")
    if norm_cap == 0:
        return 0.0
    x = Interval(1.0, 1.0) / p.nu_iv
    A = Interval(0.0, 0.0)
    xp = Interval(1.0, 1.0)
    for c in _eulerian(m):
        A = A + xp * c
        xp = xp * x
    one_sided = x * A / rigor.int_pow(Interval(1.0, 1.0) - x, m + 1)
    total = one_sided * 2 + (1 if m == 0 else 0)
    return (total * Interval.coerce(norm_cap)).hi


def derivative_gain(p: NormParams, m: int) -> float:
    """Upper bound of ``max_k |k|^m nu^-|k|``.

    A function with ``||phi||_nu <= r`` has ``sup |d^m phi / dt^m|`` at most
    ``r`` times this number.
    """
    if p.nu <= 1:
        raise ValueError("nu must exceed 1")
    if m == 0:
        return 1.0
    nu = p.nu_iv
    best = 0.0
    kstar = int(np.ceil(m / np.log(float(p.nu)))) + 2
    pw = Interval(1.0, 1.0)
    for k in range(1, kstar + 1):
        pw = pw * nu
        best = max(best, (rigor.int_pow(Interval(k, k), m) / pw).hi)
    # the sequence k^m nu^-k decreases for k >= m / ln nu
    return best
