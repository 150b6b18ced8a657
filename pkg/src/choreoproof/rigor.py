"""Outward-rounded interval arithmetic.

Two layers live here.  :class:`Interval` is a scalar closed interval whose
endpoints are pushed one ulp outward after every round-to-nearest
operation, so the exact real result is always enclosed.  :class:`Ball` is a
vectorised midpoint-radius type over numpy arrays (real or complex
midpoints, real radii) used for the bulk coefficient arithmetic.  Radii
are always computed with an explicit a-priori bound on the floating point
error of the midpoint computation, and are then inflated upward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

U = 2.0 ** -53  # unit roundoff
ETA = 2.0 ** -1074  # smallest subnormal
INF = math.inf


def _dn(x: float) -> float:
    return math.nextafter(x, -INF)


def _upf(x: float) -> float:
    return math.nextafter(x, INF)


# Error-free transformations: with round to nearest, ``s + e`` equals the
# exact result, so an endpoint only moves when the error has the wrong sign.

_SPLIT = 134217729.0  # 2^27 + 1
_TINY = 2.0 ** -960  # below this the product error term may underflow
_HUGE = 2.0 ** 995  # above this the splitting may overflow


def _two_sum(a: float, b: float):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a: float):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: float, b: float):
    p = a * b
    if p == 0.0 or not math.isfinite(p) or abs(p) < _TINY or max(abs(a), abs(b)) > _HUGE:
        exact = p == 0.0 and (a == 0.0 or b == 0.0)
        return p, (0.0 if exact else math.nan)
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _round_pair(s: float, e: float):
    """Tight enclosure of ``s + e`` (``e`` nan when the error is unknown)."""
    if not math.isfinite(s):
        return _dn(s), _upf(s)
    if e != e:  # nan
        return _dn(s), _upf(s)
    return (s if e >= 0 else _dn(s)), (s if e <= 0 else _upf(s))


def add_dn(a: float, b: float) -> float:
    return _round_pair(*_two_sum(a, b))[0]


def add_up(a: float, b: float) -> float:
    return _round_pair(*_two_sum(a, b))[1]


def mul_dn(a: float, b: float) -> float:
    return _round_pair(*_two_prod(a, b))[0]


def mul_up(a: float, b: float) -> float:
    return _round_pair(*_two_prod(a, b))[1]


def gamma(n: int) -> float:
    """Upper bound for the classical ``n u / (1 - n u)`` constant."""
    if n * U >= 0.5:
        raise ValueError("gamma(n) undefined for n*u >= 1/2")
    return _upf(_upf(n * U) / _dn(1.0 - (n + 1) * U)) * (1.0 + 4 * U)


def up(x, n: int = 1):
    """Inflate a nonnegative float result of ``n`` rounded operations.

    Returns an array (or float) that is guaranteed to be at least the exact
    value of the expression whose computed value is ``x``.
    """
    g = gamma(n + 2)
    return np.nextafter(np.asarray(x, dtype=float) * (1.0 + g) + (n + 1) * ETA, INF)


class IntervalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` of reals with float endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise IntervalError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    # constructors
    @staticmethod
    def point(x: float) -> "Interval":
        return Interval(x, x)

    @staticmethod
    def from_fraction(q) -> "Interval":
        """Outward enclosure of a rational number (exact if representable)."""
        q = Fraction(q)
        f = float(q)
        if Fraction(f) == q:
            return Interval(f, f)
        if Fraction(f) < q:
            return Interval(f, _upf(f))
        return Interval(_dn(f), f)

    @staticmethod
    def coerce(x) -> "Interval":
        if isinstance(x, Interval):
            return x
        if isinstance(x, (Fraction, int)):
            return Interval.from_fraction(x)
        return Interval(float(x), float(x))

    # basic queries
    @property
    def mid(self) -> float:
        m = 0.5 * (self.lo + self.hi)
        return m if math.isfinite(m) else self.lo / 2 + self.hi / 2

    @property
    def rad(self) -> float:
        m = self.mid
        return _upf(max(m - self.lo, self.hi - m))

    @property
    def width(self) -> float:
        return _upf(self.hi - self.lo)

    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, Fraction):
            return Fraction(self.lo) <= x <= Fraction(self.hi)
        return self.lo <= x <= self.hi

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def hull(self, other) -> "Interval":
        other = Interval.coerce(other)
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other) -> "Interval":
        other = Interval.coerce(other)
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise IntervalError("empty intersection")
        return Interval(lo, hi)

    def is_positive(self) -> bool:
        return self.lo > 0.0

    def is_negative(self) -> bool:
        return self.hi < 0.0

    def widen(self, eps: float) -> "Interval":
        return Interval(_dn(self.lo - eps), _upf(self.hi + eps))

    # arithmetic
    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __add__(self, other):
        other = Interval.coerce(other)
        return Interval(add_dn(self.lo, other.lo), add_up(self.hi, other.hi))

    __radd__ = __add__

    def __sub__(self, other):
        other = Interval.coerce(other)
        return Interval(add_dn(self.lo, -other.hi), add_up(self.hi, -other.lo))

    def __rsub__(self, other):
        return Interval.coerce(other) - self

    def __mul__(self, other):
        other = Interval.coerce(other)
        pairs = [(self.lo, other.lo), (self.lo, other.hi), (self.hi, other.lo), (self.hi, other.hi)]
        if any(math.isinf(x) for x in (self.lo, self.hi, other.lo, other.hi)):
            p = [x * y for x, y in pairs]
            p = [0.0 if math.isnan(x) else x for x in p]  # 0 * inf
            return Interval(_dn(min(p)), _upf(max(p)))
        return Interval(min(mul_dn(x, y) for x, y in pairs), max(mul_up(x, y) for x, y in pairs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Interval.coerce(other)
        if other.lo <= 0.0 <= other.hi:
            raise IntervalError("division by an interval containing zero")
        q = [self.lo / other.lo, self.lo / other.hi, self.hi / other.lo, self.hi / other.hi]
        return Interval(_dn(min(q)), _upf(max(q)))

    def __rtruediv__(self, other):
        return Interval.coerce(other) / self

    def __pow__(self, p: int):
        return int_pow(self, p)

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    def to_json(self):
        return [repr(self.lo), repr(self.hi)]


def interval_arith(a: Interval, b: Interval, op: str) -> Interval:
    """Apply ``op`` in {"add", "sub", "mul", "div"} with outward rounding."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def sqrt(x: Interval) -> Interval:
    if x.lo < 0.0:
        raise IntervalError("sqrt of an interval with negative lower bound")
    # math.sqrt is correctly rounded, one ulp outward is enough
    return Interval(max(0.0, _dn(math.sqrt(x.lo))), _upf(math.sqrt(x.hi)))


def int_pow(x: Interval, p: int) -> Interval:
    if p < 0:
        return Interval(1.0, 1.0) / int_pow(x, -p)
    if p == 0:
        return Interval(1.0, 1.0)
    p_even = p % 2 == 0
    base = abs(x) if p_even else x
    result = Interval(1.0, 1.0)
    while p:
        if p & 1:
            result = result * base
        p >>= 1
        if p:
            base = base * base
    # even powers and powers of nonnegative intervals are nonnegative
    if result.lo < 0 and (p_even or x.lo >= 0):
        result = Interval(0.0, result.hi)
    return result


def _cbrt_point(x: float) -> Interval:
    """Enclosure of the real cube root of ``x``, verified in exact rationals."""
    if x == 0.0:
        return Interval(0.0, 0.0)
    if x < 0:
        return -_cbrt_point(-x)
    y = x ** (1.0 / 3.0)
    lo, hi = _dn(y), _upf(y)
    fx = Fraction(x)
    # cubing is monotone, so lo^3 <= x <= hi^3 proves the enclosure
    while Fraction(lo) ** 3 > fx:
        lo = _dn(lo)
    while Fraction(hi) ** 3 < fx:
        hi = _upf(hi)
    return Interval(lo, hi)


def cbrt(x: Interval) -> Interval:
    return Interval(_cbrt_point(x.lo).lo, _cbrt_point(x.hi).hi)


PI = Interval(3.141592653589793, _upf(3.141592653589793))
SQRT3 = sqrt(Interval(3.0, 3.0))
HALF_SQRT3 = SQRT3 * 0.5

# libm cos/sin are faithful to well under this absolute error on the
# arguments used here (|x| <= 1e4); checked against mpmath in the tests.
TRIG_EPS = 1e-15


def _touches(x: Interval, offset_halfturns: int) -> bool:
    """Whether some m*pi with m = offset mod 2 may lie inside ``x``."""
    lo_m = math.floor(x.lo / PI.hi) - 1
    hi_m = math.ceil(x.hi / PI.lo) + 1
    for m in range(lo_m, hi_m + 1):
        if (m - offset_halfturns) % 2:
            continue
        mp = PI * m
        if mp.hi >= x.lo and mp.lo <= x.hi:
            return True
    return False


def cos(x: Interval) -> Interval:
    if x.width > 6.0:
        return Interval(-1.0, 1.0)
    a, b = math.cos(x.lo), math.cos(x.hi)
    lo, hi = min(a, b) - TRIG_EPS, max(a, b) + TRIG_EPS
    if _touches(x, 0):
        hi = 1.0
    if _touches(x, 1):
        lo = -1.0
    return Interval(max(-1.0, _dn(lo)), min(1.0, _upf(hi)))


def sin(x: Interval) -> Interval:
    return cos(x - PI * 0.5)


def exp_phase(k: int) -> tuple[Interval, Interval]:
    """Enclosure of ``(cos(4 pi k / 3), sin(4 pi k / 3))``."""
    r = k % 3
    if r == 0:
        return Interval(1.0, 1.0), Interval(0.0, 0.0)
    c = Interval(-0.5, -0.5)
    return (c, -HALF_SQRT3) if r == 1 else (c, HALF_SQRT3)


def enclose_elementary(x: Interval, f: str, p: int | None = None, k: int | None = None):
    """Dispatch for the elementary enclosures used by the proof."""
    if f == "sqrt":
        return sqrt(x)
    if f == "int_pow":
        return int_pow(x, p)
    if f == "cbrt":
        return cbrt(x)
    if f == "cos":
        return cos(x)
    if f == "sin":
        return sin(x)
    if f == "exp_phase":
        return exp_phase(k)
    raise ValueError(f"unknown function {f!r}")


def nu_powers(nu: Interval, kmax: int) -> list[Interval]:
    """``nu**k`` for k = 0..kmax by repeated multiplication."""
    out = [Interval(1.0, 1.0)]
    for _ in range(kmax):
        out.append(out[-1] * nu)
    return out


# ---------------------------------------------------------------------------
# vectorised midpoint-radius balls


class Ball:
    """Array of closed discs/intervals ``{z : |z - mid| <= rad}``.

    ``rad`` may be ``None`` for exact floating point data.
    """

    __slots__ = ("mid", "rad")

    def __init__(self, mid, rad=None):
        self.mid = np.asarray(mid)
        if rad is not None:
            rad = np.broadcast_to(np.asarray(rad, dtype=float), self.mid.shape)
            if not np.any(rad):
                rad = None
        self.rad = rad

    @property
    def shape(self):
        return self.mid.shape

    @property
    def is_exact(self) -> bool:
        return self.rad is None

    def radius(self):
        return np.zeros(self.mid.shape) if self.rad is None else self.rad

    def __getitem__(self, idx):
        return Ball(self.mid[idx], None if self.rad is None else self.rad[idx])

    def copy(self):
        return Ball(self.mid.copy(), None if self.rad is None else self.rad.copy())

    @staticmethod
    def from_interval(iv: Interval) -> "Ball":
        m = iv.mid
        return Ball(np.float64(m), np.float64(_upf(max(m - iv.lo, iv.hi - m))))

    @staticmethod
    def from_intervals(lo, hi) -> "Ball":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        m = 0.5 * lo + 0.5 * hi
        r = np.nextafter(np.maximum(m - lo, hi - m), INF)
        return Ball(m, r)

    def lo_hi(self):
        """Real interval endpoints (real midpoints only)."""
        r = self.radius()
        return np.nextafter(self.mid - r, -INF), np.nextafter(self.mid + r, INF)

    def to_interval(self) -> Interval:
        lo, hi = self.lo_hi()
        return Interval(float(lo), float(hi))

    def abs_hi(self):
        """Upper bound of ``|z|`` over each ball."""
        return up(np.abs(self.mid) + self.radius(), 3)

    def contains_zero(self):
        return np.abs(self.mid) <= self.radius()

    def real(self):
        return Ball(self.mid.real.copy(), self.rad)

    def conj(self):
        return Ball(np.conj(self.mid), self.rad)

    def __neg__(self):
        return Ball(-self.mid, self.rad)

    def __add__(self, other):
        if not isinstance(other, Ball):
            other = Ball(other)
        m = self.mid + other.mid
        r = U * np.abs(m)
        if self.rad is not None:
            r = r + self.rad
        if other.rad is not None:
            r = r + other.rad
        return Ball(m, up(r, 3))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Ball):
            other = Ball(other)
        return self + (-other)

    def __rsub__(self, other):
        return Ball(other) - self

    def __mul__(self, other):
        if not isinstance(other, Ball):
            other = Ball(other)
        am, bm = self.mid, other.mid
        m = am * bm
        aa, ab = np.abs(am), np.abs(bm)
        r = 4 * U * aa * ab + ETA
        if other.rad is not None:
            r = r + aa * other.rad
        if self.rad is not None:
            r = r + self.rad * (ab + other.radius())
        return Ball(m, up(r, 8))

    __rmul__ = __mul__

    def scale(self, c: float) -> "Ball":
        """Multiply by an exact floating point scalar (real or complex)."""
        m = self.mid * c
        r = 2 * U * np.abs(m) + ETA
        if self.rad is not None:
            r = r + abs(c) * self.rad
        return Ball(m, up(r, 4))

    def sum(self, axis=None):
        n = self.mid.size if axis is None else self.mid.shape[axis]
        m = self.mid.sum(axis=axis)
        r = gamma(n + 1) * np.abs(self.mid).sum(axis=axis)
        if self.rad is not None:
            r = r + self.rad.sum(axis=axis)
        return Ball(m, up(r, n + 3))


def ball_matmul(A: Ball, B: Ball) -> Ball:
    """Rigorous product of (real or complex) ball matrices ``A @ B``.

    Uses ``|fl(AB) - AB| <= gamma_n |A||B|`` (valid for any summation order
    and with fused multiply-adds), doubled for complex arithmetic.
    """
    n = A.mid.shape[-1]
    cplx = np.iscomplexobj(A.mid) or np.iscomplexobj(B.mid)
    g = gamma(2 * n + 4) if cplx else gamma(n + 2)
    m = A.mid @ B.mid
    aA, aB = np.abs(A.mid), np.abs(B.mid)
    R = aA @ (g * aB if B.rad is None else B.rad + g * aB)
    if A.rad is not None:
        R = R + A.rad @ (aB + B.radius())
    return Ball(m, up(R + n * ETA, 2 * n + 8))
