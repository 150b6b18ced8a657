"""The zero-finding map of the symmetric three-body problem and its derivative.

Unknowns ``x = (a, beta, alpha, u, v, w)``.  With ``d = u - S u``,
``d' = u - S^2 u`` and ``e = v - S v`` the map is

    eta   = (u3(0) - 1, mean(u1))
    gamma = [w^2 <d, L_a d>](0) - 1
    g     = v' + beta e1 - Omega^2 I u + 2 Omega J v + w^3 d + (R w^3) d'
    f     = u' - v
    h     = w' + alpha + w^3 <d, L_a e>

Rows of the finite linear algebra are ordered ``(eta1, eta2, gamma, f, g,
h)`` so that they pair with the unknown slots ``(a, beta, alpha, u, v, w)``:
``f`` differentiates ``u`` and ``g`` differentiates ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import series
from .rigor import Ball, U, up
from .series import ChebSeries, FourierCheb, NormParams

U_CLASSES = ("even-cos", "even-sin", "odd-cos")
V_CLASSES = ("even-sin", "even-cos", "odd-sin")
W_CLASS = "even-general"

UNKNOWN_BLOCKS = (
    ("a", None), ("beta", None), ("alpha", None),
    ("u1", U_CLASSES[0]), ("u2", U_CLASSES[1]), ("u3", U_CLASSES[2]),
    ("v1", V_CLASSES[0]), ("v2", V_CLASSES[1]), ("v3", V_CLASSES[2]),
    ("w", W_CLASS),
)
EQUATION_BLOCKS = (
    ("eta1", None), ("eta2", None), ("gamma", None),
    ("f1", V_CLASSES[0]), ("f2", V_CLASSES[1]), ("f3", V_CLASSES[2]),
    ("g1", U_CLASSES[0]), ("g2", U_CLASSES[1]), ("g3", U_CLASSES[2]),
    ("h", W_CLASS),
)


class ClassViolation(RuntimeError):
    """Off-class residual does not contain zero (an implementation bug)."""


@dataclass(frozen=True)
class ConstantMatrices:
    I_bar: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1.0, 0.0]))
    J_bar: np.ndarray = field(default_factory=lambda: np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    R_y: np.ndarray = field(default_factory=lambda: np.diag([1.0, -1.0, 1.0]))
    R_z: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1.0, -1.0]))
    e1: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    @staticmethod
    def L(a: float) -> np.ndarray:
        return np.diag([1.0, 1.0, a])


# ---------------------------------------------------------------------------
# reduced real basis


@dataclass(frozen=True)
class Block:
    name: str
    cls: str | None
    start: int
    cos_k: np.ndarray
    sin_k: np.ndarray

    @property
    def size(self) -> int:
        return 1 if self.cls is None else len(self.cos_k) + len(self.sin_k)

    @property
    def stop(self) -> int:
        return self.start + self.size

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop)

    @property
    def kinds(self) -> np.ndarray:
        """0 scalar, 1 cos amplitude, 2 sin amplitude."""
        if self.cls is None:
            return np.zeros(1, dtype=int)
        return np.concatenate([np.ones(len(self.cos_k), int), np.full(len(self.sin_k), 2)])

    @property
    def ks(self) -> np.ndarray:
        if self.cls is None:
            return np.zeros(1, dtype=int)
        return np.concatenate([self.cos_k, self.sin_k]).astype(int)


class Layout:
    """Coordinates of a truncated space in the symmetric real basis."""

    def __init__(self, blocks_spec, K: int):
        self.K = K
        blocks, start = [], 0
        for name, cls in blocks_spec:
            if cls is None:
                b = Block(name, None, start, np.zeros(0, int), np.zeros(0, int))
            else:
                ck, sk = series.class_modes(cls, K)
                b = Block(name, cls, start, ck, sk)
            blocks.append(b)
            start = b.stop
        self.blocks = tuple(blocks)
        self.by_name = {b.name: b for b in blocks}
        self.dim = start
        self.kind = np.concatenate([b.kinds for b in blocks])
        self.k = np.concatenate([b.ks for b in blocks])
        self.block_of = np.concatenate([np.full(b.size, i) for i, b in enumerate(blocks)])

    def __getitem__(self, name: str) -> Block:
        return self.by_name[name]

    def weights_hi(self, p: NormParams) -> np.ndarray:
        w = p.nu_pow_hi(self.K)[self.k]
        w[self.kind == 0] = 1.0
        return w

    def weights_lo(self, p: NormParams) -> np.ndarray:
        w = p.nu_pow_lo(self.K)[self.k]
        w[self.kind == 0] = 1.0
        return w

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Index pairs (cos, sin) sharing a mode k >= 1 in general blocks."""
        ci, si = [], []
        for b in self.blocks:
            if b.cls is None or not b.cls.endswith("general"):
                continue
            pos = {k: b.start + i for i, k in enumerate(b.cos_k)}
            for j, k in enumerate(b.sin_k):
                ci.append(pos[k])
                si.append(b.start + len(b.cos_k) + j)
        return np.array(ci, int), np.array(si, int)


def unknown_layout(K: int) -> Layout:
    return Layout(UNKNOWN_BLOCKS, K)


def equation_layout(K: int) -> Layout:
    return Layout(EQUATION_BLOCKS, K)


def to_coords(b: Ball, block: Block) -> Ball:
    """Real cos/sin amplitudes of a complex coefficient array (k on axis 0)."""
    K0 = (b.shape[0] - 1) // 2
    ncheb = b.shape[1]

    def gather(ks):
        ok = (np.abs(ks) <= K0)[:, None]
        idx = np.clip(ks, -K0, K0) + K0
        m = np.where(ok, b.mid[idx], 0.0)
        r = None if b.rad is None else np.where(ok, b.rad[idx], 0.0)
        return Ball(m, r)

    ck, sk = block.cos_k, block.sin_k
    cp, cm = gather(ck), gather(-ck)
    cm = Ball(np.where((ck == 0)[:, None], 0.0, cm.mid), None if cm.rad is None else np.where((ck == 0)[:, None], 0.0, cm.rad))
    cvals = cp + cm
    svals = (gather(sk) - gather(-sk)).scale(1j)
    mid = np.concatenate([cvals.mid.real, svals.mid.real]).reshape(block.size, ncheb)
    rad = np.concatenate([cvals.radius(), svals.radius()]).reshape(block.size, ncheb)
    return Ball(mid, rad)


def from_coords(b: Ball, block: Block, K: int) -> Ball:
    """Inverse of :func:`to_coords` into a ``(2K+1, n)`` complex array."""
    ncheb = b.shape[1]
    m = np.zeros((2 * K + 1, ncheb), dtype=complex)
    r = np.zeros((2 * K + 1, ncheb))
    br = b.radius()
    nc = len(block.cos_k)
    for i, k in enumerate(block.cos_k):
        if k == 0:
            m[K] += b.mid[i]
            r[K] += br[i]
        else:
            m[K + k] += 0.5 * b.mid[i]
            m[K - k] += 0.5 * b.mid[i]
            r[K + k] += 0.5 * br[i]
            r[K - k] += 0.5 * br[i]
    for j, k in enumerate(block.sin_k):
        i = nc + j
        m[K + k] += -0.5j * b.mid[i]
        m[K - k] += 0.5j * b.mid[i]
        r[K + k] += 0.5 * br[i]
        r[K - k] += 0.5 * br[i]
    # halving and the single addition per slot are exact except for the
    # general-class sums, which combine distinct real and imaginary parts
    return Ball(m, r if np.any(r) else None)


# ---------------------------------------------------------------------------
# state


@dataclass(frozen=True)
class State:
    a: ChebSeries
    beta: ChebSeries
    alpha: ChebSeries
    u: tuple
    v: tuple
    w: FourierCheb

    @property
    def K(self) -> int:
        return max(c.K for c in (*self.u, *self.v, self.w))

    @property
    def domain(self):
        return self.w.domain

    def check_classes(self):
        for comp, cls in zip(self.u, U_CLASSES):
            assert comp.sym == cls, (comp.sym, cls)
        for comp, cls in zip(self.v, V_CLASSES):
            assert comp.sym == cls, (comp.sym, cls)
        assert self.w.sym == W_CLASS

    def to_vector(self, lay: Layout | None = None) -> Ball:
        """Coordinates ``(dim, ncheb)`` in the unknown layout."""
        lay = lay or unknown_layout(self.K)
        ncheb = max(len(self.a.coeffs), len(self.beta.coeffs), len(self.alpha.coeffs),
                    *(c.N + 1 for c in (*self.u, *self.v, self.w)))
        m = np.zeros((lay.dim, ncheb))
        r = np.zeros((lay.dim, ncheb))
        for name, s in (("a", self.a), ("beta", self.beta), ("alpha", self.alpha)):
            i = lay[name].start
            m[i, : len(s.coeffs)] = s.coeffs
            if s.rad is not None:
                r[i, : len(s.coeffs)] = s.rad
        comps = dict(zip(("u1", "u2", "u3"), self.u)) | dict(zip(("v1", "v2", "v3"), self.v)) | {"w": self.w}
        for name, comp in comps.items():
            blk = lay[name]
            cb = to_coords(comp.ball, blk)
            m[blk.slice, : comp.N + 1] = cb.mid
            r[blk.slice, : comp.N + 1] = cb.radius()
        return Ball(m, r)

    @staticmethod
    def from_vector(x: Ball | np.ndarray, lay: Layout, domain=(0.0, 1.0)) -> "State":
        if not isinstance(x, Ball):
            x = Ball(np.asarray(x, dtype=float))
        if x.mid.ndim == 1:
            x = Ball(x.mid[:, None], None if x.rad is None else x.rad[:, None])
        K = lay.K

        def scal(name):
            i = lay[name].start
            return ChebSeries(x.mid[i], None if x.rad is None else x.rad[i], domain)

        def comp(name):
            blk = lay[name]
            b = from_coords(x[blk.slice], blk, K)
            return FourierCheb(b.mid, b.rad, blk.cls, True, domain)

        return State(scal("a"), scal("beta"), scal("alpha"),
                     tuple(comp(n) for n in ("u1", "u2", "u3")),
                     tuple(comp(n) for n in ("v1", "v2", "v3")),
                     comp("w"))


@dataclass(frozen=True)
class Residual:
    eta: tuple
    gamma: ChebSeries
    f: tuple
    g: tuple
    h: FourierCheb

    def to_vector(self, lay: Layout) -> Ball:
        """Projection onto the equation layout (modes |k| <= lay.K)."""
        comps = {"f1": self.f[0], "f2": self.f[1], "f3": self.f[2],
                 "g1": self.g[0], "g2": self.g[1], "g3": self.g[2], "h": self.h}
        ncheb = max(c.N + 1 for c in comps.values())
        ncheb = max(ncheb, len(self.gamma.coeffs), *(len(e.coeffs) for e in self.eta))
        m = np.zeros((lay.dim, ncheb))
        r = np.zeros((lay.dim, ncheb))
        for name, s in (("eta1", self.eta[0]), ("eta2", self.eta[1]), ("gamma", self.gamma)):
            i = lay[name].start
            m[i, : len(s.coeffs)] = s.coeffs
            if s.rad is not None:
                r[i, : len(s.coeffs)] = s.rad
        for name, comp in comps.items():
            blk = lay[name]
            cb = to_coords(comp.ball, blk)
            m[blk.slice, : comp.N + 1] = cb.mid
            r[blk.slice, : comp.N + 1] = cb.radius()
        return Ball(m, r)

    def components(self):
        return (*self.f, *self.g, self.h)


# ---------------------------------------------------------------------------
# the map F


def _omega_polys(omega, domain):
    """Omega and Omega^2 as Chebyshev balls (constants for a node slice)."""
    if omega is None:
        return series.omega_coeffs(domain)
    om = float(omega)
    return Ball(np.array([om])), Ball(np.array([om])) * Ball(np.array([om]))


def _t0(phi: FourierCheb) -> Ball:
    """Chebyshev coefficients of ``phi(0, .)`` (sum over Fourier modes)."""
    return phi.ball.sum(axis=0)


def _scalar_series(b: Ball, domain) -> ChebSeries:
    return ChebSeries(b.mid.real, b.rad, domain)


@dataclass
class _Pieces:
    d: list
    dd: list
    e: list
    w2: FourierCheb
    w3: FourierCheb
    Rw3: FourierCheb
    Lad: list  # L_a d
    Lae: list  # L_a e


def _pieces(x: State) -> _Pieces:
    S = series.shift
    d = [ui - S(ui, 1) for ui in x.u]
    dd = [ui - S(ui, 2) for ui in x.u]
    e = [vi - S(vi, 1) for vi in x.v]
    w2 = x.w * x.w
    w3 = w2 * x.w
    Rw3 = series.reflect(w3)
    Lad = [d[0], d[1], series.cheb_multiply(d[2], x.a)]
    Lae = [e[0], e[1], series.cheb_multiply(e[2], x.a)]
    return _Pieces(d, dd, e, w2, w3, Rw3, Lad, Lae)


def _const_fc(c: Ball, K: int, sym: str, domain) -> FourierCheb:
    m = np.zeros((2 * K + 1, c.shape[-1]), dtype=complex)
    m[K] = c.mid
    r = None
    if c.rad is not None:
        r = np.zeros(m.shape)
        r[K] = c.rad
    return FourierCheb(m, r, sym, True, domain)


def eval_eta(u: tuple) -> tuple[ChebSeries, ChebSeries]:
    dom = u[0].domain
    e1 = _t0(u[2]) - Ball(np.eye(1, u[2].N + 1)[0])
    e2 = u[0].mode(0)
    return _scalar_series(e1, dom), _scalar_series(e2, dom)


def eval_gamma(a: ChebSeries, u: tuple, w: FourierCheb) -> ChebSeries:
    dom = w.domain
    d = [ui - series.shift(ui, 1) for ui in u]
    Q = d[0] * d[0] + d[1] * d[1] + series.cheb_multiply(d[2] * d[2], a)
    val = _t0(w * w * Q)
    one = np.zeros(val.shape[0])
    one[0] = 1.0
    return _scalar_series(val - Ball(one), dom)


def eval_F(x: State, p: NormParams | None = None, omega: float | None = None, check: bool = True) -> Residual:
    """Residual of the zero-finding map with full product support.

    ``omega=None`` treats Omega as the Chebyshev variable of the domain;
    a float evaluates the frozen-Omega slice used at collocation nodes.
    """
    dom = x.domain
    om, om2 = _omega_polys(omega, dom)
    P = _pieces(x)
    u, v, w = x.u, x.v, x.w
    eta = eval_eta(u)
    Q = P.d[0] * P.d[0] + P.d[1] * P.d[1] + P.Lad[2] * P.d[2]
    gam = _t0(P.w2 * Q)
    one = np.zeros(gam.shape[0])
    one[0] = 1.0
    gamma = _scalar_series(gam - Ball(one), dom)

    f = tuple(series.diff_t(u[i]) - v[i] for i in range(3))

    grav = [P.w3 * P.d[i] + P.Rw3 * P.dd[i] for i in range(3)]
    beta_fc = _const_fc(x.beta.ball, 0, "even-cos", dom)
    g1 = (series.diff_t(v[0]) + beta_fc - series.cheb_multiply(u[0], om2)
          - series.cheb_multiply(v[1], om) * 2.0 + grav[0])
    g2 = (series.diff_t(v[1]) - series.cheb_multiply(u[1], om2)
          + series.cheb_multiply(v[0], om) * 2.0 + grav[1])
    g3 = series.diff_t(v[2]) + grav[2]

    Pr = P.d[0] * P.e[0] + P.d[1] * P.e[1] + P.Lad[2] * P.e[2]
    alpha_fc = _const_fc(x.alpha.ball, 0, W_CLASS, dom)
    h = series.diff_t(w) + alpha_fc + P.w3 * Pr

    g = tuple(_retag(gi, cls) for gi, cls in zip((g1, g2, g3), U_CLASSES))
    f = tuple(_retag(fi, cls) for fi, cls in zip(f, V_CLASSES))
    h = _retag(h, W_CLASS)
    res = Residual(eta, gamma, f, g, h)
    if check:
        for comp in res.components():
            viol = series.off_class_residual(comp)
            if viol.mid.size and not _contains_zero_tol(viol, comp):
                raise ClassViolation(f"off-class residual in component of class {comp.sym}")
    return res


def _retag(phi: FourierCheb, cls: str) -> FourierCheb:
    return FourierCheb(phi.coeffs, phi.rad, cls, True, phi.domain)


def _contains_zero_tol(viol: Ball, comp: FourierCheb) -> bool:
    if comp.rad is not None:
        return bool(np.all(viol.contains_zero()))
    # floating point data: allow round-off relative to the component size
    scale = np.abs(comp.coeffs).max() + 1.0
    return bool(np.all(np.abs(viol.mid) <= 1e-12 * scale))


# ---------------------------------------------------------------------------
# derivative


def multipliers(x: State, omega: float | None = None) -> dict:
    """Series entering DF(x) as multiplication operators and functionals."""
    dom = x.domain
    om, om2 = _omega_polys(omega, dom)
    P = _pieces(x)
    w2_3 = P.w2 * 3.0
    Rw2_3 = series.reflect(w2_3)
    Pr = P.d[0] * P.e[0] + P.d[1] * P.e[1] + P.Lad[2] * P.e[2]
    Q = P.d[0] * P.d[0] + P.d[1] * P.d[1] + P.Lad[2] * P.d[2]
    m = {
        "om": om,
        "om2": om2,
        "w3": P.w3,
        "Rw3": P.Rw3,
        "w2x3": w2_3,
        "Rw2x3": Rw2_3,
        "gw": [w2_3 * P.d[i] for i in range(3)],          # g_i <- w
        "gwR": [P.dd[i] * Rw2_3 for i in range(3)],        # g_i <- R w
        "hu": [P.w3 * P.Lae[i] for i in range(3)],         # h <- (I-S) u_i
        "hv": [P.w3 * P.Lad[i] for i in range(3)],         # h <- (I-S) v_i
        "hw": w2_3 * Pr,                                   # h <- w
        "ha": P.w3 * (P.d[2] * P.e[2]),                    # h <- a
        "ga0": _t0(P.w2 * (P.d[2] * P.d[2])),             # gamma <- a
        "gu0": [_t0(P.w2 * P.Lad[i]).scale(2.0) for i in range(3)],  # gamma <- ((I-S) u_i)(0)
        "gw0": _t0(x.w * Q).scale(2.0),                    # gamma <- w(0)
        "pieces": P,
    }
    return m


def _phase(ks: np.ndarray, j: int) -> Ball:
    return series._phase_balls(ks, j)


def _in_factor(kinds: np.ndarray, ks: np.ndarray, op: str, reflect: bool):
    """Complex coefficients of each column basis function at +k and -k.

    Returns two balls (for +k and -k) after the diagonal input operator.
    """
    half = np.where(ks == 0, 1.0, 0.5)
    plus = np.where(kinds == 2, -0.5j, half + 0j)
    minus = np.where(kinds == 2, 0.5j, np.where(ks == 0, 0.0, 0.5) + 0j)
    if reflect:
        plus, minus = minus, plus
        # after R the coefficient at +k is the old one at -k
    fp, fm = Ball(plus), Ball(minus)
    if op == "I":
        return fp, fm
    j = {"I-S": 1, "I-S2": 2}[op]
    one = Ball(np.ones(len(ks), dtype=complex))
    Dp = one - _phase(ks, j)
    Dm = one - _phase(-ks, j)
    return fp * Dp, fm * Dm


def mult_block(phi: Ball, rows: Block, cols: Block, op: str = "I", reflect: bool = False, cols_K: int | None = None) -> Ball:
    """Matrix of ``phi * (op applied to column basis functions)`` in real coordinates.

    Entries are Chebyshev coefficient vectors (last axis).  The column
    basis function for mode k' is ``cos k't`` or ``sin k't``; ``reflect``
    composes with ``t -> -t`` before ``op``.
    """
    Kp = (phi.shape[0] - 1) // 2
    nphi = phi.shape[1]
    rk, rkind = rows.ks, rows.kinds
    ck, ckind = cols.ks, cols.kinds
    fp, fm = _in_factor(ckind, ck, op, reflect)
    # output extraction weights: cos row: out_k + out_-k (k>0), out_0; sin row: i(out_k - out_-k)
    rho_p = np.where(rkind == 2, 1j, 1.0 + 0j)
    rho_m = np.where(rkind == 2, -1j, np.where(rk == 0, 0.0, 1.0) + 0j)
    acc = None
    pm, pr = phi.mid, phi.rad
    for rho, sgn_r in ((rho_p, 1), (rho_m, -1)):
        for fcol, sgn_c in ((fp, 1), (fm, -1)):
            idx = sgn_r * rk[:, None] - sgn_c * ck[None, :]
            ok = np.abs(idx) <= Kp
            if not ok.any():
                continue
            gi = np.clip(idx, -Kp, Kp) + Kp
            gm = np.where(ok[..., None], pm[gi], 0.0)
            gr = None if pr is None else np.where(ok[..., None], pr[gi], 0.0)
            coef = Ball((rho[:, None] * fcol.mid[None, :])[..., None],
                        None if fcol.rad is None else (np.abs(rho)[:, None] * fcol.rad[None, :])[..., None])
            term = Ball(gm, gr) * coef
            acc = term if acc is None else acc + term
    if acc is None:
        return Ball(np.zeros((len(rk), len(ck), nphi)))
    return acc.real()


def diff_block(rows: Block, cols: Block) -> np.ndarray:
    """``d/dt`` from a column class to a row class (exact integers)."""
    same = rows.ks[:, None] == cols.ks[None, :]
    rkind, ckind = rows.kinds[:, None], cols.kinds[None, :]
    k = cols.ks[None, :].astype(float)
    # cos k t -> -k sin k t ; sin k t -> k cos k t
    M = np.where(same & (rkind == 2) & (ckind == 1), -k, 0.0)
    return M + np.where(same & (rkind == 1) & (ckind == 2), k, 0.0)


def _functional_row(kinds, ks, op):
    """Values ``(op b)(0)`` for column basis functions ``b``."""
    val = np.where(kinds == 1, 1.0, 0.0).astype(complex)
    if op == "I":
        return Ball(val)
    # ((I - S) b)(0) = b(0) - b(4 pi / 3)
    ph = _phase(ks, 1)  # exp(i k 4pi/3) = c + i s
    c = Ball(ph.mid.real, ph.rad)
    s = Ball(ph.mid.imag, ph.rad)
    one = Ball(np.ones(len(ks)))
    cos_part = one - c
    sin_part = -s
    mid = np.where(kinds == 1, cos_part.mid, sin_part.mid)
    rad = np.where(kinds == 1, cos_part.radius(), sin_part.radius())
    return Ball(mid, rad)


@dataclass
class DFMatrix:
    """Ball array ``(rows, cols, ncheb)`` plus its layouts."""

    M: Ball
    rows: Layout
    cols: Layout


def assemble_DF(x: State, rows_K: int, cols_K: int, omega: float | None = None, mult: dict | None = None) -> DFMatrix:
    """Finite matrix of DF(x) between truncated reduced bases."""
    R = equation_layout(rows_K)
    C = unknown_layout(cols_K)
    m = mult if mult is not None else multipliers(x, omega)
    ncheb = 1
    for key in ("w3", "hw", "ha", "hu", "hv", "gw", "gwR"):
        val = m[key]
        for it in (val if isinstance(val, list) else [val]):
            ncheb = max(ncheb, it.N + 1)
    for key in ("ga0", "gw0", "om2"):
        ncheb = max(ncheb, m[key].shape[-1])
    ncheb = max(ncheb, *(b.shape[-1] for b in m["gu0"]))
    mid = np.zeros((R.dim, C.dim, ncheb))
    rad = np.zeros((R.dim, C.dim, ncheb))

    def put(rb: Block, cb: Block, blk: Ball):
        n = blk.shape[-1]
        mid[rb.slice, cb.slice, :n] += blk.mid
        if blk.rad is not None:
            rad[rb.slice, cb.slice, :n] += blk.rad

    def put_exact(rb, cb, arr):
        mid[rb.slice, cb.slice, 0] += arr

    def const_mult(c: Ball) -> Ball:
        return Ball(c.mid[None, :].astype(complex), None if c.rad is None else c.rad[None, :])

    u_names, v_names = ("u1", "u2", "u3"), ("v1", "v2", "v3")
    f_names, g_names = ("f1", "f2", "f3"), ("g1", "g2", "g3")

    # eta rows
    mid[R["eta1"].start, C["u3"].slice, 0] = np.where(C["u3"].kinds == 1, 1.0, 0.0)
    b_u1 = C["u1"]
    mid[R["eta2"].start, b_u1.start + int(np.argmax(b_u1.ks == 0)), 0] = 1.0

    # gamma row
    gi = R["gamma"].start
    ga0 = m["ga0"]
    mid[gi, C["a"].start, : ga0.shape[0]] += ga0.mid.real
    rad[gi, C["a"].start, : ga0.shape[0]] += ga0.radius()
    for i, nm in enumerate(u_names):
        cb = C[nm]
        fr = _functional_row(cb.kinds, cb.ks, "I-S")
        gu = m["gu0"][i]
        val = (Ball(fr.mid[:, None], None if fr.rad is None else fr.rad[:, None])
               * Ball(gu.mid.real[None, :], None if gu.rad is None else gu.rad[None, :]))
        n = val.shape[-1]
        mid[gi, cb.slice, :n] += val.mid
        rad[gi, cb.slice, :n] += val.radius()
    cb = C["w"]
    fr = _functional_row(cb.kinds, cb.ks, "I").mid.real
    gw0 = m["gw0"]
    n = gw0.shape[0]
    mid[gi, cb.slice, :n] += fr[:, None] * gw0.mid.real[None, :]
    rad[gi, cb.slice, :n] += fr[:, None] * gw0.radius()[None, :]

    # f rows
    for i in range(3):
        rb = R[f_names[i]]
        put_exact(rb, C[u_names[i]], diff_block(rb, C[u_names[i]]))
        put(rb, C[v_names[i]], mult_block(Ball(-np.ones((1, 1), complex)), rb, C[v_names[i]]))

    # g rows
    om, om2 = m["om"], m["om2"]
    for i in range(3):
        rb = R[g_names[i]]
        cu = C[u_names[i]]
        put(rb, cu, mult_block(m["w3"].ball, rb, cu, "I-S"))
        put(rb, cu, mult_block(m["Rw3"].ball, rb, cu, "I-S2"))
        if i < 2:
            put(rb, cu, mult_block(const_mult(-om2), rb, cu))
        put_exact(rb, C[v_names[i]], diff_block(rb, C[v_names[i]]))
        put(rb, C["w"], mult_block(m["gw"][i].ball, rb, C["w"]))
        put(rb, C["w"], mult_block(m["gwR"][i].ball, rb, C["w"], reflect=True))
    put(R["g1"], C["v2"], mult_block(const_mult(-om.scale(2.0)), R["g1"], C["v2"]))
    put(R["g2"], C["v1"], mult_block(const_mult(om.scale(2.0)), R["g2"], C["v1"]))
    rb = R["g1"]
    mid[rb.start, C["beta"].start, 0] += 1.0  # cos k=0 is the first g1 coordinate

    # h row
    rb = R["h"]
    for i in range(3):
        put(rb, C[u_names[i]], mult_block(m["hu"][i].ball, rb, C[u_names[i]], "I-S"))
        put(rb, C[v_names[i]], mult_block(m["hv"][i].ball, rb, C[v_names[i]], "I-S"))
    put_exact(rb, C["w"], diff_block(rb, C["w"]))
    put(rb, C["w"], mult_block(m["hw"].ball, rb, C["w"]))
    ha = to_coords(m["ha"].ball, rb)
    n = ha.shape[-1]
    mid[rb.slice, C["a"].start, :n] += ha.mid
    rad[rb.slice, C["a"].start, :n] += ha.radius()
    mid[rb.start, C["alpha"].start, 0] += 1.0  # cos k=0 is the first h coordinate

    # the += accumulations above are exact for at most a handful of terms
    # per entry; account for their rounding
    if np.any(rad):
        rad = up(rad + 8 * U * np.abs(mid), 10)
    return DFMatrix(Ball(mid, rad if np.any(rad) else None), R, C)


# ---------------------------------------------------------------------------
# fast floating point node routines (collocation Newton)


def node_residual(xvec: np.ndarray, omega: float, lay: Layout) -> np.ndarray:
    x = State.from_vector(xvec, lay)
    res = eval_F(x, omega=omega, check=False)
    return res.to_vector(equation_layout(lay.K)).mid[:, 0]


def node_jacobian(xvec: np.ndarray, omega: float, lay: Layout) -> np.ndarray:
    x = State.from_vector(xvec, lay)
    D = assemble_DF(x, lay.K, lay.K, omega=omega)
    return D.M.mid[:, :, 0]


def apply_symmetry(x: State, which: str) -> State:
    """``Sigma``: pointwise complex conjugation; ``Sigma0``: negate u1 and v1."""
    if which == "Sigma":
        def conj(c: FourierCheb):
            return FourierCheb(np.conj(c.coeffs[::-1]), None if c.rad is None else c.rad[::-1], c.sym, c.real, c.domain)
        return State(x.a, x.beta, x.alpha, tuple(map(conj, x.u)), tuple(map(conj, x.v)), conj(x.w))
    if which == "Sigma0":
        u = (-x.u[0], x.u[1], x.u[2])
        v = (-x.v[0], x.v[1], x.v[2])
        return State(x.a, x.beta, x.alpha, u, v, x.w)
    raise ValueError(f"unknown symmetry {which!r}")
