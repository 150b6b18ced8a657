"""Numerical branch: collocation Newton, continuation and approximate inverse.

Nothing in this module is rigorous except the endpoint pinning, which
stores the affected Chebyshev coefficients as enclosures of the exact
values that make the endpoint identities hold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import model, series
from .rigor import Ball, Interval, cbrt
from .series import NormParams

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    def __init__(self, msg, last_omega=None):
        super().__init__(msg)
        self.last_omega = last_omega


@dataclass
class NodeSolution:
    omega: float
    x: np.ndarray
    residual: float
    newton_iters: int


@dataclass
class BranchCandidate:
    """Chebyshev-in-Omega coordinates of x-bar and the approximate inverse.

    ``xbar`` has shape ``(dim, N+1)`` in :func:`model.unknown_layout`;
    ``A`` has shape ``(N+1, dim, dim)`` mapping equation coordinates to
    unknown coordinates.
    """

    params: NormParams
    xbar: Ball
    A: np.ndarray
    nodes: list = field(default_factory=list)

    @property
    def layout(self) -> model.Layout:
        return model.unknown_layout(self.params.K)

    @property
    def eq_layout(self) -> model.Layout:
        return model.equation_layout(self.params.K)

    @property
    def state(self) -> model.State:
        return model.State.from_vector(self.xbar, self.layout, self.params.domain)

    def slice_at(self, omega: float) -> np.ndarray:
        s = series.omega_to_s(omega, self.params.domain)
        return np.polynomial.chebyshev.chebval(s, self.xbar.mid.T)


def chebyshev_nodes(N: int, domain=(0.0, 1.0)) -> np.ndarray:
    """Nodes ``(1 + cos(j pi / N)) / 2`` mapped to ``domain``, descending."""
    if N < 1:
        raise ValueError("N must be >= 1")
    s = np.cos(np.arange(N + 1) * np.pi / N)
    s[0], s[-1] = 1.0, -1.0
    if N % 2 == 0:
        s[N // 2] = 0.0
    lo, hi = domain
    return (hi + lo) / 2 + (hi - lo) / 2 * s


def triangle_values(K: int) -> dict:
    """Exact triangle slice as ``{(block, kind, k): Interval}``."""
    c = Interval(1.0, 1.0) / cbrt(Interval(3.0, 3.0))  # 3^-1/3
    c6 = Interval(1.0, 1.0) / _sixth_root3()
    two = Interval(2.0, 2.0)
    return {
        ("u1", 1, 2): c6,
        ("u2", 2, 2): -c6,
        ("u3", 1, 1): Interval(1.0, 1.0),
        ("v1", 2, 2): -(two * c6),
        ("v2", 1, 2): -(two * c6),
        ("v3", 2, 1): Interval(-1.0, -1.0),
        ("w", 1, 0): c,
    }


def _sixth_root3() -> Interval:
    from .rigor import sqrt
    return sqrt(cbrt(Interval(3.0, 3.0)))


def triangle_seed(K: int) -> np.ndarray:
    """Coordinates of the Lagrange triangle slice (floating point)."""
    if K < 2:
        raise ValueError("K must be >= 2")
    lay = model.unknown_layout(K)
    x = np.zeros(lay.dim)
    for (name, kind, k), iv in triangle_values(K).items():
        x[_coord(lay, name, kind, k)] = iv.mid
    return x


def _coord(lay: model.Layout, name: str, kind: int, k: int) -> int:
    b = lay[name]
    hit = np.nonzero((b.kinds == kind) & (b.ks == k))[0]
    return b.start + int(hit[0])


def residual_norm(F: np.ndarray, lay: model.Layout, p: NormParams) -> float:
    """nu-norm of a constant-in-Omega residual in equation coordinates."""
    w = p.nu_pow_hi(lay.K)[lay.k]
    w[lay.kind == 0] = 1.0
    a = np.abs(F).copy()
    ci, si = lay.pairs()
    a[ci] = np.hypot(F[ci], F[si])
    a[si] = 0.0
    return float(a @ w)


def newton_at_node(omega: float, guess: np.ndarray, p: NormParams, tol: float = 1e-12, max_iters: int = 20) -> NodeSolution:
    lay = model.unknown_layout(p.K)
    eq = model.equation_layout(p.K)
    x = np.array(guess, dtype=float)
    res = np.inf
    for it in range(max_iters + 1):
        F = model.node_residual(x, omega, lay)
        res = residual_norm(F, eq, p)
        if not np.isfinite(res):
            break
        if res <= tol:
            return NodeSolution(omega, x, res, it)
        if it == max_iters:
            break
        J = model.node_jacobian(x, omega, lay)
        try:
            lu = scipy.linalg.lu_factor(J, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SolverError(f"Jacobian factorisation failed at Omega={omega}: {exc}", omega) from None
        if np.min(np.abs(np.diag(lu[0]))) == 0.0:
            raise SolverError(f"singular Jacobian at Omega={omega} (cond=inf)", omega)
        x = x - scipy.linalg.lu_solve(lu, F)
    raise SolverError(f"Newton did not converge at Omega={omega} (residual {res:.3e})", omega)


def _continue_to(x, om, target, prev, p, tol, step, max_halvings=8):
    """March from ``(x, om)`` to ``target`` with secant prediction.

    Returns the new state, the previous accepted point and the last step.
    """
    n_halvings = 0
    while om != target:
        nxt = target if abs(target - om) <= abs(step) * (1 + 1e-12) else om + step
        if prev is not None and prev[1] != om:
            guess = x + (x - prev[0]) * (nxt - om) / (om - prev[1])
        else:
            guess = x
        try:
            sol = newton_at_node(nxt, guess, p, tol)
        except SolverError:
            n_halvings += 1
            if n_halvings > max_halvings:
                raise SolverError(f"continuation failed below Omega={om}", om) from None
            step /= 2
            continue
        prev = (x, om)
        x, om = sol.x, nxt
    return x, prev, step


def continue_branch(p: NormParams, tol: float = 1e-12, max_halvings: int = 8, substeps: int = 4) -> BranchCandidate:
    """Continuation from the triangle at Omega = 1 through the node grid.

    The node at Omega = 1 (when in the domain) is the exact triangle and is
    not re-solved.
    """
    nodes = chebyshev_nodes(p.N, p.domain)
    x, om, prev = triangle_seed(p.K), 1.0, None
    sols = []
    for j, target in enumerate(nodes):
        if target == 1.0:
            sols.append(NodeSolution(1.0, x.copy(), 0.0, 0))
            continue
        step = (target - om) / substeps
        x, prev, _ = _continue_to(x, om, target, prev, p, tol, step, max_halvings)
        om = target
        sol = newton_at_node(target, x, p, tol)
        x = sol.x
        sols.append(sol)
        log.info("node %2d Omega=%.6f residual=%.2e iters=%d", j, target, sol.residual, sol.newton_iters)
    X = np.array([s.x for s in sols])  # (N+1, dim)
    coeffs = series.cheb_transform(X, p.N).T  # (dim, N+1)
    xbar = pin_endpoints(coeffs, p)
    A = approximate_inverse(xbar, p)
    return BranchCandidate(p, xbar, A, sols)


def endpoint_targets(p: NormParams):
    """Exact endpoint values: ``(t1, t0)`` dicts of coordinate -> Interval.

    ``t1`` prescribes the whole slice at Omega = 1 (the triangle), ``t0``
    the u1 and v1 blocks at Omega = 0.  Missing entries are zero.
    """
    lay = model.unknown_layout(p.K)
    t1, t0 = None, None
    if p.domain[1] == 1.0:
        t1 = {_coord(lay, *key): iv for key, iv in triangle_values(p.K).items()}
    if p.domain[0] == 0.0:
        t0 = {i: Interval(0.0, 0.0) for nm in ("u1", "v1") for i in range(lay[nm].start, lay[nm].stop)}
    return t1, t0


def _target_ball(tdict, dim):
    lo, hi = np.zeros(dim), np.zeros(dim)
    for i, iv in tdict.items():
        lo[i], hi[i] = iv.lo, iv.hi
    return Ball.from_intervals(lo, hi)


def pin_solution(coeffs: np.ndarray, p: NormParams) -> tuple[Ball, Ball | None, np.ndarray]:
    """Enclosures of the exact pinned psi_0 (and psi_1) for every coordinate.

    With E, O the sums of the even (n >= 2) and odd (n >= 3) coefficients,
    two pins give ``psi_0 = (t1 + t0)/2 - E`` and ``psi_1 = (t1 - t0)/2 - O``;
    a single pin at Omega = 1 gives ``psi_0 = t1 - sum_{n>=1} psi_n``.
    Returns ``(psi0, psi1 or None, mask of doubly pinned rows)``.
    """
    dim = coeffs.shape[0]
    t1, t0 = endpoint_targets(p)
    both = np.zeros(dim, dtype=bool)
    if t0 is not None:
        both[list(t0)] = True
    if t1 is None:
        if t0 is None:
            return Ball(coeffs[:, 0]), None, both
        raise ValueError("a lone Omega = 0 pin is not supported")
    T1 = _target_ball(t1, dim)
    rest = Ball(coeffs[:, 1:]).sum(axis=1)
    psi0 = T1 - rest
    psi1 = None
    if both.any():
        T0 = _target_ball(t0, dim)
        E = Ball(coeffs[:, 2::2]).sum(axis=1) if coeffs.shape[1] > 2 else Ball(np.zeros(dim))
        O = Ball(coeffs[:, 3::2]).sum(axis=1) if coeffs.shape[1] > 3 else Ball(np.zeros(dim))
        p0 = (T1 + T0).scale(0.5) - E
        p1 = (T1 - T0).scale(0.5) - O
        psi0 = Ball(np.where(both, p0.mid, psi0.mid), np.where(both, p0.radius(), psi0.radius()))
        psi1 = Ball(np.where(both, p1.mid, coeffs[:, 1]), np.where(both, p1.radius(), 0.0))
    return psi0, psi1, both


def pin_endpoints(coeffs: np.ndarray, p: NormParams) -> Ball:
    """Overwrite psi_0 (and psi_1) with enclosures enforcing the endpoint slices."""
    psi0, psi1, _ = pin_solution(coeffs, p)
    mid = coeffs.copy()
    rad = np.zeros_like(coeffs)
    mid[:, 0], rad[:, 0] = psi0.mid, psi0.radius()
    if psi1 is not None:
        mid[:, 1], rad[:, 1] = psi1.mid, psi1.radius()
    return Ball(mid, rad)


def approximate_inverse(xbar: Ball, p: NormParams) -> np.ndarray:
    """Chebyshev coefficients ``(N+1, dim, dim)`` of node-wise inverse Jacobians."""
    lay = model.unknown_layout(p.K)
    nodes = chebyshev_nodes(p.N, p.domain)
    s = series.omega_to_s(nodes, p.domain)
    vals = np.polynomial.chebyshev.chebval(s, xbar.mid.T).T  # (N+1, dim)
    inv = np.empty((p.N + 1, lay.dim, lay.dim))
    for j, om in enumerate(nodes):
        J = model.node_jacobian(vals[j], om, lay)
        inv[j] = scipy.linalg.inv(J)
    return series.cheb_transform(inv, p.N)
