"""Independent reference computations used by the tests.

Everything here works on sampled values in physical space, never on
coefficient convolutions, so it shares no code path with the library's
products.
"""

import numpy as np

from choreoproof import model, series

SHIFT = 4 * np.pi / 3


def values(phi, t, omega, order=0):
    """Pointwise ``d^order phi / dt^order`` by direct trigonometric summation."""
    s = series.omega_to_s(omega, phi.domain)
    ck = np.polynomial.chebyshev.chebval(s, phi.coeffs.T)
    ks = np.arange(-phi.K, phi.K + 1)
    return (np.exp(1j * np.outer(t, ks)) @ (ck * (1j * ks) ** order)).real


def pointwise_F(x: model.State, omega: float, t: np.ndarray) -> dict:
    """Right-hand sides of the blown-up system sampled at ``(t, omega)``."""
    a = float(x.a(omega))
    beta = float(x.beta(omega))
    alpha = float(x.alpha(omega))
    La = np.array([1.0, 1.0, a])
    u = np.array([values(c, t, omega) for c in x.u])
    du = np.array([values(c, t, omega, 1) for c in x.u])
    uS = np.array([values(c, t + SHIFT, omega) for c in x.u])
    uS2 = np.array([values(c, t + 2 * SHIFT, omega) for c in x.u])
    v = np.array([values(c, t, omega) for c in x.v])
    dv = np.array([values(c, t, omega, 1) for c in x.v])
    vS = np.array([values(c, t + SHIFT, omega) for c in x.v])
    w = values(x.w, t, omega)
    dw = values(x.w, t, omega, 1)
    wR = values(x.w, -t, omega)
    d, dd, e = u - uS, u - uS2, v - vS
    J = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    Ib = np.diag([1.0, 1.0, 0.0])
    g = (dv + beta * np.array([1.0, 0.0, 0.0])[:, None] - omega ** 2 * Ib @ u
         + 2 * omega * J @ v + w ** 3 * d + wR ** 3 * dd)
    f = du - v
    h = dw + alpha + w ** 3 * np.sum(d * La[:, None] * e, axis=0)
    # scalar equations use the value at t = 0
    t0 = np.array([0.0])
    u0 = np.array([values(c, t0, omega)[0] for c in x.u])
    d0 = u0 - np.array([values(c, t0 + SHIFT, omega)[0] for c in x.u])
    w0 = values(x.w, t0, omega)[0]
    tt = np.linspace(0, 2 * np.pi, 4 * x.K + 8, endpoint=False)
    eta = (u0[2] - 1.0, float(np.mean(values(x.u[0], tt, omega))))
    gamma = w0 ** 2 * float(np.sum(d0 * La * d0)) - 1.0
    return {"f": f, "g": g, "h": h, "eta": eta, "gamma": gamma}


def random_state(rng, K: int, N: int, decay: float = 0.6, scale: float = 0.3, domain=(0.0, 1.0)):
    """Random symmetric state near the triangle with geometric decay."""
    from choreoproof import solver

    lay = model.unknown_layout(K)
    x = np.zeros((lay.dim, N + 1))
    x[:, 0] = solver.triangle_seed(K)
    kdec = decay ** lay.k
    ndec = decay ** np.arange(N + 1)
    x += scale * rng.standard_normal(x.shape) * kdec[:, None] * ndec[None, :]
    return model.State.from_vector(x, lay, domain), x


def make_state(K: int, entries: dict, N: int = 0, domain=(0.0, 1.0)):
    """State from ``{(block, kind, k): chebyshev coeffs}``; kind 0 scalar, 1 cos, 2 sin."""
    lay = model.unknown_layout(K)
    x = np.zeros((lay.dim, N + 1))
    for (name, kind, k), val in entries.items():
        b = lay[name]
        hit = np.nonzero((b.kinds == kind) & (b.ks == k))[0]
        assert hit.size, (name, kind, k)
        val = np.atleast_1d(np.asarray(val, dtype=float))
        x[b.start + hit[0], : len(val)] = val
    return model.State.from_vector(x, lay, domain), x


def nu_norm_vec(v: np.ndarray, lay, nu: float) -> float:
    """Weighted l1 norm of an equation-layout array with theta-form Chebyshev weights."""
    w = float(nu) ** lay.k.astype(float)
    return float((np.abs(v).sum(axis=1) * w).sum())
