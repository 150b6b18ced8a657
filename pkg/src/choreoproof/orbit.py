"""Physical trajectories from the branch and an ODE cross-check.

With ``U = L_sqrt(a) u`` the three bodies in the rotating frame are
``U_j(t) = U(t + 4 pi j / 3)`` and in the inertial frame
``q_j(t) = exp(Omega J t) U_j(t)``.  They solve

    U_j'' + 2 Omega J U_j' - Omega^2 I U_j = -sum_l (U_j - U_l) / |U_j - U_l|^3

which :func:`ode_oracle` integrates independently of the map F.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import model

log = logging.getLogger(__name__)

FRAMES = ("rotating", "inertial")
SHIFT = 4.0 * np.pi / 3.0


class OrbitError(RuntimeError):
    pass


@dataclass
class Trajectory:
    frame: str
    omega: float
    t: np.ndarray
    q: np.ndarray  # (n, 3 bodies, 3 coordinates)

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must increase strictly")

    def rows(self):
        for ti, qi in zip(self.t, self.q):
            yield [self.frame, repr(float(self.omega)), repr(float(ti)), *(repr(float(x)) for x in qi.ravel())]

    def to_csv(self, path) -> None:
        header = ["frame", "omega", "t"] + [f"q{j}{c}" for j in (1, 2, 3) for c in "xyz"]
        tmp = f"{path}.tmp"
        with open(tmp, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for row in self.rows():
                wr.writerow(row)
        os.replace(tmp, path)


def _components(b, omega: float):
    """Complex Fourier coefficients of u (3 x (2K+1)) and a at one Omega."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError("Omega must lie in [0, 1]")
    lo, hi = b.params.domain
    if not lo <= omega <= hi:
        raise ValueError(f"Omega={omega} outside the branch domain {b.params.domain}")
    x = model.State.from_vector(b.slice_at(omega), b.layout, b.params.domain)
    a = float(x.a.coeffs[0])
    u = np.array([c.coeffs[:, 0] for c in x.u])
    return a, u


def _curve(b, omega: float):
    a, u = _components(b, omega)
    if a < 0:
        raise OrbitError(f"a(Omega={omega}) = {a} is negative; the blow-up cannot be inverted")
    scale = np.array([1.0, 1.0, np.sqrt(a)])
    K = (u.shape[1] - 1) // 2
    ks = np.arange(-K, K + 1)
    return scale[:, None] * u, ks


def _eval(coef, ks, t, order=0):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    e = np.exp(1j * np.outer(t, ks))
    return ((e * (1j * ks) ** order) @ coef.T).real  # (n, 3)


def _rotation(omega: float, t: np.ndarray) -> np.ndarray:
    c, s = np.cos(omega * t), np.sin(omega * t)
    R = np.zeros((len(t), 3, 3))
    R[:, 0, 0], R[:, 0, 1], R[:, 1, 0], R[:, 1, 1], R[:, 2, 2] = c, -s, s, c, 1.0
    return R


def reconstruct_positions(b, omega: float, t, frame: str = "rotating", order: int = 0) -> np.ndarray:
    """Positions (or rotating-frame time derivatives) of the three bodies.

    Returns an array ``(len(t), 3, 3)`` indexed by time, body, coordinate.
    """
    if frame not in FRAMES:
        raise ValueError(f"unknown frame {frame!r}")
    coef, ks = _curve(b, omega)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    q = np.stack([_eval(coef, ks, t + SHIFT * j, order) for j in range(3)], axis=1)
    if frame == "inertial":
        if order:
            raise ValueError("derivatives are only available in the rotating frame")
        q = np.einsum("tij,tbj->tbi", _rotation(omega, t), q)
    return q


def sample_orbit(b, omega: float, frame: str = "rotating", n_samples: int = 1024) -> Trajectory:
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    t = np.linspace(0.0, 2.0 * np.pi, n_samples)
    return Trajectory(frame, float(omega), t, reconstruct_positions(b, omega, t, frame))


def inertial_velocities(b, omega: float, t) -> np.ndarray:
    """Inertial-frame velocities ``exp(Omega J t) (U' + Omega J U)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    U = reconstruct_positions(b, omega, t)
    dU = reconstruct_positions(b, omega, t, order=1)
    J = model.ConstantMatrices().J_bar
    v = dU + omega * np.einsum("ij,tbj->tbi", J, U)
    return np.einsum("tij,tbj->tbi", _rotation(omega, t), v)


def _rhs(omega: float):
    J = model.ConstantMatrices().J_bar
    Ib = model.ConstantMatrices().I_bar

    def f(_t, y):
        X = y[:9].reshape(3, 3)
        V = y[9:].reshape(3, 3)
        acc = -2.0 * omega * V @ J.T + omega * omega * X @ Ib.T
        for j in range(3):
            for l in range(3):
                if l != j:
                    d = X[j] - X[l]
                    acc[j] -= d / np.linalg.norm(d) ** 3
        return np.concatenate([V.ravel(), acc.ravel()])

    return f


def ode_oracle(b, omega: float, rtol: float = 1e-10, n_check: int = 257) -> float:
    """Max deviation over one period between the integrated flow and the series.

    The integrator's local tolerance is ``rtol / 100`` so that its global
    error over a period stays below ``rtol``.
    """
    t = np.linspace(0.0, 2.0 * np.pi, n_check)
    X = reconstruct_positions(b, omega, t)
    dX = reconstruct_positions(b, omega, t, order=1)
    dist = min(np.linalg.norm(X[:, j] - X[:, l], axis=1).min() for j in range(3) for l in range(j))
    if dist < 1e-8:
        raise OrbitError(f"close encounter (distance {dist:.3e}) on the candidate orbit")
    y0 = np.concatenate([X[0].ravel(), dX[0].ravel()])

    def encounter(_t, y):
        P = y[:9].reshape(3, 3)
        return min(np.linalg.norm(P[j] - P[l]) for j in range(3) for l in range(j)) - 1e-8

    encounter.terminal = True
    loc = rtol * 1e-2
    sol = solve_ivp(_rhs(omega), (0.0, 2.0 * np.pi), y0, method="DOP853", rtol=loc,
                    atol=loc * 1e-2, t_eval=t, events=encounter)
    if sol.status == 1:
        raise OrbitError("close encounter during integration")
    if not sol.success:
        raise OrbitError(f"integration failed: {sol.message}")
    Y = sol.y[:9].T.reshape(len(t), 3, 3)
    return float(np.max(np.abs(Y - X)))


def export_samples(b, omegas, outdir, frame: str = "rotating", n_samples: int = 1024) -> str:
    """One CSV per Omega plus ``manifest.json``; returns the manifest path."""
    os.makedirs(outdir, exist_ok=True)
    entries = []
    for om in omegas:
        tr = sample_orbit(b, om, frame, n_samples)
        name = f"orbit_{frame}_{om:.17g}.csv"
        tr.to_csv(os.path.join(outdir, name))
        entries.append({"omega": float(om), "file": name, "frame": frame, "n_samples": n_samples})
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump({"frame": frame, "entries": entries}, fh, indent=2)
    return path
