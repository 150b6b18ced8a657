"""Branch and certificate files.

A branch is stored as an ``.npz`` archive holding the Chebyshev
coordinates of x-bar (midpoints and radii), the approximate inverse and
the parameters.  Writes go through a temporary file so that a failure
never leaves a partial file behind.
"""

from __future__ import annotations

import hashlib
import json
import os
from fractions import Fraction

import numpy as np

from . import solver
from .rigor import Ball
from .series import NormParams

FORMAT = "choreoproof-branch-1"


class BranchFileError(ValueError):
    """The branch file is missing, unreadable or inconsistent."""


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic(path, write):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    tmp = os.path.join(d, f".{os.path.basename(path)}.{os.getpid()}.tmp")
    try:
        write(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def save_branch(b: solver.BranchCandidate, path) -> str:
    p = b.params
    meta = {
        "format": FORMAT,
        "K": p.K,
        "N": p.N,
        "nu": str(p.nu),
        "domain": list(p.domain),
        "nodes": [[n.omega, n.residual, n.newton_iters] for n in b.nodes],
    }

    def write(tmp):
        with open(tmp, "wb") as fh:
            np.savez(fh, meta=np.array(json.dumps(meta)), xbar_mid=b.xbar.mid,
                     xbar_rad=b.xbar.radius(), A=b.A)

    _atomic(path, write)
    return file_digest(path)


def load_branch(path) -> solver.BranchCandidate:
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            mid, rad, A = z["xbar_mid"], z["xbar_rad"], z["A"]
    except FileNotFoundError:
        raise BranchFileError(f"no branch file at {path}") from None
    except (OSError, ValueError, KeyError) as exc:
        raise BranchFileError(f"cannot read branch file {path}: {exc}") from None
    if meta.get("format") != FORMAT:
        raise BranchFileError(f"{path}: unknown format {meta.get('format')!r}")
    try:
        p = NormParams(Fraction(meta["nu"]), int(meta["K"]), int(meta["N"]), tuple(meta["domain"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise BranchFileError(f"{path}: bad parameters: {exc}") from None
    from . import model

    dim = model.unknown_layout(p.K).dim
    if mid.shape != (dim, p.N + 1) or rad.shape != mid.shape or A.shape != (p.N + 1, dim, dim):
        raise BranchFileError(f"{path}: array shapes do not match K={p.K}, N={p.N}")
    if not (np.all(np.isfinite(mid)) and np.all(np.isfinite(A)) and np.all(rad >= 0)):
        raise BranchFileError(f"{path}: non-finite coefficients or negative radii")
    nodes = [solver.NodeSolution(om, None, res, it) for om, res, it in meta.get("nodes", [])]
    return solver.BranchCandidate(p, Ball(mid, rad), A, nodes)


def save_json(obj: dict, path) -> None:
    def write(tmp):
        with open(tmp, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")

    _atomic(path, write)
