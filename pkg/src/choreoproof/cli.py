"""Command-line entry point: ``choreoproof {solve,prove,sample,oracle}``.

Settings are resolved in this order, later ones winning: built-in
defaults, the config file (``key = value`` lines, optionally under a
``[choreoproof]`` header), ``CHOREOPROOF_<KEY>`` environment variables,
command-line flags.

Exit codes: 0 success, 1 failed proof or computation, 2 bad input,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
ENV_PREFIX = "CHOREOPROOF_"
ROUNDING = "nearest-outward"  # round to nearest, then widen by one ulp

log = logging.getLogger("choreoproof")


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    K: int = 70
    N: int = 20
    nu: str = "11/10"
    r: float = 1e-6
    omega_lo: float = 0.0
    omega_hi: float = 1.0
    newton_tol: float = 1e-12
    min_width: float = 1e-4
    oracle_rtol: float = 1e-10
    oracle_tol: float = 1e-8
    branch: str = "branch.npz"
    cert: str = "certificate.json"
    out: str = "orbits"
    threads: int = 0
    rounding: str = ROUNDING

    def validate(self) -> "RunConfig":
        try:
            nu = Fraction(self.nu)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"nu={self.nu!r} is not a rational number: {exc}") from None
        self.nu = str(nu)
        if self.rounding != ROUNDING:
            raise InputError(f"unsupported rounding mode {self.rounding!r}; only {ROUNDING!r}")
        if not self.r > 0:
            raise InputError("r must be positive")
        if self.threads < 0:
            raise InputError("threads must be >= 0")
        try:
            self.params()
        except ValueError as exc:
            raise InputError(str(exc)) from None
        return self

    def params(self):
        from .series import NormParams

        return NormParams(Fraction(self.nu), self.K, self.N, (self.omega_lo, self.omega_hi))


_FIELDS = {f.name: f for f in fields(RunConfig)}
_TYPES = {"int": int, "float": float, "str": str}


def _convert(name: str, value):
    typ = _TYPES[_FIELDS[name].type]
    try:
        return typ(value)
    except ValueError:
        raise InputError(f"{name}: cannot parse {value!r} as {typ.__name__}") from None


def _norm_key(key: str) -> str:
    k = key.strip().replace("-", "_")
    for name in _FIELDS:
        if name.lower() == k.lower():
            return name
    raise InputError(f"unknown setting {key!r}")


def read_config_file(path) -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    if not text.lstrip().startswith("["):
        text = "[choreoproof]\n" + text
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InputError(f"bad config {path}: {exc}") from None
    out = {}
    for sec in cp.sections():
        for k, v in cp[sec].items():
            out[_norm_key(k)] = v.strip().strip('"').strip("'")
    return out


def build_config(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    vals = {}
    if getattr(args, "config", None):
        vals.update(read_config_file(args.config))
    for key, v in environ.items():
        if key.startswith(ENV_PREFIX) and key != ENV_PREFIX + "CONFIG":
            vals[_norm_key(key[len(ENV_PREFIX):])] = v
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            vals[name] = v
    cfg = RunConfig(**{k: _convert(k, v) for k, v in vals.items()})
    return cfg.validate()


def _set_threads(n: int) -> None:
    # must run before numpy loads its BLAS
    if n > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


# ---------------------------------------------------------------------------
# commands


DECAY_TOL = 1e-8  # the residual target; larger trailing coefficients get a warning


def _decay_warnings(b) -> list:
    """Size of the highest Fourier and Chebyshev coefficients of x-bar."""
    import numpy as np

    lay = b.layout
    mid = np.abs(b.xbar.mid)
    msgs = []
    top_k = mid[lay.k == lay.K].max(initial=0.0)
    top_n = mid[:, -1].max()
    if top_k > DECAY_TOL:
        msgs.append(f"Fourier coefficients at |k|=K reach {top_k:.2e}; consider a larger K")
    if top_n > DECAY_TOL:
        msgs.append(f"Chebyshev coefficients at n=N reach {top_n:.2e}; consider a larger N")
    return msgs


def cmd_solve(cfg: RunConfig) -> int:
    from . import solver, store

    p = cfg.params()
    d = os.path.dirname(os.path.abspath(cfg.branch))
    if not os.access(d, os.W_OK):
        print(f"error: cannot write to {d}", file=sys.stderr)
        return EXIT_INPUT
    try:
        b = solver.continue_branch(p, tol=cfg.newton_tol)
    except solver.SolverError as exc:
        print(f"error: {exc} (last good Omega: {exc.last_omega})", file=sys.stderr)
        return EXIT_FAIL
    print(f"{'node':>4} {'Omega':>10} {'residual':>10} {'iters':>5}")
    for j, n in enumerate(b.nodes):
        print(f"{j:4d} {n.omega:10.6f} {n.residual:10.2e} {n.newton_iters:5d}")
    for msg in _decay_warnings(b):
        log.warning(msg)
    try:
        digest = store.save_branch(b, cfg.branch)
    except OSError as exc:
        print(f"error: cannot write {cfg.branch}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"branch written to {cfg.branch} (sha256 {digest})")
    return EXIT_OK


def _load(cfg: RunConfig):
    from . import store

    b = store.load_branch(cfg.branch)
    return b, store.file_digest(cfg.branch)


def cmd_prove(cfg: RunConfig) -> int:
    from . import prover, store

    b, digest = _load(cfg)
    if (b.params.K, b.params.N) != (cfg.K, cfg.N):
        log.info("using K=%d, N=%d from the branch file", b.params.K, b.params.N)
    cert = prover.certify(b, cfg.r, shape_checks=True, min_width=cfg.min_width)
    cert.digests = {"branch_sha256": digest}
    d = cert.to_json()
    d["config"] = asdict(cfg)
    store.save_json(d, cfg.cert)
    print(f"Y     <= {cert.Y.hi:.6e}")
    print(f"Z1    <= {cert.Z1.hi:.6f}")
    print(f"Z2    <= {cert.Z2.hi:.6e}")
    print(f"kappa <= {cert.kappa.hi:.6f}  (r = {cfg.r:g})")
    for key in ("contraction_ok", "endpoint_triangle_ok", "endpoint_planar_ok", "eight_shape_ok"):
        print(f"{key:22s} {getattr(cert, key)}")
    print(f"certificate written to {cfg.cert}")
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_sample(cfg: RunConfig, omegas, frame: str, n_samples: int) -> int:
    from . import orbit

    for om in omegas:
        if not 0.0 <= om <= 1.0:
            print(f"error: Omega={om} outside [0, 1]", file=sys.stderr)
            return EXIT_INPUT
    if not omegas:
        os.makedirs(cfg.out, exist_ok=True)
        from . import store

        store.save_json({"frame": frame, "entries": []}, os.path.join(cfg.out, "manifest.json"))
        return EXIT_OK
    b, _ = _load(cfg)
    try:
        path = orbit.export_samples(b, omegas, cfg.out, frame, n_samples)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"manifest written to {path}")
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, omegas) -> int:
    from . import orbit

    b, _ = _load(cfg)
    lo, hi = b.params.domain
    omegas = [om for om in omegas if lo <= om <= hi] if omegas else [lo, (lo + hi) / 2, hi]
    worst = 0.0
    for om in omegas:
        try:
            dev = orbit.ode_oracle(b, om, rtol=cfg.oracle_rtol)
        except orbit.OrbitError as exc:
            print(f"Omega={om:.6f}  failed: {exc}")
            return EXIT_FAIL
        worst = max(worst, dev)
        print(f"Omega={om:.6f}  deviation {dev:.3e}")
    return EXIT_OK if worst <= cfg.oracle_tol else EXIT_FAIL


# ---------------------------------------------------------------------------


def _omega_list(s: str | None):
    if s is None:
        return None
    s = s.strip()
    if not s:
        return []
    if s.startswith("linspace:"):
        n = int(s.split(":", 1)[1])
        return [j / (n - 1) for j in range(n)] if n > 1 else [0.0] * n
    return [float(x) for x in s.split(",")]


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="choreoproof", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config")
    g.add_argument("--K", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--nu")
    g.add_argument("--r", type=float)
    g.add_argument("--omega-lo", dest="omega_lo", type=float)
    g.add_argument("--omega-hi", dest="omega_hi", type=float)
    g.add_argument("--branch")
    g.add_argument("--cert")
    g.add_argument("--out")
    g.add_argument("--threads", type=int)
    g.add_argument("--newton-tol", dest="newton_tol", type=float)
    g.add_argument("--min-width", dest="min_width", type=float)
    g.add_argument("--oracle-rtol", dest="oracle_rtol", type=float)
    sub.add_parser("solve", parents=[common], help="continue the branch and write the branch file")
    sub.add_parser("prove", parents=[common], help="certify a branch file")
    sp = sub.add_parser("sample", parents=[common], help="export orbits as CSV")
    sp.add_argument("--omegas", default="0,1", help="comma list or linspace:N")
    sp.add_argument("--frame", choices=("rotating", "inertial"), default="rotating")
    sp.add_argument("--samples", type=int, default=1024)
    so = sub.add_parser("oracle", parents=[common], help="compare the branch with direct integration")
    so.add_argument("--omegas", default=None)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        _set_threads(cfg.threads)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "prove":
            return cmd_prove(cfg)
        if args.command == "sample":
            return cmd_sample(cfg, _omega_list(args.omegas), args.frame, args.samples)
        return cmd_oracle(cfg, _omega_list(args.omegas))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        from .store import BranchFileError

        if isinstance(exc, (BranchFileError, ValueError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
