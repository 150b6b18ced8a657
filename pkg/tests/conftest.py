import os
from fractions import Fraction
from pathlib import Path

import pytest

from choreoproof import solver, store
from choreoproof.series import NormParams

CACHE = Path(os.environ.get("CHOREOPROOF_TEST_CACHE", Path(__file__).parent / ".cache"))

# acceptance criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def cached_branch(K: int, N: int, domain=(0.0, 1.0)):
    """Continue (or load) a branch; the file doubles as the CLI branch input."""
    CACHE.mkdir(parents=True, exist_ok=True)
    path = CACHE / f"branch_K{K}_N{N}_{domain[0]:g}_{domain[1]:g}.npz"
    if path.exists():
        try:
            return store.load_branch(path), path
        except store.BranchFileError:
            path.unlink()
    b = solver.continue_branch(NormParams(Fraction(11, 10), K, N, domain))
    store.save_branch(b, path)
    return store.load_branch(path), path


@pytest.fixture(scope="session")
def small_branch():
    return cached_branch(10, 6)[0]


@pytest.fixture(scope="session")
def small_branch_file():
    return cached_branch(10, 6)[1]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
