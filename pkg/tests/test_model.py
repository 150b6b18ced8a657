import math

import numpy as np
import pytest

import oracles
from choreoproof import model, solver
from choreoproof.series import omega_to_s

C6 = 3 ** (-1 / 6)
CH = np.polynomial.chebyshev.chebval


def triangle_state(K=4):
    return oracles.make_state(K, {
        ("u1", 1, 2): C6, ("u2", 2, 2): -C6, ("u3", 1, 1): 1.0,
        ("v1", 2, 2): -2 * C6, ("v2", 1, 2): -2 * C6, ("v3", 2, 1): -1.0,
        ("w", 1, 0): 3 ** (-1 / 3),
    })[0]


# ---- eta and gamma -------------------------------------------------------


def test_eta_normalized_u3():
    x, _ = oracles.make_state(3, {("u3", 1, 1): 1.0})
    e1, e2 = model.eval_eta(x.u)
    assert np.allclose(e1.coeffs, 0.0) and np.allclose(e2.coeffs, 0.0)


def test_eta_u1_without_mean():
    x, _ = oracles.make_state(3, {("u1", 1, 2): 1.0})
    assert np.allclose(model.eval_eta(x.u)[1].coeffs, 0.0)


def test_eta_linear_in_omega():
    # u3 = (1 + T1) cos t gives eta1 = T1
    x, _ = oracles.make_state(3, {("u3", 1, 1): [1.0, 1.0]}, N=1)
    e1 = model.eval_eta(x.u)[0]
    assert np.allclose(e1.coeffs, [0.0, 1.0])


def test_gamma_triangle_vanishes():
    x = triangle_state()
    g = model.eval_gamma(x.a, x.u, x.w)
    assert abs(g.coeffs[0]) < 1e-15


def test_gamma_without_w():
    x, _ = oracles.make_state(3, {("u1", 1, 2): 0.7, ("u3", 1, 1): 1.0})
    assert np.allclose(model.eval_gamma(x.a, x.u, x.w).coeffs, [-1.0])


def test_gamma_single_mode():
    x, _ = oracles.make_state(3, {("a", 0, 0): 1.0, ("u1", 1, 2): 1.0, ("w", 1, 0): 1.0})
    g = model.eval_gamma(x.a, x.u, x.w)
    d = 1.0 - math.cos(2 * 4 * math.pi / 3)  # u1(0) - u1(4pi/3)
    assert g.coeffs[0] == pytest.approx(d * d - 1.0, abs=1e-14)
    assert g.coeffs[0] == pytest.approx(1.25, abs=1e-14)


# ---- F -------------------------------------------------------------------


def test_triangle_residual_at_one():
    x = triangle_state()
    res = model.eval_F(x, omega=1.0)
    v = res.to_vector(model.equation_layout(4 * x.K)).mid
    assert np.abs(v).max() < 1e-14


def test_triangle_seed_residual():
    K = 8
    lay = model.unknown_layout(K)
    F = model.node_residual(solver.triangle_seed(K), 1.0, lay)
    assert np.abs(F).max() < 1e-14


def test_zero_state():
    x, _ = oracles.make_state(3, {("alpha", 0, 0): 0.25})
    res = model.eval_F(x, omega=0.5)
    assert np.allclose(res.eta[0].coeffs, -1.0) and np.allclose(res.eta[1].coeffs, 0.0)
    assert np.allclose(res.gamma.coeffs, -1.0)
    for c in (*res.f, *res.g):
        assert np.abs(c.coeffs).max() == 0.0
    assert res.h.coeffs[res.h.K, 0] == 0.25 and np.abs(res.h.coeffs).sum() == 0.25


@pytest.mark.parametrize("seed", range(4))
def test_eval_F_matches_pointwise(seed):
    rng = np.random.default_rng(seed)
    x, _ = oracles.random_state(rng, 7, 4)
    res = model.eval_F(x)
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    for om in rng.uniform(0, 1, 5):
        ref = oracles.pointwise_F(x, om, t)
        for name in ("f", "g"):
            for c, r in zip(getattr(res, name), ref[name]):
                assert np.abs(oracles.values(c, t, om) - r).max() <= 1e-11
        assert np.abs(oracles.values(res.h, t, om) - ref["h"]).max() <= 1e-11
        assert abs(res.gamma(om) - ref["gamma"]) <= 1e-11
        assert abs(res.eta[0](om) - ref["eta"][0]) <= 1e-11
        assert abs(res.eta[1](om) - ref["eta"][1]) <= 1e-11


def test_class_violation_raised():
    x = triangle_state()
    bad = oracles.make_state(4, {})[0]
    # a u1 component carrying a sin mode breaks its symmetry class
    u1 = x.u[0]
    c = u1.coeffs.copy()
    c[u1.K + 1, 0] += 0.1j
    c[u1.K - 1, 0] -= 0.1j
    broken = model.State(bad.a, bad.beta, bad.alpha,
                         (type(u1)(c, None, u1.sym, True, u1.domain), *x.u[1:]), x.v, x.w)
    with pytest.raises(model.ClassViolation):
        model.eval_F(broken, omega=0.5)


# ---- DF ------------------------------------------------------------------


def test_DF_linear_blocks():
    K = 5
    x, _ = oracles.random_state(np.random.default_rng(3), K, 0)
    D = model.assemble_DF(x, K, K, omega=0.4)
    M, R, C = D.M.mid[:, :, 0], D.rows, D.cols
    for i in (1, 2, 3):
        fb, vb, ub = R[f"f{i}"], C[f"v{i}"], C[f"u{i}"]
        blk = M[fb.slice, vb.slice]
        assert np.array_equal(blk, -np.eye(fb.size))
        dblk = M[fb.slice, ub.slice]
        # d/dt maps cos-amplitude k to sin-amplitude -k and sin to cos +k
        for j, (kind, k) in enumerate(zip(ub.kinds, ub.ks)):
            col = dblk[:, j]
            if k == 0:
                assert not col.any()
                continue
            tgt = np.nonzero((fb.kinds == 3 - kind) & (fb.ks == k))[0]
            assert col[tgt[0]] == (-k if kind == 1 else k)
            assert np.count_nonzero(col) == 1
    g1, h = R["g1"], R["h"]
    bcol = M[:, C["beta"].start]
    assert bcol[g1.start] == 1.0 and np.count_nonzero(bcol) == 1
    acol = M[:, C["alpha"].start]
    assert acol[h.start] == 1.0 and np.count_nonzero(acol) == 1


def _df_apply(D, h, oms):
    Ms = np.moveaxis(D.M.mid, 2, 0)
    return [CH(omega_to_s(om), Ms) @ CH(omega_to_s(om), h.T) for om in oms]


def _fd(xv, h, eps, lay, R):
    def F(v):
        return model.eval_F(model.State.from_vector(v, lay), check=False).to_vector(R).mid
    return (F(xv + eps * h) - F(xv - eps * h)) / (2 * eps)


@pytest.mark.parametrize("seed", range(3))
def test_DF_finite_differences(seed):
    rng = np.random.default_rng(seed)
    K, N = 6, 3
    x, xv = oracles.random_state(rng, K, N)
    lay, R = model.unknown_layout(K), model.equation_layout(4 * K)
    D = model.assemble_DF(x, 4 * K, K)
    h = rng.standard_normal(xv.shape) * 0.6 ** lay.k[:, None]
    oms = (0.0, 0.37, 1.0)
    exact = _df_apply(D, h, oms)
    errs = []
    for eps in (1e-6, 4e-3, 2e-3, 1e-3):
        fd = _fd(xv, h, eps, lay, R)
        approx = [CH(omega_to_s(om), fd.T) for om in oms]
        errs.append(max(oracles.nu_norm_vec((a - e)[:, None], R, 1.1) / oracles.nu_norm_vec(e[:, None], R, 1.1)
                        for a, e in zip(approx, exact)))
    assert errs[0] <= 1e-5
    orders = np.log2(np.array(errs[1:-1]) / np.array(errs[2:]))
    assert orders.min() >= 1.9


def test_node_jacobian_matches_slice():
    K = 5
    rng = np.random.default_rng(9)
    x, xv = oracles.random_state(rng, K, 3)
    lay = model.unknown_layout(K)
    om = 0.62
    Jfull = CH(omega_to_s(om), np.moveaxis(model.assemble_DF(x, K, K).M.mid, 2, 0))
    Jnode = model.node_jacobian(CH(omega_to_s(om), xv.T), om, lay)
    assert np.abs(Jfull - Jnode).max() < 1e-12


# ---- symmetries ------------------------------------------------------------


def test_sigma_fixes_real_state():
    x, xv = oracles.random_state(np.random.default_rng(4), 5, 2)
    y = model.apply_symmetry(x, "Sigma")
    assert np.allclose(y.to_vector().mid, xv, atol=0, rtol=0)


def test_sigma0_negates_u1():
    x, _ = oracles.make_state(3, {("u1", 1, 2): 1.0})
    y = model.apply_symmetry(x, "Sigma0")
    assert np.array_equal(y.u[0].coeffs, -x.u[0].coeffs)
    assert np.array_equal(y.u[1].coeffs, x.u[1].coeffs)


def test_unknown_symmetry():
    with pytest.raises(ValueError):
        model.apply_symmetry(triangle_state(), "Tau")
