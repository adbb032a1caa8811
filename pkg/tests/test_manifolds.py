import dataclasses

import numpy as np
import pytest

from kinshock.canonical import reduce_model
from kinshock.errors import RadiusExceeded
from kinshock.fitting import fit_order
from kinshock.manifolds import (CenterParams, StableParams, center_taylor, cutoff,
                                exp_approximation_check, gamma0_norm, invariance_drift,
                                solve_center_fixed_point, solve_stable, stable_graph_complement,
                                stable_graph_eval, stable_radius, steady_residual, taylor_residual,
                                taylor_residual_sweep, truncate)
from kinshock.model import build_synthetic_model
from kinshock.resolvent import GridFunction, semigroup_apply, spectral_decompose


def _stable_direction(canon, seed=0):
    d = spectral_decompose(canon.Gamma0)
    s = d.stable_indices
    v = d.vectors[:, s] @ np.random.default_rng(seed).standard_normal(s.size)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="module")
def flat0():
    return reduce_model(build_synthetic_model(r=2, n=6, m=0, curvature=0.0, seed=4))


def test_cutoff():
    assert cutoff(0.3) == 1.0 and cutoff(1.0) == 1.0 and cutoff(2.0) == 0.0 and cutoff(5.0) == 0.0
    t = np.linspace(1, 2, 101)
    assert np.all(np.diff(cutoff(t)) <= 0)


def test_truncate(canon1, rng):
    eps = 0.05
    tr = truncate(canon1, eps)
    w = rng.standard_normal(canon1.n)
    inner = 0.9 * eps * w / np.linalg.norm(w)
    exact = np.concatenate([canon1.Qc_eval(inner), canon1.Qh_eval(inner)])
    assert np.array_equal(tr(inner), exact)
    assert not np.any(tr(2.1 * eps * w / np.linalg.norm(w)))
    c0 = [truncate(canon1, 2.0**-j).bounds["c0"] for j in range(2, 9)]
    assert max(c0) / min(c0) < 1.5
    # exact Jacobian against differences
    x = 1.5 * eps * w / np.linalg.norm(w)
    e = rng.standard_normal(canon1.n)
    fd = (tr(x + 1e-7 * e) - tr(x - 1e-7 * e)) / 2e-7
    assert np.allclose(tr.jacobian(x) @ e, fd, atol=1e-7)


def test_stable_zero(canon0):
    assert not np.any(stable_graph_eval(canon0, np.zeros(canon0.n_h)))
    res = solve_stable(canon0, np.zeros(canon0.n_h))
    assert not np.any(res.trajectory.values)


def test_stable_linear(canon0):
    lin = dataclasses.replace(canon0, Qc=0 * canon0.Qc, Qh=0 * canon0.Qh)
    v0 = 0.01 * _stable_direction(canon0)
    res = solve_stable(lin, v0)
    d = spectral_decompose(canon0.Gamma0)
    x = res.trajectory.x
    assert np.allclose(res.trajectory.values[:, canon0.n_c:], semigroup_apply(d, x, v0), atol=1e-15)
    assert res.fitted_decay_rate >= 1 / gamma0_norm(canon0) * (1 - 1e-6)


def test_stable_generic(canon0):
    nu_t = 0.8 / gamma0_norm(canon0)
    r = stable_radius(canon0, nu_t)
    res = solve_stable(canon0, 0.5 * r * _stable_direction(canon0), StableParams(nu_tilde=nu_t))
    assert res.iterations <= 20
    assert res.contraction_factor < 0.5
    assert res.fitted_decay_rate >= nu_t
    assert steady_residual(canon0, res.trajectory.x, res.trajectory.values) < 1e-6
    # the residual is grid error: second order in h, below 1e-7 once h = 5e-4
    resid = []
    for h in (1e-3, 5e-4):
        fine = solve_stable(canon0, 0.25 * r * _stable_direction(canon0),
                            StableParams(nu_tilde=nu_t, h=h))
        resid.append(steady_residual(canon0, fine.trajectory.x, fine.trajectory.values))
    assert resid[1] < 1e-7
    assert np.log2(resid[0] / resid[1]) > 1.8
    with pytest.raises(RadiusExceeded):
        solve_stable(canon0, 2 * r * _stable_direction(canon0))
    with pytest.raises(ValueError):
        solve_stable(canon0, 1e-3 * _unstable(canon0))


def _unstable(canon):
    d = spectral_decompose(canon.Gamma0)
    return d.vectors[:, d.unstable_indices[0]]


def test_stable_tangency(canon0):
    nu_t = 0.8 / gamma0_norm(canon0)
    r = stable_radius(canon0, nu_t)
    d = _stable_direction(canon0, 1)
    amps = r * 2.0 ** -np.arange(1, 5)
    gaps = [np.linalg.norm(stable_graph_complement(canon0, stable_graph_eval(canon0, a * d)))
            for a in amps]
    assert fit_order(amps, gaps) >= 1.8


def test_taylor_flat_is_zero(flat0):
    t = center_taylor(flat0, 3)
    assert all(np.max(np.abs(c)) < 1e-13 for c in t.coefficients.values())


def test_taylor_order_two_m0(canon0):
    t = center_taylor(canon0, 2)
    n_c = canon0.n_c
    Qhc = canon0.Qh[:, :n_c, :n_c]
    wc = np.array([0.3, -0.2])
    assert np.allclose(t(wc), np.einsum("ijk,j,k->i", Qhc, wc, wc), atol=1e-14)


def test_taylor_residual_order(canon1, taylor1):
    rows = taylor_residual_sweep(canon1, taylor1, [1e-3, 2e-3, 4e-3, 8e-3])
    assert fit_order([r[0] for r in rows], [r[1] for r in rows]) >= 3.7
    assert np.allclose(taylor_residual(canon1, taylor1, np.zeros(canon1.n_c)), 0)
    assert set(taylor1.residual_by_order) == {2, 3}


def test_invariance_drift(canon1, taylor1):
    wc = 1e-2 * np.ones(canon1.n_c) / np.sqrt(canon1.n_c)
    assert invariance_drift(canon1, taylor1, wc, 0.1) < 1e-7


def test_center_zero_and_flat(canon1, flat0):
    tr = truncate(canon1, 0.1)
    res = solve_center_fixed_point(canon1, np.zeros(canon1.n_c), tr, params=CenterParams(h=1e-2))
    assert not np.any(res.trajectory.values)
    w0 = np.array([0.02, -0.01])
    res = solve_center_fixed_point(flat0, w0, truncate(flat0, 0.1), params=CenterParams(h=1e-2))
    w = res.trajectory.values
    assert np.max(np.abs(w[:, flat0.n_c:])) < 1e-14
    assert np.allclose(w[:, :flat0.n_c], w0, atol=0)


def test_center_agrees_with_taylor(canon1, taylor1):
    tr = truncate(canon1, 0.1)
    d = np.random.default_rng(0).standard_normal(canon1.n_c)
    d /= np.linalg.norm(d)
    s = [0.0025, 0.005, 0.01, 0.02]
    errs = [np.linalg.norm(solve_center_fixed_point(canon1, a * d, tr).graph_value - taylor1(a * d))
            for a in s]
    assert fit_order(s, errs) >= 3.7


def test_exp_approximation(canon1, taylor1):
    nu_t = 0.8 / gamma0_norm(canon1)
    r = stable_radius(canon1, nu_t)
    res = solve_stable(canon1, 0.5 * r * _stable_direction(canon1), StableParams(nu_tilde=nu_t))
    chk = exp_approximation_check(canon1, res.trajectory, taylor1, nu_t)
    assert chk.passed and chk.rate_fit >= nu_t
    # a trajectory on the graph: vacuous pass
    x = np.linspace(0, 5, 501)
    wc = np.zeros((x.size, canon1.n_c))
    on = GridFunction(x, np.concatenate([wc, taylor1(wc)], axis=1))
    assert exp_approximation_check(canon1, on, taylor1, nu_t).passed
    with pytest.raises(RadiusExceeded):
        exp_approximation_check(canon1, res.trajectory, taylor1, nu_t, radius=1e-12)
