import dataclasses

import numpy as np
import pytest

from kinshock.canonical import reduce_model
from kinshock.chapman_enskog import (characteristic_speed, compute_characteristics, compute_flux,
                                     make_chapman_enskog)
from kinshock.errors import NotGenuinelyNonlinear
from kinshock.fitting import fit_order
from kinshock.manifolds import center_taylor
from kinshock.model import build_synthetic_model
from kinshock.profiles import (blowup_rescale_check, build_normal_form, burgers_residual,
                               compare_profiles, compute_relaxation_profile,
                               compute_viscous_profile, exact_burgers, solve_rankine_hugoniot,
                               stretched_grid)


def test_rh_trivial(m0, m1, ced1):
    ced0 = make_chapman_enskog(m0)
    for ced, m in ((ced0, m0), (ced1, m1)):
        sols = solve_rankine_hugoniot(ced, compute_flux(ced, m.u_bar_macro))
        assert len(sols) == 1 and sols[0].eps == 0.0
        assert np.allclose(sols[0].u_minus, sols[0].u_plus)


@pytest.mark.parametrize("eps", [0.01, 0.02, 0.04, 0.08])
def test_rh_gap(canon1, ced1, eps):
    nf = build_normal_form(canon1, ced1, eps)
    assert nf.q1 * nf.Lambda > 0
    rh = solve_rankine_hugoniot(ced1, nf.q)[0]
    K = canon1.decomposition.ker_basis[:, 0]
    gap = abs((rh.u_plus - rh.u_minus) @ K)
    assert gap == pytest.approx(2 * np.sqrt(2 * abs(nf.q1 / nf.Lambda)), rel=0.1)
    assert rh.lax_type and rh.lambda_minus > 0 > rh.lambda_plus
    for u in (rh.u_minus, rh.u_plus):
        assert np.linalg.norm(compute_flux(ced1, u) - nf.q) < 1e-11


def test_exact_burgers():
    x = np.linspace(-400, 400, 8001)
    eta, deta = exact_burgers(0.1, 0.5, 0.2, x)
    assert eta[0] == pytest.approx(0.1) and eta[-1] == pytest.approx(-0.1)
    assert np.max(np.abs(burgers_residual(eta, deta, 0.1, 0.5, 0.2))) < 1e-16
    # |d/dx (eta - eta+-)| decays at rate Lambda eps / delta
    tail = (x > 20) & (x < 200)
    rate = -np.polyfit(x[tail], np.log(np.abs(deta[tail])), 1)[0]
    assert rate == pytest.approx(0.5 * 0.1 / 0.2, rel=1e-3)
    with pytest.raises(ValueError):
        exact_burgers(0.1, 0.0, 0.2, x)


def test_normal_form(canon1, ced1, m1):
    nf = build_normal_form(canon1, ced1, 0.0)
    assert nf.zeta == 0.0 and nf.q1 == 0.0
    ch = compute_characteristics(ced1, m1.u_bar_macro)
    assert abs(nf.delta - ch.delta) < 1e-10
    assert nf.Lambda == pytest.approx(ch.Lambda, rel=1e-6)
    rem = [build_normal_form(canon1, ced1, 2.0**-j).remainder_bound for j in range(3, 8)]
    assert max(rem) < 2 * min(rem)


def test_flat_model_rejected():
    flat = build_synthetic_model(r=2, n=6, m=1, curvature=0.0, seed=3)
    canon = reduce_model(flat)
    with pytest.raises(NotGenuinelyNonlinear):
        build_normal_form(canon, make_chapman_enskog(flat), 0.05)
    with pytest.raises(NotGenuinelyNonlinear):
        blowup_rescale_check(np.zeros(5), np.linspace(0, 1, 5), 0.1, 0.0, 1.0)


def test_relaxation_trivial(canon1, ced1, taylor1, m1):
    nf = build_normal_form(canon1, ced1, 0.0, taylor1)
    prof = compute_relaxation_profile(canon1, taylor1, nf, np.linspace(-1, 1, 11))
    assert np.allclose(prof.states, m1.u_bar)
    low = dataclasses.replace(taylor1, order=2)
    nf = build_normal_form(canon1, ced1, 0.04, taylor1)
    with pytest.raises(ValueError):
        compute_relaxation_profile(canon1, low, nf, np.linspace(-1, 1, 11))


def test_profile_pair_properties(sweep_pairs, m1):
    for pair in sweep_pairs:
        assert np.all(np.diff(pair.lambda_rel) < 0)
        assert np.all(np.diff(pair.lambda_ce) < 0)
        assert pair.viscous.endstate_error < 1e-8
        assert pair.metrics["endstate_approach"] < 1.1 * pair.eps
        assert pair.conservation < 1e-7 * np.linalg.norm(pair.normal_form.q)


def test_viscous_trivial(ced1, m1):
    rh = solve_rankine_hugoniot(ced1, compute_flux(ced1, m1.u_bar_macro))[0]
    prof = compute_viscous_profile(ced1, rh, np.linspace(-1, 1, 5))
    assert np.allclose(prof.u, m1.u_bar_macro)


def test_viscous_matches_burgers(sweep_pairs, canon1, m1):
    K = canon1.decomposition.ker_basis[:, 0]
    errs = []
    for pair in sweep_pairs[:3]:
        nf = pair.normal_form
        u1 = (pair.viscous.u - m1.u_bar_macro) @ K
        mid = 0.5 * ((pair.rh.u_minus + pair.rh.u_plus) - 2 * m1.u_bar_macro) @ K
        errs.append(np.max(np.abs(u1 - mid - pair.eta_bar)))
    assert fit_order([p.eps for p in sweep_pairs[:3]], errs) >= 1.7


def test_compare_orders(sweep_pairs):
    rep = compare_profiles(sweep_pairs)
    assert rep.all_passed, rep.orders
    assert 1.7 <= rep.orders["u_diff_j0"] <= 2.5
    assert rep.orders["eta_gap"] == pytest.approx(2.0, abs=0.3)


def test_compare_identical(sweep_pairs):
    same = []
    for p in sweep_pairs[:2]:
        zero = {k: 0.0 for k in p.metrics}
        same.append(dataclasses.replace(p, metrics=zero))
    rep = compare_profiles(same)
    assert all(o == np.inf for o in rep.orders.values())
    assert all(rep.passed.values())


def test_blowup(sweep_pairs):
    x = np.linspace(-50, 50, 2001)
    eta, _ = exact_burgers(0.05, 0.7, 0.3, x)
    assert blowup_rescale_check(eta, x, 0.05, 0.7, 0.3).forcing_sup < 1e-8
    forcing = [p.metrics["blowup_forcing"] for p in sweep_pairs]
    assert fit_order([p.eps for p in sweep_pairs], forcing) >= 0.8


def test_stretched_grid():
    x = stretched_grid(0.1, -0.5, 0.2, half_width=4, points_per_unit=10)
    assert x.size == 81 and x[-1] == pytest.approx(4 * 0.2 / (0.5 * 0.1))
