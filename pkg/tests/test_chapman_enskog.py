import math

import numpy as np
import pytest

from kinshock.chapman_enskog import (compute_characteristics, compute_diffusion, compute_flux,
                                     compute_hstar, flux_jacobian, flux_second_derivative,
                                     genuine_nonlinearity, make_chapman_enskog, ns_reference,
                                     solve_equilibrium_graph)
from kinshock.model import build_synthetic_model


@pytest.fixture(scope="module")
def flat():
    return make_chapman_enskog(build_synthetic_model(r=2, n=6, m=1, curvature=0.0, seed=3))


def test_graph_at_u_bar(ced1, m1):
    v = solve_equilibrium_graph(ced1, m1.u_bar_macro)
    assert np.allclose(v, m1.u_bar_micro, atol=1e-13)


def test_flat_graph_is_constant(flat, rng):
    m = flat.model
    for _ in range(5):
        u = m.u_bar_macro + 0.3 * rng.standard_normal(m.r)
        assert np.allclose(solve_equilibrium_graph(flat, u), m.u_bar_micro, atol=1e-13)


def test_graph_residual(ced1, m1, rng):
    u = m1.u_bar_macro + 0.05 * rng.standard_normal(m1.r)
    v = solve_equilibrium_graph(ced1, u)
    state = m1.lift(u, v)
    assert np.linalg.norm(m1.v_basis.T @ m1.bilinear(state, state)) < 1e-12


def test_flux_jacobian_at_u_bar_is_A11(flat):
    u = flat.model.u_bar_macro
    assert np.allclose(flux_jacobian(flat, u, method="fd"), flat.A11, atol=1e-7)
    assert np.allclose(flux_jacobian(flat, u), flat.A11, atol=1e-12)


def test_flat_flux_is_linear(flat, rng):
    u = flat.model.u_bar_macro
    d = rng.standard_normal(flat.model.r)
    t = 0.1
    second = compute_flux(flat, u + t * d) - 2 * compute_flux(flat, u) + compute_flux(flat, u - t * d)
    assert np.linalg.norm(second) < 1e-13
    assert np.linalg.norm(flux_second_derivative(flat, u, d)) < 1e-13


def test_implicit_derivatives_match_differences(ced1, m1, rng):
    u = m1.u_bar_macro + 0.02 * rng.standard_normal(m1.r)
    assert np.allclose(flux_jacobian(ced1, u), flux_jacobian(ced1, u, method="fd"), atol=1e-7)
    d = rng.standard_normal(m1.r)
    exact = flux_second_derivative(ced1, u, d)
    t = 1e-3
    fd = (compute_flux(ced1, u + t * d) - 2 * compute_flux(ced1, u) + compute_flux(ced1, u - t * d)) / t**2
    assert np.allclose(exact, fd, atol=1e-5)


def test_hstar(flat, ced1, m1):
    u = flat.model.u_bar_macro + 0.1
    assert np.allclose(compute_hstar(flat, u, np.eye(flat.model.n)), u, atol=1e-13)
    A0 = np.diag(np.linspace(1, 2, m1.n))
    h = compute_hstar(ced1, m1.u_bar_macro, A0)
    assert np.allclose(h, m1.vperp_basis.T @ A0 @ m1.u_bar, atol=1e-13)


def test_diffusion(ced1):
    D = compute_diffusion(ced1)
    assert np.allclose(D, D.T, atol=1e-14)
    assert np.min(np.linalg.eigvalsh(D)) > -1e-14


def test_diffusion_normalized(m1):
    from kinshock.canonical import macro_micro_split, normalize_E
    from kinshock.chapman_enskog import compute_diffusion_from
    s = normalize_E(macro_micro_split(m1))
    assert np.allclose(compute_diffusion_from(s.E, s.A12), s.A12 @ s.A12.T, atol=1e-13)
    assert np.allclose(compute_diffusion_from(s.E, s.A12), make_chapman_enskog(m1).D_star,
                       atol=1e-12)


def test_characteristics_m1(ced1, m1):
    ch = compute_characteristics(ced1, m1.u_bar_macro)
    assert abs(ch.lambdas[ch.p]) < 1e-8
    assert np.all(np.diff(ch.lambdas) >= 0)
    assert abs(np.linalg.norm(ch.r_bar) - 1) < 1e-14
    assert ch.delta > 0
    assert ch.delta == pytest.approx(ch.r_bar @ ced1.D_star @ ch.r_bar)
    exact = ch.l_bar @ flux_second_derivative(ced1, m1.u_bar_macro, ch.r_bar)
    assert ch.Lambda == pytest.approx(exact, rel=1e-6)


def test_characteristics_flat(flat):
    ch = compute_characteristics(flat, flat.model.u_bar_macro)
    assert abs(genuine_nonlinearity(flat, ch.u, ch.r_bar)) < 1e-9
    assert abs(ch.Lambda) < 1e-9


def test_ns_reference():
    ref = ns_reference(math.pi, 1.0, 1.0, 0.0)
    assert ref.mu == pytest.approx(0.3125) and ref.kappa == pytest.approx(4.6875)
    for T in (0.3, 1.0, 7.0):
        r = ns_reference(T, 1.0, 1.0, 0.0)
        assert r.kappa / r.mu == pytest.approx(15.0)
    r = ns_reference(1.0, 1.0, 0.9, 0.0)
    assert r.c == pytest.approx(1.0)
    assert np.allclose(r.lambdas, (-1, 0, 0, 0, 1))
    with pytest.raises(ValueError):
        ns_reference(-1.0, 1.0, 1.0, 0.0)
