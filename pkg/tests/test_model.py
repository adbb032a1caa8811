import numpy as np
import pytest

from kinshock.errors import ModelError
from kinshock.model import (KineticModel, build_synthetic_model, check_hypotheses, evaluate_Q,
                            linearize_Q, load_model, model_from_text, model_to_text, null_space,
                            save_model)


def test_small_m0_model_passes():
    model = build_synthetic_model(r=1, n=3, velocities=[-1, 0.5, 1], m=0)
    rep = check_hypotheses(model)
    assert rep.passed, rep.failures()
    assert model.v_basis.shape == (3, 2)
    assert np.allclose(np.sort(np.linalg.eigvalsh(model.A)), [-1, 0.5, 1])
    assert rep.spectral_gap_delta > 0


def test_m1_kernel_is_one_dimensional():
    model = build_synthetic_model(r=2, n=6, m=1)
    A11 = model.vperp_basis.T @ model.A @ model.vperp_basis
    assert null_space(A11).shape[1] == 1
    assert check_hypotheses(model).passed


def test_zero_velocity_rejected():
    with pytest.raises(ModelError, match="one-to-one"):
        build_synthetic_model(r=1, n=3, velocities=[-1, 0, 1])


def test_m1_needs_sign_change():
    with pytest.raises(ModelError):
        build_synthetic_model(r=1, n=4, m=1, velocities=[1, 2, 3, 4])


def _with(model, **kw):
    d = dict(A=model.A, vperp_basis=model.vperp_basis, v_basis=model.v_basis, B=model.B,
             u_bar=model.u_bar)
    d.update(kw)
    return KineticModel(**d)


def test_failed_checks_are_reported_not_raised(m0):
    w, V = np.linalg.eigh(m0.A)
    w[0] = 0.0
    bad = _with(m0, A=(V * w) @ V.T)
    rep = check_hypotheses(bad)
    assert "A one-to-one" in rep.failures()
    B = m0.B.copy()
    B[:, 0, 1] += 1e-3
    rep = check_hypotheses(_with(m0, B=B))
    name, ok, res = rep.check("B symmetric")
    assert not ok and res > 1e-10


def test_evaluate_Q(m1, rng):
    assert np.linalg.norm(evaluate_Q(m1, m1.u_bar)) < 1e-13
    assert np.linalg.norm(evaluate_Q(m1, 2 * m1.u_bar)) < 1e-12
    h = 1e-4 * rng.standard_normal(m1.n)
    lin = linearize_Q(m1, m1.u_bar) @ h
    err = np.linalg.norm(evaluate_Q(m1, m1.u_bar + h) - lin)
    assert err < 10 * np.linalg.norm(m1.B.reshape(m1.n, -1), 2) * np.dot(h, h)
    # range in V
    q = evaluate_Q(m1, rng.standard_normal(m1.n))
    assert np.linalg.norm(m1.vperp_basis.T @ q) < 1e-12 * np.linalg.norm(q)


def test_linearize_Q(m1, rng):
    L = linearize_Q(m1, m1.u_bar)
    assert np.allclose(L, L.T, atol=1e-13)
    assert np.linalg.norm(L @ m1.vperp_basis) < 1e-12
    assert not np.any(linearize_Q(m1, np.zeros(m1.n)))
    u, d, s = rng.standard_normal(m1.n), rng.standard_normal(m1.n), 1e-5
    fd = (evaluate_Q(m1, u + s * d) - evaluate_Q(m1, u - s * d)) / (2 * s)
    exact = linearize_Q(m1, u) @ d
    assert np.linalg.norm(fd - exact) < 1e-6 * np.linalg.norm(exact)


def test_bilinear_symmetry(m1, rng):
    x, y = rng.standard_normal((2, m1.n))
    assert np.linalg.norm(m1.bilinear(x, y) - m1.bilinear(y, x)) < 1e-14


def test_text_round_trip(m1, tmp_path):
    again = model_from_text(model_to_text(m1))
    for name in ("A", "B", "vperp_basis", "v_basis", "u_bar"):
        assert np.array_equal(getattr(again, name), getattr(m1, name))
    save_model(m1, tmp_path / "m.json")
    assert np.array_equal(load_model(tmp_path / "m.json").B, m1.B)
