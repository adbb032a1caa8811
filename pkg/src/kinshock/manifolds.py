"""Stable and center manifolds of the canonical steady system at u_bar.

The canonical system is ``w_c' = J w_c + Qc(w)``, ``Gamma0 w_h' = -w_h + Qh(w)``
with ``w = (w_c, w_h)``.  Stable manifolds are computed by Picard iteration of
the integral form on a half line; the center manifold both by order-by-order
Taylor matching of its graph ``w_h = Xi(w_c)`` and by Picard iteration of the
truncated integral equation on ``[-X, X]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.interpolate import make_interp_spline

from . import polynomials as poly
from .canonical import CanonicalSystem
from .errors import ContractionFailure, RadiusExceeded
from .resolvent import (GridFunction, WeightedNorm, apply_resolvent, semigroup_apply,
                        spectral_decompose, weighted_norm)


def _full_tensor(canon):
    return np.concatenate([canon.Qc, canon.Qh], axis=0)


def _quad(T, w):
    return np.einsum("ijk,...j,...k->...i", T, w, w)


def gamma0_norm(canon):
    return float(np.max(np.abs(np.linalg.eigvalsh(canon.Gamma0))))


# --- truncation --------------------------------------------------------------

def cutoff(t):
    """Quintic smoothstep cutoff: 1 on [0, 1], 0 on [2, inf), C^2."""
    s = np.clip(np.asarray(t, float) - 1.0, 0.0, 1.0)
    return 1.0 - s**3 * (10 - 15 * s + 6 * s**2)


def cutoff_derivative(t):
    s = np.clip(np.asarray(t, float) - 1.0, 0.0, 1.0)
    return -30 * s**2 * (1 - s) ** 2


@dataclass(frozen=True, eq=False)
class TruncatedNonlinearity:
    Qc: np.ndarray
    Qh: np.ndarray
    epsilon: float
    bounds: dict = field(default_factory=dict)

    @property
    def n_c(self):
        return self.Qc.shape[0]

    def __call__(self, w):
        w = np.asarray(w, float)
        rho = cutoff(np.linalg.norm(w, axis=-1) / self.epsilon)[..., None]
        q = np.concatenate([_quad(self.Qc, w), _quad(self.Qh, w)], axis=-1)
        return rho * q

    def jacobian(self, w):
        w = np.asarray(w, float)
        T = np.concatenate([self.Qc, self.Qh], axis=0)
        nw = np.linalg.norm(w)
        rho = float(cutoff(nw / self.epsilon))
        dQ = 2 * np.einsum("ijk,k->ij", T, w)
        jac = rho * dQ
        if nw > 0:
            drho = float(cutoff_derivative(nw / self.epsilon)) / (self.epsilon * nw)
            jac += drho * np.outer(_quad(T, w), w)
        return jac


def truncate(canon_or_tensors, epsilon, samples=400, seed=0) -> TruncatedNonlinearity:
    """Wrap Q~ with the cutoff at radius epsilon and measure the bound constants."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if isinstance(canon_or_tensors, CanonicalSystem):
        Qc, Qh = canon_or_tensors.Qc, canon_or_tensors.Qh
    else:
        Qc, Qh = canon_or_tensors
    tr = TruncatedNonlinearity(Qc=np.asarray(Qc, float), Qh=np.asarray(Qh, float),
                               epsilon=float(epsilon))
    rng = np.random.default_rng(seed)
    n = tr.Qc.shape[1]
    d = rng.standard_normal((samples, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    w = d * (2.5 * epsilon * rng.random(samples))[:, None]
    N = tr(w)
    c0 = float(np.max(np.linalg.norm(N, axis=1)) / epsilon**2)
    c1 = max(float(np.linalg.norm(tr.jacobian(x), 2)) for x in w) / epsilon
    # second derivative by differencing the exact Jacobian
    hstep = 1e-6 * epsilon
    c2 = 0.0
    for x, e in zip(w[:50], d[:50]):
        dj = (tr.jacobian(x + hstep * e) - tr.jacobian(x - hstep * e)) / (2 * hstep)
        c2 = max(c2, float(np.linalg.norm(dj, 2)))
    object.__setattr__(tr, "bounds", {"c0": c0, "c1": c1, "c2": c2})
    return tr


# --- stable manifold -------------------------------------------------------------

@dataclass
class StableParams:
    X: float = None
    h: float = 5e-4     # keeps the O(h^2) steady residual below 1e-6 up to the radius
    nu_tilde: float = None
    max_iter: int = 60
    tol: float = 1e-13
    radius: float = None


@dataclass(frozen=True, eq=False)
class StableSolveResult:
    trajectory: GridFunction        # canonical w = (w_c, w_h) on [0, X]
    v0: np.ndarray
    iterations: int
    contraction_factor: float
    fitted_decay_rate: float
    radius: float
    history: tuple


def stable_radius(canon, nu_tilde):
    """Engineering bound on |v0| below which the Picard map contracts."""
    qnorm = float(np.linalg.norm(_full_tensor(canon).reshape(canon.n, -1), 2))
    return 0.25 * nu_tilde * min(1.0, nu_tilde) / max(qnorm, 1e-300)


def _h1_norm(x, vals):
    return weighted_norm(GridFunction(x, vals), WeightedNorm(0.0, "H1"))


def _tail_integral(x, f, J):
    """-int_tau^X e^{J(tau - theta)} f(theta) d theta on the grid (J^2 = 0)."""
    I0 = cumulative_trapezoid(f, x, axis=0, initial=0.0)
    I1 = cumulative_trapezoid(x[:, None] * f, x, axis=0, initial=0.0)
    T0 = I0[-1] - I0
    T1 = I1[-1] - I1
    return -(T0 + (x[:, None] * T0 - T1) @ J.T)


def fit_decay_rate(x, vals, start_fraction=0.5):
    """-slope of a least-squares fit of log|w(x)| over the last part of the grid."""
    x = np.asarray(x, float)
    nrm = np.linalg.norm(np.atleast_2d(np.asarray(vals, float).T).T, axis=-1) \
        if np.ndim(vals) > 1 else np.abs(vals)
    k0 = int(start_fraction * (x.size - 1))
    xs, ns = x[k0:], nrm[k0:]
    good = ns > 0
    if good.sum() < 2:
        return math.inf
    return float(-np.polyfit(xs[good], np.log(ns[good]), 1)[0])


def solve_stable(canon: CanonicalSystem, v0, params: StableParams = None) -> StableSolveResult:
    """Point on the local stable manifold parametrised by v0 in the stable eigenspace."""
    params = params or StableParams()
    decomp = spectral_decompose(canon.Gamma0)
    nu = 1.0 / gamma0_norm(canon)
    nu_tilde = params.nu_tilde if params.nu_tilde is not None else 0.8 * nu
    X = params.X if params.X is not None else 20.0 / nu_tilde
    radius = params.radius if params.radius is not None else stable_radius(canon, nu_tilde)
    v0 = np.asarray(v0, float)
    if np.linalg.norm(v0 - semigroup_apply(decomp, 0.0, v0)) > 1e-10 * max(1.0, np.linalg.norm(v0)):
        raise ValueError("v0 must lie in the stable eigenspace of Gamma0")
    if np.linalg.norm(v0) > radius:
        raise RadiusExceeded(f"|v0| = {np.linalg.norm(v0):.3e} exceeds radius {radius:.3e}")

    n_c = canon.n_c
    nsteps = int(math.ceil(X / params.h))
    x = np.linspace(0.0, nsteps * params.h, nsteps + 1)
    w = np.zeros((x.size, canon.n))
    w[:, n_c:] = semigroup_apply(decomp, x, v0)
    history = []
    factor = 0.0
    prev = None
    for it in range(1, params.max_iter + 1):
        qc = _quad(canon.Qc, w)
        qh = _quad(canon.Qh, w)
        new = np.empty_like(w)
        new[:, :n_c] = _tail_integral(x, qc, canon.J)
        a = semigroup_apply(decomp, 0.0, v0 - qh[0])
        new[:, n_c:] = semigroup_apply(decomp, x, a) + apply_resolvent(decomp, GridFunction(x, qh)).values
        diff = _h1_norm(x, new - w)
        w = new
        if prev is not None and prev > 0:
            factor = diff / prev
            history.append(factor)
            if len(history) >= 3 and all(f >= 1 for f in history[-2:]):
                raise ContractionFailure(factor, it)
        prev = diff
        if diff <= params.tol * max(1.0, _h1_norm(x, w)):
            break
    else:
        raise ContractionFailure(factor, params.max_iter)
    if history:
        factor = max(history[: max(1, len(history))])
    rate = fit_decay_rate(x, w)
    return StableSolveResult(trajectory=GridFunction(x, w), v0=v0, iterations=it,
                             contraction_factor=float(factor), fitted_decay_rate=rate,
                             radius=radius, history=tuple(history))


def stable_graph_eval(canon, v0, params=None):
    """w(0) on the stable manifold over v0 (canonical coordinates)."""
    if np.linalg.norm(v0) == 0:
        return np.zeros(canon.n)
    return solve_stable(canon, v0, params).trajectory.values[0].copy()


def stable_graph_complement(canon, w0):
    """(I - Pi_S) w(0): the part of a graph point off the stable eigenspace."""
    decomp = spectral_decompose(canon.Gamma0)
    out = np.array(w0, float)
    out[canon.n_c:] -= semigroup_apply(decomp, 0.0, out[canon.n_c:])
    return out


def steady_residual(canon, x, w, derivative="spline"):
    """max_x |w_c' - J w_c - Qc| + |Gamma0 w_h' + w_h - Qh| for a sampled trajectory."""
    x = np.asarray(x, float)
    w = np.asarray(w, float)
    if derivative == "spline":
        dw = make_interp_spline(x, w, k=5, axis=0).derivative()(x)
    else:
        dw = np.gradient(w, x, axis=0, edge_order=2)
    n_c = canon.n_c
    rc = dw[:, :n_c] - w[:, :n_c] @ canon.J.T - _quad(canon.Qc, w)
    rh = dw[:, n_c:] @ canon.Gamma0.T + w[:, n_c:] - _quad(canon.Qh, w)
    return float(np.max(np.linalg.norm(rc, axis=1) + np.linalg.norm(rh, axis=1)))


# --- center manifold: Taylor matching -------------------------------------------

@dataclass(frozen=True, eq=False)
class CenterGraphTaylor:
    order: int
    coefficients: dict          # {exponent tuple over w_c: w_h vector}
    residual_by_order: dict
    n_c: int
    n_h: int
    _evaluator: poly.PolyEvaluator = None
    _canon: object = None

    def coefficients_of_order(self, j):
        return poly.homogeneous_part(self.coefficients, j)

    def __call__(self, wc):
        return self._evaluator(wc)

    def jacobian(self, wc):
        return self._evaluator.jacobian(wc)

    def residual(self, wc):
        return taylor_residual(self._canon, self, wc)


def _embed_graph(n_c, n_h, Xi):
    """z(w_c) = (w_c, Xi(w_c)) as a polynomial with full-length vector values."""
    z = {}
    for i in range(n_c):
        e = [0] * n_c
        e[i] = 1
        c = np.zeros(n_c + n_h)
        c[i] = 1.0
        z[tuple(e)] = c
    for e, c in Xi.items():
        z[e] = np.concatenate([np.zeros(n_c), c])
    return z


def _invert_unipotent(rhs, Gamma0, Jfield, deg):
    """Solve P + Gamma0 DP[J w_c] = rhs on homogeneous polynomials of degree deg."""
    sol = dict(rhs)
    term = rhs
    for _ in range(deg + 2):
        term = poly.linear_map(poly.directional_derivative(term, Jfield, deg), -Gamma0)
        if not term or poly.is_zero(term):
            break
        for e, c in term.items():
            poly.add_into(sol, e, c)
    return sol


def center_taylor(canon, k, probe_s=1e-2, seed=0) -> CenterGraphTaylor:
    """Taylor coefficients Xi_2..Xi_k of the center-manifold graph."""
    if k < 2:
        raise ValueError("k must be at least 2")
    n_c, n_h = canon.n_c, canon.n_h
    G0 = np.asarray(canon.Gamma0, float)
    Jfield = {}
    for i in range(n_c):
        e = [0] * n_c
        e[i] = 1
        if np.any(canon.J[:, i]):
            Jfield[tuple(e)] = canon.J[:, i].astype(float)
    Xi = {}
    residuals = {}
    for j in range(2, k + 1):
        z = _embed_graph(n_c, n_h, Xi)
        qh = poly.homogeneous_part(poly.bilinear(canon.Qh, z, z, j), j)
        qc = poly.bilinear(canon.Qc, z, z, j - 1)
        corr = poly.homogeneous_part(poly.directional_derivative(Xi, qc, j), j)
        rhs = dict(qh)
        for e, c in corr.items():
            poly.add_into(rhs, e, -G0 @ c)
        for e in poly.monomials(n_c, j):
            rhs.setdefault(e, np.zeros(n_h))
        for e, c in _invert_unipotent(rhs, G0, Jfield, j).items():
            Xi[e] = c
        partial = _make_taylor(canon, j, Xi, {})
        residuals[j] = _probe_residual(canon, partial, probe_s, seed)
    return _make_taylor(canon, k, Xi, residuals)


def _make_taylor(canon, k, Xi, residuals):
    coeffs = {e: np.array(c) for e, c in Xi.items()}
    ev = poly.PolyEvaluator(coeffs, canon.n_c, canon.n_h)
    return CenterGraphTaylor(order=k, coefficients=coeffs, residual_by_order=dict(residuals),
                             n_c=canon.n_c, n_h=canon.n_h, _evaluator=ev, _canon=canon)


def taylor_residual(canon, taylor, wc):
    """Xi + Gamma0 DXi[J w_c + Qc(z)] - Qh(z) at z = (w_c, Xi(w_c))."""
    wc = np.asarray(wc, float)
    xi = taylor(wc)
    z = np.concatenate([wc, xi], axis=-1)
    flow = wc @ canon.J.T + _quad(canon.Qc, z)
    dxi = np.einsum("...ij,...j->...i", taylor.jacobian(wc), flow)
    return xi + dxi @ np.asarray(canon.Gamma0).T - _quad(canon.Qh, z)


def _probe_residual(canon, taylor, s, seed, samples=8):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((samples, canon.n_c))
    d *= s / np.linalg.norm(d, axis=1, keepdims=True)
    return float(np.max(np.linalg.norm(taylor_residual(canon, taylor, d), axis=1)))


def taylor_residual_sweep(canon, taylor, s_values, seed=0, samples=8):
    """Rows (s, max residual over random w_c with |w_c| = s)."""
    return [(float(s), _probe_residual(canon, taylor, s, seed, samples)) for s in s_values]


# --- center manifold: truncated fixed point -----------------------------------------

@dataclass
class CenterParams:
    X: float = None
    h: float = 2e-3
    max_iter: int = 80
    tol: float = 1e-14


@dataclass(frozen=True, eq=False)
class CenterSolveResult:
    trajectory: GridFunction
    iterations: int
    contraction_ratios: tuple
    graph_value: np.ndarray         # Pi_h w(0)


def default_weights(canon):
    nu = 1.0 / gamma0_norm(canon)
    return {"alpha": nu / 10, "alpha1": nu / 100, "alpha2": nu / 2}


def _volterra(x, f, J, i0):
    """int_0^tau e^{J(tau - theta)} f(theta) d theta on a grid with x[i0] = 0."""
    I0 = cumulative_trapezoid(f, x, axis=0, initial=0.0)
    I1 = cumulative_trapezoid(x[:, None] * f, x, axis=0, initial=0.0)
    I0 = I0 - I0[i0]
    I1 = I1 - I1[i0]
    return I0 + (x[:, None] * I0 - I1) @ J.T


def solve_center_fixed_point(canon, w0c, trunc: TruncatedNonlinearity, weights=None,
                             params: CenterParams = None) -> CenterSolveResult:
    params = params or CenterParams()
    weights = weights or default_weights(canon)
    nu = 1.0 / gamma0_norm(canon)
    alpha, alpha2 = weights["alpha"], weights["alpha2"]
    if not (0 < alpha < alpha2 <= 0.5 * nu * (1 + 1e-12)):
        raise ValueError("need 0 < alpha < alpha2 <= nu/2")
    w0c = np.asarray(w0c, float)
    if np.linalg.norm(w0c) > trunc.epsilon:
        raise RadiusExceeded("|w0c| exceeds the truncation radius")
    norm = WeightedNorm(kind="mixed", alpha=alpha, alpha2=alpha2,
                        alpha1=weights.get("alpha1", alpha / 10))
    decomp = spectral_decompose(canon.Gamma0)
    X = params.X if params.X is not None else 20.0 / nu
    n = int(math.ceil(X / params.h))
    x = np.arange(-n, n + 1) * params.h
    i0 = n
    n_c = canon.n_c
    lin = w0c[None, :] + x[:, None] * (w0c @ canon.J.T)[None, :]
    w = np.zeros((x.size, canon.n))
    w[:, :n_c] = lin
    ratios = []
    prev = None
    for it in range(1, params.max_iter + 1):
        N = trunc(w)
        new = np.empty_like(w)
        if canon.m:
            new[:, :n_c] = lin + _volterra(x, N[:, :n_c], canon.J, i0)
        else:
            new[:, :n_c] = lin
        new[:, n_c:] = apply_resolvent(decomp, GridFunction(x, N[:, n_c:])).values
        diff = weighted_norm(GridFunction(x, new - w), norm)
        w = new
        if prev:
            ratios.append(diff / prev)
            if len(ratios) >= 3 and all(r >= 1 for r in ratios[-2:]):
                raise ContractionFailure(ratios[-1], it)
        prev = diff
        if diff <= params.tol * max(1.0, weighted_norm(GridFunction(x, w), norm)):
            break
    else:
        raise ContractionFailure(ratios[-1] if ratios else math.nan, params.max_iter)
    return CenterSolveResult(trajectory=GridFunction(x, w), iterations=it,
                             contraction_ratios=tuple(ratios),
                             graph_value=w[i0, n_c:].copy())


@dataclass(frozen=True)
class ExpApproximation:
    rate_fit: float
    passed: bool
    start: float


def exp_approximation_check(canon, trajectory: GridFunction, taylor, nu_tilde,
                            start=None, radius=None, floor=1e-13) -> ExpApproximation:
    """Decay rate of |Pi_h w - Xi(Pi_c w)| along a trajectory, fitted on [start, X]."""
    x = np.asarray(trajectory.x, float)
    w = np.asarray(trajectory.values, float)
    start = x[0] + 0.25 * (x[-1] - x[0]) if start is None else start
    mask = x >= start
    if radius is not None and np.max(np.linalg.norm(w[mask], axis=1)) > radius:
        raise RadiusExceeded("trajectory leaves the truncation radius beyond the fit start")
    d = np.linalg.norm(w[mask, canon.n_c:] - taylor(w[mask, :canon.n_c]), axis=1)
    keep = d > floor
    if keep.sum() < 10:
        return ExpApproximation(math.inf, True, float(start))
    rate = float(-np.polyfit(x[mask][keep], np.log(d[keep]), 1)[0])
    return ExpApproximation(rate, bool(rate >= nu_tilde), float(start))


def invariance_drift(canon, taylor, wc, step):
    """Distance from the Taylor graph after one DOP853 step of the canonical flow."""
    G0inv = np.linalg.inv(canon.Gamma0)
    n_c = canon.n_c

    def rhs(_, z):
        dc = canon.J @ z[:n_c] + _quad(canon.Qc, z)
        dh = G0inv @ (-z[n_c:] + _quad(canon.Qh, z))
        return np.concatenate([dc, dh])

    z0 = np.concatenate([wc, taylor(wc)])
    sol = solve_ivp(rhs, (0.0, step), z0, method="DOP853", rtol=1e-13, atol=1e-18)
    z1 = sol.y[:, -1]
    return float(np.linalg.norm(z1[n_c:] - taylor(z1[:n_c])))
