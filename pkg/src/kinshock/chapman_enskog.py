"""Equilibrium graph, hydrodynamic flux and diffusion of a kinetic model.

Macro coordinates ``u`` are taken with respect to ``model.vperp_basis`` and
micro coordinates ``v`` with respect to ``model.v_basis``; both are absolute
(not offsets from the background equilibrium).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError, NonConvergence, NonSimpleEigenvalue
from .model import KineticModel, evaluate_Q, linearize_Q
from .textio import write_csv

EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class ChapmanEnskogData:
    model: KineticModel
    E: np.ndarray
    D_star: np.ndarray
    A11: np.ndarray
    A12: np.ndarray
    newton_tol: float = 1e-12
    newton_max_iter: int = 25
    basin_radius: float = math.inf


@dataclass(frozen=True, eq=False)
class CharacteristicData:
    u: np.ndarray
    lambdas: np.ndarray
    r_bar: np.ndarray
    l_bar: np.ndarray  # left eigenvector, normalised so that l_bar . r_bar = 1
    p: int
    Lambda: float
    delta: float


def fix_sign(vec, rtol=1e-8):
    """Flip ``vec`` so that its first non-negligible component is positive."""
    vec = np.asarray(vec, dtype=float)
    big = np.max(np.abs(vec)) if vec.size else 0.0
    for x in vec:
        if abs(x) > rtol * big:
            return vec if x > 0 else -vec
    return vec


def make_chapman_enskog(model: KineticModel, newton_tol=1e-12, newton_max_iter=25):
    P, W = model.vperp_basis, model.v_basis
    L = linearize_Q(model, model.u_bar)
    E = W.T @ L @ W
    E = 0.5 * (E + E.T)
    A11 = P.T @ model.A @ P
    A12 = P.T @ model.A @ W
    D = compute_diffusion_from(E, A12)
    normB = np.linalg.norm(model.B.reshape(model.n, -1), 2)
    gap = -np.max(np.linalg.eigvalsh(E))
    radius = 0.5 * gap / normB if normB > 0 else math.inf
    return ChapmanEnskogData(model=model, E=E, D_star=D, A11=A11, A12=A12,
                             newton_tol=newton_tol, newton_max_iter=newton_max_iter,
                             basin_radius=radius)


def compute_diffusion_from(E, A12):
    """D* = A12 (-E)^{-1} A12^T (positive semidefinite for E < 0)."""
    E = np.asarray(E, float)
    if E.size and np.max(np.linalg.eigvalsh(0.5 * (E + E.T))) >= 0:
        raise ModelError("E must be negative definite")
    D = A12 @ np.linalg.solve(-E, A12.T)
    return 0.5 * (D + D.T)


def compute_diffusion(ced: ChapmanEnskogData):
    return compute_diffusion_from(ced.E, ced.A12)


def _micro_residual(model, u, v):
    state = model.lift(u, v)
    return model.v_basis.T @ evaluate_Q(model, state), state


def solve_equilibrium_graph(ced: ChapmanEnskogData, u, v_guess=None):
    """Micro part v*(u) of the equilibrium with macro part ``u`` (Newton)."""
    model = ced.model
    W = model.v_basis
    u = np.asarray(u, dtype=float)
    v = model.u_bar_micro.copy() if v_guess is None else np.array(v_guess, float)
    res = math.inf
    for it in range(ced.newton_max_iter + 1):
        F, state = _micro_residual(model, u, v)
        res = float(np.linalg.norm(F))
        if res <= ced.newton_tol:
            # one extra step polishes to round-off at negligible cost
            Jv = W.T @ linearize_Q(model, state) @ W
            return v - np.linalg.solve(Jv, F)
        if it == ced.newton_max_iter:
            break
        Jv = W.T @ linearize_Q(model, state) @ W
        v = v - np.linalg.solve(Jv, F)
        if not np.all(np.isfinite(v)):
            break
    raise NonConvergence(ced.newton_max_iter, res)


def equilibrium_state(ced, u, v_guess=None):
    return ced.model.lift(u, solve_equilibrium_graph(ced, u, v_guess))


def equilibrium_graph_jacobian(ced, u, v=None):
    """dv*/du from the implicit function theorem."""
    model = ced.model
    P, W = model.vperp_basis, model.v_basis
    if v is None:
        v = solve_equilibrium_graph(ced, u)
    Lq = linearize_Q(model, model.lift(u, v))
    return -np.linalg.solve(W.T @ Lq @ W, W.T @ Lq @ P)


def compute_flux(ced: ChapmanEnskogData, u, v_guess=None):
    """f*(u) = P_Vperp A (u, v*(u))."""
    model = ced.model
    v = solve_equilibrium_graph(ced, u, v_guess)
    return model.vperp_basis.T @ (model.A @ model.lift(u, v))


def compute_hstar(ced: ChapmanEnskogData, u, A0):
    A0 = np.asarray(A0, float)
    if not np.allclose(A0, A0.T) or np.min(np.linalg.eigvalsh(0.5 * (A0 + A0.T))) <= 0:
        raise ModelError("A0 must be symmetric positive definite")
    model = ced.model
    v = solve_equilibrium_graph(ced, u)
    return model.vperp_basis.T @ (A0 @ model.lift(u, v))


def flux_jacobian(ced: ChapmanEnskogData, u, method="implicit", step=None):
    """f*'(u), either exactly through dv*/du or by central differences."""
    u = np.asarray(u, dtype=float)
    if method == "implicit":
        v = solve_equilibrium_graph(ced, u)
        return ced.A11 + ced.A12 @ equilibrium_graph_jacobian(ced, u, v)
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    h = step if step is not None else EPS ** (1 / 3) * max(1.0, np.linalg.norm(u))
    r = u.size
    J = np.empty((r, r))
    for k in range(r):
        e = np.zeros(r)
        e[k] = h
        J[:, k] = (compute_flux(ced, u + e) - compute_flux(ced, u - e)) / (2 * h)
    return J


def flux_second_derivative(ced, u, d):
    """f*''(u)(d, d) from the quadratic structure of Q (no differencing)."""
    model = ced.model
    P, W = model.vperp_basis, model.v_basis
    v = solve_equilibrium_graph(ced, u)
    state = model.lift(u, v)
    dv = equilibrium_graph_jacobian(ced, u, v) @ d
    direction = P @ d + W @ dv
    Lq = linearize_Q(model, state)
    vpp = -np.linalg.solve(W.T @ Lq @ W, 2.0 * W.T @ model.bilinear(direction, direction))
    return ced.A12 @ vpp


def _second_difference(ced, u, d, t):
    return (compute_flux(ced, u + t * d) - 2 * compute_flux(ced, u)
            + compute_flux(ced, u - t * d)) / t**2


def genuine_nonlinearity(ced, u, r_bar, l_bar=None, step=5e-3):
    """l . f*''(u)(r, r) by second differences with one Richardson level."""
    l_bar = r_bar if l_bar is None else l_bar
    d1 = _second_difference(ced, u, r_bar, step)
    d2 = _second_difference(ced, u, r_bar, step / 2)
    return float(l_bar @ ((4 * d2 - d1) / 3))


def _sorted_eig(J):
    lam, R = np.linalg.eig(J)
    order = np.argsort(lam.real)
    lam, R = lam[order], R[:, order]
    if np.max(np.abs(lam.imag)) > 1e-8 * max(1.0, np.max(np.abs(lam))):
        raise NonSimpleEigenvalue("flux Jacobian has complex eigenvalues")
    return lam.real, R.real


def compute_characteristics(ced: ChapmanEnskogData, u, p=None, method="implicit",
                            gap_rtol=1e-6) -> CharacteristicData:
    """Characteristic speeds at ``u`` and the data of the selected field ``p``.

    With ``p=None`` the field with the smallest |lambda| is selected.
    """
    u = np.asarray(u, dtype=float)
    J = flux_jacobian(ced, u, method=method)
    lam, R = _sorted_eig(J)
    if p is None:
        p = int(np.argmin(np.abs(lam)))
    rho = max(np.max(np.abs(lam)), EPS)
    gaps = [abs(lam[p] - lam[q]) for q in (p - 1, p + 1) if 0 <= q < lam.size]
    if gaps and min(gaps) <= gap_rtol * rho:
        raise NonSimpleEigenvalue(f"lambda_{p} is not simple (gap {min(gaps):.2e})")
    r_bar = fix_sign(R[:, p] / np.linalg.norm(R[:, p]))
    lam_l, Lv = np.linalg.eig(J.T)
    k = int(np.argmin(np.abs(lam_l - lam[p])))
    l_bar = Lv[:, k].real
    l_bar = l_bar / (l_bar @ r_bar)
    Lam = genuine_nonlinearity(ced, u, r_bar, l_bar)
    delta = float(r_bar @ ced.D_star @ r_bar)
    return CharacteristicData(u=u, lambdas=lam, r_bar=r_bar, l_bar=l_bar, p=p,
                              Lambda=Lam, delta=delta)


def characteristic_speed(ced, u, p):
    lam, _ = _sorted_eig(flux_jacobian(ced, u))
    return float(lam[p])


def characteristic_sweep(ced, s_values, p=None):
    """Rows (s, lambda_1..lambda_r, Lambda, delta) along u_bar + s r_bar."""
    base = compute_characteristics(ced, ced.model.u_bar_macro, p)
    rows = []
    for s in s_values:
        c = compute_characteristics(ced, base.u + s * base.r_bar, base.p)
        rows.append([float(s), *c.lambdas.tolist(), c.Lambda, c.delta])
    return rows


def write_characteristic_csv(path, ced, s_values, p=None):
    rows = characteristic_sweep(ced, s_values, p)
    r = ced.model.r
    header = ["u1"] + [f"lambda_{j + 1}" for j in range(r)] + ["Lambda", "delta"]
    write_csv(path, header, rows)
    return rows


@dataclass(frozen=True)
class NSReference:
    mu: float
    kappa: float
    c: float
    lambdas: tuple
    Gamma: float
    c_v: float


def ns_reference(T, rho, e, v1) -> NSReference:
    """Hard-sphere Navier-Stokes coefficients and Euler characteristics."""
    if T <= 0 or rho <= 0 or e <= 0:
        raise ValueError("T, rho and e must be positive")
    Gamma, c_v = 2.0 / 3.0, 3.0 / 4.0
    root = math.sqrt(T / math.pi)
    c = math.sqrt(Gamma * (1 + Gamma) * e)
    return NSReference(mu=5.0 / 16.0 * root, kappa=75.0 / 16.0 * root, c=c,
                       lambdas=(v1 - c, v1, v1, v1, v1 + c), Gamma=Gamma, c_v=c_v)
