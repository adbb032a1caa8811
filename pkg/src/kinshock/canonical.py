"""Reduction of ``A u' = Q(u)`` to the block canonical form

    w_c' = J w_c + Qc(w),         Gamma0 w_h' = -w_h + Qh(w),

with J nilpotent and Gamma0 symmetric.  Coordinates are centred at u_bar.

Conventions: the micro linearisation is normalised to E = -I by the change
``v = S v_n`` with ``S = (-E)^{-1/2}`` and the micro equation multiplied by S.
The centre block is ordered ``w_c = (w_c1, w_c2, w_c3)`` with sizes
``(m, m, r - m)``: ``w_c1 = u1 - Gamma1 v~``, ``w_c2 = -(T^T)^{-1} v1``,
``w_c3 = u~ + A~11^{-1} A~12 v~``.  The minus sign in ``w_c2`` is the one for
which the reduced equations hold (checked by ``residual_canonical``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import make_interp_spline

from .chapman_enskog import fix_sign
from .errors import ReductionError
from .model import KineticModel, check_hypotheses, linearize_Q, null_space
from .textio import format_float

SIGN_CONVENTION = "w_c2 = -(T12^*)^{-1} v1; Gamma0 w_h' = -w_h + Qh; E normalised to -I"


@dataclass(frozen=True, eq=False)
class MacroMicroSplit:
    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    E: np.ndarray
    scale: np.ndarray       # S: original micro = S @ normalised micro
    scale_inv: np.ndarray

    @property
    def normalized(self):
        return np.allclose(self.E, -np.eye(self.E.shape[0]), rtol=0, atol=1e-12)


@dataclass(frozen=True, eq=False)
class A11Decomposition:
    ker_basis: np.ndarray
    im_basis: np.ndarray
    T12: np.ndarray
    Atilde12: np.ndarray
    Atilde11: np.ndarray
    residuals: dict


def macro_micro_split(model: KineticModel) -> MacroMicroSplit:
    P, W, A = model.vperp_basis, model.v_basis, model.A
    L = linearize_Q(model, model.u_bar)
    E = W.T @ L @ W
    E = 0.5 * (E + E.T)
    I = np.eye(W.shape[1])
    return MacroMicroSplit(A11=P.T @ A @ P, A12=P.T @ A @ W, A21=W.T @ A @ P,
                           A22=W.T @ A @ W, E=E, scale=I, scale_inv=I)


def normalize_E(split: MacroMicroSplit) -> MacroMicroSplit:
    """Change micro variables so that the micro linearisation becomes -I."""
    w, V = np.linalg.eigh(split.E)
    if w.size and np.max(w) >= 0:
        raise ReductionError("E must be negative definite")
    S = (V / np.sqrt(-w)) @ V.T          # (-E)^{-1/2}
    S_inv = (V * np.sqrt(-w)) @ V.T
    A12 = split.A12 @ S
    A22 = S @ split.A22 @ S
    A22 = 0.5 * (A22 + A22.T)
    return MacroMicroSplit(A11=split.A11, A12=A12, A21=A12.T.copy(), A22=A22,
                           E=-np.eye(w.size), scale=split.scale @ S,
                           scale_inv=S_inv @ split.scale_inv)


def decompose_A11(split: MacroMicroSplit, rtol: float = 1e-10) -> A11Decomposition:
    """Split V-perp = ker A11 + im A11 and verify the injectivity structure."""
    A11 = 0.5 * (split.A11 + split.A11.T)
    w, U = np.linalg.eigh(A11)
    # measured against the whole macro row of A: A11 may be entirely round-off when r = m
    scale = max(np.max(np.abs(w)), np.linalg.norm(split.A12, 2), np.finfo(float).tiny)
    zero = np.abs(w) <= rtol * scale
    K = np.column_stack([fix_sign(U[:, j]) for j in np.flatnonzero(zero)]) \
        if zero.any() else np.zeros((A11.shape[0], 0))
    Im = U[:, ~zero]
    T12 = K.T @ split.A12
    At12 = Im.T @ split.A12
    At11 = Im.T @ A11 @ Im
    m = K.shape[1]
    res = {}
    if m:
        s = np.linalg.svd(T12, compute_uv=False)
        res["T12* injective (sigma_min)"] = float(s[-1])
        res["im T12 = ker A11 (rank defect)"] = float(m - np.sum(s > rtol * np.linalg.norm(split.A12, 2)))
        res["ker T12 nontrivial (dim)"] = float(T12.shape[1] - m)
    res["A~11 invertible (min |eig|)"] = float(np.min(np.abs(w[~zero]))) if (~zero).any() else np.inf
    bad = []
    if m:
        if res["T12* injective (sigma_min)"] <= rtol * max(np.linalg.norm(split.A12, 2), 1e-300):
            bad.append("T12* not injective")
        if res["ker T12 nontrivial (dim)"] < 1:
            bad.append("ker T12 trivial")
    if (~zero).any() and res["A~11 invertible (min |eig|)"] <= rtol * scale:
        bad.append("A~11 singular")
    if bad:
        raise ReductionError("reduction checks failed: " + ", ".join(bad), res)
    return A11Decomposition(ker_basis=K, im_basis=Im, T12=T12, Atilde12=At12,
                            Atilde11=At11, residuals=res)


@dataclass(frozen=True, eq=False)
class CanonicalSystem:
    model: KineticModel
    split: MacroMicroSplit          # normalised split
    decomposition: A11Decomposition
    m: int
    r: int
    W1: np.ndarray                  # orthonormal basis of V1 = im T12^T
    Wt: np.ndarray                  # orthonormal basis of V~ = ker T12
    T: np.ndarray                   # T12 restricted to V1 (m x m)
    Gamma0: np.ndarray
    Gamma1: np.ndarray
    C3: np.ndarray                  # A~11^{-1} A~12 restricted to V~
    J: np.ndarray
    to_matrix: np.ndarray           # z = to_matrix @ (state - u_bar)
    from_matrix: np.ndarray         # state - u_bar = from_matrix @ z
    Qc: np.ndarray                  # (n_c, n, n)
    Qh: np.ndarray                  # (n_h, n, n)
    left_multiplier: np.ndarray     # canonical residual = M (A u' - Q(u))

    @property
    def n(self):
        return self.model.n

    @property
    def n_c(self):
        return self.r + self.m

    @property
    def n_h(self):
        return self.n - self.n_c

    @property
    def T12(self):
        return self.decomposition.T12

    @property
    def Atilde11_inv(self):
        return np.linalg.inv(self.decomposition.Atilde11)

    @property
    def Atilde12(self):
        return self.decomposition.Atilde12

    @property
    def T12_star_inv(self):
        return np.linalg.inv(self.T.T)

    def to_canonical(self, state):
        return (np.asarray(state, float) - self.model.u_bar) @ self.to_matrix.T

    def from_canonical(self, z):
        return np.asarray(z, float) @ self.from_matrix.T + self.model.u_bar

    def split_z(self, z):
        z = np.asarray(z)
        return z[..., :self.n_c], z[..., self.n_c:]

    def join(self, wc, wh):
        return np.concatenate([np.asarray(wc, float), np.asarray(wh, float)], axis=-1)

    def Qc_eval(self, z):
        return np.einsum("ijk,...j,...k->...i", self.Qc, z, z)

    def Qh_eval(self, z):
        return np.einsum("ijk,...j,...k->...i", self.Qh, z, z)

    def linear_part(self):
        """(C, L) with the canonical system written as C z' = L z + Q~(z)."""
        n_c, n_h = self.n_c, self.n_h
        C = np.zeros((self.n, self.n))
        C[:n_c, :n_c] = np.eye(n_c)
        C[n_c:, n_c:] = self.Gamma0
        Lin = np.zeros((self.n, self.n))
        Lin[:n_c, :n_c] = self.J
        Lin[n_c:, n_c:] = -np.eye(n_h)
        return C, Lin

    @property
    def delta(self):
        """T12 T12^* (an m x m matrix; a positive scalar when m = 1)."""
        return self.T12 @ self.T12.T

    def fiber_constants(self, dq):
        """(w_c2, w_c3) fixed by the flux offset ``dq = q - P A u_bar``."""
        dec = self.decomposition
        dq = np.asarray(dq, float)
        v1 = np.linalg.solve(self.T, dec.ker_basis.T @ dq) if self.m else np.zeros(0)
        zeta = -np.linalg.solve(self.T.T, v1) if self.m else np.zeros(0)
        rhs = dec.im_basis.T @ dq - dec.Atilde12 @ (self.W1 @ v1)
        gamma = np.linalg.solve(dec.Atilde11, rhs)
        return zeta, gamma

    def flux_offset(self, z):
        """P_Vperp A (state - u_bar), the conserved quantity relative to u_bar."""
        P = self.model.vperp_basis
        return (np.asarray(z) @ self.from_matrix.T) @ (P.T @ self.model.A).T


def build_canonical(split: MacroMicroSplit, decomposition: A11Decomposition,
                    model: KineticModel, rtol: float = 1e-10) -> CanonicalSystem:
    if not split.normalized:
        split = normalize_E(split)
    dec = decomposition
    K, Im = dec.ker_basis, dec.im_basis
    m, r = K.shape[1], K.shape[0]
    nv = split.A22.shape[0]
    if m:
        _, s, vt = np.linalg.svd(dec.T12)
        W1 = vt[:m].T
        Wt = vt[m:].T
    else:
        W1 = np.zeros((nv, 0))
        Wt = np.eye(nv)
    T = dec.T12 @ W1
    At11_inv = np.linalg.inv(dec.Atilde11)
    Mn = split.A22 - dec.Atilde12.T @ At11_inv @ dec.Atilde12
    Mn = 0.5 * (Mn + Mn.T)
    Gamma0 = Wt.T @ Mn @ Wt
    Gamma0 = 0.5 * (Gamma0 + Gamma0.T)
    ev = np.linalg.eigvalsh(Gamma0)
    if ev.size and np.min(np.abs(ev)) <= rtol * max(np.max(np.abs(ev)), 1e-300):
        raise ReductionError("Gamma0 is singular to working precision",
                             {"min |eig Gamma0|": float(np.min(np.abs(ev)))})
    Gamma1 = -np.linalg.solve(T.T, W1.T @ Mn @ Wt) if m else np.zeros((0, Wt.shape[1]))
    C3 = At11_inv @ dec.Atilde12 @ Wt
    n = model.n
    n_h = Wt.shape[1]
    n_c = r + m

    P, V = model.vperp_basis, model.v_basis
    S, S_inv = split.scale, split.scale_inv
    # offset w -> (u, v_n) -> z
    to_u = P.T
    to_vn = S_inv @ V.T
    Z = np.zeros((n, n))
    Tinv_T = np.linalg.inv(T.T) if m else np.zeros((0, 0))
    Z[:m] = K.T @ to_u - Gamma1 @ (Wt.T @ to_vn)
    Z[m:2 * m] = -Tinv_T @ (W1.T @ to_vn)
    Z[2 * m:n_c] = Im.T @ to_u + C3 @ (Wt.T @ to_vn)
    Z[n_c:] = Wt.T @ to_vn
    # explicit inverse
    Phi = np.zeros((n, n))
    e = np.eye(n)
    for k in range(n):
        wc1, wc2, wc3, wh = e[k, :m], e[k, m:2 * m], e[k, 2 * m:n_c], e[k, n_c:]
        v1 = -T.T @ wc2
        u1 = wc1 + Gamma1 @ wh
        ut = wc3 - C3 @ wh
        u = K @ u1 + Im @ ut
        vn = W1 @ v1 + Wt @ wh
        Phi[:, k] = P @ u + V @ (S @ vn)

    Bz = np.einsum("ijk,ja,kb->iab", model.B, Phi, Phi)
    fn = np.einsum("pi,iab->pab", S @ V.T, Bz) if nv else np.zeros((0, n, n))
    Qc = np.zeros((n_c, n, n))
    if m:
        Qc[:m] = np.einsum("pq,qab->pab", Tinv_T @ W1.T, fn)
    Qh = np.einsum("pq,qab->pab", Wt.T, fn)
    J = np.zeros((n_c, n_c))
    J[:m, m:2 * m] = np.eye(m)

    C = np.zeros((n, n))
    C[:n_c, :n_c] = np.eye(n_c)
    C[n_c:, n_c:] = Gamma0
    M = C @ np.linalg.solve(model.A @ Phi, np.eye(n))
    return CanonicalSystem(model=model, split=split, decomposition=dec, m=m, r=r,
                           W1=W1, Wt=Wt, T=T, Gamma0=Gamma0, Gamma1=Gamma1, C3=C3,
                           J=J, to_matrix=Z, from_matrix=Phi, Qc=Qc, Qh=Qh,
                           left_multiplier=M)


def reduce_model(model: KineticModel, rtol: float = 1e-10) -> CanonicalSystem:
    """macro_micro_split -> normalize_E -> decompose_A11 -> build_canonical."""
    split = normalize_E(macro_micro_split(model))
    return build_canonical(split, decompose_A11(split, rtol), model, rtol)


# --- residuals ------------------------------------------------------------

def _derivative(x, values, method):
    if method == "central":
        return np.gradient(values, x, axis=0, edge_order=2)
    if method == "spline":
        return make_interp_spline(x, values, k=5, axis=0).derivative()(x)
    raise ValueError(f"unknown derivative method {method!r}")


def canonical_residual_field(canon: CanonicalSystem, x, states, forcing=None,
                             derivative="central"):
    """Pointwise residual C z' - L z - Q~(z) - M forcing of an original trajectory."""
    z = canon.to_canonical(states)
    dz = _derivative(np.asarray(x, float), z, derivative)
    C, Lin = canon.linear_part()
    res = dz @ C.T - z @ Lin.T - np.concatenate([canon.Qc_eval(z), canon.Qh_eval(z)], axis=-1)
    if forcing is not None:
        res -= np.asarray(forcing, float) @ canon.left_multiplier.T
    return res


def direct_residual_field(model: KineticModel, x, states, derivative="central"):
    """A u' - Q(u) along a trajectory sampled on ``x``."""
    du = _derivative(np.asarray(x, float), np.asarray(states, float), derivative)
    return du @ model.A.T - model.bilinear(states, states)


def residual_canonical(canon: CanonicalSystem, x, states, forcing=None,
                       derivative="central") -> float:
    """Max over the grid of |Gamma0 w_h' + w_h - Qh| + |w_c' - J w_c - Qc|."""
    res = canonical_residual_field(canon, x, states, forcing, derivative)
    rc, rh = res[:, :canon.n_c], res[:, canon.n_c:]
    return float(np.max(np.linalg.norm(rc, axis=1) + np.linalg.norm(rh, axis=1)))


def conservation_check(model: KineticModel, states, q) -> float:
    """max_x |P_Vperp A u(x) - q|."""
    states = np.atleast_2d(states)
    flux = states @ (model.vperp_basis.T @ model.A).T
    return float(np.max(np.linalg.norm(flux - np.asarray(q, float), axis=1)))


# --- reporting / serialization -----------------------------------------------

def reduction_report(canon: CanonicalSystem, tol=1e-10) -> str:
    ev = np.linalg.eigvalsh(canon.Gamma0)
    C, Lin = canon.linear_part()
    consistency = np.linalg.norm(canon.left_multiplier @ linearize_Q(canon.model, canon.model.u_bar)
                                 @ canon.from_matrix - Lin)
    lines = [
        f"model: {canon.model.label or '(unnamed)'}",
        f"n = {canon.n}, r = {canon.r}, m = {canon.m}, dim w_c = {canon.n_c}, dim w_h = {canon.n_h}",
        f"hypotheses: {'pass' if check_hypotheses(canon.model, tol).passed else 'FAIL'}",
        "spectrum(Gamma0): " + ", ".join(f"{x:.6g}" for x in ev),
        f"|Gamma0| = {np.max(np.abs(ev)):.6g}, min |eig Gamma0| = {np.min(np.abs(ev)):.6g}",
    ]
    if canon.m:
        lines.append("delta = T12 T12^* = " + ", ".join(f"{x:.12g}" for x in np.ravel(canon.delta)))
    for key, val in canon.decomposition.residuals.items():
        lines.append(f"{key}: {val:.6g}")
    lines.append(f"linear-part consistency |M L Phi - diag(J, -I)| = {consistency:.3e}")
    lines.append(f"sign convention: {SIGN_CONVENTION}")
    return "\n".join(lines) + "\n"


_ARRAYS = ("Gamma0", "Gamma1", "C3", "J", "T", "W1", "Wt", "to_matrix", "from_matrix",
           "Qc", "Qh", "left_multiplier")


def canonical_to_text(canon: CanonicalSystem) -> str:
    """JSON document holding the reduced data (17 significant digits)."""
    from .model import model_to_text

    def arr(a):
        a = np.asarray(a, float)
        body = ", ".join(format_float(x) for x in a.reshape(-1))
        return '{"shape": %s, "data": [%s]}' % (json.dumps(list(a.shape)), body)

    parts = [f'  "m": {canon.m}', f'  "r": {canon.r}']
    parts += [f'  "{k}": {arr(getattr(canon, k))}' for k in _ARRAYS]
    parts.append('  "model": ' + model_to_text(canon.model).strip())
    return "{\n" + ",\n".join(parts) + "\n}\n"


def canonical_arrays_from_text(text: str) -> dict:
    doc = json.loads(text)
    out = {"m": doc["m"], "r": doc["r"]}
    for k in _ARRAYS:
        out[k] = np.array(doc[k]["data"], float).reshape(doc[k]["shape"])
    return out
