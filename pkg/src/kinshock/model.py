"""Finite-dimensional kinetic models ``A u' = Q(u)`` with bilinear collision term.

A model lives on R^n with the Euclidean inner product.  The state space splits
orthogonally into the conserved ("macro") subspace V-perp, spanned by the
columns of ``vperp_basis``, and the dissipative ("micro") subspace V.  The
collision operator is ``Q(u) = B(u, u)`` with ``B`` symmetric and valued in V.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .textio import format_float

DEFAULT_TOL = 1e-10


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KineticModel:
    A: np.ndarray
    vperp_basis: np.ndarray
    v_basis: np.ndarray
    B: np.ndarray  # B[i, j, k]: component i of B(e_j, e_k)
    u_bar: np.ndarray
    label: str = ""

    def __post_init__(self):
        for name in ("A", "vperp_basis", "v_basis", "B", "u_bar"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.B.shape != (n, n, n):
            raise ModelError("A must be n x n and B n x n x n")
        if self.vperp_basis.shape[0] != n or self.v_basis.shape[0] != n:
            raise ModelError("basis matrices must have n rows")
        if self.vperp_basis.shape[1] + self.v_basis.shape[1] != n:
            raise ModelError("vperp_basis and v_basis must together span R^n")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def r(self) -> int:
        return self.vperp_basis.shape[1]

    def bilinear(self, x, y):
        """B(x, y); trailing axes of ``x`` and ``y`` are contracted."""
        return np.einsum("ijk,...j,...k->...i", self.B, x, y)

    def lift(self, u, v):
        """Assemble the full state from macro coordinates ``u`` and micro ``v``."""
        return self.vperp_basis @ u + self.v_basis @ v

    def macro(self, state):
        return state @ self.vperp_basis

    def micro(self, state):
        return state @ self.v_basis

    @property
    def u_bar_macro(self):
        return self.vperp_basis.T @ self.u_bar

    @property
    def u_bar_micro(self):
        return self.v_basis.T @ self.u_bar


@dataclass
class HypothesisReport:
    checks: list = field(default_factory=list)  # (name, passed, residual)
    spectral_gap_delta: float = float("nan")
    min_abs_eig_A: float = float("nan")

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def check(self, name):
        for entry in self.checks:
            if entry[0] == name:
                return entry
        raise KeyError(name)

    def failures(self):
        return [name for name, ok, _ in self.checks if not ok]


def evaluate_Q(model: KineticModel, u):
    """Collision operator Q(u) = B(u, u)."""
    u = np.asarray(u, dtype=float)
    return model.bilinear(u, u)


def linearize_Q(model: KineticModel, u):
    """Matrix of the derivative w -> 2 B(u, w)."""
    return 2.0 * np.einsum("ijk,j->ik", model.B, np.asarray(u, dtype=float))


def _orthonormal_complement(basis, rng=None):
    n, k = basis.shape
    q, _ = np.linalg.qr(np.hstack([basis, np.eye(n)]))
    comp = q[:, k:n]
    # re-orthogonalise against the given basis for good measure
    comp -= basis @ (basis.T @ comp)
    comp, _ = np.linalg.qr(comp)
    return comp


def _principal_angle_sin(X, Y):
    """Largest sine of the principal angles between column spaces of X and Y."""
    if X.shape[1] == 0 and Y.shape[1] == 0:
        return 0.0
    if X.shape[1] != Y.shape[1]:
        return 1.0
    qx, _ = np.linalg.qr(X)
    qy, _ = np.linalg.qr(Y)
    resid = qy - qx @ (qx.T @ qy)
    return float(np.linalg.norm(resid, 2))


def null_space(M, rtol=1e-10):
    """Orthonormal basis of the numerical kernel, threshold ``rtol * sigma_max``."""
    M = np.atleast_2d(M)
    _, s, vt = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * max(smax, np.finfo(float).tiny)))
    return vt[rank:].T.copy()


def check_hypotheses(model: KineticModel, tol: float = DEFAULT_TOL) -> HypothesisReport:
    """Verify the structural hypotheses with residuals relative to matrix norms.

    Failures are recorded in the report; nothing is raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, B, P, W = model.A, model.B, model.vperp_basis, model.v_basis
    n = model.n
    rep = HypothesisReport()
    normA = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
    normB = max(np.linalg.norm(B.reshape(n, -1), 2), np.finfo(float).tiny)

    res = np.linalg.norm(A - A.T, 2) / normA
    rep.checks.append(("A symmetric", res <= tol, res))

    eigA = np.linalg.eigvalsh(0.5 * (A + A.T))
    rep.min_abs_eig_A = float(np.min(np.abs(eigA)))
    rel = rep.min_abs_eig_A / normA
    rep.checks.append(("A one-to-one", rel > tol, rel))

    basis = np.hstack([P, W])
    res = np.linalg.norm(basis.T @ basis - np.eye(n), 2)
    rep.checks.append(("orthonormal basis", res <= tol, res))

    res = np.linalg.norm(np.einsum("ia,ijk->ajk", P, B).reshape(-1)) / normB
    rep.checks.append(("B range in V", res <= tol, res))

    res = np.linalg.norm((B - B.transpose(0, 2, 1)).reshape(-1)) / normB
    rep.checks.append(("B symmetric", res <= tol, res))

    ubar = model.u_bar
    scale = normB * max(np.dot(ubar, ubar), 1.0)
    res = np.linalg.norm(evaluate_Q(model, ubar)) / scale
    rep.checks.append(("Q(u_bar) = 0", res <= tol, res))

    L = linearize_Q(model, ubar)
    normL = max(np.linalg.norm(L, 2), np.finfo(float).tiny)
    res = np.linalg.norm(L - L.T, 2) / normL
    rep.checks.append(("Q'(u_bar) symmetric", res <= tol, res))

    ker = null_space(L, rtol=tol * 1e2)
    res = _principal_angle_sin(ker, P)
    rep.checks.append(("ker Q'(u_bar) = Vperp", res <= max(tol * 1e2, 1e-8), res))

    E = W.T @ (0.5 * (L + L.T)) @ W
    if E.size:
        rep.spectral_gap_delta = float(-np.max(np.linalg.eigvalsh(E)))
    else:
        rep.spectral_gap_delta = float("nan")
    ok = rep.spectral_gap_delta > tol * normL
    rep.checks.append(("Q'(u_bar)|V <= -delta I", ok, rep.spectral_gap_delta))
    rep.checks = [(name, bool(ok), float(res)) for name, ok, res in rep.checks]
    return rep


def _default_velocities(n):
    return [(-1.0) ** i * (i + 1) / n for i in range(n)]


def build_synthetic_model(
    r: int,
    n: int,
    m: int = 0,
    velocities=None,
    seed: int = 0,
    curvature: float = 1.0,
    damping=(1.0, 2.0),
    damping_scale: float = 1.0,
    ubar_norm: float = 1.0,
    rotate: bool = True,
    label: str = "",
) -> KineticModel:
    """Build a random model satisfying the structural hypotheses.

    The transport matrix has spectrum ``velocities``.  The collision term is

        B(x, y) = (<a,x> L y + <a,y> L x) / (2 <a,u_bar>) + G(x^, y^),

    with ``L`` negative definite on V and zero on V-perp, ``a = u_bar`` in
    V-perp, ``x^ = x - (<a,x>/<a,u_bar>) u_bar`` and ``G`` a random symmetric
    bilinear map into V scaled by ``curvature``.  Hence Q(u_bar) = 0 and
    Q'(u_bar) = L.  With ``m = 1`` the macro basis is chosen so that the
    macro block of A has a one-dimensional kernel.
    """
    if not 1 <= r < n:
        raise ModelError("need 1 <= r < n")
    if m not in (0, 1):
        raise ModelError("m must be 0 or 1")
    if m == 1 and n < r + 2:
        raise ModelError("m = 1 requires n >= r + 2")
    vel = np.asarray(_default_velocities(n) if velocities is None else velocities, float)
    if vel.shape != (n,):
        raise ModelError(f"need {n} velocities, got {vel.size}")
    if np.any(vel == 0.0):
        raise ModelError("A must be one-to-one: velocity list contains 0")

    rng = np.random.default_rng(seed)
    if rotate:
        O, _ = np.linalg.qr(rng.standard_normal((n, n)))
    else:
        O = np.eye(n)
    A = O @ np.diag(vel) @ O.T
    A = 0.5 * (A + A.T)

    if m == 1:
        neg = np.flatnonzero(vel < 0)
        pos = np.flatnonzero(vel > 0)
        if neg.size == 0 or pos.size == 0:
            raise ModelError("m = 1 infeasible: no sign change among velocities")
        i = neg[np.argmin(np.abs(vel[neg]))]
        j = pos[np.argmin(vel[pos])]
        t = np.arctan(np.sqrt(-vel[i] / vel[j]))
        e = np.cos(t) * O[:, i] + np.sin(t) * O[:, j]
        Ae = A @ e
        fixed = np.column_stack([e, Ae / np.linalg.norm(Ae)])
        rest = rng.standard_normal((n, r - 1))
        rest -= fixed @ (fixed.T @ rest)
        rest, _ = np.linalg.qr(rest) if r > 1 else (rest, None)
        P = np.column_stack([e, rest])
        P, _ = np.linalg.qr(P)
        P[:, 0] = e  # keep the kernel direction exact
    else:
        normA = np.linalg.norm(A, 2)
        for _ in range(100):
            P, _ = np.linalg.qr(rng.standard_normal((n, r)))
            if np.min(np.abs(np.linalg.eigvalsh(P.T @ A @ P))) > 1e-2 * normA:
                break
        else:  # pragma: no cover - astronomically unlikely
            raise ModelError("could not find a noncharacteristic macro subspace")
    W = _orthonormal_complement(P)

    nv = n - r
    R, _ = np.linalg.qr(rng.standard_normal((nv, nv)))
    lo, hi = damping
    d = damping_scale * np.geomspace(lo, hi, nv)
    L = W @ (-(R * d) @ R.T) @ W.T
    L = 0.5 * (L + L.T)

    c = rng.standard_normal(r)
    ubar = P @ (ubar_norm * c / np.linalg.norm(c))
    a = ubar
    au = float(a @ ubar)

    g = rng.standard_normal((nv, n, n)) * (curvature / np.sqrt(n))
    g = 0.5 * (g + g.transpose(0, 2, 1))
    G = np.einsum("ia,ajk->ijk", W, g)
    H = np.eye(n) - np.outer(ubar, a) / au
    Bt = (np.einsum("j,ik->ijk", a, L) + np.einsum("k,ij->ijk", a, L)) / (2.0 * au)
    Bt += np.einsum("ipq,pj,qk->ijk", G, H, H)
    Bt = 0.5 * (Bt + Bt.transpose(0, 2, 1))
    # strip round-off leaking into V-perp
    Bt -= np.einsum("ia,ja,jkl->ikl", P, P, Bt)

    return KineticModel(A=A, vperp_basis=P, v_basis=W, B=Bt, u_bar=ubar, label=label)


# --- serialization --------------------------------------------------------

def _array_text(a):
    a = np.asarray(a)
    if a.ndim == 1:
        return "[" + ", ".join(format_float(x) for x in a) + "]"
    return "[" + ", ".join(_array_text(row) for row in a) + "]"


def model_to_text(model: KineticModel) -> str:
    """Serialize to a JSON document with 17-significant-digit decimals."""
    parts = [
        f'  "n": {model.n}',
        f'  "r": {model.r}',
        f'  "A": {_array_text(model.A.reshape(-1))}',
        f'  "vperp_basis": {_array_text(model.vperp_basis)}',
        f'  "v_basis": {_array_text(model.v_basis)}',
        f'  "B": {_array_text(model.B.reshape(-1))}',
        f'  "u_bar": {_array_text(model.u_bar)}',
        f'  "label": {json.dumps(model.label)}',
    ]
    return "{\n" + ",\n".join(parts) + "\n}\n"


def model_from_text(text: str) -> KineticModel:
    doc = json.loads(text)
    try:
        n, r = int(doc["n"]), int(doc["r"])
        A = np.array(doc["A"], float).reshape(n, n)
        P = np.array(doc["vperp_basis"], float).reshape(n, r)
        W = np.array(doc["v_basis"], float).reshape(n, n - r)
        B = np.array(doc["B"], float).reshape(n, n, n)
        ubar = np.array(doc["u_bar"], float).reshape(n)
    except KeyError as exc:
        raise ModelError(f"model document lacks key {exc}") from None
    return KineticModel(A=A, vperp_basis=P, v_basis=W, B=B, u_bar=ubar,
                        label=doc.get("label", ""))


def save_model(model: KineticModel, path):
    with open(path, "w") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> KineticModel:
    with open(path) as fh:
        return model_from_text(fh.read())
