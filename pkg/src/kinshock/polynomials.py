"""Vector-valued multivariate polynomials stored as {exponent tuple: coefficient}."""

from __future__ import annotations

from itertools import combinations_with_replacement

import numpy as np


def monomials(nvars, degree):
    """Exponent tuples of total degree ``degree`` in a fixed (lexicographic) order."""
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return out


def degree(e):
    return sum(e)


def add_into(p, e, c):
    if e in p:
        p[e] = p[e] + c
    else:
        p[e] = np.array(c, dtype=float)


def homogeneous_part(p, deg):
    return {e: c for e, c in p.items() if sum(e) == deg}


def linear_map(p, M):
    """Apply a matrix to every coefficient."""
    return {e: M @ c for e, c in p.items()}


def bilinear(Q, p, q, maxdeg):
    """The polynomial Q(p, q) truncated at total degree ``maxdeg``."""
    out = {}
    for ea, ca in p.items():
        da = sum(ea)
        Qa = np.tensordot(Q, ca, axes=([1], [0]))
        for eb, cb in q.items():
            if da + sum(eb) > maxdeg:
                continue
            e = tuple(x + y for x, y in zip(ea, eb))
            add_into(out, e, Qa @ cb)
    return out


def directional_derivative(p, field, maxdeg):
    """DP[V] for a vector field V given as a polynomial with len(e)-vector values."""
    out = {}
    for e, c in p.items():
        for i, k in enumerate(e):
            if k == 0:
                continue
            base = list(e)
            base[i] -= 1
            for ev, cv in field.items():
                if sum(base) + sum(ev) > maxdeg or cv[i] == 0:
                    continue
                mono = tuple(x + y for x, y in zip(base, ev))
                add_into(out, mono, (k * cv[i]) * c)
    return out


def is_zero(p, atol=0.0):
    return all(np.max(np.abs(c)) <= atol for c in p.values())


class PolyEvaluator:
    """Fast evaluation of a polynomial and its Jacobian at points x (..., nvars)."""

    def __init__(self, p, nvars, dim):
        self.nvars = nvars
        self.dim = dim
        keys = sorted(p)
        self.exps = np.array(keys, dtype=int).reshape(len(keys), nvars)
        self.coef = np.array([p[e] for e in keys], float).reshape(len(keys), dim)

    def __call__(self, x):
        x = np.asarray(x, float)
        if not len(self.exps):
            return np.zeros(x.shape[:-1] + (self.dim,))
        mon = np.prod(x[..., None, :] ** self.exps, axis=-1)
        return mon @ self.coef

    def jacobian(self, x):
        x = np.asarray(x, float)
        jac = np.zeros(x.shape[:-1] + (self.dim, self.nvars))
        for i in range(self.nvars):
            k = self.exps[:, i]
            mask = k > 0
            if not mask.any():
                continue
            e = self.exps[mask].copy()
            e[:, i] -= 1
            mon = np.prod(x[..., None, :] ** e, axis=-1) * k[mask]
            jac[..., :, i] = mon @ self.coef[mask]
        return jac
