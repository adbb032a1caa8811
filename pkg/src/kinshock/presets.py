"""Named model presets.

Every preset rescales the collision damping so that |Gamma0| = GAMMA0_TARGET;
scaling L by c scales Gamma0 by 1/c, so one rebuild suffices.
"""

from __future__ import annotations

import re
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .model import KineticModel, build_synthetic_model

GAMMA0_TARGET = 0.5
SING_MAX = 12

_BASE = {
    "demo-m0": dict(r=2, n=8, m=0, seed=0),
    "demo-m1": dict(r=2, n=10, m=1, seed=1),
    "boltz-like": dict(r=5, n=24, m=1, seed=1),
}


def sing_velocities(k):
    """+-2^-j for j = 0..k, so that min |eig A| = 2^-k."""
    mags = 2.0 ** -np.arange(k + 1)
    return np.concatenate([mags, -mags])


def _sing_spec(k):
    return dict(r=1, n=2 * (k + 1), m=0, seed=k, velocities=sing_velocities(k), rotate=False)


def preset_names():
    return list(_BASE) + [f"sing-{k}" for k in range(1, SING_MAX + 1)]


def preset_spec(name):
    if name in _BASE:
        return dict(_BASE[name])
    m = re.fullmatch(r"sing-(\d+)", name)
    if m and 1 <= int(m.group(1)) <= SING_MAX:
        return _sing_spec(int(m.group(1)))
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}")


def _gamma0_norm(model):
    from .canonical import reduce_model
    return float(np.max(np.abs(np.linalg.eigvalsh(reduce_model(model).Gamma0))))


@lru_cache(maxsize=None)
def get_preset(name) -> KineticModel:
    spec = preset_spec(name)
    raw = build_synthetic_model(**spec, label=name)
    scale = _gamma0_norm(raw) / GAMMA0_TARGET
    return build_synthetic_model(**spec, damping_scale=scale, label=name)


def preset_models():
    return {name: get_preset(name) for name in preset_names()}
