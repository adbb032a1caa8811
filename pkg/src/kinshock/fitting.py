"""Least-squares order and rate fits used by the verification code."""

from __future__ import annotations

import math

import numpy as np


def fit_order(params, values, floor=0.0):
    """Slope of log2(value) against log2(param); inf when every value is <= floor."""
    p = np.asarray(params, float)
    v = np.asarray(values, float)
    keep = v > floor
    if keep.sum() == 0:
        return math.inf
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log2(p[keep]), np.log2(v[keep]), 1)[0])


def fit_rate(x, values, floor=0.0):
    """Exponential decay rate -d log|value| / dx by least squares."""
    x = np.asarray(x, float)
    v = np.abs(np.asarray(values, float))
    keep = v > floor
    if keep.sum() < 2:
        return math.inf
    return float(-np.polyfit(x[keep], np.log(v[keep]), 1)[0])
