"""Scenario execution, artifact emission and run manifests."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .canonical import canonical_to_text, reduce_model, reduction_report
from .chapman_enskog import (compute_characteristics, make_chapman_enskog,
                             write_characteristic_csv)
from .config import RunConfig
from .errors import KinshockError
from .fitting import fit_order
from .manifolds import (CenterParams, StableParams, center_taylor, exp_approximation_check,
                        gamma0_norm, solve_center_fixed_point, solve_stable,
                        stable_graph_complement, stable_radius, steady_residual,
                        taylor_residual_sweep, truncate)
from .model import check_hypotheses, load_model, model_from_text
from .presets import get_preset
from .profiles import compare_profiles, compute_profile_pair
from .resolvent import (GridFunction, apply_resolvent, kernel_norm_probe, loglog_slope,
                        spectral_decompose, symbol_bounds)
from .textio import file_digest, write_csv

WORKERS_ENV = "KINSHOCK_WORKERS"
PASS, FAIL, SKIP = "pass", "fail", "skip"


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_clock: float = 0.0
    verdicts: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    @property
    def failed(self):
        return any(v == FAIL for v in self.verdicts.values())

    def to_json(self):
        return json.dumps({"config": self.config, "version": self.version,
                           "wall_clock_seconds": round(self.wall_clock, 3),
                           "verdicts": self.verdicts, "details": self.details,
                           "files": self.files}, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def load_config_model(config: RunConfig):
    spec = config.model
    if "preset" in spec:
        return get_preset(spec["preset"])
    if "file" in spec:
        return load_model(spec["file"])
    return model_from_text(json.dumps(spec["inline"]))


def worker_count(config: RunConfig):
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return config.workers


class _Context:
    def __init__(self, config, out):
        self.config = config
        self.params = config.params
        self.out = out
        self.verdicts = {}
        self.details = {}
        self.files = []

    def csv(self, name, header, rows):
        write_csv(self.out / name, header, rows)
        self.files.append(name)

    def text(self, name, body):
        with open(self.out / name, "w", newline="\n") as fh:
            fh.write(body)
        self.files.append(name)

    def verdict(self, name, ok, **info):
        self.verdicts[name] = PASS if ok else FAIL
        if info:
            self.details[name] = info

    def skip(self, name, reason):
        self.verdicts[name] = SKIP
        self.details[name] = {"reason": reason}


# --- scenarios -------------------------------------------------------------------------

def _check_hypotheses(ctx, model):
    rep = check_hypotheses(model, ctx.params["tol"])
    ctx.csv("hypotheses.csv", ["check", "passed", "value"], rep.checks)
    ctx.verdict("hypotheses", rep.passed, failures=rep.failures())


def _chapman_enskog(ctx, model):
    ced = make_chapman_enskog(model)
    D = ced.D_star
    ctx.csv("diffusion.csv", [f"col_{j + 1}" for j in range(model.r)], D.tolist())
    s = np.linspace(-1, 1, ctx.params["sweep_points"]) * ctx.params["sweep_half_width"]
    write_characteristic_csv(ctx.out / "characteristics.csv", ced, s)
    ctx.files.append("characteristics.csv")
    ch = compute_characteristics(ced, model.u_bar_macro)
    sym = float(np.linalg.norm(D - D.T))
    ctx.verdict("diffusion symmetric psd", sym <= ctx.params["tol"] * max(1, np.linalg.norm(D))
                and np.min(np.linalg.eigvalsh(D)) >= -ctx.params["tol"],
                min_eig=float(np.min(np.linalg.eigvalsh(D))))
    ctx.details["characteristic"] = {"p": ch.p, "lambdas": ch.lambdas, "Lambda": ch.Lambda,
                                     "delta": ch.delta}


def _reduce(ctx, model):
    canon = reduce_model(model, ctx.params["tol"])
    ctx.text("reduction.txt", reduction_report(canon, ctx.params["tol"]))
    ctx.text("canonical.json", canonical_to_text(canon))
    rng = np.random.default_rng(ctx.config.seed)
    states = model.u_bar + rng.standard_normal((100, model.n))
    rt = float(np.max(np.abs(canon.from_canonical(canon.to_canonical(states)) - states)))
    ctx.verdict("round trip", rt <= 1e-12 * max(1.0, np.max(np.abs(states))), error=rt)
    sym = float(np.linalg.norm(canon.Gamma0 - canon.Gamma0.T))
    ctx.verdict("Gamma0 symmetric", sym <= 1e-12 * np.linalg.norm(canon.Gamma0), error=sym)
    if canon.m:
        ced = make_chapman_enskog(model)
        ch = compute_characteristics(ced, model.u_bar_macro)
        err = abs(float(canon.delta[0, 0]) - ch.delta)
        ctx.verdict("delta cross-check", err <= 1e-10, error=err)


def _random_smooth(rng, x, dim):
    om = np.geomspace(0.05, 50.0, 6)
    amp = rng.standard_normal((6, dim))
    ph = rng.uniform(0, 2 * np.pi, (6, dim))
    g = np.sum(amp[None] * np.cos(om[None, :, None] * x[:, None, None] + ph[None]), axis=1)
    return g * np.exp(-(x / (0.3 * np.max(np.abs(x)))) ** 2)[:, None]


def _resolvent_probe(ctx, model):
    canon = reduce_model(model)
    decomp = spectral_decompose(canon.Gamma0)
    a = np.abs(decomp.alphas)
    p = ctx.params
    thetas = np.geomspace(a.min(), a.max(), p["theta_points"])
    kn = kernel_norm_probe(decomp, thetas)
    ctx.csv("kernel_norm.csv", ["theta", "kernel_norm"], kn)
    omegas = np.concatenate([[0.0], np.geomspace(1e-3, p["omega_max"], p["omega_points"] - 1)])
    sb = symbol_bounds(decomp, omegas)
    ctx.csv("symbol.csv", ["omega", "symbol", "symbol_derivative_scaled"], sb)
    ctx.verdict("symbol bound", max(r[1] for r in sb) <= 1 + 1e-12,
                max=max(r[1] for r in sb))
    ctx.verdict("symbol derivative bound", max(r[2] for r in sb) <= 1 + p["tol"],
                max=max(r[2] for r in sb))
    n = int(math.ceil(p["half_width"] / p["grid_h"]))
    x = np.arange(-n, n + 1) * p["grid_h"]
    rng = np.random.default_rng(ctx.config.seed)
    rows = []
    for k in range(p["samples"]):
        g = _random_smooth(rng, x, decomp.dim)
        u = apply_resolvent(decomp, GridFunction(x, g)).values
        rows.append([k, float(np.linalg.norm(u) / np.linalg.norm(g))])
    ctx.csv("l2_ratios.csv", ["sample", "ratio"], rows)
    ctx.verdict("L2 bound", max(r[1] for r in rows) <= 1.01, max=max(r[1] for r in rows))
    if a.max() / a.min() >= 100:
        slope = loglog_slope(kn)
        ctx.verdict("kernel slope", -1.1 <= slope <= -0.9, slope=slope)
    else:
        ctx.skip("kernel slope", "spectrum of Gamma0 spans less than two decades")


def _stable_manifold(ctx, model):
    canon = reduce_model(model)
    decomp = spectral_decompose(canon.Gamma0)
    s = decomp.stable_indices
    if not s.size:
        ctx.skip("stable manifold", "Gamma0 has no stable modes")
        return
    p = ctx.params
    nu = 1.0 / gamma0_norm(canon)
    nu_t = p["nu_factor"] * nu
    rng = np.random.default_rng(ctx.config.seed)
    direction = decomp.vectors[:, s] @ rng.standard_normal(s.size)
    direction /= np.linalg.norm(direction)
    radius = stable_radius(canon, nu_t)
    params = StableParams(h=p["grid_h"], nu_tilde=nu_t, max_iter=p["max_iter"], tol=p["tol"])
    rows, worst = [], 0.0
    first = None
    amps = sorted(p["amplitudes"], reverse=True)
    for amp in amps:
        if amp > radius:
            ctx.skip(f"amplitude {amp:g}", f"exceeds radius {radius:.3g}")
            continue
        res = solve_stable(canon, amp * direction, params)
        first = first or res
        worst = max(worst, res.contraction_factor)
        gap = float(np.linalg.norm(stable_graph_complement(canon, res.trajectory.values[0])))
        rows.append([amp, gap, res.iterations, res.contraction_factor, res.fitted_decay_rate])
    if first is None:
        ctx.skip("stable manifold", "all amplitudes exceed the radius")
        return
    ctx.csv("tangency.csv", ["v0_norm", "graph_distance", "iterations", "contraction",
                             "decay_rate"], rows)
    w = first.trajectory.values
    xs = first.trajectory.x
    ctx.csv("stable_trajectory.csv", ["x", "norm"] + [f"w_{j + 1}" for j in range(w.shape[1])],
            np.column_stack([xs, np.linalg.norm(w, axis=1), w]).tolist())
    resid = steady_residual(canon, xs, w)
    ctx.verdict("contraction", worst < 0.5, factor=worst, radius=radius)
    ctx.verdict("decay rate", min(r[4] for r in rows) >= nu_t, rate=min(r[4] for r in rows),
                required=nu_t)
    ctx.verdict("steady residual", resid < 1e-6, residual=resid)
    if len(rows) >= 2:
        slope = fit_order([r[0] for r in rows], [r[1] for r in rows])
        ctx.verdict("tangency slope", slope >= 1.8, slope=slope)


def _exp_approximation(ctx, canon, taylor, trials=4):
    """Stable trajectories approach the center graph at rate >= 0.8 / |Gamma0|."""
    decomp = spectral_decompose(canon.Gamma0)
    s = decomp.stable_indices
    if not s.size:
        ctx.skip("exp approximation", "Gamma0 has no stable modes")
        return
    nu_t = 0.8 / gamma0_norm(canon)
    radius = stable_radius(canon, nu_t)
    rng = np.random.default_rng(ctx.config.seed)
    rows = []
    for _ in range(trials):
        v = decomp.vectors[:, s] @ rng.standard_normal(s.size)
        res = solve_stable(canon, 0.5 * radius * v / np.linalg.norm(v), StableParams(nu_tilde=nu_t))
        rows.append([0.5 * radius, exp_approximation_check(canon, res.trajectory, taylor, nu_t).rate_fit])
    ctx.csv("exp_approximation.csv", ["v0_norm", "rate"], rows)
    rate = min(r[1] for r in rows)
    ctx.verdict("exp approximation rate", rate >= nu_t, rate=rate, required=nu_t)


def _center_taylor(ctx, model):
    canon = reduce_model(model)
    p = ctx.params
    k = p["order"]
    taylor = center_taylor(canon, k, seed=ctx.config.seed)
    ctx.csv("taylor_orders.csv", ["order", "residual"], sorted(taylor.residual_by_order.items()))
    sweep = taylor_residual_sweep(canon, taylor, p["s_values"], seed=ctx.config.seed)
    ctx.csv("taylor_sweep.csv", ["s", "residual"], sweep)
    slope = fit_order([r[0] for r in sweep], [r[1] for r in sweep], floor=1e-300)
    ctx.verdict("matching residual slope", slope >= k + 0.7, slope=slope)
    _exp_approximation(ctx, canon, taylor)
    if not p["fixed_point"]:
        return
    trunc = truncate(canon, p["epsilon"])
    rng = np.random.default_rng(ctx.config.seed)
    d = rng.standard_normal(canon.n_c)
    d /= np.linalg.norm(d)
    rows = []
    for s in p["fp_s_values"]:
        res = solve_center_fixed_point(canon, s * d, trunc, params=CenterParams(h=p["grid_h"], tol=p["tol"]))
        err = float(np.linalg.norm(res.graph_value - taylor(s * d)))
        rows.append([s, err, res.iterations, max(res.contraction_ratios or [0.0])])
    ctx.csv("fixed_point_agreement.csv", ["s", "graph_difference", "iterations", "max_ratio"], rows)
    slope = fit_order([r[0] for r in rows], [r[1] for r in rows], floor=1e-300)
    ctx.verdict("fixed point vs Taylor slope", slope >= k + 0.7, slope=slope)
    ctx.details["truncation bounds"] = trunc.bounds


def _profile_rows(pair):
    K = pair.relaxation
    vd = np.linalg.norm(pair.relaxation.v - pair.v_ce, axis=1)
    return np.column_stack([pair.x, K.u, pair.viscous.u, vd, pair.lambda_rel,
                            pair.lambda_ce]).tolist()


def _profile_header(r):
    return (["x"] + [f"u_rel_{j + 1}" for j in range(r)] + [f"u_ce_{j + 1}" for j in range(r)]
            + ["v_diff_norm", "lambda_p_rel", "lambda_p_ce"])


def _pair_job(args):
    model, order, eps, half_width, ppu = args
    canon = reduce_model(model)
    ced = make_chapman_enskog(model)
    taylor = center_taylor(canon, order)
    return compute_profile_pair(canon, ced, taylor, eps, half_width=half_width,
                                points_per_unit=ppu)


def _profile(ctx, model):
    canon = reduce_model(model)
    if canon.m != 1:
        ctx.skip("profile", "needs a simple zero characteristic speed (m = 1)")
        return
    p = ctx.params
    pair = _pair_job((model, p["order"], p["eps"], p["half_width"], p["points_per_unit"]))
    ctx.csv("profile.csv", _profile_header(model.r), _profile_rows(pair))
    ctx.verdict("lax type", pair.rh.lax_type)
    mono = bool(np.all(np.diff(pair.lambda_rel) < 0) and np.all(np.diff(pair.lambda_ce) < 0))
    ctx.verdict("lambda_p monotone", mono)
    qn = max(1.0, float(np.linalg.norm(pair.normal_form.q)))
    ctx.verdict("conservation", pair.conservation <= p["tol"] * qn, deviation=pair.conservation)
    ctx.details["normal form"] = {"delta": pair.normal_form.delta, "Lambda": pair.normal_form.Lambda,
                                  "q1": pair.normal_form.q1, "convention": pair.normal_form.convention,
                                  "viscous method": pair.viscous.method}
    ctx.details["metrics"] = pair.metrics


def _sweep(ctx, model):
    canon = reduce_model(model)
    if canon.m != 1:
        ctx.skip("sweep", "needs a simple zero characteristic speed (m = 1)")
        return
    p = ctx.params
    jobs = [(model, p["order"], eps, p["half_width"], p["points_per_unit"]) for eps in p["eps_list"]]
    nw = worker_count(ctx.config)
    if nw > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(nw, len(jobs))) as pool:
            pairs = list(pool.map(_pair_job, jobs))
    else:
        pairs = [_pair_job(j) for j in jobs]
    for pair in pairs:
        ctx.csv(f"profile_eps_{pair.eps:g}.csv", _profile_header(model.r), _profile_rows(pair))
    if len(pairs) < 2:
        ctx.skip("orders", "need at least two eps values")
        return
    rep = compare_profiles(pairs, slack=p["slack"])
    rows = []
    for name, order in rep.orders.items():
        j = int(name.split("_j")[1]) if "_j" in name else 0
        rows.append([name, j, order, rep.required[name], rep.passed[name]])
        ctx.verdict(f"order {name}", rep.passed[name], order=order, required=rep.required[name])
    ctx.csv("sweep_orders.csv", ["metric", "j", "fitted_order", "required", "pass"], rows)
    mrows = [[eps, name, vals[i]] for name, vals in rep.metrics.items()
             for i, eps in enumerate(rep.eps)]
    ctx.csv("sweep_metrics.csv", ["eps", "metric", "value"], mrows)
    ctx.verdict("lambda_p monotone", rep.monotone)
    ctx.verdict("conservation", rep.conservation <= p["tol"], relative=rep.conservation)


SCENARIO_FUNCS = {
    "check-hypotheses": _check_hypotheses,
    "chapman-enskog": _chapman_enskog,
    "reduce": _reduce,
    "resolvent-probe": _resolvent_probe,
    "stable-manifold": _stable_manifold,
    "center-taylor": _center_taylor,
    "profile": _profile,
    "sweep": _sweep,
}


def run(config: RunConfig, out=None) -> RunManifest:
    """Execute the configured scenario; module errors become failed verdicts."""
    out = Path(out or config.out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = _Context(config, out)
    t0 = time.perf_counter()
    try:
        model = load_config_model(config)
        SCENARIO_FUNCS[config.scenario](ctx, model)
    except (KinshockError, np.linalg.LinAlgError, ValueError) as exc:
        ctx.verdicts["error"] = FAIL
        ctx.details["error"] = {"type": type(exc).__name__, "message": str(exc)}
    manifest = RunManifest(config=config.to_document(), version=__version__,
                           wall_clock=time.perf_counter() - t0, verdicts=ctx.verdicts,
                           details=ctx.details,
                           files=[{"name": f, "sha256": file_digest(out / f)} for f in ctx.files])
    with open(out / "manifest.json", "w", newline="\n") as fh:
        fh.write(manifest.to_json() + "\n")
    return manifest
