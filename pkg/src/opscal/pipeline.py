"""Experiment pipelines: the joint online-calibration protocol, guarantee
suites, and the covariate-free hedging run.

One replication walks the test stream once and emits every requested
method's forecast in lockstep: the base model (BM) passes scores through;
FPS applies the calibration-prefix batch fit; WPS refits on the full prefix
every W steps; OPS/OBS advance one projected Newton step per observation
(consuming the stream from its first point); TOPS/HOPS (and TOBS/HOBS)
track or hedge over the online scaler's forecasts on the emitted steps;
WHB is the windowed histogram-binning baseline and TWHB its tracked
variant. Metrics are cumulative over the emitted region and snapshotted at
evaluation timestamps from T_cal + 2W to the end of the stream.

Replications use independent seed substreams keyed by replication index,
so results are identical whether they run inline or in a worker pool, and
two invocations with the same configuration produce byte-identical output
files.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .calibeating import CalibeatingInvariantError
from .core import BinningScheme
from .datagen import (
    P_HEDGE,
    P_HEDGE_BETA,
    P_STREAM,
    StreamSpec,
    build_scored_stream,
    replication_seed,
    substream,
)
from .metrics import (
    brier,
    calibration_error,
    hedging_brier_slack,
    hedging_ce_bound,
    hedging_sharpness_slack,
    metric_report,
    sharpness,
    tracking_sharpness_slack,
    true_accuracy,
    true_ce,
)
from .ons import OnsConfig, initial_theta, ons_regret_bound
from .plotting import line_plot_svg
from .scalers import (
    beta_apply,
    beta_features,
    fit_beta_batch,
    fit_histogram_binning,
    fit_platt_batch,
    platt_apply,
    platt_features,
)

METHODS = ("BM", "FPS", "WPS", "OPS", "TOPS", "HOPS",
           "FBS", "WBS", "OBS", "TOBS", "HOBS", "WHB", "TWHB")

_PC = OnsConfig.platt()
_BC = OnsConfig.beta()

# which computed columns each method depends on
_NEEDS_OPS = {"OPS", "TOPS", "HOPS"}
_NEEDS_OBS = {"OBS", "TOBS", "HOBS"}
_NEEDS_CAL_FIT = {"FPS", "WPS", "FBS", "WBS", "WHB", "TWHB"}


@dataclass(frozen=True)
class ExperimentConfig:
    stream: StreamSpec
    methods: tuple = ("BM", "FPS", "WPS", "OPS", "TOPS", "HOPS")
    epsilon: float = 0.1
    replications: int = 100
    master_seed: int = 0
    output_dir: str | None = None
    eval_stride: int = 250
    workers: int = 1

    def __post_init__(self):
        if not self.methods:
            raise ValueError("methods must be nonempty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods: {bad}")
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in (0, 1]")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.stream.kind == "adversarial":
            extra = set(self.methods) - {"OPS", "HOPS"}
            if extra:
                raise ValueError(
                    "adversarial streams support only OPS/HOPS (the adversary "
                    f"responds to a single announced forecast): {sorted(extra)}"
                )
            if self.stream.T_cal != 0:
                raise ValueError("adversarial streams have no calibration prefix (T_cal must be 0)")
        elif self.stream.T_cal < 1 and (set(self.methods) & _NEEDS_CAL_FIT):
            raise ValueError("FPS/WPS/FBS/WBS/WHB/TWHB need a calibration prefix (T_cal >= 1)")


def eval_timestamps(T: int, t_cal: int, window: int, stride: int) -> np.ndarray:
    """Snapshot times (test-stream local), from t_cal + 2*window to T."""
    start = t_cal + 2 * window
    if start > T:
        raise ValueError(f"stream too short: need at least T_cal + 2W = {start} points")
    ts = list(range(start, T + 1, stride))
    if ts[-1] != T:
        ts.append(T)
    return np.asarray(ts, dtype=int)


def _windowed_param_schedule(scores, ys, t_cal, window, T, fitter, init_params):
    """Parameter per step for a windowed learner over the emitted region.

    Returns a list mapping emitted step offset -> params; refits on the
    full prefix (s <= t-1) at every t with mod(t - t_cal, window) == 0.
    """
    params = init_params
    out = []
    for t in range(t_cal + 1, T + 1):
        if (t - t_cal) % window == 0:
            params = fitter(scores[: t - 1], ys[: t - 1])
        out.append(params)
    return out


def run_replication(spec: StreamSpec, methods, epsilon: float):
    """One pass of the joint protocol. Returns (columns, ys, truth, diag);
    columns are emitted-region forecasts (t = T_cal+1 .. T)."""
    scheme = BinningScheme(epsilon)
    if spec.kind == "adversarial":
        return _run_adversarial_replication(spec, methods, scheme)

    stream = build_scored_stream(spec)
    ts = np.ascontiguousarray(stream.test_scores())
    ty = np.ascontiguousarray(stream.test_y())
    truth = stream.test_truth()
    T = len(ts)
    t_cal = spec.T_cal
    em = slice(t_cal, T)

    want = set(methods)
    cols = {}
    diag = {}
    if spec.kind == "csv":
        diag["csv_dropped_rows"] = stream.n_dropped_rows

    if "BM" in want:
        cols["BM"] = ts[em]

    ops_full = None
    if want & _NEEDS_OPS:
        ops_full, _ = kernels.ons_pass(
            np.ascontiguousarray(platt_features(ts)), ty, _PC.gamma, _PC.rho, _PC.radius,
            initial_theta(2),
        )
        if "OPS" in want:
            cols["OPS"] = ops_full[em]
            fit = fit_platt_batch(ts, ty)
            reg = _stream_regret(ops_full, ts, ty, fit.as_array(), platt_apply)
            B = max(1.0, float(np.linalg.norm(fit.as_array())))
            diag["OPS_regret"] = reg
            diag["OPS_regret_bound"] = float(ons_regret_bound(T, B))
            diag["OPS_comparator_norm"] = float(np.linalg.norm(fit.as_array()))

    obs_full = None
    if want & _NEEDS_OBS:
        obs_full, _ = kernels.ons_pass(
            np.ascontiguousarray(beta_features(ts)), ty, _BC.gamma, _BC.rho, _BC.radius,
            initial_theta(3),
        )
        if "OBS" in want:
            cols["OBS"] = obs_full[em]
            fit = fit_beta_batch(ts, ty)
            reg = _stream_regret(obs_full, ts, ty, fit.as_array(), beta_apply)
            B = max(1.0, float(np.linalg.norm(fit.as_array())))
            diag["OBS_regret"] = reg
            diag["OBS_regret_bound"] = float(ons_regret_bound(T, B))

    if want & {"FPS", "WPS"}:
        fps_params = fit_platt_batch(ts[:t_cal], ty[:t_cal])
        if "FPS" in want:
            cols["FPS"] = platt_apply(fps_params, ts[em])
        if "WPS" in want:
            sched = _windowed_param_schedule(ts, ty, t_cal, spec.W, T, fit_platt_batch, fps_params)
            cols["WPS"] = np.array(
                [platt_apply(p, s) for p, s in zip(sched, ts[em])]
            )

    if want & {"FBS", "WBS"}:
        fbs_params = fit_beta_batch(ts[:t_cal], ty[:t_cal])
        if "FBS" in want:
            cols["FBS"] = beta_apply(fbs_params, ts[em])
        if "WBS" in want:
            sched = _windowed_param_schedule(ts, ty, t_cal, spec.W, T, fit_beta_batch, fbs_params)
            cols["WBS"] = np.array(
                [beta_apply(p, s) for p, s in zip(sched, ts[em])]
            )

    if want & {"WHB", "TWHB"}:
        fitter = lambda s, y: fit_histogram_binning(s, y, m=scheme.m)  # noqa: E731
        whb0 = fitter(ts[:t_cal], ty[:t_cal])
        sched = _windowed_param_schedule(ts, ty, t_cal, spec.W, T, fitter, whb0)
        whb = np.array([m.predict(s) for m, s in zip(sched, ts[em])])
        if "WHB" in want:
            cols["WHB"] = whb
        if "TWHB" in want:
            cols["TWHB"] = kernels.tracking_pass(
                np.ascontiguousarray(whb), ty[em], scheme.epsilon, scheme.m
            )

    if "TOPS" in want:
        cols["TOPS"] = kernels.tracking_pass(
            np.ascontiguousarray(ops_full[em]), ty[em], scheme.epsilon, scheme.m
        )
    if "HOPS" in want:
        us = substream(spec.seed, P_HEDGE).random(T - t_cal)
        cols["HOPS"] = kernels.hops_pass(
            np.ascontiguousarray(ops_full[em]), ty[em], us, scheme.epsilon, scheme.m
        )
    if "TOBS" in want:
        cols["TOBS"] = kernels.tracking_pass(
            np.ascontiguousarray(obs_full[em]), ty[em], scheme.epsilon, scheme.m
        )
    if "HOBS" in want:
        us = substream(spec.seed, P_HEDGE_BETA).random(T - t_cal)
        cols["HOBS"] = kernels.hops_pass(
            np.ascontiguousarray(obs_full[em]), ty[em], us, scheme.epsilon, scheme.m
        )

    ys_em = ty[em]
    _assert_tracking_guarantee(cols, ops_full, obs_full, em, ys_em, scheme)
    return cols, ys_em, (None if truth is None else truth[em]), diag


def _stream_regret(probs, scores, ys, oracle_params, apply_fn):
    from .core import log_loss

    oracle = apply_fn(oracle_params, scores)
    return float(np.sum(log_loss(probs, ys)) - np.sum(log_loss(oracle, ys)))


def _assert_tracking_guarantee(cols, ops_full, obs_full, em, ys_em, scheme):
    """The tracked forecaster's sharpness can trail the online scaler's by at
    most eps + eps^2/4 + (log T + 1)/(eps T), deterministically on every run."""
    T_emit = len(ys_em)
    if T_emit == 0:
        return
    slack = tracking_sharpness_slack(scheme.epsilon, T_emit) + 1e-12
    for tracked_name, expert_full in (("TOPS", ops_full), ("TOBS", obs_full)):
        if tracked_name in cols and expert_full is not None:
            shp_tracked = sharpness(cols[tracked_name], ys_em, scheme)
            shp_expert = sharpness(expert_full[em], ys_em, scheme)
            if shp_tracked < shp_expert - slack:
                raise CalibeatingInvariantError(
                    f"tracking sharpness guarantee violated for {tracked_name}: "
                    f"{shp_tracked:.6f} < {shp_expert:.6f} - {slack:.6f}"
                )


def _run_adversarial_replication(spec: StreamSpec, methods, scheme: BinningScheme):
    stream = build_scored_stream(spec)
    feats = np.ascontiguousarray(platt_features(stream.scores))
    want = set(methods)
    cols = {}
    diag = {}
    if "HOPS" in want:
        us = substream(spec.seed, P_HEDGE).random(len(stream.scores))
        ops, hops, ys = kernels.hops_adversarial_pass(
            feats, us, scheme.epsilon, scheme.m, _PC.gamma, _PC.rho, _PC.radius, initial_theta(2)
        )
        cols["HOPS"] = hops
        if "OPS" in want:
            cols["OPS"] = ops
    else:
        ops, ys = kernels.ops_adversarial_pass(feats, _PC.gamma, _PC.rho, _PC.radius, initial_theta(2))
        cols["OPS"] = ops
    return cols, ys, None, diag


def _metric_series(col, ys, timestamps, t_cal, scheme):
    ces = np.zeros(len(timestamps))
    shps = np.zeros(len(timestamps))
    for i, tau in enumerate(timestamps):
        k = tau - t_cal
        ces[i] = calibration_error(col[:k], ys[:k], scheme)
        shps[i] = sharpness(col[:k], ys[:k], scheme)
    return ces, shps


def _pipeline_worker(args):
    spec, methods, epsilon, timestamps, rep, master_seed = args
    rep_spec = replace(spec, seed=replication_seed(master_seed, rep))
    cols, ys, truth, diag = run_replication(rep_spec, methods, epsilon)
    scheme = BinningScheme(epsilon)
    out = {}
    for name, col in cols.items():
        out[name] = _metric_series(col, ys, timestamps, rep_spec.T_cal, scheme)
    final = {}
    for name, col in cols.items():
        rep_m = metric_report(col, ys, scheme, truth=truth)
        final[name] = rep_m
    return rep, out, final, diag


@dataclass
class RunReport:
    config: ExperimentConfig
    timestamps: np.ndarray
    ce_mean: dict
    ce_std: dict
    shp_mean: dict
    shp_std: dict
    final: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    files: list = field(default_factory=list)


def run_pipeline(config: ExperimentConfig) -> RunReport:
    """Run all replications, aggregate CE/SHP series, write outputs."""
    spec = config.stream
    T = spec.T_test
    timestamps = eval_timestamps(T, spec.T_cal, spec.W, config.eval_stride)
    jobs = [
        (spec, tuple(config.methods), config.epsilon, timestamps, rep, config.master_seed)
        for rep in range(config.replications)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = sorted(pool.map(_pipeline_worker, jobs), key=lambda r: r[0])
    else:
        results = [_pipeline_worker(j) for j in jobs]

    names = [m for m in config.methods if m in results[0][1]]
    n_rep = len(results)
    ce = {m: np.zeros((n_rep, len(timestamps))) for m in names}
    shp = {m: np.zeros((n_rep, len(timestamps))) for m in names}
    finals = {m: [] for m in names}
    diags = []
    for rep, series, final, diag in results:
        for m in names:
            ce[m][rep], shp[m][rep] = series[m]
            finals[m].append(final[m])
        diags.append(diag)

    def _std(a):
        return np.std(a, axis=0, ddof=1) if n_rep > 1 else np.zeros(a.shape[1])

    report = RunReport(
        config=config,
        timestamps=timestamps,
        ce_mean={m: np.mean(ce[m], axis=0) for m in names},
        ce_std={m: _std(ce[m]) for m in names},
        shp_mean={m: np.mean(shp[m], axis=0) for m in names},
        shp_std={m: _std(shp[m]) for m in names},
        final={
            m: {
                "ce": float(np.mean([f.ce for f in finals[m]])),
                "shp": float(np.mean([f.shp for f in finals[m]])),
                "brier": float(np.mean([f.brier for f in finals[m]])),
                "true_ce": (
                    None
                    if finals[m][0].true_ce is None
                    else float(np.mean([f.true_ce for f in finals[m]]))
                ),
                "true_accuracy": (
                    None
                    if finals[m][0].true_accuracy is None
                    else float(np.mean([f.true_accuracy for f in finals[m]]))
                ),
            }
            for m in names
        },
        diagnostics=_aggregate_diagnostics(diags),
    )
    if config.output_dir:
        _write_outputs(report, config.output_dir)
    return report


def _aggregate_diagnostics(diags):
    out = {}
    for key in ("OPS_regret", "OBS_regret"):
        vals = [d[key] for d in diags if key in d]
        if vals:
            bounds = [d[key + "_bound"] for d in diags if key + "_bound" in d]
            out[key + "_mean"] = float(np.mean(vals))
            out[key + "_max"] = float(np.max(vals))
            out[key + "_bound_min"] = float(np.min(bounds))
            out[key + "_bound_satisfied"] = bool(
                all(v <= b for v, b in zip(vals, bounds))
            )
    if diags and "csv_dropped_rows" in diags[0]:
        out["csv_dropped_rows"] = int(diags[0]["csv_dropped_rows"])
    return out


def _fmt(x) -> str:
    return repr(float(x))


def _write_outputs(report: RunReport, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for m in report.ce_mean:
        for metric, mean, std in (
            ("ce", report.ce_mean[m], report.ce_std[m]),
            ("shp", report.shp_mean[m], report.shp_std[m]),
        ):
            path = os.path.join(out_dir, f"{m}_{metric}.csv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("t,mean,std\n")
                for t, mu, sd in zip(report.timestamps, mean, std):
                    fh.write(f"{int(t)},{_fmt(mu)},{_fmt(sd)}\n")
            files.append(path)
    for metric, means, stds in (
        ("ce", report.ce_mean, report.ce_std),
        ("shp", report.shp_mean, report.shp_std),
    ):
        path = os.path.join(out_dir, f"{metric}.svg")
        line_plot_svg(
            path,
            report.timestamps,
            {m: (means[m], stds[m]) for m in means},
            title=f"{metric.upper()} over time ({report.config.stream.kind})",
            xlabel="t (test-stream step)",
            ylabel=("calibration error" if metric == "ce" else "sharpness"),
        )
        files.append(path)
    summary = {
        "stream": {
            "kind": report.config.stream.kind,
            "T_train": report.config.stream.T_train,
            "T_test": report.config.stream.T_test,
            "T_cal": report.config.stream.T_cal,
            "W": report.config.stream.W,
            "delta": report.config.stream.delta,
        },
        "epsilon": report.config.epsilon,
        "replications": report.config.replications,
        "master_seed": report.config.master_seed,
        "methods": list(report.ce_mean.keys()),
        "timestamps": [int(t) for t in report.timestamps],
        "final": report.final,
        "diagnostics": report.diagnostics,
    }
    path = os.path.join(out_dir, "report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files.append(path)
    report.files = files


def run_truth_windows(kind: str, seeds, windows_global, methods=("BM", "OPS"), drift: bool = True):
    """Windowed truth-referenced accuracy/CE tables for synthetic streams.

    ``windows_global`` are inclusive (lo, hi) pairs on the full-sequence
    time axis (the train block is t = 1..T_train). Methods are limited to
    columns defined from the first test point: BM, OPS, OBS.
    """
    from .datagen import default_spec

    bad = set(methods) - {"BM", "OPS", "OBS"}
    if bad:
        raise ValueError(f"truth windows support BM/OPS/OBS only, got {sorted(bad)}")
    acc = {m: {w: [] for w in windows_global} for m in methods}
    ce = {m: {w: [] for w in windows_global} for m in methods}
    for seed in seeds:
        spec = default_spec(kind, seed=seed, drift=drift)
        stream = build_scored_stream(spec)
        t_train = spec.T_train
        cols = {}
        if "BM" in methods:
            cols["BM"] = (stream.scores, 0)  # defined from global t = 1
        if "OPS" in methods:
            probs, _ = kernels.ons_pass(
                np.ascontiguousarray(platt_features(stream.test_scores())),
                np.ascontiguousarray(stream.test_y()),
                _PC.gamma, _PC.rho, _PC.radius, initial_theta(2),
            )
            cols["OPS"] = (probs, t_train)
        if "OBS" in methods:
            probs, _ = kernels.ons_pass(
                np.ascontiguousarray(beta_features(stream.test_scores())),
                np.ascontiguousarray(stream.test_y()),
                _BC.gamma, _BC.rho, _BC.radius, initial_theta(3),
            )
            cols["OBS"] = (probs, t_train)
        for lo, hi in windows_global:
            for m, (col, offset) in cols.items():
                a, b = lo - 1 - offset, hi - offset
                if a < 0:
                    continue  # method undefined over this window
                p = col[a:b]
                tr = stream.truth[lo - 1: hi]
                acc[m][(lo, hi)].append(true_accuracy(p, tr))
                ce[m][(lo, hi)].append(true_ce(p, tr))
    table = {}
    for m in methods:
        table[m] = {}
        for w in windows_global:
            if acc[m][w]:
                table[m][w] = {
                    "true_accuracy": float(np.mean(acc[m][w])),
                    "true_ce": float(np.mean(ce[m][w])),
                }
    return table


@dataclass
class TheoremCheck:
    name: str
    detail: str
    epsilon: float
    T: int
    seeds: int
    measured: float
    bound: float
    passed: bool
    direction: str  # "<=" or ">="


def check_regret_bound(seeds: int = 20) -> list:
    """Online-scaler regret vs the batch comparator on the four synthetic
    stream configurations (T = 5000 test points each)."""
    from .datagen import default_spec

    rows = []
    for kind in ("covmulti", "labelmulti"):
        for drift in (False, True):
            worst_excess = -np.inf
            worst_bound = np.inf
            for seed in range(seeds):
                spec = default_spec(kind, seed=seed, drift=drift)
                stream = build_scored_stream(spec)
                ts, ty = stream.test_scores(), stream.test_y()
                probs, _ = kernels.ons_pass(
                    np.ascontiguousarray(platt_features(ts)),
                    np.ascontiguousarray(ty),
                    _PC.gamma, _PC.rho, _PC.radius, initial_theta(2),
                )
                fit = fit_platt_batch(ts, ty)
                reg = _stream_regret(probs, ts, ty, fit.as_array(), platt_apply)
                B = max(1.0, float(np.linalg.norm(fit.as_array())))
                bound = float(ons_regret_bound(len(ty), B))
                if reg - bound > worst_excess:
                    worst_excess = reg - bound
                    worst_bound = bound
            rows.append(
                TheoremCheck(
                    name="regret-bound",
                    detail=f"{kind} {'drift' if drift else 'iid'} (worst seed)",
                    epsilon=float("nan"),
                    T=5000,
                    seeds=seeds,
                    measured=worst_excess + worst_bound,
                    bound=worst_bound,
                    passed=bool(worst_excess <= 0.0),
                    direction="<=",
                )
            )
    return rows


def check_tracking_sharpness(seeds: int = 3, epsilons=(0.05, 0.1, 0.2)) -> list:
    """Per-run tracking sharpness guarantee across bin widths."""
    from .datagen import default_spec

    rows = []
    for eps in epsilons:
        scheme = BinningScheme(eps)
        worst = np.inf
        T_used = 0
        for kind in ("covmulti", "labelmulti"):
            for seed in range(seeds):
                spec = default_spec(kind, seed=seed, drift=True)
                stream = build_scored_stream(spec)
                ts = np.ascontiguousarray(stream.test_scores())
                ty = np.ascontiguousarray(stream.test_y())
                probs, _ = kernels.ons_pass(
                    np.ascontiguousarray(platt_features(ts)), ty,
                    _PC.gamma, _PC.rho, _PC.radius, initial_theta(2),
                )
                tracked = kernels.tracking_pass(probs, ty, eps, scheme.m)
                T_used = len(ty)
                margin = (
                    sharpness(tracked, ty, scheme)
                    - sharpness(probs, ty, scheme)
                    + tracking_sharpness_slack(eps, T_used)
                )
                worst = min(worst, margin)
        rows.append(
            TheoremCheck(
                name="tracking-sharpness",
                detail="SHP(tracked) - SHP(online) + slack, worst run",
                epsilon=eps,
                T=T_used,
                seeds=seeds,
                measured=worst,
                bound=0.0,
                passed=bool(worst >= 0.0),
                direction=">=",
            )
        )
    return rows


def check_adversarial_calibration(seeds: int = 100, T: int = 10_000, epsilon: float = 0.1):
    """Hedged forecasts stay calibrated against the outcome adversary; the
    deterministic online scaler does not. Also the Brier-score guarantee on
    the same runs."""
    scheme = BinningScheme(epsilon)
    ces_hedged, ces_det, bs_gap = [], [], []
    for seed in range(seeds):
        spec = StreamSpec(kind="adversarial", seed=replication_seed(seed, 0),
                          T_train=0, T_test=T, T_cal=0)
        stream = build_scored_stream(spec)
        feats = np.ascontiguousarray(platt_features(stream.scores))
        us = substream(spec.seed, P_HEDGE).random(T)
        ops, hops, ys = kernels.hops_adversarial_pass(
            feats, us, epsilon, scheme.m, _PC.gamma, _PC.rho, _PC.radius, initial_theta(2)
        )
        ces_hedged.append(calibration_error(hops, ys, scheme))
        bs_gap.append(brier(hops, ys) - brier(ops, ys))
        ops_det, ys_det = kernels.ops_adversarial_pass(feats, _PC.gamma, _PC.rho, _PC.radius, initial_theta(2))
        ces_det.append(calibration_error(ops_det, ys_det, scheme))
    rows = [
        TheoremCheck(
            name="hedged-adversarial-ce",
            detail="mean CE of hedged forecasts vs adversary",
            epsilon=epsilon,
            T=T,
            seeds=seeds,
            measured=float(np.mean(ces_hedged)),
            bound=float(hedging_ce_bound(epsilon, T)),
            passed=bool(np.mean(ces_hedged) <= hedging_ce_bound(epsilon, T)),
            direction="<=",
        ),
        TheoremCheck(
            name="deterministic-adversarial-ce",
            detail="mean CE of the deterministic scaler vs its adversary",
            epsilon=epsilon,
            T=T,
            seeds=seeds,
            measured=float(np.mean(ces_det)),
            bound=0.4,
            passed=bool(np.mean(ces_det) >= 0.4),
            direction=">=",
        ),
        TheoremCheck(
            name="hedging-brier",
            detail="mean BS(hedged) - BS(online) vs slack (adversarial)",
            epsilon=epsilon,
            T=T,
            seeds=seeds,
            measured=float(np.mean(bs_gap)),
            bound=float(hedging_brier_slack(epsilon, T) + 0.01),
            passed=bool(np.mean(bs_gap) <= hedging_brier_slack(epsilon, T) + 0.01),
            direction="<=",
        ),
    ]
    return rows


def check_hedging_sharpness_and_brier(seeds: int = 100, epsilon: float = 0.1) -> list:
    """Seed-averaged hedging guarantees on the four synthetic streams."""
    from .datagen import default_spec

    scheme = BinningScheme(epsilon)
    rows = []
    for kind in ("covmulti", "labelmulti"):
        for drift in (False, True):
            shp_gaps, bs_gaps = [], []
            T_used = 0
            for seed in range(seeds):
                spec = default_spec(kind, seed=seed, drift=drift)
                stream = build_scored_stream(spec)
                ts = np.ascontiguousarray(stream.test_scores())
                ty = np.ascontiguousarray(stream.test_y())
                probs, _ = kernels.ons_pass(
                    np.ascontiguousarray(platt_features(ts)), ty,
                    _PC.gamma, _PC.rho, _PC.radius, initial_theta(2),
                )
                us = substream(spec.seed, P_HEDGE).random(len(ty))
                hedged = kernels.hops_pass(probs, ty, us, epsilon, scheme.m)
                T_used = len(ty)
                shp_gaps.append(sharpness(hedged, ty, scheme) - sharpness(probs, ty, scheme))
                bs_gaps.append(brier(hedged, ty) - brier(probs, ty))
            label = f"{kind} {'drift' if drift else 'iid'}"
            rows.append(
                TheoremCheck(
                    name="hedging-sharpness",
                    detail=f"mean SHP(hedged) - SHP(online), {label}",
                    epsilon=epsilon,
                    T=T_used,
                    seeds=seeds,
                    measured=float(np.mean(shp_gaps)),
                    bound=float(-(hedging_sharpness_slack(epsilon, T_used) + 0.01)),
                    passed=bool(
                        np.mean(shp_gaps) >= -(hedging_sharpness_slack(epsilon, T_used) + 0.01)
                    ),
                    direction=">=",
                )
            )
            rows.append(
                TheoremCheck(
                    name="hedging-brier",
                    detail=f"mean BS(hedged) - BS(online), {label}",
                    epsilon=epsilon,
                    T=T_used,
                    seeds=seeds,
                    measured=float(np.mean(bs_gaps)),
                    bound=float(hedging_brier_slack(epsilon, T_used) + 0.01),
                    passed=bool(np.mean(bs_gaps) <= hedging_brier_slack(epsilon, T_used) + 0.01),
                    direction="<=",
                )
            )
    return rows


def check_climatology(seeds: int = 20, T: int = 5000, p: float = 0.37, epsilon: float = 0.1):
    """Covariate-free hedging settles at the long-run outcome frequency."""
    scheme = BinningScheme(epsilon)
    tails = []
    for seed in range(seeds):
        rep_seed = replication_seed(seed, 0)
        ys = (substream(rep_seed, P_STREAM).random(T) < p).astype(float)
        us = substream(rep_seed, P_HEDGE).random(T)
        fc = kernels.hops_pass(np.zeros(T), ys, us, epsilon, scheme.m)
        tails.append(float(np.mean(fc[-1000:])))
    tail_mean = float(np.mean(tails))
    return [
        TheoremCheck(
            name="climatology",
            detail=f"|mean of last 1000 forecasts - {p}| (tail mean {tail_mean:.4f})",
            epsilon=epsilon,
            T=T,
            seeds=seeds,
            measured=abs(tail_mean - p),
            bound=0.05,
            passed=bool(abs(tail_mean - p) <= 0.05),
            direction="<=",
        )
    ]


def run_theorem_suite(output_dir: str | None = None, quick: bool = False) -> list:
    """All structural-guarantee checks; writes theorems.csv when asked."""
    seeds_big = 20 if quick else 100
    rows = []
    rows += check_regret_bound(seeds=5 if quick else 20)
    rows += check_tracking_sharpness(seeds=1 if quick else 3)
    rows += check_adversarial_calibration(seeds=seeds_big)
    rows += check_hedging_sharpness_and_brier(seeds=10 if quick else 100)
    rows += check_climatology(seeds=5 if quick else 20)
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        path = os.path.join(output_dir, "theorems.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("check,detail,epsilon,T,seeds,measured,bound,direction,passed\n")
            for r in rows:
                fh.write(
                    f"{r.name},\"{r.detail}\",{_fmt(r.epsilon) if not math.isnan(r.epsilon) else ''},"
                    f"{r.T},{r.seeds},{_fmt(r.measured)},{_fmt(r.bound)},{r.direction},{r.passed}\n"
                )
    return rows


@dataclass
class ClimatologyReport:
    forecasts: np.ndarray
    outcomes: np.ndarray
    tail_means: list
    files: list = field(default_factory=list)


def run_climatology(
    p: float = 0.37,
    T: int = 5000,
    epsilon: float = 0.1,
    replications: int = 20,
    master_seed: int = 0,
    output_dir: str | None = None,
) -> ClimatologyReport:
    """Covariate-free hedging on i.i.d. Bernoulli(p) outcome streams.

    Writes the first replication's forecast trace and a trace plot.
    """
    scheme = BinningScheme(epsilon)
    tails = []
    first = None
    for rep in range(replications):
        rep_seed = replication_seed(master_seed, rep)
        ys = (substream(rep_seed, P_STREAM).random(T) < p).astype(float)
        us = substream(rep_seed, P_HEDGE).random(T)
        fc = kernels.hops_pass(np.zeros(T), ys, us, epsilon, scheme.m)
        tails.append(float(np.mean(fc[-min(1000, T):])))
        if first is None:
            first = (fc, ys)
    fc, ys = first
    report = ClimatologyReport(forecasts=fc, outcomes=ys, tail_means=tails)
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        trace_path = os.path.join(output_dir, "climatology_trace.csv")
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write("t,forecast,y\n")
            for t in range(T):
                fh.write(f"{t + 1},{_fmt(fc[t])},{int(ys[t])}\n")
        running = np.cumsum(ys) / np.arange(1, T + 1)
        xs = np.arange(1, T + 1)
        plot_path = os.path.join(output_dir, "climatology.svg")
        line_plot_svg(
            plot_path,
            xs,
            {"forecast": (fc, None), "running outcome mean": (running, None)},
            title=f"Covariate-free hedging on Bernoulli({p})",
            xlabel="t",
            ylabel="probability",
            max_points=800,
        )
        summary_path = os.path.join(output_dir, "climatology.json")
        with open(summary_path, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "p": p, "T": T, "epsilon": epsilon,
                    "replications": replications, "master_seed": master_seed,
                    "tail_mean_avg": float(np.mean(tails)),
                    "tail_means": tails,
                },
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
        report.files = [trace_path, plot_path, summary_path]
    return report


def dump_stream(spec: StreamSpec, path: str):
    """Write the stream as CSV (t, score, y, truth); t is global."""
    if spec.kind == "adversarial":
        raise ValueError("adversarial outcomes are generated at run time; nothing to dump")
    stream = build_scored_stream(spec)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,score,y,truth\n")
        for t in range(len(stream.scores)):
            truth = "" if stream.truth is None else _fmt(stream.truth[t])
            fh.write(f"{t + 1},{_fmt(stream.scores[t])},{int(stream.y[t])},{truth}\n")
    return path
