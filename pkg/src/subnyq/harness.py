"""Experiment orchestration: spark maps, recovery-rate sweeps, pipeline checks.

Every Monte-Carlo stream is keyed by (master seed, substream tag, grid point,
trial index), so results are byte-identical no matter how trials are split
across workers.  CSV rows echo enough of the configuration to reproduce any
single point in isolation.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .frontend import acquire, relative_model_error
from .params import SystemConfig, config_echo, derive_params
from .prseq import build_pr_bank
from .recovery import dcs_somp, support_success
from .sensing import (build_D, build_D_fold, build_lpf, column_independence_rate,
                      make_sensing_model)
from .signals import add_awgn, gen_fullband, gen_multiband

_TRIAL_STREAM = 37
_SPARK_STREAM = 41
_PIPELINE_STREAM = 53

PRESETS = {
    "paper": dict(f_max_hz=10e9, L=127, M=3, p=1, q_prime=3, W=15,
                  band_max_width_hz=5e6, lpf_kind="random", master_seed=0),
    "ci": dict(f_max_hz=1e9, L=31, M=2, p=1, q_prime=3, W=7,
               band_max_width_hz=4e6, lpf_kind="random", master_seed=0),
}

PLAN_KINDS = ("spark_map", "recovery_sweep", "pipeline_check")


def preset_config(name: str, master_seed: int = 0) -> SystemConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    fields = dict(PRESETS[name])
    fields["master_seed"] = master_seed
    return SystemConfig(**fields)


def coprime_q_values(p: int, q_lo: int, q_hi: int) -> tuple:
    """All odd q' in [q_lo, q_hi] coprime to p."""
    return tuple(q for q in range(q_lo | 1, q_hi + 1, 2) if math.gcd(p, q) == 1)


@dataclass(frozen=True)
class ExperimentPlan:
    """Grid, trial count, and seed for one batch experiment."""

    kind: str
    base: SystemConfig
    p_values: tuple = (1,)
    q_values: tuple | None = None     # None: all odd coprime q' in q_range
    q_range: tuple = (3, 19)
    m_values: tuple | None = None     # None: (base.M,)
    k_b: int = 10
    snr_db: float | None = None
    trials: int = 100
    threads: int = 1
    out_dir: str | None = None
    rank_tol: float = 1e-8
    n_configs: int = 50               # pipeline_check only

    def __post_init__(self):
        if self.kind not in PLAN_KINDS:
            raise ValueError(f"kind must be one of {PLAN_KINDS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.p_values:
            raise ValueError("p grid must be non-empty")

    def q_grid(self, p: int) -> tuple:
        """Recovery grid: valid (odd, coprime) q' only."""
        if self.q_values is not None:
            return tuple(self.q_values)
        return coprime_q_values(p, *self.q_range)

    def q_grid_all(self) -> tuple:
        """Spark grid: every odd q' in range, coprime or not."""
        if self.q_values is not None:
            return tuple(self.q_values)
        lo, hi = self.q_range
        return tuple(range(lo | 1, hi + 1, 2))

    def ms(self) -> tuple:
        return self.m_values if self.m_values is not None else (self.base.M,)


@dataclass(frozen=True)
class CurvePoint:
    """One recovery-rate measurement at a fixed (M, p, q') grid point."""

    f_s_total_hz: float
    f_s_per_channel_hz: float
    rate: float
    successes: int
    trials: int
    ci_lo: float
    ci_hi: float
    p: int
    q_prime: int
    M: int
    L: int
    W: int
    k_b: int
    snr_db: float | None
    lpf_kind: str
    master_seed: int
    trial_errors: int
    condition_warnings: int


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple:
    """Binomial confidence bounds; safe at 0 and 1."""
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # clamp against rounding so the interval always contains the estimate
    return max(0.0, min(center - half, phat)), min(1.0, max(center + half, phat))


# ---------------------------------------------------------------------------
# spark map
# ---------------------------------------------------------------------------

def run_spark_map(plan: ExperimentPlan) -> list:
    """Column-independence rates over the (p, q') grid.

    Coprime pairs use the unique-picking matrix; non-coprime pairs fall back
    to the direct fold matrix (whose collided/vanished columns are the
    point), and every pair is scanned for exact duplicate columns.
    """
    if plan.kind != "spark_map":
        raise ValueError("plan kind must be spark_map")
    rows = []
    for p in plan.p_values:
        for q in plan.q_grid_all():
            cfg = replace(plan.base, p=p, q_prime=q)
            dp = derive_params(cfg)
            bank = build_pr_bank(dp, seed=cfg.master_seed)
            g = math.gcd(p, q)
            if g == 1:
                d = build_D(bank, dp)
            else:
                d = build_D_fold(bank, dp)
            duplicates = bool(np.unique(d.T, axis=0).shape[0] < d.shape[1])
            rng = np.random.default_rng([cfg.master_seed, _SPARK_STREAM, p, q])
            rate = column_independence_rate(d, plan.trials, rng, tol=plan.rank_tol)
            rows.append({
                "p": p,
                "q_prime": q,
                "gcd": g,
                "coprime": int(g == 1),
                "q_gt_p": int(q > p),
                "rate": rate,
                "duplicates_found": int(duplicates),
                "trials": plan.trials,
                "rank_tol": plan.rank_tol,
                "M": cfg.M,
                "L": cfg.L,
                "master_seed": cfg.master_seed,
            })
    if plan.out_dir:
        _write_csv(os.path.join(plan.out_dir, "spark_map.csv"), rows)
    return rows


# ---------------------------------------------------------------------------
# recovery sweep
# ---------------------------------------------------------------------------

def _recovery_point_worker(payload: dict) -> dict:
    """Run all trials of one grid point; model built once, trials keyed."""
    cfg = SystemConfig(**payload["config"])
    dp = derive_params(cfg)
    seed = cfg.master_seed
    bank = build_pr_bank(dp, seed=seed)
    lpf = build_lpf(cfg.lpf_kind, dp, seed=seed)
    model = make_sensing_model(bank, lpf, dp)
    k_b = payload["k_b"]
    snr_db = payload["snr_db"]
    iterations = min(2 * k_b, model.n_rows, model.n_cols)
    successes = 0
    warnings = 0
    errors = 0
    for t in range(payload["trials"]):
        rng = np.random.default_rng(
            [seed, _TRIAL_STREAM, cfg.M, cfg.p, cfg.q_prime, t])
        try:
            x, _, support = gen_multiband(k_b, dp, rng)
            noisy = add_awgn(x, snr_db, rng)
            z = acquire(noisy, bank, lpf, dp).Z
            result = dcs_somp(z, model, iterations)
            successes += int(support_success(support, result.support_hat))
            warnings += int(result.condition_warning)
        except Exception:  # a failed trial counts as a miss, never an abort
            errors += 1
    return {
        "successes": successes,
        "warnings": warnings,
        "errors": errors,
        "f_s_total": dp.f_s_total,
        "f_s_per_channel": dp.f_s_prime,
    }


def recovery_grid(plan: ExperimentPlan) -> list:
    """(M, p, q') points of a recovery sweep, in deterministic order."""
    points = []
    for m in plan.ms():
        for p in plan.p_values:
            for q in plan.q_grid(p):
                points.append((m, p, q))
    return points


def run_recovery_sweep(plan: ExperimentPlan) -> list:
    """Monte-Carlo support-recovery rates over the sweep grid."""
    if plan.kind != "recovery_sweep":
        raise ValueError("plan kind must be recovery_sweep")
    points = recovery_grid(plan)
    payloads = []
    for m, p, q in points:
        cfg = replace(plan.base, M=m, p=p, q_prime=q)
        payloads.append({
            "config": config_echo(cfg),
            "k_b": plan.k_b,
            "snr_db": plan.snr_db,
            "trials": plan.trials,
        })
    if plan.threads > 1:
        with ProcessPoolExecutor(max_workers=plan.threads) as pool:
            results = list(pool.map(_recovery_point_worker, payloads))
    else:
        results = [_recovery_point_worker(pl) for pl in payloads]
    curve = []
    for (m, p, q), res in zip(points, results):
        lo, hi = wilson_interval(res["successes"], plan.trials)
        curve.append(CurvePoint(
            f_s_total_hz=res["f_s_total"],
            f_s_per_channel_hz=res["f_s_per_channel"],
            rate=res["successes"] / plan.trials,
            successes=res["successes"],
            trials=plan.trials,
            ci_lo=lo,
            ci_hi=hi,
            p=p,
            q_prime=q,
            M=m,
            L=plan.base.L,
            W=plan.base.W,
            k_b=plan.k_b,
            snr_db=plan.snr_db,
            lpf_kind=plan.base.lpf_kind,
            master_seed=plan.base.master_seed,
            trial_errors=res["errors"],
            condition_warnings=res["warnings"],
        ))
    if plan.out_dir:
        rows = []
        for pt in curve:
            row = dict(vars(pt))
            row["gcd"] = math.gcd(pt.p, pt.q_prime)
            row["q_gt_p"] = int(pt.q_prime > pt.p)
            rows.append(row)
        _write_csv(os.path.join(plan.out_dir, "recovery_sweep.csv"), rows)
    return curve


def minimal_rate_90(points, threshold: float = 0.9):
    """Smallest total sampling rate reaching the target recovery rate."""
    for pt in sorted(points, key=lambda c: c.f_s_total_hz):
        if pt.rate >= threshold:
            return pt.f_s_total_hz
    return None


def monotonicity_violations(points) -> list:
    """Rate drops along increasing total rate beyond twice binomial sigma.

    Violations are reported, never smoothed away.
    """
    def key(pt):
        return (pt.M, pt.p, pt.lpf_kind, pt.snr_db if pt.snr_db is not None else "none")

    groups = {}
    for pt in points:
        groups.setdefault(key(pt), []).append(pt)
    bad = []
    for pts in groups.values():
        pts = sorted(pts, key=lambda c: c.f_s_total_hz)
        for a, b in zip(pts, pts[1:]):
            sigma = math.sqrt(
                a.rate * (1 - a.rate) / a.trials + b.rate * (1 - b.rate) / b.trials)
            if b.rate < a.rate - 2.0 * sigma:
                bad.append({
                    "M": a.M, "p": a.p, "lpf_kind": a.lpf_kind,
                    "snr_db": a.snr_db,
                    "f_s_total_lo": a.f_s_total_hz, "rate_lo": a.rate,
                    "f_s_total_hi": b.f_s_total_hz, "rate_hi": b.rate,
                })
    return bad


# ---------------------------------------------------------------------------
# pipeline check
# ---------------------------------------------------------------------------

def pipeline_check_configs(plan: ExperimentPlan) -> list:
    """Deterministic random sample of configurations for the model oracle."""
    rng = np.random.default_rng([plan.base.master_seed, _PIPELINE_STREAM])
    configs = []
    while len(configs) < plan.n_configs:
        p = int(rng.choice([1, 2, 3, 4]))
        q_pool = coprime_q_values(p, 3, 19)
        q = int(q_pool[rng.integers(len(q_pool))])
        L = int(rng.choice([7, 31]))
        W = int(rng.integers(3, 7))
        m = int(rng.integers(1, 4))
        kind = "ideal" if rng.integers(2) == 0 else "random"
        configs.append(replace(plan.base, p=p, q_prime=q, L=L, W=W, M=m,
                               lpf_kind=kind))
    return configs


def run_pipeline_check(plan: ExperimentPlan, threshold: float = 1e-9,
                       calibration_scale: float = 1.0) -> dict:
    """Worst acquisition-vs-model mismatch over the config sample.

    calibration_scale is a test hook: anything but 1.0 corrupts the measured
    matrix and must trip the threshold.
    """
    if plan.kind != "pipeline_check":
        raise ValueError("plan kind must be pipeline_check")
    rows = []
    worst = 0.0
    for idx, cfg in enumerate(pipeline_check_configs(plan)):
        dp = derive_params(cfg)
        bank = build_pr_bank(dp, seed=cfg.master_seed)
        lpf = build_lpf(cfg.lpf_kind, dp, seed=cfg.master_seed)
        rng = np.random.default_rng(
            [cfg.master_seed, _PIPELINE_STREAM, idx + 1])
        x = gen_fullband(dp, rng)
        if calibration_scale == 1.0:
            err = relative_model_error(x, bank, lpf, dp)
        else:
            from .frontend import model_predict
            from .signals import extract_X2W
            model = make_sensing_model(bank, lpf, dp)
            z = acquire(x, bank, lpf, dp).Z * calibration_scale
            pred = model_predict(model, extract_X2W(x, dp))
            err = float(np.linalg.norm(z - pred) / np.linalg.norm(pred))
        worst = max(worst, err)
        rows.append({
            "idx": idx, "p": cfg.p, "q_prime": cfg.q_prime, "L": cfg.L,
            "W": cfg.W, "M": cfg.M, "lpf_kind": cfg.lpf_kind,
            "rel_error": err,
        })
    report = {
        "worst_error": worst,
        "threshold": threshold,
        "passed": worst <= threshold,
        "n_configs": len(rows),
        "rows": rows,
    }
    if plan.out_dir:
        _write_csv(os.path.join(plan.out_dir, "pipeline_check.csv"), rows)
    return report


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _write_csv(path: str, rows: list) -> None:
    if not rows:
        raise ValueError(f"nothing to write to {path}")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _fmt(v) for k, v in row.items()})
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return value


def write_curve_svg(points, path, title: str = "support recovery rate") -> None:
    """Optional plot of recovery curves; derived from CurvePoints only."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups = {}
    for pt in points:
        groups.setdefault((pt.M, pt.p, pt.lpf_kind), []).append(pt)
    fig, ax = plt.subplots(figsize=(6, 4))
    for (m, p, kind), pts in sorted(groups.items()):
        pts = sorted(pts, key=lambda c: c.f_s_total_hz)
        ax.plot([c.f_s_total_hz / 1e9 for c in pts], [c.rate for c in pts],
                marker="o", label=f"M={m}, p={p}, {kind}")
    ax.set_xlabel("total sampling rate [GHz]")
    ax.set_ylabel("support recovery rate")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
