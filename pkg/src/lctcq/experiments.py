"""Experiment drivers behind the CLI verbs: fit, bench, oracle, stats."""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from lctcq.config import ExperimentConfig
from lctcq.errors import ConfigError, FitError, SearchSizeError
from lctcq.low_complexity import accelerated_search
from lctcq.quant_kernel import qstep_from_qp
from lctcq.rate_estimator import FitReport, RateModelParams, fit_rate_params, observe
from lctcq.source_model import (
    closed_form_stats,
    lambda_from_sigma,
    numeric_stats,
    rate_from_pnz,
    sample_block,
    self_info_rate,
)
from lctcq.trellis import (
    BRUTE_FORCE_GUARD,
    LINEAR_MODEL,
    SURROGATE,
    OpCounters,
    brute_force_search,
    hdq_quantize,
    tcq_search,
)

COUNTER_FIELDS = OpCounters.FIELDS
BENCH_STREAM, FIT_STREAM, ORACLE_STREAM = 0, 1, 2
ORACLE_SIGMA_RATIOS = (0.5, 1.0, 2.0, 4.0)
STATS_TOLERANCE = 1e-6
ORACLE_TOLERANCE = 1e-9


def block_seed(seed: int, *key: int) -> int:
    """Independent 64-bit seed per (stream, cell, block) key."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------- fit


def fit_observations(cfg: ExperimentConfig, qp: int):
    qc = cfg.quant_config(qp)
    obs = []
    for si, sigma in enumerate(cfg.sigma_list):
        for bi, (w, h) in enumerate(cfg.block_shapes):
            for b in range(cfg.blocks_per_cell):
                block = sample_block(sigma, w, h, block_seed(cfg.seed, FIT_STREAM, si, bi, b))
                if cfg.fit_source == "hdq":
                    indices = hdq_quantize(block, qc).levels
                else:
                    indices = tcq_search(block, qc, SURROGATE, rice_g=cfg.rice_g).indices
                o = observe(indices, w, h, cfg.rice_g, cfg.r_cbf, cfg.sign_bits)
                if o.l0_norm:  # uncoded blocks cost nothing and carry no model information
                    obs.append(o)
    return obs


def run_fit(cfg: ExperimentConfig) -> dict:
    """Fitted rate model per QP; raises FitError naming the failing cell."""
    out = {}
    for qp in cfg.qp_list:
        obs = fit_observations(cfg, qp)
        try:
            rep = fit_rate_params(obs)
        except FitError as exc:
            raise FitError(f"QP {qp} cell: {exc}") from exc
        if not (rep.params.alpha > 0 and rep.params.beta > 0):
            raise FitError(
                f"QP {qp} cell: fitted alpha={rep.params.alpha:.6g}, beta={rep.params.beta:.6g} "
                "must both be positive"
            )
        out[str(qp)] = rep
    return out


def params_by_qp(cfg: ExperimentConfig, fits: dict | None) -> dict:
    if fits is None:
        return {}
    return {int(qp): (rep.params if isinstance(rep, FitReport) else RateModelParams(**rep["params"]))
            for qp, rep in fits.items()}


# ---------------------------------------------------------------- bench


@dataclass
class CellAccumulator:
    cost_full: float = 0.0
    cost_accel: float = 0.0
    full: OpCounters = field(default_factory=OpCounters)
    accel: OpCounters = field(default_factory=OpCounters)
    hdq_last: list = field(default_factory=list)
    tcq_last: list = field(default_factory=list)
    accel_last: list = field(default_factory=list)
    wall_full: float = 0.0
    wall_accel: float = 0.0
    blocks: int = 0


def _last(v):
    return -1 if v is None else v


def _savings(full: int, accel: int) -> float:
    return 0.0 if full == 0 else 1.0 - accel / full


def bench_cell(cfg, qp, si, sigma, bi, shape, params, timing=True):
    w, h = shape
    qc = cfg.quant_config(qp)
    departure = cfg.departure()
    acc = CellAccumulator()
    for b in range(cfg.blocks_per_cell):
        block = sample_block(sigma, w, h, block_seed(cfg.seed, BENCH_STREAM, si, bi, b))
        t0 = time.perf_counter()
        full = tcq_search(block, qc, cfg.rate_mode, params, rice_g=cfg.rice_g)
        t1 = time.perf_counter()
        fast = accelerated_search(
            block, qc, params, departure, cfg.pruning, cfg.rate_mode, cfg.rice_g
        )
        t2 = time.perf_counter()
        acc.wall_full += t1 - t0
        acc.wall_accel += t2 - t1
        acc.cost_full += full.total_cost
        acc.cost_accel += fast.total_cost
        acc.full += full.counters
        acc.accel += fast.counters
        acc.hdq_last.append(_last(hdq_quantize(block, qc).last_pos))
        acc.tcq_last.append(_last(full.last_pos))
        acc.accel_last.append(_last(fast.last_pos))
        acc.blocks += 1
    n = acc.blocks
    mean_full = acc.cost_full / n
    mean_accel = acc.cost_accel / n
    row = {
        "qp": qp,
        "sigma": float(sigma),
        "width": w,
        "height": h,
        "blocks": n,
        "q_step": qc.q_step,
        "lambda_rd": qc.lambda_rd,
        "mean_cost_full": mean_full,
        "mean_cost_accel": mean_accel,
        "rel_cost_delta": 0.0 if mean_full == 0 else (mean_accel - mean_full) / mean_full,
    }
    for name in COUNTER_FIELDS:
        row[f"full_{name}"] = getattr(acc.full, name)
    for name in COUNTER_FIELDS:
        row[f"accel_{name}"] = getattr(acc.accel, name)
    for name in COUNTER_FIELDS:
        row[f"savings_{name}"] = _savings(getattr(acc.full, name), getattr(acc.accel, name))
    row.update(
        hdq_last_median=float(statistics.median(acc.hdq_last)),
        tcq_last_median=float(statistics.median(acc.tcq_last)),
        accel_last_median=float(statistics.median(acc.accel_last)),
        hdq_last_mean=sum(acc.hdq_last) / n,
        tcq_last_mean=sum(acc.tcq_last) / n,
        wall_full_s=acc.wall_full if timing else None,
        wall_accel_s=acc.wall_accel if timing else None,
    )
    hist = []
    if cfg.histogram:
        for pos in range(-1, w * h):
            hist.append({
                "qp": qp, "sigma": float(sigma), "width": w, "height": h, "last_pos": pos,
                "hdq_count": acc.hdq_last.count(pos), "tcq_count": acc.tcq_last.count(pos),
                "accel_count": acc.accel_last.count(pos),
            })
    return row, hist


def run_bench(cfg: ExperimentConfig, fits: dict | None = None, timing: bool = True):
    """Full versus accelerated search on identical blocks, cell by cell.

    Cells are visited in (qp, sigma, shape) order so the output is fixed by
    the config and seed.
    """
    if cfg.needs_params() and fits is None:
        if not cfg.inline_fit:
            raise ConfigError("this configuration needs rate-model parameters: "
                              "set params_file or enable inline_fit")
        fits = run_fit(cfg)
    params = params_by_qp(cfg, fits)
    rows, hists = [], []
    for qp in cfg.qp_list:
        p = params.get(qp)
        if cfg.needs_params() and p is None:
            raise ConfigError(f"no rate-model parameters for QP {qp}")
        for si, sigma in enumerate(cfg.sigma_list):
            for bi, shape in enumerate(cfg.block_shapes):
                row, hist = bench_cell(cfg, qp, si, sigma, bi, tuple(shape), p, timing)
                rows.append(row)
                hists.extend(hist)
    return rows, hists, fits


# ---------------------------------------------------------------- oracle


def oracle_guard(shape, guard: int = BRUTE_FORCE_GUARD) -> int:
    """Worst-case assignment count for a shape (at most 4 index options per position)."""
    w, h = shape
    worst = 4 ** (w * h)
    if worst > guard:
        raise SearchSizeError(f"{w}x{h} needs up to {worst} assignments, guard is {guard}")
    return worst


@dataclass
class OracleSummary:
    draws: int = 0
    failures: int = 0
    max_rel_error: float = 0.0
    counterexample: dict | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0


def run_oracle(cfg: ExperimentConfig, corrupt: bool = False) -> OracleSummary:
    """Trellis versus exhaustive search over seeded draws, both rate modes."""
    for shape in cfg.oracle_shapes:
        oracle_guard(shape)
    params = cfg.oracle_rate_params()
    summary = OracleSummary()
    for si, shape in enumerate(cfg.oracle_shapes):
        w, h = shape
        for qp in cfg.oracle_qps:
            qc = cfg.quant_config(qp)
            for d in range(cfg.oracle_draws):
                sigma = qc.q_step * ORACLE_SIGMA_RATIOS[d % len(ORACLE_SIGMA_RATIOS)]
                block = sample_block(sigma, w, h, block_seed(cfg.seed, ORACLE_STREAM, si, qp, d))
                for mode in (SURROGATE, LINEAR_MODEL):
                    p = params if mode == LINEAR_MODEL else None
                    got = tcq_search(block, qc, mode, p, rice_g=cfg.rice_g, _keep_worst=corrupt)
                    ref = brute_force_search(block, qc, mode, p, rice_g=cfg.rice_g)
                    err = abs(got.total_cost - ref.total_cost) / max(abs(ref.total_cost), 1e-300)
                    summary.draws += 1
                    summary.max_rel_error = max(summary.max_rel_error, err)
                    if err > ORACLE_TOLERANCE:
                        summary.failures += 1
                        if summary.counterexample is None:
                            summary.counterexample = {
                                "qp": qp, "rate_mode": mode, "width": w, "height": h,
                                "coeffs": list(block.coeffs),
                                "trellis_cost": got.total_cost, "oracle_cost": ref.total_cost,
                                "trellis_indices": got.indices, "oracle_indices": ref.indices,
                            }
    return summary


# ---------------------------------------------------------------- stats


def stats_row(sigma: float, qp: int) -> dict:
    q = qstep_from_qp(qp)
    lam = lambda_from_sigma(sigma)
    cf = closed_form_stats(lam, q)
    num = numeric_stats(lam, q)
    pairs = [(cf.tau, num.tau), (cf.d_expected, num.d_expected),
             (cf.d_zero, num.d_zero), (cf.d_nonzero, num.d_nonzero)]
    rel = max(abs(a - b) / abs(b) if b != 0 else (0.0 if a == 0 else math.inf) for a, b in pairs)
    row = {
        "sigma": float(sigma), "qp": qp, "q_step": q, "lambda_lap": lam, "lambda_q": lam * q,
        "tau": cf.tau, "p_nz": cf.p_nz, "d_expected": cf.d_expected,
        "d_zero": cf.d_zero, "d_nonzero": cf.d_nonzero,
        "num_tau": num.tau, "num_d_expected": num.d_expected,
        "num_d_zero": num.d_zero, "num_d_nonzero": num.d_nonzero,
        "max_rel_err": rel,
        "r0_exact": rate_from_pnz(cf.p_nz, 0),
    }
    for order in (1, 2, 3):
        row[f"r0_taylor{order}"] = rate_from_pnz(cf.p_nz, order)
    for lv in range(9):
        row[f"self_info_{lv}"] = self_info_rate(lv, lam, q)
    return row


def run_stats(cfg: ExperimentConfig) -> list:
    return [stats_row(sigma, qp) for sigma in cfg.sigma_list for qp in cfg.qp_list]
