"""Acceptance suite: one terminal-summary line per criterion.

Tolerances and sample sizes are fixed by the build contract and must not be
loosened here.
"""

import statistics
import time
from dataclasses import replace

import numpy as np
import pytest

from lctcq import experiments as ex
from lctcq import cli
from lctcq.config import ExperimentConfig
from lctcq.low_complexity import BOUND, DepartureConfig, accelerated_search, delta_distortion, delta_rate_linear, prune_candidates
from lctcq.quant_kernel import QuantConfig, next_state
from lctcq.rate_estimator import block_rate_estimate
from lctcq.source_model import closed_form_stats, lambda_from_sigma, numeric_stats, sample_block
from lctcq.trellis import build_candidates, hdq_quantize, tcq_search

QPS = (22, 27, 32, 37)
C = pytest.mark.criterion

STATE_FIXTURE = {
    (0, 0): 0, (0, 1): 2, (1, 0): 2, (1, 1): 0,
    (2, 0): 1, (2, 1): 3, (3, 0): 3, (3, 1): 1,
}


@C("1", "state machine matches the 8-transition fixture, < 1 ms")
def test_state_machine():
    t0 = time.perf_counter()
    got = {(s, p): next_state(s, p) for s in range(4) for p in range(2)}
    elapsed = time.perf_counter() - t0
    assert got == STATE_FIXTURE
    assert elapsed < 1e-3


@C("2", "trellis cost equals exhaustive search on >= 500 draws (2x2, 1x6; QP 22/37; both modes), < 2 min")
def test_viterbi_optimality():
    cfg = ExperimentConfig(oracle_shapes=((2, 2), (1, 6)), oracle_qps=(22, 37), oracle_draws=125)
    t0 = time.perf_counter()
    summary = ex.run_oracle(cfg)
    elapsed = time.perf_counter() - t0
    assert summary.draws // 2 >= 500  # two rate modes per block
    assert summary.failures == 0, summary.counterexample
    assert summary.max_rel_error <= 1e-9
    assert elapsed < 120


@C("3", "closed forms match numeric integration within 1e-6 on a 20x20 grid, < 30 s")
def test_closed_form_fidelity():
    t0 = time.perf_counter()
    worst = 0.0
    for sigma in np.geomspace(1.0, 4.0, 20):
        lam = lambda_from_sigma(float(sigma))
        for q in np.geomspace(0.15, 14.0, 20):
            cf = closed_form_stats(lam, float(q))
            num = numeric_stats(lam, float(q))
            for a, b in ((cf.tau, num.tau), (cf.d_expected, num.d_expected),
                         (cf.d_zero, num.d_zero), (cf.d_nonzero, num.d_nonzero)):
                worst = max(worst, abs(a - b) / abs(b))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-6
    assert elapsed < 30


@C("4", "full search middle stages cost 15/5/5/15/10/10 operations, 100 blocks")
def test_complexity_ledger():
    seen = 0
    for b in range(100):
        qp = QPS[b % 4]
        cfg = QuantConfig.from_qp(qp)
        res = tcq_search(sample_block(2 * cfg.q_step, 8, 8, ex.block_seed(0, 4, b)), cfg)
        for s in res.stage_log:
            if s.is_middle:
                seen += 1
                assert (s.branches, s.dist_evals, s.rate_evals, s.adds, s.compares, s.selects) == \
                    (15, 5, 5, 15, 10, 10)
    assert seen > 1000


@C("5", "pruned middle stages visit 10..15 branches, exactly 10 in cases 1 and 2")
def test_pruning_band():
    counted = {1: 0, 2: 0, 3: 0}
    for b in range(100):
        qp = QPS[b % 4]
        cfg = QuantConfig.from_qp(qp)
        blk = sample_block(2 * cfg.q_step, 8, 8, ex.block_seed(0, 5, b))
        res = accelerated_search(blk, cfg, None, DepartureConfig(BOUND, 0.0), pruning=True)
        for s in res.stage_log:
            if s.is_middle:
                assert 10 <= s.branches <= 15
                if s.prune_case in (1, 2):
                    assert s.branches == 10
                counted[s.prune_case] += 1
    assert all(counted.values())


@pytest.fixture(scope="module")
def fitted():
    return ex.run_fit(ExperimentConfig())


@C("6", "case-1 pruned candidates have dD <= 0 and dR <= 0, 10000 coefficients")
def test_dominance(fitted):
    params = [rep.params for rep in fitted.values()]
    assert all(p.alpha > 0 and p.beta > 0 for p in params)
    rng = np.random.default_rng(6)
    violations = 0
    for k in range(10000):
        p = params[k % len(params)]
        q = float(rng.uniform(0.25, 100.0))
        c = float(rng.uniform(0.0, 0.5 * q))
        if c >= 0.5 * q:
            continue
        dec = prune_candidates(build_candidates(c, q), 0)
        assert dec.case_id == 1
        for lv in dec.dropped_levels:
            if delta_distortion(c, 0, lv, q) > 0 or delta_rate_linear(0, (lv + 1) // 2, p) > 0:
                violations += 1
    assert violations == 0


@pytest.fixture(scope="module")
def departure_runs():
    t0 = time.perf_counter()
    base = ExperimentConfig(qp_list=QPS, blocks_per_cell=1000, histogram=False)
    safe, _, _ = ex.run_bench(replace(base, k_mode="safe"), timing=False)
    risky, _, _ = ex.run_bench(replace(base, k_mode="risky"), timing=False)
    return {r["qp"]: r for r in safe}, {r["qp"]: r for r in risky}, time.perf_counter() - t0


@C("7a", "safe K=2: mean RD-cost increase <= 0.5% per QP and positive branch savings at QP >= 27")
def test_departure_safe_cost(departure_runs):
    safe, _, _ = departure_runs
    deltas = {qp: safe[qp]["rel_cost_delta"] for qp in QPS}
    assert all(d <= 0.005 for d in deltas.values()), deltas


@C("7a", "safe K=2: mean RD-cost increase <= 0.5% per QP and positive branch savings at QP >= 27")
def test_departure_safe_savings(departure_runs):
    safe, _, _ = departure_runs
    assert all(safe[qp]["savings_branches"] > 0 for qp in QPS if qp >= 27)


@C("7b", "risky K=2.5 saves at least as much and costs at least as much as safe, every QP")
def test_departure_ordering(departure_runs):
    safe, risky, _ = departure_runs
    for qp in QPS:
        assert risky[qp]["savings_branches"] >= safe[qp]["savings_branches"]
        assert risky[qp]["rel_cost_delta"] >= safe[qp]["rel_cost_delta"]


@C("7", "departure sweep (4 QPs x 1000 blocks, safe and risky) runs in < 5 min")
def test_departure_runtime(departure_runs):
    assert departure_runs[2] < 300


@C("8", "QP 37 16x16: median trellis last index <= median HDQ last index, 1000 blocks")
def test_last_position_shift():
    cfg = QuantConfig.from_qp(37)
    sigma = ExperimentConfig().sigma_list[0]
    hdq, tcq = [], []
    for b in range(1000):
        blk = sample_block(sigma, 16, 16, ex.block_seed(0, 8, b))
        h = hdq_quantize(blk, cfg).last_pos
        t = tcq_search(blk, cfg).last_pos
        hdq.append(-1 if h is None else h)
        tcq.append(-1 if t is None else t)
    assert statistics.median(tcq) <= statistics.median(hdq)


@C("9", "rate model R^2 >= 0.9 against the block coder, 500 8x8 blocks per QP")
def test_rate_model_fit():
    cfg = ExperimentConfig(blocks_per_cell=500)
    fits = ex.run_fit(cfg)
    for qp in QPS:
        obs = ex.fit_observations(cfg, qp)
        p = fits[str(qp)].params
        pred = np.array([block_rate_estimate(o.l0_norm, o.l1_norm, o.r_lp, p) for o in obs])
        actual = np.array([o.actual_bits for o in obs])
        r2 = 1.0 - np.sum((actual - pred) ** 2) / np.sum((actual - actual.mean()) ** 2)
        assert r2 >= 0.9, (qp, r2)


@C("10", "two reproducible bench runs emit byte-identical files")
def test_determinism(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["bench", "--reproducible", "--out-dir", str(tmp_path / d)]) == 0
    for name in ("bench.csv", "bench_lastpos.csv", "bench.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
