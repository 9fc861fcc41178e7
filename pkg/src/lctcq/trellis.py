"""Viterbi search over the dependent-quantization trellis.

Stages run from the start position (by default the last coefficient that
pre-quantizes to a non-zero level) down to scan position 0.  Each stage has
five nodes: the four coded states and a single "uncoded" node meaning no
coefficient has been coded yet.  A node's state is the decoder state that
will be used for the next (lower) scan position.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from lctcq.errors import ConfigError, SearchSizeError
from lctcq.quant_kernel import (
    UNCODED,
    Block,
    QuantConfig,
    dequantize_states,
    next_state,
    scalar_quantize,
    sign,
)
from lctcq.rate_estimator import RateModelParams, last_pos_table, surrogate_coeff_bits

SURROGATE = "surrogate"
LINEAR_MODEL = "linear"
RATE_MODES = (SURROGATE, LINEAR_MODEL)

N_NODES = 5
U = 4  # node slot of the uncoded state
BRUTE_FORCE_GUARD = 10**7


@dataclass
class StageCounts:
    position: int
    live_sources: int
    branches: int = 0
    dist_evals: int = 0
    rate_evals: int = 0
    adds: int = 0
    compares: int = 0
    selects: int = 0
    prune_case: int | None = None

    @property
    def is_middle(self) -> bool:
        return self.live_sources == N_NODES


@dataclass
class OpCounters:
    branches: int = 0
    dist_evals: int = 0
    rate_evals: int = 0
    adds: int = 0
    compares: int = 0
    selects: int = 0
    stages: int = 0

    FIELDS = ("branches", "dist_evals", "rate_evals", "adds", "compares", "selects", "stages")

    def add_stage(self, sc: StageCounts) -> None:
        self.branches += sc.branches
        self.dist_evals += sc.dist_evals
        self.rate_evals += sc.rate_evals
        self.adds += sc.adds
        self.compares += sc.compares
        self.selects += sc.selects
        self.stages += 1

    def __iadd__(self, other: "OpCounters") -> "OpCounters":
        for name in self.FIELDS:
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}


@dataclass
class TrellisResult:
    indices: list  # signed quantization indices, scan order
    states: list  # decoder state used at each scan position, UNCODED above last_pos
    levels: list  # signed reconstruction levels, scan order
    total_cost: float
    total_bits: float
    total_distortion: float
    last_pos: int | None
    start: int | None = None  # first scan position admitted into the trellis
    counters: OpCounters = field(default_factory=OpCounters)
    stage_log: list = field(default_factory=list)


def rd_cost(distortion: float, bits: float, lambda_rd: float) -> float:
    """J = D + lambda * R."""
    if lambda_rd < 0:
        raise ValueError("lambda_rd must be non-negative")
    return distortion + lambda_rd * bits


def build_candidates(c_abs: float, q_step: float) -> tuple:
    """Candidate magnitudes around the rounded level of ``c_abs``."""
    lv = scalar_quantize(abs(c_abs), q_step, 0.5)
    if lv > 2:
        return (0, lv - 2, lv - 1, lv, lv + 1)
    return (0, 1, 2, 3, 4)


class RateFunction:
    """Per-coefficient bits and the charge for leaving the uncoded state."""

    def __init__(self, mode, config: QuantConfig, params=None, rice_g=0, width=1, height=1):
        if mode not in RATE_MODES:
            raise ConfigError(f"unsupported rate mode {mode!r}")
        if mode == LINEAR_MODEL and params is None:
            raise ConfigError("linear rate mode needs RateModelParams")
        self.mode = mode
        self.params = params
        self.rice_g = rice_g
        self.sign_bits = config.sign_bits
        self.r_cbf = config.r_cbf
        self.lp_table = last_pos_table(width, height)

    def coeff_bits(self, index_abs: int) -> float:
        if self.mode == SURROGATE:
            return surrogate_coeff_bits(index_abs, self.rice_g, self.sign_bits)
        p = self.params
        return (p.alpha if index_abs else 0.0) + p.beta * index_abs

    def entry_bits(self, position: int) -> float:
        if self.mode == SURROGATE:
            return self.r_cbf + self.lp_table[position]
        return self.params.gamma * self.lp_table[position] + self.params.epsilon


def default_start(scan: Sequence[float], q_step: float) -> int | None:
    """Last scan position whose coefficient rounds to a non-zero level."""
    for k in range(len(scan) - 1, -1, -1):
        if scalar_quantize(scan[k], q_step, 0.5) != 0:
            return k
    return None


def _nearest_two(levels, pre_level):
    if len(levels) <= 2:
        return levels
    return sorted(sorted(levels, key=lambda lv: (abs(lv - pre_level), lv))[:2])


def _stage_branches(levels, pre_level):
    """Per source node: list of (dest, level, index) for a candidate set."""
    has_zero = 0 in levels
    nonzero = [lv for lv in levels if lv > 0]
    per_q = {q: _nearest_two([lv for lv in nonzero if lv % 2 == q], pre_level) for q in (0, 1)}
    out = []
    for s in range(4):
        q = s >> 1
        br = []
        if has_zero:
            br.append((next_state(s, 0), 0, 0))
        for lv in per_q[q]:
            idx = (lv + q) // 2
            br.append((next_state(s, idx & 1), lv, idx))
        out.append(br)
    # leaving the uncoded node: the first coded coefficient uses state 0 (Q0)
    br = [(U, 0, 0)]
    for lv in per_q[0]:
        idx = lv // 2
        br.append((next_state(0, idx & 1), lv, idx))
    out.append(br)
    return out


def tcq_search(
    block: Block,
    config: QuantConfig,
    rate_mode: str = SURROGATE,
    params: RateModelParams | None = None,
    *,
    rice_g: int = 0,
    start: int | None | str = "auto",
    candidate_filter: Callable | None = None,
    _keep_worst: bool = False,
) -> TrellisResult:
    """Minimum-RD-cost dependent quantization of a block.

    ``start`` is the highest scan position admitted into the trellis; "auto"
    picks the last coefficient that rounds to a non-zero level and ``None``
    codes the block as all-zero.  ``candidate_filter(c_abs, levels)`` may
    shrink each stage's candidate set and returns (levels, case_id).
    ``_keep_worst`` inverts survivor selection and exists only to self-test
    the oracle harness.
    """
    rate = RateFunction(rate_mode, config, params, rice_g, block.width, block.height)
    q = config.q_step
    lam = config.lambda_rd
    scan = block.scan_coeffs()
    n = len(scan)
    if start == "auto":
        start = default_start(scan, q)

    above = 0 if start is None else start + 1
    base_d = sum(c * c for c in scan[above:])
    inf = math.inf
    cost = [inf] * N_NODES
    acc_d = [0.0] * N_NODES
    acc_r = [0.0] * N_NODES
    cost[U] = base_d
    acc_d[U] = base_d

    counters = OpCounters()
    log = []
    history = []  # per stage: list per dest of (pred, index, level) or None
    positions = range(start, -1, -1) if start is not None else range(0)
    for pos in positions:
        c = abs(scan[pos])
        levels = build_candidates(c, q)
        pre = scalar_quantize(c, q, 0.5)
        case = None
        if candidate_filter is not None:
            levels, case = candidate_filter(c, levels)
        dist = {lv: (c - lv * q) ** 2 for lv in set(levels) | {0}}
        bits = {}
        branches = _stage_branches(levels, pre)
        entry = rate.entry_bits(pos)

        live = [s for s in range(N_NODES) if cost[s] < inf]
        sc = StageCounts(pos, len(live), prune_case=case)
        sc.dist_evals = len(dist)
        sc.rate_evals = len(levels)

        new_cost = [inf] * N_NODES
        new_d = [0.0] * N_NODES
        new_r = [0.0] * N_NODES
        best_key = [None] * N_NODES
        back = [None] * N_NODES
        entering = [0] * N_NODES
        for s in live:
            for dest, lv, idx in branches[s]:
                if s == U and dest == U:
                    d, r = dist[0], 0.0
                else:
                    d = dist[lv]
                    r = bits.get(idx)
                    if r is None:
                        r = bits[idx] = rate.coeff_bits(idx)
                    if s == U:
                        r += entry
                cand = cost[s] + d + lam * r
                sc.branches += 1
                sc.adds += 1
                entering[dest] += 1
                key = (cand, idx, s if s != U else UNCODED)
                if best_key[dest] is None or (key > best_key[dest] if _keep_worst else key < best_key[dest]):
                    best_key[dest] = key
                    new_cost[dest] = cand
                    new_d[dest] = acc_d[s] + d
                    new_r[dest] = acc_r[s] + r
                    back[dest] = (s, idx, lv)
        for e in entering:
            if e > 1:
                sc.compares += e - 1
                sc.selects += e - 1
        cost, acc_d, acc_r = new_cost, new_d, new_r
        history.append(back)
        counters.add_stage(sc)
        log.append(sc)

    final = min(range(N_NODES), key=lambda s: (cost[s], s != U, s))
    if _keep_worst:
        final = max((s for s in range(N_NODES) if cost[s] < inf), key=lambda s: cost[s])

    indices = [0] * n
    levels_out = [0] * n
    states = [UNCODED] * n
    node = final
    # walk back from position 0 to the start
    for k, back in enumerate(reversed(history)):
        pos = k
        pred, idx, lv = back[node]
        sgn = -1 if scan[pos] < 0 else 1
        indices[pos] = sgn * idx
        levels_out[pos] = sgn * lv
        states[pos] = UNCODED if (pred == U and node == U) else (0 if pred == U else pred)
        node = pred
    last = None
    for k in range(n - 1, -1, -1):
        if indices[k] != 0:
            last = k
            break
    return TrellisResult(
        indices=indices,
        states=states,
        levels=levels_out,
        total_cost=cost[final],
        total_bits=acc_r[final],
        total_distortion=acc_d[final],
        last_pos=last,
        start=start,
        counters=counters,
        stage_log=log,
    )


def _evaluate(scan, q, lam, rate, indices):
    last = None
    for k in range(len(indices) - 1, -1, -1):
        if indices[k] != 0:
            last = k
            break
    if last is None:
        d = sum(c * c for c in scan)
        return d, d, 0.0
    d = sum(c * c for c in scan[last + 1:])
    bits = rate.entry_bits(last)
    st = 0
    for k in range(last, -1, -1):
        idx = indices[k]
        lv = 2 * idx - (st >> 1) * sign(idx)
        d += (scan[k] - lv * q) ** 2
        bits += rate.coeff_bits(abs(idx))
        st = next_state(st, idx & 1)
    return d + lam * bits, d, bits


def evaluate_indices(
    block: Block,
    config: QuantConfig,
    indices: Sequence[int],
    rate_mode: str = SURROGATE,
    params: RateModelParams | None = None,
    rice_g: int = 0,
) -> tuple[float, float, float]:
    """(cost, distortion, bits) of a signed index sequence, from scratch.

    Positions above the last non-zero index are uncoded; from there down the
    decoder state machine is replayed from state 0.
    """
    rate = RateFunction(rate_mode, config, params, rice_g, block.width, block.height)
    return _evaluate(block.scan_coeffs(), config.q_step, config.lambda_rd, rate, list(indices))


def brute_force_search(
    block: Block,
    config: QuantConfig,
    rate_mode: str = SURROGATE,
    params: RateModelParams | None = None,
    *,
    rice_g: int = 0,
    start: int | None | str = "auto",
    candidate_filter: Callable | None = None,
    guard: int = BRUTE_FORCE_GUARD,
) -> TrellisResult:
    """Exhaustive minimum over every index assignment the trellis can express.

    Each position in [0, start] may take index 0 or any index whose level,
    under either quantizer, is in that position's candidate set; assignments
    whose replayed levels leave the candidate set are discarded.
    """
    rate = RateFunction(rate_mode, config, params, rice_g, block.width, block.height)
    q = config.q_step
    scan = block.scan_coeffs()
    n = len(scan)
    if start == "auto":
        start = default_start(scan, q)
    if start is None:
        d = sum(c * c for c in scan)
        return TrellisResult([0] * n, [UNCODED] * n, [0] * n, d, 0.0, d, None, None)

    cand_sets = []
    options = []
    for pos in range(start + 1):
        c = abs(scan[pos])
        levels = build_candidates(c, q)
        if candidate_filter is not None:
            levels, _ = candidate_filter(c, levels)
        cand_sets.append(set(levels))
        opts = {0}
        for lv in levels:
            if lv > 0:
                opts.add((lv + (lv % 2)) // 2)
        options.append(sorted(opts))
    total = math.prod(len(o) for o in options)
    if total > guard:
        raise SearchSizeError(f"{total} assignments exceed the guard of {guard}")

    best = None
    for combo in itertools.product(*options):
        last = None
        for k in range(start, -1, -1):
            if combo[k]:
                last = k
                break
        if last is not None:
            st = 0
            ok = True
            for k in range(last, -1, -1):
                idx = combo[k]
                lv = 2 * idx - (st >> 1) * (1 if idx else 0)
                if lv not in cand_sets[k]:
                    ok = False
                    break
                st = next_state(st, idx & 1)
            if not ok:
                continue
        signed = [0] * n
        for k in range(start + 1):
            signed[k] = -combo[k] if scan[k] < 0 else combo[k]
        cost, d, bits = _evaluate(scan, q, config.lambda_rd, rate, signed)
        key = (cost, sum(combo), combo)
        if best is None or key < best[0]:
            best = (key, signed, d, bits)
    (cost, _, _), signed, d, bits = best
    levels, states = dequantize_states(signed)
    last = None
    for k in range(n - 1, -1, -1):
        if signed[k]:
            last = k
            break
    if last is None:
        states = [UNCODED] * n
    else:
        states = [s if k <= last else UNCODED for k, s in enumerate(states)]
    return TrellisResult(signed, states, levels, cost, bits, d, last, start)


@dataclass
class HDQResult:
    levels: list
    last_pos: int | None
    l0_norm: int
    l1_norm: int


def hdq_quantize(block: Block, config: QuantConfig) -> HDQResult:
    """Hard-decision quantization in scan order with the configured rounding offset."""
    levels = [scalar_quantize(c, config.q_step, config.f_offset) for c in block.scan_coeffs()]
    last = None
    for k in range(len(levels) - 1, -1, -1):
        if levels[k]:
            last = k
            break
    l0 = sum(1 for v in levels if v)
    l1 = sum(abs(v) for v in levels)
    return HDQResult(levels, last, l0, l1)
