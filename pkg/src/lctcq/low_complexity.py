"""Adaptive trellis departure point and branch pruning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from lctcq.errors import DomainError
from lctcq.quant_kernel import Block, QuantConfig, scalar_quantize
from lctcq.rate_estimator import RateModelParams, last_pos_table
from lctcq.trellis import SURROGATE, TrellisResult, tcq_search

BOUND = "bound"
EXACT = "exact"
SAFE_K = 2.0
RISKY_K = 2.5
LOOKUP = "lookup"


def analytic_k_factor(phi: float, params: RateModelParams) -> float:
    """Smallest threshold multiplier over all levels: sqrt(phi*alpha) + phi*beta/4."""
    if params.alpha < 0:
        raise DomainError("analytic k-factor needs alpha >= 0")
    return math.sqrt(phi * params.alpha) + phi * params.beta / 4.0


@dataclass(frozen=True)
class DepartureConfig:
    """How far the trellis start may be postponed.

    In BOUND mode the threshold is q_step * k_factor; leaving ``k_factor``
    unset derives it analytically from the fitted rate model.  EXACT mode
    evaluates the level-dependent threshold per coefficient.
    """

    mode: str = BOUND
    k_factor: float | None = SAFE_K
    r_lp_delta: float | str = 0.0  # or LOOKUP for the true R_LP(i) - R_LP(j)

    def __post_init__(self):
        if self.mode not in (BOUND, EXACT):
            raise DomainError(f"unknown departure mode {self.mode!r}")
        if self.k_factor is not None and self.k_factor < 0:
            raise DomainError("k_factor must be non-negative")

    def resolve_k(self, phi: float, params: RateModelParams | None) -> float:
        if self.k_factor is not None:
            return self.k_factor
        if params is None:
            raise DomainError("analytic k-factor needs fitted rate-model parameters")
        return analytic_k_factor(phi, params)


@dataclass
class PruneDecision:
    kept_levels: tuple
    dropped_levels: tuple
    case_id: int


def departure_threshold(
    q_step: float,
    departure: DepartureConfig,
    params: RateModelParams | None = None,
    l_level: int | None = None,
    r_lp_delta: float | None = None,
    lambda_rd: float | None = None,
    phi: float | None = None,
) -> float:
    """Magnitude at or below which a trailing non-zero may leave the trellis."""
    if not q_step > 0:
        raise DomainError("q_step must be positive")
    if departure.mode == BOUND:
        return q_step * departure.resolve_k(phi if phi is not None else 0.0, params)
    if l_level is None or l_level < 1:
        raise DomainError("exact departure threshold needs l_level >= 1")
    if params is None or lambda_rd is None:
        raise DomainError("exact departure threshold needs params and lambda_rd")
    if r_lp_delta is None:
        r_lp_delta = departure.r_lp_delta
    if r_lp_delta == LOOKUP:
        raise DomainError("pass the looked-up R_LP difference explicitly")
    idx = (l_level + 1) // 2
    rate = params.alpha + params.beta * idx + params.gamma * r_lp_delta
    ql = q_step * l_level
    return 0.5 * (ql + lambda_rd * rate / ql)


def find_departure_point(
    block: Block,
    config: QuantConfig,
    threshold: float | Callable,
) -> int | None:
    """First trailing non-zero (pre-quantized) position that survives the threshold.

    ``threshold`` is a magnitude, or a callable ``(c_abs, level, pos, prev_pos)``
    returning one, where ``prev_pos`` is the next lower non-zero position.
    """
    scan = block.scan_coeffs()
    q = config.q_step
    nonzero = [k for k in range(len(scan)) if scalar_quantize(scan[k], q, 0.5) != 0]
    for j, pos in enumerate(reversed(nonzero)):
        c = abs(scan[pos])
        if callable(threshold):
            lower = nonzero[len(nonzero) - j - 2] if j + 1 < len(nonzero) else None
            t = threshold(c, scalar_quantize(c, q, 0.5), pos, lower)
        else:
            t = threshold
        if t < 0:
            raise DomainError("threshold must be non-negative")
        if c > t:
            return pos
    return None


def delta_distortion(c_abs: float, l_level: int, delta_l: int, q_step: float) -> float:
    """Distortion at level l minus distortion at level l + delta_l."""
    if not q_step > 0:
        raise DomainError("q_step must be positive")
    return -(q_step**2) * delta_l**2 + 2.0 * q_step * (c_abs - l_level * q_step) * delta_l


def delta_rate_linear(idx_from: int, idx_to: int, params: RateModelParams) -> float:
    """Model bits at ``idx_from`` minus model bits at ``idx_to``."""
    a, b = abs(idx_from), abs(idx_to)
    if a and b:
        eta = 0
    elif b:
        eta = 1
    elif a:
        eta = -1
    else:
        eta = 0
    return -params.alpha * eta - params.beta * (b - a)


def departure_delta_j(
    c_abs: float,
    l_level: int,
    params: RateModelParams,
    config: QuantConfig,
    r_lp_i: float = 0.0,
    r_lp_j: float = 0.0,
) -> float:
    """Cost change from dropping trailing non-zero i so that j becomes last.

    Non-positive values certify that position i may leave the trellis.
    """
    if l_level < 1:
        raise DomainError("l_level must be >= 1")
    ql = config.q_step * l_level
    d_d = -(ql * ql - 2.0 * ql * c_abs)
    idx = (l_level + 1) // 2
    d_r = -(params.alpha + params.beta * idx + params.gamma * (r_lp_i - r_lp_j))
    return d_d + config.lambda_rd * d_r


def prune_case(c_abs: float, q_step: float) -> int:
    """Pruning case from magnitude thresholds: 1 if l = 0, 2 if l in {1, 2}, else 3."""
    if c_abs < 0.5 * q_step:
        return 1
    if c_abs < 2.5 * q_step:
        return 2
    return 3


def prune_candidates(candidates, l_level: int) -> PruneDecision:
    levels = tuple(sorted(candidates))
    if l_level <= 2:
        if levels != (0, 1, 2, 3, 4):
            raise DomainError(f"candidate set {levels} does not match level {l_level}")
        return PruneDecision((0, 1, 2), (3, 4), 1 if l_level == 0 else 2)
    if levels != (0, l_level - 2, l_level - 1, l_level, l_level + 1):
        raise DomainError(f"candidate set {levels} does not match level {l_level}")
    return PruneDecision(levels[1:], (0,), 3)


def pruning_filter(q_step: float) -> Callable:
    """Candidate filter for tcq_search that applies prune_candidates per stage."""

    def apply(c_abs, levels):
        case = prune_case(c_abs, q_step)
        if case == 3:
            kept = tuple(lv for lv in levels if lv != 0)
        else:
            kept = tuple(lv for lv in levels if lv <= 2)
        return kept, case

    return apply


def accelerated_search(
    block: Block,
    config: QuantConfig,
    params: RateModelParams | None,
    departure: DepartureConfig,
    pruning: bool = False,
    rate_mode: str = SURROGATE,
    rice_g: int = 0,
) -> TrellisResult:
    """Trellis search with a postponed departure point and optional pruning."""
    q = config.q_step
    if departure.mode == BOUND:
        threshold = departure_threshold(q, departure, params, phi=config.phi)
    else:
        lp = last_pos_table(block.width, block.height)

        def threshold(c_abs, level, pos, lower):
            if departure.r_lp_delta == LOOKUP:
                delta = lp[pos] - (lp[lower] if lower is not None else 0.0)
            else:
                delta = departure.r_lp_delta
            return departure_threshold(
                q, departure, params, level, delta, lambda_rd=config.lambda_rd
            )

    start = find_departure_point(block, config, threshold)
    return tcq_search(
        block,
        config,
        rate_mode,
        params,
        rice_g=rice_g,
        start=start,
        candidate_filter=pruning_filter(q) if pruning else None,
    )
