"""Bit-cost surrogates and the block rate model alpha*L0 + beta*L1 + gamma*R_LP + eps."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from lctcq.errors import DomainError, FitError
from lctcq.quant_kernel import diagonal_scan

REGRESSORS = ("intercept", "l0_norm", "l1_norm", "r_lp")


@dataclass(frozen=True)
class RateModelParams:
    alpha: float
    beta: float
    gamma: float = 0.0
    epsilon: float = 0.0


@dataclass(frozen=True)
class BlockRateObservation:
    l0_norm: int
    l1_norm: int
    r_lp: float
    actual_bits: float


@dataclass(frozen=True)
class FitReport:
    params: RateModelParams
    r_squared: float
    rms: float
    n_obs: int

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            "r_squared": self.r_squared,
            "rms": self.rms,
            "n_obs": self.n_obs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        return cls(RateModelParams(**d["params"]), d["r_squared"], d["rms"], d["n_obs"])


def rice_bits(value: int, g: int) -> int:
    return (value >> g) + 1 + g


def surrogate_coeff_bits(index: int, rice_g: int = 0, sign_bits: float = 1.0) -> float:
    """Stateless stand-in for the residual coder: sig flag, sign, Rice remainder."""
    if not 0 <= rice_g <= 8:
        raise DomainError(f"rice_g must be in 0..8, got {rice_g}")
    if index == 0:
        return 1.0
    return 1.0 + sign_bits + rice_bits(abs(index) - 1, rice_g)


def _coord_group(c: int) -> int:
    if c < 4:
        return c
    k = c.bit_length() - 1
    return 2 * k + ((c >> (k - 1)) & 1)


def coord_bits(c: int) -> float:
    """Truncated-unary prefix plus fixed-length suffix for one coordinate."""
    g = _coord_group(c)
    return float((g + 1) + max(0, (g >> 1) - 1))


@lru_cache(maxsize=None)
def last_pos_table(width: int, height: int) -> tuple:
    """R_LP per scan index for a block size."""
    return tuple(coord_bits(x) + coord_bits(y) for x, y in diagonal_scan(width, height))


def last_pos_bits(x: int, y: int, width: int, height: int) -> float:
    if not (0 <= x < width and 0 <= y < height):
        raise DomainError(f"({x}, {y}) outside a {width}x{height} block")
    return coord_bits(x) + coord_bits(y)


def block_rate_estimate(l0: float, l1: float, r_lp: float, params: RateModelParams) -> float:
    return params.alpha * l0 + params.beta * l1 + params.gamma * r_lp + params.epsilon


def count_norms(indices: Sequence[int]) -> tuple[int, int]:
    l0 = sum(1 for v in indices if v != 0)
    l1 = sum(abs(int(v)) for v in indices)
    return l0, l1


def last_nonzero(indices: Sequence[int]) -> int | None:
    for k in range(len(indices) - 1, -1, -1):
        if indices[k] != 0:
            return k
    return None


def block_actual_bits(
    indices: Sequence[int],
    last_pos: int | None,
    width: int,
    height: int,
    rice_g: int = 0,
    r_cbf: float = 1.0,
    sign_bits: float = 1.0,
) -> float:
    """Surrogate-coder bits of a block given scan-ordered indices."""
    if last_pos is None:
        if any(v != 0 for v in indices):
            raise DomainError("non-zero index in a block declared all-zero")
        return 0.0
    if any(v != 0 for v in indices[last_pos + 1:]):
        raise DomainError(f"non-zero index beyond last_pos {last_pos}")
    bits = r_cbf + last_pos_table(width, height)[last_pos]
    for v in indices[: last_pos + 1]:
        bits += surrogate_coeff_bits(int(v), rice_g, sign_bits)
    return bits


def observe(indices, width, height, rice_g=0, r_cbf=1.0, sign_bits=1.0) -> BlockRateObservation:
    last = last_nonzero(indices)
    l0, l1 = count_norms(indices)
    r_lp = 0.0 if last is None else last_pos_table(width, height)[last]
    bits = block_actual_bits(indices, last, width, height, rice_g, r_cbf, sign_bits)
    return BlockRateObservation(l0, l1, r_lp, bits)


def design_matrix(observations: Sequence[BlockRateObservation]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([[1.0, o.l0_norm, o.l1_norm, o.r_lp] for o in observations], dtype=float)
    y = np.array([o.actual_bits for o in observations], dtype=float)
    return X.reshape(-1, 4), y


def _collinear_columns(X: np.ndarray) -> list[str]:
    # a column is named if dropping it keeps the rank unchanged
    rank = np.linalg.matrix_rank(X)
    names = []
    for j, name in enumerate(REGRESSORS):
        if np.linalg.matrix_rank(np.delete(X, j, axis=1)) == rank:
            names.append(name)
    return names


def fit_rate_params(observations: Sequence[BlockRateObservation]) -> FitReport:
    """Ordinary least squares over (1, L0, L1, R_LP)."""
    if len(observations) < 4:
        raise FitError(f"need at least 4 observations, got {len(observations)}")
    X, y = design_matrix(observations)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        cols = ", ".join(_collinear_columns(X))
        raise FitError(f"rank-deficient design; collinear columns: {cols}")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    params = RateModelParams(
        alpha=float(coef[1]), beta=float(coef[2]), gamma=float(coef[3]), epsilon=float(coef[0])
    )
    return FitReport(params, r2, float(np.sqrt(ss_res / len(y))), len(y))
