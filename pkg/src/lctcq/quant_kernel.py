"""Scalar quantization, the two-quantizer state machine and scan order."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from lctcq.errors import ConfigError, DomainError

UNCODED = -1
STATE_TABLE = 32040
SUPPORTED_DIMS = tuple(range(1, 33))  # any width/height up to 32; oracle shapes like 1x6 need non-powers of two

DEFAULT_PHI = 0.0897


@dataclass(frozen=True)
class Block:
    """Transform coefficients in raster order (index y * width + x)."""

    coeffs: tuple
    width: int
    height: int

    def __post_init__(self):
        if self.width not in SUPPORTED_DIMS or self.height not in SUPPORTED_DIMS:
            raise ConfigError(f"unsupported block shape {self.width}x{self.height}")
        if len(self.coeffs) != self.width * self.height:
            raise ConfigError(
                f"expected {self.width * self.height} coefficients, got {len(self.coeffs)}"
            )
        if not all(math.isfinite(c) for c in self.coeffs):
            raise ConfigError("block coefficients must be finite")

    @classmethod
    def from_scan(cls, scan_coeffs: Sequence[float], width: int, height: int) -> "Block":
        """Build a block from coefficients listed in diagonal scan order."""
        order = diagonal_scan(width, height)
        raster = [0.0] * (width * height)
        for k, (x, y) in enumerate(order):
            raster[y * width + x] = float(scan_coeffs[k])
        return cls(tuple(raster), width, height)

    def scan_coeffs(self) -> list[float]:
        return [self.coeffs[y * self.width + x] for x, y in diagonal_scan(self.width, self.height)]

    @property
    def size(self) -> int:
        return self.width * self.height


def qstep_from_qp(qp: int) -> float:
    return 2.0 ** ((qp - 4) / 6.0)


@dataclass(frozen=True)
class QuantConfig:
    q_step: float
    f_offset: float = 0.5
    qp: int | None = None
    phi: float = DEFAULT_PHI
    r_cbf: float = 1.0
    sign_bits: float = 1.0
    lambda_rd: float = field(default=None)

    def __post_init__(self):
        if not self.q_step > 0:
            raise ConfigError(f"q_step must be positive, got {self.q_step}")
        if not 0.0 <= self.f_offset < 1.0:
            raise ConfigError(f"f_offset must lie in [0, 1), got {self.f_offset}")
        if self.r_cbf < 0:
            raise ConfigError("r_cbf must be non-negative")
        expected = self.phi * self.q_step**2
        if self.lambda_rd is None:
            object.__setattr__(self, "lambda_rd", expected)
        elif not math.isclose(self.lambda_rd, expected, rel_tol=1e-12, abs_tol=0.0):
            raise ConfigError("lambda_rd must equal phi * q_step**2")

    @classmethod
    def from_qp(cls, qp: int, **kwargs) -> "QuantConfig":
        return cls(q_step=qstep_from_qp(qp), qp=qp, **kwargs)

    @classmethod
    def from_lambda(cls, q_step: float, lambda_rd: float, **kwargs) -> "QuantConfig":
        """Config with an explicit multiplier; phi is derived from it."""
        return cls(q_step=q_step, phi=lambda_rd / q_step**2, lambda_rd=lambda_rd, **kwargs)


def sign(x) -> int:
    return (x > 0) - (x < 0)


def scalar_quantize(c: float, q_step: float, f_offset: float = 0.5) -> int:
    """sign(c) * floor(|c| / q_step + f)."""
    return sign(c) * int(math.floor(abs(c) / q_step + f_offset))


def next_state(st: int, parity: int) -> int:
    if st not in (0, 1, 2, 3):
        raise DomainError(f"next_state needs a coded state, got {st}")
    return (STATE_TABLE >> ((st << 2) + ((parity & 1) << 1))) & 3


def reconstruct_level(index: int, st: int) -> int:
    """Reconstruction level (in units of q_step) of ``index`` at state ``st``."""
    if st not in (0, 1, 2, 3):
        raise DomainError(f"reconstruct_level needs a coded state, got {st}")
    return 2 * index - (st >> 1) * sign(index)


def index_of_level(level: int, quantizer: int) -> int:
    """Inverse of reconstruct_level for a non-negative level admissible at ``quantizer``."""
    if level == 0:
        return 0
    if level % 2 != quantizer:
        raise DomainError(f"level {level} is not admissible for quantizer Q{quantizer}")
    return (level + quantizer) // 2


def dequantize_states(indices_scan: Sequence[int]) -> tuple[list[int], list[int]]:
    """Replay the decoder over scan-ordered indices.

    Processing runs from the highest scan position down to 0 starting at state
    0.  Returns per-position (levels, states), both in scan order, where the
    state is the one used to reconstruct that position.
    """
    n = len(indices_scan)
    levels = [0] * n
    states = [0] * n
    st = 0
    for i in range(n - 1, -1, -1):
        idx = indices_scan[i]
        states[i] = st
        levels[i] = reconstruct_level(idx, st)
        st = next_state(st, idx & 1)
    return levels, states


def dequantize_block(indices_scan: Sequence[int], q_step: float) -> list[float]:
    levels, _ = dequantize_states(indices_scan)
    return [lv * q_step for lv in levels]


@lru_cache(maxsize=None)
def diagonal_scan(width: int, height: int) -> tuple:
    """Up-right diagonal scan: scan index -> (x, y).

    Diagonals d = x + y ascending; within a diagonal the larger y comes first.
    """
    if width not in SUPPORTED_DIMS or height not in SUPPORTED_DIMS:
        raise ConfigError(f"unsupported block shape {width}x{height}")
    order = []
    for d in range(width + height - 1):
        for y in range(min(d, height - 1), -1, -1):
            x = d - y
            if x < width:
                order.append((x, y))
    return tuple(order)


@lru_cache(maxsize=None)
def inverse_scan(width: int, height: int) -> dict:
    return {xy: k for k, xy in enumerate(diagonal_scan(width, height))}


def branch_distortion(c: float, index: int, st: int, q_step: float) -> float:
    return (c - q_step * reconstruct_level(index, st)) ** 2
