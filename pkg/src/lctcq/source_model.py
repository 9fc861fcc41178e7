"""Laplacian coefficient source and closed-form rate/distortion statistics.

All closed forms assume the pre-quantization rounding offset f = 1/2, so the
dead zone is [-Qstep/2, Qstep/2] and level ``l`` covers
[(l - 1/2) Qstep, (l + 1/2) Qstep).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lctcq.errors import ConfigError, DomainError
from lctcq.quant_kernel import SUPPORTED_DIMS, Block

LOG2E = 1.0 / math.log(2.0)


@dataclass(frozen=True)
class LaplacianParams:
    sigma: float
    lambda_lap: float

    @classmethod
    def from_sigma(cls, sigma: float) -> "LaplacianParams":
        return cls(sigma=sigma, lambda_lap=lambda_from_sigma(sigma))


@dataclass(frozen=True)
class ClosedFormStats:
    tau: float
    p_nz: float
    d_expected: float
    d_zero: float
    d_nonzero: float
    r0_hat: float


def lambda_from_sigma(sigma: float) -> float:
    """Laplacian scale for a given standard deviation."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return math.sqrt(2.0) / sigma


def _check_positive(lambda_lap: float, q_step: float) -> None:
    if not lambda_lap > 0:
        raise DomainError(f"lambda_lap must be positive, got {lambda_lap}")
    if not q_step > 0:
        raise DomainError(f"q_step must be positive, got {q_step}")


def closed_form_stats(lambda_lap: float, q_step: float) -> ClosedFormStats:
    """Non-zero probability and expected absolute-error distortion of
    rounding a Laplacian variate with step ``q_step``."""
    _check_positive(lambda_lap, q_step)
    tau = math.exp(-0.5 * lambda_lap * q_step)
    inv = 1.0 / lambda_lap
    d_zero = -0.5 * q_step * tau + inv * (1.0 - tau)
    if tau > 0.0:
        # tau^2 (2 - tau - 1/tau) / (1 - tau^2) rewritten as -tau (1 - tau) / (1 + tau)
        tail = -tau * (1.0 - tau) / (1.0 + tau)
    else:
        tail = 0.0
    d_nonzero = 0.5 * q_step * tau + inv * tail
    d_expected = inv * (1.0 - tau + tail)
    return ClosedFormStats(
        tau=tau,
        p_nz=tau,
        d_expected=d_expected,
        d_zero=d_zero,
        d_nonzero=d_nonzero,
        r0_hat=rate_from_pnz(tau) if tau < 1.0 else math.inf,
    )


def rate_from_pnz(p_nz: float, taylor_order: int = 0) -> float:
    """Bits per coefficient implied by the non-zero fraction.

    ``taylor_order`` 0 gives log2((1 + p)/(1 - p)); orders 1..3 keep that many
    odd terms of its series (2/ln 2)(p + p^3/3 + p^5/5 + ...).
    """
    if not 0.0 <= p_nz < 1.0:
        raise DomainError(f"p_nz must lie in [0, 1), got {p_nz}")
    if taylor_order not in (0, 1, 2, 3):
        raise DomainError(f"taylor_order must be 0..3, got {taylor_order}")
    if taylor_order == 0:
        # log2((1 + p)/(1 - p)) without the cancellation at small p
        return 2.0 * math.atanh(p_nz) * LOG2E
    total = 0.0
    for k in range(taylor_order):
        n = 2 * k + 1
        total += p_nz**n / n
    return 2.0 * LOG2E * total


def self_info_slopes(lambda_lap: float, q_step: float) -> tuple[float, float, float]:
    """Return (b0, beta1, b1) of the per-symbol self-information rate."""
    _check_positive(lambda_lap, q_step)
    x = lambda_lap * q_step
    b0 = -math.log2(-math.expm1(-0.5 * x))
    beta1 = x * LOG2E
    b1 = 1.0 - math.log2(2.0 * math.sinh(0.5 * x))
    return b0, beta1, b1


def self_info_rate(level: int, lambda_lap: float, q_step: float) -> float:
    """Self-information in bits of the quantized symbol ``level``."""
    b0, beta1, b1 = self_info_slopes(lambda_lap, q_step)
    if level == 0:
        return b0
    return beta1 * abs(level) + b1


def symbol_probability(level: int, lambda_lap: float, q_step: float) -> float:
    """Probability mass of ``level`` after rounding (f = 1/2)."""
    _check_positive(lambda_lap, q_step)
    x = lambda_lap * q_step
    if level == 0:
        return -math.expm1(-0.5 * x)
    a = abs(level)
    return 0.5 * (math.exp(-x * (a - 0.5)) - math.exp(-x * (a + 0.5)))


def laplacian_variates(sigma: float, n: int, seed: int) -> np.ndarray:
    """``n`` Laplacian variates by inverse CDF of a Philox counter stream."""
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    gen = np.random.Generator(np.random.Philox(int(seed) % (1 << 64)))
    u = gen.random(n)
    # u in [0, 1); shift to the open interval (0, 1) before inverting
    u = (u * (1 << 53) + 0.5) / (1 << 53)
    b = sigma / math.sqrt(2.0)
    centered = u - 0.5
    return -b * np.sign(centered) * np.log1p(-2.0 * np.abs(centered))


def sample_block(sigma: float, width: int, height: int, seed: int):
    """Deterministic W x H block of i.i.d. Laplacian coefficients (raster order)."""
    if width not in SUPPORTED_DIMS or height not in SUPPORTED_DIMS:
        raise ConfigError(f"unsupported block shape {width}x{height}")
    coeffs = laplacian_variates(sigma, width * height, seed)
    return Block(tuple(float(c) for c in coeffs), width, height)


@dataclass(frozen=True)
class NumericStats:
    tau: float
    d_zero: float
    d_nonzero: float

    @property
    def d_expected(self) -> float:
        return self.d_zero + self.d_nonzero


def numeric_stats(lambda_lap: float, q_step: float, pdf_floor: float = 1e-15) -> NumericStats:
    """Quadrature of the dead-zone mass and distortion integrals (f = 1/2).

    Independent of the closed forms: integrates the Laplacian density directly,
    truncating the tail where the density drops below ``pdf_floor``.
    """
    from scipy.integrate import quad

    _check_positive(lambda_lap, q_step)

    def pdf(x):
        return 0.5 * lambda_lap * math.exp(-lambda_lap * abs(x))

    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    half = 0.5 * q_step
    dead_mass, _ = quad(pdf, -half, half, **opts)
    d_zero, _ = quad(lambda x: pdf(x) * x, 0.0, half, **opts)
    d_zero *= 2.0
    x_max = math.log(0.5 * lambda_lap / pdf_floor) / lambda_lap
    d_nonzero = 0.0
    level = 1
    while (level - 0.5) * q_step < x_max:
        lo, hi = (level - 0.5) * q_step, (level + 0.5) * q_step
        center = level * q_step
        # split at the reconstruction point where |x - center| has its kink
        a, _ = quad(lambda x: pdf(x) * (center - x), lo, center, **opts)
        b, _ = quad(lambda x: pdf(x) * (x - center), center, hi, **opts)
        d_nonzero += 2.0 * (a + b)
        level += 1
    return NumericStats(tau=1.0 - dead_mass, d_zero=d_zero, d_nonzero=d_nonzero)
