"""Experiment configuration: JSON key/value documents plus CLI overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace

from lctcq.errors import ConfigError
from lctcq.low_complexity import BOUND, EXACT, RISKY_K, SAFE_K, DepartureConfig
from lctcq.quant_kernel import DEFAULT_PHI, SUPPORTED_DIMS, QuantConfig
from lctcq.rate_estimator import RateModelParams
from lctcq.trellis import RATE_MODES, SURROGATE

K_MODES = ("safe", "risky", "analytic", "exact", "off")


@dataclass(frozen=True)
class ExperimentConfig:
    qp_list: tuple = (22, 27, 32, 37)
    sigma_list: tuple = (32.0,)
    block_shapes: tuple = ((8, 8),)
    blocks_per_cell: int = 100
    seed: int = 0
    rate_mode: str = SURROGATE
    k_mode: str = "safe"
    k_factor: float | None = None  # explicit multiplier, overrides k_mode
    pruning: bool = False
    rice_g: int = 0
    phi: float = DEFAULT_PHI
    r_cbf: float = 1.0
    sign_bits: float = 1.0
    fit_source: str = "hdq"
    params_file: str | None = None
    inline_fit: bool = True
    oracle_shapes: tuple = ((2, 2), (1, 6))
    oracle_qps: tuple = (22, 37)
    oracle_draws: int = 100
    oracle_params: tuple = (1.0, 1.0, 0.5, 2.0)
    histogram: bool = True

    def __post_init__(self):
        for name in ("qp_list", "sigma_list", "block_shapes"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"{name} must not be empty")
        if self.blocks_per_cell < 1:
            raise ConfigError("blocks_per_cell must be >= 1")
        if any(not s > 0 for s in self.sigma_list):
            raise ConfigError("sigma_list entries must be positive")
        for w, h in tuple(self.block_shapes) + tuple(self.oracle_shapes):
            if w not in SUPPORTED_DIMS or h not in SUPPORTED_DIMS:
                raise ConfigError(f"unsupported block shape {w}x{h}")
        if self.rate_mode not in RATE_MODES:
            raise ConfigError(f"rate_mode must be one of {RATE_MODES}")
        if self.k_mode not in K_MODES:
            raise ConfigError(f"k_mode must be one of {K_MODES}")
        if not 0 <= self.rice_g <= 8:
            raise ConfigError("rice_g must be in 0..8")
        if self.fit_source not in ("hdq", "tcq"):
            raise ConfigError("fit_source must be 'hdq' or 'tcq'")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def quant_config(self, qp: int) -> QuantConfig:
        return QuantConfig.from_qp(qp, phi=self.phi, r_cbf=self.r_cbf, sign_bits=self.sign_bits)

    def departure(self) -> DepartureConfig:
        if self.k_factor is not None:
            return DepartureConfig(BOUND, self.k_factor)
        if self.k_mode == "safe":
            return DepartureConfig(BOUND, SAFE_K)
        if self.k_mode == "risky":
            return DepartureConfig(BOUND, RISKY_K)
        if self.k_mode == "off":
            return DepartureConfig(BOUND, 0.0)
        if self.k_mode == "analytic":
            return DepartureConfig(BOUND, None)
        return DepartureConfig(EXACT, None)

    def needs_params(self) -> bool:
        dep = self.departure()
        return self.rate_mode != SURROGATE or dep.mode == EXACT or dep.k_factor is None

    def oracle_rate_params(self) -> RateModelParams:
        return RateModelParams(*self.oracle_params)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, val in d.items():
            if isinstance(val, tuple):
                d[key] = [list(v) if isinstance(v, tuple) else v for v in val]
        return d


_TUPLE_KEYS = {"qp_list", "sigma_list", "block_shapes", "oracle_shapes", "oracle_qps", "oracle_params"}


def from_dict(d: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    base = base or ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    clean = {}
    for key, val in d.items():
        if key in _TUPLE_KEYS:
            if not isinstance(val, (list, tuple)):
                raise ConfigError(f"{key} must be an array")
            val = tuple(tuple(v) if isinstance(v, (list, tuple)) else v for v in val)
        clean[key] = val
    try:
        return replace(base, **clean)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | None, overrides: dict | None = None) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not a valid config document ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a key/value object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return from_dict(data)
