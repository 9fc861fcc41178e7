import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lctcq.errors import ConfigError, DomainError
from lctcq.source_model import (
    closed_form_stats,
    lambda_from_sigma,
    numeric_stats,
    rate_from_pnz,
    sample_block,
    self_info_rate,
    symbol_probability,
)

SQRT2 = math.sqrt(2.0)


def test_lambda_from_sigma():
    assert lambda_from_sigma(SQRT2) == pytest.approx(1.0, rel=1e-15)
    assert lambda_from_sigma(1.0) == pytest.approx(1.41421356, abs=1e-8)
    with pytest.raises(DomainError):
        lambda_from_sigma(0.0)
    with pytest.raises(DomainError):
        lambda_from_sigma(-1.0)


def test_closed_form_reference_point():
    cf = closed_form_stats(SQRT2, 1.0)
    num = numeric_stats(SQRT2, 1.0)
    assert cf.tau == pytest.approx(0.49307, abs=5e-6)
    assert cf.p_nz == cf.tau
    # frozen from quadrature: 0.240079085...
    assert num.d_expected == pytest.approx(0.2400790854, rel=1e-9)
    assert cf.d_expected == pytest.approx(num.d_expected, rel=1e-6)
    assert cf.d_expected == pytest.approx(cf.d_zero + cf.d_nonzero, rel=1e-14)


def test_closed_form_vanishing_step():
    cf = closed_form_stats(1.0, 1e-9)
    assert cf.p_nz == pytest.approx(1.0, abs=1e-8)
    assert cf.d_expected == pytest.approx(0.0, abs=1e-8)


def test_closed_form_coarse_step():
    cf = closed_form_stats(1.0, 40.0)
    num = numeric_stats(1.0, 40.0)
    assert cf.p_nz == pytest.approx(math.exp(-20.0), rel=1e-12)
    assert cf.d_expected == pytest.approx(1.0, rel=1e-6)
    assert num.d_expected == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("bad", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_closed_form_domain(bad):
    with pytest.raises(DomainError):
        closed_form_stats(*bad)


@pytest.mark.parametrize("lq", np.geomspace(0.05, 20.0, 15))
def test_closed_forms_match_quadrature(lq):
    lam = 0.7
    cf = closed_form_stats(lam, lq / lam)
    num = numeric_stats(lam, lq / lam)
    assert cf.tau == pytest.approx(num.tau, rel=1e-6, abs=1e-9)
    assert cf.d_zero == pytest.approx(num.d_zero, rel=1e-6)
    assert cf.d_nonzero == pytest.approx(num.d_nonzero, rel=1e-6)
    assert cf.d_expected == pytest.approx(num.d_expected, rel=1e-6)


def test_rate_from_pnz_examples():
    for order in range(4):
        assert rate_from_pnz(0.0, order) == 0.0
    assert rate_from_pnz(0.49307, 0) == pytest.approx(math.log2(1.49307 / 0.50693), rel=1e-12)
    assert rate_from_pnz(0.49307, 0) == pytest.approx(1.558423, abs=1e-6)
    assert rate_from_pnz(0.1, 1) == pytest.approx(0.288539, abs=1e-6)
    with pytest.raises(DomainError):
        rate_from_pnz(1.0)


@given(st.floats(min_value=1e-6, max_value=0.999))
def test_taylor_truncation_underestimates(p):
    exact = rate_from_pnz(p, 0)
    orders = [rate_from_pnz(p, k) for k in (1, 2, 3)]
    assert orders[0] <= orders[1] <= orders[2] <= exact * (1 + 1e-12)


def test_self_info_reference_point():
    x = SQRT2
    assert self_info_rate(0, SQRT2, 1.0) == pytest.approx(-math.log2(1 - math.exp(-x / 2)), rel=1e-12)
    assert self_info_rate(0, SQRT2, 1.0) == pytest.approx(0.98014, abs=1e-5)
    direct = -math.log2(0.5 * (math.exp(-x * 0.5) - math.exp(-x * 1.5)))
    assert self_info_rate(1, SQRT2, 1.0) == pytest.approx(direct, rel=1e-12)
    assert self_info_rate(1, SQRT2, 1.0) == pytest.approx(2.42200, abs=1e-5)
    assert self_info_rate(-1, SQRT2, 1.0) == self_info_rate(1, SQRT2, 1.0)


@pytest.mark.parametrize("lq", [0.5, 1.0, SQRT2, 5.0])
def test_symbol_probabilities_normalize(lq):
    total = sum(symbol_probability(lv, lq, 1.0) for lv in range(-200, 201))
    assert total == pytest.approx(1.0, abs=1e-9)
    for lv in (0, 1, 3):
        assert self_info_rate(lv, lq, 1.0) == pytest.approx(-math.log2(symbol_probability(lv, lq, 1.0)))


@given(st.floats(0.05, 10.0), st.integers(1, 30))
def test_self_info_increasing(lq, level):
    assert self_info_rate(level + 1, lq, 1.0) > self_info_rate(level, lq, 1.0)


@given(st.floats(0.05, 20.0))
def test_tau_is_mass_outside_dead_zone(lq):
    from scipy.integrate import quad

    inside, _ = quad(lambda x: 0.5 * math.exp(-abs(x)), -lq / 2, lq / 2, epsabs=1e-14)
    assert closed_form_stats(1.0, lq).tau == pytest.approx(1.0 - inside, abs=1e-9)


def test_sample_block_deterministic():
    a = sample_block(1.0, 4, 4, 7)
    b = sample_block(1.0, 4, 4, 7)
    assert a.coeffs == b.coeffs
    assert sample_block(1.0, 4, 4, 8).coeffs != a.coeffs


def test_sample_block_mean_abs():
    blk = sample_block(1.0, 16, 16, 1)
    mean_abs = np.mean(np.abs(blk.coeffs))
    b = 1.0 / SQRT2
    # |C| is exponential with mean and std b
    assert abs(mean_abs - b) <= 3 * b / math.sqrt(256)


def test_sample_block_errors():
    with pytest.raises(ConfigError):
        sample_block(0.0, 4, 4, 1)
    with pytest.raises(ConfigError):
        sample_block(1.0, 64, 4, 1)
