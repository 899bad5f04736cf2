import math

import numpy as np
import pytest

from slc.errors import SLRuntimeError
from slc.externals import (
    GOLDEN_FIRST_NORMAL_SEED42,
    Prng,
    a_mc,
    bs_closed_form,
    mc,
    normals,
)

X = [100.0, 0.05, 0.2, 100.0]


def test_first_normal_matches_golden_constant():
    assert Prng(42).next_normal() == GOLDEN_FIRST_NORMAL_SEED42


def test_identical_seeds_give_identical_streams():
    a = Prng(42)
    b = Prng(42)
    assert [a.next_normal() for _ in range(50)] == [b.next_normal() for _ in range(50)]


def test_two_prng_steps_per_normal():
    p = Prng(7)
    p.next_normal()
    q = Prng(7)
    q.next_u64()
    q.next_u64()
    assert p.state == q.state


def test_vectorized_normals_match_scalar_stream():
    p = Prng(123)
    scalar = [p.next_normal() for _ in range(257)]
    assert normals(123, 257).tolist() == scalar


def test_sample_mean_is_near_zero():
    draws = normals(42, 100000)
    assert abs(draws.mean()) <= 0.02


def test_mc_zero_volatility_is_deterministic_growth():
    s = [0.0] * 16
    mc([100.0, 0.05, 0.0, 100.0], s, 16, seed=42)
    assert s == [100.0 * math.exp(0.05)] * 16


def test_mc_single_path_from_golden_normal():
    s = [0.0]
    mc(X, s, 1, seed=42)
    expected = 100.0 * math.exp((0.05 - 0.02) + 0.2 * GOLDEN_FIRST_NORMAL_SEED42)
    assert s[0] == expected == 111.95691794340563


def test_mc_estimator_is_consistent_with_closed_form():
    m = 100000
    s = [0.0] * m
    mc(X, s, m, seed=42)
    payoffs = math.exp(-X[1]) * np.maximum(np.asarray(s) - X[3], 0.0)
    se = payoffs.std(ddof=1) / math.sqrt(m)
    price = bs_closed_form(X[0], X[3], X[1], X[2], 1.0).price
    assert abs(payoffs.mean() - price) <= 3 * se


def test_mc_length_mismatch_is_an_error():
    with pytest.raises(SLRuntimeError):
        mc(X, [0.0] * 3, 4, seed=42)
    with pytest.raises(SLRuntimeError):
        a_mc(X, [0.0] * 4, [0.0] * 3, [0.0] * 3, 4, seed=42)


def test_a_mc_zero_seed_adjoint_changes_nothing():
    m = 8
    s = [0.0] * m
    mc(X, s, m, seed=42)
    a_x = [1.0, 2.0, 3.0, 4.0]
    a_mc(X, a_x, s, [0.0] * m, m, seed=42)
    assert a_x == [1.0, 2.0, 3.0, 4.0]


def test_a_mc_zero_volatility_spot_sensitivity():
    m = 32
    x = [100.0, 0.05, 0.0, 100.0]
    s = [0.0] * m
    mc(x, s, m, seed=42)
    a_x = [0.0] * 4
    a_s = [1.0] * m
    a_mc(x, a_x, s, a_s, m, seed=42)
    assert a_x[0] == pytest.approx(m * math.exp(0.05), rel=1e-14)
    assert a_x[3] == 0.0
    assert a_s == [0.0] * m  # consumed


def test_a_mc_zeroes_a_s_after_consumption():
    m = 4
    s = [0.0] * m
    mc(X, s, m, seed=42)
    a_s = [0.5, -1.0, 2.0, 0.25]
    a_mc(X, [0.0] * 4, s, a_s, m, seed=42)
    assert a_s == [0.0] * m


def test_seed_replay_recomputes_paths_bit_equal():
    m = 64
    s = [0.0] * m
    mc(X, s, m, seed=99)
    z = normals(99, m)
    recomputed = X[0] * np.exp((X[1] - 0.5 * X[2] ** 2) + X[2] * z)
    assert recomputed.tolist() == s


@pytest.mark.parametrize("path", [0, 3, 7])
def test_pathwise_adjoint_matches_finite_differences(path):
    # per-path (ds/dS0, ds/dr, ds/dsigma) against central FD of mc with the
    # same seed, relative error <= 1e-6
    m = 8
    seed = 42
    a_x = [0.0] * 4
    a_s = [0.0] * m
    a_s[path] = 1.0
    s = [0.0] * m
    mc(X, s, m, seed=seed)
    a_mc(X, a_x, s, a_s, m, seed=seed)
    for i in range(3):
        eps = 1e-6 * X[i]
        hi, lo = list(X), list(X)
        hi[i] += eps
        lo[i] -= eps
        s_hi, s_lo = [0.0] * m, [0.0] * m
        mc(hi, s_hi, m, seed=seed)
        mc(lo, s_lo, m, seed=seed)
        fd = (s_hi[path] - s_lo[path]) / (2 * eps)
        assert a_x[i] == pytest.approx(fd, rel=1e-6)


FROZEN = {
    "price": 10.450583572185565,
    "delta": 0.6368306511756191,
    "rho": 53.232481545376345,
    "vega": 37.52403469169379,
    "d_strike": -0.5323248154537634,
}


def test_closed_form_at_the_case_study_point():
    got = bs_closed_form(100.0, 100.0, 0.05, 0.2, 1.0)
    for field, expected in FROZEN.items():
        assert getattr(got, field) == pytest.approx(expected, rel=1e-13)


def test_closed_form_worthless_strike_limit():
    got = bs_closed_form(100.0, 1e-12, 0.05, 0.2, 1.0)
    assert got.price == pytest.approx(100.0, rel=1e-9)


def test_closed_form_deterministic_payoff_limit():
    # deep in the money with vanishing volatility: S0 - K e^{-rT}
    got = bs_closed_form(150.0, 100.0, 0.05, 1e-9, 1.0)
    assert got.price == pytest.approx(150.0 - 100.0 * math.exp(-0.05), rel=1e-12)


def test_closed_form_domain_violations():
    for bad in [(0.0, 100, 0.05, 0.2, 1), (100, -1, 0.05, 0.2, 1),
                (100, 100, 0.05, 0.0, 1), (100, 100, 0.05, 0.2, 0.0)]:
        with pytest.raises(ValueError):
            bs_closed_form(*bad)
