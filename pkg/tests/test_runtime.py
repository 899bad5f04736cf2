import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slc.errors import KinkError, TapeUnderflow
from slc.runtime import ExecStats, SmoothingConfig, TapeStacks, d_exp, d_gt0, gt0, smoothing_from_env

CFG = SmoothingConfig(h=1e-3)


def test_scalar_stack_is_lifo():
    t = TapeStacks()
    t.push_s(3.5)
    t.push_s(-1.0)
    assert t.pop_s() == -1.0
    assert t.pop_s() == 3.5
    assert t.balanced


def test_vector_pop_is_unaffected_by_later_mutation():
    t = TapeStacks()
    source = [1.0, 2.0]
    t.push_v(source)
    source[0] = 9.0
    assert t.pop_v() == [1.0, 2.0]


def test_control_stack_round_trip_and_validation():
    t = TapeStacks()
    t.push_c(0)
    t.push_c(5)
    assert t.pop_c() == 5
    assert t.pop_c() == 0
    with pytest.raises(ValueError):
        t.push_c(-1)


@pytest.mark.parametrize("pop", ["pop_s", "pop_v", "pop_c"])
def test_pop_on_empty_stack_is_a_hard_error(pop):
    t = TapeStacks()
    with pytest.raises(TapeUnderflow, match="tape underflow"):
        getattr(t, pop)()


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), max_size=30))
def test_stack_replays_pushes_in_reverse(values):
    t = TapeStacks()
    for v in values:
        t.push_s(v)
    assert [t.pop_s() for _ in values] == list(reversed(values))
    assert t.balanced


def test_push_counters():
    stats = ExecStats()
    t = TapeStacks(stats)
    t.push_s(1.0)
    t.push_v([1.0])
    t.push_c(1)
    t.push_c(2)
    assert (stats.pushes_s, stats.pushes_v, stats.pushes_c) == (1, 1, 2)
    assert stats.total_pushes == 4


@pytest.mark.parametrize("x,expected", [(2.0, 2.0), (-1.0, 0.0), (0.0, 0.0)])
def test_gt0(x, expected):
    assert gt0(x) == expected


@pytest.mark.parametrize("x,expected", [(-0.01, 0.0), (0.01, 1.0), (0.0, 0.5)])
def test_d_gt0_plateaus_and_center(x, expected):
    assert d_gt0(x, CFG) == expected


def test_d_gt0_boundary_values_are_the_sigmoid_values():
    # at +-h the sigmoid branch applies: 1/(1+e^-1) and 1/(1+e)
    assert d_gt0(CFG.h, CFG) == 1.0 / (1.0 + math.exp(-1.0))
    assert d_gt0(-CFG.h, CFG) == 1.0 / (1.0 + math.exp(1.0))


@given(st.floats(min_value=-1e-3, max_value=1e-3), st.floats(min_value=-1e-3, max_value=1e-3))
def test_d_gt0_monotone_inside_band(a, b):
    lo, hi = sorted((a, b))
    assert d_gt0(lo, CFG) <= d_gt0(hi, CFG)


@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6))
def test_d_gt0_matches_exact_derivative_outside_band(x):
    if abs(x) > CFG.h:
        assert d_gt0(x, CFG) == (1.0 if x > 0 else 0.0)


def test_d_gt0_counts_kink_hits_and_strict_mode_raises():
    stats = ExecStats()
    d_gt0(0.0, CFG, stats)
    d_gt0(5e-4, CFG, stats)
    d_gt0(0.5, CFG, stats)  # outside the band, not counted
    assert stats.kink_hits == 2
    strict = SmoothingConfig(h=1e-3, strict_kinks=True)
    with pytest.raises(KinkError):
        d_gt0(0.0, strict)


def test_d_exp_values_and_finite_difference():
    assert d_exp(0.0) == 1.0
    assert d_exp(1.0) == math.exp(1.0)
    eps = 1e-6
    fd = (math.exp(0.3 + eps) - math.exp(0.3 - eps)) / (2 * eps)
    assert abs(d_exp(0.3) - fd) <= 1e-6


def test_smoothing_config_requires_positive_h():
    with pytest.raises(ValueError):
        SmoothingConfig(h=0.0)
    with pytest.raises(ValueError):
        SmoothingConfig(h=-1e-3)


def test_smoothing_from_env(monkeypatch):
    monkeypatch.setenv("SL_SMOOTH_H", "0.25")
    assert smoothing_from_env().h == 0.25
    # explicit value wins over the environment
    assert smoothing_from_env(h=0.5).h == 0.5
    monkeypatch.delenv("SL_SMOOTH_H")
    assert smoothing_from_env().h == 1e-3
