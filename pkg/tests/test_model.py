import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from granulyzer.model import (
    PhaseParams,
    PhaseTiming,
    Regime,
    classify_regime,
    decay_exponent,
    exposed_overhead,
    granularity,
    overhead_fraction_percent,
    overhead_ratio,
    phase_time,
)
from granulyzer.topology import TopologyClass

positive = st.floats(1e-6, 1e6, allow_nan=False)


@pytest.mark.parametrize("params,expected", [
    (PhaseParams(10, 4, 0.5, 8, 0.25), 11.0),
    (PhaseParams(10, 4, 1.0, 8, 0.25), 10.0),
    (PhaseParams(0, 0, 0.0, 1, 1.0), 1.0),
])
def test_phase_time(params, expected):
    assert phase_time(params) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("rho,k,tau_s,expected", [(0, 100, 0.01, 1.0), (1, 10**6, 5, 0.0), (0.75, 40, 0.1, 1.0)])
def test_exposed_overhead(rho, k, tau_s, expected):
    assert exposed_overhead(rho, k, tau_s) == pytest.approx(expected, rel=1e-12)


def test_phase_params_validation():
    with pytest.raises(ValueError):
        PhaseParams(1, 1, 1.5, 1, 0.1)
    with pytest.raises(ValueError):
        PhaseParams(1, 1, 0.5, 0, 0.1)
    with pytest.raises(ValueError):
        PhaseParams(1, 1, 0.5, 1, -0.1)


@pytest.mark.parametrize("kernel,overhead,g", [(100, 10, 10), (5, 5, 1), (90, 10, 9)])
def test_granularity(kernel, overhead, g):
    assert granularity(PhaseTiming(kernel, overhead)) == g


def test_granularity_edge_cases():
    assert granularity(PhaseTiming(3, 0)) == math.inf
    assert classify_regime(math.inf) is Regime.BENEFICIAL
    assert granularity(PhaseTiming(0, 2)) == 0
    assert classify_regime(0.0) is Regime.DETRIMENTAL
    with pytest.raises(ValueError):
        granularity(PhaseTiming(0, 0))


@pytest.mark.parametrize("g,expected", [(1, 1.0), (10, 0.1), (0.5, 2.0), (math.inf, 0.0)])
def test_overhead_ratio(g, expected):
    assert overhead_ratio(g) == expected


@pytest.mark.parametrize("g,expected", [(1, 50.0), (10, 100 / 11), (0, 100.0), (math.inf, 0.0)])
def test_overhead_fraction_percent(g, expected):
    assert overhead_fraction_percent(g) == pytest.approx(expected, rel=1e-15)


def test_overhead_fraction_matches_reported_rounding():
    assert round(overhead_fraction_percent(10)) == 9


@pytest.mark.parametrize("g,regime", [
    (10.0001, Regime.BENEFICIAL),
    (10, Regime.MARGINAL),
    (1.0001, Regime.MARGINAL),
    (1, Regime.DETRIMENTAL),
    (0.3, Regime.DETRIMENTAL),
])
def test_classify_regime(g, regime):
    assert classify_regime(g) is regime


@pytest.mark.parametrize("topology,exp", [
    (TopologyClass.GLOBAL, -3), (TopologyClass.LOCAL_STENCIL, -2),
    (TopologyClass.LOCAL_SWEEP, -2), (TopologyClass.INDEPENDENT, -1),
])
def test_decay_exponent(topology, exp):
    assert decay_exponent(topology) == exp


@given(positive, positive)
def test_fraction_identity(kernel, overhead):
    g = granularity(PhaseTiming(kernel, overhead))
    direct = 100 * overhead / (kernel + overhead)
    assert overhead_fraction_percent(g) == pytest.approx(direct, rel=1e-12)


@given(positive, positive)
def test_fraction_strictly_decreasing(a, b):
    if a == b:
        return
    lo, hi = sorted((a, b))
    assert overhead_fraction_percent(lo) > overhead_fraction_percent(hi)


@given(st.floats(1e-9, 1e9))
def test_regime_consistent_with_fraction(g):
    regime = classify_regime(g)
    omega = overhead_fraction_percent(g)
    if regime is Regime.BENEFICIAL:
        assert omega < 100 / 11
    if regime is Regime.DETRIMENTAL:
        assert omega >= 50
    assert overhead_ratio(g) * g == pytest.approx(1.0, rel=1e-15)


@given(positive, st.floats(0, 1), st.integers(1, 1000), st.floats(0, 10))
def test_phase_time_reduces_to_kernel_plus_overhead(t_kernel, rho, k, tau_s):
    p = PhaseParams(t_kernel, 0.0, rho, k, tau_s)
    assert phase_time(p) == pytest.approx(t_kernel + exposed_overhead(rho, k, tau_s), rel=1e-15)
