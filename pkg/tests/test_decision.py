import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from granulyzer.calibration import KernelModel, OverheadForm, OverheadModel, ScalingSample
from granulyzer.decision import (
    ScheduleSelector,
    decide,
    dynamic_time_hat,
    estimate_penalty,
    static_time,
    static_time_fft,
    verdict_table,
)
from granulyzer.model import Mode
from granulyzer.workloads import kernel_time, preset

POW2 = [4, 8, 16, 32, 64, 128, 256]
QUAD = OverheadModel(OverheadForm.QUADRATIC, 0.001, 0.0)
K = KernelModel(1000.0)


@pytest.mark.parametrize("n,p,c,expected", [(8, 1, 1, 1536), (8, 2, 1, 768), (2, 1, 1, 8)])
def test_static_time_fft(n, p, c, expected):
    assert static_time_fft(n, p, c) == expected


def test_static_time():
    assert static_time(preset("fft").with_overrides(n=8, c=1), 2) == 768
    assert static_time(preset("gemm").with_overrides(n=4, c=0.5), 4) == 8.0
    spec = preset("stencil")
    assert static_time(spec, 16, 1.15) == pytest.approx(1.15 * kernel_time(spec, 16))
    with pytest.raises(ValueError):
        static_time(spec, 16, 0.9)


@pytest.mark.parametrize("overhead,p,expected", [
    (OverheadModel(OverheadForm.CONSTANT, None, 10.0), 100, 20.0),
    (QUAD, 10, 100.1),
    (OverheadModel(OverheadForm.LINEAR, 0.1, 0.0), 200, 25.0),
])
def test_dynamic_time_hat(overhead, p, expected):
    assert dynamic_time_hat(K, overhead, p) == pytest.approx(expected, rel=1e-12)


def test_decide_examples():
    const = OverheadModel(OverheadForm.CONSTANT, None, 10.0)
    v = decide(100.0, K, const, 100)
    assert v.choice is Mode.DYNAMIC and v.margin == pytest.approx(80.0)
    tie = decide(20.0, K, const, 100)
    assert tie.choice is Mode.STATIC and tie.margin == 0


def test_penalty_flip_between_32_and_64():
    # 0.001 P^3 = 0.2 * 1000  =>  P = (2e5) ** (1/3) ~ 58.48
    verdicts, flip = verdict_table(lambda p: 1.2 * 1000 / p, K, QUAD, POW2)
    choice = {v.p: v.choice for v in verdicts}
    assert choice[32] is Mode.DYNAMIC and choice[64] is Mode.STATIC
    assert flip == 64
    assert (2e5) ** (1 / 3) == pytest.approx(58.4804, rel=1e-5)


def test_no_penalty_means_static_everywhere():
    verdicts, flip = verdict_table(lambda p: 1000 / p, K, QUAD, POW2)
    assert all(v.choice is Mode.STATIC for v in verdicts)
    assert flip == 4


@given(st.floats(0.01, 100), st.floats(1.0, 10))
def test_scale_invariance(scale, penalty):
    a = KernelModel(1000.0 * scale)
    oh = OverheadModel(OverheadForm.QUADRATIC, 0.001 * scale, 0.5 * scale)
    base = [decide(penalty * 1000 / p, K, OverheadModel(OverheadForm.QUADRATIC, 0.001, 0.5), p) for p in POW2]
    scaled = [decide(penalty * 1000 * scale / p, a, oh, p) for p in POW2]
    for b, s in zip(base, scaled):
        if abs(b.margin) > 1e-9 * b.t_static_hat:
            assert b.choice is s.choice


@given(st.floats(1.0, 5.0), st.floats(1.0, 5.0))
def test_flip_monotone_in_penalty(p1, p2):
    lo, hi = sorted((p1, p2))
    ranks = list(range(1, 400))

    def flip(pen):
        return verdict_table(lambda p: pen * 1000 / p, K, QUAD, ranks)[1] or 10**9

    assert flip(lo) <= flip(hi)


def test_estimate_penalty():
    dyn = [ScalingSample(p, 100 / p, 1) for p in (4, 8)]
    st_ = [ScalingSample(p, 120 / p, 0) for p in (4, 8)]
    assert estimate_penalty(st_, dyn) == pytest.approx(1.2)
    assert estimate_penalty(dyn, st_) == 1.0
    with pytest.raises(ValueError):
        estimate_penalty([ScalingSample(16, 1, 0)], dyn)


def test_schedule_selector():
    P = np.array(POW2)
    y = np.column_stack([1000 / P, 0.001 * P**2.0])
    sel = ScheduleSelector(penalty=1.2).fit(P, y)
    assert list(sel.predict([32, 64])) == ["dynamic", "static"]
    margins = sel.decision_function([32, 64])
    assert margins[0] > 0 > margins[1]
    assert set(sel.classes_) == {"dynamic", "static"}

    est = ScheduleSelector(pre_collapse=False).fit(P, y, static_kernel=1200 / P)
    assert est.penalty_ == pytest.approx(1.2)
    assert clone(est).get_params() == {"topology": "global", "penalty": None, "pre_collapse": False}
    assert ScheduleSelector().fit(P, y).penalty_ == 1.0
