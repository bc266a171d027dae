import math

import pytest

from granulyzer.topology import TopologyClass
from granulyzer.workloads import PRESET_NAMES, kernel_time, preset

G, STENCIL, SWEEP, IND = (TopologyClass.GLOBAL, TopologyClass.LOCAL_STENCIL,
                          TopologyClass.LOCAL_SWEEP, TopologyClass.INDEPENDENT)


@pytest.mark.parametrize("name,topology", [
    ("fft", G), ("pagerank", G), ("nbody", G),
    ("stencil", STENCIL), ("spmv", STENCIL), ("conv2d", STENCIL),
    ("sweep", SWEEP), ("gemm", IND),
])
def test_preset_topology(name, topology):
    assert preset(name).topology is topology


def test_unknown_preset_lists_names():
    with pytest.raises(KeyError, match="fft"):
        preset("lu")


def test_kernel_time_examples():
    assert kernel_time(preset("gemm").with_overrides(n=2, c=1), 1) == 8
    assert kernel_time(preset("fft").with_overrides(n=8, c=1), 2) == 768
    assert kernel_time(preset("gemm").with_overrides(n=4, c=0.5), 4) == 8.0
    spec = preset("stencil")
    assert kernel_time(spec, 1) == spec.a


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_ideal_strong_scaling(name):
    spec = preset(name)
    a = kernel_time(spec, 1)
    for P in (4, 8, 16, 32, 64, 128, 256):
        assert kernel_time(spec, P) * P == pytest.approx(a, rel=1e-9)
        assert kernel_time(spec, P) == a / P


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_larger_problem_means_more_work(name):
    spec = preset(name)
    assert spec.with_overrides(n=spec.n * 1.5).a > spec.a


def test_pagerank_nbody_comparable_work():
    nbody, pagerank = preset("nbody"), preset("pagerank")
    assert nbody.n == 21285
    assert math.isclose(nbody.work_units, pagerank.work_units, rel_tol=0.01)
    assert math.isclose(pagerank.work_units, 453e6, rel_tol=0.01)


def test_overrides_validated():
    with pytest.raises(ValueError, match="unknown workload parameter"):
        preset("fft").with_overrides(colour="red")
    with pytest.raises(ValueError):
        preset("fft").with_overrides(rho=2)
    assert preset("fft").with_overrides(topology="stencil").topology is STENCIL


def test_defaults():
    spec = preset("fft")
    assert (spec.k, spec.rho, spec.tau_s, spec.tau_e, spec.imbalance) == (4, 0.5, 0.05, 0.002, 0.2)
    assert spec.sizes == (384, 512, 768)
    assert preset("stencil").sizes == (7525, 11560, 21285)
