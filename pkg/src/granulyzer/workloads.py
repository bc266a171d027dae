"""Workload presets: topology class, kernel-work law and default parameters.

The per-unit costs ``c`` are synthetic. They are picked so that, with the
shared scheduler defaults, the FFT preset falls off its overhead cliff inside
4-256 ranks, stencil and sweep degrade gradually, GEMM never leaves the
beneficial regime, and the four extra presets cross over at a few hundred
ranks.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable

from .topology import TopologyClass

DEFAULT_RANKS = (4, 8, 16, 32, 64, 128, 256)

GRID_SIZES = (7525, 11560, 21285)
FFT_SIZES = (384, 512, 768)


def _fft_units(n: float, degree: float) -> float:
    # N^2 pencils, each a length-N transform costing N log2 N
    return n * n * n * math.log2(n)


def _grid_units(n: float, degree: float) -> float:
    return n * n


def _cubic_units(n: float, degree: float) -> float:
    return n * n * n


def _edge_units(n: float, degree: float) -> float:
    return n * degree


WORK_LAWS: dict[str, Callable[[float, float], float]] = {
    "fft": _fft_units,
    "grid": _grid_units,
    "pairs": _grid_units,
    "cubic": _cubic_units,
    "edges": _edge_units,
}


@dataclass(frozen=True)
class WorkloadSpec:
    """A strong-scaling workload.

    ``n`` is the problem dimension, ``c`` the cost in ms of one unit of work
    under ``law``; times are in milliseconds throughout.
    """

    name: str
    topology: TopologyClass
    law: str
    n: float
    c: float
    k: int = 4
    rho: float = 0.5
    tau_s: float = 0.05
    tau_e: float = 0.002
    imbalance: float = 0.2
    degree: float = 1.0
    sizes: tuple[float, ...] = ()

    def __post_init__(self):
        if self.law not in WORK_LAWS:
            raise ValueError(f"unknown work law {self.law!r}; expected one of {sorted(WORK_LAWS)}")
        if not self.n > 0 or not self.c > 0:
            raise ValueError(f"{self.name}: n and c must be positive")
        if self.k < 1:
            raise ValueError(f"{self.name}: k must be >= 1")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"{self.name}: rho must lie in [0, 1]")
        if self.tau_s < 0 or self.tau_e < 0 or self.imbalance < 0:
            raise ValueError(f"{self.name}: tau_s, tau_e and imbalance must be non-negative")

    @property
    def work_units(self) -> float:
        return WORK_LAWS[self.law](self.n, self.degree)

    @property
    def a(self) -> float:
        """Single-rank kernel time (the A of A/P)."""
        return self.c * self.work_units

    def kernel_work(self, P: int) -> float:
        if P < 1:
            raise ValueError(f"P must be >= 1, got {P}")
        return self.a / P

    def with_overrides(self, **overrides) -> "WorkloadSpec":
        if "topology" in overrides:
            overrides["topology"] = TopologyClass.parse(overrides["topology"])
        known = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown workload parameter(s): {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **overrides)


G = TopologyClass.GLOBAL
S = TopologyClass.LOCAL_STENCIL

_PRESETS: dict[str, WorkloadSpec] = {
    "fft": WorkloadSpec("fft", G, "fft", n=512, c=6.62e-6, sizes=FFT_SIZES),
    "stencil": WorkloadSpec("stencil", S, "grid", n=11560, c=5.0e-6, sizes=GRID_SIZES),
    "sweep": WorkloadSpec("sweep", TopologyClass.LOCAL_SWEEP, "grid", n=11560, c=5.0e-6, sizes=GRID_SIZES),
    "gemm": WorkloadSpec("gemm", TopologyClass.INDEPENDENT, "cubic", n=11560, c=1.66e-9, sizes=GRID_SIZES),
    "spmv": WorkloadSpec("spmv", S, "grid", n=21285, c=1.54e-7, sizes=(21285,)),
    "conv2d": WorkloadSpec("conv2d", S, "grid", n=21285, c=7.88e-7, sizes=(21285,)),
    "pagerank": WorkloadSpec("pagerank", G, "edges", n=30.2e6, c=2.69e-5, degree=15.0, sizes=(30.2e6,)),
    "nbody": WorkloadSpec("nbody", G, "pairs", n=21285, c=1.96e-5, sizes=(21285,)),
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> WorkloadSpec:
    try:
        return _PRESETS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown workload {name!r}; valid names: {', '.join(PRESET_NAMES)}") from None


def kernel_time(spec: WorkloadSpec, P: int) -> float:
    return spec.kernel_work(P)
