"""Phase-time model, granularity number and regime classification.

Granularity is carried as a plain float; ``math.inf`` stands for the
unbounded case (a phase with zero measured overhead).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .topology import TopologyClass

BENEFICIAL_THRESHOLD = 10.0
DETRIMENTAL_THRESHOLD = 1.0


class Mode(enum.Enum):
    DYNAMIC = "dynamic"
    STATIC = "static"

    @classmethod
    def parse(cls, value: "str | Mode") -> "Mode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown mode {value!r}; expected 'dynamic' or 'static'") from None


class Regime(enum.Enum):
    BENEFICIAL = "beneficial"
    MARGINAL = "marginal"
    DETRIMENTAL = "detrimental"


@dataclass(frozen=True)
class PhaseParams:
    t_comp: float
    t_comm: float
    rho: float
    k: int
    tau_s: float
    tau_e: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        for name in ("t_comp", "t_comm", "tau_s", "tau_e"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class PhaseTiming:
    t_kernel: float
    t_overhead: float

    def __post_init__(self):
        if self.t_kernel < 0 or self.t_overhead < 0:
            raise ValueError(f"timings must be non-negative, got {self}")

    @property
    def t_phase(self) -> float:
        return self.t_kernel + self.t_overhead


def exposed_overhead(rho: float, k: int, tau_s: float) -> float:
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    return (1.0 - rho) * k * tau_s


def phase_time(p: PhaseParams) -> float:
    return max(p.t_comp, p.t_comm) + exposed_overhead(p.rho, p.k, p.tau_s)


def granularity(t: PhaseTiming) -> float:
    """Kernel time over exposed overhead; ``inf`` when no overhead was measured."""
    if t.t_overhead == 0:
        if t.t_kernel == 0:
            raise ValueError("granularity undefined for a phase with neither kernel nor overhead time")
        return math.inf
    return t.t_kernel / t.t_overhead


def overhead_ratio(g: float) -> float:
    if math.isinf(g):
        return 0.0
    if g <= 0:
        raise ValueError(f"overhead ratio needs G > 0, got {g}")
    return 1.0 / g


def overhead_fraction_percent(g: float) -> float:
    """Share of phase time spent in overhead, in percent."""
    if math.isinf(g):
        return 0.0
    if g < 0:
        raise ValueError(f"G must be non-negative, got {g}")
    return 100.0 / (g + 1.0)


def classify_regime(
    g: float,
    beneficial: float = BENEFICIAL_THRESHOLD,
    detrimental: float = DETRIMENTAL_THRESHOLD,
) -> Regime:
    # strict above the beneficial threshold, inclusive at the detrimental one
    if g > beneficial:
        return Regime.BENEFICIAL
    if g > detrimental:
        return Regime.MARGINAL
    return Regime.DETRIMENTAL


def decay_exponent(topology: TopologyClass) -> int:
    """Exponent of P in G(P) under ideal strong scaling (kernel ~ 1/P)."""
    return -1 - topology.edge_growth
