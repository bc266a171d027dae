"""Static baseline, dynamic prediction and the dynamic-vs-static rule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_ranks, check_timings
from .calibration import (
    KernelModel,
    OverheadModel,
    ScalingSample,
    _fit_overhead,
    _samples_from_arrays,
    fit_kernel,
)
from .model import Mode
from .workloads import WorkloadSpec, kernel_time


@dataclass(frozen=True)
class Verdict:
    choice: Mode
    t_static_hat: float
    t_dyn_hat: float
    p: int

    @property
    def margin(self) -> float:
        return self.t_static_hat - self.t_dyn_hat


def static_time_fft(n: float, p: int, c: float) -> float:
    """Ideally balanced static time of one FFT stage: N^2/P pencils of cost c N log2 N."""
    if n < 2 or p < 1 or not c > 0:
        raise ValueError(f"need n >= 2, p >= 1, c > 0 (got {n}, {p}, {c})")
    return n * n / p * c * n * math.log2(n)


def static_time(spec: WorkloadSpec, p: int, imbalance_penalty: float = 1.0) -> float:
    if imbalance_penalty < 1:
        raise ValueError(f"imbalance penalty must be >= 1, got {imbalance_penalty}")
    return kernel_time(spec, p) * imbalance_penalty


def dynamic_time_hat(kernel: KernelModel, overhead: OverheadModel, p: int) -> float:
    return kernel.a / p + float(overhead.predict(p))


def decide(static_hat: float, kernel: KernelModel, overhead: OverheadModel, p: int) -> Verdict:
    dyn = dynamic_time_hat(kernel, overhead, p)
    # ties go to static
    choice = Mode.DYNAMIC if dyn < static_hat else Mode.STATIC
    return Verdict(choice, static_hat, dyn, p)


def estimate_penalty(static: Sequence[ScalingSample], dynamic: Sequence[ScalingSample]) -> float:
    """Static-over-dynamic kernel ratio at the smallest common rank count, floored at 1."""
    by_p = {s.ranks: s for s in dynamic}
    common = sorted(s.ranks for s in static if s.ranks in by_p)
    if not common:
        raise ValueError("static and dynamic samples share no rank count")
    p = common[0]
    st = next(s for s in static if s.ranks == p)
    return max(1.0, st.t_kernel / by_p[p].t_kernel)


def verdict_table(
    static_hat: Callable[[int], float],
    kernel: KernelModel,
    overhead: OverheadModel,
    ranks: Sequence[int],
) -> tuple[list[Verdict], int | None]:
    """Verdicts at each rank count and the first P at which static is preferred."""
    verdicts = [decide(static_hat(p), kernel, overhead, p) for p in ranks]
    flip = next((v.p for v in verdicts if v.choice is Mode.STATIC), None)
    return verdicts, flip


class ScheduleSelector(ClassifierMixin, BaseEstimator):
    """Pick dynamic or static execution per rank count.

    Fit on dynamic-run measurements (``X`` = rank counts, ``y`` = columns
    ``t_kernel, t_overhead``). The static baseline is ``penalty * A / P``;
    when ``penalty`` is None it is estimated from ``static_kernel`` (static
    kernel times at the same rank counts) at the smallest P.
    """

    def __init__(self, topology="global", penalty=None, pre_collapse=True):
        self.topology = topology
        self.penalty = penalty
        self.pre_collapse = pre_collapse

    def fit(self, X, y, static_kernel=None):
        P, y = check_timings(X, y, n_columns=2)
        dyn = _samples_from_arrays(P, y[:, 0], y[:, 1])
        self.kernel_model_ = fit_kernel(dyn)
        self.overhead_model_, _ = _fit_overhead(self.topology, dyn, self.pre_collapse)
        if self.penalty is not None:
            self.penalty_ = float(self.penalty)
        elif static_kernel is not None:
            st = _samples_from_arrays(P, np.asarray(static_kernel, dtype=float), np.zeros(len(P)))
            self.penalty_ = estimate_penalty(st, dyn)
        else:
            self.penalty_ = 1.0
        self.classes_ = np.array([Mode.DYNAMIC.value, Mode.STATIC.value])
        return self

    def verdicts(self, X) -> list[Verdict]:
        check_is_fitted(self, "kernel_model_")
        a = self.kernel_model_.a
        return [decide(self.penalty_ * a / p, self.kernel_model_, self.overhead_model_, p)
                for p in check_ranks(X)]

    def predict(self, X):
        return np.array([v.choice.value for v in self.verdicts(X)])

    def decision_function(self, X):
        """Predicted static time minus predicted dynamic time (positive favours dynamic)."""
        return np.array([v.margin for v in self.verdicts(X)])
