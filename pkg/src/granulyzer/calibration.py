"""Fitting the kernel and overhead models, and locating the crossover P*.

The functional API (``fit_kernel``, ``fit_overhead``, ``predict_crossover`` ...)
works on :class:`ScalingSample` lists. The estimators at the bottom wrap it
behind the usual ``fit`` / ``predict`` / ``transform`` interface so the models
compose with scikit-learn tooling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import nnls
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_ranks, check_timings
from .model import (
    BENEFICIAL_THRESHOLD,
    DETRIMENTAL_THRESHOLD,
    Regime,
    classify_regime,
    overhead_fraction_percent,
)
from .topology import TopologyClass


@dataclass(frozen=True)
class ScalingSample:
    ranks: int
    t_kernel: float
    t_overhead: float

    def __post_init__(self):
        if self.ranks < 1:
            raise ValueError(f"ranks must be >= 1, got {self.ranks}")
        if not self.t_kernel > 0:
            raise ValueError(f"t_kernel must be positive, got {self.t_kernel} at P={self.ranks}")
        if not self.t_overhead >= 0:
            raise ValueError(f"t_overhead must be non-negative, got {self.t_overhead} at P={self.ranks}")


@dataclass(frozen=True)
class KernelModel:
    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"kernel constant A must be positive, got {self.a}")

    def predict(self, P):
        out = self.a / np.asarray(P, dtype=float)
        return out if out.ndim else float(out)


class OverheadForm(enum.Enum):
    QUADRATIC = "quadratic"
    LINEAR = "linear"
    CONSTANT = "constant"

    @classmethod
    def for_topology(cls, topology: TopologyClass) -> "OverheadForm":
        return {2: cls.QUADRATIC, 1: cls.LINEAR, 0: cls.CONSTANT}[topology.edge_growth]

    @classmethod
    def parse(cls, value) -> "OverheadForm":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown overhead form {value!r}") from None

    @property
    def power(self) -> int:
        return {OverheadForm.QUADRATIC: 2, OverheadForm.LINEAR: 1, OverheadForm.CONSTANT: 0}[self]


@dataclass(frozen=True)
class OverheadModel:
    """``T_overhead(P) = alpha * P**power + beta``; alpha is None for the constant form."""

    form: OverheadForm
    alpha: float | None
    beta: float
    clamped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "form", OverheadForm.parse(self.form))
        if self.form is OverheadForm.CONSTANT:
            if self.alpha not in (None, 0, 0.0):
                raise ValueError("constant overhead model takes no alpha")
            object.__setattr__(self, "alpha", None)
        elif self.alpha is None or self.alpha < 0:
            raise ValueError(f"{self.form.value} model needs alpha >= 0, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")

    @property
    def slope(self) -> float:
        return self.alpha or 0.0

    def predict(self, P):
        out = self.slope * np.asarray(P, dtype=float) ** self.form.power + self.beta
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"form": self.form.value, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class CrossoverPrediction:
    p_star: float
    exists_in_range: bool
    range_hi: int


class CurvePoint(NamedTuple):
    ranks: float
    g: float
    omega_pct: float
    regime: Regime


def fit_kernel(samples: Sequence[ScalingSample]) -> KernelModel:
    """Least-squares A for ``t_kernel = A / P``."""
    if not samples:
        raise ValueError("fit_kernel needs at least one sample")
    inv = np.array([1.0 / s.ranks for s in samples])
    t = np.array([s.t_kernel for s in samples])
    return KernelModel(float(np.sum(t * inv) / np.sum(inv * inv)))


def _least_squares(form: OverheadForm, samples: Sequence[ScalingSample]) -> OverheadModel:
    y = np.array([s.t_overhead for s in samples], dtype=float)
    if form is OverheadForm.CONSTANT:
        return OverheadModel(form, None, float(np.median(y)))
    x = np.array([float(s.ranks) for s in samples]) ** form.power
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    clamped = bool(coef.min() < 0)
    if clamped:
        coef, _ = nnls(design, y)
    return OverheadModel(form, float(coef[0]), float(coef[1]), clamped)


def _min_samples(form: OverheadForm) -> int:
    return 1 if form is OverheadForm.CONSTANT else 2


def pre_collapse_filter(
    samples: Sequence[ScalingSample],
    kernel: KernelModel,
    topology: TopologyClass = TopologyClass.GLOBAL,
    max_iter: int = 5,
) -> list[ScalingSample]:
    """Keep only samples at or below the crossover implied by a fit on them.

    Fit, solve for P*, keep ``P <= P*``, refit; stops when the kept set no
    longer changes or after ``max_iter`` rounds. The two smallest-P samples are
    always kept.
    """
    if len(samples) < 2:
        raise ValueError("pre_collapse_filter needs at least 2 samples")
    ordered = sorted(samples, key=lambda s: s.ranks)
    form = OverheadForm.for_topology(topology)
    kept = ordered
    for _ in range(max_iter):
        model = _least_squares(form, kept)
        p_star = predict_crossover(model, kernel, range_hi=ordered[-1].ranks).p_star
        nxt = [s for s in ordered if s.ranks <= p_star]
        if len(nxt) < 2:
            nxt = ordered[:2]
        if nxt == kept:
            break
        kept = nxt
    return kept


def _fit_overhead(topology, samples, pre_collapse=True) -> tuple[OverheadModel, list[ScalingSample]]:
    topology = TopologyClass.parse(topology)
    form = OverheadForm.for_topology(topology)
    need = _min_samples(form)
    if len(samples) < need:
        raise ValueError(f"insufficient samples: {form.value} overhead fit needs at least {need}, got {len(samples)}")
    used = list(samples)
    if topology is TopologyClass.GLOBAL and pre_collapse:
        used = pre_collapse_filter(samples, fit_kernel(samples), topology)
    return _least_squares(form, used), used


def fit_overhead(topology: TopologyClass, samples: Sequence[ScalingSample], pre_collapse: bool = True) -> OverheadModel:
    """Fit the overhead form dictated by ``topology``.

    Global data is restricted to its pre-collapse region first; the constant
    form uses the median. Negative least-squares coefficients are refit under
    a non-negativity constraint and flagged via ``OverheadModel.clamped``.
    """
    return _fit_overhead(topology, samples, pre_collapse)[0]


def _bisect(f, lo: float, hi: float, max_iter: int = 200) -> float:
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def predict_crossover(model: OverheadModel, kernel: KernelModel, range_hi: int = 256) -> CrossoverPrediction:
    """Rank count where modeled overhead equals the modeled kernel time A/P."""
    A = kernel.a
    if not A > 0:
        raise ValueError(f"kernel constant A must be positive, got {A}")
    alpha, beta = model.slope, model.beta

    if model.form is OverheadForm.CONSTANT or alpha == 0:
        p_star = A / beta if beta > 0 else math.inf
    elif model.form is OverheadForm.LINEAR:
        # stable root of alpha P^2 + beta P - A = 0
        p_star = 2.0 * A / (beta + math.sqrt(beta * beta + 4.0 * alpha * A))
    else:
        f = lambda p: (alpha * p * p + beta) * p - A  # noqa: E731
        hi = 1e9
        while f(hi) < 0 and hi < 1e300:
            hi *= 1e3
        p_star = _bisect(f, 0.0, hi) if f(hi) >= 0 else math.inf
    return CrossoverPrediction(p_star, p_star <= range_hi, int(range_hi))


def granularity_curve(
    model: OverheadModel,
    kernel: KernelModel,
    ranks,
    beneficial: float = BENEFICIAL_THRESHOLD,
    detrimental: float = DETRIMENTAL_THRESHOLD,
) -> list[CurvePoint]:
    points = []
    for P in ranks:
        overhead = float(model.predict(float(P)))
        g = math.inf if overhead == 0 else kernel.a / P / overhead
        points.append(CurvePoint(P, g, overhead_fraction_percent(g), classify_regime(g, beneficial, detrimental)))
    return points


def _samples_from_arrays(P: np.ndarray, t_kernel: np.ndarray, t_overhead: np.ndarray) -> list[ScalingSample]:
    return [ScalingSample(int(round(p)), float(k), float(o)) for p, k, o in zip(P, t_kernel, t_overhead)]


class KernelRegressor(RegressorMixin, BaseEstimator):
    """Ideal strong-scaling kernel model ``t = A / P``.

    ``X`` holds rank counts, ``y`` kernel times.
    """

    def fit(self, X, y):
        P, y = check_timings(X, y)
        self.model_ = fit_kernel(_samples_from_arrays(P, y, np.zeros_like(y)))
        self.a_ = self.model_.a
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(check_ranks(X))


class OverheadRegressor(RegressorMixin, BaseEstimator):
    """Topology-dictated scheduling-overhead model.

    Parameters
    ----------
    topology : str or TopologyClass
        Selects the quadratic, linear or constant form.
    pre_collapse : bool
        Restrict global-topology fits to the region below the crossover. Needs
        ``kernel_times`` at fit time; ignored otherwise.
    """

    def __init__(self, topology="global", pre_collapse=True):
        self.topology = topology
        self.pre_collapse = pre_collapse

    def fit(self, X, y, kernel_times=None):
        P, y = check_timings(X, y)
        filtering = self.pre_collapse and kernel_times is not None
        kt = np.asarray(kernel_times, dtype=float) if filtering else np.ones_like(y)
        samples = _samples_from_arrays(P, kt, y)
        self.model_, used = _fit_overhead(self.topology, samples, pre_collapse=filtering)
        self.form_ = self.model_.form
        self.alpha_ = self.model_.alpha
        self.beta_ = self.model_.beta
        self.clamped_ = self.model_.clamped
        self.ranks_used_ = np.array([s.ranks for s in used])
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(check_ranks(X))


class GranularityAnalyzer(TransformerMixin, BaseEstimator):
    """Calibrate kernel and overhead models together and locate P*.

    ``fit`` takes rank counts ``X`` and a two-column ``y`` of
    ``(t_kernel, t_overhead)``. ``transform`` maps rank counts to modeled G,
    ``predict`` to regime labels.
    """

    def __init__(self, topology="global", range_hi=None, pre_collapse=True,
                 beneficial=BENEFICIAL_THRESHOLD, detrimental=DETRIMENTAL_THRESHOLD):
        self.topology = topology
        self.range_hi = range_hi
        self.pre_collapse = pre_collapse
        self.beneficial = beneficial
        self.detrimental = detrimental

    def fit(self, X, y=None):
        if y is None:
            raise ValueError("GranularityAnalyzer.fit needs y = (t_kernel, t_overhead) columns")
        P, y = check_timings(X, y, n_columns=2)
        samples = _samples_from_arrays(P, y[:, 0], y[:, 1])
        self.kernel_model_ = fit_kernel(samples)
        self.overhead_model_, used = _fit_overhead(self.topology, samples, self.pre_collapse)
        hi = self.range_hi if self.range_hi is not None else int(P.max())
        self.crossover_ = predict_crossover(self.overhead_model_, self.kernel_model_, hi)
        self.ranks_used_ = np.array([s.ranks for s in used])
        return self

    def curve(self, X) -> list[CurvePoint]:
        check_is_fitted(self, "kernel_model_")
        return granularity_curve(self.overhead_model_, self.kernel_model_, check_ranks(X),
                                 self.beneficial, self.detrimental)

    def transform(self, X):
        return np.array([[pt.g] for pt in self.curve(X)])

    def predict(self, X):
        return np.array([pt.regime.value for pt in self.curve(X)])
