"""Experiment configuration, CSV/JSON persistence and report assembly."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field, fields
from typing import Iterable, NamedTuple, Sequence, TextIO

import numpy as np

from .calibration import (
    CrossoverPrediction,
    KernelModel,
    OverheadForm,
    OverheadModel,
    ScalingSample,
    _fit_overhead,
    fit_kernel,
    granularity_curve,
    predict_crossover,
)
from .decision import estimate_penalty, verdict_table
from .model import (
    BENEFICIAL_THRESHOLD,
    DETRIMENTAL_THRESHOLD,
    Mode,
    PhaseTiming,
    Regime,
    classify_regime,
    granularity,
    overhead_fraction_percent,
)
from .simulator import ExecutionTrace, run_sweep_traces
from .topology import TopologyClass, edge_count
from .workloads import DEFAULT_RANKS, WorkloadSpec, preset

SEED_ENV = "GRANULYZER_SEED"

TRACE_HEADER = ("workload", "topology", "P", "phase", "t_kernel_ms", "t_overhead_ms", "mode", "seed")
SAMPLE_HEADER = ("workload", "topology", "P", "t_kernel_ms", "t_overhead_ms")
CURVE_HEADER = ("kind", "workload", "topology", "P", "G", "omega_pct", "regime")

AGGREGATION = "per-phase median"


class ConfigError(ValueError):
    """Bad configuration or usage (exit code 1)."""


class CsvFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvariantViolation(RuntimeError):
    """An internal consistency check failed (exit code 3)."""


def fmt_float(x: float) -> str:
    # shortest repr that round-trips exactly
    return repr(float(x))


def parse_ranks(text) -> list[int]:
    """Parse ``"4:256:x2"`` (geometric), ``"8:64:+8"`` (arithmetic) or ``"4,8,16"``."""
    if isinstance(text, (list, tuple)):
        ranks = [int(p) for p in text]
    else:
        text = str(text).strip()
        try:
            if ":" in text:
                parts = text.split(":")
                if len(parts) != 3:
                    raise ValueError
                lo, hi, step = int(parts[0]), int(parts[1]), parts[2]
                ranks, p = [], lo
                if step.startswith("x"):
                    factor = int(step[1:])
                    if factor < 2:
                        raise ValueError
                    while p <= hi:
                        ranks.append(p)
                        p *= factor
                else:
                    inc = int(step.lstrip("+"))
                    if inc < 1:
                        raise ValueError
                    ranks = list(range(lo, hi + 1, inc))
            else:
                ranks = [int(p) for p in text.split(",") if p.strip()]
        except ValueError:
            raise ConfigError(f"cannot parse rank list {text!r}; use e.g. 4:256:x2 or 4,8,16") from None
    if not ranks or ranks[0] < 1 or any(b <= a for a, b in zip(ranks, ranks[1:])):
        raise ConfigError(f"rank list must be non-empty, positive and strictly ascending, got {ranks}")
    return ranks


_TOP_KEYS = {"workload", "overrides", "ranks", "phases", "seed", "mode", "penalty", "range_hi", "thresholds", "outputs"}
_THRESHOLD_KEYS = {"beneficial", "detrimental"}
_OUTPUT_KEYS = {"csv", "json", "trace", "svg"}


@dataclass
class ExperimentConfig:
    workload: str
    overrides: dict = field(default_factory=dict)
    ranks: list[int] = field(default_factory=lambda: list(DEFAULT_RANKS))
    phases: int = 5
    seed: int = 0
    mode: Mode = Mode.DYNAMIC
    penalty: float | None = None
    range_hi: int | None = None
    beneficial: float = BENEFICIAL_THRESHOLD
    detrimental: float = DETRIMENTAL_THRESHOLD
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            self.spec()
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc).strip("'\"")) from None
        self.ranks = parse_ranks(self.ranks)
        self.mode = Mode.parse(self.mode)
        if self.phases < 1:
            raise ConfigError("phases must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.penalty is not None and self.penalty < 1:
            raise ConfigError("penalty must be >= 1")
        if not self.detrimental < self.beneficial:
            raise ConfigError("detrimental threshold must lie below the beneficial one")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        if "workload" not in data:
            raise ConfigError("config needs a 'workload'")
        thresholds = data.get("thresholds") or {}
        outputs = data.get("outputs") or {}
        for name, block, allowed in (("thresholds", thresholds, _THRESHOLD_KEYS), ("outputs", outputs, _OUTPUT_KEYS)):
            extra = set(block) - allowed
            if extra:
                raise ConfigError(f"unknown {name} key(s): {', '.join(sorted(extra))}")
        kwargs = {k: data[k] for k in ("workload", "overrides", "ranks", "phases", "seed", "mode", "penalty", "range_hi")
                  if data.get(k) is not None}
        kwargs.update(thresholds)
        kwargs["outputs"] = dict(outputs)
        return cls(**kwargs)

    def spec(self) -> WorkloadSpec:
        return preset(self.workload).with_overrides(**self.overrides)

    @property
    def effective_range_hi(self) -> int:
        return self.range_hi if self.range_hi is not None else self.ranks[-1]

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("beneficial", "detrimental")}
        out["mode"] = self.mode.value
        out["thresholds"] = {"beneficial": self.beneficial, "detrimental": self.detrimental}
        return out


def load_config(path: str | None, cli: dict | None = None, env: dict | None = None) -> ExperimentConfig:
    """File < ``GRANULYZER_SEED`` < command-line flags."""
    data: dict = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            data["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
    for key, value in (cli or {}).items():
        if value is None:
            continue
        if key == "overrides":
            data["overrides"] = {**data.get("overrides", {}), **value}
        elif key in _THRESHOLD_KEYS:
            data.setdefault("thresholds", {})[key] = value
        elif key in _OUTPUT_KEYS:
            data.setdefault("outputs", {})[key] = value
        else:
            data[key] = value
    return ExperimentConfig.from_dict(data)


class SampleRow(NamedTuple):
    workload: str
    topology: TopologyClass
    sample: ScalingSample


def write_samples_csv(rows: Iterable[SampleRow], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SAMPLE_HEADER)
    for r in rows:
        s = r.sample
        w.writerow([r.workload, r.topology.value, s.ranks, fmt_float(s.t_kernel), fmt_float(s.t_overhead)])


def samples_csv_text(rows: Iterable[SampleRow]) -> str:
    buf = io.StringIO()
    write_samples_csv(rows, buf)
    return buf.getvalue()


def read_samples_csv(fh: TextIO) -> list[SampleRow]:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        raise CsvFormatError(1, "empty file; expected header " + ",".join(SAMPLE_HEADER))
    if tuple(header) != SAMPLE_HEADER:
        raise CsvFormatError(1, f"expected header {','.join(SAMPLE_HEADER)}, got {','.join(header)}")
    rows = []
    for line, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(SAMPLE_HEADER):
            raise CsvFormatError(line, f"expected {len(SAMPLE_HEADER)} fields, got {len(rec)}")
        try:
            sample = ScalingSample(int(rec[2]), float(rec[3]), float(rec[4]))
            rows.append(SampleRow(rec[0], TopologyClass.parse(rec[1]), sample))
        except ValueError as exc:
            raise CsvFormatError(line, str(exc)) from None
    return rows


def write_trace_csv(traces: Iterable[ExecutionTrace], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for tr in traces:
        cfg = tr.config
        for phase, pt in enumerate(tr.per_phase):
            w.writerow([cfg.workload.name, cfg.workload.topology.value, cfg.ranks, phase,
                        fmt_float(pt.t_kernel), fmt_float(pt.t_overhead), cfg.mode.value, cfg.seed])


def check_trace(trace: ExecutionTrace) -> None:
    """Raise InvariantViolation if a trace breaks its accounting contract."""
    cfg = trace.config
    expected = edge_count(cfg.workload.topology, cfg.ranks, periodic=cfg.periodic)
    for phase, (edges, pt) in enumerate(zip(trace.measured_edges, trace.per_phase)):
        if phase > 0 and edges != expected:
            raise InvariantViolation(f"P={cfg.ranks} phase {phase}: {edges} edges measured, {expected} expected")
        if cfg.mode is Mode.STATIC and pt.t_overhead != 0:
            raise InvariantViolation(f"static run charged overhead at P={cfg.ranks} phase {phase}")


def run_config(cfg: ExperimentConfig, mode: Mode | None = None) -> list[ExecutionTrace]:
    traces = run_sweep_traces(cfg.spec(), cfg.ranks, cfg.phases, cfg.seed, mode or cfg.mode)
    for tr in traces:
        check_trace(tr)
    return traces


def _g_or_none(g: float) -> float | None:
    return None if math.isinf(g) else g


def regime_rows(samples: Sequence[ScalingSample], beneficial=BENEFICIAL_THRESHOLD,
                detrimental=DETRIMENTAL_THRESHOLD) -> list[dict]:
    rows = []
    for s in samples:
        g = granularity(PhaseTiming(s.t_kernel, s.t_overhead))
        rows.append({
            "P": s.ranks,
            "t_kernel_ms": s.t_kernel,
            "t_overhead_ms": s.t_overhead,
            "G": _g_or_none(g),
            "omega_pct": overhead_fraction_percent(g),
            "regime": classify_regime(g, beneficial, detrimental).value,
        })
    return rows


def format_table(rows: Sequence[dict]) -> str:
    lines = [f"{'P':>6} {'t_kernel_ms':>14} {'t_overhead_ms':>14} {'G':>12} {'omega_%':>8}  regime"]
    for r in rows:
        g = "inf" if r["G"] is None else f"{r['G']:.4g}"
        lines.append(f"{r['P']:>6} {r['t_kernel_ms']:>14.6g} {r['t_overhead_ms']:>14.6g} {g:>12} "
                     f"{r['omega_pct']:>8.3f}  {r['regime']}")
    return "\n".join(lines)


def empirical_bracket(rows: Sequence[dict], detrimental: str = Regime.DETRIMENTAL.value) -> tuple[int | None, int | None]:
    """(last non-detrimental P, first detrimental P) of a sweep, by measured G."""
    for idx, r in enumerate(rows):
        if r["regime"] == detrimental:
            return (rows[idx - 1]["P"] if idx else None), r["P"]
    return (rows[-1]["P"] if rows else None), None


def bracket_check(p_star: float, ranks: Sequence[int], bracket: tuple[int | None, int | None]) -> str:
    """Where the predicted P* falls relative to the measured transition.

    Returns ``within``, ``adjacent`` (at most one sweep point outside),
    ``outside``, or ``not-observed`` when no detrimental point was measured.
    """
    lo, hi = bracket
    if hi is None:
        return "not-observed"
    if math.isinf(p_star):
        return "outside"
    lo_v = lo if lo is not None else 0
    if lo_v <= p_star <= hi:
        return "within"
    ranks = list(ranks)
    i_hi = ranks.index(hi)
    below = ranks[ranks.index(lo) - 1] if lo is not None and ranks.index(lo) > 0 else 0
    above = ranks[i_hi + 1] if i_hi + 1 < len(ranks) else hi
    return "adjacent" if below <= p_star <= above else "outside"


def fit_models(samples: Sequence[ScalingSample], topology: TopologyClass, pre_collapse: bool = True) -> dict:
    """Models JSON document: kernel A, overhead form/alpha/beta and diagnostics."""
    kernel = fit_kernel(samples)
    overhead, used = _fit_overhead(topology, samples, pre_collapse)
    P = np.array([s.ranks for s in used], dtype=float)
    resid_o = np.array([s.t_overhead for s in used]) - overhead.predict(P)
    resid_k = np.array([s.t_kernel for s in samples]) - kernel.predict(np.array([s.ranks for s in samples], float))
    return {
        "topology": topology.value,
        "a": kernel.a,
        "form": overhead.form.value,
        "alpha": overhead.alpha,
        "beta": overhead.beta,
        "diagnostics": {
            "aggregation": AGGREGATION,
            "points_total": len(samples),
            "points_used": [s.ranks for s in used],
            "overhead_residual_norm": float(np.linalg.norm(resid_o)),
            "kernel_residual_norm": float(np.linalg.norm(resid_k)),
            "clamped": overhead.clamped,
        },
    }


def models_from_json(doc: dict) -> tuple[KernelModel, OverheadModel]:
    if not isinstance(doc, dict):
        raise ConfigError("models JSON must be an object")
    if "models" in doc and isinstance(doc["models"], dict):
        doc = doc["models"]
    try:
        kernel = KernelModel(float(doc["a"]))
        form = OverheadForm.parse(doc["form"])
        alpha = doc.get("alpha")
        overhead = OverheadModel(form, None if alpha is None else float(alpha), float(doc.get("beta", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"models JSON lacks key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid models JSON: {exc}") from None
    return kernel, overhead


def prediction_to_dict(pred: CrossoverPrediction) -> dict:
    return {
        "p_star": _g_or_none(pred.p_star),
        "exists_in_range": pred.exists_in_range,
        "range_hi": pred.range_hi,
    }


def curve_to_dicts(points) -> list[dict]:
    return [{"P": int(p.ranks), "G": _g_or_none(p.g), "omega_pct": p.omega_pct, "regime": p.regime.value}
            for p in points]


def verdicts_to_dicts(verdicts) -> list[dict]:
    return [{"P": int(v.p), "choice": v.choice.value, "t_static_hat": v.t_static_hat,
             "t_dyn_hat": v.t_dyn_hat, "margin": v.margin} for v in verdicts]


def simulated_flip(dynamic: Sequence[ScalingSample], static: Sequence[ScalingSample]) -> int | None:
    """First P at which measured dynamic total exceeds the static kernel time."""
    st = {s.ranks: s.t_kernel for s in static}
    for s in dynamic:
        if s.ranks in st and s.t_kernel + s.t_overhead >= st[s.ranks]:
            return s.ranks
    return None


def build_report(cfg: ExperimentConfig) -> dict:
    """sweep -> fit -> predict -> decide, as one JSON-ready document."""
    spec = cfg.spec()
    dyn_traces = run_config(cfg, Mode.DYNAMIC)
    st_traces = run_config(cfg, Mode.STATIC)
    dyn = [t.to_sample() for t in dyn_traces]
    st = [t.to_sample() for t in st_traces]
    rows = [SampleRow(spec.name, spec.topology, s) for s in dyn]
    csv_text = samples_csv_text(rows)
    # fit on the samples as read back from the embedded CSV so the report reproduces itself
    parsed = [r.sample for r in read_samples_csv(io.StringIO(csv_text))]
    models = fit_models(parsed, spec.topology)
    kernel, overhead = models_from_json(models)
    pred = predict_crossover(overhead, kernel, cfg.effective_range_hi)

    penalty = cfg.penalty if cfg.penalty is not None else estimate_penalty(st, dyn)
    verdicts, flip = verdict_table(lambda p: penalty * kernel.a / p, kernel, overhead, cfg.ranks)

    table = regime_rows(parsed, cfg.beneficial, cfg.detrimental)
    bracket = empirical_bracket(table)
    return {
        "workload": spec.name,
        "topology": spec.topology.value,
        "config": cfg.to_dict(),
        "aggregation": AGGREGATION,
        "table": table,
        "models": models,
        "crossover": prediction_to_dict(pred),
        "curve": curve_to_dicts(granularity_curve(overhead, kernel, cfg.ranks, cfg.beneficial, cfg.detrimental)),
        "penalty": penalty,
        "verdicts": verdicts_to_dicts(verdicts),
        "flip_point": flip,
        "simulated_flip": simulated_flip(dyn, st),
        "static_kernel_ms": {str(s.ranks): s.t_kernel for s in st},
        "bracket": {
            "last_non_detrimental": bracket[0],
            "first_detrimental": bracket[1],
            "p_star_check": bracket_check(pred.p_star, cfg.ranks, bracket),
        },
        "samples_csv": csv_text,
    }


def reference_curve(n: int = 101, lo_exp: float = -2.0, hi_exp: float = 3.0) -> list[tuple[float, float]]:
    return [(g, overhead_fraction_percent(g)) for g in np.logspace(lo_exp, hi_exp, n)]


def write_curve_csv(rows: Iterable[SampleRow], fh: TextIO, beneficial=BENEFICIAL_THRESHOLD,
                    detrimental=DETRIMENTAL_THRESHOLD) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for r in rows:
        s = r.sample
        g = granularity(PhaseTiming(s.t_kernel, s.t_overhead))
        w.writerow(["measured", r.workload, r.topology.value, s.ranks,
                    "inf" if math.isinf(g) else fmt_float(g), fmt_float(overhead_fraction_percent(g)),
                    classify_regime(g, beneficial, detrimental).value])
    for g, omega in reference_curve():
        w.writerow(["reference", "", "", "", fmt_float(g), fmt_float(omega), ""])
    for g in (detrimental, beneficial):
        w.writerow(["boundary", "", "", "", fmt_float(g), fmt_float(overhead_fraction_percent(g)), ""])


def curve_svg(rows: Sequence[SampleRow], width: int = 480, height: int = 320) -> str:
    """Bare log-x scatter of overhead percentage against G."""
    lo, hi = -2.0, 3.0
    pad = 40

    def xy(g: float, omega: float) -> tuple[float, float]:
        lg = min(max(math.log10(g), lo), hi) if g > 0 else lo
        return (pad + (lg - lo) / (hi - lo) * (width - 2 * pad), height - pad - omega / 100 * (height - 2 * pad))

    ref = " ".join("%.2f,%.2f" % xy(g, om) for g, om in reference_curve())
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<polyline fill="none" stroke="black" points="{ref}"/>']
    for g in (DETRIMENTAL_THRESHOLD, BENEFICIAL_THRESHOLD):
        x, _ = xy(g, 0)
        parts.append(f'<line x1="{x:.2f}" y1="{pad}" x2="{x:.2f}" y2="{height - pad}" stroke="grey"/>')
    for r in rows:
        g = granularity(PhaseTiming(r.sample.t_kernel, r.sample.t_overhead))
        if math.isinf(g):
            continue
        x, y = xy(g, overhead_fraction_percent(g))
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3"><title>{r.workload} P={r.sample.ranks}</title></circle>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
