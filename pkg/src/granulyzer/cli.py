"""Command-line entry point: sweep, fit, predict, decide, curve, report.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys

from . import harness
from .calibration import granularity_curve, predict_crossover
from .decision import static_time, verdict_table
from .harness import ConfigError, InvariantViolation, SampleRow
from .model import Mode
from .topology import EdgeBudgetExceeded, TopologyClass
from .workloads import PRESET_NAMES, preset

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _param(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--workload", choices=PRESET_NAMES)
    p.add_argument("--ranks", help="e.g. 4:256:x2 or 4,8,16")
    p.add_argument("--phases", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--set", dest="params", type=_param, action="append", default=[], metavar="KEY=VALUE",
                   help="override a workload parameter (n, c, k, rho, tau_s, tau_e, imbalance, ...)")


def _experiment_cli(args, **extra) -> dict:
    cli = {
        "workload": args.workload,
        "ranks": args.ranks,
        "phases": args.phases,
        "seed": args.seed,
        "overrides": dict(args.params) or None,
    }
    cli.update(extra)
    return cli


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def _read_samples(path: str) -> list[SampleRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        try:
            return harness.read_samples_csv(fh)
        except harness.CsvFormatError as exc:
            raise ConfigError(f"{path}: {exc}") from None


def _dump_json(doc: dict, path: str | None) -> None:
    with _output(path) as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def cmd_sweep(args) -> int:
    cfg = harness.load_config(args.config, _experiment_cli(args, mode=args.mode, csv=args.out, trace=args.trace_out))
    traces = harness.run_config(cfg)
    spec = cfg.spec()
    samples = [t.to_sample() for t in traces]
    rows = [SampleRow(spec.name, spec.topology, s) for s in samples]
    out = cfg.outputs.get("csv")
    with _output(out) as fh:
        harness.write_samples_csv(rows, fh)
    if cfg.outputs.get("trace"):
        with _output(cfg.outputs["trace"]) as fh:
            harness.write_trace_csv(traces, fh)
    table = harness.format_table(harness.regime_rows(samples, cfg.beneficial, cfg.detrimental))
    print(f"# {spec.name} ({spec.topology.value}), mode={cfg.mode.value}, seed={cfg.seed}",
          file=sys.stdout if out else sys.stderr)
    print(table, file=sys.stdout if out else sys.stderr)
    return EXIT_OK


def _topology_for(rows: list[SampleRow], override: str | None) -> TopologyClass:
    if override:
        return TopologyClass.parse(override)
    found = {r.topology for r in rows}
    if len(found) != 1:
        raise ConfigError("samples mix several topologies; pass --topology")
    return found.pop()


def cmd_fit(args) -> int:
    rows = _read_samples(args.samples_csv)
    if args.workload:
        rows = [r for r in rows if r.workload == args.workload]
    if not rows:
        raise ConfigError("insufficient samples: the CSV holds no data rows")
    topology = _topology_for(rows, args.topology)
    doc = harness.fit_models([r.sample for r in rows], topology, pre_collapse=not args.no_pre_collapse)
    _dump_json(doc, args.out)
    return EXIT_OK


def cmd_predict(args) -> int:
    kernel, overhead = harness.models_from_json(_read_json(args.models_json))
    ranks = harness.parse_ranks(args.ranks)
    range_hi = args.range_hi if args.range_hi is not None else ranks[-1]
    pred = predict_crossover(overhead, kernel, range_hi)
    doc = harness.prediction_to_dict(pred)
    doc["curve"] = harness.curve_to_dicts(granularity_curve(overhead, kernel, ranks))
    _dump_json(doc, args.out)
    return EXIT_OK


def cmd_decide(args) -> int:
    kernel, overhead = harness.models_from_json(_read_json(args.models_json))
    ranks = harness.parse_ranks(args.ranks)
    penalty = args.penalty
    if penalty < 1:
        raise ConfigError("--penalty must be >= 1")
    if args.workload:
        spec = preset(args.workload).with_overrides(**dict(args.params))
        static_hat = lambda p: static_time(spec, p, penalty)  # noqa: E731
    else:
        static_hat = lambda p: penalty * kernel.a / p  # noqa: E731
    verdicts, flip = verdict_table(static_hat, kernel, overhead, ranks)
    if args.json:
        _dump_json({"penalty": penalty, "verdicts": harness.verdicts_to_dicts(verdicts), "flip_point": flip}, args.out)
        return EXIT_OK
    with _output(args.out) as fh:
        fh.write(f"{'P':>6} {'static_hat':>14} {'dyn_hat':>14} {'margin':>14}  choice\n")
        for v in verdicts:
            fh.write(f"{v.p:>6} {v.t_static_hat:>14.6g} {v.t_dyn_hat:>14.6g} {v.margin:>14.6g}  {v.choice.value}\n")
        fh.write(f"flip point: {flip if flip is not None else 'none in range'}\n")
    return EXIT_OK


def cmd_curve(args) -> int:
    rows: list[SampleRow] = []
    for path in args.samples or []:
        rows.extend(_read_samples(path))
    for name in args.workloads.split(",") if args.workloads else []:
        spec = preset(name.strip())
        sizes = spec.sizes if args.all_sizes and spec.sizes else (spec.n,)
        for n in sizes:
            cfg = harness.load_config(None, {"workload": spec.name, "overrides": {"n": n}, "ranks": args.ranks,
                                             "phases": args.phases, "seed": args.seed})
            rows.extend(SampleRow(spec.name, spec.topology, t.to_sample()) for t in harness.run_config(cfg))
    with _output(args.out) as fh:
        harness.write_curve_csv(rows, fh)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(harness.curve_svg(rows))
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = harness.load_config(args.config, _experiment_cli(args, penalty=args.penalty, range_hi=args.range_hi,
                                                           json=args.out, csv=args.csv_out))
    report = harness.build_report(cfg)
    _dump_json(report, cfg.outputs.get("json"))
    if cfg.outputs.get("csv"):
        with _output(cfg.outputs["csv"]) as fh:
            fh.write(report["samples_csv"])
    if report["bracket"]["p_star_check"] == "outside":
        print("warning: predicted P* lies outside the measured transition interval", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="granulyzer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="simulate a strong-scaling sweep and write aggregated samples")
    _add_experiment_args(p)
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--out", help="samples CSV (default: stdout, table goes to stderr)")
    p.add_argument("--trace-out", help="per-phase trace CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit kernel and overhead models to a samples CSV")
    p.add_argument("samples_csv")
    p.add_argument("--topology")
    p.add_argument("--workload", help="only use rows of this workload")
    p.add_argument("--no-pre-collapse", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="crossover P* and G(P) curve from a models JSON")
    p.add_argument("models_json")
    p.add_argument("--range-hi", type=int)
    p.add_argument("--ranks", default="4:256:x2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("decide", help="dynamic-vs-static verdict per rank count")
    p.add_argument("models_json")
    p.add_argument("--penalty", type=float, default=1.0, help="static imbalance penalty (>= 1)")
    p.add_argument("--workload", choices=PRESET_NAMES, help="use this preset's kernel law as the static baseline")
    p.add_argument("--set", dest="params", type=_param, action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--ranks", default="4:256:x2")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("curve", help="overhead fraction vs G points plus the reference curve")
    p.add_argument("--samples", nargs="*", help="samples CSV file(s)")
    p.add_argument("--workloads", help="comma-separated presets to sweep, e.g. fft,stencil,sweep,gemm")
    p.add_argument("--all-sizes", action="store_true", help="sweep every default problem size")
    p.add_argument("--ranks")
    p.add_argument("--phases", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("report", help="sweep -> fit -> predict -> decide in one JSON report")
    _add_experiment_args(p)
    p.add_argument("--penalty", type=float)
    p.add_argument("--range-hi", type=int)
    p.add_argument("--out", help="report JSON (default: stdout)")
    p.add_argument("--csv-out", help="also write the aggregated samples CSV")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"granulyzer: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except EdgeBudgetExceeded as exc:
        print(f"granulyzer: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"granulyzer: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"granulyzer: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
