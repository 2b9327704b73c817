"""Command-line entry point: ``effcomm <command> ...``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import RunConfig, load_config
from .encoding import CodecSpec, DecodeError, decode, decode_bytes, encode
from .handover import HandoverParams, decide, margin_symbols, to_symbols
from .infotheory import BinningSpec, SymbolSeries, TEConfig, discretize, transfer_entropy, windowed_transfer_entropy
from .scenario import MobilitySpec, RsrpTrace, TraceParseError, generate_trace, read_trace, write_trace
from .sensory import TOUCH_REFERENCE_RATES_MBPS, SenseSpec
from .simloop import ConfigError, SimReport
from .viability import ScenarioSpec, fictitious_scenario, information_curve

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which we reserve for data errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- output helpers ------------------------------------------------------------

def write_series(path: Path, x_name: str, y_name: str, xs: Iterable, ys: Iterable) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([x_name, y_name])
        for x, y in zip(xs, ys):
            w.writerow([x, repr(float(y)) if isinstance(y, (float, np.floating)) else y])


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1)


def _load_trace(path: str) -> RsrpTrace:
    try:
        return read_trace(path)
    except OSError as exc:
        raise DataError(f"cannot read trace {path}: {exc.strerror}") from None
    except TraceParseError as exc:
        raise DataError(f"{path}: {exc}") from None


# --- simulate ---------------------------------------------------------------------

def write_report(report: SimReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    slots = range(report.horizon)
    write_series(out / "viability.csv", "slot", "viability", slots, report.viability)
    for name, series in report.cumulative_bits.items():
        write_series(out / f"bits_{name}.csv", "slot", "cumulative_bits", slots, series)
    write_series(out / "te_bound.csv", "slot", "te_bound_bits", slots, report.te_bound)
    write_series(out / "te_windowed.csv", "window_end", "te_bits",
                 report.te_windowed["slots"], report.te_windowed["bits"])
    write_series(out / "serving.csv", "slot", "serving", slots, report.serving)
    write_series(out / "reference_serving.csv", "slot", "serving", slots, report.reference_serving)


def _summary(report: SimReport) -> dict:
    return {
        "seed": report.seed,
        "final_viability": report.final_viability,
        "bits_policy": report.cumulative_bits["policy"][-1],
        "bits_raw": report.cumulative_bits["raw"][-1],
        "bits_delta": report.cumulative_bits["delta"][-1],
        "te_bound_bits": report.te_bound[-1],
        "handovers": len(report.handovers["reference"]),
        "drop_slot": report.drop_slot,
    }


def parse_sweep(text: str) -> list[int]:
    m = re.fullmatch(r"seeds=(\d+)\.\.(\d+)", text.strip())
    if not m:
        raise UsageError(f"--sweep expects seeds=a..b, got {text!r}")
    a, b = int(m.group(1)), int(m.group(2))
    if b < a:
        raise UsageError("--sweep range is empty")
    return list(range(a, b + 1))


def _simulate_one(cfg: RunConfig) -> SimReport:
    try:
        return cfg.simulate()
    except (OSError, TraceParseError) as exc:
        raise DataError(str(exc)) from None


def cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    out = Path(args.out) if args.out else cfg.output_dir
    if args.sweep:
        seeds = parse_sweep(args.sweep)
        if out is None:
            raise UsageError("--sweep needs an output directory (--out or output.dir)")
        configs = [cfg.with_seed(s) for s in seeds]
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_simulate_one, configs))
        # aggregate only once every run has finished
        for seed, rep in zip(seeds, reports):
            write_report(rep, out / f"seed_{seed}")
        summary = [_summary(r) for r in reports]
        (out / "sweep.json").write_text(_dump(summary) + "\n", encoding="utf-8")
        print(_dump({"runs": len(reports), "out": str(out),
                     "mean_final_viability": float(np.mean([s["final_viability"] for s in summary]))}))
        return EXIT_OK

    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    report = _simulate_one(cfg)
    if out is None:
        sys.stdout.write(report.to_json())
    else:
        write_report(report, out)
        print(_dump(_summary(report)))
    return EXIT_OK


# --- te ---------------------------------------------------------------------------

def _targets(trace: RsrpTrace, how: str, params: HandoverParams) -> tuple[SymbolSeries, object]:
    if how == "auto":
        how = "events" if "ho_success" in trace.events else "decide"
    if how == "events":
        return SymbolSeries(np.array([e == "ho_success" for e in trace.events], dtype=np.int64), 2), None
    actions = decide(trace, params)
    return to_symbols(actions), actions


def cmd_te(args) -> int:
    trace = _load_trace(args.trace)
    params = HandoverParams(args.algorithm, args.hysteresis, time_to_trigger=args.ttt)
    cfg = TEConfig(args.k, args.l, args.bias)
    target, actions = _targets(trace, args.target, params)
    clamped = 0
    if args.source == "margin":
        if trace.n_cells < 2:
            raise DataError("the margin source needs at least two cells")
        if actions is None:
            actions = decide(trace, params)
        source = margin_symbols(trace.rsrp, actions, params.hysteresis)
        clamped = source.clamped
    else:
        try:
            column = trace.column(args.source)
        except KeyError as exc:
            raise DataError(exc.args[0]) from None
        source = discretize(column, BinningSpec(args.lo, args.hi, args.bins))
        clamped = source.clamped
    try:
        est = transfer_entropy(source, target, cfg)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    result = {
        "source": args.source,
        "target_handovers": int(target.symbols.sum()),
        "global_bits": est.global_bits,
        "corrected_bits": est.corrected_bits,
        "samples_used": est.samples_used,
        "clamped": clamped,
    }
    if args.out:
        if len(trace) < args.window or args.window <= cfg.lag + 1:
            raise UsageError(f"window must be > {cfg.lag + 1} and at most the trace length")
        ends, bits = windowed_transfer_entropy(source, target, cfg, args.window, args.step)
        write_series(Path(args.out), "window_end", "te_bits", ends.tolist(), bits)
        result["windowed_csv"] = args.out
    print(_dump(result))
    return EXIT_OK


# --- encode -----------------------------------------------------------------------

def cmd_encode(args) -> int:
    trace = _load_trace(args.trace)
    spec = CodecSpec(args.codec, args.bits, args.step)
    try:
        log = encode(trace, spec)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    data, padding = log.to_bytes()
    result = {
        "codec": args.codec,
        "slots": len(trace),
        "cells": trace.n_cells,
        "total_bits": log.total_bits,
        "bytes": len(data),
        "padding_bits": padding,
    }
    if args.verify:
        try:
            back = decode_bytes(data, padding, spec, trace.n_cells)
        except DecodeError as exc:
            raise DataError(f"round trip failed: {exc}") from None
        result["verified"] = bool(np.array_equal(back, spec.quantize(trace.rsrp))
                                  and np.array_equal(decode(log), back))
    if args.out:
        write_series(Path(args.out), "slot", "cumulative_bits", range(len(trace)), log.cumulative_bits.tolist())
    if args.bitstream:
        Path(args.bitstream).write_bytes(data)
    print(_dump(result))
    if args.verify and not result["verified"]:
        return EXIT_DATA
    return EXIT_OK


# --- viability ----------------------------------------------------------------------

def cmd_viability(args) -> int:
    try:
        spec = ScenarioSpec(args.horizon, args.deadline, args.candidates, args.penalty)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    full, none = fictitious_scenario(spec)
    bits, bound = information_curve(spec, args.max_bits, args.points)
    if args.out:
        out = Path(args.out)
        slots = range(spec.horizon)
        write_series(out / "full_info.csv", "slot", "viability", slots, full.values)
        write_series(out / "no_info.csv", "slot", "viability", slots, none.values)
        write_series(out / "information_bound.csv", "bits", "viability", bits, bound)
    print(_dump({
        "full_info": full.values.tolist(),
        "no_info": none.values.tolist(),
        "drop_slot": none.drop_slot,
        "bits_for_max_viability": spec.max_entropy,
    }))
    return EXIT_OK


# --- sensory --------------------------------------------------------------------------

def cmd_sensory(args) -> int:
    try:
        s = SenseSpec(args.range, args.resolution, args.receptors, args.rate, args.distance, args.speed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = [
        ("quantization_bits", str(s.bits)),
        ("bitrate_bps", f"{s.bitrate:.6g}"),
        ("bitrate_mbps", f"{s.bitrate / 1e6:.4f}"),
        ("max_delay_s", f"{s.max_delay:.4f}"),
    ]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    if args.reference:
        print()
        print(f"{'reference':<20} {'mbps':>8} {'receptors':>10}  exact")
        for name, r in TOUCH_REFERENCE_RATES_MBPS.items():
            rec = "-" if r["receptors"] is None else str(r["receptors"])
            print(f"{name:<20} {r['mbps']:>8.1f} {rec:>10}  {'yes' if r['exact'] else 'no'}")
    return EXIT_OK


# --- trace ----------------------------------------------------------------------------

def cmd_trace(args) -> int:
    if args.action == "validate":
        tr = _load_trace(args.input)
        print(_dump({
            "slots": len(tr),
            "cells": list(tr.cells),
            "slot_duration": tr.slot_duration,
            "clamped": tr.clamped,
            "events": {e: tr.events.count(e) for e in sorted({e for e in tr.events if e})},
        }))
        return EXIT_OK
    if args.action == "convert":
        tr = _load_trace(args.input)
        write_trace(tr, args.output)
        print(_dump({"slots": len(tr), "clamped": tr.clamped, "out": args.output}))
        return EXIT_OK
    # generate
    mobility = load_config(args.config).mobility if args.config else MobilitySpec()
    if args.seed is not None:
        mobility = MobilitySpec(**{**mobility.__dict__, "seed": args.seed})
    tr = generate_trace(mobility, args.horizon)
    write_trace(tr, args.output)
    print(_dump({"slots": len(tr), "cells": list(tr.cells), "seed": mobility.seed, "out": args.output}))
    return EXIT_OK


# --- parser -----------------------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="effcomm", description="Effective-communication handover toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run the sender/channel/receiver loop")
    s.add_argument("--config", help="JSON run configuration (defaults if omitted)")
    s.add_argument("--seed", type=int, help="override the config seed")
    s.add_argument("--out", help="output directory (report.json plus one CSV per series)")
    s.add_argument("--sweep", help="run seeds=a..b concurrently, one subdirectory per seed")
    s.add_argument("--jobs", type=_positive_int, default=4, help="worker threads for --sweep")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("te", help="transfer entropy from a trace column to the handover series")
    t.add_argument("trace")
    t.add_argument("--source", default="margin",
                   help="cell column to discretize, or 'margin' for best neighbour minus serving")
    t.add_argument("--target", choices=["auto", "events", "decide"], default="auto",
                   help="handover series: ho_success tags, or decisions on the trace (auto: tags if present)")
    t.add_argument("--k", type=_positive_int, default=1)
    t.add_argument("--l", type=_positive_int, default=1)
    t.add_argument("--bins", type=int, default=4)
    t.add_argument("--lo", type=float, default=-140.0)
    t.add_argument("--hi", type=float, default=-44.0)
    t.add_argument("--bias", choices=["none", "miller_madow"], default="none")
    t.add_argument("--algorithm", choices=["A3_RSRP", "A2_A4"], default="A3_RSRP")
    t.add_argument("--hysteresis", type=float, default=3.0)
    t.add_argument("--ttt", type=_positive_int, default=1)
    t.add_argument("--window", type=int, default=10)
    t.add_argument("--step", type=_positive_int, default=1)
    t.add_argument("--out", help="write windowed TE to this CSV")
    t.set_defaults(func=cmd_te)

    e = sub.add_parser("encode", help="encode a trace and report bit totals")
    e.add_argument("trace")
    e.add_argument("--codec", choices=["raw", "delta"], default="raw")
    e.add_argument("--bits", type=_positive_int, default=8, help="bits per raw sample")
    e.add_argument("--step", type=float, default=1.0, help="quantization step in dB")
    e.add_argument("--out", help="cumulative-bits CSV")
    e.add_argument("--bitstream", help="write the packed bitstream here")
    e.add_argument("--verify", action="store_true", help="decode and check exact reconstruction")
    e.set_defaults(func=cmd_encode)

    v = sub.add_parser("viability", help="viability curves of the two-path handover scenario")
    v.add_argument("--horizon", type=int, default=5)
    v.add_argument("--deadline", type=int, default=3)
    v.add_argument("--candidates", type=int, default=4)
    v.add_argument("--penalty", type=float, default=-100.0)
    v.add_argument("--max-bits", type=float, default=None)
    v.add_argument("--points", type=_positive_int, default=41)
    v.add_argument("--out", help="directory for the curve CSVs")
    v.set_defaults(func=cmd_viability)

    n = sub.add_parser("sensory", help="bitrate and delay budget for touch sensing")
    n.add_argument("--range", type=float, default=40.0, help="measured span (e.g. degrees C)")
    n.add_argument("--resolution", type=float, default=0.02)
    n.add_argument("--receptors", type=float, default=48000)
    n.add_argument("--rate", type=float, default=50.0, help="samples per second")
    n.add_argument("--distance", type=float, default=2.0, help="metres of nerve")
    n.add_argument("--speed", type=float, default=30.0, help="nerve conduction speed, m/s")
    n.add_argument("--reference", action="store_true", help="also print the reference rate table")
    n.set_defaults(func=cmd_sensory)

    tr = sub.add_parser("trace", help="validate, convert or generate trace CSVs")
    tsub = tr.add_subparsers(dest="action", required=True, parser_class=_Parser)
    tv = tsub.add_parser("validate")
    tv.add_argument("input")
    tc = tsub.add_parser("convert", help="re-write a trace in canonical form (clamped, LF)")
    tc.add_argument("input")
    tc.add_argument("output")
    tg = tsub.add_parser("generate", help="write a synthetic trace")
    tg.add_argument("output")
    tg.add_argument("--config", help="take the scenario section from this run config")
    tg.add_argument("--seed", type=int)
    tg.add_argument("--horizon", type=_positive_int, default=60)
    tr.set_defaults(func=cmd_trace)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"effcomm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, TraceParseError, DecodeError) as exc:
        print(f"effcomm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        # remaining ValueErrors come from invalid flag values
        print(f"effcomm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
