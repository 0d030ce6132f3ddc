"""Command-line entry point: ingest, synth, make-dataset, train, evaluate,
simulate, serve-labeler.

Every command is a thin shell over the library; all inputs and outputs are
explicit paths, every random choice is seeded from the arguments, and a
failure prints a single machine-parsable line to stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date
from pathlib import Path

from .labels import ContradictionPolicy, ResolveMode, read_label_file, write_label_file
from .marketdata import (
    CsvFormatError,
    load_series_dir,
    read_ohlc_csv,
    write_ohlc_csv,
)
from .models import (
    ModelKind,
    SliceSpec,
    make_dataset,
    evaluate_model,
    read_train_settings,
    train_model,
)
from .nn import load_checkpoint
from .raster import RenderStyle
from .simulate import (
    ModelBundle,
    TradePolicy,
    baseline_buy_and_hold,
    baseline_expert,
    run_simulation,
)
from .synthetic import SyntheticConfig, make_universe

__all__ = ["main"]


def _parse_date(text: str) -> date:
    return date.fromisoformat(text)


def _policy_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--policy",
        choices=[m.value for m in ResolveMode],
        default=ResolveMode.KEEP_ALL.value,
        help="how to reconcile multi-expert labels",
    )
    p.add_argument(
        "--snap-tolerance",
        type=int,
        default=0,
        metavar="DAYS",
        help="snap cross-expert boundaries within this many bars",
    )


def _load_labels(labels_dir: Path) -> list:
    windows = []
    for path in sorted(labels_dir.glob("*.json")):
        windows.extend(read_label_file(path))
    return windows


def cmd_ingest(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for raw in args.paths:
        path = Path(raw)
        try:
            series = read_ohlc_csv(path)
        except (CsvFormatError, OSError, ValueError) as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            return 1
        write_ohlc_csv(series, out / f"{series.stock_id}.csv")
        count += 1
    print(f"ingested {count} series into {out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    series_dir = out / "series"
    labels_dir = out / "labels"
    series_dir.mkdir(parents=True, exist_ok=True)
    labels_dir.mkdir(parents=True, exist_ok=True)
    cfg = SyntheticConfig(n_bars=args.bars)
    universe = make_universe(args.stocks, args.seed, cfg)
    for series, windows, _ in universe:
        write_ohlc_csv(series, series_dir / f"{series.stock_id}.csv")
        write_label_file(labels_dir / f"{series.stock_id}__oracle.json", windows)
    print(f"wrote {len(universe)} synthetic stocks under {out}")
    return 0


def cmd_make_dataset(args: argparse.Namespace) -> int:
    series = load_series_dir(args.series_dir)
    windows = _load_labels(Path(args.labels_dir))
    by_stock: dict[str, list] = {}
    for w in windows:
        by_stock.setdefault(w.stock_id, []).append(w)
    data = [(s, by_stock.get(sid, [])) for sid, s in sorted(series.items())]
    data = [(s, ws) for s, ws in data if ws]
    manifest = make_dataset(
        ModelKind(args.kind),
        data,
        args.out,
        slice_spec=SliceSpec(args.n_days, args.skip),
        policy=ContradictionPolicy(ResolveMode(args.policy), args.snap_tolerance),
        style=RenderStyle(dpi=args.dpi),
        split_date=args.split_date,
        side=args.side,
        normalize=args.normalize,
    )
    print(f"wrote {manifest.count} records to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    settings = read_train_settings(args.settings)
    if args.kind is not None and ModelKind(args.kind) is not settings.kind:
        print(
            f"error: --kind {args.kind} conflicts with settings kind {settings.kind.value}",
            file=sys.stderr,
        )
        return 1
    _, history = train_model(
        settings.kind, args.dataset, settings.train_config(), args.out
    )
    tail = f", final loss {history[-1]:.6f}" if history else ""
    print(f"trained {settings.kind.value}: {len(history)} iterations{tail}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    net = load_checkpoint(args.checkpoint)
    report = evaluate_model(ModelKind(args.kind), net, args.dataset)
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    stocks = sorted(load_series_dir(args.series_dir).values(), key=lambda s: s.stock_id)
    labels = _load_labels(Path(args.labels_dir)) if args.labels_dir else None
    bundle = ModelBundle(
        detector=load_checkpoint(args.detector),
        locator=load_checkpoint(args.locator),
        classifier=load_checkpoint(args.classifier),
        style=RenderStyle(dpi=args.dpi),
        normalize=args.normalize,
    )
    spec = SliceSpec(args.n_days, args.skip)
    policy = TradePolicy(allow_short=not args.no_short, flat_ignored=args.ignore_flat)
    date_range = (args.from_date, args.to_date)
    report, _ = run_simulation(stocks, bundle, spec, policy, date_range, labels)
    doc: dict = {
        "policy": {"allow_short": policy.allow_short, "flat_ignored": policy.flat_ignored},
        "spec": {"n_days": spec.n_days, "skip": spec.skip},
        "model": report.to_json(),
    }
    if args.baselines:
        doc["buy_and_hold"] = baseline_buy_and_hold(stocks, date_range).to_json()
        if labels:
            doc["expert"] = {
                expert: rep.to_json()
                for expert, rep in baseline_expert(
                    stocks, labels, policy, date_range
                ).items()
            }
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_serve_labeler(args: argparse.Namespace) -> int:
    from .server import serve

    serve(args.series_dir, args.labels_dir, args.port, args.static_dir, args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trendlab",
        description="Trend-change detection on candlestick images: data, training, simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize OHLC csv files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic labeled universe")
    p.add_argument("--out", required=True)
    p.add_argument("--stocks", type=int, default=20)
    p.add_argument("--bars", type=int, default=2500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("make-dataset", help="render labeled slices into a CTF file")
    p.add_argument("--kind", required=True, choices=[k.value for k in ModelKind])
    p.add_argument("--series-dir", required=True)
    p.add_argument("--labels-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-days", type=int, default=25)
    p.add_argument("--skip", type=int, default=5)
    p.add_argument("--dpi", type=int, default=10)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--split-date", type=_parse_date, default=None)
    p.add_argument("--side", choices=["train", "test"], default=None)
    _policy_args(p)
    p.set_defaults(fn=cmd_make_dataset)

    p = sub.add_parser("train", help="train a model from a settings file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--settings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=[k.value for k in ModelKind], default=None)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="metric report for a checkpoint on a dataset")
    p.add_argument("--kind", required=True, choices=[k.value for k in ModelKind])
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("simulate", help="run the trading simulation")
    p.add_argument("--detector", required=True)
    p.add_argument("--locator", required=True)
    p.add_argument("--classifier", required=True)
    p.add_argument("--series-dir", required=True)
    p.add_argument("--labels-dir", default=None)
    p.add_argument("--n-days", type=int, default=25)
    p.add_argument("--skip", type=int, default=5)
    p.add_argument("--dpi", type=int, default=10)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--no-short", action="store_true")
    p.add_argument("--ignore-flat", action="store_true")
    p.add_argument("--from", dest="from_date", type=_parse_date, default=None)
    p.add_argument("--to", dest="to_date", type=_parse_date, default=None)
    p.add_argument("--baselines", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("serve-labeler", help="serve the labeling UI and its API")
    p.add_argument("--series-dir", required=True)
    p.add_argument("--labels-dir", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", default=None)
    p.set_defaults(fn=cmd_serve_labeler)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
