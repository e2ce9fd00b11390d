"""Command-line entry point: discover, encode, bins, bench, export.

Exit codes: 0 success, 2 invalid input or flags, 3 singular covariance
during discovery, 1 anything else.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from pathlib import Path

from .data import MissingPolicy, load_csv, load_schema
from .discretize import bins_to_json, fit_bins
from .encoding import EncodingStrategy, encode
from .errors import DualCausalError, SingularCovariance, SingularityAbort
from .graph import from_json, to_dot, to_json
from .pipeline import EncodingMode, PipelineConfig, manifest, prepare_table, run_pipeline
from .synth import run_benchmark

log = logging.getLogger("dualcausal")

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_SINGULAR = 0, 1, 2, 3

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on its own; raise instead so main() owns the exit
    def error(self, message):
        raise UsageError(message)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text}")
    return v


def _open_unit(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return v


def _unit(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {text}")
    return v


def _add_data_flags(p, outcome=True):
    p.add_argument("--data", required=True, type=Path, help="CSV file with a header row")
    p.add_argument("--schema", required=True, type=Path, help="JSON column schema")
    if outcome:
        p.add_argument("--outcome", help="outcome column (defaults to the schema's outcome)")
    p.add_argument("--missing", choices=["drop", "impute"], default="drop")
    p.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dualcausal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    threads = dict(type=_positive_int, default=os.cpu_count() or 1, help="worker threads (1 = serial)")

    p = sub.add_parser("discover", help="dual-encoding FCI, merge and weighting")
    _add_data_flags(p)
    p.add_argument("--alpha", type=_open_unit, default=0.01)
    p.add_argument("--encoding", choices=[m.value for m in EncodingMode], default="dual")
    p.add_argument("--no-discretize", action="store_true")
    p.add_argument("--max-cond-size", type=_nonneg_int)
    p.add_argument("--seed", type=int, default=0, help="accepted for symmetry; discovery is deterministic")
    p.add_argument("--threads", **threads)

    p = sub.add_parser("encode", help="write the one-hot encoded matrix")
    _add_data_flags(p)
    p.add_argument("--encoding", choices=[s.value for s in EncodingStrategy], default="drop-first")
    p.add_argument("--no-discretize", action="store_true")

    p = sub.add_parser("bins", help="fit MDLP bins and write them as JSON")
    _add_data_flags(p)

    p = sub.add_parser("bench", help="synthetic linear-Gaussian benchmark")
    p.add_argument("--nodes", type=_positive_int, default=6)
    p.add_argument("--edge-prob", type=_unit, default=0.3)
    p.add_argument("--rows", type=_positive_int, default=5000)
    p.add_argument("--instances", type=_positive_int, default=20)
    p.add_argument("--alpha", type=_open_unit, default=0.01)
    p.add_argument("--max-cond-size", type=_nonneg_int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", action="store_true", help="use the d-separation oracle instead of data")
    p.add_argument("--out", type=Path)
    p.add_argument("--threads", **threads)

    p = sub.add_parser("export", help="convert a graph JSON document to DOT")
    p.add_argument("--graph", required=True, type=Path)
    p.add_argument("--name", default="G")
    p.add_argument("--out", type=Path, help="DOT file (default: stdout)")
    return parser


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load(args):
    schema = load_schema(args.schema)
    table = load_csv(args.data, schema, _missing(args))
    outcome = getattr(args, "outcome", None) or table.outcome.name
    if outcome != table.outcome.name:
        raise DualCausalError(f"--outcome {outcome!r} does not match the schema outcome {table.outcome.name!r}")
    return table, outcome


def _missing(args) -> MissingPolicy:
    return MissingPolicy.DROP_ROWS if args.missing == "drop" else MissingPolicy.IMPUTE_CENTRAL


def cmd_discover(args) -> int:
    table, outcome = _load(args)
    cfg = PipelineConfig(
        outcome=outcome,
        alpha=args.alpha,
        encoding_mode=EncodingMode(args.encoding),
        discretize=not args.no_discretize,
        max_cond_size=args.max_cond_size,
        missing_policy=_missing(args),
        threads=args.threads,
    )
    result = run_pipeline(table, cfg)
    out = args.out or Path("out")
    _write(out / "unified.dot", to_dot(result.unified, "unified"))
    _write(out / "unified.json", to_json(result.unified))
    for name, pag in sorted(result.pags.items()):
        _write(out / f"pag_{name}.json", to_json(pag))
        _write(out / f"pag_{name}.dot", to_dot(pag, name))
    _write(out / "merge_report.json", _dump(result.report.to_dict()))
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    _write(out / "manifest.json", _dump(manifest(result, stamp)))
    for w in result.report.warnings:
        log.warning(w)
    c = result.counts()
    print(f"{c['nodes']} nodes, {c['edges']} edges ({c['supportive_edges']} supportive, "
          f"{c['opposing_edges']} opposing), {c['orientation_conflicts']} orientation conflicts -> {out}")
    return EXIT_OK


def cmd_encode(args) -> int:
    table, outcome = _load(args)
    cfg = PipelineConfig(outcome=outcome, discretize=not args.no_discretize, missing_policy=_missing(args))
    prepared, _ = prepare_table(table, cfg)
    m = encode(prepared, EncodingStrategy(args.encoding))
    out = args.out or Path("out")
    rows = [",".join(f'"{n}"' for n in m.names)]
    rows += [",".join(format(v, ".17g") for v in row) for row in m.data]
    _write(out / f"encoded_{m.strategy.value}.csv", "\n".join(rows) + "\n")
    _write(out / f"columns_{m.strategy.value}.json",
           _dump({"columns": [p.to_dict() for p in m.provenance], "empty_categories": list(m.empty_categories)}))
    for e in m.empty_categories:
        log.warning("dropped empty category %s", e)
    print(f"{m.n_rows} rows x {m.n_cols} columns -> {out}")
    return EXIT_OK


def cmd_bins(args) -> int:
    table, _ = _load(args)
    specs = fit_bins(table)
    text = bins_to_json(specs)
    if args.out:
        _write(args.out / "bins.json", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    report = run_benchmark(
        n_nodes=args.nodes, edge_prob=args.edge_prob, n_rows=args.rows, instances=args.instances,
        seed=args.seed, alpha=args.alpha, oracle=args.oracle, max_cond_size=args.max_cond_size,
        threads=args.threads,
    )
    if args.out:
        _write(args.out / "bench.json", report.to_json())
        _write(args.out / "bench.csv", report.to_csv())
    print(report.summary_table())
    return EXIT_OK


def cmd_export(args) -> int:
    g = from_json(args.graph.read_text(encoding="utf-8"))
    text = to_dot(g, args.name)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"discover": cmd_discover, "encode": cmd_encode, "bins": cmd_bins, "bench": cmd_bench, "export": cmd_export}


def _setup_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("CW_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"dualcausal: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for name in ("data", "schema", "graph"):
        path = getattr(args, name, None)
        if path is not None and not path.is_file():
            print(f"dualcausal: --{name}: no such file: {path}", file=sys.stderr)
            return EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (SingularityAbort, SingularCovariance) as exc:
        print(f"dualcausal: {exc}", file=sys.stderr)
        print("hint: the drop-first and drop-last encodings avoid the full one-hot rank deficiency",
              file=sys.stderr)
        return EXIT_SINGULAR
    except (DualCausalError, ValueError, OSError) as exc:
        print(f"dualcausal: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("unhandled error", exc_info=True)
        print(f"dualcausal: internal error: {exc!r}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
