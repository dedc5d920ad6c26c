"""Command-line front end: ``torsionlab <experiment> [--config path] ...``.

Every subcommand runs one experiment kind over the sweep of its config and
writes one CSV row per sweep point (one per property for ``verify``). Without
``--config`` the experiment's built-in default document is used; ``--set``
edits any field of the document before validation.

Exit codes: 0 all rows pass, 1 some row failed its assertions, 2 config
error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import EXPERIMENTS, SUITES, ConfigError, apply_override, default_document, load_config, parse_config
from .experiments import run_point, sweep_points
from .fem import ConvergenceError

log = logging.getLogger("torsionlab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    name = os.environ.get("TORSIONLAB_LOG", "error").lower()
    logging.basicConfig(level=LOG_LEVELS.get(name, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")
    if name not in LOG_LEVELS:
        log.error("TORSIONLAB_LOG=%s not in {error,info,debug}; using error", name)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torsionlab", description="Torsional rigidity experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (default: built-in document)")
    common.add_argument("--out", help="CSV output path (default: config 'output', else stdout)")
    common.add_argument("--jobs", type=_positive, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("--seed", type=_u64, help="override the config seed (PCG64)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, e.g. params.delta=2 or sweep.r0=[0.5,1]")
    common.add_argument("--timing", action="store_true",
                        help="add a wall_time column (the CSV is then no longer byte-reproducible)")
    sub.add_parser("run", parents=[common], help="run the experiment named in --config")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, parents=[common], help=f"{name} experiment")
        if name == "verify":
            p.add_argument("--select", help=f"comma-separated suites from {','.join(SUITES)}")
    return parser


def resolve_config(args):
    if args.command == "run":
        if not args.config:
            raise ConfigError("run needs --config")
        doc = load_config(args.config)
    elif args.config:
        doc = load_config(args.config)
        if doc.get("experiment") != args.command:
            raise ConfigError(f"config experiment {doc.get('experiment')!r} does not match subcommand {args.command!r}")
    else:
        doc = default_document(args.command)
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    for assignment in args.set:
        apply_override(doc, assignment)
    if args.seed is not None:
        doc["seed"] = args.seed
    if getattr(args, "select", None) is not None:
        doc.setdefault("params", {})["select"] = [s for s in args.select.split(",") if s]
    return parse_config(doc)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def render_csv(rows: list[dict], digest: str, times: list[float] | None = None) -> str:
    columns: list[str] = []
    for row in rows:
        columns += [k for k in row if k not in columns and k != "ok"]
    header = ["id", *columns, "ok", "config_hash"] + (["wall_time"] if times is not None else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i, row in enumerate(rows):
        line = [i, *(row.get(c) for c in columns), row["ok"], digest]
        if times is not None:
            line.append(times[i])
        w.writerow([_format(v) for v in line])
    return buf.getvalue()


def execute(cfg, jobs: int = 1):
    """Rows and per-row wall times, in sweep order whatever the completion order."""
    points = sweep_points(cfg)
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(points))) as pool:
            results = list(pool.map(run_point, [cfg] * len(points), points))
    else:
        results = [run_point(cfg, p) for p in points]
    rows, times = [], []
    for point_rows, wall in results:
        rows += point_rows
        times += [wall / len(point_rows)] * len(point_rows)
    return rows, times


def _summary(i: int, row: dict, wall: float) -> str:
    keys = [k for k in row if k != "ok"][:6]
    shown = ", ".join(f"{k}={_format(row[k])}" for k in keys)
    return f"row {i}: {'ok' if row['ok'] else 'FAIL'} ({shown}) [{wall:.2f}s]"


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        log.info("config %s (%s)", cfg.digest(), cfg.experiment)
        rows, times = execute(cfg, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, TypeError) as exc:
        # parameters that pass the schema but describe an impossible experiment
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render_csv(rows, cfg.digest(), times if args.timing else None)
    target = args.out or cfg.output
    if target:
        with open(target, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for i, (row, wall) in enumerate(zip(rows, times)):
        print(_summary(i, row, wall), file=sys.stderr)
    failed = [i for i, row in enumerate(rows) if not row["ok"]]
    if failed:
        print(f"failed rows: {', '.join(map(str, failed))}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
