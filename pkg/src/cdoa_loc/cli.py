"""Command-line entry point: simulate, dataset, ablate, coverage, report.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .core import LocalizationError
from .coverage import CoverageQuery
from .harness.ablation import ablate_particles
from .harness.config import PRECEDENCE, ConfigError, ExperimentConfig, resolve_config
from .harness.dataset import DatasetError, export_snapshots, ingest_dataset
from .harness.experiment import run_experiment
from .harness.methods import MethodContext, Observation, method_names
from .harness.metrics import (compute_metrics, load_results_csv, results_csv, summary_csv,
                              summary_markdown)
from .harness.stats import decreasing_fit
from .harness.trajectory import generate_trajectory
from .harness.trial import run_observations, simulate_observations

log = logging.getLogger("cdoa_loc")
SEED_ENV = "CDOA_LOC_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, out_default: str | None = "out") -> None:
    p.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. hyperparams.sigma=0.2 (repeatable)")
    p.add_argument("--method", metavar="NAME|all", help=f"one of {', '.join(method_names())} or all")
    p.add_argument("--seed", type=int, help=f"base seed (fallback: ${SEED_ENV})")
    p.add_argument("--trials", type=int)
    p.add_argument("--noise-dbm", type=float, help="single noise std in dB, replaces the sweep")
    p.add_argument("--particles", type=int, help="CDOA-PF particle count")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    if out_default is not None:
        p.add_argument("--out", metavar="DIR", default=out_default)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdoa-loc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run the simulation protocol")
    _common(p)

    p = sub.add_parser("dataset", help="evaluate methods on a canonical RSSI CSV, or export a synthetic one")
    _common(p)
    p.add_argument("--data", metavar="CSV", help="input CSV (timestamp,node_id,rssi_dbm,gt_x,gt_y)")
    p.add_argument("--export", metavar="CSV", help="write one simulated trajectory walk as CSV instead")

    p = sub.add_parser("ablate", help="CDOA-PF particle-count sweep with and without odometry")
    _common(p)
    p.add_argument("--counts", default="50,100,200,500", help="comma-separated particle counts")

    p = sub.add_parser("coverage", help="coverage area and node-count formulas")
    p.add_argument("--range", dest="sensing_range", type=float, required=True, help="sensing range r in metres")
    p.add_argument("--aspect", type=float, default=1.0, help="side ratio k")
    p.add_argument("--units", type=int, default=1, help="number of unit areas")

    p = sub.add_parser("report", help="rebuild summary tables from a results.csv")
    p.add_argument("--results", metavar="CSV", required=True)
    p.add_argument("--out", metavar="DIR")
    return parser


def _flags(args) -> dict:
    seed = args.seed
    if seed is None and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"${SEED_ENV} must be an integer, got {os.environ[SEED_ENV]!r}") from None
    flags = {"seed": seed, "trials": args.trials, "hyperparams.n_particles": args.particles}
    if args.method is not None:
        flags["method"] = args.method
    if args.noise_dbm is not None:
        flags["channel.noise_levels"] = [args.noise_dbm]
    return flags


def _config(args) -> ExperimentConfig:
    cfg = resolve_config(args.config, args.overrides, _flags(args))
    cfg.methods()  # validate names early
    print(f"precedence: {PRECEDENCE} (${SEED_ENV} stands in for an absent --seed)")
    print("effective config:")
    print(cfg.dumps())
    return cfg


def _outdir(args, cfg: ExperimentConfig) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.dumps() + "\n", encoding="utf-8")
    return out


def _write_tables(results, out: Path) -> str:
    rows = compute_metrics(results)
    summary_csv(rows, out / "summary.csv")
    md = summary_markdown(rows)
    (out / "summary.md").write_text(md, encoding="utf-8")
    return md


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _outdir(args, cfg)
    results = run_experiment(cfg, jobs=args.jobs)
    results_csv(results, out / "results.csv")
    print(_write_tables(results, out))
    print(f"wrote {out / 'results.csv'}, {out / 'summary.csv'}, {out / 'summary.md'}")
    return 0


def cmd_dataset(args) -> int:
    cfg = _config(args)
    out = _outdir(args, cfg)
    ws = cfg.workspace.build()
    layout = cfg.layout.build(ws)
    model = cfg.channel.build(cfg.channel.noise_levels[0])
    if args.export:
        kind = cfg.trajectory.kinds[0]
        traj = generate_trajectory(ws, kind, cfg.trajectory.step, cfg.trajectory.lane_spacing)
        obs = simulate_observations(layout, model, traj, cfg.hyperparams, cfg.seed)
        n = export_snapshots(args.export, [o.snapshot for o in obs], traj.waypoints)
        print(f"exported {len(obs)} snapshots ({n} rows) to {args.export}")
        return 0
    if not args.data:
        raise UsageError("dataset needs --data CSV or --export CSV")
    data = ingest_dataset(args.data, layout)
    for d in data.diagnostics:
        print(d, file=sys.stderr)
    if any(t is None for t in data.truths):
        raise DatasetError("evaluation needs gt_x/gt_y on every snapshot")
    obs, prev = [], None
    for snap, truth in data:
        odo = None if prev is None else (truth.x - prev.x, truth.y - prev.y)
        prev = truth
        obs.append(Observation(snap.timestamp, snap.values[None, :], 1, tuple(snap.node_ids), odo))
    ctx = MethodContext(layout, model, ws)
    results = []
    for m in cfg.methods():
        r = run_observations(m, ctx, data.truths, obs, cfg.hyperparams, cfg.seed)
        r.tags.update(trajectory="dataset", noise_std="")
        results.append(r)
    results_csv(results, out / "results.csv")
    print(f"{data.rows_in} rows: {data.rows_used} used, {data.rows_diagnosed} diagnosed; {len(data)} snapshots")
    print(_write_tables(results, out))
    return 0


def cmd_ablate(args) -> int:
    cfg = _config(args)
    out = _outdir(args, cfg)
    try:
        counts = [int(c) for c in args.counts.split(",") if c.strip()]
    except ValueError:
        raise UsageError(f"--counts must be comma-separated integers, got {args.counts!r}") from None
    curves = ablate_particles(counts, cfg, jobs=args.jobs)
    curves.to_csv(out / "ablation.csv")
    for odo in (True, False):
        curve = curves.mean_curve(odo)
        label = "with odometry" if odo else "without odometry"
        print(f"{label}: " + ", ".join(f"n={n}: {v:.3f} m" for n, v in zip(counts, curve)))
        if len(counts) > 1:
            print(f"  isotonic residual / range = {decreasing_fit(curve).relative_residual:.3f}")
    print(f"wrote {out / 'ablation.csv'}")
    return 0


def cmd_coverage(args) -> int:
    q = CoverageQuery(args.sensing_range, args.aspect, args.units)
    print(q.summary())
    if args.aspect != 1.0 or args.units != 1:
        print(f"unit area at k={args.aspect:g}: {q.unit_area():.4g} m², total for {args.units}: {q.total_area():.4g} m²")
    return 0


def cmd_report(args) -> int:
    results = load_results_csv(args.results)
    out = Path(args.out) if args.out else Path(args.results).parent
    out.mkdir(parents=True, exist_ok=True)
    print(_write_tables(results, out))
    return 0


COMMANDS = {"simulate": cmd_simulate, "dataset": cmd_dataset, "ablate": cmd_ablate,
            "coverage": cmd_coverage, "report": cmd_report}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except (OSError, ConfigError, DatasetError, LocalizationError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
