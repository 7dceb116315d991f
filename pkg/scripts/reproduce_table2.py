"""Run the 6x6 m simulation protocol and print the RMSE / TPI table.

    python scripts/reproduce_table2.py [--config configs/table2_sim.json] [--out out/table2] [--jobs N]
"""

import argparse
import time
from pathlib import Path

from cdoa_loc.harness.config import resolve_config
from cdoa_loc.harness.experiment import run_experiment
from cdoa_loc.harness.metrics import compute_metrics, results_csv, split_rmse, summary_csv, summary_markdown

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "table2_sim.json"))
    ap.add_argument("--out", default="out/table2")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = resolve_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    results = run_experiment(cfg, jobs=args.jobs)
    elapsed = time.perf_counter() - t0

    rows = compute_metrics(results)
    results_csv(results, out / "results.csv")
    summary_csv(rows, out / "summary.csv")
    md = summary_markdown(rows)
    (out / "summary.md").write_text(md, encoding="utf-8")
    print(md)

    layout = cfg.layout.build(cfg.workspace.build())
    print("RMSE inside / outside the node bounding box:")
    for row in rows:
        pairs = [split_rmse(r, layout) for r in results if r.method == row.method]
        ins = [p[0] for p in pairs if p[0] == p[0]]
        outs = [p[1] for p in pairs if p[1] == p[1]]
        fmt = lambda v: f"{sum(v) / len(v):.3f}" if v else "n/a"
        print(f"  {row.label:<14} inside {fmt(ins)}  outside {fmt(outs)}")
    print(f"{len(results)} method-trials in {elapsed:.0f} s; tables in {out}/")


if __name__ == "__main__":
    main()
