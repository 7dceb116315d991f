"""RMSE of every method against RSSI noise std, with a Mann-Kendall trend per method.

    python scripts/noise_sweep.py [--trials 20] [--levels 1,2,3,4] [--out out/noise_sweep.csv]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from cdoa_loc.harness.config import resolve_config
from cdoa_loc.harness.experiment import run_experiment
from cdoa_loc.harness.methods import DISPLAY_NAMES
from cdoa_loc.harness.stats import mann_kendall

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "table2_sim.json"))
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--levels", default="1,2,3,4")
    ap.add_argument("--out", default="out/noise_sweep.csv")
    args = ap.parse_args()

    levels = [float(v) for v in args.levels.split(",")]
    cfg = resolve_config(args.config, [f"trials={args.trials}", f"channel.noise_levels={levels}"])
    results = run_experiment(cfg)

    table: dict[tuple[str, float], list[float]] = {}
    for r in results:
        table.setdefault((r.method, r.tags["noise_std"]), []).append(r.rmse)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "noise_std_db", "rmse_mean_m", "rmse_std_m", "trials"])
        for (m, noise), v in sorted(table.items()):
            w.writerow([m, noise, f"{np.mean(v):.6f}", f"{np.std(v):.6f}", len(v)])

    print("method          " + "".join(f"{lv:>8.1f}" for lv in levels) + "   MK tau   p")
    for m in cfg.methods():
        means = [float(np.mean(table[(m, lv)])) for lv in levels]
        # trend over every trial, ordered by noise level
        series = np.concatenate([table[(m, lv)] for lv in levels])
        trend = mann_kendall(series) if len(series) >= 3 else None
        tail = f"  {trend.tau:+.3f}  {trend.p_value:.1e}" if trend else ""
        print(f"{DISPLAY_NAMES.get(m, m):<16}" + "".join(f"{v:8.3f}" for v in means) + tail)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
