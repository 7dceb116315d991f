"""CDOA-PF RMSE against particle count, with and without odometry.

    python scripts/particle_ablation.py [--counts 50,100,200,500] [--trials 20] [--out out/ablation.csv]
"""

import argparse
from pathlib import Path

import numpy as np

from cdoa_loc.harness.ablation import ablate_particles
from cdoa_loc.harness.config import resolve_config
from cdoa_loc.harness.stats import decreasing_fit, paired_bootstrap

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "table2_sim.json"))
    ap.add_argument("--counts", default="50,100,200,500")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--noise", type=float, default=2.0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out/ablation.csv")
    args = ap.parse_args()

    cfg = resolve_config(args.config, [f"trials={args.trials}", f"channel.noise_levels=[{args.noise}]"])
    counts = [int(c) for c in args.counts.split(",")]
    curves = ablate_particles(counts, cfg, jobs=args.jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    curves.to_csv(out)

    rng = np.random.default_rng(0)
    print(f"{'n':>6} {'odometry':>10} {'no odometry':>12}   gap 95% CI")
    for k, n in enumerate(counts):
        ci = paired_bootstrap(curves.with_odometry[k], curves.without_odometry[k], rng)
        print(f"{n:>6} {curves.with_odometry[k].mean():10.3f} {curves.without_odometry[k].mean():12.3f}"
              f"   [{ci.low:.3f}, {ci.high:.3f}]")
    if len(counts) > 1:
        fit = decreasing_fit(curves.mean_curve(True))
        print(f"isotonic residual (odometry curve): {100 * fit.relative_residual:.1f}% of range")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
