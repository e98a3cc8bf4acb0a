"""Sweep bot-cohort sizes and measure how often storms ignite.

For each cohort size the same seed list is replayed, so rows differ only
in the amplification push (the seed tree isolates bots from the organic
world).  Prints ignition rate, mean fire point among ignited runs, and
mean organic volume.

Usage: python3 scripts/calibrate_ignition.py [--seeds N] [--sizes 0 25 ...]
"""

import argparse
from dataclasses import replace

from firesim.scenario import build_from_seed, default_config


def sweep(sizes: list[int], seeds: int, ticks: int) -> list[dict]:
    rows = []
    for bots in sizes:
        cfg = default_config()
        cfg = replace(cfg, attack=replace(cfg.attack, bots=bots, enabled=bots > 0),
                      run=replace(cfg.run, ticks=ticks))
        fire_points, organic = [], []
        for seed in range(seeds):
            sim = build_from_seed(cfg, seed)
            sim.run(ticks)
            if sim.fire_point is not None:
                fire_points.append(sim.fire_point)
            organic.append(sum(sim.history.organic_posts))
        rows.append({
            "bots": bots,
            "ignited": len(fire_points),
            "rate": len(fire_points) / seeds,
            "mean_fire_point": (sum(fire_points) / len(fire_points)
                                if fire_points else None),
            "mean_organic": sum(organic) / seeds,
        })
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=30)
    parser.add_argument("--ticks", type=int, default=168)
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[0, 10, 20, 50, 100, 200])
    args = parser.parse_args()

    rows = sweep(args.sizes, args.seeds, args.ticks)
    print(f"{'bots':>6} {'ignited':>8} {'rate':>6} {'mean fire point':>16} "
          f"{'mean organic':>13}")
    for r in rows:
        fp = f"{r['mean_fire_point']:.1f}" if r["mean_fire_point"] is not None else "-"
        print(f"{r['bots']:>6} {r['ignited']:>5}/{args.seeds:<2} {r['rate']:>6.2f} "
              f"{fp:>16} {r['mean_organic']:>13.1f}")


if __name__ == "__main__":
    main()
