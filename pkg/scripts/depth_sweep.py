"""Best loss and fidelity over ansatz depth for a range of grid sizes.

    python scripts/depth_sweep.py --m 2 3 4 --depths 1 2 3 4 --out sweep.csv
"""
import argparse
import csv
import sys
import time
from dataclasses import dataclass, field

from poisson_vqa import estimator, grid, vqa


@dataclass
class SweepConfig:
    sizes: list[int] = field(default_factory=lambda: [2, 3, 4])
    depths: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    mode: str = "exact-ht"
    optimizer: vqa.OptimizerConfig = field(default_factory=vqa.OptimizerConfig)
    warm_start: bool = True


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m", type=int, nargs="+", default=[2, 3, 4])
    p.add_argument("--depths", type=int, nargs="+", default=[1, 2, 3, 4])
    p.add_argument("--mode", default="exact-ht")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    a = p.parse_args()
    cfg = SweepConfig(a.m, a.depths, a.mode,
                      vqa.OptimizerConfig(restarts=a.restarts, max_iter=a.iterations, seed=a.seed,
                                          workers=a.workers))
    mode = estimator.parse_mode(cfg.mode, a.seed)
    out = open(a.out, "w", newline="") if a.out else sys.stdout
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["m", "depth", "best_loss", "best_fidelity", "seconds"])
    for m in cfg.sizes:
        t0 = time.perf_counter()
        for row in vqa.depth_sweep(grid.make_spec(m), cfg.depths, cfg.optimizer, mode,
                                   warm_start=cfg.warm_start):
            writer.writerow([m, row.depth, f"{row.report.best_loss:.17g}",
                             f"{row.report.best_fidelity:.17g}", f"{row.report.wall_time:.2f}"])
            out.flush()
        print(f"m={m} done in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    if a.out:
        out.close()


if __name__ == "__main__":
    main()
