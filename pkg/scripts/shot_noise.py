"""RMS error of sampled loss estimates against the exact decomposed loss as the shot count grows."""
import argparse

import numpy as np

from poisson_vqa import estimator, grid


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--shots", type=int, nargs="+", default=[100, 1000, 10000, 100000])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    spec = grid.make_spec(a.m)
    rng = np.random.default_rng(a.seed)
    psi = rng.normal(size=spec.size) + 1j * rng.normal(size=spec.size)
    psi /= np.linalg.norm(psi)
    exact = float(estimator.LossEvaluator(spec, estimator.EXACT)(psi))
    print(f"# exact loss {exact:.17g}")
    print("shots,rms_error,rms_times_sqrt_shots")
    for shots in a.shots:
        ev = estimator.LossEvaluator(spec, estimator.SHOTS(shots, a.seed))
        errs = np.array([ev(psi) - exact for _ in range(a.trials)])
        rms = float(np.sqrt(np.mean(errs ** 2)))
        print(f"{shots},{rms:.6g},{rms * np.sqrt(shots):.4g}")


if __name__ == "__main__":
    main()
