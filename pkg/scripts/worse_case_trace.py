"""Count optimizer steps that lower the loss while lowering the solution fidelity."""
import argparse

import numpy as np

from poisson_vqa import estimator, grid, oracle, vqa


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    spec = grid.make_spec(a.m)
    ansatz = vqa.AnsatzConfig(spec.N, a.depth)
    report = vqa.optimize(spec, ansatz, vqa.OptimizerConfig(restarts=a.restarts, max_iter=a.iterations,
                                                            seed=a.seed), estimator.DENSE)
    print("restart,steps,worse_case_steps,final_loss,final_fidelity")
    for r in report.restarts:
        steps = zip(r.trajectory, r.trajectory[1:])
        flags = [cur[1] < prev[1] and cur[2] < prev[2] for prev, cur in steps]
        print(f"{r.index},{len(flags)},{int(np.sum(flags))},{r.loss:.6e},{r.fidelity:.6f}")
    h = grid.build_hamiltonian(grid.build_matrix(spec), grid.build_rhs(spec)[1])
    psi0 = vqa.ansatz_states(np.zeros(ansatz.n_params), spec.N, a.depth)
    best = vqa.ansatz_states(report.best_params, spec.N, a.depth)
    d = oracle.worse_case_probe(h, psi0, best)
    print(f"# uniform start -> best: loss {d.loss_before:.4g} -> {d.loss_after:.4g}, "
          f"fidelity {d.fidelity_before:.4f} -> {d.fidelity_after:.4f}")


if __name__ == "__main__":
    main()
