"""Ratio of the largest to the smallest nonzero eigenvalue of the loss Hamiltonian versus m.

Shows why gradient descent slows down on fine grids: the ratio grows like n^4.
"""
import argparse

from poisson_vqa import grid, oracle


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m", type=int, nargs="+", default=[2, 3, 4, 5, 6, 7, 8])
    p.add_argument("--dim", type=int, default=1)
    a = p.parse_args()
    print("m,n,lambda_1,lambda_max,ratio")
    for m in a.m:
        rep = oracle.poisson_spectrum(grid.make_spec(m, a.dim))
        print(f"{m},{2 ** m},{rep.lambda_1:.17g},{rep.eigenvalues[-1]:.17g},{rep.ratio:.17g}")


if __name__ == "__main__":
    main()
