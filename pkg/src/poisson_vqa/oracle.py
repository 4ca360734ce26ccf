"""Dense classical references: direct solves, spectra and discretization error."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import grid

MAX_SPECTRUM_WIDTH = 12
ZERO_EIGENVALUE = 1e-8


class SingularSystemError(np.linalg.LinAlgError):
    pass


@dataclass
class Solution:
    x: np.ndarray
    state: np.ndarray
    residual: float


def dense_solve(a: np.ndarray, b: np.ndarray, max_cond: float = 1e12) -> Solution:
    a = np.asarray(a)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > max_cond:
        raise SingularSystemError(f"matrix condition number {cond:.3e} exceeds {max_cond:.1e}")
    x = np.linalg.solve(a, b)
    nb = np.linalg.norm(b)
    res = float(np.linalg.norm(a @ x - b) / nb) if nb > 0 else 0.0
    nx = np.linalg.norm(x)
    return Solution(x, x / nx if nx > 0 else x, res)


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    ground_state: np.ndarray
    lambda_1: float
    ratio: float


def spectrum(h: np.ndarray) -> SpectrumReport:
    """Full spectrum; ``ratio`` is the largest eigenvalue over the smallest nonzero one."""
    h = np.asarray(h)
    if h.shape[0] > 1 << MAX_SPECTRUM_WIDTH:
        raise ValueError(f"spectrum limited to {1 << MAX_SPECTRUM_WIDTH} states")
    w, v = np.linalg.eigh(h)
    positive = w[w > ZERO_EIGENVALUE]
    lam1 = float(positive[0]) if positive.size else float("nan")
    ratio = float(w[-1] / lam1) if positive.size else float("nan")
    return SpectrumReport(w, v, v[:, 0], lam1, ratio)


def poisson_spectrum(spec: grid.ProblemSpec) -> SpectrumReport:
    a = grid.build_matrix(spec)
    return spectrum(grid.build_hamiltonian(a, grid.build_rhs(spec)[1]))


def solve_poisson_1d(spec: grid.ProblemSpec, f: Callable) -> np.ndarray:
    """Grid solution of ``-u'' = f``; the stencil matrix carries no ``1/h^2``."""
    h = spec.boundary.h
    rhs = h * h * np.asarray(f(grid.grid_points(spec)), dtype=float)
    return dense_solve(grid.build_matrix_1d(spec), rhs).x if np.any(rhs) else np.zeros(spec.n)


@dataclass
class ConvergenceRow:
    m: int
    n: int
    max_error: float
    observed_order: float  # nan on the first level
    error_ratio: float = float("nan")  # previous error over this one


def convergence_study(f: Callable, exact: Callable, levels: Sequence[int],
                      boundary: Optional[tuple[float, float, float, float]] = None) -> list[ConvergenceRow]:
    """Max-norm error against ``exact`` per level; order from successive ``h`` ratios."""
    rows: list[ConvergenceRow] = []
    prev = None
    for m in levels:
        spec = grid.make_spec(m, 1, *(boundary or (0.0, 1.0, 0.0, 1.0)))
        u = solve_poisson_1d(spec, f)
        err = float(np.max(np.abs(u - exact(grid.grid_points(spec)))))
        order = ratio = float("nan")
        if prev is not None and err > 0 and prev[1] > 0:
            ratio = prev[1] / err
            order = float(np.log(ratio) / np.log(prev[0] / spec.boundary.h))
        rows.append(ConvergenceRow(m, spec.n, err, order, ratio))
        prev = (spec.boundary.h, err)
    return rows


@dataclass
class WorseCaseDiagnostic:
    loss_before: float
    loss_after: float
    fidelity_before: float
    fidelity_after: float

    @property
    def loss_decreased(self) -> bool:
        return self.loss_after < self.loss_before

    @property
    def fidelity_decreased(self) -> bool:
        return self.fidelity_after < self.fidelity_before

    @property
    def worse_case(self) -> bool:
        return self.loss_decreased and self.fidelity_decreased


def worse_case_probe(h: np.ndarray, psi_before: np.ndarray, psi_after: np.ndarray,
                     ground: Optional[np.ndarray] = None) -> WorseCaseDiagnostic:
    """Flag a step that lowers the loss while lowering the ground-state fidelity."""
    for v in (psi_before, psi_after):
        if abs(np.linalg.norm(v) - 1.0) > 1e-8:
            raise ValueError("states must have unit norm")
    if ground is None:
        ground = spectrum(h).ground_state
    loss = lambda v: float(np.vdot(v, h @ v).real)
    fid = lambda v: float(abs(np.vdot(ground, v)) ** 2)
    return WorseCaseDiagnostic(loss(psi_before), loss(psi_after), fid(psi_before), fid(psi_after))


def eigenbasis_coefficients(rep: SpectrumReport, psi: np.ndarray) -> np.ndarray:
    return rep.eigenvectors.conj().T @ psi
