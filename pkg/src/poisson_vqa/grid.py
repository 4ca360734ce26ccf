"""Finite-difference Poisson systems on n = 2**m interior points per axis.

The 1D operator uses the unified boundary family
``alpha1*u'(0) - alpha2*u(0) = 0`` and ``beta1*u'(1) + beta2*u(1) = 0``,
which folds into the corner entries ``2 - c`` and ``2 - d_r`` of an otherwise
``tridiag(-1, 2, -1)`` matrix. Matrices here are dense and meant for the
oracle path only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class InvalidBoundaryError(ValueError):
    pass


class UnsupportedBoundaryError(ValueError):
    pass


class DegenerateRHSError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryParams:
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    h: float
    c: float
    d_r: float

    @property
    def is_dirichlet(self) -> bool:
        return self.c == 0.0 and self.d_r == 0.0


def boundary_coefficients(alpha1: float, alpha2: float, beta1: float, beta2: float,
                          n: int) -> BoundaryParams:
    """Step size and corner coefficients for the unified 1D boundary family."""
    for name, v in (("alpha1", alpha1), ("alpha2", alpha2), ("beta1", beta1), ("beta2", beta2)):
        if v < 0:
            raise InvalidBoundaryError(f"{name} must be nonnegative, got {v}")
    if alpha1 + alpha2 <= 0:
        raise InvalidBoundaryError("alpha1 and alpha2 are both zero")
    if beta1 + beta2 <= 0:
        raise InvalidBoundaryError("beta1 and beta2 are both zero")
    if n < 2:
        raise ValueError(f"grid size must be at least 2, got {n}")
    h = 1.0 / (n + 1)
    c = alpha1 / (alpha1 + alpha2 * h)
    d_r = beta1 / (beta1 + beta2 * h)
    return BoundaryParams(alpha1, alpha2, beta1, beta2, h, c, d_r)


def dirichlet(n: int) -> BoundaryParams:
    return boundary_coefficients(0.0, 1.0, 0.0, 1.0, n)


@dataclass(frozen=True)
class RHS:
    """Right-hand side descriptor.

    ``kind`` is ``"uniform"`` (all-equal vector) or ``"sampled"``, in which case
    ``f`` is evaluated at the interior grid points ``x_i = i*h``. For dim >= 2
    ``f`` receives one coordinate array per axis, axis 0 being the most
    significant block of the register.
    """
    kind: str = "uniform"
    f: Optional[Callable[..., np.ndarray]] = None

    def __post_init__(self):
        if self.kind not in ("uniform", "sampled"):
            raise ValueError(f"unknown rhs kind {self.kind!r}")
        if self.kind == "sampled" and self.f is None:
            raise ValueError("sampled rhs needs a function f")


@dataclass(frozen=True)
class ProblemSpec:
    m: int
    dim: int = 1
    boundary: Optional[BoundaryParams] = None
    rhs: RHS = field(default_factory=RHS)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if self.boundary is None:
            object.__setattr__(self, "boundary", dirichlet(self.n))
        if abs(self.boundary.h - 1.0 / (self.n + 1)) > 1e-15:
            raise ValueError("boundary step size does not match n = 2**m")
        if self.dim >= 2 and not self.boundary.is_dirichlet:
            raise UnsupportedBoundaryError("dim >= 2 supports Dirichlet boundaries only")

    @property
    def n(self) -> int:
        return 2 ** self.m

    @property
    def N(self) -> int:
        """Width of the solution register."""
        return self.m * self.dim

    @property
    def size(self) -> int:
        return 2 ** self.N


def make_spec(m: int, dim: int = 1, alpha1=0.0, alpha2=1.0, beta1=0.0, beta2=1.0,
              rhs: Optional[RHS] = None) -> ProblemSpec:
    bp = boundary_coefficients(alpha1, alpha2, beta1, beta2, 2 ** m)
    return ProblemSpec(m=m, dim=dim, boundary=bp, rhs=rhs or RHS())


def spec_with_coefficients(m: int, c: float, d_r: float, rhs: Optional[RHS] = None) -> ProblemSpec:
    """1D spec with the corner coefficients given directly.

    Picks ``alpha1 = c``, ``alpha2 = (1 - c)/h`` (and likewise on the right),
    which reproduces ``c`` and ``d_r`` up to rounding.
    """
    n = 2 ** m
    h = 1.0 / (n + 1)
    bp = boundary_coefficients(c, (1.0 - c) / h, d_r, (1.0 - d_r) / h, n)
    bp = BoundaryParams(bp.alpha1, bp.alpha2, bp.beta1, bp.beta2, h, float(c), float(d_r))
    return ProblemSpec(m=m, dim=1, boundary=bp, rhs=rhs or RHS())


def tridiagonal(n: int, c: float = 0.0, d_r: float = 0.0) -> np.ndarray:
    a = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    a[0, 0] -= c
    a[-1, -1] -= d_r
    return a


def build_matrix_1d(spec: ProblemSpec) -> np.ndarray:
    if spec.dim != 1:
        raise ValueError("build_matrix_1d needs dim = 1; use build_matrix_ddim")
    return tridiagonal(spec.n, spec.boundary.c, spec.boundary.d_r)


def build_matrix_ddim(spec: ProblemSpec) -> np.ndarray:
    """Kronecker sum ``sum_s I_s (x) A~ (x) I_t`` with ``s + t = dim - 1``."""
    if spec.dim < 2:
        raise ValueError("build_matrix_ddim needs dim >= 2; use build_matrix_1d")
    if not spec.boundary.is_dirichlet:
        raise UnsupportedBoundaryError("dim >= 2 supports Dirichlet boundaries only")
    n = spec.n
    a1 = tridiagonal(n)
    total = np.zeros((n ** spec.dim, n ** spec.dim))
    for s in range(spec.dim):
        t = spec.dim - 1 - s
        total += np.kron(np.kron(np.eye(n ** s), a1), np.eye(n ** t))
    return total


def build_matrix(spec: ProblemSpec) -> np.ndarray:
    return build_matrix_1d(spec) if spec.dim == 1 else build_matrix_ddim(spec)


def grid_points(spec: ProblemSpec) -> np.ndarray:
    return np.arange(1, spec.n + 1) * spec.boundary.h


def build_rhs(spec: ProblemSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(b, b_state)``: the raw right-hand side and its unit-norm copy."""
    if spec.rhs.kind == "uniform":
        b = np.ones(spec.size)
    else:
        x = grid_points(spec)
        if spec.dim == 1:
            b = np.asarray(spec.rhs.f(x), dtype=float)
        else:
            axes = np.meshgrid(*([x] * spec.dim), indexing="ij")
            b = np.asarray(spec.rhs.f(*axes), dtype=float).reshape(-1)
    norm = np.linalg.norm(b)
    if norm == 0.0:
        raise DegenerateRHSError("right-hand side vanishes on the grid")
    return b, b / norm


def build_hamiltonian(a: np.ndarray, b_state: np.ndarray) -> np.ndarray:
    """``H = A^T (I - |b><b|) A``; its kernel is spanned by ``A^-1 b``."""
    a = np.asarray(a)
    b_state = np.asarray(b_state)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != b_state.shape[0]:
        raise ValueError(f"dimension mismatch: A {a.shape}, b {b_state.shape}")
    if abs(np.linalg.norm(b_state) - 1.0) > 1e-10:
        raise ValueError("b_state must have unit norm")
    proj = np.eye(a.shape[0]) - np.outer(b_state, b_state.conj())
    h = a.conj().T @ proj @ a
    return 0.5 * (h + h.conj().T)
