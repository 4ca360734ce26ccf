"""Signed-permutation terms and the decompositions of sigma_x (x) A.

Bit convention: qubit 0 is the least significant bit of a basis index, and
the sigma_x qubit is the most significant one (index ``N`` of an ``N + 1``
qubit register). Every term is a real signed permutation ``M`` with
``M[perm(x), x] = sign(x)``, where ``perm`` is an involution and
``sign(perm(x)) == sign(x)``; together these make ``M`` Hermitian, one-sparse
and self-inverse.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np

MAX_DENSE_WIDTH = 14


class Kind(str, enum.Enum):
    G0 = "G0"
    G0_F_MINUS = "G0_F_MINUS"
    G0_L_MINUS = "G0_L_MINUS"
    G_PLUS1 = "G_PLUS1"
    G_MINUS1 = "G_MINUS1"
    G_PLUS2 = "G_PLUS2"
    G_MINUS2 = "G_MINUS2"
    G1_F = "G1_F"
    G1_L = "G1_L"
    GD0 = "GD0"
    GD_PLUS = "GD_PLUS"
    GD_MINUS = "GD_MINUS"


SIGNED_KINDS = {Kind.G_PLUS1, Kind.G_MINUS1, Kind.G_PLUS2, Kind.G_MINUS2,
                Kind.G1_F, Kind.G1_L, Kind.GD_PLUS, Kind.GD_MINUS}
DDIM_KINDS = {Kind.GD0, Kind.GD_PLUS, Kind.GD_MINUS}


@dataclass(frozen=True)
class TermLabel:
    kind: Kind
    sign: Optional[int] = None
    t: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind in SIGNED_KINDS:
            if self.sign not in (1, -1):
                raise ValueError(f"{self.kind.value} needs sign +1 or -1, got {self.sign}")
        elif self.sign is not None:
            raise ValueError(f"{self.kind.value} carries no sign")
        if self.kind in (Kind.GD_PLUS, Kind.GD_MINUS):
            if self.t is None or self.t < 0:
                raise ValueError(f"{self.kind.value} needs an axis index t >= 0")
        elif self.t is not None:
            raise ValueError(f"{self.kind.value} carries no axis index")

    @property
    def is_ddim(self) -> bool:
        return self.kind in DDIM_KINDS

    def __str__(self) -> str:
        s = "" if self.sign is None else ("+" if self.sign > 0 else "-")
        t = "" if self.t is None else f"[t={self.t}]"
        return f"{self.kind.value}{t}{s}"


def label(kind, sign=None, t=None) -> TermLabel:
    return TermLabel(Kind(kind), sign, t)


def all_labels(m: int, dim: int = 1) -> list[TermLabel]:
    """Every term that the decompositions for ``(m, dim)`` can use."""
    if dim == 1:
        out = [label("G0"), label("G0_F_MINUS"), label("G0_L_MINUS")]
        for k in ("G1_F", "G1_L", "G_PLUS1", "G_MINUS1", "G_PLUS2", "G_MINUS2"):
            out += [label(k, 1), label(k, -1)]
        return out
    out = [label("GD0")]
    for t in range(dim):
        out += shift_labels(t)
    return out


def shift_labels(t: int) -> list[TermLabel]:
    return [label("GD_PLUS", 1, t), label("GD_PLUS", -1, t),
            label("GD_MINUS", 1, t), label("GD_MINUS", -1, t)]


def check_label(lab: TermLabel, m: int, dim: int) -> None:
    if m < 1 or dim < 1:
        raise ValueError(f"invalid sizes m={m}, dim={dim}")
    if lab.is_ddim and dim < 2:
        raise ValueError(f"{lab} needs dim >= 2")
    if not lab.is_ddim and dim != 1:
        raise ValueError(f"{lab} is a 1D term but dim={dim}")
    if lab.t is not None and lab.t >= dim:
        raise ValueError(f"{lab} has axis index outside 0..{dim - 1}")


def term_action(lab: TermLabel, m: int, dim: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized basis action: ``G|x> = sign(x) |perm(x)>``."""
    x = np.asarray(x, dtype=np.int64)
    n = 1 << m
    N = m * dim
    top = np.int64(1) << N
    upper = (x & top) != 0
    low = x & (n - 1)
    y = x.copy()
    s = np.ones(x.shape, dtype=np.int64)
    k = lab.kind

    def shift_pair(fix_lower, fix_upper, step_lower, step_upper):
        # lower half moves by +step_lower unless fixed; upper half by -step_upper
        fixed = np.where(upper, fix_upper, fix_lower)
        moved = np.where(upper, x - step_upper, x + step_lower)
        return np.where(fixed, x, moved), np.where(fixed, lab.sign, 1)

    if k in (Kind.G0, Kind.GD0):
        y = x ^ top
    elif k is Kind.G0_F_MINUS:
        y = x ^ top
        s = np.where(low == 0, -1, 1)
    elif k is Kind.G0_L_MINUS:
        y = x ^ top
        s = np.where(low == n - 1, -1, 1)
    elif k is Kind.G_PLUS1:
        y, s = shift_pair(low == n - 1, low == 0, top + 1, top + 1)
    elif k is Kind.G_MINUS1:
        y, s = shift_pair(low == 0, low == n - 1, top - 1, top - 1)
    elif k is Kind.G_PLUS2:
        y, s = shift_pair(low >= n - 2, low <= 1, top + 2, top + 2)
    elif k is Kind.G_MINUS2:
        y, s = shift_pair(low <= 1, low >= n - 2, top - 2, top - 2)
    elif k in (Kind.G1_F, Kind.G1_L):
        mid = low >> 1
        hit = mid == 0 if k is Kind.G1_F else mid == (1 << (m - 1)) - 1
        y = np.where(hit, x ^ top ^ 1, x)
        s = np.where(hit, lab.sign, 1)
    elif k in (Kind.GD_PLUS, Kind.GD_MINUS):
        unit = np.int64(1) << (m * lab.t)
        r = (x >> (m * lab.t)) & (n - 1)
        if k is Kind.GD_PLUS:
            y, s = shift_pair(r == n - 1, r == 0, top + unit, top + unit)
        else:
            y, s = shift_pair(r == 0, r == n - 1, top - unit, top - unit)
    else:  # pragma: no cover
        raise ValueError(f"unknown term {lab}")
    return y.astype(np.int64), s.astype(np.int64)


@dataclass(frozen=True)
class SignedPermutationOp:
    """A term as an action rule; the index tables are built lazily."""
    label: TermLabel
    m: int
    dim: int = 1

    @property
    def width(self) -> int:
        return self.m * self.dim + 1

    def image(self, x):
        return term_action(self.label, self.m, self.dim, x)[0]

    def sign(self, x):
        return term_action(self.label, self.m, self.dim, x)[1]

    @cached_property
    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        return term_action(self.label, self.m, self.dim, np.arange(1 << self.width))

    @property
    def perm_table(self) -> np.ndarray:
        return self.tables[0]

    @property
    def sign_table(self) -> np.ndarray:
        return self.tables[1]

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Apply to the last axis of ``vec`` (batches allowed)."""
        perm, sign = self.tables
        return sign * vec[..., perm]

    def matrix(self) -> np.ndarray:
        return tabulated_matrix(self.perm_table, self.sign_table)

    def __str__(self) -> str:
        return str(self.label)


@dataclass(frozen=True)
class TabulatedOp:
    """An operator given by explicit tables; used for negative controls."""
    width: int
    perm_table: np.ndarray
    sign_table: np.ndarray


def tabulated_matrix(perm: np.ndarray, sign: np.ndarray) -> np.ndarray:
    size = perm.shape[0]
    if size > 1 << MAX_DENSE_WIDTH:
        raise ValueError(f"refusing to materialize a {size}x{size} matrix")
    mat = np.zeros((size, size))
    mat[perm, np.arange(size)] = sign
    return mat


def make_term(lab: TermLabel, m: int, dim: int = 1) -> SignedPermutationOp:
    check_label(lab, m, dim)
    return SignedPermutationOp(lab, m, dim)


@dataclass(frozen=True)
class TermReport:
    hermitian: bool
    self_inverse: bool
    one_sparse: bool

    @property
    def ok(self) -> bool:
        return self.hermitian and self.self_inverse and self.one_sparse


def verify_term_properties(op, dense_limit: int = 10) -> TermReport:
    """Check the three term properties from the index tables.

    Tables are checked exactly; for widths up to ``dense_limit`` the dense
    matrix is checked as well.
    """
    perm = np.asarray(op.perm_table)
    sign = np.asarray(op.sign_table)
    size = 1 << op.width
    in_range = perm.shape == (size,) and bool(np.all((perm >= 0) & (perm < size)))
    one_sparse = in_range and np.unique(perm).size == size and bool(np.all(np.abs(sign) == 1))
    if not one_sparse:
        return TermReport(False, False, False)
    involution = bool(np.all(perm[perm] == np.arange(size)))
    symmetric = bool(np.all(sign[perm] == sign))
    hermitian = involution and symmetric
    self_inverse = involution and symmetric
    if op.width <= dense_limit:
        mat = tabulated_matrix(perm, sign)
        hermitian = hermitian and np.array_equal(mat, mat.T)
        self_inverse = self_inverse and np.array_equal(mat @ mat, np.eye(size))
        one_sparse = one_sparse and bool(np.all(np.count_nonzero(mat, axis=0) == 1)) \
            and bool(np.all(np.count_nonzero(mat, axis=1) == 1))
    return TermReport(hermitian, self_inverse, one_sparse)


@dataclass
class Decomposition:
    m: int
    dim: int
    terms: list[tuple[float, TermLabel]]
    constant: float = 0.0

    @property
    def width(self) -> int:
        return self.m * self.dim + 1

    @property
    def labels(self) -> list[TermLabel]:
        return [lab for _, lab in self.terms]

    def __len__(self) -> int:
        return len(self.terms)


@dataclass
class ProductTermList:
    m: int
    dim: int
    products: list[tuple[float, TermLabel, TermLabel]]
    constant: float = 0.0

    @property
    def width(self) -> int:
        return self.m * self.dim + 1

    def __len__(self) -> int:
        return len(self.products)


def _nonzero(terms):
    return [(float(c), lab) for c, lab in terms if c != 0.0]


def decompose_A_1d(m: int, c: float, d_r: float) -> Decomposition:
    """sigma_x (x) A over at most 7 terms; zero-weight terms are dropped."""
    half = -0.5
    terms = [
        (2.0 - (c + d_r) / 2.0, label("G0")),
        (c / 2.0, label("G0_F_MINUS")),
        (d_r / 2.0, label("G0_L_MINUS")),
        (half, label("G_PLUS1", 1)), (half, label("G_PLUS1", -1)),
        (half, label("G_MINUS1", 1)), (half, label("G_MINUS1", -1)),
    ]
    return Decomposition(m, 1, _nonzero(terms))


def decompose_A2_1d(m: int, c: float, d_r: float) -> Decomposition:
    """sigma_x (x) A^2 over at most 15 terms."""
    terms = [
        (5.0 + (c * c + d_r * d_r) / 2.0 - 2.0 * c - 2.0 * d_r, label("G0")),
        ((4.0 * c + 1.0 - c * c) / 2.0, label("G0_F_MINUS")),
        ((4.0 * d_r + 1.0 - d_r * d_r) / 2.0, label("G0_L_MINUS")),
        (c / 2.0, label("G1_F", 1)), (-c / 2.0, label("G1_F", -1)),
        (d_r / 2.0, label("G1_L", 1)), (-d_r / 2.0, label("G1_L", -1)),
    ]
    for k in ("G_PLUS1", "G_MINUS1"):
        terms += [(-2.0, label(k, 1)), (-2.0, label(k, -1))]
    for k in ("G_PLUS2", "G_MINUS2"):
        terms += [(0.5, label(k, 1)), (0.5, label(k, -1))]
    return Decomposition(m, 1, _nonzero(terms))


def decompose_Ad(m: int, dim: int) -> Decomposition:
    """sigma_x (x) A^(d) over 4*dim + 1 terms (Dirichlet)."""
    if dim < 2:
        raise ValueError("decompose_Ad needs dim >= 2")
    terms = [(2.0 * dim, label("GD0"))]
    for t in range(dim):
        terms += [(-0.5, lab) for lab in shift_labels(t)]
    return Decomposition(m, dim, terms)


def expand_Ad_squared(m: int, dim: int) -> ProductTermList:
    """(sigma_x (x) A^(d))^2 as ``(4 dim^2 + dim) I`` plus ordered products.

    Squares of terms are the identity and go into the constant; every other
    ordered pair is kept, so both ``G G'`` and ``G' G`` appear.
    """
    if dim < 2:
        raise ValueError("expand_Ad_squared needs dim >= 2")
    g0 = label("GD0")
    shifts = [lab for t in range(dim) for lab in shift_labels(t)]
    products = []
    for g in shifts:
        products.append((-float(dim), g0, g))
    for g in shifts:
        products.append((-float(dim), g, g0))
    for g in shifts:
        for g2 in shifts:
            if g != g2:
                products.append((0.25, g, g2))
    return ProductTermList(m, dim, products, constant=4.0 * dim * dim + dim)


def materialize(dec: Union[Decomposition, ProductTermList]) -> np.ndarray:
    if dec.width > MAX_DENSE_WIDTH:
        raise ValueError(f"width {dec.width} exceeds dense guard {MAX_DENSE_WIDTH}")
    size = 1 << dec.width
    out = dec.constant * np.eye(size)
    cache: dict[TermLabel, np.ndarray] = {}

    def mat(lab):
        if lab not in cache:
            cache[lab] = make_term(lab, dec.m, dec.dim).matrix()
        return cache[lab]

    if isinstance(dec, Decomposition):
        for coef, lab in dec.terms:
            out += coef * mat(lab)
    else:
        for coef, left, right in dec.products:
            out += coef * (mat(left) @ mat(right))
    return out


def sigma_x_kron(a: np.ndarray) -> np.ndarray:
    """Dense ``sigma_x (x) a`` with the sigma_x qubit most significant."""
    return np.kron(np.array([[0.0, 1.0], [1.0, 0.0]]), a)
