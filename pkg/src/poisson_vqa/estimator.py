"""Hadamard-test estimates of the term expectations and the loss assembled from them.

The loss is ``<psi|A^2|psi> - |<b|A|psi>|^2``. With the sigma_x qubit prepared
in ``|+>`` both pieces become linear combinations of
``<+|<psi|G|+>|psi>``, ``<+|<b|G|+>|psi>`` and, in d dimensions,
``<+|<psi|G G'|+>|psi>`` over the signed-permutation terms ``G``.

Three evaluation modes exist: ``dense`` (classical ``psi^T H psi``),
``exact`` (Hadamard-test probabilities computed exactly) and ``shots``
(each quadrature of each item sampled with ``M`` shots).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import grid
from .decomp import (Decomposition, ProductTermList, TermLabel, decompose_A2_1d,
                     decompose_A_1d, decompose_Ad, expand_Ad_squared, make_term)
from .simulator import (CircuitLayout, Gate, StateVector, controlled, h, inverse, rz,
                        split_ancilla, state_preparation_unitary, synthesize_term_circuit,
                        unitary_gate)

PLUS = np.array([1.0, 1.0]) / np.sqrt(2.0)


@dataclass(frozen=True)
class EvalMode:
    kind: str = "exact"
    shots: int = 0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("dense", "exact", "shots"):
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.kind == "shots" and self.shots <= 0:
            raise ValueError("shot count must be positive")

    def __str__(self) -> str:
        return f"shots:{self.shots}" if self.kind == "shots" else \
            ("exact-ht" if self.kind == "exact" else "dense")


DENSE = EvalMode("dense")
EXACT = EvalMode("exact")


def SHOTS(m: int, seed: Optional[int] = None) -> EvalMode:
    return EvalMode("shots", m, seed)


def parse_mode(text: str, seed: Optional[int] = None) -> EvalMode:
    text = text.strip().lower()
    if text == "dense":
        return DENSE
    if text in ("exact", "exact-ht"):
        return EXACT
    if text.startswith("shots:"):
        return SHOTS(int(text.split(":", 1)[1]), seed)
    raise ValueError(f"mode must be dense, exact-ht or shots:M, got {text!r}")


@dataclass(frozen=True)
class HadamardTestResult:
    p_real: float
    p_imag: float
    estimate: complex
    shots: Optional[int]  # None means exact

    @classmethod
    def from_probabilities(cls, p_real, p_imag, shots=None):
        return cls(float(p_real), float(p_imag), complex(2 * p_real - 1, 2 * p_imag - 1), shots)


def sample_probability(p, shots: int, rng: np.random.Generator):
    p = np.clip(p, 0.0, 1.0)
    return rng.binomial(shots, p) / shots


# --- Hadamard-test targets -----------------------------------------------------

@dataclass
class GateTarget:
    """A generic ``U~`` given as a gate list on ``width`` qubits (prepared in ``|0>``)."""
    gates: list[Gate]
    width: int

    def value(self) -> complex:
        st = StateVector(self.width, np.eye(1, 1 << self.width, 0, dtype=complex)[0])
        return complex(st.run(self.gates).amps[0])

    def circuit(self, control: int) -> tuple[list[Gate], int, int]:
        return controlled(self.gates, control), self.width, self.width


@dataclass
class TermTarget:
    """``U~ = W_out^dag . G_1 ... G_k . W_in`` with ``W = H (x) V`` on the main register.

    ``ket`` and ``bra`` are states on the ``N`` solution qubits; ``terms`` is
    applied right to left, as in an operator product. ``uniform_*`` selects
    ``H^{(x)N}`` as the preparation instead of an injected unitary.
    """
    m: int
    dim: int
    terms: tuple[TermLabel, ...]
    ket: np.ndarray
    bra: np.ndarray
    uniform_ket: bool = False
    uniform_bra: bool = False

    @property
    def N(self) -> int:
        return self.m * self.dim

    def value(self) -> complex:
        vec = np.kron(PLUS, self.ket).astype(complex)
        for lab in reversed(self.terms):
            vec = make_term(lab, self.m, self.dim).apply(vec)
        return complex(np.vdot(np.kron(PLUS, self.bra), vec))

    def _prep(self, state, uniform) -> list[Gate]:
        gates = [h(self.N)]
        if uniform:
            gates += [h(q) for q in range(self.N)]
        else:
            gates.append(unitary_gate(state_preparation_unitary(state), range(self.N)))
        return gates

    def circuit(self, control: int) -> tuple[list[Gate], int, int]:
        lay = CircuitLayout(self.m, self.dim, hadamard_ancilla=True)
        w_in = self._prep(self.ket, self.uniform_ket)
        w_out = self._prep(self.bra, self.uniform_bra)
        gates = controlled(w_in, control)
        for lab in reversed(self.terms):
            gates += synthesize_term_circuit(lab, self.m, self.dim).controlled_gates(control)
        gates += controlled(inverse(w_out), control)
        return gates, lay.width, self.N + 1


def _circuit_probabilities(target, imaginary: bool) -> tuple[float, float]:
    """P(ancilla = 0) and the population left outside the zero-ancilla subspace."""
    if isinstance(target, TermTarget):
        control = CircuitLayout(target.m, target.dim, hadamard_ancilla=True).hadamard
    else:
        control = target.width
    body, reg_width, main_width = target.circuit(control)
    width = max(reg_width, control + 1)
    gates = [h(control)] + body
    if imaginary:
        # RZ(-pi/2) equals S^dag up to a global phase
        gates.append(rz(-np.pi / 2, control))
    gates.append(h(control))
    st = StateVector(width, np.eye(1, 1 << width, 0, dtype=complex)[0]).run(gates)
    amps = st.amps.reshape(2, -1)  # control is the top qubit
    p0 = float(np.sum(np.abs(amps[0]) ** 2))
    leftover = 0.0
    for half in amps:
        ext = StateVector(width - 1, half.copy())
        leftover += split_ancilla(ext, main_width)[1]
    return p0, leftover


def hadamard_test(target, mode: EvalMode = EXACT, *, backend: str = "direct",
                  rng: Optional[np.random.Generator] = None) -> HadamardTestResult:
    """Estimate ``<0|U~|0>`` from the probabilities of reading 0 on the test qubit.

    ``backend="direct"`` takes the probabilities from the exact amplitude,
    ``backend="circuit"`` simulates the controlled circuit gate by gate.
    """
    if mode.kind == "dense":
        raise ValueError("hadamard_test needs exact or shots mode")
    if backend == "direct":
        z = target.value()
        p_r, p_i = (1.0 + z.real) / 2.0, (1.0 + z.imag) / 2.0
    elif backend == "circuit":
        p_r, left_r = _circuit_probabilities(target, imaginary=False)
        p_i, left_i = _circuit_probabilities(target, imaginary=True)
        if max(left_r, left_i) > 1e-10:
            raise AssertionError(f"ancillas not restored: leftover population {max(left_r, left_i):.2e}")
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if mode.kind == "shots":
        rng = rng if rng is not None else np.random.default_rng(mode.seed)
        p_r = sample_probability(p_r, mode.shots, rng)
        p_i = sample_probability(p_i, mode.shots, rng)
        return HadamardTestResult.from_probabilities(p_r, p_i, mode.shots)
    return HadamardTestResult.from_probabilities(p_r, p_i)


def _is_uniform(vec) -> bool:
    vec = np.asarray(vec)
    return bool(np.allclose(vec, vec.flat[0], atol=1e-14, rtol=0) and abs(vec.flat[0].imag) < 1e-15
                and vec.flat[0].real > 0)


def _check_width(state, m, dim):
    if np.asarray(state).shape[-1] != 1 << (m * dim):
        raise ValueError(f"state has {np.asarray(state).shape[-1]} amplitudes, expected {1 << (m * dim)}")


def expectation_psi_G_psi(psi, lab: TermLabel, m: int, dim: int = 1, mode: EvalMode = EXACT,
                          **kw) -> complex:
    _check_width(psi, m, dim)
    t = TermTarget(m, dim, (lab,), psi, psi, _is_uniform(psi), _is_uniform(psi))
    return hadamard_test(t, mode, **kw).estimate


def overlap_b_G_psi(b_state, psi, lab: TermLabel, m: int, dim: int = 1, mode: EvalMode = EXACT,
                    **kw) -> complex:
    _check_width(psi, m, dim)
    _check_width(b_state, m, dim)
    if abs(np.linalg.norm(b_state) - 1.0) > 1e-10:
        raise ValueError("b_state must have unit norm")
    t = TermTarget(m, dim, (lab,), psi, b_state, _is_uniform(psi), _is_uniform(b_state))
    return hadamard_test(t, mode, **kw).estimate


def expectation_psi_GG_psi(psi, left: TermLabel, right: TermLabel, m: int, dim: int,
                           mode: EvalMode = EXACT, **kw) -> complex:
    if left == right:
        raise ValueError("G G is the identity; identical pairs belong in the constant")
    _check_width(psi, m, dim)
    t = TermTarget(m, dim, (left, right), psi, psi, _is_uniform(psi), _is_uniform(psi))
    return hadamard_test(t, mode, **kw).estimate


# --- loss assembly ---------------------------------------------------------------

@dataclass
class LossReport:
    loss: float
    term_a2: complex
    term_bA: complex
    overlap_items: dict[str, complex] = field(default_factory=dict)
    expectation_items: dict[str, complex] = field(default_factory=dict)


class LossEvaluator:
    """Loss for one problem, evaluable on single states or batches of states.

    The sigma_x-extended states and the term tables are cached, so repeated
    evaluation inside the optimizer costs a handful of gathers per item.
    """

    def __init__(self, spec: grid.ProblemSpec, mode: EvalMode = EXACT, backend: str = "direct"):
        self.spec = spec
        self.mode = mode
        self.backend = backend
        self.m, self.dim = spec.m, spec.dim
        self.b_raw, self.b_state = grid.build_rhs(spec)
        self.b_uniform = spec.rhs.kind == "uniform"
        if spec.dim == 1:
            c, d_r = spec.boundary.c, spec.boundary.d_r
            self.dec_a: Decomposition = decompose_A_1d(spec.m, c, d_r)
            self.dec_a2: Union[Decomposition, ProductTermList] = decompose_A2_1d(spec.m, c, d_r)
        else:
            self.dec_a = decompose_Ad(spec.m, spec.dim)
            self.dec_a2 = expand_Ad_squared(spec.m, spec.dim)
        self._ops = {}
        self._rng = np.random.default_rng(mode.seed) if mode.kind == "shots" else None
        self._dense = None

    def reseed(self, rng: np.random.Generator) -> None:
        if self.mode.kind == "shots":
            self._rng = rng

    @property
    def overlap_labels(self) -> list[TermLabel]:
        return self.dec_a.labels

    @property
    def expectation_items(self) -> list:
        if isinstance(self.dec_a2, Decomposition):
            return [(lab,) for lab in self.dec_a2.labels]
        return [(left, right) for _, left, right in self.dec_a2.products]

    def op(self, lab):
        if lab not in self._ops:
            self._ops[lab] = make_term(lab, self.m, self.dim)
        return self._ops[lab]

    def dense_matrices(self):
        if self._dense is None:
            a = grid.build_matrix(self.spec)
            self._dense = (a, a @ a, grid.build_hamiltonian(a, self.b_state))
        return self._dense

    def _sample(self, z: np.ndarray) -> np.ndarray:
        if self.mode.kind != "shots":
            return z
        M = self.mode.shots
        pr = sample_probability((1.0 + z.real) / 2.0, M, self._rng)
        pi = sample_probability((1.0 + z.imag) / 2.0, M, self._rng)
        return (2 * pr - 1) + 1j * (2 * pi - 1)

    def _items(self, psi: np.ndarray):
        """Per-item estimates for a batch ``psi`` of shape (B, 2**N)."""
        if self.backend == "circuit":
            return self._items_circuit(psi)
        ext = np.concatenate([psi, psi], axis=-1) * PLUS[0]
        ext_b = np.kron(PLUS, self.b_state)
        overlaps = {}
        for lab in self.overlap_labels:
            overlaps[lab] = self._sample(self.op(lab).apply(ext) @ ext_b.conj())
        expects = {}
        for item in self.expectation_items:
            vec = ext
            for lab in reversed(item):
                vec = self.op(lab).apply(vec)
            expects[item] = self._sample(np.sum(ext.conj() * vec, axis=-1))
        return overlaps, expects

    def _items_circuit(self, psi: np.ndarray):
        if psi.ndim != 1:
            return self._batched_circuit(psi)
        mode = self.mode if self.mode.kind == "shots" else EXACT
        uni = _is_uniform(psi)
        overlaps = {lab: hadamard_test(TermTarget(self.m, self.dim, (lab,), psi, self.b_state, uni,
                                                  self.b_uniform), mode, backend="circuit",
                                       rng=self._rng).estimate
                    for lab in self.overlap_labels}
        expects = {item: hadamard_test(TermTarget(self.m, self.dim, item, psi, psi, uni, uni), mode,
                                       backend="circuit", rng=self._rng).estimate
                   for item in self.expectation_items}
        return overlaps, expects

    def _batched_circuit(self, psi):
        rows = [self._items_circuit(p) for p in psi]
        overlaps = {k: np.array([r[0][k] for r in rows]) for k in rows[0][0]}
        expects = {k: np.array([r[1][k] for r in rows]) for k in rows[0][1]}
        return overlaps, expects

    def _assemble(self, overlaps, expects):
        term_ba = sum(coef * overlaps[lab] for coef, lab in self.dec_a.terms)
        if isinstance(self.dec_a2, Decomposition):
            term_a2 = sum(coef * expects[(lab,)] for coef, lab in self.dec_a2.terms)
        else:
            term_a2 = self.dec_a2.constant + sum(
                coef * expects[(left, right)] for coef, left, right in self.dec_a2.products)
        return term_a2, term_ba

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        """Loss values for a state (scalar) or a batch of states (array)."""
        psi = np.asarray(psi, dtype=complex)
        if self.mode.kind == "dense":
            h_mat = self.dense_matrices()[2]
            vals = np.einsum("...i,ij,...j->...", psi.conj(), h_mat, psi).real
            return vals
        term_a2, term_ba = self._assemble(*self._items(psi))
        return np.real(term_a2) - np.abs(term_ba) ** 2

    def report(self, psi) -> LossReport:
        psi = np.asarray(psi, dtype=complex)
        if psi.ndim != 1:
            raise ValueError("report takes a single state")
        if self.mode.kind == "dense":
            a, a2, h_mat = self.dense_matrices()
            t_a2 = complex(np.vdot(psi, a2 @ psi))
            t_ba = complex(np.vdot(self.b_state, a @ psi))
            return LossReport(float(np.vdot(psi, h_mat @ psi).real), t_a2, t_ba)
        overlaps, expects = self._items(psi)
        term_a2, term_ba = self._assemble(overlaps, expects)
        return LossReport(
            loss=float(np.real(term_a2) - abs(term_ba) ** 2),
            term_a2=complex(term_a2), term_bA=complex(term_ba),
            overlap_items={str(k): complex(v) for k, v in overlaps.items()},
            expectation_items={"*".join(map(str, k)): complex(v) for k, v in expects.items()},
        )


def _as_state(theta_or_psi) -> np.ndarray:
    if hasattr(theta_or_psi, "state"):
        return theta_or_psi.state()
    return np.asarray(theta_or_psi, dtype=complex)


def loss_1d(theta_or_psi, spec: grid.ProblemSpec, mode: EvalMode = EXACT,
            backend: str = "direct") -> LossReport:
    if spec.dim != 1:
        raise ValueError("loss_1d needs a 1D spec")
    return LossEvaluator(spec, mode, backend).report(_as_state(theta_or_psi))


def loss_ddim(theta_or_psi, spec: grid.ProblemSpec, mode: EvalMode = EXACT,
              backend: str = "direct") -> LossReport:
    if spec.dim < 2:
        raise ValueError("loss_ddim needs dim >= 2")
    return LossEvaluator(spec, mode, backend).report(_as_state(theta_or_psi))


def loss(theta_or_psi, spec: grid.ProblemSpec, mode: EvalMode = EXACT,
         backend: str = "direct") -> LossReport:
    return LossEvaluator(spec, mode, backend).report(_as_state(theta_or_psi))
