"""Statevector simulation and gate-level circuits for the signed-permutation terms.

Qubit ``i`` is bit ``i`` of the basis index. Circuits act on a layout of

* the main register ``0..N`` (``N`` is the sigma_x qubit),
* an index register of ``m + 1`` qubits holding the column index of the term
  restricted to the bits it touches (the sigma_x qubit plus one axis block),
* one phase qubit flagging the fixed points / ``-1`` entries,
* optionally one Hadamard-test qubit.

Every term circuit follows compute / phase / swap / uncompute: the compute
stage writes ``y(x)`` into the index register and a flag into the phase
qubit, the phase stage applies a controlled ``RZ(2 pi)`` (a ``-1`` wherever
the flag is set), the swap stage exchanges main and index bits, and the
uncompute stage is the compute stage reversed. Uncomputation works because
``perm`` is an involution and the sign is constant on its orbits.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .decomp import Kind, TermLabel, check_label, make_term

NORM_TOL = 1e-10
MAX_UNITARY_WIDTH = 10

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    """``kind`` is one of H, X, RZ, SWAP, UNITARY.

    ``controls`` holds ``(qubit, polarity)`` pairs; polarity 0 means the gate
    fires when that qubit is ``|0>``. An X with controls is a multi-controlled X.
    """
    kind: str
    targets: tuple[int, ...]
    controls: tuple[tuple[int, int], ...] = ()
    angle: float = 0.0
    matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("H", "X", "RZ", "SWAP", "UNITARY"):
            raise ValueError(f"unknown gate kind {self.kind}")
        qubits = list(self.targets) + [q for q, _ in self.controls]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"{self.kind}: controls and targets overlap")
        if self.kind == "SWAP" and len(self.targets) != 2:
            raise ValueError("SWAP needs two targets")
        if self.kind in ("H", "X", "RZ") and len(self.targets) != 1:
            raise ValueError(f"{self.kind} acts on one qubit")
        if self.kind == "UNITARY":
            if self.matrix is None or self.matrix.shape != (1 << len(self.targets),) * 2:
                raise ValueError("UNITARY needs a matrix matching its targets")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)

    def unitary(self) -> np.ndarray:
        if self.kind == "H":
            return _H
        if self.kind == "X":
            return _X
        if self.kind == "RZ":
            return np.diag([np.exp(-0.5j * self.angle), np.exp(0.5j * self.angle)])
        if self.kind == "SWAP":
            return _SWAP
        return self.matrix

    def inverse(self) -> "Gate":
        if self.kind == "RZ":
            return replace(self, angle=-self.angle)
        if self.kind == "UNITARY":
            return replace(self, matrix=self.matrix.conj().T)
        return self

    def with_control(self, qubit: int, polarity: int = 1) -> "Gate":
        return replace(self, controls=self.controls + ((qubit, polarity),))

    def __str__(self) -> str:
        parts = [self.kind, ",".join(map(str, self.targets))]
        if self.controls:
            parts.append("c=" + ",".join(f"{'' if p else '~'}{q}" for q, p in self.controls))
        if self.kind == "RZ":
            parts.append(f"angle={self.angle!r}")
        return " ".join(parts)


def h(q: int) -> Gate:
    return Gate("H", (q,))


def x(q: int) -> Gate:
    return Gate("X", (q,))


def mcx(controls: Iterable[Union[int, tuple[int, int]]], target: int) -> Gate:
    ctl = tuple(c if isinstance(c, tuple) else (c, 1) for c in controls)
    return Gate("X", (target,), ctl)


def rz(angle: float, q: int) -> Gate:
    return Gate("RZ", (q,), angle=angle)


def swap(a: int, b: int) -> Gate:
    return Gate("SWAP", (a, b))


def unitary_gate(matrix: np.ndarray, qubits: Sequence[int]) -> Gate:
    """Dense gate; ``qubits[0]`` is the least significant local bit."""
    return Gate("UNITARY", tuple(qubits), matrix=np.asarray(matrix, dtype=complex))


def controlled(gates: Iterable[Gate], qubit: int, polarity: int = 1) -> list[Gate]:
    return [g.with_control(qubit, polarity) for g in gates]


def inverse(gates: Sequence[Gate]) -> list[Gate]:
    return [g.inverse() for g in reversed(gates)]


def export_gates(gates: Iterable[Gate]) -> str:
    """Plain-text gate list, one ``KIND targets [c=controls] [angle=..]`` per line."""
    return "\n".join(str(g) for g in gates) + "\n"


class StateVector:
    """Amplitudes over ``2**width`` basis states, mutated in place by gates.

    The constructor copies ``amps``, so the caller's array is never touched.
    """

    def __init__(self, width: int, amps: np.ndarray):
        amps = np.array(amps, dtype=complex)
        if amps.shape != (1 << width,):
            raise ValueError(f"expected {1 << width} amplitudes, got {amps.shape}")
        self.width = width
        self.amps = amps

    def copy(self) -> "StateVector":
        return StateVector(self.width, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def apply(self, gate: Gate) -> "StateVector":
        apply_gate(self, gate)
        return self

    def run(self, gates: Iterable[Gate]) -> "StateVector":
        for g in gates:
            apply_gate(self, g)
        return self

    def __repr__(self) -> str:
        return f"StateVector(width={self.width})"


def prepare(width: int, kind: str = "zeros", vector: Optional[np.ndarray] = None) -> StateVector:
    if kind == "zeros":
        amps = np.zeros(1 << width, dtype=complex)
        amps[0] = 1.0
    elif kind == "plus":
        amps = np.full(1 << width, 2.0 ** (-width / 2), dtype=complex)
    elif kind == "inject":
        amps = np.asarray(vector, dtype=complex)
        if amps.shape != (1 << width,):
            raise ValueError(f"injected vector must have {1 << width} entries")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ValueError("injected vector must have unit norm")
    else:
        raise ValueError(f"unknown preparation {kind!r}")
    return StateVector(width, amps)


@lru_cache(maxsize=None)
def _indices(width: int) -> np.ndarray:
    idx = np.arange(1 << width, dtype=np.int64)
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=4096)
def _gather_plan(width: int, targets: tuple[int, ...],
                 controls: tuple[tuple[int, int], ...]) -> np.ndarray:
    idx = _indices(width)
    tmask = 0
    for q in targets:
        tmask |= 1 << q
    sel = (idx & tmask) == 0
    for q, pol in controls:
        sel &= ((idx >> q) & 1) == pol
    base = idx[sel]
    k = len(targets)
    offs = np.zeros(1 << k, dtype=np.int64)
    for j in range(1 << k):
        for i, q in enumerate(targets):
            if (j >> i) & 1:
                offs[j] |= 1 << q
    plan = base[:, None] + offs[None, :]
    plan.setflags(write=False)
    return plan


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    if max(gate.qubits) >= state.width or min(gate.qubits) < 0:
        raise IndexError(f"gate {gate} outside a {state.width}-qubit register")
    plan = _gather_plan(state.width, gate.targets, gate.controls)
    amps = state.amps
    amps[plan] = amps[plan] @ gate.unitary().T
    return state


def check_norm(state: StateVector, tol: float = NORM_TOL) -> None:
    drift = abs(state.norm() - 1.0)
    if drift > tol:
        raise AssertionError(f"norm drifted by {drift:.3e}")


def circuit_unitary(gates: Sequence[Gate], width: int) -> np.ndarray:
    """Dense unitary by simulating every basis column."""
    if width > MAX_UNITARY_WIDTH:
        raise ValueError(f"dense unitary limited to {MAX_UNITARY_WIDTH} qubits")
    size = 1 << width
    out = np.zeros((size, size), dtype=complex)
    for col in range(size):
        st = StateVector(width, np.eye(1, size, col, dtype=complex)[0])
        out[:, col] = st.run(gates).amps
    return out


def state_preparation_unitary(vec: np.ndarray) -> np.ndarray:
    """A unitary whose first column is ``vec`` (phase-corrected Householder)."""
    vec = np.asarray(vec, dtype=complex)
    if abs(np.linalg.norm(vec) - 1.0) > NORM_TOL:
        raise ValueError("state must have unit norm")
    size = vec.shape[0]
    a0 = vec[0]
    phase = a0 / abs(a0) if abs(a0) > 0 else 1.0
    w = vec.copy()
    w[0] -= phase
    wn = np.vdot(w, w).real
    if wn < 1e-30:
        return phase * np.eye(size, dtype=complex)
    refl = np.eye(size, dtype=complex) - 2.0 * np.outer(w, w.conj()) / wn
    return phase * refl


# --- term application without synthesis -------------------------------------

def apply_term_direct(state: StateVector, lab: TermLabel, m: int, dim: int = 1) -> StateVector:
    N = m * dim
    if state.width != N + 1:
        raise ValueError(f"term acts on {N + 1} qubits, state has {state.width}")
    op = make_term(lab, m, dim)
    return StateVector(state.width, op.apply(state.amps))


def controlled_apply(state: StateVector, operand, control: int, m: int = None,
                     dim: int = 1) -> StateVector:
    """Apply a term (by label, directly) or a gate list on the control=1 subspace.

    A label acts on qubits ``0..m*dim`` of the state; a gate list is
    controlled gate by gate.
    """
    if isinstance(operand, TermLabel):
        N = m * dim
        if control <= N:
            raise ValueError("control qubit overlaps the operand register")
        if control >= state.width:
            raise IndexError("control qubit outside the register")
        op = make_term(operand, m, dim)
        perm, sign = op.tables
        idx = _indices(state.width)
        mask = (1 << (N + 1)) - 1
        low = idx & mask
        on = ((idx >> control) & 1) == 1
        src = np.where(on, (idx & ~mask) | perm[low], idx)
        fac = np.where(on, sign[low], 1)
        return StateVector(state.width, fac * state.amps[src])
    gates = list(operand)
    if any(control in g.qubits for g in gates):
        raise ValueError("control qubit overlaps the operand register")
    return state.copy().run(controlled(gates, control))


# --- circuit synthesis ---------------------------------------------------------

@dataclass(frozen=True)
class CircuitLayout:
    m: int
    dim: int = 1
    hadamard_ancilla: bool = False

    @property
    def N(self) -> int:
        return self.m * self.dim

    @property
    def main(self) -> list[int]:
        return list(range(self.N + 1))

    @property
    def index_register(self) -> list[int]:
        start = self.N + 1
        return list(range(start, start + self.m + 1))

    @property
    def phase(self) -> int:
        return self.N + self.m + 2

    @property
    def ancillas(self) -> list[int]:
        return self.index_register + [self.phase]

    @property
    def hadamard(self) -> int:
        if not self.hadamard_ancilla:
            raise AttributeError("layout has no Hadamard-test qubit")
        return self.phase + 1

    @property
    def width(self) -> int:
        return self.phase + 1 + int(self.hadamard_ancilla)


def binary_increment_circuit(qubits: Sequence[int]) -> list[Gate]:
    """``|g> -> |g + 1 mod 2**w>``; ``qubits[0]`` is the least significant bit."""
    qubits = list(qubits)
    if not qubits:
        raise ValueError("increment needs at least one qubit")
    return [mcx(qubits[:j], qubits[j]) for j in range(len(qubits) - 1, -1, -1)]


@dataclass
class TermCircuit:
    label: TermLabel
    layout: CircuitLayout
    compute: list[Gate]
    phase: list[Gate]
    swap: list[Gate]

    @property
    def gates(self) -> list[Gate]:
        return self.compute + self.phase + self.swap + inverse(self.compute)

    def controlled_gates(self, control: int, full: bool = False) -> list[Gate]:
        """Controlled version; by default only the phase and swap stages carry the control."""
        if full:
            return controlled(self.gates, control)
        return self.compute + controlled(self.phase + self.swap, control) + inverse(self.compute)

    @property
    def ancillas_used(self) -> set[int]:
        anc = set(self.layout.ancillas)
        return {q for g in self.gates for q in g.qubits if q in anc}


def _phase_flip(layout: CircuitLayout) -> list[Gate]:
    # RZ(2 pi) = -I, so controlling it on the flag gives exactly -1 on that branch
    return [rz(2.0 * np.pi, 0).with_control(layout.phase)]


def synthesize_term_circuit(lab: TermLabel, m: int, dim: int = 1) -> TermCircuit:
    check_label(lab, m, dim)
    lay = CircuitLayout(m, dim)
    N = lay.N
    k = lab.kind
    low = list(range(m))
    flag = lay.phase

    if k in (Kind.G0, Kind.GD0):
        return TermCircuit(lab, lay, [], [], [x(N)])

    if k in (Kind.G0_F_MINUS, Kind.G0_L_MINUS):
        ux = [x(q) for q in low] if k is Kind.G0_F_MINUS else []
        compute = ux + [mcx(low, flag)] + ux
        return TermCircuit(lab, lay, compute, _phase_flip(lay), [x(N)])

    if k in (Kind.G1_F, Kind.G1_L):
        mid = list(range(1, m))
        ux = [x(q) for q in mid] if k is Kind.G1_F else []
        compute = ux + [mcx(mid, flag)] + ux
        phase = _phase_flip(lay) if lab.sign < 0 else []
        return TermCircuit(lab, lay, compute, phase, [mcx([flag], N), mcx([flag], 0)])

    # shift family: the touched bits are one axis block plus the sigma_x qubit
    t = lab.t if lab.t is not None else 0
    active = [m * t + i for i in range(m)] + [N]
    anc = lay.index_register
    step = 2 if k in (Kind.G_PLUS2, Kind.G_MINUS2) else 1
    raising = k in (Kind.G_PLUS1, Kind.G_PLUS2, Kind.GD_PLUS)
    # fold the half that moves down onto the half that moves up by complementing
    fold_pol = 1 if raising else 0
    fold = [x(a).with_control(N, fold_pol) for a in anc]
    inc_bits = anc[step - 1:m]
    compute = [mcx([q], a) for q, a in zip(active, anc)]
    compute += fold
    compute.append(mcx(inc_bits, flag))
    if inc_bits:
        compute += controlled(binary_increment_circuit(inc_bits), flag, 0)
    compute.append(x(anc[m]).with_control(flag, 0))
    compute += fold
    phase = _phase_flip(lay) if lab.sign < 0 else []
    swaps = [swap(q, a) for q, a in zip(active, anc)]
    return TermCircuit(lab, lay, compute, phase, swaps)


def run_term_circuit(main_state: StateVector, tc: TermCircuit) -> StateVector:
    """Embed a main-register state with zeroed ancillas and run the term circuit."""
    lay = tc.layout
    if main_state.width != lay.N + 1:
        raise ValueError("state width does not match the term layout")
    amps = np.zeros(1 << lay.width, dtype=complex)
    amps[: 1 << (lay.N + 1)] = main_state.amps
    return StateVector(lay.width, amps).run(tc.gates)


def split_ancilla(state: StateVector, main_width: int) -> tuple[np.ndarray, float]:
    """Main-register amplitudes on the all-zero ancilla branch, and the leftover population."""
    main = state.amps[: 1 << main_width]
    leftover = float(np.sum(np.abs(state.amps[1 << main_width:]) ** 2))
    return main.copy(), leftover
