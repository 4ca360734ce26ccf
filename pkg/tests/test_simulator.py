import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisson_vqa import decomp, simulator as sim

from conftest import random_state

CASES = [(1, 1), (2, 1), (3, 1), (1, 2)]


def test_single_gates_on_basis_states():
    assert np.allclose(sim.prepare(2).run([sim.x(0)]).amps, [0, 1, 0, 0])
    assert np.allclose(sim.prepare(2).run([sim.x(1)]).amps, [0, 0, 1, 0])
    bell = sim.prepare(2).run([sim.h(0), sim.mcx([0], 1)]).amps
    assert np.allclose(bell, np.array([1, 0, 0, 1]) / np.sqrt(2))


def test_negative_polarity_control():
    st0 = sim.prepare(2).run([sim.mcx([(0, 0)], 1)])
    assert np.allclose(st0.amps, [0, 0, 1, 0])


def test_rz_two_pi_is_minus_one():
    assert np.allclose(sim.rz(2 * np.pi, 0).unitary(), -np.eye(2))


def test_gate_validation():
    with pytest.raises(ValueError):
        sim.mcx([0], 0)
    with pytest.raises(ValueError):
        sim.unitary_gate(np.eye(3), [0, 1])


def test_unitary_guard():
    with pytest.raises(ValueError):
        sim.circuit_unitary([], sim.MAX_UNITARY_WIDTH + 1)


def test_state_preparation_first_column(rng):
    vec = random_state(rng, 8)
    u = sim.state_preparation_unitary(vec)
    assert np.allclose(u[:, 0], vec)
    assert np.allclose(u.conj().T @ u, np.eye(8))


def test_increment_circuit_counts_up():
    for start in range(8):
        amps = np.zeros(8, complex)
        amps[start] = 1
        out = sim.StateVector(3, amps).run(sim.binary_increment_circuit([0, 1, 2])).amps
        assert out[(start + 1) % 8] == pytest.approx(1)


@pytest.mark.parametrize("m,dim", CASES)
def test_term_circuits_match_direct_action(m, dim, rng):
    width = m * dim + 1
    for lab in decomp.all_labels(m, dim):
        tc = sim.synthesize_term_circuit(lab, m, dim)
        assert len(tc.ancillas_used) <= m + 2
        state = sim.StateVector(width, random_state(rng, 1 << width))
        main, leftover = sim.split_ancilla(sim.run_term_circuit(state, tc), width)
        ref = sim.apply_term_direct(state, lab, m, dim).amps
        assert np.max(np.abs(main - ref)) < 1e-10, str(lab)
        assert leftover < 1e-10


@pytest.mark.parametrize("m,dim", [(2, 1), (1, 2)])
def test_controlled_term_circuit_unitary(m, dim):
    lay = sim.CircuitLayout(m, dim, hadamard_ancilla=True)
    if lay.width > sim.MAX_UNITARY_WIDTH:
        pytest.skip("layout too wide for a dense unitary")
    for lab in decomp.all_labels(m, dim):
        tc = sim.synthesize_term_circuit(lab, m, dim)
        for full in (False, True):
            u = sim.circuit_unitary(tc.controlled_gates(lay.hadamard, full), lay.width)
            main = 1 << (m * dim + 1)
            ctrl = 1 << lay.hadamard
            g = decomp.make_term(lab, m, dim).matrix()
            assert np.allclose(u[:main, :main], np.eye(main))
            assert np.allclose(u[ctrl:ctrl + main, ctrl:ctrl + main], g)


def test_export_gates_text():
    tc = sim.synthesize_term_circuit(decomp.label("G_PLUS1", -1), 2, 1)
    text = sim.export_gates(tc.gates)
    assert len(text.strip().splitlines()) == len(tc.gates)
    assert "RZ" in text


@settings(max_examples=50, deadline=None)
@given(data=st.data())
def test_random_circuit_inverse_restores_state(data):
    width = data.draw(st.integers(2, 5))
    qubit = st.integers(0, width - 1)
    gates = []
    for _ in range(data.draw(st.integers(1, 12))):
        kind = data.draw(st.sampled_from(["h", "x", "rz", "mcx"]))
        t = data.draw(qubit)
        if kind == "mcx":
            c = data.draw(qubit.filter(lambda q: q != t))
            gates.append(sim.mcx([(c, data.draw(st.integers(0, 1)))], t))
        elif kind == "rz":
            gates.append(sim.rz(data.draw(st.floats(-7, 7)), t))
        else:
            gates.append(getattr(sim, kind)(t))
    seed = data.draw(st.integers(0, 1000))
    vec = random_state(np.random.default_rng(seed), 1 << width)
    state = sim.StateVector(width, vec)
    forward = state.copy().run(gates)
    assert abs(forward.norm() - 1) < 1e-12
    assert np.allclose(forward.run(sim.inverse(gates)).amps, vec)


@settings(max_examples=40, deadline=None)
@given(width=st.integers(2, 5), data=st.data())
def test_apply_gate_matches_dense_unitary(width, data):
    t = data.draw(st.integers(0, width - 1))
    c = data.draw(st.integers(0, width - 1).filter(lambda q: q != t))
    gate = sim.mcx([c], t)
    u = sim.circuit_unitary([gate], width)
    vec = random_state(np.random.default_rng(data.draw(st.integers(0, 99))), 1 << width)
    assert np.allclose(sim.StateVector(width, vec).apply(gate).amps, u @ vec)
