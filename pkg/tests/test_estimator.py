import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisson_vqa import decomp, estimator as est, grid
from poisson_vqa.decomp import label

from conftest import random_state

BOUNDARIES = [(0.0, 1.0, 0.0, 1.0), (1.0, 0.0, 0.0, 1.0), (1.0, 2.0, 0.5, 3.0)]


def spec_for(m, boundary, dim=1):
    return grid.make_spec(m, dim, *boundary)


def dense_value(lab_seq, m, dim, ket, bra):
    """<+|<bra| G_1...G_k |+>|ket> from dense term matrices."""
    plus = np.ones(2) / np.sqrt(2)
    vec = np.kron(plus, ket)
    for lab in reversed(lab_seq):
        vec = decomp.make_term(lab, m, dim).matrix() @ vec
    return np.vdot(np.kron(plus, bra), vec)


def test_parse_mode():
    assert est.parse_mode("dense") == est.DENSE
    assert est.parse_mode("exact-ht") == est.EXACT
    assert est.parse_mode("shots:250").shots == 250
    for bad in ("shots:0", "shots:x", "fast"):
        with pytest.raises(ValueError):
            est.parse_mode(bad)


def test_hadamard_test_on_generic_gate_target():
    from poisson_vqa import simulator as sim
    # <0|H|0> = 1/sqrt(2); <0|RZ(t)|0> = exp(-i t / 2)
    assert est.hadamard_test(est.GateTarget([sim.h(0)], 1), backend="circuit").estimate \
        == pytest.approx(1 / np.sqrt(2))
    z = est.hadamard_test(est.GateTarget([sim.rz(0.8, 0)], 1), backend="circuit").estimate
    assert z == pytest.approx(np.exp(-0.4j))


def test_dense_mode_rejected_by_hadamard_test(rng):
    t = est.TermTarget(1, 1, (label("G0"),), random_state(rng, 2), random_state(rng, 2))
    with pytest.raises(ValueError):
        est.hadamard_test(t, est.DENSE)


@pytest.mark.parametrize("m,dim", [(1, 1), (2, 1), (3, 1), (1, 2)])
@pytest.mark.parametrize("backend", ["direct", "circuit"])
def test_exact_items_match_inner_products(m, dim, backend, rng):
    n_amp = 1 << (m * dim)
    psi, b = random_state(rng, n_amp), random_state(rng, n_amp)
    for lab in decomp.all_labels(m, dim):
        got = est.expectation_psi_G_psi(psi, lab, m, dim, backend=backend)
        assert abs(got - dense_value([lab], m, dim, psi, psi)) < 1e-12
        got = est.overlap_b_G_psi(b, psi, lab, m, dim, backend=backend)
        assert abs(got - dense_value([lab], m, dim, psi, b)) < 1e-12
    if dim > 1:
        labs = decomp.all_labels(m, dim)
        got = est.expectation_psi_GG_psi(psi, labs[1], labs[2], m, dim, backend=backend)
        assert abs(got - dense_value([labs[1], labs[2]], m, dim, psi, psi)) < 1e-12


def test_uniform_preparation_path_matches_injection():
    m = 2
    uniform = np.full(4, 0.5)
    for lab in decomp.all_labels(m):
        z = est.expectation_psi_G_psi(uniform, lab, m, backend="circuit")
        assert abs(z - dense_value([lab], m, 1, uniform, uniform)) < 1e-12


def test_identical_pair_rejected(rng):
    g = label("GD0")
    with pytest.raises(ValueError):
        est.expectation_psi_GG_psi(random_state(rng, 4), g, g, 1, 2)


@pytest.mark.parametrize("shots", [100, 1000, 10000])
def test_shot_noise_rms(shots, rng):
    psi, b = random_state(rng, 8), random_state(rng, 8)
    lab = label("G_PLUS1", -1)
    exact = est.overlap_b_G_psi(b, psi, lab, 3)
    errs = [est.overlap_b_G_psi(b, psi, lab, 3, 1, est.SHOTS(shots, seed)) - exact for seed in range(100)]
    rms = np.sqrt(np.mean(np.abs(errs) ** 2))
    assert rms <= 3 / np.sqrt(shots)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_decomposed_loss_equals_dense(m, boundary):
    spec = spec_for(m, boundary)
    exact, dense = est.LossEvaluator(spec, est.EXACT), est.LossEvaluator(spec, est.DENSE)
    gen = np.random.default_rng(m)
    states = np.stack([random_state(gen, spec.size) for _ in range(20)])
    assert np.max(np.abs(exact(states) - dense(states))) < 1e-10


@pytest.mark.parametrize("m", [1, 2])
def test_decomposed_loss_equals_dense_ddim(m):
    spec = grid.make_spec(m, 2)
    exact, dense = est.LossEvaluator(spec, est.EXACT), est.LossEvaluator(spec, est.DENSE)
    gen = np.random.default_rng(10 + m)
    states = np.stack([random_state(gen, spec.size) for _ in range(20)])
    assert np.max(np.abs(exact(states) - dense(states))) < 1e-10


@pytest.mark.parametrize("spec", [grid.make_spec(2, 1, 1.0, 2.0, 0.5, 3.0), grid.make_spec(1, 2)])
def test_circuit_backend_loss(spec, rng):
    psi = random_state(rng, spec.size)
    circuit = est.loss(psi, spec, backend="circuit").loss
    assert abs(circuit - est.LossEvaluator(spec, est.DENSE)(psi)) < 1e-10


def test_loss_vanishes_at_classical_solution():
    spec = grid.make_spec(3, 1, 1.0, 2.0, 0.0, 1.0)
    a = grid.build_matrix(spec)
    x = np.linalg.solve(a, grid.build_rhs(spec)[1])
    rep = est.loss_1d(x / np.linalg.norm(x), spec)
    assert abs(rep.loss) < 1e-12
    assert len(rep.overlap_items) == 6 and len(rep.expectation_items) == 13


def test_loss_report_item_counts_dirichlet():
    spec = grid.make_spec(3)
    rep = est.loss_1d(np.full(8, 8 ** -0.5), spec)
    assert len(rep.overlap_items) == 5 and len(rep.expectation_items) == 11
    rep2 = est.loss_ddim(np.full(16, 0.25), grid.make_spec(2, 2))
    assert len(rep2.overlap_items) == 9 and len(rep2.expectation_items) == 72


def test_shot_mode_reseedable():
    spec = grid.make_spec(2)
    ev = est.LossEvaluator(spec, est.SHOTS(50))
    psi = np.full(4, 0.5)
    ev.reseed(np.random.default_rng(3))
    first = ev(psi)
    ev.reseed(np.random.default_rng(3))
    assert ev(psi) == first


@settings(max_examples=30, deadline=None)
@given(m=st.integers(1, 4), seed=st.integers(0, 10 ** 6),
       alpha2=st.floats(0.0, 5.0), beta2=st.floats(0.1, 5.0))
def test_loss_is_nonnegative_and_matches_dense(m, seed, alpha2, beta2):
    spec = grid.make_spec(m, 1, 1.0, alpha2, 1.0, beta2)
    psi = random_state(np.random.default_rng(seed), spec.size)
    val = est.LossEvaluator(spec, est.EXACT)(psi)
    assert val >= -1e-10
    assert abs(val - est.LossEvaluator(spec, est.DENSE)(psi)) < 1e-9 * max(1.0, abs(val))
