import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisson_vqa import estimator as est, grid, vqa

PAULI = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
         "Z": np.diag([1.0, -1.0])}


def pauli_string(ops: dict[int, str], m: int) -> np.ndarray:
    out = np.eye(1)
    for q in reversed(range(m)):  # qubit 0 is least significant
        out = np.kron(out, PAULI[ops.get(q, "I")])
    return out


def rotation(ops, angle, m):
    p = pauli_string(ops, m)
    return np.cos(angle) * np.eye(1 << m) - 1j * np.sin(angle) * p


def reference_state(theta, m, depth):
    psi = np.full(1 << m, 2 ** (-m / 2), dtype=complex)
    layers = np.asarray(theta).reshape(depth, 2 * m + 1)
    ring = [(j, j + 1) for j in range(m - 1)] + [(m - 1, 0)]
    for layer in layers:
        beta, gamma, gamma_y = layer[:m], layer[m:2 * m], layer[2 * m]
        for (a, b), g in zip(ring, gamma):
            psi = rotation({a: "Z", b: "Z"}, g, m) @ psi
        psi = rotation({0: "Y", 1: "Y"}, gamma_y, m) @ psi
        for j in range(m):
            psi = rotation({j: "X"}, beta[j], m) @ psi
    return psi


@settings(max_examples=25, deadline=None)
@given(m=st.integers(2, 5), depth=st.integers(1, 3), seed=st.integers(0, 10 ** 6))
def test_ansatz_matches_pauli_rotation_reference(m, depth, seed):
    theta = np.random.default_rng(seed).uniform(0, 2 * np.pi, depth * (2 * m + 1))
    assert np.allclose(vqa.ansatz_states(theta, m, depth), reference_state(theta, m, depth))


def test_zero_parameters_give_uniform_state():
    psi = vqa.AnsatzParams.zeros(3, 2).state()
    assert np.allclose(psi, np.full(8, 8 ** -0.5))


def test_batched_states_match_single(rng):
    thetas = rng.uniform(0, 6, (4, 2 * 7))
    batch = vqa.ansatz_states(thetas, 3, 2)
    for row, psi in zip(thetas, batch):
        assert np.allclose(vqa.ansatz_states(row, 3, 2), psi)


@settings(max_examples=30, deadline=None)
@given(m=st.integers(2, 5), depth=st.integers(1, 4), seed=st.integers(0, 999))
def test_parameter_vector_roundtrip(m, depth, seed):
    vec = np.random.default_rng(seed).normal(size=depth * (2 * m + 1))
    params = vqa.AnsatzParams.from_vector(vec, m, depth)
    assert params.gamma.shape == (depth, m + 1) and params.beta.shape == (depth, m)
    assert np.array_equal(params.to_vector(), vec)


def test_tied_expansion_matches_tied_params():
    cfg = vqa.AnsatzConfig(3, 2, tied=True)
    assert cfg.n_params == 4
    free = np.array([0.1, 0.2, 0.3, 0.4])  # (beta, gamma) per layer
    full = cfg.expand(free)
    tied = vqa.AnsatzParams.tied(gammas=[0.2, 0.4], betas=[0.1, 0.3], m=3)
    assert np.allclose(full, tied.to_vector())


def test_ansatz_config_validation():
    with pytest.raises(ValueError):
        vqa.AnsatzConfig(1, 1)
    with pytest.raises(ValueError):
        vqa.AnsatzConfig(2, 0)


def test_fidelity_bounds_and_checks():
    a = np.array([1, 0], complex)
    b = np.array([1, 1], complex) / np.sqrt(2)
    assert vqa.fidelity(a, b) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        vqa.fidelity(a, np.array([1, 1]))


def test_finite_difference_gradient_of_quadratic():
    weights = np.array([1.0, 2.0, -3.0])
    fn = lambda pts: np.sum(weights * np.atleast_2d(pts) ** 2, axis=-1)
    theta = np.array([0.5, -1.0, 2.0])
    assert np.allclose(vqa.loss_gradient(theta, fn), 2 * weights * theta, atol=1e-7)
    assert np.allclose(vqa.loss_gradient(theta, lambda p: fn(p)[0], batched=False),
                       2 * weights * theta, atol=1e-7)


def test_padding_preserves_state(rng):
    small, big = vqa.AnsatzConfig(3, 1), vqa.AnsatzConfig(3, 3)
    theta = rng.uniform(0, 6, small.n_params)
    padded = vqa.pad_parameters(theta, small, big)
    assert np.allclose(vqa.ansatz_states(padded, 3, 3), vqa.ansatz_states(theta, 3, 1))


def test_m2_reaches_solution_fidelity():
    spec = grid.make_spec(2)
    rep = vqa.optimize(spec, vqa.AnsatzConfig(2, 2), vqa.OptimizerConfig(restarts=3, seed=7), est.DENSE)
    assert rep.best_fidelity > 0.99
    assert rep.best_loss == min(r.loss for r in rep.restarts)
    # the classical target is (2, 3, 3, 2) / sqrt(26)
    psi = vqa.ansatz_states(rep.best_params, 2, 2)
    assert abs(np.vdot(np.array([2, 3, 3, 2]) / np.sqrt(26), psi)) ** 2 == pytest.approx(rep.best_fidelity)


def test_trajectories_are_monotone_under_line_search():
    rep = vqa.optimize(grid.make_spec(3), vqa.AnsatzConfig(3, 2),
                       vqa.OptimizerConfig(restarts=2, max_iter=60), est.DENSE)
    for r in rep.restarts:
        losses = [entry[1] for entry in r.trajectory]
        assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))


def test_dense_and_exact_modes_give_same_trajectory():
    spec, ansatz = grid.make_spec(2), vqa.AnsatzConfig(2, 2)
    cfg = vqa.OptimizerConfig(restarts=2, max_iter=80, seed=7)
    a = vqa.optimize(spec, ansatz, cfg, est.DENSE)
    b = vqa.optimize(spec, ansatz, cfg, est.EXACT)
    ra, rb = np.array(list(a.rows())), np.array(list(b.rows()))
    assert ra.shape == rb.shape
    assert np.max(np.abs(ra - rb)) < 1e-8


def test_parallel_restarts_are_deterministic():
    spec, ansatz = grid.make_spec(2), vqa.AnsatzConfig(2, 1)
    cfg = vqa.OptimizerConfig(restarts=3, max_iter=20, seed=5)
    serial = vqa.optimize(spec, ansatz, cfg, est.SHOTS(200))
    parallel = vqa.optimize(spec, ansatz, vqa.OptimizerConfig(restarts=3, max_iter=20, seed=5, workers=2),
                            est.SHOTS(200))
    assert list(serial.rows()) == list(parallel.rows())


def test_depth_sweep_monotone_best_loss():
    rows = vqa.depth_sweep(grid.make_spec(3), [1, 2, 3], vqa.OptimizerConfig(restarts=3, max_iter=150))
    losses = [r.report.best_loss for r in rows]
    assert all(b <= a for a, b in zip(losses, losses[1:]))


def test_tied_mode_optimizes():
    rep = vqa.optimize(grid.make_spec(2), vqa.AnsatzConfig(2, 2, tied=True),
                       vqa.OptimizerConfig(restarts=2, max_iter=100), est.DENSE)
    assert rep.best.theta.shape == (4,)
    assert rep.best_loss < rep.best.trajectory[0][1]


@settings(max_examples=20, deadline=None)
@given(m=st.integers(2, 4), depth=st.integers(1, 3), seed=st.integers(0, 999))
def test_tied_states_equal_untied_with_equal_angles(m, depth, seed):
    cfg = vqa.AnsatzConfig(m, depth, tied=True)
    free = np.random.default_rng(seed).uniform(0, 2 * np.pi, cfg.n_params)
    layers = free.reshape(depth, 2)
    untied = vqa.AnsatzParams.tied(gammas=layers[:, 1], betas=layers[:, 0], m=m)
    assert np.allclose(vqa.ansatz_states(cfg.expand(free), m, depth), untied.state(), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(m=st.integers(2, 4), index=st.integers(0, 100), seed=st.integers(0, 999))
def test_state_is_two_pi_periodic_in_each_angle(m, index, seed):
    depth = 2
    theta = np.random.default_rng(seed).uniform(0, 2 * np.pi, depth * (2 * m + 1))
    shifted = theta.copy()
    shifted[index % theta.size] += 2 * np.pi
    assert np.max(np.abs(vqa.ansatz_states(theta, m, depth) - vqa.ansatz_states(shifted, m, depth))) < 1e-10


def test_orthogonal_fidelity_is_zero():
    assert vqa.fidelity(np.array([1, 0j]), np.array([0, 1j])) == 0.0


def test_gradient_vanishes_at_constructed_minimum():
    problem = vqa.Problem(grid.make_spec(2), vqa.AnsatzConfig(2, 1), est.DENSE)
    # a bowl with a known minimum, then the optimizer end point of the real loss
    theta0 = np.linspace(0.1, 0.5, 5)
    bowl = lambda pts: np.sum((np.atleast_2d(pts) - theta0) ** 2, axis=-1)
    assert np.linalg.norm(vqa.loss_gradient(theta0, bowl)) <= 10 * 1e-8
    rep = vqa.optimize(problem.spec, problem.ansatz, vqa.OptimizerConfig(restarts=1, seed=7), est.DENSE)
    scale = max(1.0, np.max(np.abs(problem.evaluator.dense_matrices()[2])))
    assert np.linalg.norm(vqa.loss_gradient(rep.best_params, problem.loss)) <= 1e-3 * scale


def test_gradient_step_size_consistency(rng):
    problem = vqa.Problem(grid.make_spec(2), vqa.AnsatzConfig(2, 1), est.DENSE)
    theta = rng.uniform(0, 2 * np.pi, 5)
    g5 = vqa.loss_gradient(theta, problem.loss, 1e-5)
    g6 = vqa.loss_gradient(theta, problem.loss, 1e-6)
    assert np.linalg.norm(g5 - g6) <= 1e-4 * np.linalg.norm(g6)


def test_gradient_same_in_dense_and_exact_modes(rng):
    spec, ansatz = grid.make_spec(3, 1, 1.0, 2.0, 0.0, 1.0), vqa.AnsatzConfig(3, 2)
    theta = rng.uniform(0, 2 * np.pi, ansatz.n_params)
    g_dense = vqa.loss_gradient(theta, vqa.Problem(spec, ansatz, est.DENSE).loss)
    g_exact = vqa.loss_gradient(theta, vqa.Problem(spec, ansatz, est.EXACT).loss)
    assert np.max(np.abs(g_dense - g_exact)) < 1e-8


def test_single_restart_bit_identical():
    args = (grid.make_spec(3), vqa.AnsatzConfig(3, 1), vqa.OptimizerConfig(restarts=1, max_iter=30, seed=11))
    a, b = vqa.optimize(*args), vqa.optimize(*args)
    assert list(a.rows()) == list(b.rows())
    assert np.array_equal(a.best_params, b.best_params)


def test_line_search_loss_bound_and_fixed_step_mode():
    spec, ansatz = grid.make_spec(3), vqa.AnsatzConfig(3, 1)
    rep = vqa.optimize(spec, ansatz, vqa.OptimizerConfig(restarts=2, max_iter=50, seed=2))
    for r in rep.restarts:
        losses = [t[1] for t in r.trajectory]
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
    fixed = vqa.optimize(spec, ansatz, vqa.OptimizerConfig(restarts=1, max_iter=5, lr=0.01, backtracking=False))
    assert len(fixed.best.trajectory) == 6


def test_ansatz_parameter_count():
    for m in range(2, 6):
        for depth in range(1, 5):
            assert vqa.AnsatzConfig(m, depth).n_params == depth * (2 * m + 1)
    assert vqa.AnsatzConfig(2, 1).n_params == 5
