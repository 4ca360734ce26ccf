"""Variational ansatz and the restart-based gradient-descent driver.

Each layer applies ``U_D(gamma)`` then ``U_M(beta)``. ``U_D`` is taken as the
ordered product ``exp(-i g_0 Z0Z1) ... exp(-i g_{m-2} Z_{m-2}Z_{m-1})
exp(-i g_{m-1} Z_{m-1}Z0) exp(-i g_y Y0Y1)``: the ZZ ring commutes, but Y0Y1
does not commute with the ring terms touching qubits 0 and 1, so this order is
part of the ansatz definition. ``U_M`` is a product of commuting X rotations.

Flat parameter vectors follow ``(beta_1, gamma_1, ..., beta_p, gamma_p)``, each
layer holding ``m`` beta angles then ``m + 1`` gamma angles.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import grid, oracle
from .estimator import EXACT, EvalMode, LossEvaluator
from .simulator import StateVector


@dataclass(frozen=True)
class AnsatzConfig:
    m: int
    depth: int
    tied: bool = False

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("the ansatz needs m >= 2 (ring and Y0Y1 terms)")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")

    @property
    def layer_size(self) -> int:
        return 2 * self.m + 1

    @property
    def n_params(self) -> int:
        """Free parameters: 2 per layer when tied, else 2m + 1."""
        return self.depth * (2 if self.tied else self.layer_size)

    def expand(self, theta: np.ndarray) -> np.ndarray:
        """Map free parameters (..., n_params) to full untied vectors (..., depth*(2m+1))."""
        theta = np.asarray(theta, dtype=float)
        if not self.tied:
            return theta
        per_layer = theta.reshape(theta.shape[:-1] + (self.depth, 2))
        beta = np.repeat(per_layer[..., :1], self.m, axis=-1)
        gamma = np.repeat(per_layer[..., 1:], self.m + 1, axis=-1)
        full = np.concatenate([beta, gamma], axis=-1)
        return full.reshape(theta.shape[:-1] + (self.depth * self.layer_size,))


@dataclass
class AnsatzParams:
    gamma: np.ndarray  # (depth, m + 1); last column is the Y0Y1 angle
    beta: np.ndarray   # (depth, m)

    @property
    def depth(self) -> int:
        return self.beta.shape[0]

    @property
    def m(self) -> int:
        return self.beta.shape[1]

    @property
    def n_params(self) -> int:
        return self.depth * (2 * self.m + 1)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.beta, self.gamma], axis=1).reshape(-1)

    @classmethod
    def from_vector(cls, vec, m: int, depth: int) -> "AnsatzParams":
        layers = np.asarray(vec, dtype=float).reshape(depth, 2 * m + 1)
        return cls(gamma=layers[:, m:].copy(), beta=layers[:, :m].copy())

    @classmethod
    def zeros(cls, m: int, depth: int) -> "AnsatzParams":
        return cls(np.zeros((depth, m + 1)), np.zeros((depth, m)))

    @classmethod
    def tied(cls, gammas, betas, m: int) -> "AnsatzParams":
        gammas, betas = np.asarray(gammas, float), np.asarray(betas, float)
        return cls(np.repeat(gammas[:, None], m + 1, axis=1), np.repeat(betas[:, None], m, axis=1))

    def state(self) -> np.ndarray:
        return ansatz_states(self.to_vector(), self.m, self.depth)


@lru_cache(maxsize=None)
def _ansatz_tables(m: int):
    idx = np.arange(1 << m)
    z = 1 - 2 * ((idx[None, :] >> np.arange(m)[:, None]) & 1)
    pairs = [(j, j + 1) for j in range(m - 1)] + [(m - 1, 0)]
    zz = np.stack([z[a] * z[b] for a, b in pairs]).astype(float)
    yy_sign = np.where(((idx >> 0) & 1) == ((idx >> 1) & 1), -1.0, 1.0)
    flips = [idx ^ (1 << j) for j in range(m)]
    return zz, yy_sign, idx ^ 0b11, flips


def ansatz_states(theta: np.ndarray, m: int, depth: int) -> np.ndarray:
    """Ansatz states for one flat (untied) parameter vector or a batch of them."""
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    theta = np.atleast_2d(theta)
    if theta.shape[1] != depth * (2 * m + 1):
        raise ValueError(f"expected {depth * (2 * m + 1)} parameters, got {theta.shape[1]}")
    if m < 2:
        raise ValueError("the ansatz needs m >= 2")
    zz, yy_sign, yy_perm, flips = _ansatz_tables(m)
    layers = theta.reshape(theta.shape[0], depth, 2 * m + 1)
    psi = np.full((theta.shape[0], 1 << m), 2.0 ** (-m / 2), dtype=complex)
    for l in range(depth):
        beta = layers[:, l, :m]
        gamma = layers[:, l, m:2 * m]
        gamma_y = layers[:, l, 2 * m][:, None]
        psi = psi * np.exp(-1j * (gamma @ zz))
        psi = np.cos(gamma_y) * psi - 1j * np.sin(gamma_y) * (yy_sign * psi[:, yy_perm])
        for j in range(m):
            b = beta[:, j][:, None]
            psi = np.cos(b) * psi - 1j * np.sin(b) * psi[:, flips[j]]
    return psi[0] if single else psi


def ansatz_apply(params: AnsatzParams) -> StateVector:
    return StateVector(params.m, params.state())


def fidelity(psi, reference) -> float:
    psi, reference = np.asarray(psi), np.asarray(reference)
    if psi.shape != reference.shape:
        raise ValueError("fidelity needs states of equal width")
    for v in (psi, reference):
        if abs(np.linalg.norm(v) - 1.0) > 1e-8:
            raise ValueError("fidelity needs unit-norm states")
    return float(min(1.0, abs(np.vdot(reference, psi)) ** 2))


def loss_gradient(theta: np.ndarray, loss_fn: Callable, delta: float = 1e-4,
                  batched: bool = True) -> np.ndarray:
    """Central finite differences.

    With ``batched`` the loss is called once on the ``2P`` shifted points
    stacked as rows; otherwise it is called per point.
    """
    theta = np.asarray(theta, dtype=float)
    P = theta.size
    shifts = np.eye(P) * delta
    pts = np.concatenate([theta + shifts, theta - shifts])
    vals = np.asarray(loss_fn(pts)) if batched else np.array([loss_fn(p) for p in pts])
    return (vals[:P] - vals[P:]) / (2.0 * delta)


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 10
    max_iter: int = 500
    lr: float = 0.1
    delta: float = 1e-4
    seed: int = 0
    tol: float = 1e-10
    backtracking: bool = True
    armijo_c: float = 1e-4
    min_step: float = 1e-12
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")


@dataclass
class RestartResult:
    index: int
    trajectory: list[tuple[int, float, float]]
    theta: np.ndarray
    loss: float
    fidelity: float


@dataclass
class RunReport:
    restarts: list[RestartResult]
    best_index: int
    seed: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def best(self) -> RestartResult:
        return self.restarts[self.best_index]

    @property
    def best_loss(self) -> float:
        return self.best.loss

    @property
    def best_fidelity(self) -> float:
        return self.best.fidelity

    @property
    def best_params(self) -> np.ndarray:
        return self.best.theta

    def rows(self):
        for r in self.restarts:
            for it, loss, fid in r.trajectory:
                yield r.index, it, loss, fid


def restart_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


class Problem:
    """Bundles the loss evaluator and the classical reference for one spec."""

    def __init__(self, spec: grid.ProblemSpec, ansatz: AnsatzConfig, mode: EvalMode = EXACT):
        if ansatz.m != spec.N:
            raise ValueError("ansatz width must equal the solution register width")
        self.spec, self.ansatz, self.mode = spec, ansatz, mode
        self.evaluator = LossEvaluator(spec, mode)
        a = grid.build_matrix(spec)
        b_raw, b_state = grid.build_rhs(spec)
        self.reference = oracle.dense_solve(a, b_state).state

    def states(self, theta):
        return ansatz_states(self.ansatz.expand(theta), self.ansatz.m, self.ansatz.depth)

    def loss(self, theta):
        return self.evaluator(self.states(theta))

    def fidelity(self, theta) -> float:
        return fidelity(self.states(theta), self.reference)


def run_restart(problem: Problem, cfg: OptimizerConfig, index: int,
                initial: Optional[np.ndarray] = None) -> RestartResult:
    rng = restart_rng(cfg.seed, index)
    # shot noise gets its own per-restart stream so worker layout cannot change it
    problem.evaluator.reseed(np.random.default_rng([cfg.seed, index, 1]))
    theta = rng.uniform(0.0, 2.0 * np.pi, problem.ansatz.n_params)
    if initial is not None:
        theta = np.array(initial, dtype=float)
        if theta.shape != (problem.ansatz.n_params,):
            raise ValueError(f"initial point needs {problem.ansatz.n_params} parameters")
    loss = float(problem.loss(theta))
    traj = [(0, loss, problem.fidelity(theta))]
    for it in range(1, cfg.max_iter + 1):
        g = loss_gradient(theta, problem.loss, cfg.delta)
        step = cfg.lr
        gg = float(g @ g)
        while True:
            cand = theta - step * g
            cand_loss = float(problem.loss(cand))
            if not cfg.backtracking or cand_loss <= loss - cfg.armijo_c * step * gg:
                break
            step *= 0.5
            if step < cfg.min_step:
                cand, cand_loss = theta, loss
                break
        change = abs(loss - cand_loss)
        theta, loss = cand, cand_loss
        traj.append((it, loss, problem.fidelity(theta)))
        if change < cfg.tol:
            break
    return RestartResult(index, traj, theta, loss, traj[-1][2])


def _restart_job(args):
    spec, ansatz, mode, cfg, index, initial = args
    return run_restart(Problem(spec, ansatz, mode), cfg, index, initial)


def optimize(spec: grid.ProblemSpec, ansatz: AnsatzConfig, cfg: OptimizerConfig = OptimizerConfig(),
             mode: EvalMode = EXACT, initial: Optional[np.ndarray] = None) -> RunReport:
    """Gradient descent from ``cfg.restarts`` random starts in [0, 2 pi); keeps the lowest loss.

    Restart ``i`` draws from a stream seeded by ``(cfg.seed, i)``, so serial
    and parallel runs give the same report. A given ``initial`` point replaces
    the random start of restart 0.
    """
    t0 = time.perf_counter()
    starts = [initial] + [None] * (cfg.restarts - 1)
    if cfg.workers > 1:
        jobs = [(spec, ansatz, mode, cfg, i, starts[i]) for i in range(cfg.restarts)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_restart_job, jobs))
    else:
        problem = Problem(spec, ansatz, mode)
        results = [run_restart(problem, cfg, i, starts[i]) for i in range(cfg.restarts)]
    best = min(range(len(results)), key=lambda i: (results[i].loss, i))
    return RunReport(results, best, cfg.seed, time.perf_counter() - t0)


def pad_parameters(theta: np.ndarray, source: AnsatzConfig, target: AnsatzConfig) -> np.ndarray:
    """Embed parameters of a shallower ansatz by appending all-zero (identity) layers."""
    if source.m != target.m or source.tied != target.tied or target.depth < source.depth:
        raise ValueError("can only pad to a deeper ansatz of the same width and tying")
    extra = target.n_params - source.n_params
    return np.concatenate([np.asarray(theta, dtype=float), np.zeros(extra)])


@dataclass
class SweepRow:
    m: int
    depth: int
    report: RunReport


def depth_sweep(spec: grid.ProblemSpec, depths, cfg: OptimizerConfig = OptimizerConfig(),
                mode: EvalMode = EXACT, tied: bool = False, warm_start: bool = True) -> list[SweepRow]:
    """Optimize each depth in increasing order.

    With ``warm_start`` restart 0 at each depth begins from the previous best
    padded with identity layers; monotone line search then makes the best loss
    non-increasing in depth for exact losses.
    """
    rows: list[SweepRow] = []
    prev: Optional[tuple[AnsatzConfig, np.ndarray]] = None
    for depth in sorted(depths):
        ansatz = AnsatzConfig(spec.N, depth, tied)
        initial = pad_parameters(prev[1], prev[0], ansatz) if warm_start and prev else None
        report = optimize(spec, ansatz, cfg, mode, initial)
        rows.append(SweepRow(spec.N, depth, report))
        prev = (ansatz, report.best_params)
    return rows
