"""Command-line front end.

Subcommands: ``verify``, ``run``, ``sweep``, ``spectrum`` and ``convergence``.
Options may also come from a flat ``key=value`` file given with ``--config``;
explicit flags override it. CSV goes to ``--output``, else to
``$POISSON_VQA_OUTPUT_DIR/<subcommand>.csv`` when that variable is set, else
to stdout. Summary lines go to stderr.

Exit codes: 0 success, 1 invariant failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import decomp, grid, oracle, simulator, vqa
from .estimator import parse_mode

OUTPUT_DIR_ENV = "POISSON_VQA_OUTPUT_DIR"
MAX_VERIFY_WIDTH = 12
MAX_CIRCUIT_WIDTH = 20
EXIT_OK, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("poisson_vqa")


class UsageError(Exception):
    pass


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def parse_int_range(text: str) -> list[int]:
    """``"3..7"`` (inclusive), ``"2,3,5"`` or a single integer."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
            if hi < lo:
                raise UsageError(f"empty range {text!r}")
            return list(range(lo, hi + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer range {text!r}") from exc


def read_config(path: str) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment. Dashes in keys become underscores."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _truthy(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters shared by ``run`` and ``sweep``."""
    m: int = 2
    dim: int = 1
    alpha1: float = 0.0
    alpha2: float = 1.0
    beta1: float = 0.0
    beta2: float = 1.0
    depth: int = 2
    restarts: int = 10
    lr: float = 0.1
    iterations: int = 500
    seed: int = 0
    mode: str = "exact-ht"
    tied: bool = False
    workers: int = 1

    def spec(self, m: Optional[int] = None) -> grid.ProblemSpec:
        return grid.make_spec(m or self.m, self.dim, self.alpha1, self.alpha2, self.beta1, self.beta2)

    def optimizer(self) -> vqa.OptimizerConfig:
        return vqa.OptimizerConfig(restarts=self.restarts, max_iter=self.iterations, lr=self.lr,
                                   seed=self.seed, workers=self.workers)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        names = cls.__dataclass_fields__
        return cls(**{k: v for k, v in vars(args).items() if k in names and v is not None})


# ---------------------------------------------------------------------------
# verify


@dataclass
class Check:
    name: str
    residual: float
    ok: bool
    detail: str = ""


def _corrupt_sign(op: decomp.SignedPermutationOp) -> decomp.TabulatedOp:
    # flipping one end of a two-element orbit breaks sign symmetry
    moved = np.nonzero(op.perm_table != np.arange(op.perm_table.size))[0]
    sign = op.sign_table.copy()
    sign[moved[0]] = -sign[moved[0]]
    return decomp.TabulatedOp(op.width, op.perm_table, sign)


def verify_suite(m: int, dim: int, c: float, d_r: float, corrupt: Optional[str] = None,
                 seed: int = 0) -> tuple[list[Check], dict[str, simulator.TermCircuit]]:
    width = m * dim + 1
    if width > MAX_VERIFY_WIDTH:
        raise UsageError(f"m*dim + 1 = {width} exceeds the dense guard {MAX_VERIFY_WIDTH}")
    if m * dim + m + 3 > MAX_CIRCUIT_WIDTH:
        raise UsageError("circuit layout would exceed the statevector guard")
    if dim > 1 and (c != 0.0 or d_r != 0.0):
        raise UsageError("dim >= 2 supports Dirichlet boundaries only (c = d = 0)")
    labels = decomp.all_labels(m, dim)
    checks: list[Check] = []

    bad = []
    for i, lab in enumerate(labels):
        op = decomp.make_term(lab, m, dim)
        if corrupt == "sign" and i == len(labels) - 1:
            op = _corrupt_sign(op)
        if not decomp.verify_term_properties(op).ok:
            bad.append(str(lab))
    checks.append(Check("term-properties", float(len(bad)), not bad,
                        f"{len(labels)} labels" + (f"; failing {', '.join(bad)}" if bad else "")))

    if dim == 1:
        a = grid.tridiagonal(1 << m, c, d_r)
        pairs = [("reassembly-A", decomp.decompose_A_1d(m, c, d_r), decomp.sigma_x_kron(a)),
                 ("reassembly-A2", decomp.decompose_A2_1d(m, c, d_r), decomp.sigma_x_kron(a @ a))]
    else:
        a = grid.build_matrix(grid.make_spec(m, dim))
        target = decomp.sigma_x_kron(a)
        pairs = [("reassembly-A", decomp.decompose_Ad(m, dim), target),
                 ("reassembly-A2", decomp.expand_Ad_squared(m, dim), target @ target)]
    for name, dec, target in pairs:
        if corrupt == "coefficient" and name == "reassembly-A":
            dec = replace(dec, terms=[(coef * 1.01, lab) for coef, lab in dec.terms])
        res = float(np.max(np.abs(decomp.materialize(dec) - target)))
        checks.append(Check(name, res, res < 1e-12, f"{len(dec)} items"))

    rng = np.random.default_rng(seed)
    worst, leftover, most_anc = 0.0, 0.0, 0
    circuits: dict[str, simulator.TermCircuit] = {}
    for i, lab in enumerate(labels):
        tc = simulator.synthesize_term_circuit(lab, m, dim)
        if corrupt == "gate" and i == len(labels) - 1:
            tc = replace(tc, swap=tc.swap[:-1] if tc.swap else [], phase=[])
        circuits[str(lab)] = tc
        most_anc = max(most_anc, len(tc.ancillas_used))
        vec = rng.normal(size=1 << width) + 1j * rng.normal(size=1 << width)
        state = simulator.StateVector(width, vec / np.linalg.norm(vec))
        out, rest = simulator.split_ancilla(simulator.run_term_circuit(state, tc), width)
        ref = simulator.apply_term_direct(state, lab, m, dim).amps
        worst = max(worst, float(np.max(np.abs(out - ref))))
        leftover = max(leftover, rest)
    checks.append(Check("circuit-equivalence", worst, worst < 1e-10, f"{len(labels)} circuits"))
    checks.append(Check("ancilla-restored", leftover, leftover < 1e-10, ""))
    checks.append(Check("ancilla-count", float(most_anc), most_anc <= m + 2, f"bound {m + 2}"))
    return checks, circuits


def cmd_verify(args) -> int:
    checks, circuits = verify_suite(args.m, args.dim, args.c, args.d, args.corrupt, args.seed)
    for ch in checks:
        status = "ok" if ch.ok else "FAIL"
        print(f"{ch.name}: {status} max_residual={fmt(ch.residual)} {ch.detail}".rstrip())
    if args.export_gates:
        blocks = [f"# {name}\n{simulator.export_gates(tc.gates)}" for name, tc in circuits.items()]
        _write_text(args.export_gates, "\n".join(blocks) + "\n")
    failed = [ch.name for ch in checks if not ch.ok]
    if failed:
        print(f"verify failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiments


def _write_text(path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def _emit_csv(args, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    target = args.output
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        target = Path(os.environ[OUTPUT_DIR_ENV]) / f"{args.command}.csv"
    if target is None:
        sys.stdout.write(buf.getvalue())
    else:
        _write_text(target, buf.getvalue())
        log.info("wrote %s", target)


def _summary(text: str) -> None:
    print(text, file=sys.stderr)


def _mode(cfg: RunConfig):
    try:
        return parse_mode(cfg.mode, cfg.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def run_experiment(cfg: RunConfig) -> vqa.RunReport:
    spec = cfg.spec()
    return vqa.optimize(spec, vqa.AnsatzConfig(spec.N, cfg.depth, cfg.tied), cfg.optimizer(), _mode(cfg))


def cmd_run(args) -> int:
    cfg = RunConfig.from_args(args)
    report = run_experiment(cfg)
    _emit_csv(args, ("restart", "iter", "loss", "fidelity"), report.rows())
    _summary(f"best restart={report.best_index} loss={fmt(report.best_loss)} "
             f"fidelity={fmt(report.best_fidelity)}")
    return EXIT_OK


def sweep_table(cfg: RunConfig, ms: Sequence[int], depths: Sequence[int],
                warm_start: bool = True) -> list[tuple[int, int, float, float]]:
    table = []
    mode = _mode(cfg)
    for m in ms:
        for row in vqa.depth_sweep(cfg.spec(m), depths, cfg.optimizer(), mode, cfg.tied, warm_start):
            log.info("m=%d depth=%d loss=%.3e", m, row.depth, row.report.best_loss)
            table.append((m, row.depth, row.report.best_loss, row.report.best_fidelity))
    return table


def cmd_sweep(args) -> int:
    cfg = RunConfig.from_args(args)
    table = sweep_table(cfg, parse_int_range(args.m_range), parse_int_range(args.depths),
                        not args.no_warm_start)
    _emit_csv(args, ("m", "depth", "best_loss", "best_fidelity"), table)
    best = max(table, key=lambda r: r[3])
    _summary(f"max fidelity={fmt(best[3])} at m={best[0]} depth={best[1]}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    spec = grid.make_spec(args.m, args.dim)
    if spec.N > oracle.MAX_SPECTRUM_WIDTH:
        raise UsageError(f"spectrum limited to N <= {oracle.MAX_SPECTRUM_WIDTH}")
    rep = oracle.poisson_spectrum(spec)
    _emit_csv(args, ("index", "eigenvalue"), ((i, float(w)) for i, w in enumerate(rep.eigenvalues)))
    zero = abs(rep.eigenvalues[0]) <= 1e-10
    _summary(f"ground index=0 eigenvalue={fmt(rep.eigenvalues[0])}{' (zero)' if zero else ''}")
    _summary(f"lambda_1={fmt(rep.lambda_1)} lambda_max={fmt(rep.eigenvalues[-1])} ratio={fmt(rep.ratio)}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    levels = parse_int_range(args.levels)
    if not levels or min(levels) < 1 or max(levels) > 14:
        raise UsageError("levels must lie in 1..14")
    rows = oracle.convergence_study(lambda x: np.pi ** 2 * np.sin(np.pi * x),
                                    lambda x: np.sin(np.pi * x), levels)
    _emit_csv(args, ("m", "n", "max_error", "observed_order"),
              ((r.m, r.n, r.max_error, r.observed_order) for r in rows))
    orders = [r.observed_order for r in rows[1:]]
    if orders:
        _summary(f"observed order min={fmt(min(orders))} max={fmt(max(orders))}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_problem(p: argparse.ArgumentParser, m_flag: bool = True) -> None:
    if m_flag:
        p.add_argument("--m", type=int, default=2, help="qubits per axis (n = 2**m)")
    p.add_argument("--dim", type=int, default=1)
    for name, default in (("alpha1", 0.0), ("alpha2", 1.0), ("beta1", 0.0), ("beta2", 1.0)):
        p.add_argument(f"--{name}", type=float, default=default)


def _add_optimizer(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", default="exact-ht", help="dense, exact-ht or shots:M")
    p.add_argument("--tied", action="store_true", help="share angles within each layer")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poisson-vqa", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value file merged under the flags")
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="term, reassembly and circuit invariants")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--c", type=float, default=0.0, help="left corner coefficient")
    p.add_argument("--d", type=float, default=0.0, help="right corner coefficient")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--export-gates", metavar="PATH", help="write the term circuits as text")
    p.add_argument("--corrupt", choices=("sign", "coefficient", "gate"),
                   help="debug: break one invariant on purpose")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="optimize one configuration")
    _add_problem(p)
    p.add_argument("--depth", type=int, default=2)
    _add_optimizer(p)
    p.add_argument("--output", help="CSV path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="best loss and fidelity over sizes and depths")
    p.add_argument("--m", dest="m_range", default="2", help="e.g. 2,3 or 2..4")
    _add_problem(p, m_flag=False)
    p.add_argument("--depth", dest="depths", default="1..4", help="e.g. 1..4")
    _add_optimizer(p)
    p.add_argument("--no-warm-start", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", help="eigenvalues of the loss Hamiltonian")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--output")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("convergence", help="discretization error against sin(pi x)")
    p.add_argument("--levels", default="3..7")
    p.add_argument("--output")
    p.set_defaults(func=cmd_convergence)
    return parser


def _apply_config(parser: argparse.ArgumentParser, command: str, values: dict[str, str]) -> None:
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sub = subparsers.choices[command]
    actions = {a.dest: a for a in sub._actions}
    # config keys may use the flag name ("m", "depth") even where dest differs
    aliases = {opt.lstrip("-").replace("-", "_"): a.dest for a in sub._actions for opt in a.option_strings}
    defaults = {}
    for key, value in values.items():
        dest = aliases.get(key, key)
        if dest not in actions or dest in ("help", "func"):
            raise UsageError(f"unknown config key {key!r} for {command}")
        action = actions[dest]
        defaults[dest] = _truthy(value) if action.nargs == 0 else value
    sub.set_defaults(**defaults)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.config:
            parser = build_parser()
            _apply_config(parser, args.command, read_config(args.config))
            args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
