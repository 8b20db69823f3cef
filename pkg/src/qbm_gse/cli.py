"""Command-line runner: landscape, grad-check, estimate, train, complexity.

Settings come from built-in defaults, then an optional JSON ``--config``
file, then command-line flags (highest precedence). Every output starts with
a header echoing the resolved configuration, so a run can be reproduced from
its own output file.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuit import EstimatorConfig, qbge
from .pauli import WeightedPauliSum, parse_hamiltonian
from .sampling import build_sampler
from .sgd import TrainConfig, complexity_table, derive_hyperparameters, qbm_gse
from .thermal import (
    Ansatz,
    NumericalFault,
    analytic_gradient,
    gradient_fd,
    objective,
    thermal_state,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_TOLERANCE = 0, 2, 3, 4
COMMANDS = ("landscape", "grad-check", "estimate", "train", "complexity")
MAX_GRID_POINTS = 10**6
GRAD_CHECK_TOL = 1e-6


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    hamiltonian_path: str | None = None
    ansatz_path: str | None = None
    theta: list[float] | None = None
    grid: list[float] | None = None  # lo, hi, points; shared by every axis
    epsilon: float = 0.1
    epsilons: list[float] | None = None
    seed: int = 0
    shots: str = "auto"
    max_iters: int | None = None
    delta: str = "auto"
    step: float = 1e-5
    J: int | None = None
    alpha_one_norm: float | None = None
    t_max: float = 15.0
    grid_size: int = 65536
    output_path: str | None = None
    output_format: str = "csv"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        if "command" not in data:
            raise ConfigError("config is missing 'command'")
        return cls(**data)

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.output_format not in ("csv", "jsonl"):
            raise ConfigError("format must be 'csv' or 'jsonl'")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.grid is not None and (len(self.grid) != 3 or self.grid[2] < 2):
            raise ConfigError("grid needs lo,hi,points with at least 2 points")
        if self.max_iters is not None and self.max_iters < 1:
            raise ConfigError("max-iters must be at least 1")
        if self.shots not in ("auto", "exact"):
            try:
                if int(self.shots) < 1:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"shots must be a positive integer, 'auto' or 'exact', got {self.shots!r}") from None
        if self.delta != "auto":
            try:
                if not float(self.delta) > 0:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"delta must be a positive number or 'auto', got {self.delta!r}") from None
        eps = [self.epsilon] + list(self.epsilons or [])
        if any(not 0 < e < 1 for e in eps):
            raise ConfigError("epsilon values must lie in (0, 1)")


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


class Sink:
    """Writes a config header, table rows and an optional summary."""

    def __init__(self, cfg: ExperimentConfig, columns: list[str]):
        self.fmt = cfg.output_format
        self.columns = columns
        self.buf = io.StringIO()
        header = json.dumps(cfg.to_dict(), sort_keys=True)
        if self.fmt == "csv":
            self.buf.write(f"# config: {header}\n")
            self.buf.write(",".join(columns) + "\n")
        else:
            self.buf.write(json.dumps({"config": cfg.to_dict()}, sort_keys=True) + "\n")

    def row(self, values):
        if len(values) != len(self.columns):
            raise AssertionError("row does not match columns")
        if self.fmt == "csv":
            self.buf.write(",".join(_fmt(v) for v in values) + "\n")
        else:
            rec = {c: _jsonable(v) for c, v in zip(self.columns, values)}
            self.buf.write(json.dumps(rec) + "\n")

    def summary(self, data: dict):
        text = json.dumps(_jsonable(data), sort_keys=True)
        if self.fmt == "csv":
            self.buf.write(f"# summary: {text}\n")
        else:
            self.buf.write(json.dumps({"summary": _jsonable(data)}, sort_keys=True) + "\n")

    def text(self) -> str:
        return self.buf.getvalue()


def read_config_header(text: str) -> ExperimentConfig:
    """Recover the configuration echoed on the first line of an output."""
    first = text.splitlines()[0]
    if first.startswith("# config: "):
        return ExperimentConfig.from_dict(json.loads(first[len("# config: "):]))
    return ExperimentConfig.from_dict(json.loads(first)["config"])


# ---------------------------------------------------------------- loading


def _load_problem(cfg: ExperimentConfig) -> tuple[WeightedPauliSum, Ansatz]:
    if not cfg.hamiltonian_path or not cfg.ansatz_path:
        raise ConfigError(f"{cfg.command} needs --hamiltonian and --ansatz")
    try:
        h = parse_hamiltonian(Path(cfg.hamiltonian_path).read_text())
        a = Ansatz.parse(Path(cfg.ansatz_path).read_text())
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(f"parse error: {exc}") from exc
    if h.n != a.n:
        raise ConfigError(f"Hamiltonian acts on {h.n} qubits but the ansatz on {a.n}")
    return h, a


def _theta(cfg: ExperimentConfig, ansatz: Ansatz) -> np.ndarray:
    if cfg.theta is None:
        raise ConfigError(f"{cfg.command} needs --theta")
    if len(cfg.theta) != ansatz.J:
        raise ConfigError(f"--theta has {len(cfg.theta)} values, the ansatz has J = {ansatz.J}")
    return np.array(cfg.theta, dtype=float)


def _sampler(cfg: ExperimentConfig):
    try:
        return build_sampler(cfg.t_max, cfg.grid_size)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- commands


def run_landscape(cfg: ExperimentConfig) -> tuple[str, int]:
    h, a = _load_problem(cfg)
    if a.J not in (1, 2):
        raise ConfigError("landscape supports ansatze with J = 1 or 2")
    lo, hi, pts = cfg.grid if cfg.grid is not None else (-2.0, 2.0, 41)
    pts = int(pts)
    if pts**a.J > MAX_GRID_POINTS:
        raise ConfigError(f"grid has {pts**a.J} points, limit is {MAX_GRID_POINTS}")
    axis = np.linspace(lo, hi, pts)
    cols = [f"theta_{j + 1}" for j in range(a.J)] + ["f", "grad_norm"]
    sink = Sink(cfg, cols)
    mesh = np.meshgrid(*([axis] * a.J), indexing="ij")
    for point in zip(*(m.ravel() for m in mesh)):
        st = thermal_state(a, point)
        g = analytic_gradient(h, a, st)
        sink.row([*point, objective(h, st), float(np.linalg.norm(g))])
    return sink.text(), EXIT_OK


def run_grad_check(cfg: ExperimentConfig) -> tuple[str, int]:
    h, a = _load_problem(cfg)
    theta = _theta(cfg, a)
    ga = analytic_gradient(h, a, thermal_state(a, theta))
    gf = gradient_fd(h, a, theta, cfg.step)
    sink = Sink(cfg, ["component", "analytic", "finite_difference", "abs_diff"])
    for j in range(a.J):
        sink.row([j, ga[j], gf[j], abs(ga[j] - gf[j])])
    worst = float(np.abs(ga - gf).max())
    sink.summary({"max_abs_diff": worst, "tolerance": GRAD_CHECK_TOL, "passed": worst <= GRAD_CHECK_TOL})
    return sink.text(), EXIT_OK if worst <= GRAD_CHECK_TOL else EXIT_TOLERANCE


def _train_config(cfg: ExperimentConfig, theta0=None) -> TrainConfig:
    if cfg.shots in ("auto", "exact"):
        mode = "hoeffding" if cfg.shots == "auto" else "exact"
    else:
        mode = int(cfg.shots)
    return TrainConfig(
        epsilon=cfg.epsilon,
        delta_bound=None if cfg.delta == "auto" else float(cfg.delta),
        max_iterations=cfg.max_iters,
        seed=cfg.seed,
        shot_mode=mode,
        theta0=None if theta0 is None else tuple(theta0),
    )


def run_estimate(cfg: ExperimentConfig) -> tuple[str, int]:
    h, a = _load_problem(cfg)
    theta = _theta(cfg, a)
    if cfg.shots == "exact":
        raise ConfigError("estimate needs a shot count or 'auto'")
    hyper = derive_hyperparameters(h, a, _train_config(cfg, theta), theta0=theta)
    est_cfg = EstimatorConfig(hyper.epsilon1, hyper.epsilon2, hyper.delta1, hyper.delta2, cfg.seed)
    shots = None if cfg.shots == "auto" else int(cfg.shots)
    st = thermal_state(a, theta)
    est = qbge(h, a, st, est_cfg, _sampler(cfg), shots=shots)
    truth = analytic_gradient(h, a, st)
    cols = ["component", "estimate", "analytic", "standard_error", "first_term", "second_term",
            "shots_first", "shots_second", "preparations"]
    sink = Sink(cfg, cols)
    for j in range(a.J):
        sink.row([j, est.components[j], truth[j], est.standard_error[j], est.first[j], est.second[j],
                  est.shots_first[j], est.shots_second[j], est.shots_first[j] + 2 * est.shots_second[j]])
    sink.summary({"preparations": est.preparations, "epsilon1": hyper.epsilon1, "delta1": hyper.delta1})
    return sink.text(), EXIT_OK


def run_train(cfg: ExperimentConfig) -> tuple[str, int]:
    h, a = _load_problem(cfg)
    theta0 = _theta(cfg, a) if cfg.theta is not None else None
    tc = _train_config(cfg, theta0)
    cols = (["iteration", "f_analytic", "grad_analytic_norm", "preparations_used"]
            + [f"theta_{j + 1}" for j in range(a.J)] + [f"grad_estimate_{j + 1}" for j in range(a.J)])
    sink = Sink(cfg, cols)

    def emit(rec):
        sink.row([rec.iteration, rec.f_analytic, rec.grad_analytic_norm, rec.preparations_used,
                  *rec.theta, *rec.grad_estimate])

    sampler = None if tc.shot_mode == "exact" else _sampler(cfg)
    result = qbm_gse(h, a, tc, sampler, on_record=emit)
    summary = dict(result.summary)
    summary["theta0"] = [float(x) for x in result.theta0]
    summary["guarantee_applies"] = result.hyper.iterations >= result.hyper.iterations_formula
    sink.summary(summary)
    return sink.text(), EXIT_OK


def run_complexity(cfg: ExperimentConfig) -> tuple[str, int]:
    if cfg.J is not None and cfg.alpha_one_norm is not None:
        J, norm = int(cfg.J), float(cfg.alpha_one_norm)
    elif cfg.hamiltonian_path and cfg.ansatz_path:
        h, a = _load_problem(cfg)
        J, norm = a.J, h.one_norm()
    else:
        raise ConfigError("complexity needs --J and --alpha-norm, or --hamiltonian and --ansatz")
    if J < 1 or not norm > 0:
        raise ConfigError("J must be >= 1 and alpha norm positive")
    if cfg.delta == "auto":
        raise ConfigError("complexity needs an explicit --delta")
    epsilons = cfg.epsilons or [cfg.epsilon]
    rows = complexity_table(sorted(epsilons), J, norm, float(cfg.delta))
    cols = list(rows[0])
    sink = Sink(cfg, cols)
    for r in rows:
        sink.row([r[c] for c in cols])
    return sink.text(), EXIT_OK


RUNNERS = {
    "landscape": run_landscape,
    "grad-check": run_grad_check,
    "estimate": run_estimate,
    "train": run_train,
    "complexity": run_complexity,
}


# ---------------------------------------------------------------- argparse


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


_FLAG_TO_FIELD = {
    "hamiltonian": "hamiltonian_path",
    "ansatz": "ansatz_path",
    "out": "output_path",
    "format": "output_format",
    "alpha_norm": "alpha_one_norm",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qbm-gse",
        description="Thermal-state ground-energy learning on an exact simulator.",
        epilog="Precedence: built-in defaults < JSON --config file < command-line flags. "
               "Exit codes: 0 ok, 2 config error, 3 numerical fault, 4 grad-check tolerance failure.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--hamiltonian", help="Hamiltonian file, '<coef> <pauli-word>' per line")
    common.add_argument("--ansatz", help="ansatz file, one Pauli word per line")
    common.add_argument("--theta", type=_floats, help="comma-separated parameters")
    common.add_argument("--seed", type=int)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--shots", help="shot count, 'auto' (Hoeffding) or 'exact'")
    common.add_argument("--delta", help="bound on f(theta0) - inf f, or 'auto'")
    common.add_argument("--max-iters", type=int)
    common.add_argument("--t-max", type=float, help="sampler truncation point")
    common.add_argument("--grid-size", type=int, help="sampler table size")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=["csv", "jsonl"])
    common.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("landscape", parents=[common], help="objective and gradient norm on a grid")
    sp.add_argument("--grid", type=_floats, help="lo,hi,points for every axis (default -2,2,41)")
    sp = sub.add_parser("grad-check", parents=[common], help="analytic gradient vs finite differences")
    sp.add_argument("--step", type=float)
    sub.add_parser("estimate", parents=[common], help="one shot-based gradient estimate")
    sub.add_parser("train", parents=[common], help="run stochastic gradient descent")
    sp = sub.add_parser("complexity", parents=[common], help="total sample counts over epsilon")
    sp.add_argument("--epsilons", type=_floats, help="comma-separated epsilon list")
    sp.add_argument("--J", type=int, help="number of parameters")
    sp.add_argument("--alpha-norm", type=float, help="sum of Hamiltonian coefficients")
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data.pop("command", None)
    data["command"] = args.command
    skip = {"config", "command", "verbose"}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        data[_FLAG_TO_FIELD.get(key, key)] = value
    for key in ("shots", "delta"):
        if key in data:
            data[key] = str(data[key])
    try:
        cfg = ExperimentConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args)
        text, code = RUNNERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFault, ArithmeticError) as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
