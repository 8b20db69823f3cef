"""Stochastic gradient descent on f(theta) = Tr[H rho(theta)] with shot-based gradients.

Also holds the hyperparameter rules (learning rate 1/l, iteration count,
per-estimator precisions) and the total sample-count formula.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circuit import EstimatorConfig, hoeffding_shots, pauli_outcomes, qbge, stream
from .pauli import WeightedPauliSum
from .sampling import HighPeakTentSampler, build_sampler, sample_term_index
from .thermal import (
    Ansatz,
    NumericalFault,
    ThermalState,
    analytic_gradient,
    objective,
    smoothness_constant,
    thermal_state,
)

log = logging.getLogger(__name__)

# counter keys outside the (iteration, j, sub) space used by the estimators
INIT_KEY = (1 << 32,)
ENERGY_KEY = ((1 << 32) + 1,)


def _check_epsilon(epsilon: float):
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")


@dataclass(frozen=True)
class TrainConfig:
    """Training settings.

    ``shot_mode`` is ``"hoeffding"`` (shot counts from the precision targets),
    ``"exact"`` (analytic gradients, no shot noise) or a positive int used for
    both sub-estimators. ``delta_bound=None`` selects :func:`default_delta`.
    """

    epsilon: float
    delta_bound: float | None = None
    max_iterations: int | None = None
    seed: int = 0
    shot_mode: str | int = "hoeffding"
    theta0: tuple[float, ...] | None = None
    energy_shots: int | None = None

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        if self.delta_bound is not None and not self.delta_bound > 0:
            raise ValueError("delta_bound must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if isinstance(self.shot_mode, str):
            if self.shot_mode not in ("hoeffding", "exact"):
                raise ValueError(f"unknown shot_mode {self.shot_mode!r}")
        elif int(self.shot_mode) < 1:
            raise ValueError("fixed shot count must be at least 1")
        if self.energy_shots is not None and self.energy_shots < 1:
            raise ValueError("energy_shots must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class Hyperparameters:
    ell: float
    eta: float
    iterations: int
    iterations_formula: int
    epsilon1: float
    epsilon2: float
    delta1: float
    delta2: float
    shots_first: int
    shots_second: int
    delta_bound: float
    delta_source: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True, eq=False)
class TrainRecord:
    iteration: int
    theta: np.ndarray
    f_analytic: float
    grad_analytic_norm: float
    grad_estimate: np.ndarray
    preparations_used: int


@dataclass(eq=False)
class TrainResult:
    hyper: Hyperparameters
    theta0: np.ndarray
    records: list[TrainRecord]
    theta_final: np.ndarray
    energy_final: float
    energy_final_measured: float
    energy_min: float
    grad_norm_final: float
    min_grad_norm: float
    preparations: int
    summary: dict = field(default_factory=dict)


def initial_theta(ansatz: Ansatz, cfg: TrainConfig) -> np.ndarray:
    """Fixed theta0 if configured, otherwise uniform on [-0.5, 0.5]^J."""
    if cfg.theta0 is not None:
        theta = np.asarray(cfg.theta0, dtype=float)
        if theta.shape != (ansatz.J,):
            raise ValueError(f"theta0 has length {theta.size}, ansatz has J = {ansatz.J}")
        return theta
    return stream(cfg.seed, *INIT_KEY).uniform(-0.5, 0.5, ansatz.J)


def default_delta(h: WeightedPauliSum, ansatz: Ansatz, theta0) -> float:
    """f(theta0) + ||alpha||_1, an upper bound on f(theta0) - inf f."""
    return objective(h, thermal_state(ansatz, theta0)) + h.one_norm()


def derive_hyperparameters(h: WeightedPauliSum, ansatz: Ansatz, cfg: TrainConfig,
                           theta0=None) -> Hyperparameters:
    eps = cfg.epsilon
    _check_epsilon(eps)
    J, norm = ansatz.J, h.one_norm()
    if cfg.delta_bound is not None:
        delta, source = float(cfg.delta_bound), "user"
    else:
        if theta0 is None:
            theta0 = initial_theta(ansatz, cfg)
        delta, source = default_delta(h, ansatz, theta0), "default: f(theta0) + ||alpha||_1"
    ell = smoothness_constant(ansatz, norm)
    m_formula = math.ceil(12 * delta * ell / eps**2)
    eps1 = eps / (2 * math.sqrt(2 * J))
    dlt = eps**2 / (8 * J * norm**2)
    return Hyperparameters(
        ell=ell,
        eta=1 / ell,
        iterations=cfg.max_iterations if cfg.max_iterations is not None else m_formula,
        iterations_formula=m_formula,
        epsilon1=eps1,
        epsilon2=eps1,
        delta1=dlt,
        delta2=dlt,
        shots_first=hoeffding_shots(norm, eps1, dlt),
        shots_second=hoeffding_shots(norm, eps1, dlt),
        delta_bound=delta,
        delta_source=source,
    )


def sample_complexity(epsilon: float, J: int, alpha_one_norm: float, ell: float, Delta: float) -> int:
    """2J * ceil(12 l Delta / eps^2) * ceil(8 J ||alpha||^2 ln(16 J ||alpha||^2 / eps^2) / eps^2)."""
    _check_epsilon(epsilon)
    a2 = alpha_one_norm**2
    m = math.ceil(12 * ell * Delta / epsilon**2)
    n = math.ceil(8 * J * a2 * math.log(16 * J * a2 / epsilon**2) / epsilon**2)
    return 2 * J * m * n


def measure_energy(h: WeightedPauliSum, state: ThermalState, shots: int | None,
                   rng: np.random.Generator | None = None) -> float:
    """Shot estimate of Tr[H rho]; ``shots=None`` returns the exact value."""
    if shots is None:
        return objective(h, state)
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if rng is None:
        raise ValueError("a random generator is required for shot estimates")
    means = np.array([state.expect(p.dense()) for p in h.paulis])
    ks = sample_term_index(h.alpha, rng, shots)
    y = h.one_norm() * h.signs[ks] * pauli_outcomes(means[ks], rng)
    return float(y.mean())


def qbm_gse(h: WeightedPauliSum, ansatz: Ansatz, cfg: TrainConfig,
            sampler: HighPeakTentSampler | None = None,
            on_record: Callable[[TrainRecord], None] | None = None) -> TrainResult:
    """Run theta_{m+1} = theta_m - eta g(theta_m) and report the trajectory.

    f and the gradient norm in each record are exact diagnostics; only the
    shot-based estimate drives the update (unless ``shot_mode="exact"``).
    """
    if h.n != ansatz.n:
        raise ValueError("Hamiltonian and ansatz act on different numbers of qubits")
    theta = initial_theta(ansatz, cfg)
    hyper = derive_hyperparameters(h, ansatz, cfg, theta0=theta)
    if hyper.iterations < hyper.iterations_formula:
        log.warning("running %d of the %d iterations the convergence guarantee requires",
                    hyper.iterations, hyper.iterations_formula)
    mode = cfg.shot_mode
    if mode == "exact":
        shots, est_cfg = None, None
    else:
        shots = None if mode == "hoeffding" else int(mode)
        est_cfg = EstimatorConfig(hyper.epsilon1, hyper.epsilon2, hyper.delta1, hyper.delta2, cfg.seed)
        if sampler is None:
            sampler = build_sampler()

    theta0 = theta.copy()
    records: list[TrainRecord] = []
    used = 0
    f_vals, g_norms = [], []
    for m in range(hyper.iterations):
        state = thermal_state(ansatz, theta)
        f = objective(h, state)
        grad = analytic_gradient(h, ansatz, state)
        if est_cfg is None:
            est = grad
        else:
            g = qbge(h, ansatz, state, est_cfg, sampler, iteration=m, shots=shots)
            est, used = g.components, used + g.preparations
        rec = TrainRecord(m, theta.copy(), f, float(np.linalg.norm(grad)), np.array(est), used)
        records.append(rec)
        f_vals.append(f)
        g_norms.append(rec.grad_analytic_norm)
        if on_record is not None:
            on_record(rec)
        theta = theta - hyper.eta * est
        if not np.all(np.isfinite(theta)):
            raise NumericalFault(f"non-finite parameters after iteration {m}: {theta}")

    state = thermal_state(ansatz, theta)
    f_final = objective(h, state)
    g_final = float(np.linalg.norm(analytic_gradient(h, ansatz, state)))
    if mode == "exact":
        measured = f_final
    else:
        n_energy = cfg.energy_shots
        if n_energy is None:
            n_energy = hyper.shots_second if shots is None else shots
        measured = measure_energy(h, state, n_energy, stream(cfg.seed, *ENERGY_KEY))
        used += n_energy
    result = TrainResult(
        hyper=hyper,
        theta0=theta0,
        records=records,
        theta_final=theta,
        energy_final=f_final,
        energy_final_measured=measured,
        energy_min=min(f_vals + [f_final]),
        grad_norm_final=g_final,
        min_grad_norm=min(g_norms + [g_final]),
        preparations=used,
    )
    result.summary = summarize(result)
    return result


def summarize(result: TrainResult) -> dict:
    return {
        "theta_final": [float(x) for x in result.theta_final],
        "energy_final_exact": result.energy_final,
        "energy_final_measured": result.energy_final_measured,
        "energy_min_over_trajectory": result.energy_min,
        "grad_norm_final": result.grad_norm_final,
        "min_grad_norm": result.min_grad_norm,
        "preparations": result.preparations,
        "iterations": len(result.records),
        **{f"hyper_{k}": v for k, v in result.hyper.as_dict().items()},
    }


def complexity_row(epsilon: float, J: int, alpha_one_norm: float, Delta: float,
                   ell: float | None = None) -> dict:
    """Factors of the total sample count at one epsilon.

    ``n_closed_form`` is the per-estimator count inside the closed-form total;
    ``shots_first`` is what the Hoeffding rule gives for the same epsilon1
    and delta1, which is twice as large in the leading term.
    """
    _check_epsilon(epsilon)
    if ell is None:
        ell = smoothness_constant(J, alpha_one_norm)
    a2 = alpha_one_norm**2
    m = math.ceil(12 * ell * Delta / epsilon**2)
    n_thm = math.ceil(8 * J * a2 * math.log(16 * J * a2 / epsilon**2) / epsilon**2)
    eps1 = epsilon / (2 * math.sqrt(2 * J))
    dlt = epsilon**2 / (8 * J * a2)
    n1 = hoeffding_shots(alpha_one_norm, eps1, dlt)
    return {
        "epsilon": epsilon,
        "J": J,
        "alpha_one_norm": alpha_one_norm,
        "Delta": Delta,
        "ell": ell,
        "M": m,
        "n_closed_form": n_thm,
        "shots_first": n1,
        "shots_second": n1,
        "N": sample_complexity(epsilon, J, alpha_one_norm, ell, Delta),
        "preparations_hoeffding": m * J * (n1 + 2 * n1),
    }


def complexity_table(epsilons: Sequence[float], J: int, alpha_one_norm: float,
                     Delta: float) -> list[dict]:
    return [complexity_row(e, J, alpha_one_norm, Delta) for e in epsilons]
