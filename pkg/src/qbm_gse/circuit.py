"""Shot-level simulation of the gradient estimators.

Outcome probabilities come from exact dense algebra and are then Bernoulli
sampled, which reproduces the measurement statistics of the Hadamard test
and of Pauli measurements without simulating state collapse.

Random streams are counter based: every (iteration, component, sub-estimator)
triple owns an independent Philox stream derived from one master seed, so the
results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pauli import WeightedPauliSum
from .sampling import HighPeakTentSampler, sample_term_index
from .thermal import Ansatz, NumericalFault, ThermalState

FIRST, SECOND = 0, 1
_CHUNK_ELEMENTS = 1 << 20


def hoeffding_shots(alpha_one_norm: float, epsilon: float, delta: float) -> int:
    """Two-sided Hoeffding count ceil(2 ||alpha||^2 ln(2/delta) / epsilon^2)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not alpha_one_norm > 0:
        raise ValueError("alpha_one_norm must be positive")
    return max(1, math.ceil(2 * alpha_one_norm**2 * math.log(2 / delta) / epsilon**2))


@dataclass(frozen=True)
class EstimatorConfig:
    epsilon1: float
    epsilon2: float
    delta1: float
    delta2: float
    seed: int = 0

    def __post_init__(self):
        for name in ("epsilon1", "epsilon2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("delta1", "delta2"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def shots_first(self, alpha_one_norm: float) -> int:
        return hoeffding_shots(alpha_one_norm, self.epsilon1, self.delta1)

    def shots_second(self, alpha_one_norm: float) -> int:
        return hoeffding_shots(alpha_one_norm, self.epsilon2, self.delta2)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a counter key such as (iteration, j, sub)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class GradientEstimate:
    """Output of one QBGE call.

    ``sample_variance`` is the estimated variance of each component estimate,
    i.e. var(Y1)/N1 + var(Y2)/N2 with unbiased per-shot variances.
    """

    components: np.ndarray
    first: np.ndarray
    second: np.ndarray
    shots_first: np.ndarray
    shots_second: np.ndarray
    sample_variance: np.ndarray
    preparations: int = field(default=0)

    @property
    def standard_error(self) -> np.ndarray:
        return np.sqrt(self.sample_variance)


def _check_unitary(u: np.ndarray, name: str, tol: float = 1e-9):
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() > tol:
        raise ValueError(f"{name} is not unitary")


def hadamard_test_p0(u0: np.ndarray, u1: np.ndarray, rho: np.ndarray) -> float:
    """Probability of reading 0 on the control qubit of the Hadamard test.

    The control is prepared in |+>, u0 and u1 are applied controlled on 0
    and 1, and the control is measured in the X basis.
    """
    u0, u1, rho = np.asarray(u0), np.asarray(u1), np.asarray(rho)
    if not (u0.shape == u1.shape == rho.shape):
        raise ValueError(f"shape mismatch: {u0.shape}, {u1.shape}, {rho.shape}")
    _check_unitary(u0, "u0")
    _check_unitary(u1, "u1")
    m = u1.conj().T @ u0
    p0 = (2 + np.real(np.trace((m + m.conj().T) @ rho))) / 4
    if not -1e-9 <= p0 <= 1 + 1e-9:
        raise NumericalFault(f"Hadamard-test probability {p0} outside [0, 1]")
    return float(min(1.0, max(0.0, p0)))


def conjugation_unitaries(h: WeightedPauliSum, state: ThermalState, ansatz: Ansatz,
                          j: int, k: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    """(u0, u1) = (e^{-iGt}, H_k e^{-iGt} G_j) for the first-term circuit."""
    if not 0 <= j < ansatz.J:
        raise IndexError(f"generator index {j} out of range for J = {ansatz.J}")
    if not 0 <= k < len(h):
        raise IndexError(f"term index {k} out of range for K = {len(h)}")
    u0 = state.evolution(t)
    u1 = h.paulis[k].dense() @ u0 @ ansatz.generators[j].dense()
    return u0, u1


def _check_index(ansatz: Ansatz, j: int):
    if not 0 <= j < ansatz.J:
        raise IndexError(f"generator index {j} out of range for J = {ansatz.J}")


def first_term_values(h: WeightedPauliSum, ansatz: Ansatz, state: ThermalState, j: int,
                      ks: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Re Tr[u1^dagger u0 rho] for each sampled pair (k, t), evaluated spectrally.

    In the eigenbasis of G the trace is sum_ab c^k_ab exp(-i (l_a - l_b) t)
    with c^k_ab = G_j[a, b] H_k[b, a] w_a.
    """
    _check_index(ansatz, j)
    ks = np.asarray(ks, dtype=np.intp)
    ts = np.asarray(ts, dtype=float)
    gj = state.to_eigenbasis(ansatz.generators[j].dense())
    d = state.dim
    coeff = np.empty((len(h), d * d), dtype=complex)
    for k, p in enumerate(h.paulis):
        hk = state.to_eigenbasis(p.dense())
        coeff[k] = (gj * hk.T * state.weights[:, None]).ravel()
    lam = state.eigenvalues
    omega = (lam[:, None] - lam[None, :]).ravel()
    out = np.empty(ts.size)
    step = max(1, _CHUNK_ELEMENTS // omega.size)
    for lo in range(0, ts.size, step):
        sl = slice(lo, lo + step)
        phase = np.exp(-1j * ts[sl, None] * omega[None, :])
        out[sl] = np.real(np.einsum("nq,nq->n", coeff[ks[sl]], phase))
    return np.clip(out, -1.0, 1.0)


def estimate_first_term(h: WeightedPauliSum, ansatz: Ansatz, state: ThermalState, j: int,
                        cfg: EstimatorConfig, sampler: HighPeakTentSampler,
                        rng: np.random.Generator, *, shots: int | None = None,
                        return_samples: bool = False):
    """Mean of ||alpha|| (-1)^(b+1) sign_k over Hadamard-test shots.

    Each shot draws k with probability alpha_k/||alpha||, t ~ p(t), then the
    control bit b with Pr(b = 0) = p0. The mean is unbiased for
    -1/2 Tr[{H, Phi(G_j)} rho].
    """
    _check_index(ansatz, j)
    norm = h.one_norm()
    n = cfg.shots_first(norm) if shots is None else int(shots)
    if n < 1:
        raise ValueError("shots must be at least 1")
    ks = sample_term_index(h.alpha, rng, n)
    ts = sampler.sample(rng, n)
    v = first_term_values(h, ansatz, state, j, ks, ts)
    p1 = (1 - v) / 2
    b = rng.random(n) < p1
    y = norm * h.signs[ks] * np.where(b, 1.0, -1.0)
    return y if return_samples else float(y.mean())


def pauli_outcomes(means: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """+-1 outcomes with Pr(+1) = (1 + mean)/2, one per entry of ``means``."""
    return np.where(rng.random(np.shape(means)) < (1 + np.asarray(means)) / 2, 1.0, -1.0)


def estimate_second_term(h: WeightedPauliSum, ansatz: Ansatz, state: ThermalState, j: int,
                         cfg: EstimatorConfig, rng: np.random.Generator, *,
                         shots: int | None = None, return_samples: bool = False):
    """Mean of ||alpha|| sign_k h g over paired Pauli measurements.

    h is an H_k outcome on one copy of rho and g a G_j outcome on a second,
    independent copy. Outcome +1 corresponds to bit 0, so (-1)^(h_bit + g_bit)
    equals the product of the two +-1 outcomes.
    """
    _check_index(ansatz, j)
    norm = h.one_norm()
    n = cfg.shots_second(norm) if shots is None else int(shots)
    if n < 1:
        raise ValueError("shots must be at least 1")
    term_means = np.array([state.expect(p.dense()) for p in h.paulis])
    g_mean = state.expect(ansatz.generators[j].dense())
    ks = sample_term_index(h.alpha, rng, n)
    hv = pauli_outcomes(term_means[ks], rng)
    gv = pauli_outcomes(np.full(n, g_mean), rng)
    y = norm * h.signs[ks] * hv * gv
    return y if return_samples else float(y.mean())


def _resolve_shots(shots, cfg: EstimatorConfig, norm: float) -> tuple[int, int]:
    if shots is None:
        return cfg.shots_first(norm), cfg.shots_second(norm)
    if isinstance(shots, (tuple, list)):
        n1, n2 = (int(s) for s in shots)
    else:
        n1 = n2 = int(shots)
    if n1 < 1 or n2 < 1:
        raise ValueError("shots must be at least 1")
    return n1, n2


def qbge(h: WeightedPauliSum, ansatz: Ansatz, state: ThermalState, cfg: EstimatorConfig,
         sampler: HighPeakTentSampler, *, iteration: int = 0, shots=None) -> GradientEstimate:
    """Estimate every gradient component from sampled circuits.

    ``shots`` overrides the Hoeffding counts: an int for both sub-estimators
    or a pair (N1, N2). Component j of iteration m uses streams keyed
    (m, j, 0) and (m, j, 1) under ``cfg.seed``.
    """
    norm = h.one_norm()
    n1, n2 = _resolve_shots(shots, cfg, norm)
    J = ansatz.J
    first, second, var = np.empty(J), np.empty(J), np.empty(J)
    for j in range(J):
        y1 = estimate_first_term(h, ansatz, state, j, cfg, sampler,
                                 stream(cfg.seed, iteration, j, FIRST), shots=n1, return_samples=True)
        y2 = estimate_second_term(h, ansatz, state, j, cfg,
                                  stream(cfg.seed, iteration, j, SECOND), shots=n2, return_samples=True)
        first[j], second[j] = y1.mean(), y2.mean()
        v1 = y1.var(ddof=1) / n1 if n1 > 1 else norm**2 / n1
        v2 = y2.var(ddof=1) / n2 if n2 > 1 else norm**2 / n2
        var[j] = v1 + v2
    return GradientEstimate(
        components=first + second,
        first=first,
        second=second,
        shots_first=np.full(J, n1),
        shots_second=np.full(J, n2),
        sample_variance=var,
        preparations=J * (n1 + 2 * n2),
    )
