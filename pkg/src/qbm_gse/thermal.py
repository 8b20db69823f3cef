"""Parameterized thermal states rho(theta) = exp(-G(theta)) / Z(theta).

Everything is evaluated exactly in the eigenbasis of G(theta). The belief
propagation channel Phi_theta acts there as the spectral filter
``kappa(lambda_a - lambda_b)`` on matrix elements, so neither the channel nor
the gradient needs time-domain quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pauli import PauliString, WeightedPauliSum, parse_pauli, parse_words
from .sampling import kappa, kappa_prime


class NumericalFault(ArithmeticError):
    """Raised when a numerical routine fails its own accuracy check."""


@dataclass(frozen=True)
class Ansatz:
    """Trial Hamiltonian G(theta) = sum_j theta_j G_j over Pauli generators."""

    generators: tuple[PauliString, ...]

    def __post_init__(self):
        if not self.generators:
            raise ValueError("ansatz needs at least one generator")
        n = self.generators[0].n
        if any(g.n != n for g in self.generators):
            raise ValueError("all generators must act on the same number of qubits")

    @classmethod
    def from_words(cls, words: Sequence[str | PauliString]) -> "Ansatz":
        return cls(tuple(w if isinstance(w, PauliString) else parse_pauli(w) for w in words))

    @classmethod
    def parse(cls, text: str) -> "Ansatz":
        return cls(tuple(parse_words(text)))

    @property
    def n(self) -> int:
        return self.generators[0].n

    @property
    def J(self) -> int:
        return len(self.generators)

    def dense_generators(self) -> list[np.ndarray]:
        return [g.dense() for g in self.generators]

    def max_generator_norm(self) -> float:
        # Pauli strings have unit operator norm
        return 1.0


def _check_theta(ansatz: Ansatz, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != ansatz.J:
        raise ValueError(f"theta has length {theta.size}, ansatz has J = {ansatz.J}")
    if not np.all(np.isfinite(theta)):
        raise NumericalFault(f"non-finite parameters: {theta}")
    return theta


def build_generator(ansatz: Ansatz, theta) -> np.ndarray:
    theta = _check_theta(ansatz, theta)
    d = 2**ansatz.n
    out = np.zeros((d, d), dtype=complex)
    for th, g in zip(theta, ansatz.generators):
        out += th * g.dense()
    return out


@dataclass(frozen=True, eq=False)
class ThermalState:
    """Eigendecomposition of G(theta) together with the Gibbs state it defines.

    ``weights`` are the Boltzmann probabilities in the eigenbasis, so
    ``rho = V diag(weights) V^dagger``.
    """

    theta: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    weights: np.ndarray
    log_partition: float
    rho: np.ndarray
    generator: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def to_eigenbasis(self, x: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v.conj().T @ x @ v

    def from_eigenbasis(self, x: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v @ x @ v.conj().T

    def evolution(self, t: float) -> np.ndarray:
        """exp(-i G(theta) t)."""
        v = self.eigenvectors
        return (v * np.exp(-1j * self.eigenvalues * t)) @ v.conj().T

    def expect(self, x: np.ndarray) -> float:
        """Tr[x rho] computed in the eigenbasis."""
        xe = self.to_eigenbasis(x)
        return float(np.real(np.diagonal(xe) @ self.weights))


def thermal_state(ansatz: Ansatz, theta) -> ThermalState:
    theta = _check_theta(ansatz, theta)
    g = build_generator(ansatz, theta)
    try:
        lam, vecs = np.linalg.eigh(g)
    except np.linalg.LinAlgError as exc:
        raise NumericalFault(f"eigendecomposition failed: {exc}") from exc
    gnorm = np.linalg.norm(g)
    residual = np.linalg.norm(g @ vecs - vecs * lam)
    if residual > 1e-9 * gnorm and residual > 1e-14:
        raise NumericalFault(f"eigendecomposition residual {residual:.2e} too large")
    # shift by the smallest eigenvalue so the exponentials cannot overflow
    lam_min = lam[0]
    boltz = np.exp(-(lam - lam_min))
    total = boltz.sum()
    weights = boltz / total
    log_z = math.log(total) - lam_min
    rho = (vecs * weights) @ vecs.conj().T
    rho = (rho + rho.conj().T) / 2
    for arr in (theta, lam, vecs, weights, rho, g):
        arr.setflags(write=False)
    return ThermalState(theta, lam, vecs, weights, float(log_z), rho, g)


def objective(h: WeightedPauliSum, state: ThermalState) -> float:
    """f(theta) = Tr[H rho(theta)]."""
    if h.n != int(math.log2(state.dim)):
        raise ValueError("Hamiltonian and state act on different numbers of qubits")
    return state.expect(h.dense())


def _gaps(state: ThermalState) -> np.ndarray:
    lam = state.eigenvalues
    return lam[:, None] - lam[None, :]


def apply_phi(state: ThermalState, x: np.ndarray) -> np.ndarray:
    """Belief-propagation channel: average of e^{-iGt} x e^{iGt} over t ~ p(t)."""
    x = np.asarray(x)
    if x.shape != (state.dim, state.dim):
        raise ValueError(f"expected a {state.dim}x{state.dim} matrix, got {x.shape}")
    xe = state.to_eigenbasis(x)
    return state.from_eigenbasis(xe * kappa(_gaps(state)))


class _Eigen:
    """H, G_j and Phi(G_j) expressed in the eigenbasis of one thermal state."""

    def __init__(self, h: WeightedPauliSum, ansatz: Ansatz, state: ThermalState):
        if h.n != ansatz.n or 2**ansatz.n != state.dim:
            raise ValueError("Hamiltonian, ansatz and state dimensions disagree")
        if state.theta.size != ansatz.J:
            raise ValueError("state was built for a different number of parameters")
        self.w = state.weights
        self.kap = kappa(_gaps(state))
        self.h = state.to_eigenbasis(h.dense())
        self.g = np.stack([state.to_eigenbasis(m) for m in ansatz.dense_generators()])
        self.phi = self.g * self.kap[None]
        self.mean_h = float(np.real(np.diagonal(self.h) @ self.w))
        self.mean_g = np.real(np.einsum("jaa,a->j", self.g, self.w))

    def anti(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Tr[{a, b} rho] for stacks of matrices, broadcasting leading axes."""
        s = self.w[:, None] + self.w[None, :]
        return np.real(np.einsum("...ab,...ba,ab->...", a, b, s))


def analytic_gradient(h: WeightedPauliSum, ansatz: Ansatz, state: ThermalState) -> np.ndarray:
    """Component j: -1/2 Tr[{H, Phi(G_j)} rho] + <H><G_j>."""
    e = _Eigen(h, ansatz, state)
    return -0.5 * e.anti(e.h[None], e.phi) + e.mean_h * e.mean_g


def _kappa_divided_differences(lam: np.ndarray, tol: float = 1e-5) -> np.ndarray:
    """Q[x, y, z] = (kappa(l_x - l_z) - kappa(l_y - l_z)) / (l_x - l_y).

    Near-coincident l_x, l_y fall back to kappa' at their midpoint.
    """
    dx = lam[:, None, None] - lam[None, :, None]
    kx = kappa(lam[:, None, None] - lam[None, None, :])
    ky = kappa(lam[None, :, None] - lam[None, None, :])
    mid = (lam[:, None, None] + lam[None, :, None]) / 2 - lam[None, None, :]
    close = np.abs(dx) < tol
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (kx - ky) / dx
    return np.where(close, kappa_prime(mid), q)


def phi_derivative(state: ThermalState, gk: np.ndarray, gj: np.ndarray) -> np.ndarray:
    """Eigenbasis matrix of d/dtheta_k Phi_theta(G_j) (G_j held fixed).

    Both arguments are eigenbasis matrices. The Duhamel integral over u is
    exact per eigenvalue triple, and the t-average turns every phase into the
    filter kappa, leaving divided differences of kappa.
    """
    q = _kappa_divided_differences(state.eigenvalues)
    first = np.einsum("ac,cb,acb->ab", gk, gj, q)
    second = np.einsum("ac,cb,cba->ab", gj, gk, q)
    return first + second


def analytic_hessian(
    h: WeightedPauliSum, ansatz: Ansatz, state: ThermalState, method: str = "closed-form",
    step: float = 1e-4,
) -> np.ndarray:
    """Hessian of f(theta).

    ``method="closed-form"`` evaluates the six-term expression with
    d_k Phi(G_j) from :func:`phi_derivative`. ``method="finite-difference"``
    takes central differences of :func:`analytic_gradient` instead.
    """
    if method == "finite-difference":
        return hessian_fd(h, ansatz, state.theta, step)
    if method != "closed-form":
        raise ValueError(f"unknown Hessian method {method!r}")
    e = _Eigen(h, ansatz, state)
    J = ansatz.J
    w = e.w
    wmat = np.diag(w).astype(complex)
    hphi = e.anti(e.h[None], e.phi)  # Tr[{H, Phi(G_j)} rho]
    out = np.empty((J, J))
    for k in range(J):
        rho_phik = wmat @ e.phi[k] + e.phi[k] @ wmat  # {rho, Phi(G_k)}
        for j in range(J):
            dphi = phi_derivative(state, e.g[k], e.g[j])
            h_phij = e.h @ e.phi[j] + e.phi[j] @ e.h
            out[k, j] = (
                -0.5 * e.anti(e.h, dphi)
                + 0.25 * np.real(np.trace(h_phij @ rho_phik))
                - 0.5 * hphi[j] * e.mean_g[k]
                - 0.5 * hphi[k] * e.mean_g[j]
                - 0.5 * e.anti(e.g[j], e.phi[k]) * e.mean_h
                + 2.0 * e.mean_h * e.mean_g[k] * e.mean_g[j]
            )
    return out


def hessian_fd(h: WeightedPauliSum, ansatz: Ansatz, theta, step: float = 1e-4) -> np.ndarray:
    """Central finite differences of the analytic gradient (rows indexed by k)."""
    theta = _check_theta(ansatz, theta)
    out = np.empty((ansatz.J, ansatz.J))
    for k in range(ansatz.J):
        tp, tm = theta.copy(), theta.copy()
        tp[k] += step
        tm[k] -= step
        gp = analytic_gradient(h, ansatz, thermal_state(ansatz, tp))
        gm = analytic_gradient(h, ansatz, thermal_state(ansatz, tm))
        out[k] = (gp - gm) / (2 * step)
    return out


def gradient_fd(h: WeightedPauliSum, ansatz: Ansatz, theta, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of the objective."""
    theta = _check_theta(ansatz, theta)
    out = np.empty(ansatz.J)
    for j in range(ansatz.J):
        tp, tm = theta.copy(), theta.copy()
        tp[j] += step
        tm[j] -= step
        fp = objective(h, thermal_state(ansatz, tp))
        fm = objective(h, thermal_state(ansatz, tm))
        out[j] = (fp - fm) / (2 * step)
    return out


def smoothness_constant(ansatz: Ansatz | int, alpha_one_norm: float) -> float:
    """l = 2 sqrt(2) J^(3/4) ||alpha||_1^(1/2) max_j ||G_j||.

    Accepts an :class:`Ansatz` or the parameter count J directly.
    """
    if isinstance(ansatz, Ansatz):
        J, gmax = ansatz.J, ansatz.max_generator_norm()
    else:
        J, gmax = int(ansatz), 1.0
    if J < 1:
        raise ValueError("J must be at least 1")
    if not alpha_one_norm > 0:
        raise ValueError("alpha_one_norm must be positive")
    return 2 * math.sqrt(2) * J**0.75 * math.sqrt(alpha_one_norm) * gmax
