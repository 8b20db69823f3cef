"""The high-peak-tent density p(t) = (2/pi) ln|coth(pi t / 2)| and its samplers.

p is even, has an integrable logarithmic singularity at t = 0 and exponential
tails ~ (4/pi) exp(-pi |t|). Its Fourier transform is the filter
``kappa(omega) = tanh(omega/2) / (omega/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

T_QUAD = 40.0
ABS_T_MEAN = 7 * 1.2020569031595942 / math.pi**3  # 7 zeta(3) / pi^3 ~ 0.2714

_FIRST_NODE = 1e-8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def pdf(t):
    """p(t); returns +inf at t = 0. Accepts scalars or arrays."""
    x = np.pi * np.abs(np.asarray(t, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        small = (2 / np.pi) * (np.log1p(np.exp(-x)) - np.log(-np.expm1(-x)))
        large = (4 / np.pi) * np.arctanh(np.exp(-np.maximum(x, 0.5)))
    out = np.where(x > 0.5, large, small)
    out = np.where(x == 0, np.inf, out)
    return out if out.ndim else float(out)


def kappa(omega):
    """Filter tanh(omega/2)/(omega/2), the Fourier transform of p."""
    w = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(w) < 1e-12, 1.0 - w * w / 12.0, np.tanh(w / 2) / (w / 2))
    return out if out.ndim else float(out)


def kappa_prime(omega):
    """Derivative of :func:`kappa`."""
    w = np.asarray(omega, dtype=float)
    h = w / 2
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        direct = (w / np.cosh(h) ** 2 - 2 * np.tanh(h)) / (w * w)
    series = -w / 6 + w**3 / 30 - 17 * w**5 / 3360
    out = np.where(np.abs(w) < 1e-2, series, direct)
    return out if out.ndim else float(out)


def _half_integral(func, upper: float, tol: float) -> tuple[float, float]:
    """Integrate func * p over (0, upper], split at 1 to isolate the log peak."""
    a, ea = integrate.quad(lambda t: func(t) * pdf(t), 0.0, min(1.0, upper),
                           limit=200, epsabs=1e-14, epsrel=1e-13)
    b, eb = (0.0, 0.0)
    if upper > 1.0:
        b, eb = integrate.quad(lambda t: func(t) * pdf(t), 1.0, upper,
                               limit=400, epsabs=1e-14, epsrel=1e-13)
    err = ea + eb
    if err > tol:
        raise ArithmeticError(f"quadrature did not converge: error estimate {err:.2e} > {tol:.0e}")
    return a + b, err


def fourier_oracle(omega: float, tol: float = 1e-8) -> float:
    """Adaptive quadrature of the Fourier transform of p at ``omega``.

    Test oracle for :func:`kappa`; the imaginary part vanishes by symmetry.
    """
    if not abs(omega) <= 100:
        raise ValueError("fourier_oracle supports |omega| <= 100")
    w = abs(float(omega))
    a, ea = integrate.quad(lambda t: pdf(t) * math.cos(w * t), 0.0, 1.0,
                           limit=200, epsabs=1e-14, epsrel=1e-13)
    if w > 0:
        b, eb = integrate.quad(pdf, 1.0, T_QUAD, weight="cos", wvar=w, limit=400, epsabs=1e-14)
    else:
        b, eb = integrate.quad(pdf, 1.0, T_QUAD, limit=400, epsabs=1e-14)
    if ea + eb > tol:
        raise ArithmeticError(f"quadrature did not converge: error estimate {ea + eb:.2e}")
    return 2.0 * (a + b)


def abs_t_mean_oracle(tol: float = 1e-8) -> float:
    """Quadrature of the integral of |t| p(t) over the real line (~0.2714)."""
    half, _ = _half_integral(lambda t: t, T_QUAD, tol)
    return 2.0 * half


def half_cdf_oracle(t: float, tol: float = 1e-10) -> float:
    """Mass of p on (0, t] by adaptive quadrature (at most 0.5)."""
    if t <= 0:
        return 0.0
    return _half_integral(lambda s: 1.0, float(t), tol)[0]


def tail_mass(t_max: float) -> float:
    """Exact mass of p on (t_max, inf): (4/pi^2) sum_{k odd} e^{-k pi T}/k^2."""
    x = math.exp(-math.pi * t_max)
    total, k = 0.0, 1
    while True:
        term = x**k / k**2
        total += term
        if term < 1e-18 * total or k > 1000:
            break
        k += 2
    return 4 / math.pi**2 * total


@dataclass(frozen=True)
class HighPeakTentSampler:
    """Tabulated inverse CDF of |t| on (0, t_max] plus an exponential tail.

    ``grid`` and ``cdf`` start with the node (0, 0); ``cdf[i]`` is the mass
    of p on (0, grid[i]].
    """

    grid: np.ndarray
    cdf: np.ndarray
    tail_mass: float
    t_max: float

    @property
    def half_mass(self) -> float:
        return float(self.cdf[-1]) + self.tail_mass

    def sample_abs(self, rng: np.random.Generator, size=None) -> np.ndarray:
        u = rng.random(size) * self.half_mass
        body = np.interp(u, self.cdf, self.grid)
        over = u >= self.cdf[-1]
        if np.any(over):
            # conditional tail law ~ exp(-pi (t - t_max)), inverted exactly
            w = np.clip((u - self.cdf[-1]) / self.tail_mass, 0.0, 1.0)
            with np.errstate(divide="ignore"):
                tail = self.t_max - np.log1p(-w) / np.pi
            body = np.where(over, tail, body)
        return body

    def sample(self, rng: np.random.Generator, size=None):
        mag = self.sample_abs(rng, size)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        out = sign * mag
        return out if np.ndim(out) else float(out)


def build_sampler(t_max: float = 15.0, grid_size: int = 65536) -> HighPeakTentSampler:
    if not t_max >= 10:
        raise ValueError("t_max must be at least 10")
    if grid_size < 2048:
        raise ValueError("grid_size must be at least 2048")
    # geometric grid: the log peak at 0 needs fine resolution
    nodes = np.geomspace(_FIRST_NODE, t_max, grid_size)
    lo, hi = nodes[:-1], nodes[1:]
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    masses = half * (pdf(pts) @ _GL_WEIGHTS)
    t0 = nodes[0]
    # p(t) ~ (2/pi) ln(2/(pi t)) on (0, t0)
    head = (2 / np.pi) * (t0 * math.log(2 / (math.pi * t0)) + t0)
    cdf = np.concatenate([[0.0, head], head + np.cumsum(masses)])
    grid = np.concatenate([[0.0], nodes])
    grid.setflags(write=False)
    cdf.setflags(write=False)
    return HighPeakTentSampler(grid=grid, cdf=cdf, tail_mass=tail_mass(t_max), t_max=float(t_max))


def sample_t(s: HighPeakTentSampler, rng: np.random.Generator, size=None):
    """Draw t ~ p(t): |t| by inverse CDF (or the tail law), then a random sign."""
    return s.sample(rng, size)


def sample_term_index(alpha, rng: np.random.Generator, size=None):
    """Draw k with probability alpha_k / sum(alpha) by cumulative-sum inversion."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size == 0:
        raise ValueError("alpha must be a nonempty vector")
    if np.any(~(alpha > 0)) or not np.all(np.isfinite(alpha)):
        raise ValueError("alpha entries must be positive and finite")
    cum = np.cumsum(alpha)
    u = rng.random(size) * cum[-1]
    idx = np.minimum(np.searchsorted(cum, u, side="right"), alpha.size - 1)
    return idx if np.ndim(idx) else int(idx)
