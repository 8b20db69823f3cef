"""Acceptance suite: one test and one printed PASS/FAIL line per criterion."""

import json
import math
import time
from decimal import ROUND_CEILING, Decimal, localcontext

import numpy as np
import pytest

from conftest import landscape_instance, random_hermitian, random_instance, report, tfim_instance
from test_thermal import midpoint_convexity_gap
from qbm_gse.circuit import EstimatorConfig, estimate_first_term, hoeffding_shots, qbge, stream
from qbm_gse.cli import main
from qbm_gse.pauli import WeightedPauliSum, format_hamiltonian
from qbm_gse.sampling import abs_t_mean_oracle, fourier_oracle
from qbm_gse.sgd import TrainConfig, qbm_gse, sample_complexity
from qbm_gse.thermal import (
    Ansatz,
    analytic_gradient,
    analytic_hessian,
    apply_phi,
    gradient_fd,
    hessian_fd,
    objective,
    smoothness_constant,
    thermal_state,
)


def random_suite(seed=2024, count=20):
    """Random instances with n in {2, 3}, J in {2, 3, 4}, |theta_j| <= 2."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = 2 + i % 2
        J = 2 + i % 3
        out.append(random_instance(rng, n, J))
    return out


def test_criterion_01_density_normalization():
    t0 = time.perf_counter()
    mass = fourier_oracle(0.0)
    mean = abs_t_mean_oracle()
    elapsed = time.perf_counter() - t0
    ok = abs(mass - 1) <= 1e-8 and abs(mean - 0.2714) <= 1e-3 and elapsed < 1
    report(1, ok, f"integral of p = {mass:.12f}, E|t| = {mean:.10f}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_fourier_filter():
    t0 = time.perf_counter()
    gaps = {w: abs(fourier_oracle(w) - math.tanh(w / 2) / (w / 2)) for w in (0.1, 0.5, 1, 2, 5, 10)}
    elapsed = time.perf_counter() - t0
    worst = max(gaps.values())
    ok = worst <= 1e-6 and elapsed < 5
    report(2, ok, f"max |quadrature - tanh(w/2)/(w/2)| = {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_03_gradient_correctness():
    t0 = time.perf_counter()
    worst = 0.0
    for h, a, theta in random_suite():
        g = analytic_gradient(h, a, thermal_state(a, theta))
        worst = max(worst, float(np.abs(g - gradient_fd(h, a, theta, 1e-5)).max()))
    hz = WeightedPauliSum.from_terms([(1.0, "Z")])
    az = Ansatz.from_words(["Z"])
    closed = abs(analytic_gradient(hz, az, thermal_state(az, [0.5]))[0] + 1 / math.cosh(0.5) ** 2)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and closed <= 1e-10 and elapsed < 30
    report(3, ok, f"max FD gap = {worst:.2e}, closed-form gap = {closed:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_04_bounds():
    t0 = time.perf_counter()
    grad_ratio = hess_ratio = sym = fd_gap = 0.0
    for h, a, theta in random_suite():
        s = thermal_state(a, theta)
        norm = h.one_norm()
        g = analytic_gradient(h, a, s)
        hess = analytic_hessian(h, a, s)
        grad_ratio = max(grad_ratio, float(np.abs(g).max()) / (2 * norm))
        hess_ratio = max(hess_ratio, float(np.abs(hess).max()) / (8 * norm))
        sym = max(sym, float(np.abs(hess - hess.T).max()))
        fd_gap = max(fd_gap, float(np.abs(hess - hessian_fd(h, a, theta, 1e-4)).max()))
    elapsed = time.perf_counter() - t0
    ok = grad_ratio <= 1 and hess_ratio <= 1 and sym <= 1e-6 and fd_gap <= 1e-5 and elapsed < 60
    report(4, ok, f"max |grad|/2|a| = {grad_ratio:.3f}, max |hess|/8|a| = {hess_ratio:.3f}, "
                  f"symmetry gap = {sym:.1e}, Hessian FD gap = {fd_gap:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_05_channel():
    t0 = time.perf_counter()
    rng = np.random.default_rng(55)
    worst_trace = worst_herm = worst_fixed = 0.0
    contracts = True
    for i in range(50):
        n = 1 + i % 3
        _, a, theta = random_instance(rng, n, min(3, 4**n - 1))
        s = thermal_state(a, theta)
        x = random_hermitian(rng, 2**n)
        y = apply_phi(s, x)
        worst_trace = max(worst_trace, abs(np.trace(y) - np.trace(x)))
        worst_herm = max(worst_herm, float(np.abs(y - y.conj().T).max()))
        worst_fixed = max(worst_fixed, float(np.abs(apply_phi(s, s.rho) - s.rho).max()))
        contracts &= bool(np.linalg.norm(y, 2) <= np.linalg.norm(x, 2) + 1e-9)
    elapsed = time.perf_counter() - t0
    ok = max(worst_trace, worst_herm, worst_fixed) <= 1e-9 and contracts and elapsed < 10
    report(5, ok, f"trace gap {worst_trace:.1e}, Hermiticity gap {worst_herm:.1e}, fixed-point gap "
                  f"{worst_fixed:.1e}, contraction {'holds' if contracts else 'violated'}, {elapsed:.2f}s")
    assert ok


def test_criterion_06_unbiasedness(sampler):
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    failures = components = 0
    worst = 0.0
    for inst in range(20):
        h, a, theta = random_instance(rng, 2, 2 + inst % 2)
        s = thermal_state(a, theta)
        cfg = EstimatorConfig(0.1, 0.1, 0.1, 0.1, seed=10_000 + inst)
        runs = np.array([qbge(h, a, s, cfg, sampler, iteration=r, shots=2000).components for r in range(400)])
        se = runs.std(axis=0, ddof=1) / math.sqrt(runs.shape[0])
        z = np.abs(runs.mean(axis=0) - analytic_gradient(h, a, s)) / se
        failures += int(np.sum(z > 5))
        components += z.size
        worst = max(worst, float(z.max()))
    elapsed = time.perf_counter() - t0
    ok = failures <= 2 and elapsed < 600
    report(6, ok, f"{failures} of {components} components outside 5 SE (max {worst:.2f} SE), {elapsed:.1f}s")
    assert ok


def test_criterion_07_hoeffding_coverage(sampler):
    t0 = time.perf_counter()
    rng = np.random.default_rng(707)
    h0, a, theta = random_instance(rng, 2, 3, n_terms=3)
    # rescale so that ||alpha||_1 = 1
    norm = h0.one_norm()
    h = WeightedPauliSum.from_terms((t.sign * t.coefficient / norm, t.pauli) for t in h0.terms)
    s = thermal_state(a, theta)
    cfg = EstimatorConfig(0.1, 0.1, 0.1, 0.1, seed=7)
    n1 = hoeffding_shots(h.one_norm(), 0.1, 0.1)
    hd = h.dense()
    phi = apply_phi(s, a.generators[0].dense())
    truth = -0.5 * np.trace((hd @ phi + phi @ hd) @ s.rho).real
    errors = np.array([estimate_first_term(h, a, s, 0, cfg, sampler, stream(cfg.seed, r, 0, 0)) - truth
                       for r in range(500)])
    frac = float(np.mean(np.abs(errors) > 0.1))
    elapsed = time.perf_counter() - t0
    ok = frac <= 0.13 and elapsed < 300
    report(7, ok, f"N1 = {n1}, failure fraction {frac:.3f} (limit 0.13), {elapsed:.1f}s")
    assert ok


def test_criterion_08_scaled_convergence(sampler):
    t0 = time.perf_counter()
    h, a = tfim_instance()
    # the ansatz spans the Hamiltonian's own terms, so inf f is the ground energy
    e_ground = float(np.linalg.eigvalsh(h.dense())[0])
    along = objective(h, thermal_state(a, 100 * np.array([1.0, 0.5, 0.5])))
    assert abs(along - e_ground) <= 1e-10
    min_norms, finals = [], []
    for seed in range(32):
        res = qbm_gse(h, a, TrainConfig(0.25, max_iterations=400, seed=seed, shot_mode=2000), sampler)
        min_norms.append(res.min_grad_norm)
        finals.append(res.energy_final)
    mean_norm = float(np.mean(min_norms))
    mean_energy = float(np.mean(finals))
    elapsed = time.perf_counter() - t0
    ok = mean_norm <= 0.25 and abs(mean_energy - e_ground) <= 0.15 and elapsed < 1200
    report(8, ok, f"seed-mean min |grad f| = {mean_norm:.4f} (limit 0.25), seed-mean final energy "
                  f"{mean_energy:.4f} vs optimum {e_ground:.4f} (gap {mean_energy - e_ground:.4f}, limit 0.15), "
                  f"{elapsed:.1f}s")
    assert ok


def test_criterion_09_complexity_formula():
    t0 = time.perf_counter()
    ell = smoothness_constant(2, 1.0)
    value = sample_complexity(0.1, 2, 1.0, ell, 1)
    with localcontext() as ctx:
        ctx.prec = 60
        # 2 sqrt(2) * 2^(3/4) = 2^(9/4)
        ell_d = Decimal(2) ** (Decimal(9) / Decimal(4))
        m = (12 * ell_d / Decimal("0.01")).to_integral_value(rounding=ROUND_CEILING)
        n = (1600 * Decimal(3200).ln()).to_integral_value(rounding=ROUND_CEILING)
        independent = 2 * 2 * int(m) * int(n)
    elapsed = time.perf_counter() - t0
    ok = value == independent and isinstance(value, int) and elapsed < 1
    report(9, ok, f"N = {value:,} (independent: {independent:,}; M = {int(m)}, per-estimator {int(n)}), {elapsed:.3f}s")
    assert ok


def test_criterion_10_nonconvexity():
    t0 = time.perf_counter()
    h, a = landscape_instance()
    axis = np.linspace(-2, 2, 41)
    f = np.array([[objective(h, thermal_state(a, [x, y])) for y in axis] for x in axis])
    gap = midpoint_convexity_gap(f)
    elapsed = time.perf_counter() - t0
    ok = gap >= 1e-3 and elapsed < 5
    report(10, ok, f"largest midpoint-convexity violation {gap:.4f} (need >= 1e-3), {elapsed:.2f}s")
    assert ok


def test_criterion_11_determinism(tmp_path):
    t0 = time.perf_counter()
    h, a = tfim_instance()
    (tmp_path / "h.txt").write_text(format_hamiltonian(h))
    (tmp_path / "a.txt").write_text("ZZ\nXI\nIX\n")
    common = ["--hamiltonian", str(tmp_path / "h.txt"), "--ansatz", str(tmp_path / "a.txt"), "--seed", "42"]
    jobs = {
        "estimate": ["estimate", *common, "--theta", "0.2,-0.1,0.4", "--shots", "3000"],
        "train": ["train", *common, "--shots", "500", "--max-iters", "25", "--epsilon", "0.25"],
    }
    same = {}
    for name, args in jobs.items():
        out = tmp_path / f"{name}.csv"
        blobs = []
        for _ in range(2):
            assert main([*args, "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        same[name] = blobs[0] == blobs[1]
    elapsed = time.perf_counter() - t0
    ok = all(same.values()) and elapsed < 60
    report(11, ok, f"byte-identical reruns: {json.dumps(same)}, {elapsed:.2f}s")
    assert ok
