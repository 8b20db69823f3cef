import numpy as np
import pytest

from qbm_gse.pauli import WeightedPauliSum, random_pauli_sum
from qbm_gse.sampling import build_sampler
from qbm_gse.thermal import Ansatz


@pytest.fixture(scope="session")
def sampler():
    return build_sampler()


def random_instance(rng, n, J, n_terms=None, theta_scale=2.0):
    """Random (H, ansatz, theta) with |theta_j| <= theta_scale."""
    h = random_pauli_sum(n, min(n_terms or int(rng.integers(2, 5)), 4**n - 1), rng)
    ansatz = Ansatz(random_pauli_sum(n, J, rng).paulis)
    theta = rng.uniform(-theta_scale, theta_scale, J)
    return h, ansatz, theta


def z_instance():
    return WeightedPauliSum.from_terms([(1.0, "Z")]), Ansatz.from_words(["Z"])


def landscape_instance():
    return WeightedPauliSum.from_terms([(1.0, "Y")]), Ansatz.from_words(["X", "Y"])


def tfim_instance():
    h = WeightedPauliSum.from_terms([(1.0, "ZZ"), (0.5, "XI"), (0.5, "IX")])
    return h, Ansatz.from_words(["ZZ", "XI", "IX"])


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, passed: bool, detail: str):
    """Record and print one acceptance line; the terminal summary repeats them."""
    line = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
