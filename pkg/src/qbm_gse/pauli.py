"""Pauli strings, weighted Pauli sums and their dense matrices.

Qubit ordering: the leftmost letter of a Pauli word acts on the most
significant bit of the computational-basis index.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 12

_SINGLE = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("XZIY")``."""

    axes: str

    def __post_init__(self):
        if not isinstance(self.axes, str) or not self.axes:
            raise ValueError("Pauli word must be a nonempty string")
        bad = set(self.axes) - set(_SINGLE)
        if bad:
            raise ValueError(f"invalid axis letter(s) {sorted(bad)} in {self.axes!r}")

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def is_identity(self) -> bool:
        return set(self.axes) == {"I"}

    def dense(self, max_qubits: int = MAX_QUBITS) -> np.ndarray:
        if self.n > max_qubits:
            raise ValueError(f"{self.n} qubits exceeds the dense limit of {max_qubits}")
        return _dense(self.axes)

    def __str__(self):
        return self.axes


@functools.lru_cache(maxsize=512)
def _dense(axes: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for a in axes:
        out = np.kron(out, _SINGLE[a])
    out.setflags(write=False)
    return out


def parse_pauli(text: str) -> PauliString:
    return PauliString(text.strip())


def dense_matrix(p: PauliString, max_qubits: int = MAX_QUBITS) -> np.ndarray:
    """Dense 2^n x 2^n matrix of ``p`` (read-only, cached)."""
    return p.dense(max_qubits)


@dataclass(frozen=True)
class Term:
    """One term ``sign * coefficient * pauli`` with ``coefficient > 0``."""

    coefficient: float
    pauli: PauliString
    sign: int = 1


@dataclass(frozen=True)
class WeightedPauliSum:
    """H = sum_k sign_k * alpha_k * P_k with every alpha_k strictly positive.

    Negative input coefficients are stored as a positive magnitude with
    ``sign = -1`` so that alpha / ||alpha||_1 is a probability vector.
    """

    terms: tuple[Term, ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("Hamiltonian needs at least one term")
        n = self.terms[0].pauli.n
        for term in self.terms:
            if term.pauli.n != n:
                raise ValueError("all terms must act on the same number of qubits")
            if not term.coefficient > 0 or not np.isfinite(term.coefficient):
                raise ValueError(f"coefficient must be positive and finite, got {term.coefficient}")
            if term.sign not in (1, -1):
                raise ValueError("term sign must be +1 or -1")

    @classmethod
    def from_terms(cls, pairs: Iterable[tuple[float, str | PauliString]]) -> "WeightedPauliSum":
        """Build from ``(real coefficient, word)`` pairs, absorbing signs."""
        terms = []
        for coeff, word in pairs:
            p = word if isinstance(word, PauliString) else parse_pauli(word)
            coeff = float(coeff)
            if coeff == 0.0:
                raise ValueError(f"zero coefficient for term {p}")
            terms.append(Term(abs(coeff), p, 1 if coeff > 0 else -1))
        return cls(tuple(terms))

    @property
    def n(self) -> int:
        return self.terms[0].pauli.n

    @property
    def alpha(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms])

    @property
    def signs(self) -> np.ndarray:
        return np.array([t.sign for t in self.terms], dtype=float)

    @property
    def paulis(self) -> tuple[PauliString, ...]:
        return tuple(t.pauli for t in self.terms)

    def one_norm(self) -> float:
        return float(sum(t.coefficient for t in self.terms))

    def dense(self) -> np.ndarray:
        out = np.zeros((2**self.n, 2**self.n), dtype=complex)
        for t in self.terms:
            out += (t.sign * t.coefficient) * t.pauli.dense()
        return out

    def __len__(self):
        return len(self.terms)


def one_norm(h: WeightedPauliSum) -> float:
    return h.one_norm()


def expectation(observable: np.ndarray, state: np.ndarray, atol: float = 1e-10) -> float:
    """Tr[observable @ state] for a Hermitian observable and a density matrix."""
    observable = np.asarray(observable)
    state = np.asarray(state)
    if observable.shape != state.shape or observable.ndim != 2:
        raise ValueError(f"dimension mismatch: {observable.shape} vs {state.shape}")
    value = np.einsum("ij,ji->", observable, state)
    if abs(value.imag) > atol * max(1.0, abs(value.real)):
        raise ValueError(f"expectation has imaginary part {value.imag:.3e}; inputs not Hermitian?")
    return float(value.real)


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_hamiltonian(text: str) -> WeightedPauliSum:
    """Parse ``<coefficient> <pauli-word>`` lines; ``#`` starts a comment."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ValueError(f"line {lineno}: expected '<coefficient> <pauli-word>', got {raw!r}")
        try:
            coeff = float(fields[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad coefficient {fields[0]!r}") from None
        pairs.append((coeff, parse_pauli(fields[1])))
    if not pairs:
        raise ValueError("no Hamiltonian terms found")
    return WeightedPauliSum.from_terms(pairs)


def parse_words(text: str) -> list[PauliString]:
    """One Pauli word per line, in order; used for ansatz files."""
    words = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        if len(line.split()) != 1:
            raise ValueError(f"line {lineno}: expected a single Pauli word, got {raw!r}")
        words.append(parse_pauli(line))
    if not words:
        raise ValueError("no Pauli words found")
    return words


def format_hamiltonian(h: WeightedPauliSum) -> str:
    return "".join(f"{t.sign * t.coefficient!r} {t.pauli}\n" for t in h.terms)


def random_pauli_sum(
    n: int, num_terms: int, rng: np.random.Generator, *, allow_negative: bool = True,
    exclude_identity: bool = True,
) -> WeightedPauliSum:
    """Random Hamiltonian with distinct Pauli words; handy for property tests."""
    if num_terms > 4**n - int(exclude_identity):
        raise ValueError(f"cannot draw {num_terms} distinct words on {n} qubits")
    words: list[str] = []
    while len(words) < num_terms:
        w = "".join(rng.choice(list("IXYZ"), size=n))
        if exclude_identity and set(w) == {"I"}:
            continue
        if w not in words:
            words.append(w)
    coeffs = rng.uniform(0.1, 1.0, size=num_terms)
    if allow_negative:
        coeffs *= rng.choice([-1.0, 1.0], size=num_terms)
    return WeightedPauliSum.from_terms(zip(coeffs, words))


def pauli_words(paulis: Sequence[PauliString]) -> list[str]:
    return [p.axes for p in paulis]
