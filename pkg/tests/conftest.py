"""Shared brute-force oracles: dense Kronecker constructions built from scratch,
independent of the package's symbolic Pauli algebra."""
import numpy as np
import pytest

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_label(label: str) -> np.ndarray:
    m = PAULI[label[0]]
    for c in label[1:]:
        m = np.kron(m, PAULI[c])
    return m


def dense_sum(terms, n: int) -> np.ndarray:
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for coeff, label in terms:
        out = out + coeff * kron_label(label)
    return out


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


def random_density(n: int, rng: np.random.Generator) -> np.ndarray:
    dim = 1 << n
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def lindblad_rhs(rho, h, jump_ops):
    """Textbook right-hand side with explicit (L, sign) pairs."""
    out = -1j * (h @ rho - rho @ h)
    for l, sign in jump_ops:
        ldl = l.conj().T @ l
        out = out + sign * (l @ rho @ l.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
