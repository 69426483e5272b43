"""Pauli-string algebra and diagonal problem Hamiltonians.

Conventions used throughout the package:

* a Pauli string is written as a label like ``"IXYZ"`` where position ``i``
  acts on qubit ``i`` (qubit 0 is the leftmost letter);
* computational-basis index ``b`` stores the bit of qubit ``i`` at position
  ``N - 1 - i``, so ``format(b, f"0{N}b")`` reads qubit 0 .. qubit N-1
  left to right.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PAULI_LETTERS = "IXYZ"

# Single-qubit products a*b -> (letter, phase exponent k with phase = i**k).
_MULT = {
    ("I", "I"): ("I", 0), ("I", "X"): ("X", 0), ("I", "Y"): ("Y", 0), ("I", "Z"): ("Z", 0),
    ("X", "I"): ("X", 0), ("X", "X"): ("I", 0), ("X", "Y"): ("Z", 1), ("X", "Z"): ("Y", 3),
    ("Y", "I"): ("Y", 0), ("Y", "X"): ("Z", 3), ("Y", "Y"): ("I", 0), ("Y", "Z"): ("X", 1),
    ("Z", "I"): ("Z", 0), ("Z", "X"): ("Y", 1), ("Z", "Y"): ("X", 3), ("Z", "Z"): ("I", 0),
}

_SINGLE_QUBIT_DENSE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

MAX_QUBITS = 12


class OperatorError(ValueError):
    """Invalid operator construction (bad index, mismatched sizes, ...)."""


@dataclass(frozen=True)
class PauliString:
    """An N-qubit tensor product of I/X/Y/Z, e.g. ``PauliString("IZY")``."""

    label: str

    def __post_init__(self):
        if not self.label:
            raise OperatorError("empty Pauli label")
        bad = set(self.label) - set(PAULI_LETTERS)
        if bad:
            raise OperatorError(f"invalid Pauli letter(s) {sorted(bad)} in {self.label!r}")

    @property
    def qubits(self) -> int:
        return len(self.label)

    @property
    def weight(self) -> int:
        """Number of non-identity sites."""
        return sum(c != "I" for c in self.label)

    def is_z_string(self) -> bool:
        return set(self.label) <= {"I", "Z"}

    def masks(self) -> tuple[int, int, int]:
        """Return (x_mask, z_mask, y_count); bit N-1-i belongs to qubit i."""
        n = self.qubits
        x = z = y = 0
        for i, c in enumerate(self.label):
            bit = 1 << (n - 1 - i)
            if c in "XY":
                x |= bit
            if c in "ZY":
                z |= bit
            if c == "Y":
                y += 1
        return x, z, y

    def commutes_with(self, other: "PauliString") -> bool:
        if self.qubits != other.qubits:
            raise OperatorError("Pauli strings act on different qubit counts")
        anti = sum(
            1
            for a, b in zip(self.label, other.label)
            if a != "I" and b != "I" and a != b
        )
        return anti % 2 == 0

    def __mul__(self, other: "PauliString") -> tuple[complex, "PauliString"]:
        """Product self*other as (phase, PauliString) with phase in {1,-1,i,-i}."""
        if self.qubits != other.qubits:
            raise OperatorError("Pauli strings act on different qubit counts")
        letters = []
        k = 0
        for a, b in zip(self.label, other.label):
            c, dk = _MULT[(a, b)]
            letters.append(c)
            k += dk
        return 1j ** (k % 4), PauliString("".join(letters))

    def to_dense(self) -> np.ndarray:
        if self.qubits > MAX_QUBITS:
            raise OperatorError(f"dense form capped at {MAX_QUBITS} qubits")
        m = _SINGLE_QUBIT_DENSE[self.label[0]]
        for c in self.label[1:]:
            m = np.kron(m, _SINGLE_QUBIT_DENSE[c])
        return m

    def __str__(self) -> str:
        return self.label


def identity_string(n: int) -> PauliString:
    return PauliString("I" * n)


@lru_cache(maxsize=64)
def _parity_table(n: int) -> np.ndarray:
    """parity[b] = popcount(b) mod 2 for b < 2**n, as int8 in {0, 1}."""
    bits = np.arange(1 << n, dtype=np.uint64)
    return (np.bitwise_count(bits) & np.uint64(1)).astype(np.int8)


@lru_cache(maxsize=512)
def pauli_action(p: PauliString):
    """Permutation and phase of ``p`` on basis states.

    Returns (perm, phase) with (P psi)[b] = phase[b] * psi[perm[b]],
    where perm[b] = b XOR x_mask and phase[b] = i**y * (-1)**popcount(perm[b] & z_mask).
    Cached; callers must treat the returned arrays as read-only.
    """
    n = p.qubits
    x_mask, z_mask, y_count = p.masks()
    dim = 1 << n
    perm = np.arange(dim) ^ x_mask
    signs = 1.0 - 2.0 * _parity_table(n)[perm & z_mask]
    phase = (1j ** (y_count % 4)) * signs.astype(complex)
    return perm, phase


@dataclass(frozen=True)
class PauliSumOperator:
    """Real-weighted sum of Pauli strings acting on a fixed qubit count."""

    qubits: int
    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        for _, p in self.terms:
            if p.qubits != self.qubits:
                raise OperatorError(
                    f"term {p} acts on {p.qubits} qubits, operator declared {self.qubits}"
                )

    @staticmethod
    def from_terms(qubits: int, terms) -> "PauliSumOperator":
        """Build with like terms merged and zero terms dropped."""
        acc: dict[str, float] = {}
        for coeff, p in terms:
            if isinstance(p, str):
                p = PauliString(p)
            acc[p.label] = acc.get(p.label, 0.0) + float(coeff)
        merged = tuple(
            (c, PauliString(lbl)) for lbl, c in sorted(acc.items()) if abs(c) > 1e-15
        )
        return PauliSumOperator(qubits, merged)

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_z_diagonal(self) -> bool:
        return all(p.is_z_string() for _, p in self.terms)

    def scaled(self, factor: float) -> "PauliSumOperator":
        return PauliSumOperator(
            self.qubits, tuple((factor * c, p) for c, p in self.terms)
        )

    def __add__(self, other: "PauliSumOperator") -> "PauliSumOperator":
        if other.qubits != self.qubits:
            raise OperatorError("operator qubit counts differ")
        return PauliSumOperator.from_terms(self.qubits, self.terms + other.terms)

    def diagonal_energies(self) -> np.ndarray:
        """Energies E(b) over all 2**N basis states; requires a Z-diagonal operator."""
        if not self.is_z_diagonal():
            raise OperatorError("operator is not Z-diagonal")
        dim = 1 << self.qubits
        energies = np.zeros(dim)
        parity = _parity_table(self.qubits)
        basis = np.arange(dim)
        for coeff, p in self.terms:
            _, z_mask, _ = p.masks()
            energies += coeff * (1.0 - 2.0 * parity[basis & z_mask])
        return energies

    def to_dense(self) -> np.ndarray:
        if self.qubits > MAX_QUBITS:
            raise OperatorError(f"dense form capped at {MAX_QUBITS} qubits")
        dim = 1 << self.qubits
        if self.is_z_diagonal():
            return np.diag(self.diagonal_energies().astype(complex))
        m = np.zeros((dim, dim), dtype=complex)
        for coeff, p in self.terms:
            perm, phase = pauli_action(p)
            m[np.arange(dim), perm] += coeff * phase
        return m

    def conjugated_by(self, p: PauliString) -> "PauliSumOperator":
        """P O P for a Pauli string P (each term keeps or flips its sign)."""
        new_terms = []
        for coeff, q in self.terms:
            sign = 1.0 if p.commutes_with(q) else -1.0
            new_terms.append((sign * coeff, q))
        return PauliSumOperator(self.qubits, tuple(new_terms))


@dataclass(frozen=True)
class OperatorNorms:
    """Exact spectral data: seminorm = max_eig - min_eig, spectral = max |eig|."""

    seminorm: float
    spectral: float
    max_eig: float
    min_eig: float


def build_maxcut(edges, n: int) -> PauliSumOperator:
    """Unweighted Maxcut Hamiltonian -sum_{(i,j) in E} (1 - Z_i Z_j)/2.

    The constant -|E|/2 is kept as an explicit identity term so the
    approximation ratio starts from the conventional offset value.
    """
    seen = set()
    terms = []
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise OperatorError(f"edge ({i},{j}) has a vertex outside 0..{n - 1}")
        if i == j:
            raise OperatorError(f"self-loop edge ({i},{j})")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise OperatorError(f"duplicate edge ({i},{j})")
        seen.add(key)
        letters = ["I"] * n
        letters[i] = "Z"
        letters[j] = "Z"
        terms.append((0.5, PauliString("".join(letters))))
    if terms:
        terms.append((-0.5 * len(seen), identity_string(n)))
    return PauliSumOperator.from_terms(n, terms)


def build_spin_glass(j_couplings, h_fields, n: int) -> PauliSumOperator:
    """All-to-all spin glass sum_{m<n} J_mn Z_m Z_n + sum_l h_l Z_l."""
    j_couplings = np.asarray(j_couplings, dtype=float)
    h_fields = np.asarray(h_fields, dtype=float)
    if j_couplings.shape != (n, n):
        raise OperatorError(f"coupling matrix must be {n}x{n}, got {j_couplings.shape}")
    if h_fields.shape != (n,):
        raise OperatorError(f"field vector must have length {n}, got {h_fields.shape}")
    if not (np.isfinite(j_couplings).all() and np.isfinite(h_fields).all()):
        raise OperatorError("couplings and fields must be finite")
    terms = []
    for m in range(n):
        for k in range(m + 1, n):
            if j_couplings[m, k]:
                letters = ["I"] * n
                letters[m] = "Z"
                letters[k] = "Z"
                terms.append((j_couplings[m, k], PauliString("".join(letters))))
    for l in range(n):
        if h_fields[l]:
            letters = ["I"] * n
            letters[l] = "Z"
            terms.append((h_fields[l], PauliString("".join(letters))))
    return PauliSumOperator.from_terms(n, terms)


def build_driver(n: int, sign: int = 1) -> PauliSumOperator:
    """Transverse driver sign * sum_j X_j."""
    if n < 1:
        raise OperatorError("driver needs at least one qubit")
    if sign not in (1, -1):
        raise OperatorError("driver sign must be +1 or -1")
    terms = []
    for j in range(n):
        letters = ["I"] * n
        letters[j] = "X"
        terms.append((float(sign), PauliString("".join(letters))))
    return PauliSumOperator(n, tuple(terms))


def commutator_i(a: PauliSumOperator, b: PauliSumOperator) -> PauliSumOperator:
    """Symbolic i[A, B] for real Pauli sums; the result is again a real Pauli sum."""
    if a.qubits != b.qubits:
        raise OperatorError("operator qubit counts differ")
    acc: dict[str, complex] = {}
    for ca, pa in a.terms:
        for cb, pb in b.terms:
            if pa.commutes_with(pb):
                continue
            # [A,B] = AB - BA = 2 AB for anticommuting strings.
            phase, prod = pa * pb
            acc[prod.label] = acc.get(prod.label, 0.0) + 2j * ca * cb * phase
    terms = []
    for lbl, c in sorted(acc.items()):
        if abs(c.imag) > 1e-12 * max(1.0, abs(c)):
            raise OperatorError(f"commutator produced non-Hermitian term {lbl}: {c}")
        if abs(c.real) > 1e-15:
            terms.append((c.real, PauliString(lbl)))
    return PauliSumOperator(a.qubits, tuple(terms))


def commutator_iHdHp(h_d: PauliSumOperator, h_p: PauliSumOperator) -> PauliSumOperator:
    """Feedback observable i[H_d, H_p] used by the control law."""
    return commutator_i(h_d, h_p)


def norms(op: PauliSumOperator) -> OperatorNorms:
    """Exact eigenvalue extremes; bitstring enumeration on Z-diagonal operators."""
    if op.qubits > MAX_QUBITS:
        raise OperatorError(f"norms capped at {MAX_QUBITS} qubits")
    if op.is_zero():
        return OperatorNorms(0.0, 0.0, 0.0, 0.0)
    if op.is_z_diagonal():
        energies = op.diagonal_energies()
        lo, hi = float(energies.min()), float(energies.max())
    else:
        eigs = np.linalg.eigvalsh(op.to_dense())
        lo, hi = float(eigs[0]), float(eigs[-1])
    return OperatorNorms(hi - lo, max(abs(lo), abs(hi)), hi, lo)
