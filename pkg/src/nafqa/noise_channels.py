"""Sparse Pauli noise channels with positive and negative rates.

A channel is a product of two-outcome mixing factors, one per Pauli term:

    rho -> w * rho + sign * (1 - w) * P rho P,   w = (1 + exp(-2|r| dt)) / 2

Positive rates give the physical stochastic Pauli channel (sign +1); a
negative rate keeps the same factor shape but flips the Pauli branch sign,
which multiplies the trace by exp(-2|r| dt).  That known scalar is
compensated by the signed-ensemble / quasiprobability normalization
downstream, never inside the factor itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .operators import OperatorError, PauliString, PauliSumOperator
from .statekernel import expectation

MAX_TERMS = 64


class NoiseModelError(ValueError):
    """Malformed noise model (bad letters, negative intrinsic rate, ...)."""


class ChannelKind(Enum):
    INTRINSIC = "intrinsic"
    ENGINEERED = "engineered"
    EFFECTIVE = "effective"


@dataclass(frozen=True)
class NoiseModel:
    """Ordered list of (Pauli string, rate per unit time) defining a channel."""

    qubits: int
    terms: tuple[tuple[PauliString, float], ...]
    kind: ChannelKind = ChannelKind.INTRINSIC

    def __post_init__(self):
        if len(self.terms) > MAX_TERMS:
            raise NoiseModelError(f"noise model capped at {MAX_TERMS} terms")
        for p, rate in self.terms:
            if p.qubits != self.qubits:
                raise NoiseModelError(
                    f"term {p} acts on {p.qubits} qubits, model declared {self.qubits}"
                )
            if not np.isfinite(rate):
                raise NoiseModelError(f"non-finite rate for {p}")
            if self.kind is ChannelKind.INTRINSIC and rate < 0:
                raise NoiseModelError(f"negative intrinsic rate {rate} for {p}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(p.label for p, _ in self.terms)

    def rate_of(self, label: str) -> float:
        for p, rate in self.terms:
            if p.label == label:
                return rate
        return 0.0

    def with_rates(self, rates: dict[str, float], kind: ChannelKind) -> "NoiseModel":
        terms = tuple((p, rates.get(p.label, r)) for p, r in self.terms)
        return NoiseModel(self.qubits, terms, kind)


@dataclass(frozen=True)
class ChannelFactor:
    """One two-outcome mixing factor: identity with weight w, else signed P."""

    pauli: PauliString
    w: float
    sign: int

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise NoiseModelError(f"factor weight {self.w} outside [0,1]")
        if self.sign not in (-1, 1):
            raise NoiseModelError("factor sign must be +1 or -1")


def factor_weight(rate: float, dt: float = 1.0) -> float:
    """Identity-branch weight (1 + exp(-2 |rate| dt)) / 2."""
    return 0.5 * (1.0 + np.exp(-2.0 * abs(rate) * dt))


def channel_factors(model: NoiseModel, dt: float = 1.0) -> list[ChannelFactor]:
    return [
        ChannelFactor(p, factor_weight(rate, dt), 1 if rate >= 0 else -1)
        for p, rate in model.terms
    ]


def apply_pauli_channel_exact(
    rho: np.ndarray, model: NoiseModel, dt: float = 1.0
) -> np.ndarray:
    """Apply the factorized channel to a density matrix, in term order.

    Trace is preserved for nonnegative rates; each negative-rate factor
    multiplies the trace by exp(-2 |rate| dt).
    """
    dim = 1 << model.qubits
    if rho.shape != (dim, dim):
        raise OperatorError(f"density matrix must be {dim}x{dim}")
    out = rho.astype(complex, copy=True)
    for f in channel_factors(model, dt):
        p = f.pauli.to_dense()
        out = f.w * out + f.sign * (1.0 - f.w) * (p @ out @ p.conj().T)
    return out


def dissipator_expectation(
    rho: np.ndarray, model: NoiseModel, h_p: PauliSumOperator
) -> float:
    """Tr(D[rho] H_p) for the Pauli dissipator sum_k r_k (P rho P - rho)."""
    total = 0.0
    for p, rate in model.terms:
        if rate == 0.0:
            continue
        conj = h_p.conjugated_by(p)
        total += rate * (expectation(rho, conj) - expectation(rho, h_p))
    return total


@dataclass(frozen=True)
class DampingModel:
    """Per-qubit amplitude damping at rate r_k plus dephasing at r_k / 4."""

    rates: tuple[float, ...]

    def __post_init__(self):
        for r in self.rates:
            if not np.isfinite(r) or r < 0:
                raise NoiseModelError(f"damping rate {r} must be finite and >= 0")

    @property
    def qubits(self) -> int:
        return len(self.rates)


def lowering_operator(n: int, qubit: int) -> np.ndarray:
    """|0><1| on one qubit, identity elsewhere (decay of the qubit's 1 state)."""
    s_minus = np.array([[0, 1], [0, 0]], dtype=complex)
    m = np.array([[1]], dtype=complex)
    for q in range(n):
        m = np.kron(m, s_minus if q == qubit else np.eye(2, dtype=complex))
    return m


def damping_jump_operators(model: DampingModel) -> list[tuple[np.ndarray, float, int]]:
    """Jump operators (matrix, rate, sign) for the damping + dephasing dissipator."""
    n = model.qubits
    ops = []
    for q, r in enumerate(model.rates):
        if r == 0.0:
            continue
        ops.append((lowering_operator(n, q), r, 1))
        letters = ["I"] * n
        letters[q] = "Z"
        ops.append((PauliString("".join(letters)).to_dense(), r / 4.0, 1))
    return ops


def damping_dissipator_expectation(
    rho: np.ndarray, model: DampingModel, h_p: PauliSumOperator
) -> float:
    """Tr(D[rho] H_p) for amplitude damping at r_k with dephasing at r_k / 4."""
    n = model.qubits
    hp = h_p.to_dense()
    total = 0.0
    for q, r in enumerate(model.rates):
        if r == 0.0:
            continue
        s_minus = lowering_operator(n, q)
        s_plus = s_minus.conj().T
        num = s_plus @ hp @ s_minus
        proj = s_plus @ s_minus
        anti = hp @ proj + proj @ hp
        total += r * np.real(np.trace(rho @ (num - 0.5 * anti)))
        letters = ["I"] * n
        letters[q] = "Z"
        z = PauliString("".join(letters)).to_dense()
        total += (r / 4.0) * np.real(np.trace(rho @ (z @ hp @ z - hp)))
    return float(total)


def load_noise_model(path) -> NoiseModel:
    """Parse a noise-model file: one `<PauliString> <rate>` per line, # comments."""
    text = Path(path).read_text()
    terms = []
    n = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise NoiseModelError(f"{path}:{lineno}: expected '<PauliString> <rate>', got {raw!r}")
        label, rate_text = parts
        bad = set(label) - set("IXYZ")
        if bad:
            raise NoiseModelError(f"{path}:{lineno}: invalid Pauli letter(s) {sorted(bad)} in {label!r}")
        if n is None:
            n = len(label)
        elif len(label) != n:
            raise NoiseModelError(
                f"{path}:{lineno}: {label!r} has {len(label)} qubits, earlier lines had {n}"
            )
        try:
            rate = float(rate_text)
        except ValueError as exc:
            raise NoiseModelError(f"{path}:{lineno}: bad rate {rate_text!r}") from exc
        if rate < 0:
            raise NoiseModelError(f"{path}:{lineno}: negative rate {rate} in an intrinsic model")
        terms.append((PauliString(label), rate))
    if n is None:
        return NoiseModel(0, (), ChannelKind.INTRINSIC)
    return NoiseModel(n, tuple(terms), ChannelKind.INTRINSIC)
