"""Dense statevector and density-matrix kernels.

Statevectors are 1D complex arrays of length 2**N (batches use shape
(M, 2**N)); density matrices are 2**N x 2**N complex arrays.  Trajectory
states are deliberately allowed to be non-unit-norm, so expectation values
here are unnormalized bilinear forms <psi|O|psi>.
"""
from __future__ import annotations

import numpy as np

from .operators import OperatorError, PauliString, PauliSumOperator, pauli_action

DENSE_MAX_QUBITS = 8


def num_qubits(state: np.ndarray) -> int:
    dim = state.shape[-1]
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise OperatorError(f"state dimension {dim} is not a power of two")
    return n


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    return psi


def plus_state(n: int) -> np.ndarray:
    dim = 1 << n
    return np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)


def basis_state(n: int, index: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = 1.0
    return psi


def apply_pauli(state: np.ndarray, p: PauliString, out: np.ndarray | None = None) -> np.ndarray:
    """Apply a Pauli string to a statevector or a batch of row statevectors."""
    if state.shape[-1] != 1 << p.qubits:
        raise OperatorError("state and Pauli string qubit counts differ")
    perm, phase = pauli_action(p)
    if out is None:
        return state[..., perm] * phase
    np.take(state, perm, axis=-1, out=out)
    out *= phase
    return out


def expectation(state_or_rho: np.ndarray, op: PauliSumOperator) -> float:
    """<psi|O|psi> for a 1D statevector, Tr(rho O) for a 2D density matrix.

    Statevector inputs are intentionally not normalized first.
    """
    arr = np.asarray(state_or_rho)
    dim = 1 << op.qubits
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise OperatorError("state and operator qubit counts differ")
        return float(expectation_batch(arr[None, :], op)[0])
    if arr.ndim == 2 and arr.shape == (dim, dim):
        total = 0.0
        for coeff, p in op.terms:
            perm, phase = pauli_action(p)
            # Tr(rho P) with P[b, perm[b]] = phase[b].
            total += coeff * np.real(np.sum(arr[perm, np.arange(dim)] * phase))
        return float(total)
    raise OperatorError(f"expected a statevector or {dim}x{dim} density matrix")


def expectation_batch(states: np.ndarray, op: PauliSumOperator) -> np.ndarray:
    """Unnormalized <psi|O|psi> per row of an (M, 2**N) statevector batch."""
    if states.shape[-1] != 1 << op.qubits:
        raise OperatorError("state and operator qubit counts differ")
    if op.is_z_diagonal():
        return (np.abs(states) ** 2) @ op.diagonal_energies()
    conj = states.conj()
    vals = np.zeros(states.shape[0])
    for coeff, p in op.terms:
        perm, phase = pauli_action(p)
        tmp = states[:, perm]
        tmp *= phase
        tmp *= conj
        vals += coeff * tmp.sum(axis=1).real
    return vals


def apply_problem_unitary(
    state: np.ndarray, h_p: PauliSumOperator, dt: float
) -> np.ndarray:
    """exp(-i H_p dt) on a statevector (or batch); H_p must be Z-diagonal.

    Non-diagonal Hamiltonians go through problem_phases's dense fallback in
    evolve paths instead; this hot path stays a pure elementwise phase.
    """
    return state * problem_phases(h_p, dt)


def problem_phases(h_p: PauliSumOperator, dt: float) -> np.ndarray:
    """Per-basis-state phases exp(-i E(b) dt) of a Z-diagonal Hamiltonian."""
    if not h_p.is_z_diagonal():
        raise OperatorError("problem unitary fast path needs a Z-diagonal Hamiltonian")
    return np.exp(-1j * dt * h_p.diagonal_energies())


def apply_driver_unitary(
    state: np.ndarray, beta: float, dt: float, sign: int = 1
) -> np.ndarray:
    """Product of single-qubit rotations exp(-i beta sign dt X_j) over all qubits."""
    n = num_qubits(state)
    theta = beta * sign * dt
    if theta == 0.0:
        return state
    c = np.cos(theta)
    s = -1j * np.sin(theta)
    batched = state.ndim == 2
    m = state.shape[0] if batched else 1
    out = state.astype(complex, copy=True).reshape(m, 1 << n)
    for q in range(n):
        view = out.reshape(m, 1 << q, 2, -1)
        lo = view[:, :, 0, :].copy()
        hi = view[:, :, 1, :]
        view[:, :, 0, :] = c * lo + s * hi
        view[:, :, 1, :] = s * lo + c * hi
    return out if batched else out[0]


def dense_unitary_step(state: np.ndarray, h: PauliSumOperator, dt: float) -> np.ndarray:
    """exp(-i H dt)|psi> through dense diagonalization; general-H fallback."""
    n = num_qubits(state)
    if n > DENSE_MAX_QUBITS:
        raise OperatorError(f"dense unitary fallback capped at {DENSE_MAX_QUBITS} qubits")
    evals, evecs = np.linalg.eigh(h.to_dense())
    return evecs @ (np.exp(-1j * dt * evals) * (evecs.conj().T @ state))


def density_from_state(state: np.ndarray) -> np.ndarray:
    return np.outer(state, state.conj())


def check_hermitian(rho: np.ndarray, tol: float = 1e-10) -> None:
    drift = np.max(np.abs(rho - rho.conj().T))
    if drift > tol:
        raise OperatorError(f"density matrix Hermiticity drift {drift:.3e} > {tol:.1e}")


def purity(rho: np.ndarray) -> float:
    """Tr(rho^2)."""
    return float(np.real(np.sum(rho * rho.conj().T)))


def fidelity_with_pure(rho_ref: np.ndarray, rho: np.ndarray) -> float:
    """Tr(rho_ref rho); equals |<a|b>|^2 when both states are pure."""
    return float(np.real(np.sum(rho_ref * rho.T)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of rho - sigma."""
    if rho.shape != sigma.shape:
        raise OperatorError("density matrices have different shapes")
    diff = rho - sigma
    diff = 0.5 * (diff + diff.conj().T)
    eigs = np.linalg.eigvalsh(diff)
    return float(0.5 * np.sum(np.abs(eigs)))
