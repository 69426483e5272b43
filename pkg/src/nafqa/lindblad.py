"""Dense master-equation integrator: the ground truth for trajectory tests.

Integrates d rho/dt = -i[H(t), rho] + sum_k s_k (L rho L^+ - {L^+L, rho}/2)
with classical fixed-step RK4.  Signed rates make the generator
pseudo-Lindbladian (trace-preserving and Hermiticity-preserving, but not
completely positive), which is exactly what the signed trajectories sample.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .noise_channels import NoiseModel
from .operators import OperatorError, PauliSumOperator
from .statekernel import (
    apply_driver_unitary,
    apply_problem_unitary,
    dense_unitary_step,
)

ORACLE_MAX_QUBITS = 6


class IntegrationError(RuntimeError):
    """RK4 step instability (Hermiticity drift beyond tolerance)."""


@dataclass
class LindbladGenerator:
    """Right-hand side -i[H, rho] + sum_k s_k D[L_k](rho) with fixed H."""

    hamiltonian: np.ndarray
    jumps: list[tuple[np.ndarray, float, int]] = field(default_factory=list)

    def __post_init__(self):
        dim = self.hamiltonian.shape[0]
        if dim > 1 << ORACLE_MAX_QUBITS:
            raise OperatorError(f"oracle capped at {ORACLE_MAX_QUBITS} qubits")
        self._ops = []
        for op, rate, sign in self.jumps:
            if op.shape != self.hamiltonian.shape:
                raise OperatorError("jump operator and Hamiltonian shapes differ")
            if rate < 0:
                raise OperatorError("rates are magnitudes; use sign=-1 for negative rates")
            l = np.sqrt(rate) * op
            self._ops.append((l, l.conj().T @ l, sign))

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h)
        for l, ldl, sign in self._ops:
            out += sign * (l @ rho @ l.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
        return out


def generator_for(
    h: PauliSumOperator, model: NoiseModel | None, beta: float = 0.0,
    h_d: PauliSumOperator | None = None,
) -> LindbladGenerator:
    """Generator for H + beta*H_d with Pauli jump terms from a noise model."""
    ham = h.to_dense()
    if h_d is not None and beta != 0.0:
        ham = ham + beta * h_d.to_dense()
    jumps = []
    if model is not None:
        for p, rate in model.terms:
            if rate == 0.0:
                continue
            jumps.append((p.to_dense(), abs(rate), 1 if rate >= 0 else -1))
    return LindbladGenerator(ham, jumps)


def rk4_step(gen: LindbladGenerator, rho: np.ndarray, dt: float) -> np.ndarray:
    k1 = gen.rhs(rho)
    k2 = gen.rhs(rho + 0.5 * dt * k1)
    k3 = gen.rhs(rho + 0.5 * dt * k2)
    k4 = gen.rhs(rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    rho0: np.ndarray,
    generators,
    dt: float,
    substeps: int = 1,
    hermiticity_tol: float = 1e-6,
) -> list[np.ndarray]:
    """Propagate rho0 through one generator per layer; returns rho after each layer.

    Each layer holds its controls constant and advances time dt (split into
    `substeps` RK4 steps).  The returned list has one entry per layer.
    """
    if dt <= 0:
        raise OperatorError("dt must be positive")
    rho = rho0.astype(complex, copy=True)
    out = []
    h = dt / substeps
    for gen in generators:
        for _ in range(substeps):
            rho = rk4_step(gen, rho, h)
        drift = np.max(np.abs(rho - rho.conj().T))
        if not np.isfinite(drift) or drift > hermiticity_tol:
            raise IntegrationError(f"Hermiticity drift {drift:.3e} after a layer")
        out.append(rho.copy())
    return out


def integrate_constant(
    rho0: np.ndarray, gen: LindbladGenerator, total_time: float, dt: float,
    substeps: int = 1,
) -> list[np.ndarray]:
    """Fixed-generator convenience wrapper; returns rho at every multiple of dt."""
    layers = int(round(total_time / dt))
    return integrate(rho0, [gen] * layers, dt, substeps=substeps)


def evolve_closed(
    psi0: np.ndarray,
    h_p: PauliSumOperator,
    h_d: PauliSumOperator,
    betas,
    dt: float,
) -> list[np.ndarray]:
    """Ideal Trotterized feedback circuit: per layer exp(-i b H_d dt) exp(-i H_p dt).

    `betas` is the per-layer schedule; returns the state after each layer.
    """
    psi = psi0.astype(complex, copy=True)
    z_diag = h_p.is_z_diagonal()
    x_coeff = uniform_x_coefficient(h_d)
    out = []
    for beta in betas:
        if z_diag:
            psi = apply_problem_unitary(psi, h_p, dt)
        else:
            psi = dense_unitary_step(psi, h_p, dt)
        if x_coeff is not None:
            psi = apply_driver_unitary(psi, beta * x_coeff, dt, sign=1)
        else:
            psi = dense_unitary_step(psi, h_d.scaled(beta), dt)
        out.append(psi.copy())
    return out


def uniform_x_coefficient(h_d: PauliSumOperator) -> float | None:
    """c if H_d = c * sum_j X_j over every qubit, else None."""
    if h_d.num_terms != h_d.qubits:
        return None
    coeffs = set()
    covered = set()
    for c, p in h_d.terms:
        if p.weight != 1 or not set(p.label) <= {"I", "X"}:
            return None
        coeffs.add(c)
        covered.add(p.label.index("X"))
    if len(coeffs) == 1 and covered == set(range(h_d.qubits)):
        return coeffs.pop()
    return None


def discrete_layer_map(
    rho: np.ndarray,
    h_p: PauliSumOperator,
    beta: float,
    model: NoiseModel | None,
    dt: float,
    driver_sign: int = 1,
) -> np.ndarray:
    """Expected one-layer map of the trajectory scheme on a density matrix.

    Unitary layer first, then the first-order channel step
    rho + dt * sum_k r_k (P rho P - rho); this is the infinite-sample limit of
    the signed trajectory step and carries its O(dt) splitting error.
    """
    dim = rho.shape[0]
    phases = np.exp(-1j * dt * h_p.diagonal_energies())
    out = (phases[:, None] * rho) * phases.conj()[None, :]
    # Row i of the batched call is U_d applied to basis state i, i.e. U_d^T.
    u_d = apply_driver_unitary(np.eye(dim, dtype=complex), beta, dt, sign=driver_sign).T
    out = u_d @ out @ u_d.conj().T
    if model is not None:
        for p, rate in model.terms:
            if rate == 0.0:
                continue
            pd = p.to_dense()
            out = out + dt * rate * (pd @ out @ pd.conj().T - out)
    return out
