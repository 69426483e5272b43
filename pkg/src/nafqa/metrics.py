"""Figures of merit: approximation ratio, success probability, relative error,
and the short-time fidelity expansion."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .noise_channels import NoiseModel
from .operators import PauliSumOperator
from .statekernel import expectation

GROUND_DEGENERACY_TOL = 1e-9


class MetricError(ValueError):
    pass


@dataclass
class RunRecord:
    """Per-layer record; the CSV row schema plus in-memory extras."""

    layer: int
    t: float
    r: float
    phi: float
    purity: float
    trace: float
    delta: float
    beta: float
    gammas: dict[str, float] = field(default_factory=dict)
    aborted_trajectories: int = 0
    # Not part of the CSV contract; used for per-step significance checks.
    r_stderr: float = 0.0
    phi_stderr: float = 0.0
    flags: str = ""


@dataclass(frozen=True)
class GroundSpace:
    """Exact diagonal ground data of a Z-diagonal problem Hamiltonian."""

    energy: float
    states: tuple[int, ...]
    projector_diag: np.ndarray


def ground_space(h_p: PauliSumOperator, tol: float = GROUND_DEGENERACY_TOL) -> GroundSpace:
    energies = h_p.diagonal_energies()
    e_min = float(energies.min())
    members = np.flatnonzero(energies <= e_min + tol)
    diag = np.zeros(energies.shape[0])
    diag[members] = 1.0
    return GroundSpace(e_min, tuple(int(b) for b in members), diag)


def approximation_ratio(energy_value: float, ground_energy: float) -> float:
    """r = <H_p> / <H_p>_min; rejects ground energies indistinguishable from 0."""
    if abs(ground_energy) <= GROUND_DEGENERACY_TOL:
        raise MetricError("ground energy is zero; the ratio is undefined")
    return energy_value / ground_energy


def success_probability(rho: np.ndarray, ground: GroundSpace) -> float:
    """Population of the full ground subspace, sum_z <z|rho|z>."""
    diag = np.real(np.diagonal(rho))
    return float(diag[list(ground.states)].sum())


def relative_error(trace: float) -> float:
    """delta = (Tr - 1) * 100, from the signed ensemble trace before renormalization."""
    return (trace - 1.0) * 100.0


def fidelity_shorttime(rho0: np.ndarray, model: NoiseModel, t: float) -> float:
    """First-order fidelity decay 1 - t * sum_k rate_k (1 - <P_k>^2).

    Valid for pure initial states only (P^2 = I turns the variance into
    1 - <P>^2).
    """
    pur = float(np.real(np.sum(rho0 * rho0.conj().T)))
    if abs(pur - 1.0) > 1e-8:
        raise MetricError(f"initial state has purity {pur:.6f}; expansion needs a pure state")
    decay = 0.0
    for p, rate in model.terms:
        mean = expectation(rho0, PauliSumOperator(p.qubits, ((1.0, p),)))
        decay += rate * (1.0 - mean**2)
    return 1.0 - t * decay


def loglog_slope(x, y) -> float:
    """OLS slope of log(y) against log(x)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise MetricError("need at least two points for a slope")
    lx = lx - lx.mean()
    return float(np.sum(lx * (ly - ly.mean())) / np.sum(lx * lx))
