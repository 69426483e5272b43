"""Signed quantum-trajectory ensembles for master equations with signed rates.

Each layer applies the problem and driver unitaries, then samples at most one
Pauli jump: jump k fires with probability |rate_k| * dt, applies P_k, and
multiplies the trajectory's classical sign by sgn(rate_k).  The no-jump
branch rescales the state by

    f = sqrt((1 - sum_k rate_k dt) / (1 - sum_k |rate_k| dt)),

the importance weight that keeps the signed ensemble average an exact
realization of the first-order channel step: E[s |psi><psi|] advances by
rho + dt sum_k rate_k (P rho P - rho), so the signed mean squared norm stays
exactly 1 and the trace estimate is unbiased.  (For nonnegative rates f = 1
and every trajectory keeps norm 1.)  Ensemble averages divide by the signed
normalization N = sum_m s_m <psi_m|psi_m>.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from .operators import PauliString, PauliSumOperator, pauli_action
from .statekernel import apply_driver_unitary, expectation_batch, problem_phases

NORM_SQ_MIN = 1e-6
NORM_SQ_MAX = 1e6
JUMP_BUDGET_WARN = 0.1
JUMP_BUDGET_MAX = 0.5
DENSE_ESTIMATE_MAX_QUBITS = 8
DEFAULT_CHUNK = 8192


class TrajectoryError(RuntimeError):
    pass


class JumpBudgetError(TrajectoryError):
    """sum_k |rate_k| dt too large for one-jump-per-layer sampling."""


class NormalizationError(TrajectoryError):
    """Signed ensemble normalization dropped to <= 0."""

    def __init__(self, layer: int, value: float):
        super().__init__(
            f"signed normalization {value:.6g} <= 0 at layer {layer}; "
            "more trajectories are needed for the accumulated negativity"
        )
        self.layer = layer
        self.value = value


class JumpBudgetWarning(UserWarning):
    pass


@dataclass
class SignedTrajectory:
    """One stochastic trajectory: statevector, classical sign, RNG coordinates."""

    state: np.ndarray
    sign: int = 1
    seed: int = 0
    index: int = 0
    step: int = 0

    def norm_sq(self) -> float:
        return float(np.real(np.vdot(self.state, self.state)))


@dataclass
class EnsembleEstimate:
    """Signed-ensemble summary for one layer."""

    normalization: float
    sample_count: int
    aborted: int
    observables: dict[str, float]
    stderrs: dict[str, float]
    rho: np.ndarray | None = None

    @property
    def trace(self) -> float:
        return self.normalization / self.sample_count


@dataclass(frozen=True)
class LayerControls:
    """Controls for one layer: driver field and effective Pauli rates."""

    beta: float
    rates: tuple[tuple[PauliString, float], ...] = ()


def _jump_table(rates, dt: float):
    """Cumulative branch thresholds; raises/warns on the jump budget."""
    active = [(p, r) for p, r in rates if r != 0.0]
    probs = np.array([abs(r) * dt for _, r in active])
    budget = float(probs.sum())
    if budget >= JUMP_BUDGET_MAX:
        raise JumpBudgetError(
            f"sum |rate| dt = {budget:.3f} >= {JUMP_BUDGET_MAX}; reduce dt or the rates"
        )
    if budget > JUMP_BUDGET_WARN:
        warnings.warn(
            f"sum |rate| dt = {budget:.3f} > {JUMP_BUDGET_WARN}; "
            "one-jump-per-layer sampling is getting coarse",
            JumpBudgetWarning,
            stacklevel=3,
        )
    signed_sum = dt * sum(r for _, r in active)
    no_jump_factor = float(np.sqrt((1.0 - signed_sum) / (1.0 - budget)))
    edges = np.concatenate(([0.0], np.cumsum(probs)))
    return active, edges, no_jump_factor


class TrajectoryEnsemble:
    """Batch of independent signed trajectories evolved layer by layer."""

    def __init__(
        self,
        initial: np.ndarray,
        count: int,
        seed: int,
        driver_sign: int = 1,
        chunk: int = DEFAULT_CHUNK,
        workers: int = 1,
    ):
        self.dim = initial.shape[0]
        self.qubits = self.dim.bit_length() - 1
        self.count = count
        self.seed = seed
        self.driver_sign = driver_sign
        self.chunk = max(1, chunk)
        self.workers = max(1, workers)
        self.layer = 0
        self.states = np.tile(initial.astype(complex), (count, 1))
        self.signs = np.ones(count)
        self.alive = np.ones(count, dtype=bool)

    def _chunks(self):
        return [
            slice(lo, min(lo + self.chunk, self.count))
            for lo in range(0, self.count, self.chunk)
        ]

    def _run_chunked(self, fn):
        chunks = self._chunks()
        if self.workers == 1 or len(chunks) == 1:
            return [fn(sl) for sl in chunks]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, chunks))

    def advance_layer(self, h_p: PauliSumOperator, controls: LayerControls, dt: float):
        """Apply exp(-i H_p dt), exp(-i beta H_d dt), then sample one jump."""
        phases = problem_phases(h_p, dt)
        active, edges, no_jump_factor = _jump_table(controls.rates, dt)
        actions = [pauli_action(p) for p, _ in active]
        jump_signs = [1.0 if r >= 0 else -1.0 for _, r in active]
        step = self.layer

        def work(sl: slice):
            states = self.states[sl]
            states *= phases
            states = apply_driver_unitary(states, controls.beta, dt, self.driver_sign)
            u = rng.uniforms(self.seed, rng.STREAM_JUMPS, np.arange(sl.start, sl.stop), step)
            for k, (perm, phase) in enumerate(actions):
                mask = (u >= edges[k]) & (u < edges[k + 1])
                if mask.any():
                    states[mask] = states[mask][:, perm] * phase
                    if jump_signs[k] < 0:
                        self.signs[sl][mask] *= -1.0
            no_jump = u >= edges[-1]
            if no_jump_factor != 1.0 and no_jump.any():
                states[no_jump] *= no_jump_factor
            self.states[sl] = states
            norm_sq = np.einsum("md,md->m", states.conj(), states).real
            bad = (norm_sq > NORM_SQ_MAX) | (norm_sq < NORM_SQ_MIN)
            self.alive[sl] &= ~bad

        self._run_chunked(work)
        self.layer += 1

    def estimate(
        self,
        diagonal_observables: dict[str, np.ndarray] | None = None,
        pauli_observables: dict[str, PauliSumOperator] | None = None,
        want_rho: bool = False,
    ) -> EnsembleEstimate:
        """Signed averages <O> = sum_m s_m <psi|O|psi> / N with delta-method stderrs."""
        diagonal_observables = diagonal_observables or {}
        pauli_observables = pauli_observables or {}
        want_rho = want_rho and self.qubits <= DENSE_ESTIMATE_MAX_QUBITS

        def work(sl: slice):
            w = self.signs[sl] * self.alive[sl]
            return moment_partials(
                self.states[sl], w, diagonal_observables, pauli_observables, want_rho
            )

        parts = self._run_chunked(work)
        return combine_moments(
            parts, list(diagonal_observables) + list(pauli_observables),
            total=self.count, layer=self.layer, want_rho=want_rho,
        )


def moment_partials(
    states: np.ndarray,
    weights: np.ndarray,
    diagonal_observables: dict[str, np.ndarray],
    pauli_observables: dict[str, PauliSumOperator],
    want_rho: bool,
) -> dict:
    """Signed-sum partials over one batch: y = w <psi|psi>, x = w <psi|O|psi>."""
    probs = np.abs(states) ** 2
    y = weights * probs.sum(axis=1)
    xs = [weights * (probs @ vec) for vec in diagonal_observables.values()]
    xs += [weights * expectation_batch(states, op) for op in pauli_observables.values()]
    part = {
        "alive": int(np.count_nonzero(weights)),
        "sum_y": y.sum(),
        "sum_yy": (y * y).sum(),
        "sum_x": np.array([x.sum() for x in xs]),
        "sum_xx": np.array([(x * x).sum() for x in xs]),
        "sum_xy": np.array([(x * y).sum() for x in xs]),
    }
    if want_rho:
        part["rho"] = (states * weights[:, None]).T @ states.conj()
    return part


def combine_moments(
    parts, names, total: int, layer: int, want_rho: bool
) -> EnsembleEstimate:
    """Merge batch partials (in order) into ratio estimates with delta-method stderrs."""
    alive = sum(p["alive"] for p in parts)
    if alive == 0:
        raise NormalizationError(layer, 0.0)
    sum_y = sum(p["sum_y"] for p in parts)
    if sum_y <= 0:
        raise NormalizationError(layer, float(sum_y))
    z = len(names)
    sum_x = sum((p["sum_x"] for p in parts), np.zeros(z))
    sum_xx = sum((p["sum_xx"] for p in parts), np.zeros(z))
    sum_xy = sum((p["sum_xy"] for p in parts), np.zeros(z))
    sum_yy = sum(p["sum_yy"] for p in parts)
    mean_y = sum_y / alive
    var_y = max(sum_yy / alive - mean_y**2, 0.0)
    observables, stderrs = {}, {}
    for i, name in enumerate(names):
        mean_x = sum_x[i] / alive
        ratio = mean_x / mean_y
        var_x = max(sum_xx[i] / alive - mean_x**2, 0.0)
        cov = sum_xy[i] / alive - mean_x * mean_y
        var_ratio = (var_x - 2.0 * ratio * cov + ratio**2 * var_y) / (alive * mean_y**2)
        observables[name] = float(ratio)
        stderrs[name] = float(np.sqrt(max(var_ratio, 0.0)))
    rho = None
    if want_rho:
        rho = sum(p["rho"] for p in parts) / sum_y
    return EnsembleEstimate(
        normalization=float(sum_y),
        sample_count=alive,
        aborted=total - alive,
        observables=observables,
        stderrs=stderrs,
        rho=rho,
    )


def step_trajectory(
    traj: SignedTrajectory,
    h_p: PauliSumOperator,
    beta: float,
    dt: float,
    rates,
    driver_sign: int = 1,
) -> SignedTrajectory:
    """One layer of a single trajectory (same sampling rule as the batch engine)."""
    state = traj.state * problem_phases(h_p, dt)
    state = apply_driver_unitary(state, beta, dt, driver_sign)
    active, edges, no_jump_factor = _jump_table(rates, dt)
    u = rng.uniform(traj.seed, rng.STREAM_JUMPS, traj.index, traj.step)
    sign = traj.sign
    k = int(np.searchsorted(edges, u, side="right")) - 1
    if k < len(active) and u < edges[-1]:
        p, rate = active[k]
        perm, phase = pauli_action(p)
        state = state[perm] * phase
        if rate < 0:
            sign = -sign
    else:
        state = state * no_jump_factor
    return SignedTrajectory(state, sign, traj.seed, traj.index, traj.step + 1)


def step_trajectory_general(
    traj: SignedTrajectory,
    hamiltonian: np.ndarray | None,
    jumps,
    dt: float,
) -> SignedTrajectory:
    """One Monte Carlo wavefunction step with arbitrary jump operators.

    ``jumps`` is a list of (operator matrix, rate >= 0, sign) triples; the
    jump probability is rate * ||L psi||^2 / ||psi||^2 * dt, state-dependent
    in general.  The no-jump branch follows the non-Hermitian drift
    (1 - i dt H + (dt/2) sum_k s_k rate_k L^+L) direction and is rescaled so
    the signed expected squared norm is exactly preserved, matching the
    Pauli fast path.
    """
    psi = traj.state
    norm_sq = float(np.real(np.vdot(psi, psi)))
    applied = []
    probs = []
    signed_probs = []
    for op, rate, sign in jumps:
        if rate < 0:
            raise TrajectoryError("rates are magnitudes; negative dynamics use sign=-1")
        op_psi = op @ psi
        r = rate * float(np.real(np.vdot(op_psi, op_psi))) / norm_sq
        applied.append((op, op_psi, sign))
        probs.append(r * dt)
        signed_probs.append(sign * r * dt)
    budget = float(sum(probs))
    if budget >= JUMP_BUDGET_MAX:
        raise JumpBudgetError(f"sum r_k dt = {budget:.3f} >= {JUMP_BUDGET_MAX}")
    edges = np.concatenate(([0.0], np.cumsum(probs)))
    u = rng.uniform(traj.seed, rng.STREAM_JUMPS, traj.index, traj.step)
    sign = traj.sign
    if u < edges[-1]:
        k = int(np.searchsorted(edges, u, side="right")) - 1
        op, op_psi, jump_sign = applied[k]
        new = op_psi * np.sqrt(norm_sq / np.real(np.vdot(op_psi, op_psi)))
        sign *= jump_sign
    else:
        drift = psi.astype(complex, copy=True)
        if hamiltonian is not None:
            drift -= 1j * dt * (hamiltonian @ psi)
        for (op, op_psi, op_sign), (_, rate, _) in zip(applied, jumps):
            drift -= 0.5 * dt * op_sign * rate * (op.conj().T @ op_psi)
        target_sq = norm_sq * (1.0 - sum(signed_probs)) / (1.0 - budget)
        new = drift * np.sqrt(target_sq / np.real(np.vdot(drift, drift)))
    return SignedTrajectory(new, sign, traj.seed, traj.index, traj.step + 1)


def run_ensemble(
    initial: np.ndarray,
    h_p: PauliSumOperator,
    schedule,
    dt: float,
    count: int,
    seed: int,
    driver_sign: int = 1,
    diagonal_observables: dict[str, np.ndarray] | None = None,
    pauli_observables: dict[str, PauliSumOperator] | None = None,
    want_rho: bool = False,
    workers: int = 1,
) -> list[EnsembleEstimate]:
    """Evolve `count` trajectories through a fixed schedule of LayerControls.

    Returns one EnsembleEstimate per layer.  Runs with the same seed are
    bit-reproducible, and estimates do not depend on `workers`.
    """
    if count < 1:
        raise TrajectoryError("need at least one trajectory")
    ens = TrajectoryEnsemble(initial, count, seed, driver_sign, workers=workers)
    out = []
    for controls in schedule:
        ens.advance_layer(h_p, controls, dt)
        out.append(
            ens.estimate(diagonal_observables, pauli_observables, want_rho=want_rho)
        )
    return out
