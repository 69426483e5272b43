"""Quasiprobability sampling of engineered (possibly non-physical) channels.

Each engineered term becomes a two-outcome factor: identity with probability
w' = (1 + exp(-2|nu| dt)) / 2, else the Pauli with the rate's sign recorded as
a parity flip.  The absolute branch weights of such a factor sum to 1, so the
per-layer sampling overhead is exactly 1; a negative factor instead shows up
as the known trace factor exp(-2|nu| dt), which divides the estimate when the
target is the trace-preserving signed-rate dynamics rather than the raw
factorized map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .noise_channels import ChannelFactor, NoiseModel, factor_weight
from .operators import PauliSumOperator, pauli_action
from .statekernel import expectation_batch, problem_phases, apply_driver_unitary
from .trajectories import EnsembleEstimate, combine_moments, moment_partials


class QpdError(ValueError):
    pass


@dataclass(frozen=True)
class QpdLayerPlan:
    """Sampling plan for one layer's engineered channel."""

    factors: tuple[ChannelFactor, ...]
    layer_overhead: float
    trace_factor: float


@dataclass(frozen=True)
class TotalOverhead:
    """Two overhead notions: the rate-integral form and the sampled |weight| product."""

    rate_integral: float
    factor_product: float


def plan_layer(engineered: NoiseModel, dt: float = 1.0) -> QpdLayerPlan:
    """Per-term factors with w' = (1+exp(-2|nu| dt))/2 and sign = sgn(nu)."""
    factors = []
    trace_factor = 1.0
    overhead = 1.0
    for p, nu in engineered.terms:
        w = factor_weight(nu, dt)
        sign = 1 if nu >= 0 else -1
        factors.append(ChannelFactor(p, w, sign))
        # |w| + |sign (1-w)| = 1 for every two-outcome factor.
        overhead *= w + (1.0 - w)
        if sign < 0:
            trace_factor *= float(np.exp(-2.0 * abs(nu) * dt))
    return QpdLayerPlan(tuple(factors), overhead, trace_factor)


def total_overhead(plans, engineered_sequence=None, dt: float = 1.0) -> TotalOverhead:
    """Product of per-layer overheads plus the rate-integral overhead
    exp[sum_k integral (|nu_k| + nu_k) dt] over a matching engineered-model sequence."""
    factor_product = 1.0
    for plan in plans:
        factor_product *= plan.layer_overhead
    rate_integral = 1.0
    if engineered_sequence is not None:
        exponent = 0.0
        for model in engineered_sequence:
            for _, nu in model.terms:
                exponent += (abs(nu) + nu) * dt
        rate_integral = float(np.exp(exponent))
    return TotalOverhead(rate_integral, factor_product)


@dataclass(frozen=True)
class QpdLayer:
    """One circuit layer: engineered plan, then intrinsic channel, then unitaries."""

    plan: QpdLayerPlan
    intrinsic: NoiseModel | None = None
    h_p: PauliSumOperator | None = None
    beta: float = 0.0


@dataclass(frozen=True)
class SignedSample:
    """One sampled branch assignment: chosen Pauli (or None) per engineered
    factor per layer, with the accumulated parity."""

    operations: tuple[tuple[str | None, ...], ...]
    parity: int


def draw_sample(layers, seed: int, index: int) -> SignedSample:
    """Draw the engineered branch choices one sample would make.

    Uses the same substream as the estimators, so sample `index` here picks
    exactly the branches it picks inside `estimate`/`QpdEnsemble`.
    """
    operations = []
    parity = 1
    draw_counter = 0
    for layer in layers:
        chosen = []
        for factor in layer.plan.factors:
            u = rng.uniform(seed, rng.STREAM_QPD, index, draw=draw_counter)
            draw_counter += 1
            if u >= factor.w:
                chosen.append(factor.pauli.label)
                if factor.sign < 0:
                    parity = -parity
            else:
                chosen.append(None)
        if layer.intrinsic is not None:
            draw_counter += len(layer.intrinsic.terms)
        operations.append(tuple(chosen))
    return SignedSample(tuple(operations), parity)


@dataclass(frozen=True)
class QpdResult:
    mean: float
    stderr: float
    overhead: float
    trace_factor: float

    @property
    def normalized_mean(self) -> float:
        """Estimate for the trace-preserving signed-rate dynamics."""
        return self.mean / self.trace_factor

    @property
    def normalized_stderr(self) -> float:
        return self.stderr / self.trace_factor


class QpdEnsemble:
    """Batch of circuit samples with parity bookkeeping, one layer at a time.

    All sampled branches are Pauli-or-identity, so every statevector stays
    normalized; the signed weight of sample m is parity_m divided by the
    accumulated trace factor, which makes the weighted ensemble estimate the
    trace-preserving signed-rate dynamics directly (E[weight] = 1).
    """

    def __init__(self, initial: np.ndarray, count: int, seed: int, driver_sign: int = 1):
        self.dim = initial.shape[0]
        self.qubits = self.dim.bit_length() - 1
        self.count = count
        self.seed = seed
        self.driver_sign = driver_sign
        self.layer = 0
        self.draw = 0
        self.trace_factor = 1.0
        self.states = np.tile(initial.astype(complex), (count, 1))
        self.parity = np.ones(count)

    def _uniform(self) -> np.ndarray:
        u = rng.uniforms(self.seed, rng.STREAM_QPD, np.arange(self.count), draw=self.draw)
        self.draw += 1
        return u

    def _apply_mixture(self, pauli, weight: float, flip_parity: bool):
        fire = self._uniform() >= weight
        if fire.any():
            perm, phase = pauli_action(pauli)
            self.states[fire] = self.states[fire][:, perm] * phase
            if flip_parity:
                self.parity[fire] *= -1.0

    def advance_layer(
        self,
        h_p: PauliSumOperator,
        beta: float,
        engineered: NoiseModel | None,
        intrinsic: NoiseModel | None,
        dt: float,
    ):
        """Engineered factors, then the intrinsic channel, then the unitaries."""
        if engineered is not None:
            plan = plan_layer(engineered, dt)
            for factor in plan.factors:
                self._apply_mixture(factor.pauli, factor.w, factor.sign < 0)
            self.trace_factor *= plan.trace_factor
        if intrinsic is not None:
            for p, lam in intrinsic.terms:
                self._apply_mixture(p, factor_weight(lam, dt), False)
        self.states *= problem_phases(h_p, dt)
        self.states = apply_driver_unitary(self.states, beta, dt, self.driver_sign)
        self.layer += 1

    def estimate(
        self,
        diagonal_observables: dict[str, np.ndarray] | None = None,
        pauli_observables: dict[str, PauliSumOperator] | None = None,
        want_rho: bool = False,
    ) -> EnsembleEstimate:
        diagonal_observables = diagonal_observables or {}
        pauli_observables = pauli_observables or {}
        want_rho = want_rho and self.qubits <= 8
        w = self.parity / self.trace_factor
        part = moment_partials(
            self.states, w, diagonal_observables, pauli_observables, want_rho
        )
        return combine_moments(
            [part], list(diagonal_observables) + list(pauli_observables),
            total=self.count, layer=self.layer, want_rho=want_rho,
        )


def estimate(
    initial: np.ndarray,
    layers,
    observable: PauliSumOperator,
    samples: int,
    seed: int,
    dt: float = 1.0,
    driver_sign: int = 1,
    chunk: int = 8192,
) -> QpdResult:
    """Monte Carlo estimate of tr[O (U_L F_L ... U_1 F_1)(rho)] by branch sampling.

    Every sample walks the circuit once: each engineered factor applies its
    Pauli with probability 1 - w' (recording the sign), each intrinsic term
    applies its Pauli with its physical mixing probability, then the layer
    unitaries act.  The sample value is the measured expectation times the
    accumulated parity, scaled by the (unit) sampling overhead.
    """
    if samples < 1:
        raise QpdError("need at least one sample")
    total = 0.0
    total_sq = 0.0
    overhead = 1.0
    trace_factor = 1.0
    for layer in layers:
        overhead *= layer.plan.layer_overhead
        trace_factor *= layer.plan.trace_factor
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        idx = np.arange(done, done + m)
        states = np.tile(initial.astype(complex), (m, 1))
        parity = np.ones(m)
        draw_counter = 0
        for layer in layers:
            for factor in layer.plan.factors:
                u = rng.uniforms(seed, rng.STREAM_QPD, idx, draw=draw_counter)
                draw_counter += 1
                fire = u >= factor.w
                if fire.any():
                    perm, phase = pauli_action(factor.pauli)
                    states[fire] = states[fire][:, perm] * phase
                    if factor.sign < 0:
                        parity[fire] *= -1.0
            if layer.intrinsic is not None:
                for p, lam in layer.intrinsic.terms:
                    u = rng.uniforms(seed, rng.STREAM_QPD, idx, draw=draw_counter)
                    draw_counter += 1
                    fire = u >= factor_weight(lam, dt)
                    if fire.any():
                        perm, phase = pauli_action(p)
                        states[fire] = states[fire][:, perm] * phase
            if layer.h_p is not None:
                states *= problem_phases(layer.h_p, dt)
                states = apply_driver_unitary(states, layer.beta, dt, driver_sign)
        values = parity * expectation_batch(states, observable) * overhead
        total += values.sum()
        total_sq += (values * values).sum()
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    stderr = float(np.sqrt(var / samples))
    return QpdResult(float(mean), stderr, overhead, trace_factor)
