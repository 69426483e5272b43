"""Lyapunov feedback laws and the control-parameter bounds.

The driver field is beta = -<i[H_d, H_p]> and each controlled Pauli rate is
driven to minus its energy-raise coefficient C_k = <P H_p P> - <H_p>,
clamped at a threshold so the signed-sampling cost stays bounded.  Both
choices make every term of d<H_p>/dt = beta*A + sum_k rate_k * C_k a
negative square.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise_channels import ChannelKind, NoiseModel, dissipator_expectation
from .operators import OperatorNorms, PauliString, PauliSumOperator, commutator_i, norms
from .statekernel import expectation

DEFAULT_THRESHOLD = 0.15
LCDFS_EPS = 1e-6


class ControlError(ValueError):
    pass


@dataclass(frozen=True)
class ControlState:
    """Controls chosen for one layer, plus the feedback inputs behind them."""

    layer_index: int
    beta: float
    commutator_value: float
    gammas: dict[str, float]
    raise_coefficients: dict[str, float]
    threshold: float


@dataclass(frozen=True)
class ControlBounds:
    beta_lower: float
    dt_upper: float
    gamma_abs_upper: float
    # Provable floor -||H_p|| ||H_d|| / 2 (variance <= squared half-range);
    # beta_lower above is the tighter sqrt-seminorm form used for reporting.
    beta_lower_guaranteed: float = -np.inf


def compute_beta(commutator_value: float) -> float:
    """beta = -A with A = <i[H_d, H_p]>."""
    if not np.isfinite(commutator_value):
        raise ControlError(f"invalid feedback input A = {commutator_value}")
    return -commutator_value


def clamp_gamma(c_k: float, threshold: float) -> float:
    """-min(C_k, th) for raising terms, -C_k (a positive rate) otherwise."""
    if threshold < 0:
        raise ControlError("threshold must be >= 0")
    return -min(c_k, threshold) if c_k > 0 else -c_k


def compute_gammas(
    raise_coefficients: dict[str, float],
    model: NoiseModel,
    controlled: set[str],
    threshold: float = DEFAULT_THRESHOLD,
) -> dict[str, float]:
    """Effective rates: clamped feedback on controlled terms, intrinsic elsewhere.

    Controlled terms absent from the intrinsic model are allowed (their
    intrinsic rate counts as zero).
    """
    missing = controlled - set(raise_coefficients)
    if missing:
        raise ControlError(f"no raise coefficient supplied for {sorted(missing)}")
    labels = list(model.labels)
    labels += [label for label in sorted(controlled) if label not in labels]
    gammas = {}
    for label in labels:
        if label in controlled:
            gammas[label] = clamp_gamma(raise_coefficients[label], threshold)
        else:
            gammas[label] = model.rate_of(label)
    return gammas


def compute_nu(gammas: dict[str, float], model: NoiseModel) -> NoiseModel:
    """Engineered rates nu_k = Gamma_k - lambda_k (missing intrinsic terms count 0)."""
    terms = []
    seen = set()
    for p, lam in model.terms:
        terms.append((p, gammas.get(p.label, lam) - lam))
        seen.add(p.label)
    for label, gamma in gammas.items():
        if label not in seen:
            terms.append((PauliString(label), gamma))
    return NoiseModel(model.qubits or len(next(iter(gammas))), tuple(terms), ChannelKind.ENGINEERED)


def raise_operator(h_p: PauliSumOperator, p: PauliString) -> PauliSumOperator:
    """O_k = P H_p P - H_p = -2 * (anticommuting part of H_p)."""
    terms = [(-2.0 * c, q) for c, q in h_p.terms if not p.commutes_with(q)]
    return PauliSumOperator(h_p.qubits, tuple(terms))


def raise_coefficient(rho_or_state: np.ndarray, h_p: PauliSumOperator, p: PauliString) -> float:
    """C_k = <P H_p P> - <H_p> evaluated on a state or density matrix."""
    return expectation(rho_or_state, raise_operator(h_p, p))


def compute_lcdfs_gamma(
    rho: np.ndarray,
    model: NoiseModel,
    h_p: PauliSumOperator,
    h_n: PauliSumOperator,
    eps: float = LCDFS_EPS,
) -> float:
    """Control field gamma = -Tr(D[rho] H_p) / <i[H_n, H_p]> for dissipator cancellation.

    Raises when the denominator is within eps of zero: no such control exists
    at this state.
    """
    comm = commutator_i(h_n, h_p)
    if comm.is_zero():
        raise ControlError("[H_n, H_p] = 0: control field is undefined")
    denom = expectation(rho, comm)
    if abs(denom) <= eps:
        raise ControlError(
            f"<i[H_n, H_p]> = {denom:.3e} within eps={eps:.1e}; no control at this state"
        )
    return -dissipator_expectation(rho, model, h_p) / denom


def control_bounds(norms_p: OperatorNorms, norms_d: OperatorNorms) -> ControlBounds:
    """Analytic bounds: beta >= -sqrt(||H_p||) sqrt(||H_d||) / 2,
    dt <= 1 / (4 ||H_p||_2 ||H_d||_2^2), |rate| <= 2 ||H_p||_2."""
    n_p = np.sqrt(norms_p.seminorm)
    n_d = np.sqrt(norms_d.seminorm)
    denom = 4.0 * norms_p.spectral * norms_d.spectral**2
    return ControlBounds(
        beta_lower=-0.5 * n_p * n_d,
        dt_upper=np.inf if denom == 0 else 1.0 / denom,
        gamma_abs_upper=2.0 * norms_p.spectral,
        beta_lower_guaranteed=-0.5 * norms_p.seminorm * norms_d.seminorm,
    )


@dataclass(frozen=True)
class BoundsReport:
    beta_ok: bool
    dt_ok: bool
    gamma_ok: bool
    fidelity_ok: bool | None
    messages: tuple[str, ...]

    @property
    def all_ok(self) -> bool:
        return self.beta_ok and self.dt_ok and self.gamma_ok and self.fidelity_ok is not False


def validate_bounds(
    control: ControlState,
    bounds: ControlBounds,
    dt: float,
    h_p: PauliSumOperator | None = None,
    model: NoiseModel | None = None,
    fidelity: float | None = None,
) -> BoundsReport:
    """Check the analytic control bounds; warnings only, never a hard failure."""
    messages = []
    beta_ok = control.beta >= bounds.beta_lower - 1e-12
    if not beta_ok:
        messages.append(
            f"layer {control.layer_index}: beta = {control.beta:.4f} "
            f"below the bound {bounds.beta_lower:.4f}"
        )
    dt_ok = dt <= bounds.dt_upper + 1e-12
    if not dt_ok:
        messages.append(f"dt = {dt} above the bound {bounds.dt_upper:.5f}")
    gamma_ok = True
    for label, gamma in control.gammas.items():
        if abs(gamma) > bounds.gamma_abs_upper + 1e-12:
            gamma_ok = False
            messages.append(
                f"layer {control.layer_index}: |rate({label})| = {abs(gamma):.4f} "
                f"above the bound {bounds.gamma_abs_upper:.4f}"
            )
    fidelity_ok = None
    if fidelity is not None and h_p is not None and model is not None:
        fidelity_ok = True
        slack = 2.0 * np.sqrt(max(1.0 - fidelity, 0.0))
        for p, lam in model.terms:
            if p.label not in control.gammas:
                continue
            o_k = raise_operator(h_p, p)
            if o_k.is_zero():
                continue
            limit = norms(o_k).spectral * slack
            if abs(control.gammas[p.label] - lam) > limit + 1e-12:
                fidelity_ok = False
                messages.append(
                    f"layer {control.layer_index}: |rate({p.label}) - {lam:.4g}| "
                    f"exceeds the fidelity bound {limit:.4f}"
                )
    return BoundsReport(beta_ok, dt_ok, gamma_ok, fidelity_ok, tuple(messages))
