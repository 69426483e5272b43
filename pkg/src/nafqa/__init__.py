"""Feedback-controlled open-quantum-system simulations for ground-state properties.

Signed quantum trajectories and quasiprobability sampling realize Pauli noise
channels with positive and negative rates; a Lyapunov feedback law drives the
rates and the driver field; a dense Runge-Kutta master-equation integrator
provides the exact small-system oracle.
"""
from .operators import (
    OperatorNorms,
    PauliString,
    PauliSumOperator,
    build_driver,
    build_maxcut,
    build_spin_glass,
    commutator_i,
    commutator_iHdHp,
    norms,
)
from .noise_channels import (
    ChannelKind,
    DampingModel,
    NoiseModel,
    apply_pauli_channel_exact,
    damping_dissipator_expectation,
    dissipator_expectation,
    load_noise_model,
)
from .trajectories import (
    EnsembleEstimate,
    LayerControls,
    SignedTrajectory,
    TrajectoryEnsemble,
    run_ensemble,
    step_trajectory,
    step_trajectory_general,
)
from .lindblad import LindbladGenerator, evolve_closed, generator_for, integrate
from .feedback import (
    ControlBounds,
    ControlState,
    compute_beta,
    compute_gammas,
    compute_lcdfs_gamma,
    compute_nu,
    control_bounds,
    validate_bounds,
)
from .qpd import QpdEnsemble, QpdLayerPlan, plan_layer, total_overhead
from .metrics import (
    RunRecord,
    approximation_ratio,
    fidelity_shorttime,
    ground_space,
    relative_error,
    success_probability,
)
from .runner import RunConfig, load_problem, parse_config, run, run_spin_glass_ensemble

__all__ = [name for name in dir() if not name.startswith("_")]
