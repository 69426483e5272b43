"""Experiment orchestration: configuration, mode dispatch, CSV emission.

Modes
-----
ideal   closed feedback circuit (pure statevector, no noise)
noisy   signed trajectories with the fixed intrinsic rates and the
        closed-system driver feedback
nafqa   signed trajectories with feedback-controlled effective rates
oracle  dense RK4 master equation with the same feedback laws
qpd     quasiprobability branch sampling of the same engineered circuit

Every mode emits one RunRecord per layer (plus the s = 0 initial row) with
the fixed CSV schema: s, t, r, phi, purity, trace, delta, beta, then one
gamma_<Pauli> column per controlled term.
"""
from __future__ import annotations

import sys
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import rng
from .feedback import (
    ControlState,
    compute_beta,
    compute_gammas,
    compute_nu,
    control_bounds,
    raise_operator,
    validate_bounds,
)
from .lindblad import generator_for, integrate
from .metrics import (
    GroundSpace,
    RunRecord,
    approximation_ratio,
    ground_space,
    relative_error,
)
from .noise_channels import ChannelKind, NoiseModel, load_noise_model
from .operators import (
    OperatorError,
    PauliString,
    PauliSumOperator,
    build_driver,
    build_maxcut,
    build_spin_glass,
    commutator_iHdHp,
    norms,
)
from .qpd import QpdEnsemble
from .statekernel import (
    apply_driver_unitary,
    apply_problem_unitary,
    density_from_state,
    expectation,
    plus_state,
    purity as purity_of,
)
from .trajectories import LayerControls, TrajectoryEnsemble

MODES = ("ideal", "noisy", "nafqa", "oracle", "qpd")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NORMALIZATION = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "ideal"
    problem: str | None = None
    noise: str | None = None
    n: int | None = None
    layers: int = 41
    dt: float = 0.07
    threshold: float = 0.15
    trajectories: int = 1000
    seed: int = 1
    controlled: str = "all"
    out: str | None = None
    shots: int = 0
    zero_uncontrolled_lambda: bool = False
    driver_sign: int = 1
    workers: int = 1
    substeps: int = 1

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")
        if self.trajectories < 1:
            raise ConfigError("trajectories must be >= 1")
        if self.threshold < 0:
            raise ConfigError("threshold must be >= 0")
        if self.shots < 0:
            raise ConfigError("shots must be >= 0")
        if self.driver_sign not in (1, -1):
            raise ConfigError("driver_sign must be 1 or -1")
        if self.mode in ("noisy", "nafqa", "qpd") and not self.noise:
            raise ConfigError(f"mode={self.mode} requires a noise model file")
        if self.problem is None:
            raise ConfigError("a problem file is required")
        return self


_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}
_FIELD_TYPES = {
    "mode": str, "problem": str, "noise": str, "n": int, "layers": int,
    "dt": float, "threshold": float, "trajectories": int, "seed": int,
    "controlled": str, "out": str, "shots": int,
    "zero_uncontrolled_lambda": bool, "driver_sign": int, "workers": int,
    "substeps": int,
}


def parse_config(path) -> RunConfig:
    """Flat `key = value` file; # starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, val)
    return RunConfig(**values)


def _coerce(key: str, val: str):
    typ = _FIELD_TYPES[key]
    if typ is bool:
        if val.lower() not in _BOOL:
            raise ConfigError(f"{key} must be a boolean, got {val!r}")
        return _BOOL[val.lower()]
    try:
        return typ(val)
    except ValueError as exc:
        raise ConfigError(f"{key} must be {typ.__name__}, got {val!r}") from exc


@dataclass(frozen=True)
class Problem:
    h_p: PauliSumOperator
    qubits: int
    kind: str  # "maxcut" or "spin_glass"


def load_problem(path, n_override: int | None = None) -> Problem:
    """Problem file: `edge i j` lines (Maxcut) or `coupling i j J` / `field i h`."""
    edges = []
    couplings = []
    fields = []
    max_index = -1
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "edge" and len(parts) == 3:
                i, j = int(parts[1]), int(parts[2])
                edges.append((i, j))
                max_index = max(max_index, i, j)
            elif parts[0] == "coupling" and len(parts) == 4:
                i, j = int(parts[1]), int(parts[2])
                couplings.append((i, j, float(parts[3])))
                max_index = max(max_index, i, j)
            elif parts[0] == "field" and len(parts) == 3:
                i = int(parts[1])
                fields.append((i, float(parts[2])))
                max_index = max(max_index, i)
            else:
                raise ValueError
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: cannot parse problem line {raw!r}") from None
    if edges and (couplings or fields):
        raise ConfigError(f"{path}: mixes Maxcut edges with spin-glass terms")
    if max_index < 0:
        raise ConfigError(f"{path}: no problem terms found")
    n = n_override if n_override is not None else max_index + 1
    try:
        if edges:
            return Problem(build_maxcut(edges, n), n, "maxcut")
        j = np.zeros((n, n))
        h = np.zeros(n)
        for i, k, val in couplings:
            j[min(i, k), max(i, k)] += val
        for i, val in fields:
            h[i] += val
        return Problem(build_spin_glass(j, h, n), n, "spin_glass")
    except OperatorError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass
class RunResult:
    records: list[RunRecord]
    gamma_labels: list[str]
    config: RunConfig
    bound_messages: list[str] = field(default_factory=list)

    def column_names(self) -> list[str]:
        return ["s", "t", "r", "phi", "purity", "trace", "delta", "beta"] + [
            f"gamma_{label}" for label in self.gamma_labels
        ]

    def to_csv(self) -> str:
        lines = [",".join(self.column_names())]
        for rec in self.records:
            row = [
                str(rec.layer),
                _fmt(rec.t),
                _fmt(rec.r),
                _fmt(rec.phi),
                _fmt(rec.purity),
                _fmt(rec.trace),
                _fmt(rec.delta),
                _fmt(rec.beta),
            ]
            row += [_fmt(rec.gammas.get(label, 0.0)) for label in self.gamma_labels]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class _Setup:
    problem: Problem
    h_d: PauliSumOperator
    comm: PauliSumOperator
    ground: GroundSpace
    energies: np.ndarray
    intrinsic: NoiseModel
    controlled: list[str]
    raise_vectors: dict[str, np.ndarray]
    initial: np.ndarray


def _build_setup(config: RunConfig) -> _Setup:
    problem = load_problem(config.problem, config.n)
    h_d = build_driver(problem.qubits, config.driver_sign)
    comm = commutator_iHdHp(h_d, problem.h_p)
    ground = ground_space(problem.h_p)
    if abs(ground.energy) <= 1e-9:
        raise ConfigError("problem ground energy is zero; the ratio r is undefined")
    intrinsic = NoiseModel(problem.qubits, ())
    if config.noise:
        intrinsic = load_noise_model(config.noise)
        if intrinsic.terms and intrinsic.qubits != problem.qubits:
            raise ConfigError(
                f"noise model acts on {intrinsic.qubits} qubits, problem on {problem.qubits}"
            )
        if not intrinsic.terms:
            intrinsic = NoiseModel(problem.qubits, ())
    controlled = _controlled_labels(config, intrinsic)
    if config.zero_uncontrolled_lambda:
        zeroed = {lbl: 0.0 for lbl in intrinsic.labels if lbl not in controlled}
        intrinsic = intrinsic.with_rates(zeroed, ChannelKind.INTRINSIC)
    raise_vectors = {
        label: raise_operator(problem.h_p, PauliString(label)).diagonal_energies()
        for label in controlled
    }
    return _Setup(
        problem=problem,
        h_d=h_d,
        comm=comm,
        ground=ground,
        energies=problem.h_p.diagonal_energies(),
        intrinsic=intrinsic,
        controlled=controlled,
        raise_vectors=raise_vectors,
        initial=plus_state(problem.qubits),
    )


def _controlled_labels(config: RunConfig, intrinsic: NoiseModel) -> list[str]:
    if config.mode in ("ideal", "noisy"):
        return []
    spec = config.controlled.strip()
    if spec == "none":
        return []
    if spec == "all":
        return list(intrinsic.labels)
    labels = [part.strip() for part in spec.split(",") if part.strip()]
    for label in labels:
        PauliString(label)  # validates letters
    return labels


def _shot_noise(value: float, coeffs, shots: int, seed: int, layer: int, tag: int) -> float:
    """Conservative per-observable shot-noise emulation (Gaussian, worst-case variance)."""
    if shots <= 0:
        return value
    var = sum(c * c for c in coeffs) / shots
    gen = np.random.default_rng((seed, rng.STREAM_SHOTS, layer, tag))
    return value + gen.normal(0.0, np.sqrt(var))


def run(config: RunConfig) -> RunResult:
    """Dispatch one experiment; returns records and writes the CSV if configured."""
    config = replace(config).validate()
    setup = _build_setup(config)
    if config.mode == "ideal":
        result = _run_ideal(config, setup)
    elif config.mode in ("noisy", "nafqa"):
        result = _run_trajectories(config, setup)
    elif config.mode == "qpd":
        result = _run_qpd(config, setup)
    else:
        result = _run_oracle(config, setup)
    for message in dict.fromkeys(result.bound_messages):
        print(f"bound warning: {message}", file=sys.stderr)
    if config.out:
        Path(config.out).write_text(result.to_csv())
    return result


def _initial_record(setup: _Setup) -> RunRecord:
    psi0 = setup.initial
    energy = float(expectation(psi0, setup.problem.h_p))
    probs = np.abs(psi0) ** 2
    return RunRecord(
        layer=0,
        t=0.0,
        r=approximation_ratio(energy, setup.ground.energy),
        phi=float(probs @ setup.ground.projector_diag),
        purity=1.0,
        trace=1.0,
        delta=0.0,
        beta=0.0,
    )


def _run_ideal(config: RunConfig, setup: _Setup) -> RunResult:
    h_p, comm = setup.problem.h_p, setup.comm
    records = [_initial_record(setup)]
    psi = setup.initial.copy()
    beta = compute_beta(float(expectation(psi, comm)))
    bounds = control_bounds(norms(h_p), norms(setup.h_d))
    messages: list[str] = []
    for s in range(1, config.layers + 1):
        control = ControlState(s, beta, -beta, {}, {}, config.threshold)
        report = validate_bounds(control, bounds, config.dt)
        messages.extend(report.messages)
        psi = apply_problem_unitary(psi, h_p, config.dt)
        psi = apply_driver_unitary(psi, beta, config.dt, config.driver_sign)
        energy = float(expectation(psi, h_p))
        probs = np.abs(psi) ** 2
        records.append(
            RunRecord(
                layer=s,
                t=s * config.dt,
                r=approximation_ratio(energy, setup.ground.energy),
                phi=float(probs @ setup.ground.projector_diag),
                purity=1.0,
                trace=1.0,
                delta=0.0,
                beta=beta,
            )
        )
        a_value = _shot_noise(
            float(expectation(psi, comm)), [c for c, _ in comm.terms],
            config.shots, config.seed, s, 0,
        )
        beta = compute_beta(a_value)
    return RunResult(records, [], config, messages)


def _feedback_controls(
    config: RunConfig,
    setup: _Setup,
    layer: int,
    a_value: float,
    raise_values: dict[str, float],
) -> tuple[float, dict[str, float], ControlState]:
    a_value = _shot_noise(
        a_value, [c for c, _ in setup.comm.terms], config.shots, config.seed, layer, 0
    )
    beta = compute_beta(a_value)
    coefficients = {}
    for tag, label in enumerate(setup.controlled, start=1):
        coeffs = [-2.0 * c for c, q in setup.problem.h_p.terms
                  if not PauliString(label).commutes_with(q)]
        coefficients[label] = _shot_noise(
            raise_values[label], coeffs, config.shots, config.seed, layer, tag
        )
    gammas = compute_gammas(
        coefficients, setup.intrinsic, set(setup.controlled), config.threshold
    )
    control = ControlState(layer, beta, a_value, gammas, coefficients, config.threshold)
    return beta, gammas, control


def _gamma_terms(gammas: dict[str, float]) -> tuple[tuple[PauliString, float], ...]:
    return tuple((PauliString(label), g) for label, g in gammas.items())


def _run_trajectories(config: RunConfig, setup: _Setup) -> RunResult:
    h_p = setup.problem.h_p
    want_rho = setup.problem.qubits <= 8
    diag_obs = {"energy": setup.energies, "ground": setup.ground.projector_diag}
    diag_obs.update({f"raise_{lbl}": vec for lbl, vec in setup.raise_vectors.items()})
    pauli_obs = {"comm": setup.comm}
    bounds = control_bounds(norms(h_p), norms(setup.h_d))
    messages: list[str] = []

    ens = TrajectoryEnsemble(
        setup.initial, config.trajectories, config.seed,
        driver_sign=config.driver_sign, workers=config.workers,
    )
    records = [_initial_record(setup)]
    beta = compute_beta(float(expectation(setup.initial, setup.comm)))
    gammas = {p.label: rate for p, rate in setup.intrinsic.terms}
    for s in range(1, config.layers + 1):
        control = ControlState(s, beta, -beta, gammas, {}, config.threshold)
        report = validate_bounds(control, bounds, config.dt)
        messages.extend(report.messages)
        ens.advance_layer(h_p, LayerControls(beta, _gamma_terms(gammas)), config.dt)
        est = ens.estimate(diag_obs, pauli_obs, want_rho=want_rho)
        records.append(_record_from_estimate(config, setup, s, beta, gammas, est))
        raise_values = {lbl: est.observables[f"raise_{lbl}"] for lbl in setup.controlled}
        beta, new_gammas, _ = _feedback_controls(
            config, setup, s + 1, est.observables["comm"], raise_values
        )
        if config.mode == "nafqa":
            gammas = new_gammas
    return RunResult(records, setup.controlled, config, messages)


def _record_from_estimate(config, setup, s, beta, gammas, est) -> RunRecord:
    energy = est.observables["energy"]
    scale = abs(setup.ground.energy)
    trace = est.trace
    pur = purity_of(est.rho) if est.rho is not None else float("nan")
    phi = est.observables["ground"]
    flags = ""
    if not (0.0 <= phi <= 1.0):
        flags = "phi_outside_unit_interval"
    return RunRecord(
        layer=s,
        t=s * config.dt,
        r=approximation_ratio(energy, setup.ground.energy),
        phi=phi,
        purity=pur,
        trace=trace,
        delta=relative_error(trace),
        beta=beta,
        gammas=dict(gammas),
        aborted_trajectories=est.aborted,
        r_stderr=est.stderrs["energy"] / scale,
        phi_stderr=est.stderrs["ground"],
        flags=flags,
    )


def _run_qpd(config: RunConfig, setup: _Setup) -> RunResult:
    h_p = setup.problem.h_p
    want_rho = setup.problem.qubits <= 8
    diag_obs = {"energy": setup.energies, "ground": setup.ground.projector_diag}
    diag_obs.update({f"raise_{lbl}": vec for lbl, vec in setup.raise_vectors.items()})
    pauli_obs = {"comm": setup.comm}
    bounds = control_bounds(norms(h_p), norms(setup.h_d))
    messages: list[str] = []

    ens = QpdEnsemble(
        setup.initial, config.trajectories, config.seed, driver_sign=config.driver_sign
    )
    records = [_initial_record(setup)]
    beta = compute_beta(float(expectation(setup.initial, setup.comm)))
    gammas = {p.label: r for p, r in setup.intrinsic.terms}
    for s in range(1, config.layers + 1):
        control = ControlState(s, beta, -beta, gammas, {}, config.threshold)
        report = validate_bounds(control, bounds, config.dt)
        messages.extend(report.messages)
        engineered = compute_nu(gammas, setup.intrinsic)
        ens.advance_layer(h_p, beta, engineered, setup.intrinsic, config.dt)
        est = ens.estimate(diag_obs, pauli_obs, want_rho=want_rho)
        records.append(_record_from_estimate(config, setup, s, beta, gammas, est))
        raise_values = {lbl: est.observables[f"raise_{lbl}"] for lbl in setup.controlled}
        beta, new_gammas, _ = _feedback_controls(
            config, setup, s + 1, est.observables["comm"], raise_values
        )
        if setup.controlled:
            gammas = new_gammas
    return RunResult(records, setup.controlled, config, messages)


def _run_oracle(config: RunConfig, setup: _Setup) -> RunResult:
    h_p, h_d, comm = setup.problem.h_p, setup.h_d, setup.comm
    rho = density_from_state(setup.initial)
    records = [_initial_record(setup)]
    bounds = control_bounds(norms(h_p), norms(h_d))
    messages: list[str] = []
    beta = compute_beta(float(expectation(rho, comm)))
    gammas = {p.label: r for p, r in setup.intrinsic.terms}
    feedback_rates = bool(setup.controlled)
    for s in range(1, config.layers + 1):
        control = ControlState(s, beta, -beta, gammas, {}, config.threshold)
        report = validate_bounds(control, bounds, config.dt)
        messages.extend(report.messages)
        model = setup.intrinsic.with_rates(gammas, ChannelKind.EFFECTIVE) \
            if gammas else setup.intrinsic
        extra = {lbl: g for lbl, g in gammas.items() if lbl not in setup.intrinsic.labels}
        if extra:
            terms = tuple(model.terms) + tuple(
                (PauliString(lbl), g) for lbl, g in extra.items()
            )
            model = NoiseModel(setup.problem.qubits, terms, ChannelKind.EFFECTIVE)
        gen = generator_for(h_p, model, beta, h_d)
        rho = integrate(rho, [gen], config.dt, substeps=config.substeps)[-1]
        energy = float(expectation(rho, h_p))
        diag = np.real(np.diagonal(rho))
        trace = float(np.real(np.trace(rho)))
        records.append(
            RunRecord(
                layer=s,
                t=s * config.dt,
                r=approximation_ratio(energy, setup.ground.energy),
                phi=float(diag @ setup.ground.projector_diag),
                purity=purity_of(rho),
                trace=trace,
                delta=relative_error(trace),
                beta=beta,
                gammas=dict(gammas),
            )
        )
        raise_values = {
            lbl: float(expectation(rho, _raise_op(setup, lbl))) for lbl in setup.controlled
        }
        beta, new_gammas, _ = _feedback_controls(
            config, setup, s + 1, float(expectation(rho, comm)), raise_values
        )
        if feedback_rates:
            gammas = new_gammas
    return RunResult(records, setup.controlled, config, messages)


def _raise_op(setup: _Setup, label: str) -> PauliSumOperator:
    return raise_operator(setup.problem.h_p, PauliString(label))


@dataclass
class SpinGlassResult:
    instance_results: list[RunResult]
    aggregate: dict[str, np.ndarray]
    resampled: int

    def aggregate_csv(self) -> str:
        names = ["s", "t", "r_mean", "r_stderr", "phi_mean", "phi_stderr",
                 "beta_mean", "beta_stderr"]
        lines = [",".join(names)]
        length = self.aggregate["s"].shape[0]
        for i in range(length):
            lines.append(",".join(
                str(int(self.aggregate["s"][i])) if name == "s" else _fmt(self.aggregate[name][i])
                for name in names
            ))
        return "\n".join(lines) + "\n"


def draw_spin_glass_instance(n: int, coupling_seed: int, instance: int, attempt: int = 0):
    """J (strict upper triangle) and h drawn uniformly from [-1, 1]."""
    count = n * (n - 1) // 2 + n
    u = rng.uniforms(coupling_seed, rng.STREAM_COUPLINGS,
                     np.arange(count), step=instance, draw=attempt)
    vals = 2.0 * u - 1.0
    j = np.zeros((n, n))
    k = 0
    for a in range(n):
        for b in range(a + 1, n):
            j[a, b] = vals[k]
            k += 1
    h = vals[k:]
    return j, h


def run_spin_glass_ensemble(
    config: RunConfig,
    instances: int,
    coupling_seed: int,
    n: int = 3,
) -> SpinGlassResult:
    """Aggregate r, phi, beta over random spin-glass instances.

    Each instance draws J, h uniformly from [-1, 1]; instances whose ground
    energy is within 1e-9 of zero are redrawn (and counted).
    """
    if instances < 1:
        raise ConfigError("need at least one instance")
    results = []
    resampled = 0
    for i in range(instances):
        attempt = 0
        while True:
            j, h = draw_spin_glass_instance(n, coupling_seed, i, attempt)
            h_p = build_spin_glass(j, h, n)
            if abs(ground_space(h_p).energy) > 1e-9:
                break
            attempt += 1
            resampled += 1
            print(f"instance {i}: zero ground energy, redrawing", file=sys.stderr)
        with tempfile.NamedTemporaryFile("w", suffix=".problem", delete=False) as fh:
            for a in range(n):
                for b in range(a + 1, n):
                    fh.write(f"coupling {a} {b} {float(j[a, b])!r}\n")
            for a in range(n):
                fh.write(f"field {a} {float(h[a])!r}\n")
            problem_path = fh.name
        instance_config = replace(
            config,
            problem=problem_path,
            seed=config.seed + i,
            out=_instance_out(config.out, i),
        )
        results.append(run(instance_config))
        Path(problem_path).unlink()
    layers = len(results[0].records)
    agg: dict[str, np.ndarray] = {
        "s": np.array([rec.layer for rec in results[0].records], dtype=float),
        "t": np.array([rec.t for rec in results[0].records]),
    }
    for name in ("r", "phi", "beta"):
        table = np.array([[getattr(rec, name) for rec in res.records] for res in results])
        agg[f"{name}_mean"] = table.mean(axis=0)
        spread = table.std(axis=0, ddof=1) if instances > 1 else np.zeros(layers)
        agg[f"{name}_stderr"] = spread / np.sqrt(instances)
    result = SpinGlassResult(results, agg, resampled)
    if config.out:
        Path(_aggregate_out(config.out)).write_text(result.aggregate_csv())
    return result


def _instance_out(out: str | None, instance: int) -> str | None:
    if out is None:
        return None
    path = Path(out)
    return str(path.with_name(f"{path.stem}_instance{instance:02d}{path.suffix}"))


def _aggregate_out(out: str) -> str:
    path = Path(out)
    return str(path.with_name(f"{path.stem}_aggregate{path.suffix}"))
