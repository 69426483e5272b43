import numpy as np
import pytest

from nafqa.noise_channels import ChannelKind, NoiseModel, apply_pauli_channel_exact
from nafqa.operators import PauliString, PauliSumOperator
from nafqa.qpd import (
    QpdEnsemble,
    QpdLayer,
    estimate,
    plan_layer,
    total_overhead,
)
from nafqa.statekernel import density_from_state, expectation, plus_state

X1 = PauliSumOperator.from_terms(1, [(1.0, "X")])


def engineered(terms):
    parsed = tuple((PauliString(lbl), r) for lbl, r in terms)
    return NoiseModel(parsed[0][0].qubits, parsed, ChannelKind.ENGINEERED)


def intrinsic(terms):
    parsed = tuple((PauliString(lbl), r) for lbl, r in terms)
    return NoiseModel(parsed[0][0].qubits, parsed, ChannelKind.INTRINSIC)


class TestPlanLayer:
    def test_negative_rate_factor(self):
        plan = plan_layer(engineered([("Z", -0.05)]))
        factor = plan.factors[0]
        assert factor.w == pytest.approx((1 + np.exp(-0.1)) / 2)
        assert factor.sign == -1
        assert plan.layer_overhead == pytest.approx(1.0)
        assert plan.trace_factor == pytest.approx(np.exp(-0.1))

    def test_zero_rate_identity_only(self):
        plan = plan_layer(engineered([("Z", 0.0)]))
        assert plan.factors[0].w == pytest.approx(1.0)
        assert plan.trace_factor == pytest.approx(1.0)

    def test_trace_factor_from_negative_terms_only(self):
        plan = plan_layer(engineered([("ZI", -0.1), ("IX", 0.1)]))
        assert plan.trace_factor == pytest.approx(np.exp(-0.2))


class TestTotalOverhead:
    def test_single_layer_zero_rate(self):
        plans = [plan_layer(engineered([("Z", 0.0)]))]
        got = total_overhead(plans, [engineered([("Z", 0.0)])])
        assert got.factor_product == pytest.approx(1.0)
        assert got.rate_integral == pytest.approx(1.0)

    def test_positive_rates_rate_integral(self):
        # constant positive nu over layers: exp(2 nu dt layers)
        nu, dt, layers = 0.3, 0.05, 7
        models = [engineered([("Z", nu)])] * layers
        plans = [plan_layer(m, dt) for m in models]
        got = total_overhead(plans, models, dt)
        assert got.rate_integral == pytest.approx(np.exp(2 * nu * dt * layers))
        assert got.factor_product == pytest.approx(1.0)

    def test_negative_rates_rate_integral_is_one(self):
        models = [engineered([("Z", -0.3)])] * 4
        plans = [plan_layer(m, 0.05) for m in models]
        got = total_overhead(plans, models, 0.05)
        assert got.rate_integral == pytest.approx(1.0)
        assert got.factor_product == pytest.approx(1.0)


class TestEstimate:
    def test_zero_rates_plain_expectation(self):
        layer = QpdLayer(plan_layer(engineered([("Z", 0.0)])))
        res = estimate(plus_state(1), [layer], X1, samples=500, seed=1)
        assert res.mean == pytest.approx(1.0)
        assert res.stderr == pytest.approx(0.0, abs=1e-6)

    def test_raw_mean_matches_dense_channel(self):
        # one pseudo-factor (Z, nu=-0.1) on |+>: tr[X Lambda'(rho)] = 1 exactly
        eng = engineered([("Z", -0.1)])
        res = estimate(plus_state(1), [QpdLayer(plan_layer(eng))], X1,
                       samples=20000, seed=2)
        dense = apply_pauli_channel_exact(density_from_state(plus_state(1)), eng)
        assert expectation(dense, X1) == pytest.approx(1.0)
        assert res.mean == pytest.approx(1.0, abs=3 * max(res.stderr, 1e-12) + 1e-9)

    def test_cancellation_normalized_mean(self):
        # engineered (Z, -0.1) after intrinsic... applied before: net rate zero
        eng = engineered([("Z", -0.1)])
        intr = intrinsic([("Z", 0.1)])
        res = estimate(plus_state(1), [QpdLayer(plan_layer(eng), intrinsic=intr)],
                       X1, samples=100000, seed=3)
        assert res.normalized_mean == pytest.approx(1.0, abs=3 * res.normalized_stderr)

    def test_unbiased_against_dense_composition(self, rng):
        # random two-factor engineered channel on 2 qubits vs dense evaluation
        eng = engineered([("ZI", -0.08), ("XY", 0.12)])
        obs = PauliSumOperator.from_terms(2, [(1.0, "XI"), (0.5, "ZZ")])
        res = estimate(plus_state(2), [QpdLayer(plan_layer(eng))], obs,
                       samples=200000, seed=5)
        dense = apply_pauli_channel_exact(density_from_state(plus_state(2)), eng)
        target = expectation(dense, obs)
        assert res.mean == pytest.approx(target, abs=3 * res.stderr)

    def test_variance_grows_with_negative_factors(self):
        # estimating the same trace-preserving target with 0, 1, 2 negative
        # factors at fixed |nu|: the normalized estimator's variance increases
        obs = PauliSumOperator.from_terms(2, [(1.0, "XI"), (1.0, "IX")])
        intr = intrinsic([("ZI", 0.1), ("IZ", 0.1)])
        stderrs = []
        for signs in ((0.4, 0.4), (-0.4, 0.4), (-0.4, -0.4)):
            eng = engineered([("ZI", signs[0]), ("IZ", signs[1])])
            res = estimate(plus_state(2), [QpdLayer(plan_layer(eng), intrinsic=intr)],
                           obs, samples=40000, seed=8)
            stderrs.append(res.normalized_stderr)
        assert stderrs[0] < stderrs[1] < stderrs[2]

    def test_parity_bookkeeping(self):
        # with the identity observable each sample's value is its parity
        # (-1)^(negative-branch draws), whose mean is the analytic trace factor
        ident = PauliSumOperator.from_terms(1, [(1.0, "I")])
        eng = engineered([("Z", -0.3)])
        layers = [QpdLayer(plan_layer(eng))] * 4
        res = estimate(plus_state(1), layers, ident, samples=50000, seed=11)
        assert res.trace_factor == pytest.approx(np.exp(-0.3 * 2 * 4))
        assert res.mean == pytest.approx(res.trace_factor, abs=3 * res.stderr)

    def test_drawn_samples_expose_parity(self):
        from nafqa.qpd import draw_sample

        eng = engineered([("ZI", -0.4), ("IX", 0.4)])
        layers = [QpdLayer(plan_layer(eng))] * 3
        for index in range(50):
            sample = draw_sample(layers, seed=11, index=index)
            negative_draws = sum(
                1 for layer_ops in sample.operations if layer_ops[0] is not None
            )
            assert sample.parity == (-1) ** negative_draws


class TestQpdEnsemble:
    def test_matches_oneshot_estimator(self):
        eng = engineered([("ZI", -0.1)])
        intr = intrinsic([("ZI", 0.1)])
        obs = PauliSumOperator.from_terms(2, [(1.0, "XI")])
        h_zero = PauliSumOperator(2, ())
        ens = QpdEnsemble(plus_state(2), 50000, seed=21)
        ens.advance_layer(h_zero, 0.0, eng, intr, dt=1.0)
        est = ens.estimate(pauli_observables={"x": obs})
        assert est.observables["x"] == pytest.approx(1.0, abs=3 * est.stderrs["x"])

    def test_trace_estimate_unbiased(self):
        eng = engineered([("Z", -0.2)])
        ens = QpdEnsemble(plus_state(1), 40000, seed=22)
        h_zero = PauliSumOperator(1, ())
        for _ in range(5):
            ens.advance_layer(h_zero, 0.0, eng, None, dt=0.5)
        est = ens.estimate()
        assert est.trace == pytest.approx(1.0, abs=0.05)

    def test_agrees_with_signed_trajectories(self):
        # same engineered channel through both samplers: expectations agree
        from nafqa.trajectories import LayerControls, TrajectoryEnsemble

        h_p = PauliSumOperator.from_terms(2, [(0.8, "ZI"), (-0.5, "ZZ")])
        lam, nu = 0.1, -0.25
        obs = {"energy": h_p.diagonal_energies()}
        qpd_ens = QpdEnsemble(plus_state(2), 60000, seed=31)
        traj_ens = TrajectoryEnsemble(plus_state(2), 60000, seed=32)
        for _ in range(10):
            qpd_ens.advance_layer(h_p, 0.4, engineered([("XY", nu)]),
                                  intrinsic([("XY", lam)]), dt=0.1)
            traj_ens.advance_layer(
                h_p, LayerControls(0.4, ((PauliString("XY"), lam + nu),)), 0.1)
        q = qpd_ens.estimate(obs)
        t = traj_ens.estimate(obs)
        gap = abs(q.observables["energy"] - t.observables["energy"])
        sigma = np.hypot(q.stderrs["energy"], t.stderrs["energy"])
        # allow the O(dt) ordering difference between the two circuit forms
        assert gap < 3 * sigma + 0.05
