import numpy as np
import pytest

from nafqa.operators import OperatorError, PauliString, PauliSumOperator, build_maxcut
from nafqa.statekernel import (
    apply_driver_unitary,
    apply_pauli,
    apply_problem_unitary,
    basis_state,
    density_from_state,
    expectation,
    expectation_batch,
    plus_state,
    purity,
    trace_distance,
    zero_state,
)

from conftest import kron_label, random_density, random_state


class TestApplyPauli:
    def test_x_flips_zero(self):
        out = apply_pauli(zero_state(1), PauliString("X"))
        assert np.allclose(out, basis_state(1, 1))

    def test_z_on_plus_gives_minus(self):
        out = apply_pauli(plus_state(1), PauliString("Z"))
        minus = (basis_state(1, 0) - basis_state(1, 1)) / np.sqrt(2)
        assert np.allclose(out, minus)

    def test_yz_on_00_matches_dense(self):
        # 2-qubit matrix multiplication oracle: Y0 Z1 |00> = i |10>
        out = apply_pauli(zero_state(2), PauliString("YZ"))
        assert np.allclose(out, kron_label("YZ") @ zero_state(2))
        assert out[2] == pytest.approx(1j)

    def test_involution_bitwise(self, rng):
        for _ in range(30):
            label = "".join(rng.choice(list("IXYZ"), size=3))
            psi = random_state(3, rng)
            twice = apply_pauli(apply_pauli(psi, PauliString(label)), PauliString(label))
            assert np.max(np.abs(twice - psi)) < 1e-15

    def test_norm_preserved_and_dense_agreement(self, rng):
        for _ in range(30):
            label = "".join(rng.choice(list("IXYZ"), size=4))
            psi = random_state(4, rng)
            out = apply_pauli(psi, PauliString(label))
            assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(psi), abs=1e-13)
            assert np.allclose(out, kron_label(label) @ psi)

    def test_dimension_mismatch(self):
        with pytest.raises(OperatorError):
            apply_pauli(zero_state(2), PauliString("XXX"))


class TestExpectation:
    def test_plus_state_k3(self):
        h = build_maxcut([(0, 1), (1, 2), (0, 2)], 3)
        assert expectation(plus_state(3), h) == pytest.approx(-1.5)

    def test_identity_gives_squared_norm(self, rng):
        psi = 2.5 * random_state(2, rng)
        ident = PauliSumOperator.from_terms(2, [(1.0, "II")])
        assert expectation(psi, ident) == pytest.approx(6.25)

    def test_commutator_vanishes_at_plus(self):
        from nafqa.operators import build_driver, commutator_iHdHp

        h_p = build_maxcut([(0, 1), (1, 2), (0, 2)], 3)
        comm = commutator_iHdHp(build_driver(3, 1), h_p)
        assert expectation(plus_state(3), comm) == pytest.approx(0.0, abs=1e-14)

    def test_density_matrix_path_matches_dense_trace(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 5))
            labels = ["".join(rng.choice(list("IXYZ"), size=n)) for _ in range(3)]
            op = PauliSumOperator.from_terms(
                n, [(float(rng.uniform(-1, 1)), lbl) for lbl in labels])
            rho = random_density(n, rng)
            assert expectation(rho, op) == pytest.approx(
                np.real(np.trace(rho @ op.to_dense())), abs=1e-10)

    def test_batch_matches_single(self, rng):
        op = PauliSumOperator.from_terms(3, [(0.3, "XYI"), (-0.2, "ZZZ")])
        states = np.array([random_state(3, rng) for _ in range(5)])
        batch = expectation_batch(states, op)
        for i in range(5):
            assert batch[i] == pytest.approx(expectation(states[i], op), abs=1e-12)


class TestUnitaries:
    def test_problem_unitary_dt_zero_is_identity(self, rng):
        h = build_maxcut([(0, 1)], 2)
        psi = random_state(2, rng)
        assert np.allclose(apply_problem_unitary(psi, h, 0.0), psi)

    def test_problem_unitary_single_edge_phases(self):
        h = build_maxcut([(0, 1)], 2)
        dt = 0.37
        psi = np.ones(4, dtype=complex) / 2
        out = apply_problem_unitary(psi, h, dt)
        expected = np.array([1.0, np.exp(1j * dt), np.exp(1j * dt), 1.0]) / 2
        assert np.allclose(out, expected)

    def test_problem_unitary_rejects_non_diagonal(self, rng):
        op = PauliSumOperator.from_terms(2, [(1.0, "XI")])
        with pytest.raises(OperatorError):
            apply_problem_unitary(random_state(2, rng), op, 0.1)

    def test_driver_rotation_pi_half(self):
        out = apply_driver_unitary(zero_state(1), np.pi / 2, 1.0, 1)
        assert np.allclose(out, -1j * basis_state(1, 1))

    def test_driver_beta_zero_identity(self, rng):
        psi = random_state(2, rng)
        assert apply_driver_unitary(psi, 0.0, 0.3, 1) is psi

    def test_both_unitaries_preserve_norm(self, rng):
        h = build_maxcut([(0, 1), (1, 2), (0, 2)], 3)
        for _ in range(1000):
            psi = random_state(3, rng)
            out = apply_problem_unitary(psi, h, 0.21)
            out = apply_driver_unitary(out, 0.8, 0.21, -1)
            assert abs(np.linalg.norm(out) - 1.0) < 1e-12

    def test_driver_matches_dense_exponential(self, rng):
        from nafqa.operators import build_driver

        n, beta, dt = 3, -0.53, 0.17
        h = build_driver(n, 1).to_dense()
        evals, evecs = np.linalg.eigh(h)
        u = evecs @ np.diag(np.exp(-1j * beta * dt * evals)) @ evecs.conj().T
        psi = random_state(n, rng)
        assert np.allclose(apply_driver_unitary(psi, beta, dt, 1), u @ psi)


class TestDensityHelpers:
    def test_purity_pure(self):
        assert purity(density_from_state(plus_state(2))) == pytest.approx(1.0)

    def test_purity_maximally_mixed(self):
        assert purity(np.eye(2) / 2) == pytest.approx(0.5)

    def test_purity_diagonal_mixture(self):
        rho = np.diag([0.75, 0.25]).astype(complex)
        assert purity(rho) == pytest.approx(0.625)

    def test_trace_distance_cases(self):
        rho = density_from_state(zero_state(1))
        sigma = density_from_state(basis_state(1, 1))
        assert trace_distance(rho, rho) == pytest.approx(0.0)
        assert trace_distance(rho, sigma) == pytest.approx(1.0)
        assert trace_distance(rho, np.eye(2) / 2) == pytest.approx(0.5)

    def test_trace_distance_fidelity_bound(self, rng):
        # ||rho - sigma||_1 <= 2 sqrt(1 - F) for pure-state pairs
        for _ in range(50):
            a, b = random_state(2, rng), random_state(2, rng)
            td = trace_distance(density_from_state(a), density_from_state(b))
            fid = abs(np.vdot(a, b)) ** 2
            assert 2 * td <= 2 * np.sqrt(1 - fid) + 1e-12
