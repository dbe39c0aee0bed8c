import numpy as np
import pytest
import scipy.stats

from spinlyap import (
    CircuitModel,
    StateVector,
    ThetaSet,
    apply_measurement_layer,
    brickwork_layer,
    read_trajectory_log,
    sample_outcomes,
    sample_theta,
    write_trajectory_log,
)
from spinlyap.circuit import TrajectoryEngine, layer_bonds, measurement_weights
from spinlyap.core import build_kraus
from spinlyap.errors import (
    ContractViolationError,
    DegenerateOutcomeError,
    InvalidParameterError,
)
from spinlyap.lyapunov import prepare_engine

from conftest import (
    dense_layer_oracle,
    dense_measurement_oracle,
    random_state,
    replay_product_oracle,
)


class TestModel:
    def test_floquet_carries_reference_parameter_set(self):
        model = CircuitModel.floquet(4, 0.37)
        theta = sample_theta(model, t=17, rng=np.random.default_rng(0)).theta
        assert theta[1, 1] == pytest.approx(0.71 * np.pi, abs=1e-15)
        assert theta[2, 2] == pytest.approx(1.43 * np.pi, abs=1e-15)
        assert theta[3, 3] == pytest.approx(0.27 * np.pi, abs=1e-15)
        assert theta[0, 0] == 0.0
        assert theta[1, 0] == pytest.approx(1.21 * np.pi, abs=1e-15)
        assert theta[0, 1] == pytest.approx(0.43 * np.pi, abs=1e-15)
        assert theta[1, 3] == pytest.approx(1.87 * np.pi, abs=1e-15)
        assert theta[3, 1] == pytest.approx(0.12 * np.pi, abs=1e-15)

    def test_floquet_theta_independent_of_time_and_rng(self):
        model = CircuitModel.floquet(4, 0.2)
        a = sample_theta(model, 1, np.random.default_rng(1)).theta
        b = sample_theta(model, 999, np.random.default_rng(2)).theta
        assert np.array_equal(a, b)

    def test_random_draws_are_uniform_box(self):
        model = CircuitModel.temporally_random(4, 0.2)
        rng = np.random.default_rng(7)
        n = 100_000
        draws = np.stack([sample_theta(model, t, rng).theta for t in range(n)])
        assert draws.min() >= -np.pi and draws.max() <= np.pi
        # mean of U(-pi, pi) is 0 with sigma = pi/sqrt(3n) per component
        tol = 3 * np.pi / np.sqrt(3 * n)
        assert np.max(np.abs(draws.mean(axis=0))) < tol

    def test_random_draws_deterministic_under_seed(self):
        model = CircuitModel.temporally_random(4, 0.2)
        a = sample_theta(model, 3, np.random.default_rng(42)).theta
        b = sample_theta(model, 3, np.random.default_rng(42)).theta
        assert np.array_equal(a, b)

    def test_eta_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            CircuitModel.temporally_random(4, 0.6)


class TestBrickwork:
    def test_zero_theta_keeps_state(self, rng):
        state = StateVector.haar_random(4, rng)
        before = state.amplitudes.copy()
        brickwork_layer(state, ThetaSet(np.zeros((4, 4))), t=1)
        assert np.allclose(state.amplitudes, before, atol=1e-14)

    def test_two_sites_even_step_has_no_gates(self, rng):
        assert list(layer_bonds(2, t=2)) == []
        state = StateVector.haar_random(2, rng)
        before = state.amplitudes.copy()
        brickwork_layer(state, ThetaSet(rng.uniform(-np.pi, np.pi, (4, 4))), t=2)
        assert np.array_equal(state.amplitudes, before)

    def test_open_boundary_bond_pattern(self):
        assert list(layer_bonds(6, t=1)) == [1, 3, 5]
        assert list(layer_bonds(6, t=2)) == [2, 4]
        assert list(layer_bonds(5, t=1)) == [1, 3]
        assert list(layer_bonds(5, t=2)) == [2, 4]

    @pytest.mark.parametrize("t", [1, 2])
    def test_matches_dense_layer_oracle(self, t, rng):
        theta = ThetaSet(rng.uniform(-np.pi, np.pi, (4, 4)))
        psi = random_state(16, rng)
        state = StateVector(psi.copy(), 4)
        brickwork_layer(state, theta, t=t)
        dense = dense_layer_oracle(theta.theta, t, 4) @ psi
        assert np.max(np.abs(state.amplitudes - dense)) <= 1e-12


class TestBornSampling:
    def test_no_measurement_keeps_direction_and_is_uniform(self, rng):
        state = StateVector.haar_random(2, rng)
        before = state.amplitudes.copy()
        counts = {}
        for _ in range(4000):
            pattern = tuple(sample_outcomes(state, 0.0, rng))
            counts[pattern] = counts.get(pattern, 0) + 1
        assert np.array_equal(state.amplitudes, before)
        assert len(counts) == 4
        _, p = scipy.stats.chisquare(list(counts.values()))
        assert p > 0.001

    def test_single_site_up_state_probability(self, rng):
        eta = 0.3
        hits = 0
        n = 100_000
        state = StateVector.computational_basis(1, 0)
        for _ in range(n):
            hits += sample_outcomes(state, eta, rng)[0] > 0
        p_expected = 0.5 + eta
        sigma = np.sqrt(p_expected * (1 - p_expected) / n)
        assert abs(hits / n - p_expected) < 3 * sigma

    def test_joint_distribution_matches_enumeration(self, rng):
        eta, num_sites, n = 0.3, 2, 100_000
        psi = random_state(4, rng)
        state = StateVector(psi, num_sites)
        patterns = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        expected = {
            p: np.linalg.norm(dense_measurement_oracle(p, eta, num_sites) @ psi) ** 2
            for p in patterns
        }
        counts = {p: 0 for p in patterns}
        for _ in range(n):
            counts[tuple(sample_outcomes(state, eta, rng))] += 1
        for p in patterns:
            sigma = np.sqrt(expected[p] * (1 - expected[p]) / n)
            assert abs(counts[p] / n - expected[p]) < 3 * sigma

    def test_sequential_sampling_chi_squared(self, rng):
        eta, num_sites, n = 0.25, 3, 100_000
        psi = random_state(8, rng)
        state = StateVector(psi, num_sites)
        patterns = list(
            __import__("itertools").product((1, -1), repeat=num_sites)
        )
        probs = np.array(
            [
                np.linalg.norm(dense_measurement_oracle(p, eta, num_sites) @ psi) ** 2
                for p in patterns
            ]
        )
        counts = dict.fromkeys(patterns, 0)
        for _ in range(n):
            counts[tuple(sample_outcomes(state, eta, rng))] += 1
        observed = np.array([counts[p] for p in patterns])
        _, p_value = scipy.stats.chisquare(observed, probs * n)
        assert p_value > 0.001

    def test_born_normalization_by_enumeration(self, rng):
        kraus = build_kraus(0.41)
        for num_sites in (2, 3, 4):
            psi = random_state(2**num_sites, rng)
            total = sum(
                np.linalg.norm(
                    measurement_weights(np.array(p), kraus, num_sites) * psi
                )
                ** 2
                for p in __import__("itertools").product((1, -1), repeat=num_sites)
            )
            assert abs(total - 1.0) <= 1e-10

    def test_unnormalized_state_rejected(self, rng):
        state = StateVector(np.ones(4, dtype=complex), 2)
        with pytest.raises(ContractViolationError):
            sample_outcomes(state, 0.2, rng)


class TestMeasurementLayer:
    def test_no_measurement_log_norm(self, rng):
        num_sites = 3
        state = StateVector.haar_random(num_sites, rng)
        before = state.amplitudes.copy()
        _, log_norm = apply_measurement_layer(state, np.ones(num_sites, dtype=int), 0.0)
        assert log_norm == pytest.approx(-num_sites / 2 * np.log(2), abs=1e-12)
        assert np.allclose(state.amplitudes, before, atol=1e-12)

    def test_projective_limit_collapses_to_basis_state(self, rng):
        psi = random_state(4, rng)
        state = StateVector(psi.copy(), 2)
        # outcomes (+, -) project onto |up down> = index 0b01
        _, log_norm = apply_measurement_layer(state, np.array([1, -1]), 0.5)
        assert abs(abs(state.amplitudes[0b01]) - 1.0) < 1e-12
        assert log_norm == pytest.approx(np.log(abs(psi[0b01])), abs=1e-12)

    def test_matches_dense_oracle(self, rng):
        eta, num_sites = 0.23, 4
        psi = random_state(16, rng)
        outcomes = np.where(rng.random(num_sites) < 0.5, 1, -1)
        state = StateVector(psi.copy(), num_sites)
        _, log_norm = apply_measurement_layer(state, outcomes, eta)
        dense = dense_measurement_oracle(outcomes, eta, num_sites) @ psi
        assert np.allclose(
            state.amplitudes, dense / np.linalg.norm(dense), atol=1e-12
        )
        assert log_norm == pytest.approx(np.log(np.linalg.norm(dense)), abs=1e-12)

    def test_annihilating_outcome_raises(self):
        state = StateVector.computational_basis(1, 0)
        with pytest.raises(DegenerateOutcomeError):
            apply_measurement_layer(state, np.array([-1]), 0.5)


class TestEngine:
    def test_unmonitored_floquet_step(self):
        engine = prepare_engine(CircuitModel.floquet(4, 0.0), seed=5, q=3)
        engine.step()
        assert abs(engine.physical.norm() - 1.0) < 1e-12
        expected = -4 / 2 * np.log(2)
        assert np.allclose(engine.probes.log_scales, expected, atol=1e-12)
        engine.step()
        assert np.allclose(engine.probes.log_scales, 2 * expected, atol=1e-12)

    def test_same_seed_identical_logs(self):
        model = CircuitModel.temporally_random(3, 0.3)
        logs = []
        for _ in range(2):
            engine = TrajectoryEngine(model, seed=99, keep_log=True)
            engine.run(20)
            logs.append(engine.log)
        for a, b in zip(*logs):
            assert a.step == b.step
            assert np.array_equal(a.outcomes, b.outcomes)
            assert np.array_equal(a.theta_used.theta, b.theta_used.theta)

    def test_physical_state_matches_dense_replay(self):
        model = CircuitModel.temporally_random(4, 0.3)
        engine = TrajectoryEngine(model, seed=11, keep_log=True)
        psi0 = engine.physical.amplitudes.copy()
        engine.run(10)
        v = replay_product_oracle(engine.log, model.eta, 4)
        replayed = v @ psi0
        replayed /= np.linalg.norm(replayed)
        assert np.max(np.abs(engine.physical.amplitudes - replayed)) < 1e-10

    def test_probes_match_dense_replay(self):
        model = CircuitModel.floquet(4, 0.36)
        engine = prepare_engine(model, seed=3, q=4, keep_log=True)
        probes0 = engine.probes.vectors.copy()
        engine.run(32)
        v = replay_product_oracle(engine.log, model.eta, 4)
        expected = v @ probes0
        actual = engine.probes.vectors * np.exp(engine.probes.log_scales)[None, :]
        for j in range(4):
            rel = np.linalg.norm(actual[:, j] - expected[:, j])
            rel /= np.linalg.norm(expected[:, j])
            assert rel < 1e-10

    def test_step_counter_and_log_length(self):
        engine = TrajectoryEngine(CircuitModel.floquet(3, 0.1), seed=0, keep_log=True)
        engine.run(7)
        assert engine.step_count == 7
        assert [rec.step for rec in engine.log] == list(range(1, 8))
        assert all(rec.outcomes.size == 3 for rec in engine.log)


class TestTrajectoryLogRoundTrip:
    def test_bit_faithful_round_trip(self, tmp_path):
        model = CircuitModel.temporally_random(3, 0.22)
        engine = TrajectoryEngine(model, seed=8, keep_log=True)
        engine.run(12)
        path = tmp_path / "trajectory.csv"
        write_trajectory_log(path, engine.log, 3)
        records, num_sites = read_trajectory_log(path)
        assert num_sites == 3
        assert len(records) == 12
        for a, b in zip(records, engine.log):
            assert a.step == b.step
            assert np.array_equal(a.outcomes, b.outcomes)
            assert np.array_equal(a.theta_used.theta, b.theta_used.theta)
