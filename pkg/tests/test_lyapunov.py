import itertools

import numpy as np
import pytest

from spinlyap import (
    CircuitModel,
    LyapunovAccumulator,
    LyapunovEstimate,
    OutcomeRecord,
    ThetaSet,
    check_convergence,
    evolve_bin,
    init_probes,
    orthonormalize,
    prepare_engine,
    record_bin,
    run_spectrum,
    shift_spectrum,
    svd_oracle,
)
from spinlyap.errors import (
    InsufficientLogError,
    InvalidParameterError,
    RankDeficiencyError,
)
from spinlyap.lyapunov import ProbeEnsemble, bin_doubling_check, default_bin_size

from conftest import random_state, replay_product_oracle


class TestInitProbes:
    def test_single_probe_is_normalized(self, rng):
        probes = init_probes(1, 3, rng)
        assert abs(np.linalg.norm(probes.vectors[:, 0]) - 1.0) < 1e-12

    def test_gram_matrix_is_identity(self, rng):
        probes = init_probes(4, 3, rng)
        assert np.max(np.abs(probes.gram() - np.eye(4))) < 1e-12

    def test_seed_determinism(self):
        a = init_probes(3, 4, np.random.default_rng(12))
        b = init_probes(3, 4, np.random.default_rng(12))
        assert np.array_equal(a.vectors, b.vectors)

    def test_too_many_probes_rejected(self, rng):
        with pytest.raises(InvalidParameterError):
            init_probes(9, 3, rng)


class TestOrthonormalize:
    def test_orthonormal_input_unchanged(self, rng):
        probes = init_probes(3, 3, rng)
        before = probes.vectors.copy()
        _, log_norms = orthonormalize(probes)
        assert np.allclose(probes.vectors, before, atol=1e-12)
        assert np.allclose(log_norms, 0.0, atol=1e-12)

    def test_identical_vectors_raise(self, rng):
        v = random_state(8, rng)
        probes = ProbeEnsemble(np.column_stack([v, v]))
        with pytest.raises(RankDeficiencyError):
            orthonormalize(probes)

    def test_matches_qr_oracle(self, rng):
        for _ in range(10):
            m = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
            probes = ProbeEnsemble(m.copy())
            _, log_norms = orthonormalize(probes)
            assert np.max(np.abs(probes.gram() - np.eye(3))) < 1e-12
            r = np.linalg.qr(m, mode="r")
            assert np.allclose(
                log_norms, np.log(np.abs(np.diag(r))), atol=1e-10
            )

    def test_carried_scales_enter_log_norms(self, rng):
        probes = init_probes(2, 3, rng)
        probes.log_scales[:] = [-5.0, -7.0]
        _, log_norms = orthonormalize(probes)
        assert np.allclose(log_norms, [-5.0, -7.0], atol=1e-12)
        assert np.array_equal(probes.log_scales, [0.0, 0.0])


class TestAccumulator:
    def test_uniform_contraction_estimate(self):
        # eta=0 on L sites: every bin contributes -(b L / 2) ln 2 per index
        L, b = 4, 4
        acc = LyapunovAccumulator(q=3, bin_size=b)
        record_bin(acc, np.full(3, -(b * L / 2) * np.log(2)))
        est = acc.estimates()
        assert np.allclose(est, (L / 2) * np.log(2), atol=1e-14)
        shifted = shift_spectrum(LyapunovEstimate(est, np.ones(3, bool), acc.total_steps))
        assert np.allclose(shifted.exponents, 0.0, atol=1e-14)

    def test_two_equal_bins_keep_estimate(self):
        acc = LyapunovAccumulator(q=2, bin_size=8)
        record_bin(acc, np.array([-3.0, -4.0]))
        first = acc.estimates().copy()
        record_bin(acc, np.array([-3.0, -4.0]))
        assert np.allclose(acc.estimates(), first, atol=1e-15)

    def test_wrong_length_rejected(self):
        acc = LyapunovAccumulator(q=2, bin_size=8)
        with pytest.raises(InvalidParameterError):
            record_bin(acc, np.array([-3.0]))


class TestConvergence:
    def _accumulator_with_history(self, values, window, bins_done):
        acc = LyapunovAccumulator(q=1, bin_size=1, window=window)
        acc.bins_done = bins_done
        for v in values:
            acc.history.append(np.array([v]))
        return acc

    def test_constant_history_converges(self):
        acc = self._accumulator_with_history([0.7] * 8, window=8, bins_done=16)
        assert check_convergence(acc)[0]

    def test_not_converged_before_two_windows(self):
        acc = self._accumulator_with_history([0.7] * 8, window=8, bins_done=15)
        assert not check_convergence(acc)[0]

    def test_alternating_history_not_converged(self):
        values = [0.5, 1.5] * 4  # relative std well above threshold
        acc = self._accumulator_with_history(values, window=8, bins_done=16)
        assert not check_convergence(acc)[0]


class TestEvolveBin:
    def test_unmonitored_bin_keeps_orthogonality(self):
        engine = prepare_engine(CircuitModel.floquet(3, 0.0), seed=2, q=3)
        acc = LyapunovAccumulator(q=3, bin_size=4)
        evolve_bin(engine, acc)
        gram = engine.probes.gram()
        assert np.max(np.abs(gram - np.eye(3))) < 1e-12
        assert np.allclose(
            engine.probes.log_scales, -4 * 1.5 * np.log(2), atol=1e-12
        )

    def test_single_step_bin_equals_plain_step(self):
        a = prepare_engine(CircuitModel.temporally_random(3, 0.3), seed=4, q=2)
        b = prepare_engine(CircuitModel.temporally_random(3, 0.3), seed=4, q=2)
        evolve_bin(a, LyapunovAccumulator(q=2, bin_size=1))
        b.step()
        assert np.array_equal(a.probes.vectors, b.probes.vectors)
        assert np.array_equal(a.physical.amplitudes, b.physical.amplitudes)

    def test_bin_matches_dense_replay(self):
        engine = prepare_engine(CircuitModel.temporally_random(4, 0.3), seed=6, q=3, keep_log=True)
        probes0 = engine.probes.vectors.copy()
        acc = LyapunovAccumulator(q=3, bin_size=8)
        evolve_bin(engine, acc)
        v = replay_product_oracle(engine.log, 0.3, 4)
        expected = v @ probes0
        actual = engine.probes.vectors * np.exp(engine.probes.log_scales)[None, :]
        rel = np.linalg.norm(actual - expected) / np.linalg.norm(expected)
        assert rel < 1e-10


class TestSvdOracle:
    def test_unmonitored_spectrum_is_flat(self):
        engine = prepare_engine(CircuitModel.floquet(3, 0.0), seed=9, q=2, keep_log=True)
        engine.run(16)
        exponents, _ = svd_oracle(engine.log, 3, 0.0, 16)
        assert np.allclose(exponents, 1.5 * np.log(2), atol=1e-12)
        assert np.allclose(exponents - exponents[0], 0.0, atol=1e-12)

    def test_single_site_enumeration(self):
        # L=1, theta=0: each step multiplies diag factors only, so the
        # exponents for a given outcome sequence follow by hand.
        eta, t_max = 0.3, 3
        a = np.sqrt(0.5 + eta)
        b = np.sqrt(0.5 - eta)
        zeros = ThetaSet(np.zeros((4, 4)))
        for seq in itertools.product((1, -1), repeat=t_max):
            records = [
                OutcomeRecord(t + 1, np.array([z]), zeros)
                for t, z in enumerate(seq)
            ]
            exponents, _ = svd_oracle(records, 1, eta, t_max)
            up = np.prod([a if z > 0 else b for z in seq])
            down = np.prod([b if z > 0 else a for z in seq])
            expected = np.sort(-np.log([up, down]) / t_max)
            assert np.allclose(exponents, expected, atol=1e-12)

    def test_short_log_rejected(self):
        engine = prepare_engine(CircuitModel.floquet(3, 0.2), seed=9, q=2, keep_log=True)
        engine.run(4)
        with pytest.raises(InsufficientLogError):
            svd_oracle(engine.log, 3, 0.2, 8)

    def test_renormalization_keeps_scale(self):
        # 20 steps crosses two rescale points; exponents must match the
        # raw product's SVD computed in one shot
        engine = prepare_engine(CircuitModel.temporally_random(3, 0.25), seed=13, q=2, keep_log=True)
        engine.run(20)
        exponents, vectors = svd_oracle(engine.log, 3, 0.25, 20)
        v = replay_product_oracle(engine.log, 0.25, 3)
        s = np.linalg.svd(v, compute_uv=False)
        assert np.allclose(exponents, -np.log(s) / 20, atol=1e-10)
        assert vectors.shape == (8, 8)


class TestShift:
    def test_constant_shift(self):
        est = LyapunovEstimate(np.array([0.3, 0.5, 0.9]), np.ones(3, bool), 100)
        shifted = shift_spectrum(est)
        assert np.allclose(shifted.exponents, [0.0, 0.2, 0.6], atol=1e-15)
        assert shifted.shifted

    def test_idempotent_and_gap_invariant(self):
        est = LyapunovEstimate(np.array([0.3, 0.5]), np.ones(2, bool), 100)
        once = shift_spectrum(est)
        twice = shift_spectrum(once)
        assert np.array_equal(once.exponents, twice.exponents)
        assert est.gap == pytest.approx(once.gap)


class TestEstimatorAgainstOracle:
    @pytest.mark.parametrize("eta", [0.2, 0.36])
    def test_small_chain_quick_equivalence(self, eta):
        # trimmed version of the acceptance criterion: 3 trajectories
        for seed in range(3):
            model = CircuitModel.temporally_random(4, eta)
            engine = prepare_engine(model, seed=100 + seed, q=4, keep_log=True)
            acc = LyapunovAccumulator(q=4, bin_size=8)
            for _ in range(32):
                evolve_bin(engine, acc)
                _, log_norms = orthonormalize(engine.probes)
                record_bin(acc, log_norms)
            est = acc.estimates()
            assert np.all(est >= -1e-12)
            oracle_eps, oracle_vecs = svd_oracle(engine.log, 4, eta, 256)
            rel = np.abs(est[1:] - oracle_eps[1:4]) / oracle_eps[1:4]
            assert np.max(rel) < 0.02
            # the shifted spectra carry the O(1/t) transient; they still
            # agree absolutely at this t
            shifted_gap = (est - est[0]) - (oracle_eps[:4] - oracle_eps[0])
            assert np.max(np.abs(shifted_gap)) < 0.02
            overlap = abs(np.vdot(oracle_vecs[:, 0], engine.probes.vectors[:, 0]))
            assert overlap >= 0.99

    def test_run_spectrum_orders_exponents(self):
        model = CircuitModel.temporally_random(3, 0.36)
        engine = prepare_engine(model, seed=21, q=4)
        acc = LyapunovAccumulator(q=4, bin_size=8, window=32, rel_threshold=1e-2)
        est = run_spectrum(engine, acc, max_bins=200)
        assert np.all(np.diff(est.exponents) >= -1e-9)
        assert np.all(est.exponents >= -1e-12)


class TestDefaultBinSize:
    def test_reference_anchors(self):
        assert default_bin_size(0.36) == 8
        assert default_bin_size(0.11) == 256
        assert default_bin_size(0.12, "floquet") == 512


@pytest.mark.slow
class TestBinRobustness:
    def test_doubling_agrees_at_strong_measurement(self):
        model = CircuitModel.temporally_random(8, 0.36)
        a, b, worst = bin_doubling_check(
            model, seed=5, q=4, bin_size=8, total_steps=12800, window=200
        )
        assert a.converged.all() and b.converged.all()
        assert worst < 0.01
