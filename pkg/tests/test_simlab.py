"""Born distributions, sampling, estimators, and the experiment pipeline."""

import math

import numpy as np
import pytest

from hyperbell import bell, model, rng, simlab
from hyperbell.model import NoiseModel, ObservableId, QuantumState
from hyperbell.simlab import JointSetting

SQRT2 = np.sqrt(2.0)


def _obs(name, kind):
    return ObservableId(name, kind)


def _setting(up, uk, dp, dk):
    return JointSetting(
        u_pol=_obs(up, model.POLARIZATION),
        u_path=_obs(uk, model.PATH),
        d_pol=_obs(dp, model.POLARIZATION),
        d_path=_obs(dk, model.PATH),
    )


IDEAL = model.hyper_state(np.pi, 0.0)
NOISY = model.apply_noise(IDEAL, NoiseModel(model.NOISE_WHITE, 0.9, 0.9))
MIXED_MAX = QuantumState.mixed(np.eye(16, dtype=complex) / 16)


class TestSettings:
    def test_sixteen_canonical_settings(self):
        settings = simlab.bell_test_settings()
        assert len(settings) == 16
        assert len({(s.u_label, s.d_label) for s in settings}) == 16

    def test_labels_match_product_terms(self):
        op = bell.canonical_product(2)
        term_labels = {(t.u_label, t.d_label) for t in op.terms}
        setting_labels = {(s.u_label, s.d_label) for s in simlab.bell_test_settings()}
        assert setting_labels == term_labels

    def test_kind_validation(self):
        with pytest.raises(ValueError, match="not a polarization"):
            JointSetting(
                u_pol=_obs("A", model.PATH),
                u_path=_obs("A", model.PATH),
                d_pol=_obs("B", model.POLARIZATION),
                d_path=_obs("B", model.PATH),
            )


class TestBornDistribution:
    def test_perfect_correlations_on_matched_setting(self):
        """With A_pi and A_k measured on both photons of the source state the
        polarization outcomes always agree, and so do the path outcomes."""
        setting = _setting("A", "A", "A", "A")  # same observables on photon d
        dist = simlab.born_distribution(IDEAL, setting)
        grid = dist.probs.reshape(4, 4)
        p_pol_match = sum(
            grid[i, j]
            for i, (pu, ku) in enumerate(simlab.OUTCOME_PAIRS)
            for j, (pd, kd) in enumerate(simlab.OUTCOME_PAIRS)
            if pu == pd
        )
        p_path_match = sum(
            grid[i, j]
            for i, (pu, ku) in enumerate(simlab.OUTCOME_PAIRS)
            for j, (pd, kd) in enumerate(simlab.OUTCOME_PAIRS)
            if ku == kd
        )
        assert p_pol_match == pytest.approx(1.0, abs=1e-12)
        assert p_path_match == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed_is_uniform(self):
        dist = simlab.born_distribution(MIXED_MAX, _setting("A", "a", "B", "b"))
        np.testing.assert_allclose(dist.probs, np.full(16, 1 / 16), atol=1e-12)

    @pytest.mark.parametrize("state", [IDEAL, NOISY, MIXED_MAX], ids=["ideal", "noisy", "mixed"])
    def test_normalization(self, state):
        for setting in simlab.bell_test_settings():
            dist = simlab.born_distribution(state, setting)
            assert dist.probs.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(dist.probs >= 0.0)

    def test_analytic_joint_correlation_is_half(self):
        """Product state: E_joint = (1/sqrt2) * (1/sqrt2) = 0.5 on the first
        canonical setting."""
        dist = simlab.born_distribution(IDEAL, _setting("A", "A", "B", "B"))
        joint, pol, path = simlab.analytic_correlations(dist)
        assert pol == pytest.approx(1 / SQRT2, abs=1e-12)
        assert path == pytest.approx(1 / SQRT2, abs=1e-12)
        assert joint == pytest.approx(0.5, abs=1e-12)

    def test_requires_two_dof_state(self):
        single = QuantumState.mixed(np.eye(4, dtype=complex) / 4)
        with pytest.raises(ValueError, match="two-DOF"):
            simlab.born_distribution(single, _setting("A", "A", "B", "B"))


class TestNoSignaling:
    @pytest.mark.parametrize(
        "state",
        [
            IDEAL,
            NOISY,
            model.apply_noise(IDEAL, NoiseModel(model.NOISE_WHITE, 0.9, 0.8)),
            model.apply_noise(IDEAL, NoiseModel(model.NOISE_DEPHASING, 0.85, 0.95)),
        ],
        ids=["ideal", "white-sym", "white-asym", "dephasing"],
    )
    def test_marginals_independent_of_remote_setting(self, state):
        assert simlab.signaling_deviation(state) < 1e-10


class TestSample:
    def test_point_distribution(self):
        probs = np.zeros(16)
        probs[5] = 1.0
        dist = simlab.OutcomeDistribution(_setting("A", "A", "B", "B"), probs)
        counts = simlab.sample(dist, 1234, seed=99)
        assert counts[5] == 1234 and counts.sum() == 1234

    def test_seed_replay(self):
        dist = simlab.born_distribution(NOISY, _setting("a", "a", "b", "b"))
        first = simlab.sample(dist, 5000, seed=17)
        second = simlab.sample(dist, 5000, seed=17)
        np.testing.assert_array_equal(first, second)

    def test_golden_counts(self):
        """Pinned to (seed=42, splitmix64-invcdf-v1); a change here means the
        generator identity changed."""
        assert rng.GENERATOR_ID == "splitmix64-invcdf-v1"
        dist = simlab.OutcomeDistribution(_setting("A", "A", "B", "B"), np.full(16, 1 / 16))
        counts = simlab.sample(dist, 1000, seed=42)
        golden = [71, 68, 71, 63, 58, 69, 56, 69, 52, 56, 61, 61, 54, 69, 55, 67]
        assert counts.tolist() == golden

    def test_splitmix_reference_vector(self):
        """First outputs of the seed-0 stream match the published SplitMix64
        test vector."""
        out = rng.random_uint64(0, 3)
        assert out.tolist() == [
            0xE220A8397B1DCDAF,
            0x6E789E6AA1B965F4,
            0x06C45D188009454F,
        ]

    def test_uniform_cells_within_binomial_range(self):
        """Each cell of a uniform multinomial stays within 5 binomial sigma."""
        dist = simlab.OutcomeDistribution(_setting("A", "A", "B", "B"), np.full(16, 1 / 16))
        counts = simlab.sample(dist, 10**6, seed=11)
        sigma = math.sqrt(10**6 * (1 / 16) * (15 / 16))
        assert np.all(np.abs(counts - 62500) < 5 * sigma)

    def test_derived_seeds_distinct(self):
        seeds = {rng.derive_seed(0, k) for k in range(56)}
        assert len(seeds) == 56


class TestEstimate:
    def test_deterministic_counts_give_unit_correlation(self):
        counts = np.zeros(16, dtype=int)
        counts[0] = 500  # (+,+ | +,+)
        est = simlab.estimate(counts, _setting("A", "A", "B", "B"))
        for rec in (est.joint, est.pol, est.path):
            assert rec.E == 1.0 and rec.std_err == 0.0 and rec.n_events == 500

    def test_std_err_formula(self):
        dist = simlab.born_distribution(NOISY, _setting("A", "A", "B", "B"))
        counts = simlab.sample(dist, 10**4, seed=3)
        est = simlab.estimate(counts, dist.setting)
        for rec in (est.joint, est.pol, est.path):
            assert rec.std_err == pytest.approx(
                math.sqrt((1 - rec.E**2) / rec.n_events), abs=1e-12
            )

    def test_labels_split_by_degree_of_freedom(self):
        est = simlab.estimate(
            np.full(16, 10, dtype=int), _setting("a", "A", "b", "B")
        )
        assert est.joint.label == ("a_pi A_k", "b_pi B_k")
        assert est.pol.label == ("a_pi", "b_pi")
        assert est.path.label == ("A_k", "B_k")

    def test_sampled_joint_matches_analytic_within_five_sigma(self):
        dist = simlab.born_distribution(IDEAL, _setting("A", "A", "B", "B"))
        counts = simlab.sample(dist, 10**5, seed=21)
        est = simlab.estimate(counts, dist.setting)
        assert abs(est.joint.E - 0.5) < 5 * est.joint.std_err

    def test_white_noise_marginal_is_visibility(self):
        """Same-observable polarization correlation equals v_pi = 0.9 under
        white noise, independent of the path context."""
        dist = simlab.born_distribution(NOISY, _setting("A", "A", "A", "B"))
        _, pol, _ = simlab.analytic_correlations(dist)
        assert pol == pytest.approx(0.9, abs=1e-12)

    def test_too_few_events_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            simlab.estimate(np.zeros(16, dtype=int), _setting("A", "A", "B", "B"))
        one = np.zeros(16, dtype=int)
        one[3] = 1
        with pytest.raises(ValueError, match="at least 2"):
            simlab.estimate(one, _setting("A", "A", "B", "B"))
        with pytest.raises(ValueError, match="16 nonnegative"):
            simlab.estimate(np.zeros(4, dtype=int), _setting("A", "A", "B", "B"))


class TestFactorization:
    def test_joint_equals_product_of_marginals_analytically(self):
        for state in (IDEAL, NOISY):
            for setting in simlab.bell_test_settings():
                joint, pol, path = simlab.analytic_correlations(
                    simlab.born_distribution(state, setting)
                )
                assert joint == pytest.approx(pol * path, abs=1e-10)

    def test_sampled_joint_factorizes_within_five_sigma(self):
        setting = _setting("a", "a", "B", "b")
        dist = simlab.born_distribution(IDEAL, setting)
        counts = simlab.sample(dist, 10**5, seed=5)
        est = simlab.estimate(counts, setting)
        joint_a, pol_a, path_a = simlab.analytic_correlations(dist)
        assert abs(est.joint.E - joint_a) < 5 * est.joint.std_err


class TestViolationReport:
    def _analytic_records(self, state, which):
        records = []
        for setting in simlab.bell_test_settings():
            dist = simlab.born_distribution(state, setting)
            joint, pol, path = simlab.analytic_correlations(dist)
            e = {"joint": joint, "pol": pol, "path": path}[which]
            label = {
                "joint": (setting.u_label, setting.d_label),
                "pol": (setting.u_pol.label, setting.d_pol.label),
                "path": (setting.u_path.label, setting.d_path.label),
            }[which]
            records.append(
                simlab.CorrelationRecord(label=label, E=e, std_err=0.0, n_events=1)
            )
        return records

    def test_ideal_analytic_records_sum_to_minus_eight(self):
        records = self._analytic_records(IDEAL, "joint")
        rep = simlab.violation_report(records, bell.canonical_product(2), bound=4.0)
        assert rep.beta_estimate == pytest.approx(-8.0, abs=1e-10)
        assert rep.beta_std_err == 0.0

    def test_ideal_chsh_records_sum_to_tsirelson(self):
        pol_records = {}
        path_records = {}
        for setting in simlab.bell_test_settings():
            dist = simlab.born_distribution(IDEAL, setting)
            _, pol, path = simlab.analytic_correlations(dist)
            pol_records[(setting.u_pol.label, setting.d_pol.label)] = pol
            path_records[(setting.u_path.label, setting.d_path.label)] = path
        recs = [
            simlab.CorrelationRecord(label=k, E=v, std_err=0.0, n_events=1)
            for k, v in pol_records.items()
        ]
        rep = simlab.violation_report(recs, bell.build_beta_pi(), bound=2.0)
        assert abs(rep.beta_estimate) == pytest.approx(2 * SQRT2, abs=1e-10)
        recs = [
            simlab.CorrelationRecord(label=k, E=v, std_err=0.0, n_events=1)
            for k, v in path_records.items()
        ]
        rep = simlab.violation_report(recs, bell.build_beta_k(), bound=2.0)
        assert abs(rep.beta_estimate) == pytest.approx(2 * SQRT2, abs=1e-10)

    def test_std_err_combines_in_quadrature(self):
        records = [
            simlab.CorrelationRecord(label=(t.u_label, t.d_label), E=0.5, std_err=0.01, n_events=100)
            for t in bell.build_beta_pi().terms
        ]
        rep = simlab.violation_report(records, bell.build_beta_pi(), bound=2.0)
        assert rep.beta_std_err == pytest.approx(0.02, abs=1e-12)
        assert rep.sigmas == pytest.approx(
            (abs(rep.beta_estimate) - 2.0) / rep.beta_std_err, abs=1e-12
        )

    def test_estimate_at_bound_gives_zero_sigma(self):
        es = [-0.5, 0.5, 0.5, 0.5]  # beta = 2 exactly
        records = [
            simlab.CorrelationRecord(label=(t.u_label, t.d_label), E=e, std_err=0.01, n_events=100)
            for t, e in zip(bell.build_beta_pi().terms, es)
        ]
        rep = simlab.violation_report(records, bell.build_beta_pi(), bound=2.0)
        assert rep.beta_estimate == pytest.approx(2.0, abs=1e-12)
        assert rep.sigmas == pytest.approx(0.0, abs=1e-9)

    def test_label_mismatch_rejected(self):
        records = [
            simlab.CorrelationRecord(label=("A_pi", "wrong"), E=0.5, std_err=0.01, n_events=10),
        ]
        with pytest.raises(ValueError, match="mismatch"):
            simlab.violation_report(records, bell.build_beta_pi(), bound=2.0)

    def test_duplicate_labels_rejected(self):
        rec = simlab.CorrelationRecord(label=("A_pi", "B_pi"), E=0.5, std_err=0.01, n_events=10)
        with pytest.raises(ValueError, match="duplicate"):
            simlab.violation_report([rec, rec], bell.build_beta_pi(), bound=2.0)


class TestSignificance:
    def test_published_chsh_values(self):
        """(2.5762 - 2)/0.0068 = 84.7 and (2.5658 - 2)/0.0067 = 84.4."""
        assert simlab.significance(2.5762, 0.0068, 2.0) == pytest.approx(
            84.73529411764707, abs=1e-9
        )
        assert simlab.significance(2.5658, 0.0067, 2.0) == pytest.approx(
            84.44776119402984, abs=1e-9
        )

    def test_published_product_value(self):
        """(7.019 - 4)/0.015 = 201.3, not the reported 196."""
        assert simlab.significance(7.019, 0.015, 4.0) == pytest.approx(
            201.26666666666668, abs=1e-9
        )

    def test_zero_error_edge_cases(self):
        assert simlab.significance(2.0, 0.0, 2.0) == 0.0
        assert simlab.significance(3.0, 0.0, 2.0) == math.inf

    def test_reference_rows_flag_the_discrepant_product(self):
        rows = simlab.reference_significance()
        assert [r.consistent for r in rows] == [True, True, False]
        assert rows[2].reported_sigmas == 196
        assert round(rows[2].sigmas) == 201


class TestAssumptionTest:
    def test_ideal_rows_are_perfectly_predictable(self):
        report = simlab.assumption_test(IDEAL, n_events=2000, seed=1)
        first = report.pol_rows[0]
        assert first.row_label == "A_pi A_pi"
        for cell in first.cells:
            assert cell.record.E == 1.0  # all mass on matching outcomes
        assert first.analytic_E == pytest.approx(1.0, abs=1e-12)
        assert first.spread == 0.0
        assert first.predictability == pytest.approx(1.0, abs=1e-12)

    def test_ideal_second_row_sign(self):
        """a_pi a_pi correlates to -1, the sign of the second measured row."""
        report = simlab.assumption_test(IDEAL, n_events=2000, seed=1)
        row = report.pol_rows[1]
        assert row.row_label == "a_pi a_pi"
        assert row.analytic_E == pytest.approx(-1.0, abs=1e-12)
        for cell in row.cells:
            assert cell.record.E == -1.0

    def test_row_structure(self):
        report = simlab.assumption_test(NOISY, n_events=100, seed=2)
        assert [r.row_label for r in report.pol_rows] == [
            "A_pi A_pi", "a_pi a_pi", "B_pi b_pi", "b_pi B_pi",
        ]
        assert [r.row_label for r in report.path_rows] == [
            "A_k A_k", "a_k a_k", "B_k B_k", "b_k b_k",
        ]
        for row in report.rows:
            assert [c.context_label for c in row.cells] == (
                ["A_k B_k", "A_k b_k", "a_k B_k", "a_k b_k"]
                if row.dof == model.POLARIZATION
                else ["A_pi B_pi", "A_pi b_pi", "a_pi B_pi", "a_pi b_pi"]
            )

    def test_analytic_spread_is_exactly_zero(self):
        for state in (IDEAL, NOISY):
            report = simlab.assumption_test(state, n_events=100, seed=3)
            for row in report.rows:
                assert row.analytic_spread == 0.0

    def test_noisy_rows_match_visibility(self):
        report = simlab.assumption_test(NOISY, n_events=10**4, seed=4)
        for row in report.rows:
            assert abs(row.analytic_E) == pytest.approx(0.9, abs=1e-12)
            assert abs(abs(row.mean_E) - 0.9) < 0.02
            assert row.spread < 0.05  # loose at 1e4 events
            assert row.predictability == pytest.approx((1 + abs(row.mean_E)) / 2, abs=1e-12)

    def test_stream_base_shifts_sampling(self):
        base0 = simlab.assumption_test(NOISY, n_events=1000, seed=5, stream_base=0)
        base24 = simlab.assumption_test(NOISY, n_events=1000, seed=5, stream_base=24)
        same = simlab.assumption_test(NOISY, n_events=1000, seed=5, stream_base=0)
        e0 = [c.record.E for r in base0.rows for c in r.cells]
        e24 = [c.record.E for r in base24.rows for c in r.cells]
        assert e0 == [c.record.E for r in same.rows for c in r.cells]
        assert e0 != e24


class TestSimulatedExperiment:
    def test_noisy_run_recovers_scaled_violations(self):
        result = simlab.run_simulated_experiment(NOISY, n_events=10**4, seed=5)
        assert len(result.joint_records) == 16
        assert abs(abs(result.beta_pi.beta_estimate) - 0.9 * 2 * SQRT2) < (
            5 * result.beta_pi.beta_std_err
        )
        assert abs(abs(result.beta_k.beta_estimate) - 0.9 * 2 * SQRT2) < (
            5 * result.beta_k.beta_std_err
        )
        assert abs(abs(result.beta.beta_estimate) - 8 * 0.81) < 5 * result.beta.beta_std_err
        assert result.generator_id == rng.GENERATOR_ID

    def test_bounds_are_element_of_reality_bounds(self):
        result = simlab.run_simulated_experiment(NOISY, n_events=1000, seed=6)
        assert (result.beta_pi.bound, result.beta_k.bound, result.beta.bound) == (2.0, 2.0, 4.0)

    def test_replays_identically(self):
        a = simlab.run_simulated_experiment(NOISY, n_events=2000, seed=9)
        b = simlab.run_simulated_experiment(NOISY, n_events=2000, seed=9)
        assert [r.E for r in a.joint_records] == [r.E for r in b.joint_records]
        assert a.beta == b.beta
