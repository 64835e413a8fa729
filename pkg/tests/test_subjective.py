import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import synth
from bandaware import subjective as sj
from bandaware.errors import InputError
from bandaware.subjective import MosTable, ScoreMatrix


def loglik_never_drops(est):
    ll = np.array(est.loglik)
    return np.all(np.diff(ll) >= -1e-9 * np.abs(ll[1:]))


class TestScoreMatrix:
    def test_defaults_ids(self):
        m = ScoreMatrix(np.full((2, 3), 50.0))
        assert m.item_ids == ("item0", "item1")
        assert len(m.subject_ids) == 3

    @pytest.mark.parametrize("scores, message", [
        (np.full((1, 3), 50.0), "at least 2"),
        (np.full((3, 1), 50.0), "at least 2"),
        (np.array([[50, 101], [1, 2]]), r"\[0, 100\]"),
        (np.array([[50, -1], [1, 2]]), r"\[0, 100\]"),
        (np.array([[np.nan, np.nan], [1, 2]]), "no scores"),
        (np.array([[1, np.nan], [1, np.nan], [1, 2]]), "fewer than 2"),
        (np.array([[1, np.inf], [1, 2]]), "finite"),
        (np.zeros(4), "2-D"),
    ])
    def test_invalid(self, scores, message):
        with pytest.raises(InputError, match=message):
            ScoreMatrix(scores)

    def test_id_length(self):
        with pytest.raises(InputError):
            ScoreMatrix(np.zeros((2, 2)), item_ids=["a"])


class TestSolveMle:
    def test_identical_rows(self):
        row = [10.0, 40.0, 70.0, 90.0]
        u = np.tile(np.array(row)[:, None], (1, 5))
        est = sj.solve_mle(ScoreMatrix(u))
        assert est.converged and est.iterations <= 2
        assert np.allclose(est.psi, row, atol=1e-12)
        assert np.allclose(est.delta, 0.0, atol=1e-12)
        assert np.allclose(est.v, math.sqrt(sj.VARIANCE_FLOOR))

    @pytest.mark.parametrize("n_subjects", [2, 5, 12])
    def test_single_offset_subject(self, n_subjects):
        psi = np.array([20.0, 35.0, 50.0, 65.0, 80.0])
        u = np.tile(psi[:, None], (1, n_subjects))
        u[:, 0] += 10
        est = sj.solve_mle(ScoreMatrix(u))
        assert est.converged
        # centred biases: the offset subject keeps 10 (S-1)/S, the others give up 10/S
        expected = np.full(n_subjects, -10.0 / n_subjects)
        expected[0] = 10.0 * (n_subjects - 1) / n_subjects
        assert np.allclose(est.delta, expected, atol=1e-6)
        assert np.allclose(est.psi, psi + 10.0 / n_subjects, atol=1e-6)
        # the pairwise difference is the raw offset
        assert est.delta[0] - est.delta[1] == pytest.approx(10.0, abs=1e-6)

    def test_delta_centred_and_ci_formula(self):
        _, _, _, u = synth.simulate_panel(np.random.default_rng(1), 20, 10)
        est = sj.solve_mle(ScoreMatrix(u))
        assert abs(est.delta.sum()) < 1e-9
        assert np.allclose(est.ci95, 1.96 / np.sqrt(np.sum(1 / est.v ** 2)))
        assert est.table().mos is est.psi

    def test_loglik_matches_trace(self):
        _, _, _, u = synth.simulate_panel(np.random.default_rng(2), 12, 6)
        m = ScoreMatrix(u)
        est = sj.solve_mle(m)
        assert est.loglik[-1] == pytest.approx(sj.log_likelihood(m, est.psi, est.delta, est.v), rel=1e-12)
        assert len(est.loglik) == est.iterations + 1

    def test_max_iter_partial(self):
        _, _, _, u = synth.simulate_panel(np.random.default_rng(3), 20, 8)
        est = sj.solve_mle(ScoreMatrix(u), max_iter=2)
        assert not est.converged and est.iterations == 2
        assert est.psi.shape == (20,)

    def test_missing_entries(self):
        rng = np.random.default_rng(5)
        _, _, _, u = synth.simulate_panel(rng, 30, 12)
        u[rng.random(u.shape) < 0.2] = np.nan
        u[:, 0] = 50.0
        est = sj.solve_mle(ScoreMatrix(u))
        assert est.converged
        assert np.all(np.isfinite(est.psi))
        assert loglik_never_drops(est)
        n_rated = (~np.isnan(u)).sum(axis=1)
        # fewer ratings, wider intervals (same subject weights otherwise)
        assert est.ci95[np.argmin(n_rated)] >= est.ci95[np.argmax(n_rated)]

    def test_equal_consistency_reduces_to_means(self):
        # cyclic residuals: every subject has zero mean residual and equal spread
        psi = np.array([30.0, 60.0, 45.0])
        noise = np.array([[-4.0, 1, 3], [1, 3, -4], [3, -4, 1]])
        u = psi[:, None] + noise
        est = sj.solve_mle(ScoreMatrix(u))
        assert np.allclose(est.delta, 0.0, atol=1e-9)
        assert np.allclose(est.v, est.v[0], atol=1e-9)
        assert np.allclose(est.psi, sj.plain_mos(ScoreMatrix(u)).mos, atol=1e-9)

    def test_recovery_within_sampling_error(self):
        # psi away from the slider ends so clipping is negligible
        rng = np.random.default_rng(20221015)
        psi, delta, v, u = synth.simulate_panel(rng, psi_range=(20, 80))
        est = sj.solve_mle(ScoreMatrix(u))
        assert est.converged
        se = est.ci95 / 1.96
        rmse = np.sqrt(np.mean((est.psi - psi) ** 2))
        assert rmse <= 1.5 * np.sqrt(np.mean(se ** 2))
        z_delta = np.abs(est.delta - delta) / (v / np.sqrt(len(psi)))
        assert z_delta.max() <= 4.0
        assert loglik_never_drops(est)


panels = st.integers(0, 2**32 - 1).map(
    lambda seed: 25 + 0.5 * synth.simulate_panel(np.random.default_rng(seed), 10, 6)[3])


@settings(max_examples=20, deadline=None)
@given(panels, st.floats(-15, 15))
def test_translation_equivariance(u, c):
    a = sj.solve_mle(ScoreMatrix(u))
    b = sj.solve_mle(ScoreMatrix(u + c))
    assert np.allclose(b.psi, a.psi + c, atol=1e-6)
    assert np.allclose(b.delta, a.delta, atol=1e-6)
    assert np.allclose(b.v, a.v, atol=1e-6)


@settings(max_examples=20, deadline=None)
@given(panels, st.randoms(use_true_random=False))
def test_subject_permutation(u, rnd):
    perm = list(range(u.shape[1]))
    rnd.shuffle(perm)
    a = sj.solve_mle(ScoreMatrix(u))
    b = sj.solve_mle(ScoreMatrix(u[:, perm]))
    assert np.allclose(b.psi, a.psi, atol=1e-6)
    assert np.allclose(b.delta, a.delta[perm], atol=1e-6)
    assert np.allclose(b.v, a.v[perm], atol=1e-6)


@settings(max_examples=20, deadline=None)
@given(panels)
def test_monotone_likelihood(u):
    assert loglik_never_drops(sj.solve_mle(ScoreMatrix(u)))


class TestPlainMos:
    def test_constant(self):
        t = sj.plain_mos(ScoreMatrix(np.array([[50.0, 50, 50], [10, 20, 30]])))
        assert t.mos[0] == 50 and t.ci95[0] == 0

    def test_two_scores(self):
        t = sj.plain_mos(ScoreMatrix(np.array([[40.0, 60], [0, 0]])))
        assert t.mos[0] == 50
        assert t.ci95[0] == pytest.approx(1.96 * math.sqrt(200) / math.sqrt(2), abs=1e-12)
        assert t.ci95[0] == pytest.approx(19.6, abs=1e-12)

    def test_missing_skipped(self):
        t = sj.plain_mos(ScoreMatrix(np.array([[40.0, np.nan, 60], [1, 2, 3], [4, 5, 6]])))
        assert t.mos[0] == 50 and t.ci95[0] == pytest.approx(19.6)

    def test_single_score_flagged(self, caplog):
        u = np.array([[40.0, np.nan], [1, 2], [np.nan, 5]])
        t = sj.plain_mos(ScoreMatrix(u, item_ids=["a", "b", "c"]))
        assert math.isnan(t.ci95[0]) and math.isnan(t.ci95[2])
        assert "a, c" in caplog.text


class TestReliability:
    def _table(self, mos, ci=2.0, ids=None):
        ids = ids or [f"v{i}" for i in range(len(mos))]
        return MosTable(ids, mos, [ci] * len(mos))

    def test_identical(self):
        a = self._table([10, 30, 50, 70])
        rep = sj.reliability_compare(a, a)
        assert rep.flipped_significant_pairs == []
        assert rep.plcc == pytest.approx(1.0, abs=1e-15) and rep.srocc == pytest.approx(1.0, abs=1e-15)

    def test_one_swap(self):
        a = self._table([10, 30, 50, 70])
        b = self._table([10, 50, 30, 70])
        rep = sj.reliability_compare(a, b)
        assert rep.flipped_significant_pairs == [("v2", "v1")]
        assert rep.to_dict()["n_flipped"] == 1

    def test_overlapping_swap_not_counted(self):
        a = self._table([10, 30, 31, 70])
        b = self._table([10, 31, 30, 70])
        assert sj.reliability_compare(a, b).flipped_significant_pairs == []

    def test_alignment_by_id(self):
        a = self._table([10, 30, 50], ids=["x", "y", "z"])
        b = self._table([50, 10, 30], ids=["z", "x", "y"])
        rep = sj.reliability_compare(a, b)
        assert rep.flipped_significant_pairs == [] and rep.srocc == pytest.approx(1.0)

    def test_misaligned(self):
        with pytest.raises(InputError):
            sj.reliability_compare(self._table([1, 2], ids=["a", "b"]), self._table([1, 2], ids=["a", "c"]))

    def test_realistic_repeat(self):
        rng = np.random.default_rng(42)
        mos = rng.uniform(10, 90, 42)
        a = MosTable([f"v{i}" for i in range(42)], mos, np.full(42, 6.0))
        b = MosTable(a.item_ids, mos + rng.normal(0, 3, 42), np.full(42, 6.0))
        rep = sj.reliability_compare(a, b)
        assert rep.flipped_significant_pairs == []
        assert rep.plcc > 0.98 and rep.srocc > 0.98


class TestCsv:
    def test_scores_round_trip(self, tmp_path):
        p = tmp_path / "scores.csv"
        p.write_text("item,s1,s2,s3\na,10,20,\nb,30,40,50\nc,1,2,3\n")
        m = sj.read_scores_csv(p)
        assert m.item_ids == ("a", "b", "c") and m.subject_ids == ("s1", "s2", "s3")
        assert math.isnan(m.scores[0, 2])

    def test_scores_ragged(self, tmp_path):
        p = tmp_path / "scores.csv"
        p.write_text("item,s1,s2\na,10\n")
        with pytest.raises(InputError, match="expected 3 cells"):
            sj.read_scores_csv(p)

    def test_mos_round_trip(self, tmp_path):
        t = MosTable(["a", "b"], [12.5, 80.0], [1.25, math.nan])
        p = tmp_path / "mos.csv"
        p.write_text(sj.format_mos_csv(t))
        assert p.read_text() == "item_id,mos,ci95\na,12.500000,1.250000\nb,80.000000,\n"
        back = sj.read_mos_csv(p)
        assert back.item_ids == ("a", "b") and back.mos.tolist() == [12.5, 80.0]

    def test_mos_missing_column(self, tmp_path):
        p = tmp_path / "mos.csv"
        p.write_text("item_id,mos\na,1\n")
        with pytest.raises(InputError, match="ci95"):
            sj.read_mos_csv(p)

    def test_subjects_csv(self):
        u = np.array([[20.0, 30], [60, 70]])
        text = sj.format_subjects_csv(sj.solve_mle(ScoreMatrix(u, subject_ids=["p", "q"])))
        assert text.splitlines()[0] == "subject_id,bias,inconsistency"
        assert text.splitlines()[1].startswith("p,-5.000000,")
