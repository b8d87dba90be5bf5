import numpy as np
import pytest

from embrank.evaluation import (cross_validation_splits,
                                evaluate_systems, load_qrels, load_run,
                                ndcg_at_k, paired_t_one_tailed, precision_at_1,
                                t_cdf, write_run)

# ten constructed rankings with closed-form NDCG@k values:
#   binary gain 1/log2(rank+1); graded gain 2^rel - 1
NDCG_CASES = [
    (["a"], {"a": 1}, 20, 1.0),
    (["b", "a"], {"a": 1}, 20, 0.6309297535714575),
    (["a", "b"], {"a": 1, "b": 1}, 20, 1.0),
    (["b", "a", "c"], {"a": 1, "c": 1}, 20, 0.6934264036172708),
    (["a", "b"], {"a": 1, "b": 2}, 20, 0.7967075809905066),
    (["x", "a"], {"a": 1}, 1, 0.0),
    (["a", "x", "y"], {"a": 1, "b": 1}, 20, 0.6131471927654584),
    (["a", "b"], {"a": 0}, 20, 0.0),
    (["x", "y", "a"], {"a": 1}, 20, 0.5),
    ([f"f{i:02d}" for i in range(20)] + ["a"], {"a": 1}, 20, 0.0),
    (["a", "x", "y", "b"], {"a": 1, "b": 1}, 20, 0.8772153153380493),
]


class TestNdcg:
    @pytest.mark.parametrize("ranking,judgments,k,expected", NDCG_CASES)
    def test_hand_computed_values(self, ranking, judgments, k, expected):
        assert ndcg_at_k(ranking, judgments, k) == pytest.approx(expected, abs=1e-6)

    def test_invariant_to_permuting_irrelevant_tail(self):
        judgments = {"a": 1}
        base = ["a", "x", "y", "z"]
        swapped = ["a", "z", "x", "y"]
        assert ndcg_at_k(base, judgments) == ndcg_at_k(swapped, judgments)

    def test_promoting_relevant_never_decreases(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            n = int(rng.integers(2, 15))
            ranking = [f"d{i}" for i in range(n)]
            judgments = {d: int(rng.integers(0, 2)) for d in ranking}
            for i in range(n - 1):
                if judgments.get(ranking[i], 0) == 0 and judgments.get(ranking[i + 1], 0) > 0:
                    swapped = list(ranking)
                    swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
                    assert ndcg_at_k(swapped, judgments) >= ndcg_at_k(ranking, judgments)

    def test_k_validation(self):
        with pytest.raises(ValueError):
            ndcg_at_k(["a"], {"a": 1}, 0)


class TestPrecisionAt1:
    def test_examples(self):
        assert precision_at_1(["a", "b"], {"a": 1}) == 1.0
        assert precision_at_1(["b", "a"], {"a": 1}) == 0.0
        assert precision_at_1([], {"a": 1}) == 0.0

    def test_equals_ndcg_at_1_for_binary(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            n = int(rng.integers(1, 10))
            ranking = [f"d{i}" for i in range(n)]
            judgments = {d: int(rng.integers(0, 2)) for d in ranking}
            if not any(judgments.values()):
                continue
            assert precision_at_1(ranking, judgments) == ndcg_at_k(ranking, judgments, 1)


class TestPairedT:
    def test_closed_form_example(self):
        t, p = paired_t_one_tailed([1.0, 1.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0])
        assert t == pytest.approx(3.0, abs=1e-12)
        assert p == pytest.approx(0.0288, abs=0.001)

    def test_identical_series_undefined(self):
        assert paired_t_one_tailed([0.4, 0.6], [0.4, 0.6]) == (None, None)

    def test_constant_nonzero_difference_undefined(self):
        assert paired_t_one_tailed([1.0, 1.0], [0.0, 0.0]) == (None, None)

    def test_swapping_negates_t(self):
        rng = np.random.default_rng(2)
        a = list(rng.uniform(0, 1, 10))
        b = list(rng.uniform(0, 1, 10))
        t_ab, p_ab = paired_t_one_tailed(a, b)
        t_ba, p_ba = paired_t_one_tailed(b, a)
        assert t_ab == pytest.approx(-t_ba, abs=1e-12)
        assert p_ab + p_ba == pytest.approx(1.0, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            paired_t_one_tailed([1.0], [1.0])
        with pytest.raises(ValueError):
            paired_t_one_tailed([1.0, 2.0], [1.0])

    @pytest.mark.parametrize("df,alpha,critical", [
        (1, 0.05, 6.3138), (1, 0.01, 31.8205),
        (3, 0.05, 2.3534), (3, 0.01, 4.5407),
        (10, 0.05, 1.8125), (10, 0.01, 2.7638),
        (30, 0.05, 1.6973), (30, 0.01, 2.4573),
    ])
    def test_cdf_matches_published_critical_values(self, df, alpha, critical):
        assert t_cdf(critical, df) == pytest.approx(1.0 - alpha, abs=1e-3)


class TestCrossValidation:
    def test_even_split(self):
        assignment = cross_validation_splits([f"q{i}" for i in range(10)], 5, seed=1)
        sizes = sorted(list(assignment.values()).count(f) for f in range(5))
        assert sizes == [2, 2, 2, 2, 2]

    def test_near_even_split(self):
        assignment = cross_validation_splits([f"q{i}" for i in range(11)], 5, seed=1)
        sizes = sorted((list(assignment.values()).count(f) for f in range(5)), reverse=True)
        assert sizes == [3, 2, 2, 2, 2]

    def test_every_query_exactly_once(self):
        ids = [f"q{i}" for i in range(23)]
        assignment = cross_validation_splits(ids, 5, seed=3)
        assert sorted(assignment) == sorted(ids)

    def test_seed_determinism(self):
        ids = [f"q{i}" for i in range(12)]
        assert cross_validation_splits(ids, 4, seed=7) == \
            cross_validation_splits(ids, 4, seed=7)
        assert cross_validation_splits(ids, 4, seed=7) != \
            cross_validation_splits(ids, 4, seed=8)


class TestFileFormats:
    def test_qrels_round_trip(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 d1 1\nq1 0 d2 0\nq2 0 d3 2\n", encoding="utf-8")
        judgments = load_qrels(str(path))
        assert judgments == {"q1": {"d1": 1, "d2": 0}, "q2": {"d3": 2}}

    def test_qrels_rejects_negative(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 d1 -1\n", encoding="utf-8")
        with pytest.raises(ValueError):
            load_qrels(str(path))

    def test_run_round_trip(self, tmp_path):
        path = str(tmp_path / "run.txt")
        write_run(path, {"q1": [("d2", 1.5), ("d1", 0.25)]}, "tag")
        lines = open(path).read().splitlines()
        assert lines == ["q1 Q0 d2 1 1.500000 tag", "q1 Q0 d1 2 0.250000 tag"]
        assert load_run(path) == {"q1": ["d2", "d1"]}


class TestEvalReport:
    def qrels(self):
        return {"q1": {"d1": 1}, "q2": {"d2": 1}, "q3": {"d9": 1}, "q4": {}}

    def runs(self):
        good = {"q1": ["d1", "d2"], "q2": ["d2", "d1"], "q3": ["d9"], "q4": ["d1"]}
        bad = {"q1": ["d2", "d1"], "q2": ["d1", "d2"], "q3": ["d0", "d9"], "q4": ["d1"]}
        return {"good": good, "bad": bad}

    def test_means_are_arithmetic_means(self):
        report = evaluate_systems(self.runs(), self.qrels())
        per = report.per_query["good"]["ndcg@20"]
        assert report.means["good"]["ndcg@20"] == pytest.approx(
            sum(per.values()) / len(per))

    def test_zero_relevant_counted(self):
        report = evaluate_systems(self.runs(), self.qrels())
        assert report.zero_relevant_queries == 1
        assert report.per_query["good"]["ndcg@20"]["q4"] == 0.0

    def test_significance_matrix_and_rendering(self):
        report = evaluate_systems(self.runs(), self.qrels())
        assert ("good", "bad") in report.significance["ndcg@20"]
        tsv = report.to_tsv()
        assert tsv.startswith("system\t")
        assert "good" in tsv
        report.to_json()
