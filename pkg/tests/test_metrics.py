import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import helpers_oracles
from rolescribe.metrics import (
    DEL,
    INS,
    MATCH,
    SUB,
    align_words,
    score_conversations,
    ScoreReport,
    wder,
    wer,
)
from rolescribe.vocab import DecoratedTranscript, Word


def transcript(pairs):
    return DecoratedTranscript(tuple(Word(word=w, role=r) for w, r in pairs))


class TestAlignWords:
    def test_identity(self):
        a = align_words(["a", "b", "c"], ["a", "b", "c"])
        assert [op.kind for op in a.ops] == [MATCH, MATCH, MATCH]
        assert a.cost == 0

    def test_single_deletion(self):
        a = align_words(["a", "b", "c"], ["a", "c"])
        assert [op.kind for op in a.ops] == [MATCH, DEL, MATCH]
        assert a.cost == 1

    def test_insertion_into_empty(self):
        a = align_words([], ["x"])
        assert [op.kind for op in a.ops] == [INS]
        assert a.cost == 1

    def test_index_monotonicity(self):
        rng = np.random.default_rng(1)
        letters = list("abcd")
        for _ in range(30):
            ref = [letters[i] for i in rng.integers(0, 4, size=rng.integers(0, 8))]
            hyp = [letters[i] for i in rng.integers(0, 4, size=rng.integers(0, 8))]
            a = align_words(ref, hyp)
            ref_seen = [op.ref_index for op in a.ops if op.ref_index is not None]
            hyp_seen = [op.hyp_index for op in a.ops if op.hyp_index is not None]
            assert ref_seen == sorted(ref_seen) == list(range(len(ref)))
            assert hyp_seen == sorted(hyp_seen) == list(range(len(hyp)))

    def test_cost_is_levenshtein(self):
        rng = np.random.default_rng(2)
        letters = list("abc")
        for _ in range(40):
            ref = [letters[i] for i in rng.integers(0, 3, size=rng.integers(0, 7))]
            hyp = [letters[i] for i in rng.integers(0, 3, size=rng.integers(0, 7))]
            oracle = helpers_oracles.preferred_alignment(ref, hyp)
            oracle_cost = sum(kind != "match" for kind, _, _ in oracle)
            assert align_words(ref, hyp).cost == oracle_cost

    def test_backtrace_matches_enumeration_oracle(self):
        rng = np.random.default_rng(3)
        letters = list("abcd")
        for _ in range(60):
            ref = [letters[i] for i in rng.integers(0, 4, size=rng.integers(0, 8))]
            hyp = [letters[i] for i in rng.integers(0, 4, size=rng.integers(0, 8))]
            got = [(op.kind, op.ref_index, op.hyp_index)
                   for op in align_words(ref, hyp).ops]
            assert got == helpers_oracles.preferred_alignment(ref, hyp)


class TestWer:
    def test_identical(self):
        a = align_words(["x", "y"], ["x", "y"])
        assert wer(a, 2).wer == 0.0

    def test_hand_counted_deletion(self):
        a = align_words(["a", "b", "c"], ["a", "c"])
        r = wer(a, 3)
        assert r.wer == pytest.approx(1 / 3)
        assert r.deletions == pytest.approx(1 / 3)
        assert r.insertions == 0.0
        assert r.substitutions == 0.0

    def test_decomposition_sums_to_wer(self):
        rng = np.random.default_rng(4)
        letters = list("abc")
        for _ in range(30):
            ref = [letters[i] for i in rng.integers(0, 3, size=rng.integers(1, 8))]
            hyp = [letters[i] for i in rng.integers(0, 3, size=rng.integers(0, 8))]
            a = align_words(ref, hyp)
            r = wer(a, len(ref))
            assert r.wer == pytest.approx(r.deletions + r.insertions + r.substitutions)

    def test_empty_reference_sentinel(self):
        a = align_words([], ["x"])
        r = wer(a, 0)
        assert r.wer is None and r.deletions is None

    def test_empty_both(self):
        assert wer(align_words([], []), 0).wer == 0.0

    def test_ref_len_mismatch_rejected(self):
        with pytest.raises(ValueError):
            wer(align_words(["a"], ["a"]), 2)


class TestWder:
    def test_identical(self):
        t = transcript([("hello", "<spk:dr>"), ("you", "<spk:pt>")])
        assert wder(t, t).wder == 0.0

    def test_hand_case_quarter(self):
        ref = transcript([("hello", "dr"), ("how", "dr"), ("are", "dr"), ("you", "pt")])
        hyp = transcript([("hello", "pt"), ("who", "dr"), ("are", "dr"), ("you", "pt")])
        r = wder(ref, hyp)
        assert (r.c, r.s, r.c_is, r.s_is) == (3, 1, 1, 0)
        assert r.wder == pytest.approx(0.25)

    def test_all_roles_flipped(self):
        ref = transcript([("a", "dr"), ("b", "dr"), ("c", "pt")])
        hyp = transcript([("a", "pt"), ("b", "pt"), ("c", "dr")])
        assert wder(ref, hyp).wder == 1.0

    def test_relabeling_invariance(self):
        ref = transcript([("a", "dr"), ("b", "pt"), ("c", "dr")])
        hyp = transcript([("a", "pt"), ("x", "pt"), ("c", "dr")])
        base = wder(ref, hyp)
        swap = {"dr": "pt", "pt": "dr"}
        ref2 = transcript([(w.word, swap[w.role]) for w in ref.words])
        hyp2 = transcript([(w.word, swap[w.role]) for w in hyp.words])
        relabeled = wder(ref2, hyp2)
        assert relabeled == base

    def test_empty_sentinel(self):
        r = wder(transcript([]), transcript([]))
        assert r.wder is None

    def test_roles_never_affect_alignment(self):
        ref = transcript([("a", "dr"), ("b", "pt")])
        hyp_same = transcript([("a", "pt"), ("b", "dr")])
        r = wder(ref, hyp_same)
        assert (r.c, r.s) == (2, 0)

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_matches_brute_force_oracle(self, data):
        words = st.sampled_from(["a", "b", "c", "d"])
        roles = st.sampled_from(["dr", "pt"])
        ref_pairs = data.draw(st.lists(st.tuples(words, roles), max_size=8))
        hyp_pairs = data.draw(st.lists(st.tuples(words, roles), max_size=8))
        ref = transcript(ref_pairs)
        hyp = transcript(hyp_pairs)
        got = wder(ref, hyp)
        s_is, c_is, s, c = helpers_oracles.wder_counts_oracle(
            [w for w, _ in ref_pairs], [r for _, r in ref_pairs],
            [w for w, _ in hyp_pairs], [r for _, r in hyp_pairs])
        assert (got.s_is, got.c_is, got.s, got.c) == (s_is, c_is, s, c)
        if s + c:
            assert 0.0 <= got.wder <= 1.0
            assert got.s_is + got.c_is <= got.s + got.c


class TestScoreReport:
    def test_aggregation_and_per_conversation(self):
        ref1 = transcript([("a", "dr"), ("b", "dr")])
        hyp1 = transcript([("a", "pt"), ("b", "dr")])
        ref2 = transcript([("c", "pt")])
        hyp2 = transcript([("c", "pt")])
        report = score_conversations([
            ("conv0", ref1, hyp1),
            ("conv1", ref2, hyp2),
        ])
        assert report.wer == 0.0
        assert report.wder == pytest.approx(1 / 3)
        assert len(report.per_conversation) == 2
        assert report.per_conversation[0].wder == pytest.approx(0.5)
        assert report.per_conversation[1].wder == 0.0

    def test_json_round_trip(self):
        report = score_conversations([
            ("c", transcript([("a", "dr")]), transcript([("b", "pt")])),
        ])
        again = ScoreReport.from_dict(__import__("json").loads(report.to_json()))
        assert again == report

    def test_deterministic(self):
        pairs = [("c", transcript([("a", "dr"), ("b", "pt")]),
                  transcript([("a", "pt"), ("x", "pt")]))]
        assert score_conversations(pairs) == score_conversations(pairs)
