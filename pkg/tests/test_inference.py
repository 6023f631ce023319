"""Antecedent decoding and cluster construction."""

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corefmtl.corpus import UNKNOWN, Mention
from corefmtl.inference import (
    PredictionResult,
    build_clusters,
    cluster_display_type,
    decode_antecedents,
    prediction_from_document,
    prediction_to_document,
)
from corefmtl.scoring import AntecedentScoreRow
from corefmtl.spans import SpanCandidate
from helpers import make_document, spans_to_clusters


def cand(s, e, sent=0):
    return SpanCandidate(s, e, sent)


def row(i, antecedents, scores):
    return AntecedentScoreRow(i, tuple(antecedents), np.asarray(scores, float))


class TestDecodeAntecedents:
    def test_picks_argmax_above_dummy(self):
        rows = [row(0, (), ()),
                row(1, (0,), (1.5,)),
                row(2, (0, 1), (-1.0, 2.0))]
        assert decode_antecedents(rows) == [None, 0, 1]

    def test_all_negative_scores_decode_to_dummy(self):
        rows = [row(0, (), ()), row(1, (0,), (-0.25,))]
        assert decode_antecedents(rows) == [None, None]

    def test_tie_with_dummy_goes_to_dummy(self):
        rows = [row(0, (), ()), row(1, (0,), (0.0,))]
        assert decode_antecedents(rows) == [None, None]

    def test_tie_between_antecedents_goes_to_nearer(self):
        rows = [row(0, (), ()), row(1, (0,), (0.5,)),
                row(2, (0, 1), (3.0, 3.0))]
        assert decode_antecedents(rows)[2] == 1

    def test_empty(self):
        assert decode_antecedents([]) == []


def brute_force_closure(antecedents):
    """Transitive closure of the predicted links by repeated merging."""
    groups = [{i} for i in range(len(antecedents))]
    for i, j in enumerate(antecedents):
        if j is None:
            continue
        gi = next(g for g in groups if i in g)
        gj = next(g for g in groups if j in g)
        if gi is not gj:
            gi |= gj
            groups.remove(gj)
    return sorted(sorted(g) for g in groups if len(g) >= 2)


class TestBuildClusters:
    def spans(self, n):
        return [cand(i, i) for i in range(n)]

    def test_links_form_transitive_clusters(self):
        ants = [None, 0, None, 1, None]
        pred = build_clusters(ants, self.spans(5), "d")
        assert pred.clusters == [[(0, 0), (1, 1), (3, 3)]]
        assert pred.singletons == []  # no probabilities given

    def test_chain_through_shared_antecedent(self):
        # spans 1 and 2 both link to 0: one cluster of three
        ants = [None, 0, 0]
        pred = build_clusters(ants, self.spans(3), "d")
        assert pred.clusters == [[(0, 0), (1, 1), (2, 2)]]

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 10 ** 6), st.integers(1, 10))
    def test_matches_brute_force_closure(self, seed, n):
        rng = np.random.default_rng(seed)
        ants = [None if i == 0 or rng.random() < 0.4
                else int(rng.integers(0, i)) for i in range(n)]
        pred = build_clusters(ants, self.spans(n), "d")
        expected = [[(i, i) for i in g] for g in brute_force_closure(ants)]
        assert pred.clusters == expected

    def test_forward_link_rejected(self):
        with pytest.raises(ValueError, match="not before"):
            build_clusters([1, None], self.spans(2), "d")

    def test_threshold_gates_singletons(self):
        ants = [None, 0, None, None]
        probs = np.array([0.9, 0.1, 0.5, 0.49])
        pred = build_clusters(ants, self.spans(4), "d", singleton_probs=probs,
                              threshold=0.5)
        assert pred.clusters == [[(0, 0), (1, 1)]]
        # clustered spans never become singletons; 0.5 passes, 0.49 fails
        assert pred.singletons == [(2, 2)]

    def test_threshold_above_one_yields_no_singletons(self):
        ants = [None, None]
        probs = np.array([1.0, 1.0])
        pred = build_clusters(ants, self.spans(2), "d", singleton_probs=probs,
                              threshold=2.0)
        assert pred.singletons == []

    def test_threshold_zero_keeps_all_unlinked_spans(self):
        ants = [None, None]
        probs = np.array([0.0, 0.0])
        pred = build_clusters(ants, self.spans(2), "d", singleton_probs=probs,
                              threshold=0.0)
        assert pred.singletons == [(0, 0), (1, 1)]

    def test_type_and_status_argmax(self):
        ants = [None, 0]
        type_logits = np.zeros((2, 10))
        type_logits[0, 5] = 3.0   # person
        type_logits[1, 6] = 3.0   # place
        status_logits = np.zeros((2, 6))
        status_logits[0, 0] = 2.0  # new
        status_logits[1, 1] = 2.0  # given:active
        pred = build_clusters(ants, self.spans(2), "d",
                              type_logits=type_logits, status_logits=status_logits)
        assert pred.mention_types[(0, 0)] == "person"
        assert pred.mention_types[(1, 1)] == "place"
        assert pred.mention_statuses[(0, 0)] == "new"
        assert pred.mention_statuses[(1, 1)] == "given:active"
        # two distinct types tie 1-1: earliest member wins
        assert pred.cluster_types == ["person"]

    def test_mention_spans_dedup_sorted(self):
        pred = PredictionResult("d", clusters=[[(2, 2), (5, 5)]],
                                singletons=[(0, 1)])
        assert pred.mention_spans() == [(0, 1), (2, 2), (5, 5)]


class TestClusterDisplayType:
    def test_majority(self):
        assert cluster_display_type(["person", "place", "person"]) == "person"

    def test_unknown_members_do_not_vote(self):
        assert cluster_display_type([UNKNOWN, "place", UNKNOWN]) == "place"

    def test_all_unknown(self):
        assert cluster_display_type([UNKNOWN, UNKNOWN]) == UNKNOWN

    def test_tie_goes_to_earliest_tied_member(self):
        assert cluster_display_type(["place", "person", "person", "place"]) == "place"
        assert cluster_display_type([UNKNOWN, "event", "person"]) == "event"


class TestDocumentBridge:
    def doc(self):
        return make_document(
            [["Ana", "saw", "the", "dog", "there"]],
            clusters=spans_to_clusters([(0, 0), (2, 3)]),
            mentions=[Mention(0, 0, "person", "new", 0),
                      Mention(2, 3, "animal", "new", 0),
                      Mention(4, 4, "place", "new")],
            doc_key="t/bridge",
        )

    def test_prediction_to_document_round_trip(self):
        pred = PredictionResult(
            "t/bridge",
            clusters=[[(0, 0), (2, 3)]],
            singletons=[(4, 4)],
            mention_types={(0, 0): "person", (2, 3): "animal", (4, 4): "place"},
            mention_statuses={(0, 0): "new", (2, 3): "new", (4, 4): "new"},
            cluster_types=["person"],
        )
        doc = prediction_to_document(pred, self.doc())
        doc.validate()
        assert doc.gold_clusters == pred.clusters
        assert [m.span for m in doc.gold_mentions] == [(0, 0), (2, 3), (4, 4)]
        back = prediction_from_document(doc)
        assert back.clusters == pred.clusters
        assert back.singletons == pred.singletons
        assert back.mention_types == pred.mention_types
        assert back.cluster_types == pred.cluster_types

    def test_prediction_from_gold_document_is_faithful(self):
        pred = prediction_from_document(self.doc())
        assert pred.doc_key == "t/bridge"
        assert pred.clusters == [[(0, 0), (2, 3)]]
        assert pred.singletons == [(4, 4)]
        assert pred.cluster_types == ["person"]
