"""Span scoring: dual unary scores, pruning, coarse shortlists, full pair scores.

The unary score of a span is a trainable convex-ish combination of two
separately parameterized feed-forward scorers, one for markable-ness and
one for mention-ness:

    s_m(i) = beta1 * s_markable(i) + beta2 * s_mention(i)

The final antecedent score is s(i, j) = s_m(i) + s_m(j) + s_c(i, j) with
the dummy antecedent fixed at s(i, eps) = 0. The coarse bilinear score
only selects the shortlist; it does not enter the final sum.
"""

from dataclasses import dataclass
from math import ceil

import numpy as np

from . import autodiff as ad
from .autodiff import ParameterStore, Tensor
from .corpus import Document
from .layers import create_ffnn, ffnn
from .spans import NUM_BUCKETS, SpanCandidate, bucket_index

UNKNOWN_SPEAKERS = ("", "-")


@dataclass(frozen=True)
class UnaryScore:
    markable: float
    mention: float
    combined: float
    beta1: float
    beta2: float


@dataclass
class AntecedentScoreRow:
    """Scores for one span against its antecedent shortlist.

    antecedents are kept-span indices, strictly earlier in kept order,
    ascending. The dummy antecedent is implicit and always scores 0.
    """

    span_index: int
    antecedents: tuple[int, ...]
    scores: np.ndarray

    EPSILON_SCORE = 0.0


def create_scoring_params(store: ParameterStore, g_dim: int, hidden: int,
                          feature_dim: int, num_genres: int, depth: int = 2):
    create_ffnn(store, "score/markable", g_dim, hidden, 1, depth)
    create_ffnn(store, "score/mention", g_dim, hidden, 1, depth)
    store.create("score/beta", (2,), init="constant", std=0.5)
    store.create("score/coarse_bilinear", (g_dim, g_dim))
    create_ffnn(store, "score/pair", 3 * g_dim + 3 * feature_dim, hidden, 1, depth)
    store.create("pair/distance_embedding", (NUM_BUCKETS, feature_dim), std=1.0)
    store.create("pair/same_speaker_embedding", (2, feature_dim), std=1.0)
    # genre row 0 is the out-of-inventory bucket
    store.create("pair/genre_embedding", (num_genres + 1, feature_dim), std=1.0)


def unary_score_tensors(g: Tensor, store: ParameterStore, depth: int = 2,
                        activation: str = "relu", dropout: float = 0.0,
                        rng_factory=None) -> tuple[Tensor, Tensor, Tensor]:
    """(markable, mention, combined) score vectors, each shaped (S,)."""
    n = g.shape[0]

    def rng(name):
        return rng_factory(name) if rng_factory is not None else None

    markable = ffnn(g, store, "score/markable", depth, activation, dropout,
                    rng("score/markable")).reshape((n,))
    mention = ffnn(g, store, "score/mention", depth, activation, dropout,
                   rng("score/mention")).reshape((n,))
    beta = store["score/beta"]
    b1 = ad.take_rows(beta, np.array([0]))
    b2 = ad.take_rows(beta, np.array([1]))
    combined = b1 * markable + b2 * mention
    return markable, mention, combined


def unary_scores(g: Tensor, store: ParameterStore, depth: int = 2,
                 activation: str = "relu") -> list[UnaryScore]:
    markable, mention, combined = unary_score_tensors(g, store, depth, activation)
    b1, b2 = store["score/beta"].data
    return [UnaryScore(float(mk), float(mn), float(cb), float(b1), float(b2))
            for mk, mn, cb in zip(markable.data, mention.data, combined.data)]


# -- pruning -------------------------------------------------------------------


def _partially_crossing(a: SpanCandidate, b: SpanCandidate) -> bool:
    return (a.start < b.start <= a.end < b.end) or (b.start < a.start <= b.end < a.end)


def prune_spans(scores: np.ndarray, spans: list[SpanCandidate], num_tokens: int,
                ratio: float = 0.4) -> list[int]:
    """Keep up to ceil(ratio * num_tokens) spans by descending unary score,
    greedily skipping any span that partially crosses an already kept one.
    Returns indices into spans, sorted by (start, end).
    """
    if len(scores) != len(spans):
        raise ValueError("scores and spans disagree in length")
    limit = min(ceil(ratio * num_tokens), len(spans))
    order = sorted(range(len(spans)),
                   key=lambda i: (-float(scores[i]), spans[i].start, spans[i].end))
    kept: list[int] = []
    for i in order:
        if len(kept) >= limit:
            break
        if any(_partially_crossing(spans[i], spans[j]) for j in kept):
            continue
        kept.append(i)
    kept.sort(key=lambda i: (spans[i].start, spans[i].end))
    return kept


# -- coarse shortlist ------------------------------------------------------------


def coarse_scores(g: Tensor, combined: Tensor, store: ParameterStore,
                  top_k: int = 50) -> tuple[np.ndarray, list[np.ndarray]]:
    """Bilinear shortlist selection over kept spans (no gradient flows here).

    Returns the (S, S) coarse score matrix (-inf at j >= i) and, per span,
    the selected antecedent indices in ascending order.
    """
    gv = g.data
    s = gv.shape[0]
    bilinear = gv @ store["score/coarse_bilinear"].data @ gv.T
    coarse = combined.data[:, None] + combined.data[None, :] + bilinear
    coarse = np.where(np.tril(np.ones((s, s), dtype=bool), k=-1), coarse, -np.inf)
    shortlists = []
    for i in range(s):
        k = min(top_k, i)
        if k == 0:
            shortlists.append(np.zeros(0, dtype=np.intp))
            continue
        row = coarse[i, :i]
        # ties resolved toward the nearer antecedent
        order = np.lexsort((-np.arange(i), -row))[:k]
        shortlists.append(np.sort(order).astype(np.intp))
    return coarse, shortlists


# -- full pairwise scores ----------------------------------------------------------


@dataclass
class PairFeatures:
    """Flattened (span, antecedent) pairs with their feature indices."""

    rows: np.ndarray       # kept-span index of the anaphor
    cols: np.ndarray       # slot within the anaphor's shortlist
    antecedents: np.ndarray
    distance_bucket: np.ndarray
    same_speaker: np.ndarray
    genre_id: int


def span_speaker(doc: Document, span: SpanCandidate) -> str:
    return doc.flat_speakers()[span.start]


def pair_features(kept_spans: list[SpanCandidate], doc: Document,
                  shortlists: list[np.ndarray], genre_id: int) -> PairFeatures:
    speakers = doc.flat_speakers()
    rows, cols, ants, dist, same = [], [], [], [], []
    for i, shortlist in enumerate(shortlists):
        spk_i = speakers[kept_spans[i].start]
        for slot, j in enumerate(shortlist):
            rows.append(i)
            cols.append(slot)
            ants.append(int(j))
            dist.append(bucket_index(i - int(j)))
            spk_j = speakers[kept_spans[int(j)].start]
            known = spk_i not in UNKNOWN_SPEAKERS and spk_j not in UNKNOWN_SPEAKERS
            same.append(1 if known and spk_i == spk_j else 0)
    return PairFeatures(
        rows=np.array(rows, dtype=np.intp),
        cols=np.array(cols, dtype=np.intp),
        antecedents=np.array(ants, dtype=np.intp),
        distance_bucket=np.array(dist, dtype=np.intp),
        same_speaker=np.array(same, dtype=np.intp),
        genre_id=int(genre_id),
    )


def score_matrix(g: Tensor, combined: Tensor, pairs: PairFeatures, max_slots: int,
                 store: ParameterStore, depth: int = 2, activation: str = "relu",
                 dropout: float = 0.0, rng_factory=None) -> Tensor:
    """Full antecedent score matrix, shape (S, max_slots + 1).

    Column 0 is the dummy antecedent, a constant exact 0. Column 1 + t is
    shortlist slot t; slots beyond a span's shortlist hold -inf.
    """
    s = g.shape[0]
    if len(pairs.rows) == 0:
        return ad.concat([ad.constant(np.zeros((s, 1))),
                          ad.constant(np.full((s, max_slots), -np.inf))], axis=1)

    g_i = ad.take_rows(g, pairs.rows)
    g_j = ad.take_rows(g, pairs.antecedents)
    n_pairs = len(pairs.rows)
    phi = ad.concat([
        ad.take_rows(store["pair/distance_embedding"], pairs.distance_bucket),
        ad.take_rows(store["pair/same_speaker_embedding"], pairs.same_speaker),
        ad.take_rows(store["pair/genre_embedding"],
                     np.full(n_pairs, pairs.genre_id, dtype=np.intp)),
    ], axis=1)
    pair_in = ad.concat([g_i, g_j, g_i * g_j, phi], axis=1)
    rng = rng_factory("score/pair") if rng_factory is not None else None
    s_c = ffnn(pair_in, store, "score/pair", depth, activation, dropout,
               rng).reshape((n_pairs,))
    s_pair = s_c + ad.take_rows(combined, pairs.rows) \
                 + ad.take_rows(combined, pairs.antecedents)
    scattered = ad.scatter2d(s_pair, pairs.rows, pairs.cols, (s, max_slots),
                             fill=-np.inf)
    return ad.concat([ad.constant(np.zeros((s, 1))), scattered], axis=1)


def full_scores(g: Tensor, combined: Tensor, kept_spans: list[SpanCandidate],
                doc: Document, shortlists: list[np.ndarray], genre_id: int,
                store: ParameterStore, depth: int = 2,
                activation: str = "relu") -> list[AntecedentScoreRow]:
    """Scored shortlist rows for every kept span (inference-mode, no dropout)."""
    pairs = pair_features(kept_spans, doc, shortlists, genre_id)
    max_slots = max((len(sl) for sl in shortlists), default=0)
    matrix = score_matrix(g, combined, pairs, max_slots, store, depth, activation)
    rows = []
    for i, shortlist in enumerate(shortlists):
        rows.append(AntecedentScoreRow(
            span_index=i,
            antecedents=tuple(int(j) for j in shortlist),
            scores=matrix.data[i, 1:1 + len(shortlist)].copy(),
        ))
    return rows
