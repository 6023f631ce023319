"""Candidate span enumeration and span representations.

A span representation concatenates the boundary token embeddings, an
attention-weighted average over the span's tokens (the soft head), and a
bucketed width embedding: dimension 3*d + feature_dim.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import ParameterStore, Tensor
from .corpus import Document

# buckets: widths/distances 1,2,3,4 exact, then 5-7, 8-15, 16-31, 32+
NUM_BUCKETS = 8


def bucket_index(n: int) -> int:
    if n <= 0:
        raise ValueError(f"bucketed quantity must be positive, got {n}")
    if n <= 4:
        return n - 1
    if n <= 7:
        return 4
    if n <= 15:
        return 5
    if n <= 31:
        return 6
    return 7


@dataclass(frozen=True, order=True)
class SpanCandidate:
    start: int
    end: int
    sentence: int

    @property
    def width(self) -> int:
        return self.end - self.start + 1

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


def enumerate_spans(doc: Document, max_span_width: int = 30) -> list[SpanCandidate]:
    """All spans of width <= max_span_width that stay inside one sentence,
    in (start, end) lexicographic order."""
    if max_span_width < 1:
        raise ValueError("max_span_width must be >= 1")
    out = []
    offset = 0
    for si, sent in enumerate(doc.sentences):
        n = len(sent)
        for i in range(n):
            for j in range(i, min(i + max_span_width, n)):
                out.append(SpanCandidate(offset + i, offset + j, si))
        offset += n
    return out


@dataclass
class SpanRepresentation:
    span: SpanCandidate
    vector: np.ndarray
    head_attention: np.ndarray


def create_span_params(store: ParameterStore, dim: int, feature_dim: int):
    store.create("span/width_embedding", (NUM_BUCKETS, feature_dim), std=1.0)
    store.create("span/head_score", (dim, 1))


def represent_spans(embeddings: Tensor, spans: list[SpanCandidate],
                    store: ParameterStore) -> tuple[Tensor, np.ndarray]:
    """Representations for all spans at once.

    Returns (G, alphas): G is (S, 3d+f); alphas holds each span's head
    attention weights padded with zeros to the widest span.
    """
    if not spans:
        raise ValueError("no spans to represent")
    starts = np.array([s.start for s in spans], dtype=np.intp)
    ends = np.array([s.end for s in spans], dtype=np.intp)
    widths = ends - starts + 1
    max_w = int(widths.max())

    # (S, max_w) token index grid, clipped at each span's end; clipped
    # duplicates get zero attention through the mask so they contribute nothing
    grid = starts[:, None] + np.arange(max_w)[None, :]
    grid = np.minimum(grid, ends[:, None])
    valid = np.arange(max_w)[None, :] < widths[:, None]
    mask = np.where(valid, 0.0, -np.inf)

    token_scores = ad.matmul(embeddings, store["span/head_score"])  # (T, 1)
    token_scores = token_scores.reshape((embeddings.shape[0],))
    span_scores = ad.take_rows(token_scores, grid) + ad.constant(mask)  # (S, max_w)
    lse = ad.logsumexp(span_scores, axis=1, keepdims=True)
    alpha = ad.exp(span_scores - lse)

    span_tokens = ad.take_rows(embeddings, grid)  # (S, max_w, d)
    attended = ad.einsum("sw,swd->sd", alpha, span_tokens)

    buckets = np.array([bucket_index(int(w)) for w in widths], dtype=np.intp)
    width_vecs = ad.take_rows(store["span/width_embedding"], buckets)

    g = ad.concat([
        ad.take_rows(embeddings, starts),
        ad.take_rows(embeddings, ends),
        attended,
        width_vecs,
    ], axis=1)
    return g, alpha.data


def represent_span(embeddings: Tensor, span: SpanCandidate,
                   store: ParameterStore) -> SpanRepresentation:
    g, alpha = represent_spans(embeddings, [span], store)
    return SpanRepresentation(span=span, vector=g.data[0].copy(),
                              head_attention=alpha[0, :span.width].copy())
