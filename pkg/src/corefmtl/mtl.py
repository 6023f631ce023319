"""The joint objective: coreference loss plus weighted auxiliary task losses.

Auxiliary heads operate on the pruned span set only. Mention detection is
a 2-way decision on every kept span; entity type (10-way) and information
status (6-way) are trained only on kept spans that match a gold mention
with a known label. The total loss is the exact weighted sum
sum_c W_c * L_c over tasks with nonzero weight.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import ParameterStore, Tensor
from .corpus import ENTITY_TYPES, INFO_STATUSES, UNKNOWN, Document
from .layers import create_ffnn, ffnn
from .scoring import AntecedentScoreRow
from .spans import SpanCandidate

ENTITY_TYPE_INDEX = {t: i for i, t in enumerate(ENTITY_TYPES)}
INFO_STATUS_INDEX = {s: i for i, s in enumerate(INFO_STATUSES)}


@dataclass(frozen=True)
class TaskWeights:
    coref: float = 1.0
    singleton: float = 0.0
    entity_type: float = 0.0
    info_status: float = 0.0

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if value < 0:
                raise ValueError(f"task weight {name} must be >= 0, got {value}")
        if self.coref <= 0:
            raise ValueError("coreference weight must be > 0")

    def as_dict(self) -> dict[str, float]:
        return {"coref": self.coref, "singleton": self.singleton,
                "entity_type": self.entity_type, "info_status": self.info_status}

    @classmethod
    def from_dict(cls, d: dict) -> "TaskWeights":
        return cls(**{k: float(v) for k, v in d.items()})


PRESET_WEIGHTS = {
    "baseline": TaskWeights(1.0, 0.0, 0.0, 0.0),
    "sg": TaskWeights(0.5, 0.5, 0.0, 0.0),
    "sg_ent": TaskWeights(0.4, 0.2, 0.2, 0.0),
    "sg_ent_infs": TaskWeights(0.55, 0.15, 0.15, 0.15),
}


@dataclass
class AuxiliaryLabels:
    """Per-kept-span targets; -1 marks spans excluded from that task."""

    is_mention: np.ndarray    # {0, 1} for every kept span
    entity_type: np.ndarray   # -1 or index into ENTITY_TYPES
    info_status: np.ndarray   # -1 or index into INFO_STATUSES


def assign_aux_labels(kept_spans: list[SpanCandidate], doc: Document) -> AuxiliaryLabels:
    """Exact-span matching of kept spans against gold mentions."""
    mentions = doc.mention_map()
    n = len(kept_spans)
    is_mention = np.zeros(n, dtype=np.intp)
    entity_type = np.full(n, -1, dtype=np.intp)
    info_status = np.full(n, -1, dtype=np.intp)
    for i, cand in enumerate(kept_spans):
        m = mentions.get(cand.span)
        if m is None:
            continue
        is_mention[i] = 1
        if m.entity_type != UNKNOWN:
            entity_type[i] = ENTITY_TYPE_INDEX[m.entity_type]
        if m.info_status != UNKNOWN:
            info_status[i] = INFO_STATUS_INDEX[m.info_status]
    return AuxiliaryLabels(is_mention, entity_type, info_status)


HEAD_SIZES = {"singleton": 2, "entity_type": len(ENTITY_TYPES),
              "info_status": len(INFO_STATUSES)}


def create_head_params(store: ParameterStore, g_dim: int, hidden: int, depth: int = 2):
    # zero output layers: a fresh head is exactly uniform over its classes
    for task, width in HEAD_SIZES.items():
        create_ffnn(store, f"head/{task}", g_dim, hidden, width, depth,
                    zero_output=True)


def head_logits(g: Tensor, store: ParameterStore, depth: int = 2,
                activation: str = "relu", dropout: float = 0.0,
                rng_factory=None) -> dict[str, Tensor]:
    out = {}
    for task in HEAD_SIZES:
        rng = rng_factory(f"head/{task}") if rng_factory is not None else None
        out[task] = ffnn(g, store, f"head/{task}", depth, activation, dropout, rng)
    return out


# -- losses --------------------------------------------------------------------


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean cross entropy over rows with label >= 0; exact 0 if none."""
    labels = np.asarray(labels)
    keep = np.flatnonzero(labels >= 0)
    if len(keep) == 0:
        return ad.constant(0.0)
    sel = ad.take_rows(logits, keep)
    n, c = sel.shape
    lse = ad.logsumexp(sel, axis=1)
    flat = sel.reshape((n * c,))
    gold = ad.take_rows(flat, np.arange(n) * c + labels[keep])
    return (lse - gold).mean()


def gold_antecedent_mask(kept_spans: list[SpanCandidate], shortlists,
                         gold_clusters, num_slots: int) -> np.ndarray:
    """Boolean (S, num_slots + 1): which score-matrix entries are gold.

    Column 0 is the dummy antecedent; it is gold exactly when no gold
    antecedent of the span survives in its shortlist.
    """
    cluster_of: dict[tuple[int, int], int] = {}
    for ci, cluster in enumerate(gold_clusters):
        for span in cluster:
            cluster_of[tuple(span)] = ci
    n = len(kept_spans)
    mask = np.zeros((n, num_slots + 1), dtype=bool)
    for i, cand in enumerate(kept_spans):
        ci = cluster_of.get(cand.span)
        found = False
        if ci is not None:
            for slot, j in enumerate(shortlists[i]):
                if cluster_of.get(kept_spans[int(j)].span) == ci:
                    mask[i, 1 + slot] = True
                    found = True
        if not found:
            mask[i, 0] = True
    return mask


def coref_loss_from_matrix(scores: Tensor, gold_mask: np.ndarray) -> Tensor:
    """Marginal log-likelihood loss, summed over spans.

    Per span: log sum_j exp s(i, j) - log sum_{j in GOLD(i)} exp s(i, j),
    the softmax normalized over the dummy plus the shortlist.
    """
    if scores.shape != gold_mask.shape:
        raise ValueError("score matrix and gold mask disagree in shape")
    denom = ad.logsumexp(scores, axis=1)
    masked = scores + ad.constant(np.where(gold_mask, 0.0, -np.inf))
    numer = ad.logsumexp(masked, axis=1)
    return (denom - numer).sum()


def coref_loss(rows: list[AntecedentScoreRow], gold_index_clusters) -> float:
    """Loss from score rows, with gold clusters given as kept-span indices."""
    if not rows:
        return 0.0
    num_slots = max(len(r.antecedents) for r in rows)
    matrix = np.full((len(rows), num_slots + 1), -np.inf)
    matrix[:, 0] = 0.0
    mask = np.zeros_like(matrix, dtype=bool)
    cluster_of = {}
    for ci, cluster in enumerate(gold_index_clusters):
        for idx in cluster:
            cluster_of[int(idx)] = ci
    for r, row in enumerate(rows):
        if row.span_index != r:
            raise ValueError("rows must be ordered by span index")
        matrix[r, 1:1 + len(row.antecedents)] = row.scores
        ci = cluster_of.get(r)
        found = False
        if ci is not None:
            for slot, j in enumerate(row.antecedents):
                if cluster_of.get(int(j)) == ci:
                    mask[r, 1 + slot] = True
                    found = True
        if not found:
            mask[r, 0] = True
    return float(coref_loss_from_matrix(ad.constant(matrix), mask).item())


def aux_losses(logits: dict[str, Tensor], labels: AuxiliaryLabels) -> dict[str, Tensor]:
    """One masked cross-entropy per head present in logits."""
    targets = {"singleton": labels.is_mention,
               "entity_type": labels.entity_type,
               "info_status": labels.info_status}
    return {task: cross_entropy(t, targets[task]) for task, t in logits.items()}


def total_loss(parts: dict[str, Tensor], weights: TaskWeights) -> Tensor:
    """Exact weighted sum over tasks with nonzero weight.

    Zero-weight tasks are skipped entirely, so their graphs need not exist.
    """
    wd = weights.as_dict()
    total = None
    for task, weight in wd.items():
        if weight == 0.0:
            continue
        if task not in parts:
            raise KeyError(f"loss for weighted task {task!r} not provided")
        term = parts[task] * weight
        total = term if total is None else total + term
    return total
