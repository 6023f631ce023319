"""Training loop, checkpoints, and the finite-difference gradient check.

One document per step. The coreference parameters (encoder, spans,
scorers) are optimized with AdamW; the auxiliary heads with plain Adam.
Runs are bitwise reproducible for a fixed (corpus, config, seed): every
random stream is derived by name, and checkpoints carry enough state to
resume mid-run with an identical trajectory.
"""

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .autodiff import named_rng
from .corpus import Document
from .encoder import EncoderConfig
from .evaluation import evaluate
from .model import ModelConfig, MtlCorefModel
from .mtl import TaskWeights
from .optim import AdamOptimizer, clip_global_norm


class NumericError(RuntimeError):
    """Training hit a non-finite loss or gradient."""


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 14500
    task_learning_rate: float = 3e-4
    encoder_learning_rate: float = 3e-4
    weight_decay: float = 0.01
    clip_norm: float = 1.0
    seed: int = 0
    eval_every: int = 500
    task_weights: TaskWeights = field(default_factory=TaskWeights)
    # model structure
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    feature_dim: int = 20
    hidden: int = 1000
    ffnn_depth: int = 2
    activation: str = "relu"
    dropout: float = 0.3
    max_span_width: int = 30
    prune_ratio: float = 0.4
    top_antecedents: int = 50
    # checkpoint selection: best dev average F1, or the final step
    select: str = "best"

    def __post_init__(self):
        if self.steps <= 0:
            raise ValueError(f"steps must be > 0, got {self.steps}")
        if self.task_learning_rate <= 0 or self.encoder_learning_rate <= 0:
            raise ValueError("learning rates must be > 0")

    def model_config(self, genres: tuple) -> ModelConfig:
        return ModelConfig(
            encoder=self.encoder, feature_dim=self.feature_dim, hidden=self.hidden,
            ffnn_depth=self.ffnn_depth, activation=self.activation,
            dropout=self.dropout, max_span_width=self.max_span_width,
            prune_ratio=self.prune_ratio, top_antecedents=self.top_antecedents,
            genres=tuple(genres))


def config_to_dict(cfg: TrainConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    d["task_weights"] = TaskWeights(**d["task_weights"])
    d["encoder"] = EncoderConfig(**d["encoder"])
    return TrainConfig(**d)


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]            # final-step parameters
    selected: dict[str, np.ndarray] | None   # dev-selected, if different
    opt_main: dict | None
    opt_aux: dict | None
    meta: dict

    def predict_params(self) -> dict[str, np.ndarray]:
        return self.selected if self.selected is not None else self.params

    def save(self, path):
        arrays = {}
        for name, arr in self.params.items():
            arrays[f"param/{name}"] = arr
        if self.selected is not None:
            for name, arr in self.selected.items():
                arrays[f"selected/{name}"] = arr
        for tag, state in (("opt_main", self.opt_main), ("opt_aux", self.opt_aux)):
            if state is None:
                continue
            arrays[f"{tag}/step_count"] = np.array(state["step_count"])
            for key, arr in state["arrays"].items():
                arrays[f"{tag}/{key}"] = arr
        arrays["meta"] = np.array(json.dumps(self.meta))
        # write through a handle so numpy cannot append its own suffix
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        with np.load(path, allow_pickle=False) as npz:
            params, selected = {}, {}
            opt = {"opt_main": {"step_count": 0, "arrays": {}},
                   "opt_aux": {"step_count": 0, "arrays": {}}}
            meta = None
            seen_opt = {"opt_main": False, "opt_aux": False}
            for key in npz.files:
                if key == "meta":
                    meta = json.loads(str(npz[key][()]))
                elif key.startswith("param/"):
                    params[key[len("param/"):]] = npz[key]
                elif key.startswith("selected/"):
                    selected[key[len("selected/"):]] = npz[key]
                elif key.startswith(("opt_main/", "opt_aux/")):
                    tag, rest = key.split("/", 1)
                    seen_opt[tag] = True
                    if rest == "step_count":
                        opt[tag]["step_count"] = int(npz[key][()])
                    else:
                        opt[tag]["arrays"][rest] = npz[key]
                else:
                    raise ValueError(f"{path}: not a training checkpoint "
                                     f"(unexpected entry {key!r})")
        if meta is None:
            raise ValueError(f"{path}: not a training checkpoint (no meta entry)")
        return cls(params=params, selected=selected or None,
                   opt_main=opt["opt_main"] if seen_opt["opt_main"] else None,
                   opt_aux=opt["opt_aux"] if seen_opt["opt_aux"] else None,
                   meta=meta)


def model_from_checkpoint(ckpt: Checkpoint) -> MtlCorefModel:
    cfg = config_from_dict(ckpt.meta["config"])
    model = MtlCorefModel(cfg.model_config(tuple(ckpt.meta["genres"])),
                          seed=cfg.seed, vocab=ckpt.meta["vocab"],
                          include_aux=ckpt.meta["include_aux"])
    model.store.load_state(ckpt.predict_params())
    return model


@dataclass
class TrainResult:
    model: MtlCorefModel
    records: list[dict]
    checkpoint: Checkpoint
    best_step: int | None
    best_avg_f1: float | None


def _resolve_include_aux(weights: TaskWeights, include_aux):
    if include_aux is None:
        w = weights.as_dict()
        return any(v > 0 for k, v in w.items() if k != "coref")
    return bool(include_aux)


def train(train_docs: list[Document], cfg: TrainConfig,
          dev_docs: list[Document] | None = None,
          include_aux: bool | None = None,
          resume_from: Checkpoint | None = None,
          log_fn=None) -> TrainResult:
    """Run the training loop; returns the model plus per-step records.

    include_aux=None builds auxiliary heads exactly when some auxiliary
    weight is positive. Passing True with all-zero auxiliary weights is the
    instrumented-baseline mode: the heads exist but contribute nothing,
    and the loss trajectory matches include_aux=False bit for bit.
    """
    if not train_docs:
        raise ValueError("no training documents")
    for doc in train_docs:
        doc.validate()
    weights = cfg.task_weights
    include_aux = _resolve_include_aux(weights, include_aux)

    from .encoder import build_vocab  # local import keeps module load light
    genres = tuple(sorted({d.genre for d in train_docs}))
    vocab = build_vocab(train_docs, cfg.encoder.vocab_size)

    if resume_from is not None:
        saved = resume_from.meta
        # the step horizon may grow on resume; everything else must match
        saved_cfg = {k: v for k, v in saved["config"].items() if k != "steps"}
        want_cfg = {k: v for k, v in config_to_dict(cfg).items() if k != "steps"}
        if saved_cfg != want_cfg:
            raise ValueError("resume config differs from the checkpoint's")
        if saved["include_aux"] != include_aux:
            raise ValueError("resume include_aux differs from the checkpoint's")
        genres = tuple(saved["genres"])
        vocab = list(saved["vocab"])

    model = MtlCorefModel(cfg.model_config(genres), cfg.seed, vocab, include_aux)
    main_groups = [(model.encoder_parameters(), cfg.encoder_learning_rate),
                   (model.task_parameters(), cfg.task_learning_rate)]
    opt_main = AdamOptimizer(main_groups, weight_decay=cfg.weight_decay,
                             decoupled=True)
    opt_aux = (AdamOptimizer([(model.aux_parameters(), cfg.task_learning_rate)])
               if include_aux else None)

    shuffle_rng = named_rng(cfg.seed, "shuffle")
    perm = shuffle_rng.permutation(len(train_docs))
    pos = 0
    start_step = 0

    if resume_from is not None:
        model.store.load_state(resume_from.params)
        if resume_from.opt_main is not None:
            opt_main.load_state(resume_from.opt_main)
        if opt_aux is not None and resume_from.opt_aux is not None:
            opt_aux.load_state(resume_from.opt_aux)
        shuffle_rng.bit_generator.state = resume_from.meta["rng_state"]
        perm = np.array(resume_from.meta["perm"], dtype=np.intp)
        pos = int(resume_from.meta["pos"])
        start_step = int(resume_from.meta["step"])

    records: list[dict] = []
    best_step = None
    best_avg_f1 = None
    best_params = None
    last_eval_step = None
    all_params = model.all_parameters()

    def run_eval(step):
        nonlocal best_step, best_avg_f1, best_params, last_eval_step
        from .inference import predict_document
        preds = [predict_document(model, d) for d in dev_docs]
        report = evaluate(dev_docs, preds)
        rec = {"step": step, "dev_avg_f1": report.avg_f1,
               "dev_muc_f1": report.muc.f1, "dev_b_cubed_f1": report.b_cubed.f1,
               "dev_ceaf_phi4_f1": report.ceaf_phi4.f1}
        records.append(rec)
        last_eval_step = step
        if log_fn:
            log_fn(rec)
        if best_avg_f1 is None or report.avg_f1 > best_avg_f1:
            best_avg_f1 = report.avg_f1
            best_step = step
            best_params = model.store.state()

    for step in range(start_step + 1, cfg.steps + 1):
        if pos >= len(perm):
            perm = shuffle_rng.permutation(len(train_docs))
            pos = 0
        doc = train_docs[int(perm[pos])]
        pos += 1

        model.store.zero_grad()
        tot, values, _ = model.loss(doc, weights, train_step=step)
        loss_value = float(tot.item())
        if not np.isfinite(loss_value):
            raise NumericError(
                f"non-finite loss at step {step} on document {doc.doc_key}: "
                f"{values}")
        tot.backward()
        grad_norm = clip_global_norm(all_params, cfg.clip_norm)
        if not np.isfinite(grad_norm):
            raise NumericError(
                f"non-finite gradient at step {step} on document {doc.doc_key}")
        opt_main.step()
        if opt_aux is not None:
            opt_aux.step()

        rec = {"step": step, "doc_key": doc.doc_key, "loss": loss_value,
               "grad_norm": grad_norm}
        rec.update({f"loss_{k}": v for k, v in values.items()})
        records.append(rec)
        if log_fn:
            log_fn(rec)
        if dev_docs and cfg.eval_every > 0 and step % cfg.eval_every == 0:
            run_eval(step)

    if dev_docs and cfg.steps > start_step and last_eval_step != cfg.steps:
        run_eval(cfg.steps)

    final_params = model.store.state()
    selected = None
    if cfg.select == "best" and best_params is not None:
        model.store.load_state(best_params)
        if best_step != cfg.steps:
            selected = best_params
    meta = {
        "config": config_to_dict(cfg),
        "include_aux": include_aux,
        "vocab": vocab,
        "genres": list(genres),
        "step": cfg.steps,
        "rng_state": shuffle_rng.bit_generator.state,
        "perm": [int(i) for i in perm],
        "pos": pos,
        "best_step": best_step,
        "best_avg_f1": best_avg_f1,
    }
    ckpt = Checkpoint(params=final_params, selected=selected,
                      opt_main=opt_main.state(),
                      opt_aux=opt_aux.state() if opt_aux is not None else None,
                      meta=meta)
    return TrainResult(model=model, records=records, checkpoint=ckpt,
                       best_step=best_step, best_avg_f1=best_avg_f1)


# -- gradient check ---------------------------------------------------------


@dataclass
class GradCheckReport:
    max_rel_err: float
    worst_param: str
    per_param: dict[str, float]


def gradient_check(doc: Document, cfg: TrainConfig,
                   weights: TaskWeights | None = None,
                   include_aux: bool = True, eps: float = 1e-5,
                   rel_floor: float = 1e-3) -> GradCheckReport:
    """Central-difference check of every parameter element against backprop.

    Dropout is forced off. Relative error uses max(|analytic|, |numeric|,
    rel_floor) as the denominator so near-zero gradients compare on an
    absolute scale.
    """
    if weights is None:
        weights = TaskWeights(1.0, 1.0, 1.0, 1.0)
    doc.validate()
    cfg = dataclasses.replace(cfg, dropout=0.0)
    genres = (doc.genre,) if doc.genre else ()
    from .encoder import build_vocab
    vocab = build_vocab([doc], cfg.encoder.vocab_size)
    model = MtlCorefModel(cfg.model_config(genres), cfg.seed, vocab, include_aux)

    def loss_value() -> float:
        tot, _, _ = model.loss(doc, weights)
        return float(tot.item())

    model.store.zero_grad()
    tot, _, _ = model.loss(doc, weights)
    tot.backward()
    analytic = {name: (model.store[name].grad.copy()
                       if model.store[name].grad is not None
                       else np.zeros_like(model.store[name].data))
                for name in model.store.names()}

    per_param = {}
    worst = ("", 0.0)
    for name in model.store.names():
        tensor = model.store[name]
        flat = tensor.data.reshape(-1)
        worst_here = 0.0
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + eps
            up = loss_value()
            flat[idx] = original - eps
            down = loss_value()
            flat[idx] = original
            numeric = (up - down) / (2.0 * eps)
            a = float(analytic[name].reshape(-1)[idx])
            denom = max(abs(a), abs(numeric), rel_floor)
            err = abs(a - numeric) / denom
            worst_here = max(worst_here, err)
        per_param[name] = worst_here
        if worst_here > worst[1]:
            worst = (name, worst_here)
    return GradCheckReport(max_rel_err=worst[1], worst_param=worst[0],
                           per_param=per_param)
