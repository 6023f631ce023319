"""Span-based coreference resolution with multi-task mention learning."""

from .corpus import (ENTITY_TYPES, INFO_STATUSES, UNKNOWN, CorpusError, Document,
                     Mention, SidecarRow, apply_sidecar, load_documents,
                     merge_sidecar, parse_conll, read_jsonl, read_sidecar,
                     write_conll, write_jsonl, write_sidecar)
from .encoder import EncoderCapabilityError, EncoderConfig, build_vocab, encode
from .error_analysis import (ERROR_CLASSES, ERROR_KINDS, Contrast, ErrorRecord,
                             classify_anaphor, contrast, extract_errors,
                             format_contrast, tally_by_class)
from .evaluation import (EvaluationError, EvaluationReport, PRF1, evaluate,
                         format_report, markable_detection_prf, score_b_cubed,
                         score_ceaf_phi4, score_muc)
from .inference import (PredictionResult, build_clusters, decode_antecedents,
                        predict_document, prediction_from_document,
                        prediction_to_document)
from .model import ModelConfig, MtlCorefModel
from .mtl import (PRESET_WEIGHTS, AuxiliaryLabels, TaskWeights, assign_aux_labels,
                  coref_loss, total_loss)
from .scoring import (AntecedentScoreRow, UnaryScore, coarse_scores, full_scores,
                      prune_spans, unary_scores)
from .spans import SpanCandidate, SpanRepresentation, enumerate_spans, represent_span
from .synthetic import generate_corpus, generate_document
from .training import (Checkpoint, GradCheckReport, NumericError, TrainConfig,
                       TrainResult, gradient_check, model_from_checkpoint, train)

__version__ = "0.1.0"
