"""Transition-matrix training: similarity matrices, coherence losses, gradients.

The learned object is a single d x d matrix W applied to base sentence
vectors (rows are transformed as v -> W v). Training drives the pairwise
similarity matrix of each mini-batch toward the identity: paraphrase pairs
(the diagonal) toward similarity 1, everything else toward 0.

Two normalization modes exist. ``cosine_transformed`` (default) normalizes
by the transformed row norms, so S is the true cosine matrix of refined
vectors and matches the evaluation geometry. ``paper_literal`` normalizes
by the untransformed row norms.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from ._core import rmsprop_update, similarity_core
from .corpus import ParaphraseBatch, batches, subsample_images
from .embeddings import CachingEmbedder
from .errors import ConfigError, DegenerateVector, EmptyCorpusError, ParseError

log = logging.getLogger(__name__)

MODE_COSINE = "cosine_transformed"
MODE_LITERAL = "paper_literal"
MODES = (MODE_COSINE, MODE_LITERAL)

MATRIX_FORMAT = "svtrans.matrix"
MATRIX_VERSION = 1

# stream tags for seed derivation, so the RNG draws of independent stages
# never overlap
_STREAM_FRACTION = 101
_STREAM_SHUFFLE = 102


@dataclass
class TransitionMatrix:
    """The d x d refinement matrix plus provenance metadata."""

    W: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.W = np.ascontiguousarray(self.W, dtype=np.float64)
        if self.W.ndim != 2 or self.W.shape[0] != self.W.shape[1]:
            raise ConfigError("transition matrix must be square")
        if not np.all(np.isfinite(self.W)):
            raise ConfigError("transition matrix entries must be finite")

    @property
    def d(self) -> int:
        return int(self.W.shape[0])


@dataclass
class SimilarityMatrix:
    """Normalized pairwise similarities S = N * raw, elementwise."""

    S: np.ndarray
    raw: np.ndarray
    N: np.ndarray

    @property
    def n(self) -> int:
        return int(self.S.shape[0])


@dataclass(frozen=True)
class LossBreakdown:
    """Diagonal and off-diagonal loss terms and their weighted total."""

    diagonal_loss: float
    non_diagonal_loss: float
    total: float
    lam: float


@dataclass
class TrainerConfig:
    """Knobs of the training loop; defaults follow the reference setup."""

    lam: float = 0.7
    batch_size: int = 512
    outer_epochs: int = 5
    learning_rate: float = 0.001
    rms_decay: float = 0.9
    rms_epsilon: float = 1e-8
    seed: int = 0
    normalization_mode: str = MODE_COSINE
    data_fraction: float = 1.0

    def validate(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError("lambda must lie in [0, 1]")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be a positive integer")
        if self.outer_epochs < 1:
            raise ConfigError("outer_epochs must be a positive integer")
        for name in ("learning_rate", "rms_decay", "rms_epsilon"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.normalization_mode not in MODES:
            raise ConfigError(f"normalization_mode must be one of {MODES}")
        if not 0.0 < self.data_fraction <= 1.0:
            raise ConfigError("data_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class InnerEpochLog:
    """Mean loss breakdown of one pass over one sub-training set."""

    outer: int
    inner: int
    set_index: int
    batches: int
    diag_loss: float
    nondiag_loss: float
    total: float


def xavier_init(d: int, seed) -> TransitionMatrix:
    """Uniform init on [-sqrt(6/(2d)), +sqrt(6/(2d))] (fan_in = fan_out = d)."""
    if d < 1:
        raise ConfigError("dimension must be a positive integer")
    bound = math.sqrt(6.0 / (2.0 * d))
    rng = np.random.default_rng(seed)
    W = rng.uniform(-bound, bound, size=(d, d))
    return TransitionMatrix(W=W, meta={"init": "xavier_uniform", "seed": seed, "d": d})


def _as_matrix(W) -> np.ndarray:
    if isinstance(W, TransitionMatrix):
        return W.W
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ConfigError("transition matrix must be square")
    return W


def transform_batch(W, batch: ParaphraseBatch):
    """Apply W to every row vector of the batch; returns (I_hat, P_hat)."""
    Wm = _as_matrix(W)
    if batch.inputs.shape[1] != Wm.shape[0]:
        raise ConfigError(
            f"batch dimension {batch.inputs.shape[1]} does not match matrix "
            f"dimension {Wm.shape[0]}")
    return batch.inputs @ Wm.T, batch.paraphrases @ Wm.T


def _row_norms(rows: np.ndarray, side: str) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1)
    bad = np.flatnonzero(~(norms > 0.0) | ~np.isfinite(norms))
    if bad.size:
        raise DegenerateVector(
            f"zero or non-finite norm in {side} row {int(bad[0])}",
            row=int(bad[0]))
    return norms


def build_similarity_matrix(I_hat, P_hat, batch: Optional[ParaphraseBatch],
                            mode: str = MODE_COSINE) -> SimilarityMatrix:
    """Raw dot products plus the mode's elementwise normalizer.

    ``cosine_transformed`` divides by the transformed row norms,
    ``paper_literal`` by the untransformed batch row norms (so ``batch``
    is required in that mode).
    """
    if mode not in MODES:
        raise ConfigError(f"normalization_mode must be one of {MODES}")
    I_hat = np.asarray(I_hat, dtype=np.float64)
    P_hat = np.asarray(P_hat, dtype=np.float64)
    raw = I_hat @ P_hat.T
    if mode == MODE_COSINE:
        ni = _row_norms(I_hat, "transformed input")
        np_ = _row_norms(P_hat, "transformed paraphrase")
    else:
        if batch is None:
            raise ConfigError("paper_literal normalization needs the raw batch")
        ni = _row_norms(batch.inputs, "input")
        np_ = _row_norms(batch.paraphrases, "paraphrase")
    N = 1.0 / np.outer(ni, np_)
    return SimilarityMatrix(S=N * raw, raw=raw, N=N)


def _loss_from_matrix(S: np.ndarray, lam: float) -> LossBreakdown:
    n = S.shape[0]
    diag = np.diagonal(S)
    diag_loss = float(np.abs(diag - 1.0).sum() / n)
    if n > 1:
        nondiag_loss = float((np.abs(S).sum() - np.abs(diag).sum()) / (n * (n - 1)))
    else:
        nondiag_loss = 0.0
    total = lam * nondiag_loss + (1.0 - lam) * diag_loss
    return LossBreakdown(diag_loss, nondiag_loss, total, lam)


def compute_loss(S, lam: float) -> LossBreakdown:
    """Mean |S_kk - 1| over the diagonal, mean |S_jk| over off-diagonal entries.

    The off-diagonal mean divides by n(n-1), the count of off-diagonal
    entries; it is 0 for n = 1. Accepts a SimilarityMatrix or a square array.
    """
    if not 0.0 <= lam <= 1.0:
        raise ConfigError("lambda must lie in [0, 1]")
    M = S.S if isinstance(S, SimilarityMatrix) else np.asarray(S, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ConfigError("similarity matrix must be square and non-empty")
    return _loss_from_matrix(M, lam)


def loss_gradient(W, batch: ParaphraseBatch, lam: float,
                  mode: str = MODE_COSINE):
    """Loss breakdown and the analytic gradient of the total loss w.r.t. W.

    The absolute values use subgradient 0 at their kinks, so a batch whose
    similarity matrix is exactly the identity yields a zero gradient.
    """
    if not 0.0 <= lam <= 1.0:
        raise ConfigError("lambda must lie in [0, 1]")
    if mode not in MODES:
        raise ConfigError(f"normalization_mode must be one of {MODES}")
    Wm = _as_matrix(W)
    I, P = batch.inputs, batch.paraphrases
    if I.shape[1] != Wm.shape[0]:
        raise ConfigError("batch dimension does not match matrix dimension")

    A = I @ Wm.T
    B = P @ Wm.T
    if mode == MODE_COSINE:
        na = _row_norms(A, "transformed input")
        nb = _row_norms(B, "transformed paraphrase")
    else:
        na = _row_norms(I, "input")
        nb = _row_norms(P, "paraphrase")

    shat = np.ascontiguousarray(A @ B.T)
    S, U, row_us, col_us, diag_loss, nondiag_loss = similarity_core(
        shat, np.ascontiguousarray(1.0 / na), np.ascontiguousarray(1.0 / nb), lam)

    if mode == MODE_COSINE:
        An = A / na[:, None]
        Bn = B / nb[:, None]
        dA = (U @ Bn - row_us[:, None] * An) / na[:, None]
        dB = (U.T @ An - col_us[:, None] * Bn) / nb[:, None]
        G = dA.T @ I + dB.T @ P
    else:
        UN = U * np.outer(1.0 / na, 1.0 / nb)
        dA = UN @ B
        dB = UN.T @ A
        G = dA.T @ I + dB.T @ P

    total = lam * nondiag_loss + (1.0 - lam) * diag_loss
    return LossBreakdown(diag_loss, nondiag_loss, total, lam), G


def rmsprop_step(W, G, state, learning_rate: float, decay: float, epsilon: float):
    """state <- decay*state + (1-decay)*G^2; W <- W - lr*G/sqrt(state+eps).

    Updates W and state in place and returns them.
    """
    for name, value in (("learning_rate", learning_rate), ("decay", decay),
                        ("epsilon", epsilon)):
        if value <= 0:
            raise ConfigError(f"{name} must be positive")
    Wm = W.W if isinstance(W, TransitionMatrix) else W
    if Wm.shape != G.shape or Wm.shape != state.shape:
        raise ConfigError("W, gradient, and state shapes must match")
    rmsprop_update(Wm, np.ascontiguousarray(G, dtype=np.float64), state,
                   learning_rate, decay, epsilon)
    return W, state


def _infer_dimension(sets, embedder) -> int:
    for s in sets:
        for sent_a, _, _ in s.pairs:
            try:
                return int(embedder(sent_a).values.shape[0])
            except Exception:
                continue
    raise EmptyCorpusError("could not embed any training sentence")


def train(config: TrainerConfig, sets, embedder):
    """Run the inner/outer-epoch loop and return (TransitionMatrix, log).

    One inner epoch is one pass over one sub-training set; one outer epoch
    visits all sets in index order. ``data_fraction`` < 1 subsamples images
    (not pairs) before training. Sets left without usable pairs are skipped
    and absent from the log.
    """
    config.validate()
    embedder = CachingEmbedder(embedder)
    if config.data_fraction < 1.0:
        sets = subsample_images(sets, config.data_fraction,
                                [config.seed, _STREAM_FRACTION])

    d = _infer_dimension(sets, embedder)
    tm = xavier_init(d, config.seed)
    state = np.zeros((d, d), dtype=np.float64)

    logs: list[InnerEpochLog] = []
    inner = 0
    for outer in range(config.outer_epochs):
        for sub_set in sets:
            if not sub_set.pairs:
                log.debug("outer %d: set %d empty, skipped", outer, sub_set.index)
                continue
            diag_sum = nondiag_sum = total_sum = 0.0
            n_batches = 0
            try:
                batch_iter = batches(sub_set, embedder, config.batch_size,
                                     seed=[config.seed, _STREAM_SHUFFLE,
                                           outer, sub_set.index])
            except EmptyCorpusError:
                log.warning("outer %d: set %d has no usable pairs, skipped",
                            outer, sub_set.index)
                continue
            for batch in batch_iter:
                breakdown, G = loss_gradient(tm.W, batch, config.lam,
                                             config.normalization_mode)
                rmsprop_update(tm.W, G, state, config.learning_rate,
                               config.rms_decay, config.rms_epsilon)
                diag_sum += breakdown.diagonal_loss
                nondiag_sum += breakdown.non_diagonal_loss
                total_sum += breakdown.total
                n_batches += 1
            logs.append(InnerEpochLog(
                outer=outer, inner=inner, set_index=sub_set.index,
                batches=n_batches, diag_loss=diag_sum / n_batches,
                nondiag_loss=nondiag_sum / n_batches,
                total=total_sum / n_batches))
            inner += 1

    if not logs:
        raise EmptyCorpusError("training saw no usable mini-batch")
    tm.meta.update({
        "lambda": config.lam,
        "seed": config.seed,
        "mode": config.normalization_mode,
        "outer_epochs": config.outer_epochs,
        "inner_epochs": inner,
        "batch_size": config.batch_size,
        "learning_rate": config.learning_rate,
        "rms_decay": config.rms_decay,
        "rms_epsilon": config.rms_epsilon,
        "data_fraction": config.data_fraction,
    })
    return tm, logs


def refine_vector(W, v) -> np.ndarray:
    """Return W applied to a sentence vector (accepts SentenceVector or array)."""
    Wm = _as_matrix(W)
    values = getattr(v, "values", v)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (Wm.shape[0],):
        raise ConfigError(
            f"vector length {values.shape} does not match matrix dimension {Wm.shape[0]}")
    return Wm @ values


def coherence_conditions_report(S) -> dict:
    """Worst-case deviations from the two coherence conditions.

    condition1_gap = max_k |S_kk - 1| (paraphrase similarity short of 1),
    condition2_mass = max over j != k of |S_jk| (residual non-paraphrase
    similarity; 0 for a 1 x 1 matrix).
    """
    M = S.S if isinstance(S, SimilarityMatrix) else np.asarray(S, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError("similarity matrix must be square")
    n = M.shape[0]
    gap = float(np.max(np.abs(np.diagonal(M) - 1.0)))
    if n > 1:
        off = np.abs(M.copy())
        np.fill_diagonal(off, 0.0)
        mass = float(off.max())
    else:
        mass = 0.0
    return {"condition1_gap": gap, "condition2_mass": mass}


def save_matrix(tm: TransitionMatrix, path) -> None:
    """Single-file container: one JSON header line, then raw row-major float64."""
    header = {
        "format": MATRIX_FORMAT,
        "version": MATRIX_VERSION,
        "d": tm.d,
        "dtype": "<f8",
        "order": "C",
        "meta": tm.meta,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(tm.W, dtype="<f8").tobytes(order="C"))


def load_matrix(path) -> TransitionMatrix:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise ParseError("not a svtrans matrix file (bad header)", path=path) from None
    if header.get("format") != MATRIX_FORMAT:
        raise ParseError("not a svtrans matrix file (wrong format tag)", path=path)
    d = int(header["d"])
    expected = d * d * 8
    if len(payload) != expected:
        raise ParseError(
            f"matrix payload has {len(payload)} bytes, expected {expected}",
            path=path)
    W = np.frombuffer(payload, dtype="<f8").reshape(d, d).copy()
    return TransitionMatrix(W=W, meta=dict(header.get("meta", {})))


def matrix_to_tsv(tm: TransitionMatrix, path) -> None:
    """Row-per-line TSV export for diffing."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in tm.W:
            fh.write("\t".join(format(x, ".17g") for x in row))
            fh.write("\n")


def write_training_log(logs, path, header: Optional[dict] = None) -> None:
    """Line-delimited TSV: outer, inner, set_index, batches, losses."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for key in sorted(header):
                fh.write(f"# {key}={header[key]}\n")
        fh.write("outer\tinner\tset_index\tbatches\tdiag_loss\tnondiag_loss\ttotal\n")
        for rec in logs:
            fh.write(f"{rec.outer}\t{rec.inner}\t{rec.set_index}\t{rec.batches}\t"
                     f"{rec.diag_loss:.17g}\t{rec.nondiag_loss:.17g}\t"
                     f"{rec.total:.17g}\n")


def config_as_dict(config: TrainerConfig) -> dict:
    return asdict(config)
