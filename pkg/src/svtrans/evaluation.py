"""Sentence-pair similarity scoring against gold scores.

Predicted similarity is the cosine of the two (optionally refined) sentence
vectors; agreement with the gold scores is reported as Pearson's r and
Spearman's rho. Undefined correlations (constant series, fewer than two
scored pairs) raise instead of smuggling NaN into reports.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .embeddings import WordVectorTable, embed_sentence
from .errors import (AllTokensUnknown, ConfigError, ConstantSeries,
                     DegenerateVector, EvaluationError, ParseError)
from .trainer import TransitionMatrix, refine_vector

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StsPair:
    sentence_a: str
    sentence_b: str
    gold: float


@dataclass
class StsDataset:
    """A named list of StsPair plus the count of pairs dropped at load time."""

    name: str
    pairs: list[StsPair]
    n_dropped: int = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


@dataclass(frozen=True)
class EvalReport:
    dataset: str
    n_scored: int
    n_skipped: int
    pearson_r: float
    spearman_rho: float


@dataclass(frozen=True)
class ComparisonRow:
    """Baseline (average-only) vs refined correlations for one dataset."""

    dataset: str
    n_scored: int
    n_skipped: int
    baseline_pearson: float
    baseline_spearman: float
    refined_pearson: float
    refined_spearman: float

    @property
    def delta_pearson(self) -> float:
        return self.refined_pearson - self.baseline_pearson

    @property
    def delta_spearman(self) -> float:
        return self.refined_spearman - self.baseline_spearman


def _parse_gold(text: str, path, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"unparseable gold score {text!r}",
                         path=path, line=lineno) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite gold score {text!r}", path=path, line=lineno)
    return value


def load_sts_dataset(input_path, gold_path=None,
                     name: Optional[str] = None) -> StsDataset:
    """Load `gold TAB sent_a TAB sent_b` lines, or a pair file plus gold file.

    In the two-file form (SemEval layout) the files are aligned by line
    number and must have equal line counts; a blank gold line drops the
    pair with a counter. Pairs with an empty sentence are dropped too.
    """
    if name is None:
        name = os.path.splitext(os.path.basename(str(input_path)))[0]
    pairs: list[StsPair] = []
    dropped = 0

    def add(gold_text, sent_a, sent_b, lineno):
        nonlocal dropped
        sent_a, sent_b = sent_a.strip(), sent_b.strip()
        if not gold_text.strip():
            dropped += 1
            return
        if not sent_a or not sent_b:
            dropped += 1
            return
        pairs.append(StsPair(sent_a, sent_b, _parse_gold(gold_text, input_path, lineno)))

    if gold_path is None:
        with open(input_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t", 2)
                if len(parts) != 3:
                    raise ParseError("expected 'gold TAB sent_a TAB sent_b'",
                                     path=input_path, line=lineno)
                add(parts[0], parts[1], parts[2], lineno)
    else:
        with open(input_path, "r", encoding="utf-8") as fh:
            pair_lines = fh.read().splitlines()
        with open(gold_path, "r", encoding="utf-8") as fh:
            gold_lines = fh.read().splitlines()
        if len(pair_lines) != len(gold_lines):
            raise ParseError(
                f"pair file has {len(pair_lines)} lines but gold file has "
                f"{len(gold_lines)}", path=gold_path)
        for lineno, (pline, gline) in enumerate(zip(pair_lines, gold_lines), start=1):
            if not pline.strip() and not gline.strip():
                continue
            parts = pline.split("\t", 1)
            if len(parts) != 2:
                raise ParseError("expected 'sent_a TAB sent_b'",
                                 path=input_path, line=lineno)
            add(gline, parts[0], parts[1], lineno)

    if dropped:
        log.info("%s: dropped %d pair(s) at load (blank gold or empty sentence)",
                 name, dropped)
    return StsDataset(name=name, pairs=pairs, n_dropped=dropped)


def cosine(u, v) -> float:
    """Cosine similarity; both vectors must have strictly positive norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if not (nu > 0.0 and np.isfinite(nu)):
        raise DegenerateVector("first vector has zero or non-finite norm")
    if not (nv > 0.0 and np.isfinite(nv)):
        raise DegenerateVector("second vector has zero or non-finite norm")
    return float(np.dot(u, v) / (nu * nv))


def _as_series(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ConfigError("correlation inputs must be 1-dimensional")
    if x.shape[0] != y.shape[0]:
        raise ConfigError("correlation inputs must have equal length")
    if x.shape[0] < 2:
        raise EvaluationError("correlation needs at least 2 observations")
    return x, y


def pearson(x, y) -> float:
    """Sample Pearson correlation; raises ConstantSeries on zero variance."""
    x, y = _as_series(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0:
        raise ConstantSeries("first series is constant")
    if syy == 0.0:
        raise ConstantSeries("second series is constant")
    r = float(xc @ yc) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def ranks(x) -> np.ndarray:
    """Fractional ranks (1-based); tied values share the average of their ranks."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    out = np.empty(x.shape[0], dtype=np.float64)
    i = 0
    while i < x.shape[0]:
        j = i
        while j + 1 < x.shape[0] and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        out[order[i:j + 1]] = avg
        i = j + 1
    return out


def spearman(x, y) -> float:
    """Pearson correlation of fractional ranks, with average ranks for ties."""
    x, y = _as_series(x, y)
    return pearson(ranks(x), ranks(y))


def _score_pairs(table: WordVectorTable, W: Optional[TransitionMatrix],
                 dataset: StsDataset):
    preds, golds = [], []
    skipped = 0
    for pair in dataset.pairs:
        try:
            va = embed_sentence(table, pair.sentence_a).values
            vb = embed_sentence(table, pair.sentence_b).values
            if W is not None:
                va = refine_vector(W, va)
                vb = refine_vector(W, vb)
            preds.append(cosine(va, vb))
        except (AllTokensUnknown, DegenerateVector):
            skipped += 1
            continue
        golds.append(pair.gold)
    return preds, golds, skipped


def evaluate(table: WordVectorTable, W: Optional[TransitionMatrix],
             dataset: StsDataset) -> EvalReport:
    """Correlate predicted cosine similarities against the gold scores.

    Pairs that cannot be embedded (all tokens unknown on either side, or a
    degenerate vector) are skipped and counted, not scored as 0.
    """
    preds, golds, skipped = _score_pairs(table, W, dataset)
    if len(preds) < 2:
        raise EvaluationError(
            f"{dataset.name}: only {len(preds)} scored pair(s), need at least 2")
    return EvalReport(dataset=dataset.name, n_scored=len(preds), n_skipped=skipped,
                      pearson_r=pearson(preds, golds),
                      spearman_rho=spearman(preds, golds))


def compare(table: WordVectorTable, W: TransitionMatrix,
            datasets) -> list[ComparisonRow]:
    """Baseline vs refined correlations per dataset."""
    if W is None:
        raise ConfigError("compare requires a trained transition matrix")
    datasets = list(datasets)
    if not datasets:
        raise ConfigError("compare requires at least one dataset")
    rows = []
    for ds in datasets:
        base = evaluate(table, None, ds)
        refined = evaluate(table, W, ds)
        rows.append(ComparisonRow(
            dataset=ds.name, n_scored=refined.n_scored, n_skipped=refined.n_skipped,
            baseline_pearson=base.pearson_r, baseline_spearman=base.spearman_rho,
            refined_pearson=refined.pearson_r, refined_spearman=refined.spearman_rho))
    return rows


def report_tsv(reports) -> str:
    lines = ["dataset\tn\tskipped\tpearson\tspearman"]
    for r in reports:
        lines.append(f"{r.dataset}\t{r.n_scored}\t{r.n_skipped}\t"
                     f"{r.pearson_r:.6f}\t{r.spearman_rho:.6f}")
    return "\n".join(lines) + "\n"


def _mean_row(rows) -> ComparisonRow:
    def mean(attr):
        return float(np.mean([getattr(r, attr) for r in rows]))

    return ComparisonRow(
        dataset="MEAN", n_scored=sum(r.n_scored for r in rows),
        n_skipped=sum(r.n_skipped for r in rows),
        baseline_pearson=mean("baseline_pearson"),
        baseline_spearman=mean("baseline_spearman"),
        refined_pearson=mean("refined_pearson"),
        refined_spearman=mean("refined_spearman"))


def comparison_tsv(rows) -> str:
    """TSV rendering; an unweighted MEAN row is appended for 2+ datasets."""
    rows = list(rows)
    if len(rows) > 1:
        rows = rows + [_mean_row(rows)]
    lines = ["dataset\tn\tskipped\tbase_pearson\tbase_spearman\t"
             "refined_pearson\trefined_spearman\tdelta_pearson\tdelta_spearman"]
    for r in rows:
        lines.append(f"{r.dataset}\t{r.n_scored}\t{r.n_skipped}\t"
                     f"{r.baseline_pearson:.6f}\t{r.baseline_spearman:.6f}\t"
                     f"{r.refined_pearson:.6f}\t{r.refined_spearman:.6f}\t"
                     f"{r.delta_pearson:.6f}\t{r.delta_spearman:.6f}")
    return "\n".join(lines) + "\n"


def comparison_text(rows) -> str:
    """Aligned human-readable rendering of the comparison table."""
    rows = list(rows)
    if len(rows) > 1:
        rows = rows + [_mean_row(rows)]
    header = ("dataset", "n", "skip", "base_r", "base_rho",
              "tm_r", "tm_rho", "d_r", "d_rho")
    table = [header]
    for r in rows:
        table.append((r.dataset, str(r.n_scored), str(r.n_skipped),
                      f"{r.baseline_pearson:.4f}", f"{r.baseline_spearman:.4f}",
                      f"{r.refined_pearson:.4f}", f"{r.refined_spearman:.4f}",
                      f"{r.delta_pearson:+.4f}", f"{r.delta_spearman:+.4f}"))
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    out = []
    for row in table:
        out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(out) + "\n"
