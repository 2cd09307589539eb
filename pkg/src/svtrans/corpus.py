"""Caption-corpus ingestion and sub-training-set construction.

Captions of one image are treated as paraphrases of each other. From the
first five captions of each image, the ten unordered caption pairs are
distributed one per sub-training set, so that each set holds at most one
pair per image: within any mini-batch drawn from one set, rows from
different images are guaranteed non-paraphrases.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import AllTokensUnknown, ConfigError, EmptyCorpusError, ParseError

log = logging.getLogger(__name__)

NUM_SETS = 10
DEFAULT_CAPTION_CAP = 5


@dataclass
class CaptionGroup:
    """All captions attached to one image, deduplicated, in file order."""

    image_id: object
    captions: list[str]


@dataclass
class SubTrainingSet:
    """Pairs (sentence_a, sentence_b, image_id) with at most one pair per image."""

    index: int
    pairs: list[tuple[str, str, object]] = field(default_factory=list)


@dataclass
class ParaphraseBatch:
    """Aligned embedded pairs: row k of ``inputs`` paraphrases row k of ``paraphrases``."""

    inputs: np.ndarray
    paraphrases: np.ndarray
    image_ids: list

    @property
    def n(self) -> int:
        return int(self.inputs.shape[0])


@dataclass
class EmbeddedPairs:
    """All usable pairs of one sub-training set, embedded and stacked."""

    inputs: np.ndarray
    paraphrases: np.ndarray
    image_ids: list
    n_dropped_oov: int
    n_dropped_degenerate: int

    @property
    def n(self) -> int:
        return int(self.inputs.shape[0])


def _normalize_caption(text: str) -> str:
    return " ".join(text.split())


def _looks_like_json(path) -> bool:
    with open(path, "rb") as fh:
        head = fh.read(64).lstrip()
    return head.startswith(b"{") or head.startswith(b"[")


def load_caption_corpus(path) -> list[CaptionGroup]:
    """Group captions by image id, preserving first-appearance order.

    Accepts the MSCOCO captions JSON (an ``annotations`` array of objects
    with ``image_id`` and ``caption``) or a TSV fallback with lines
    ``image_id TAB caption``. Duplicate caption texts within a group are
    dropped after whitespace normalization.
    """
    groups: dict[object, CaptionGroup] = {}
    seen: dict[object, set[str]] = {}

    def add(image_id, caption):
        text = _normalize_caption(caption)
        if not text:
            return
        if image_id not in groups:
            groups[image_id] = CaptionGroup(image_id=image_id, captions=[])
            seen[image_id] = set()
        if text in seen[image_id]:
            return
        seen[image_id].add(text)
        groups[image_id].captions.append(text)

    if _looks_like_json(path):
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}", path=path) from None
        annotations = doc.get("annotations") if isinstance(doc, dict) else doc
        if not isinstance(annotations, list):
            raise ParseError("expected an 'annotations' array", path=path)
        for i, ann in enumerate(annotations):
            if not isinstance(ann, dict) or "image_id" not in ann or "caption" not in ann:
                raise ParseError(f"annotation {i} lacks image_id/caption", path=path)
            add(ann["image_id"], str(ann["caption"]))
    else:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t", 1)
                if len(parts) != 2:
                    raise ParseError("expected 'image_id TAB caption'",
                                     path=path, line=lineno)
                add(parts[0], parts[1])

    if not groups:
        raise EmptyCorpusError(f"no caption groups found in {path}")
    return list(groups.values())


def enumerate_pairs(group: CaptionGroup, cap: int) -> list[tuple[str, str]]:
    """All unordered caption pairs over the first ``min(cap, len)`` captions.

    Pairs come out in the fixed index order (0,1), (0,2), ..., (m-2,m-1).
    A group with fewer than two captions yields an empty list (the skipped-
    group signal; callers count these).
    """
    if cap < 2:
        raise ConfigError("caption cap must be at least 2")
    caps = group.captions[:cap]
    if len(caps) < 2:
        return []
    return [(caps[i], caps[j]) for i, j in itertools.combinations(range(len(caps)), 2)]


def build_sub_training_sets(groups, *, cap: int = DEFAULT_CAPTION_CAP, seed: int = 0,
                            strict_five: bool = False,
                            num_sets: int = NUM_SETS) -> list[SubTrainingSet]:
    """Distribute each group's pairs across the sub-training sets.

    Pair with pair-index k goes to set k, so a five-caption image places its
    ten pairs one per set. Groups with 2-4 captions fill only the lowest-
    indexed sets (dropped entirely under ``strict_five``). Each set is then
    shuffled with its own seed-derived RNG.
    """
    sets = [SubTrainingSet(index=i) for i in range(num_sets)]
    n_used = 0
    n_skipped = 0
    n_overflow_pairs = 0
    for group in groups:
        if strict_five and len(group.captions) < 5:
            n_skipped += 1
            continue
        pairs = enumerate_pairs(group, cap)
        if not pairs:
            n_skipped += 1
            continue
        n_used += 1
        for k, (a, b) in enumerate(pairs):
            if k >= num_sets:
                n_overflow_pairs += 1
                continue
            sets[k].pairs.append((a, b, group.image_id))
    if n_used == 0:
        raise EmptyCorpusError("no caption group with at least 2 usable captions")
    if n_skipped:
        log.info("skipped %d group(s) with too few captions", n_skipped)
    if n_overflow_pairs:
        log.info("dropped %d pair(s) beyond the %d-set layout", n_overflow_pairs, num_sets)
    for s in sets:
        np.random.default_rng([seed, s.index]).shuffle(s.pairs)
    return sets


def embed_pairs(sub_set: SubTrainingSet, embedder) -> EmbeddedPairs:
    """Embed every pair of a set, dropping unusable ones with counters.

    A pair is dropped when either side has no in-vocabulary token or embeds
    to a zero / non-finite vector (which would break cosine normalization).
    """
    inputs, paras, ids = [], [], []
    n_oov = 0
    n_degenerate = 0
    for sent_a, sent_b, image_id in sub_set.pairs:
        try:
            va = embedder(sent_a).values
            vb = embedder(sent_b).values
        except AllTokensUnknown:
            n_oov += 1
            continue
        if (not np.all(np.isfinite(va)) or not np.all(np.isfinite(vb))
                or not np.any(va) or not np.any(vb)):
            n_degenerate += 1
            continue
        inputs.append(va)
        paras.append(vb)
        ids.append(image_id)
    if n_oov or n_degenerate:
        log.debug("set %d: dropped %d OOV-only and %d degenerate pair(s)",
                  sub_set.index, n_oov, n_degenerate)
    dim = inputs[0].shape[0] if inputs else 0
    return EmbeddedPairs(
        inputs=np.array(inputs, dtype=np.float64).reshape(len(inputs), dim),
        paraphrases=np.array(paras, dtype=np.float64).reshape(len(paras), dim),
        image_ids=ids,
        n_dropped_oov=n_oov,
        n_dropped_degenerate=n_degenerate,
    )


def batches(sub_set: SubTrainingSet, embedder, batch_size: int, seed):
    """Yield shuffled ParaphraseBatch objects covering the whole set.

    The final short batch is yielded, not dropped. The sequence is a pure
    function of (set contents, seed, batch_size); ``seed`` is anything
    ``numpy.random.default_rng`` accepts.
    """
    if batch_size < 1:
        raise ConfigError("batch_size must be a positive integer")
    emb = embed_pairs(sub_set, embedder)
    if emb.n == 0:
        raise EmptyCorpusError(
            f"sub-training set {sub_set.index} has no usable pairs after filtering")
    order = np.random.default_rng(seed).permutation(emb.n)

    def _generate():
        for start in range(0, emb.n, batch_size):
            idx = order[start:start + batch_size]
            yield ParaphraseBatch(
                inputs=np.ascontiguousarray(emb.inputs[idx]),
                paraphrases=np.ascontiguousarray(emb.paraphrases[idx]),
                image_ids=[emb.image_ids[i] for i in idx],
            )

    return _generate()


def subsample_images(sets, fraction: float, seed) -> list[SubTrainingSet]:
    """Keep floor(fraction * N) images, filtering every set to that subset.

    Because pair-index assignment is independent per image, filtering built
    sets to an image subset equals building sets from the subset. Image
    order for selection is first-appearance order across sets 0..9.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigError("data fraction must lie in (0, 1]")
    if fraction == 1.0:
        return sets
    ordered_ids = []
    known = set()
    for s in sets:
        for _, _, image_id in s.pairs:
            if image_id not in known:
                known.add(image_id)
                ordered_ids.append(image_id)
    keep_count = int(fraction * len(ordered_ids))
    if keep_count < 1:
        raise ConfigError(
            f"fraction {fraction} leaves no images out of {len(ordered_ids)}")
    rng = np.random.default_rng(seed)
    keep = set(rng.permutation(len(ordered_ids))[:keep_count].tolist())
    kept_ids = {ordered_ids[i] for i in keep}
    return [
        SubTrainingSet(index=s.index,
                       pairs=[p for p in s.pairs if p[2] in kept_ids])
        for s in sets
    ]


def write_sets_tsv(sets, path) -> None:
    """Serialize sets as ``set_index TAB image_id TAB sent_a TAB sent_b`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in sets:
            for sent_a, sent_b, image_id in s.pairs:
                fh.write(f"{s.index}\t{image_id}\t{sent_a}\t{sent_b}\n")
