"""Caption-corpus ingestion: tokenizing, vocabulary, ordered pairs, embeddings.

Corpus files are JSON Lines, one object per caption group:
``{"id": "...", "captions": ["...", ...]}``. All captions of one group are
treated as mutual paraphrases. Pretrained embeddings are read from the
plain-text word-vector format: one token per line followed by its
space-separated float components.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

PAD, SOS, EOS, UNK = 0, 1, 2, 3
RESERVED_TOKENS = ("<pad>", "<sos>", "<eos>", "<unk>")

# runs of word characters, or any single non-space punctuation character
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace, with punctuation as standalone tokens."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class ParaphraseGroup:
    """One caption group: at least two mutually distinct token sequences."""

    group_id: str
    sentences: list[list[str]]


@dataclass
class SentencePair:
    """An ordered (source, paraphrase-target) pair of id sequences.

    Both sequences are non-empty, end with EOS and contain no PAD.
    """

    source: list[int]
    target: list[int]


class Vocab:
    """Dense token <-> id bijection with reserved ids 0..3."""

    def __init__(self, tokens: list[str]) -> None:
        if tuple(tokens[:4]) != RESERVED_TOKENS:
            tokens = list(RESERVED_TOKENS) + [t for t in tokens if t not in RESERVED_TOKENS]
        self.tokens: tuple[str, ...] = tuple(tokens)
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        if len(self.token_to_id) != len(self.tokens):
            raise DataError("vocab: duplicate tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)

    def encode(self, tokens: list[str], max_len: int | None = None) -> list[int]:
        """Map tokens to ids, truncate to ``max_len`` tokens, append EOS."""
        if max_len is not None:
            tokens = tokens[:max_len]
        return [self.id(t) for t in tokens] + [EOS]

    def decode(self, ids: list[int]) -> list[str]:
        """Inverse of encode: strips a trailing EOS and any padding."""
        out = []
        for i in ids:
            if i == EOS or i == PAD:
                break
            out.append(self.tokens[i])
        return out

    def oov(self, tokens: list[str]) -> list[str]:
        return [t for t in tokens if t not in self.token_to_id]

    def sha256(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()


@dataclass
class EmbeddingTable:
    """Token-embedding matrix aligned to Vocab ids; the PAD row is all-zero."""

    dim: int
    rows: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2 or self.rows.shape[1] != self.dim:
            raise DataError(f"embedding table: rows have shape {self.rows.shape}, dim {self.dim}")


def load_corpus(path: str) -> list[ParaphraseGroup]:
    """Parse a JSONL caption corpus into tokenized paraphrase groups.

    Captions that tokenize identically within one group are dropped, and a
    group is skipped (with a warning) if fewer than two distinct sentences
    remain. Raises DataError, citing the line number, on malformed input.
    """
    groups: list[ParaphraseGroup] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "id" not in obj or "captions" not in obj:
                raise DataError(f"{path}:{lineno}: expected object with 'id' and 'captions'")
            captions = obj["captions"]
            if not isinstance(captions, list) or not all(isinstance(c, str) for c in captions):
                raise DataError(f"{path}:{lineno}: 'captions' must be a list of strings")
            seen: set[tuple[str, ...]] = set()
            sentences: list[list[str]] = []
            for cap in captions:
                toks = tokenize(cap)
                if not toks:
                    continue
                key = tuple(toks)
                if key in seen:
                    continue
                seen.add(key)
                sentences.append(toks)
            if len(sentences) < 2:
                logger.warning(
                    "%s:%d: group %r has fewer than 2 distinct sentences, skipping",
                    path, lineno, obj["id"],
                )
                continue
            groups.append(ParaphraseGroup(group_id=str(obj["id"]), sentences=sentences))
    if not groups:
        raise DataError(f"{path}: no groups")
    return groups


def make_pairs(group: ParaphraseGroup, vocab: Vocab, max_len: int = 30) -> list[SentencePair]:
    """All n*(n-1) ordered pairs of a group, source-major by sentence index."""
    n = len(group.sentences)
    if n < 2:
        raise DataError(f"group {group.group_id!r}: need at least 2 sentences, got {n}")
    encoded = [vocab.encode(s, max_len=max_len) for s in group.sentences]
    pairs = []
    for i in range(n):
        for j in range(n):
            if i != j:
                pairs.append(SentencePair(source=list(encoded[i]), target=list(encoded[j])))
    return pairs


def build_vocab(groups: list[ParaphraseGroup]) -> Vocab:
    """All distinct corpus tokens in first-occurrence order, after the reserved ids."""
    seen: dict[str, None] = {}
    for group in groups:
        for sentence in group.sentences:
            for tok in sentence:
                if tok not in seen:
                    seen[tok] = None
    return Vocab(list(RESERVED_TOKENS) + list(seen))


def _fallback_rows(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    return rng.uniform(-0.1, 0.1, size=(count, dim))


def random_embeddings(vocab: Vocab, dim: int, seed: int) -> EmbeddingTable:
    """A fully random table drawn from the Uniform(-0.1, 0.1) fallback rule."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rows = _fallback_rows(rng, len(vocab), dim)
    rows[PAD] = 0.0
    return EmbeddingTable(dim=dim, rows=rows)


def load_pretrained_embeddings(
    path: str, vocab: Vocab, dim: int, seed: int
) -> tuple[EmbeddingTable, int]:
    """Extract vocabulary rows from a pretrained word-vector text file.

    Rows for tokens present in the file are copied verbatim; tokens absent
    from the file fall back to seeded Uniform(-0.1, 0.1) rows; the PAD row
    is zero regardless of file content. Returns the table and the number
    of matched tokens.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rows = _fallback_rows(rng, len(vocab), dim)
    matched = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                raise DataError(f"{path}:{lineno}: expected token and {dim} floats")
            token, values = parts[0], parts[1:]
            if len(values) != dim:
                raise DataError(
                    f"{path}:{lineno}: expected {dim} floats, got {len(values)}"
                )
            if token not in vocab.token_to_id:
                continue
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad float: {exc}") from exc
            rows[vocab.token_to_id[token]] = vec
            matched += 1
    rows[PAD] = 0.0
    return EmbeddingTable(dim=dim, rows=rows), matched


def corpus_stats(groups: list[ParaphraseGroup]) -> dict[str, int]:
    """Group / sentence / ordered-pair / vocabulary counts for a corpus."""
    sentences = 0
    pairs = 0
    for g in groups:
        n = len(g.sentences)
        sentences += n
        pairs += n * (n - 1)
    vocab = build_vocab(groups)
    return {
        "groups": len(groups),
        "sentences": sentences,
        "pairs": pairs,
        "vocab": len(vocab),
    }
