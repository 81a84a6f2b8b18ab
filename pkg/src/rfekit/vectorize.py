"""TF-IDF weighted n-gram vectors, the fitted vocabulary, and cosine similarity.

The vocabulary is fitted once over a corpus of token streams and is immutable
afterwards; vectorization and cosine are pure functions, so everything here is
freely parallel across documents.

Weighting: tf is the raw n-gram count in the document, idf is the smoothed
``ln((1 + corpus_size) / (1 + doc_freq)) + 1``, and the resulting vector is
L2-normalized (or exactly zero when no fitted n-gram occurs).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from ._base import ParamsMixin, check_is_fitted

VOCAB_MAGIC = "ngram-vocab"
VOCAB_VERSION = 1


class VocabularyFormatError(ValueError):
    """Serialized vocabulary is malformed or has an unsupported version."""


def ngrams(tokens: list[str], n_range) -> list[str]:
    """All contiguous space-joined n-grams for each n, smallest n first.

    Within one n the document order is kept and duplicates are retained; a
    token stream shorter than n contributes no n-grams for that n.
    """
    out: list[str] = []
    for n in sorted(set(n_range)):
        if n < 1:
            raise ValueError(f"n-gram size must be >= 1, got {n}")
        out.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Fitted n-gram space: dense column indices plus document frequencies."""

    ngram_to_index: dict[str, int]
    doc_freq: tuple[int, ...]
    corpus_size: int
    n_range: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.ngram_to_index)

    def idf(self, index: int) -> float:
        return math.log((1 + self.corpus_size) / (1 + self.doc_freq[index])) + 1.0


def fit_vocab(corpus, n_range) -> Vocabulary:
    """Fit a vocabulary over token streams; indices are lexicographic by n-gram."""
    docs = list(corpus)
    if not docs:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    df: dict[str, int] = {}
    for tokens in docs:
        for gram in set(ngrams(tokens, n_range)):
            df[gram] = df.get(gram, 0) + 1
    ordered = sorted(df)
    return Vocabulary(
        ngram_to_index={g: i for i, g in enumerate(ordered)},
        doc_freq=tuple(df[g] for g in ordered),
        corpus_size=len(docs),
        n_range=tuple(sorted(set(n_range))),
    )


@dataclass(frozen=True)
class SparseVector:
    """Sorted (index, weight) entries over a fixed-dimension space.

    Weights are strictly positive; the all-zero vector has no entries.
    """

    entries: tuple[tuple[int, float], ...]
    dim: int

    def is_zero(self) -> bool:
        return not self.entries

    def norm(self) -> float:
        return math.sqrt(sum(w * w for _, w in self.entries))

    def dot(self, other: "SparseVector") -> float:
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} != {other.dim}")
        small, big = sorted((self, other), key=lambda v: len(v.entries))
        lookup = dict(big.entries)
        return sum(w * lookup[i] for i, w in small.entries if i in lookup)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        for i, w in self.entries:
            dense[i] = w
        return dense


def tfidf_vector(tokens: list[str], vocab: Vocabulary) -> SparseVector:
    """L2-normalized tf-idf vector of ``tokens`` in the fitted space.

    N-grams unseen at fit time are ignored; if none are known the result is
    the zero vector.
    """
    counts: dict[int, int] = {}
    for gram in ngrams(tokens, vocab.n_range):
        index = vocab.ngram_to_index.get(gram)
        if index is not None:
            counts[index] = counts.get(index, 0) + 1
    weighted = [(i, c * vocab.idf(i)) for i, c in sorted(counts.items())]
    norm = math.sqrt(sum(w * w for _, w in weighted))
    if norm == 0.0:
        return SparseVector(entries=(), dim=vocab.size)
    return SparseVector(
        entries=tuple((i, w / norm) for i, w in weighted), dim=vocab.size
    )


def cosine(u: SparseVector, v: SparseVector) -> float:
    """``u.v / (|u||v|)``; zero when either vector is all-zero.

    Clamped into [-1, 1]: Cauchy-Schwarz guarantees the true value never
    exceeds 1, and round-off must not push an identical pair past a strict
    threshold comparison.
    """
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} != {v.dim}")
    nu, nv = u.norm(), v.norm()
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return max(-1.0, min(1.0, u.dot(v) / (nu * nv)))


def save_vocab(vocab: Vocabulary) -> bytes:
    """Serialize to the versioned flat text format (see the format reference).

    Line 1 is ``ngram-vocab 1``, followed by ``corpus_size=``, ``n_range=``
    (comma-separated), ``size=``, then one ``index<TAB>doc_freq<TAB>ngram``
    row per column in index order. UTF-8, LF line endings.
    """
    index_to_ngram = {i: g for g, i in vocab.ngram_to_index.items()}
    lines = [
        f"{VOCAB_MAGIC} {VOCAB_VERSION}",
        f"corpus_size={vocab.corpus_size}",
        "n_range=" + ",".join(str(n) for n in vocab.n_range),
        f"size={vocab.size}",
    ]
    lines.extend(
        f"{i}\t{vocab.doc_freq[i]}\t{index_to_ngram[i]}" for i in range(vocab.size)
    )
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_vocab(data: bytes) -> Vocabulary:
    """Parse :func:`save_vocab` output; raises VocabularyFormatError when malformed."""
    lines = data.decode("utf-8").splitlines()
    if len(lines) < 4:
        raise VocabularyFormatError("vocabulary file too short")
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != VOCAB_MAGIC:
        raise VocabularyFormatError(f"bad magic line {lines[0]!r}")
    if magic[1] != str(VOCAB_VERSION):
        raise VocabularyFormatError(f"unsupported vocabulary version {magic[1]!r}")
    try:
        corpus_size = int(_header_value(lines[1], "corpus_size"))
        n_range = tuple(
            int(n) for n in _header_value(lines[2], "n_range").split(",") if n
        )
        size = int(_header_value(lines[3], "size"))
    except ValueError as exc:
        raise VocabularyFormatError(str(exc)) from None
    rows = lines[4:]
    if len(rows) != size:
        raise VocabularyFormatError(f"expected {size} rows, found {len(rows)}")
    ngram_to_index: dict[str, int] = {}
    doc_freq = []
    for expected, row in enumerate(rows):
        parts = row.split("\t", 2)
        if len(parts) != 3:
            raise VocabularyFormatError(f"bad row {row!r}")
        try:
            index, freq, gram = int(parts[0]), int(parts[1]), parts[2]
        except ValueError:
            raise VocabularyFormatError(f"bad row {row!r}") from None
        if index != expected or freq < 1 or gram in ngram_to_index:
            raise VocabularyFormatError(f"inconsistent row {row!r}")
        ngram_to_index[gram] = index
        doc_freq.append(freq)
    if corpus_size < 1:
        raise VocabularyFormatError("corpus_size must be >= 1")
    return Vocabulary(ngram_to_index, tuple(doc_freq), corpus_size, n_range)


def vocab_sha256(vocab: Vocabulary) -> str:
    """Content hash of the canonical serialization; recorded by trained models."""
    return hashlib.sha256(save_vocab(vocab)).hexdigest()


def _header_value(line: str, key: str) -> str:
    prefix = key + "="
    if not line.startswith(prefix):
        raise VocabularyFormatError(f"expected {prefix!r} header, found {line!r}")
    return line[len(prefix) :]


class NgramTfidfVectorizer(ParamsMixin):
    """Estimator facade over :func:`fit_vocab` and :func:`tfidf_vector`.

    fit() takes a list of token streams (not raw strings; tokenization policy
    belongs to the caller) and freezes the vocabulary; transform() maps token
    streams into the fitted space.
    """

    def __init__(self, n_range=(1, 2, 3)):
        self.n_range = n_range

    def fit(self, token_docs, y=None):
        self.vocabulary_ = fit_vocab(token_docs, self.n_range)
        return self

    def transform(self, token_docs) -> list[SparseVector]:
        check_is_fitted(self, "vocabulary_")
        return [tfidf_vector(tokens, self.vocabulary_) for tokens in token_docs]

    def fit_transform(self, token_docs, y=None) -> list[SparseVector]:
        return self.fit(token_docs).transform(token_docs)


def stack_dense(vectors: list[SparseVector]) -> np.ndarray:
    """Stack sparse vectors into a (n, dim) dense array for the linear head."""
    if not vectors:
        raise ValueError("no vectors to stack")
    dims = {v.dim for v in vectors}
    if len(dims) != 1:
        raise ValueError(f"mixed dimensions {sorted(dims)}")
    out = np.zeros((len(vectors), dims.pop()))
    for row, vec in enumerate(vectors):
        for i, w in vec.entries:
            out[row, i] = w
    return out
