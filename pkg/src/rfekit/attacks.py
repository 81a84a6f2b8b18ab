"""Detect RFE attack types by sentence similarity against an example bank.

The bank is a labeled set of historical sentences, one attack type per
sentence. Detection vectorizes both the bank and the incoming RFE's sentences
as TF-IDF weighted 1/2/3-grams *in the bank's space* (so a document's own
statistics never influence its result), computes the full pairwise cosine
matrix, and flags an attack whenever any pair strictly exceeds the threshold.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ._base import ParamsMixin, check_is_fitted
from .text import clean_tokens, load_stopwords, normalize, split_sentences, tokenize
from .vectorize import SparseVector, Vocabulary, cosine, fit_vocab, tfidf_vector

DEFAULT_TAU = 0.6
BANK_N_RANGE = (1, 2, 3)


class BankFormatError(ValueError):
    """Malformed or unusable example-bank file."""


@dataclass(frozen=True)
class AttackType:
    """One category of evidence demand, e.g. specialty-occupation."""

    attack_id: str
    description: str


class Evidence(NamedTuple):
    sentence_index: int
    example_index: int
    similarity: float


@dataclass(frozen=True)
class ExampleBank:
    """Fitted detection state: cleaned example sentences and their vectors.

    ``attacks`` keeps declaration order (first appearance in the bank file);
    downstream template selection relies on that order being stable.
    """

    attacks: tuple[AttackType, ...]
    examples: tuple[tuple[tuple[str, ...], str], ...]
    vocab: Vocabulary
    vectors: tuple[SparseVector, ...]

    @property
    def attack_ids(self) -> tuple[str, ...]:
        return tuple(a.attack_id for a in self.attacks)

    def attack_of(self, example_index: int) -> str:
        return self.examples[example_index][1]


@dataclass(frozen=True)
class AttackReport:
    """Detected attack ids (bank order) plus every qualifying evidence pair."""

    detected: tuple[str, ...]
    evidence: tuple[Evidence, ...]
    threshold: float

    def as_record(self) -> dict:
        return {
            "detected": list(self.detected),
            "threshold": self.threshold,
            "evidence": [
                {
                    "sentence_index": e.sentence_index,
                    "example_index": e.example_index,
                    "similarity": e.similarity,
                }
                for e in self.evidence
            ],
        }


def load_bank(source, stopwords=None) -> ExampleBank:
    """Build an :class:`ExampleBank` from a bank file.

    ``source`` is a path to (or iterable of) JSON lines with keys
    ``attack_id``, ``description``, ``sentence``. Sentences are preprocessed
    with the detection pipeline (lowercase, a-z filter, stopword removal);
    a sentence that cleans to nothing is dropped with a warning, and an attack
    type whose sentences all vanish is an error. The same attack_id must carry
    the same description everywhere.
    """
    stopwords = load_stopwords() if stopwords is None else stopwords
    records = _read_bank_records(source)
    if not records:
        raise BankFormatError("example bank is empty")

    attacks: list[AttackType] = []
    descriptions: dict[str, str] = {}
    examples: list[tuple[tuple[str, ...], str]] = []
    for position, rec in enumerate(records):
        attack_id, description, sentence = rec
        if attack_id in descriptions:
            if descriptions[attack_id] != description:
                raise BankFormatError(
                    f"attack id {attack_id!r} declared twice with different "
                    f"descriptions"
                )
        else:
            descriptions[attack_id] = description
            attacks.append(AttackType(attack_id, description))
        tokens = clean_tokens(tokenize(normalize(sentence)), stopwords)
        if not tokens:
            warnings.warn(
                f"bank record {position} ({attack_id}): sentence cleaned to "
                f"zero tokens, dropped",
                stacklevel=2,
            )
            continue
        examples.append((tuple(tokens), attack_id))

    surviving = {attack_id for _, attack_id in examples}
    orphaned = [a.attack_id for a in attacks if a.attack_id not in surviving]
    if orphaned:
        raise BankFormatError(
            f"attack types with no surviving example sentences: {orphaned}"
        )
    vocab = fit_vocab([list(tokens) for tokens, _ in examples], BANK_N_RANGE)
    vectors = tuple(tfidf_vector(list(tokens), vocab) for tokens, _ in examples)
    return ExampleBank(
        attacks=tuple(attacks),
        examples=tuple(examples),
        vocab=vocab,
        vectors=vectors,
    )


def _read_bank_records(source) -> list[tuple[str, str, str]]:
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text("utf-8").splitlines()
    else:
        lines = [str(line) for line in source]
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BankFormatError(f"bank line {lineno}: invalid JSON ({exc})") from None
        try:
            records.append(
                (str(obj["attack_id"]), str(obj["description"]), str(obj["sentence"]))
            )
        except (TypeError, KeyError):
            raise BankFormatError(
                f"bank line {lineno}: need attack_id, description, sentence"
            ) from None
    return records


def similarity_matrix(rfe_sentences, bank: ExampleBank) -> np.ndarray:
    """Cosine similarity of every RFE sentence against every bank example.

    RFE sentences are token lists, vectorized in the bank's fitted space;
    the result is shape (n_sentences, n_examples) with entries in [0, 1].
    """
    matrix = np.zeros((len(rfe_sentences), len(bank.vectors)))
    for i, tokens in enumerate(rfe_sentences):
        vec = tfidf_vector(list(tokens), bank.vocab)
        if vec.is_zero():
            continue
        for j, example_vec in enumerate(bank.vectors):
            matrix[i, j] = cosine(vec, example_vec)
    return matrix


def detect_attacks(matrix: np.ndarray, bank: ExampleBank, tau: float = DEFAULT_TAU) -> AttackReport:
    """Flag every attack with at least one similarity strictly above ``tau``.

    Evidence keeps all qualifying (sentence, example, similarity) pairs sorted
    by similarity descending (index order breaks exact ties), not just the
    best one: reviewers and the drafting stage want every trigger.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    matrix = np.asarray(matrix)
    if matrix.size and matrix.shape[1] != len(bank.vectors):
        raise ValueError(
            f"matrix has {matrix.shape[1]} columns but bank has "
            f"{len(bank.vectors)} examples"
        )
    hits = []
    flagged: set[str] = set()
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            sim = float(matrix[i, j])
            if sim > tau:
                hits.append(Evidence(i, j, sim))
                flagged.add(bank.attack_of(j))
    hits.sort(key=lambda e: (-e.similarity, e.sentence_index, e.example_index))
    detected = tuple(a for a in bank.attack_ids if a in flagged)
    return AttackReport(detected=detected, evidence=tuple(hits), threshold=tau)


class AttackDetector(ParamsMixin):
    """Estimator facade: fit on a bank file, detect on raw RFE text."""

    def __init__(self, tau: float = DEFAULT_TAU):
        self.tau = tau

    def fit(self, bank_source, y=None):
        self.stopwords_ = load_stopwords()
        self.bank_ = load_bank(bank_source, self.stopwords_)
        return self

    def detect(self, rfe_text: str) -> AttackReport:
        check_is_fitted(self, "bank_")
        sentences = split_sentences(rfe_text, self.stopwords_)
        return self.detect_sentences(sentences)

    def detect_sentences(self, sentences) -> AttackReport:
        check_is_fitted(self, "bank_")
        matrix = similarity_matrix(sentences, self.bank_)
        return detect_attacks(matrix, self.bank_, self.tau)
