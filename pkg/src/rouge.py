"""ROUGE-1, ROUGE-2 and ROUGE-L with byte- and word-limited truncation.

Tokens are compared case-folded. N-gram matching is clipped (multiset
intersection); ROUGE-L uses the longest common subsequence.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

METRICS = ("rouge1", "rouge2", "rougeL")
METRIC_LABELS = {"rouge1": "Rouge-1", "rouge2": "Rouge-2", "rougeL": "Rouge-L"}

Sentences = Sequence[Sequence[str]]


class TruncationMode(str, enum.Enum):
    NONE = "none"
    BYTES = "bytes"
    WORDS = "words"


@dataclass(frozen=True)
class TruncationPolicy:
    """How candidate summaries are cut before scoring."""

    mode: TruncationMode = TruncationMode.NONE
    limit: int | None = None

    def __post_init__(self):
        if self.mode is TruncationMode.NONE:
            if self.limit is not None:
                raise ValueError("Truncation mode 'none' takes no limit")
        elif self.limit is None or self.limit < 1:
            raise ValueError(f"Truncation limit must be >= 1, got {self.limit}")

    @classmethod
    def parse(cls, text: str) -> TruncationPolicy:
        """Parse "none", "bytes:N" or "words:N"."""
        mode, _, limit = text.strip().lower().partition(":")
        try:
            kind = TruncationMode(mode)
        except ValueError:
            raise ValueError(f"Unknown truncation policy: {text!r}") from None
        if kind is TruncationMode.NONE:
            if limit:
                raise ValueError(f"Truncation mode 'none' takes no limit: {text!r}")
            return cls()
        if not limit.isdigit():
            raise ValueError(f"Truncation policy needs an integer limit: {text!r}")
        return cls(kind, int(limit))

    @property
    def truncates(self) -> bool:
        return self.mode is not TruncationMode.NONE

    def __str__(self) -> str:
        return self.mode.value if not self.truncates else f"{self.mode.value}:{self.limit}"


NO_TRUNCATION = TruncationPolicy()


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float
    overlap: int
    candidate_units: int
    reference_units: int

    @property
    def empty_reference(self) -> bool:
        return self.reference_units == 0

    def as_tuple(self) -> tuple[float, float, float]:
        return self.precision, self.recall, self.f1

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "overlap": self.overlap,
            "candidate_units": self.candidate_units,
            "reference_units": self.reference_units,
        }


@dataclass(frozen=True)
class RougeReport:
    """Macro-averaged scores over a corpus (counts are summed).

    F1 is the mean of per-document F1 values, as the ROUGE script reports
    it, so it need not equal 2PR/(P+R) of the averaged P and R.
    """

    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore
    documents: int
    policy: TruncationPolicy = NO_TRUNCATION

    def metric(self, name: str) -> RougeScore:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {
            "documents": self.documents,
            "policy": str(self.policy),
            **{name: self.metric(name).to_dict() for name in METRICS},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_table(self) -> str:
        """Aligned table, one row per measure and one column per metric."""
        header = f"{'':<10}" + "".join(f"{METRIC_LABELS[m]:>10}" for m in METRICS)
        lines = [header]
        for measure, label in (("precision", "Precision"), ("recall", "Recall"), ("f1", "F1")):
            cells = "".join(f"{100 * getattr(self.metric(m), measure):>10.1f}" for m in METRICS)
            lines.append(f"{label:<10}{cells}")
        return "\n".join(lines) + "\n"


def f1_score(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _score(overlap: int, candidate_units: int, reference_units: int) -> RougeScore:
    precision = overlap / candidate_units if candidate_units else 0.0
    recall = overlap / reference_units if reference_units else 0.0
    return RougeScore(precision, recall, f1_score(precision, recall), overlap, candidate_units, reference_units)


def _fold(tokens: Iterable[str]) -> list[str]:
    return [t.lower() for t in tokens]


def truncate(tokens: Sequence[str], policy: TruncationPolicy) -> list[str]:
    """Cut a token list; byte mode never splits a token and counts single joining spaces."""
    if policy.mode is TruncationMode.WORDS:
        return list(tokens[: policy.limit])
    if policy.mode is TruncationMode.BYTES:
        kept: list[str] = []
        used = 0
        for token in tokens:
            cost = len(token.encode("utf-8")) + (1 if kept else 0)
            if used + cost > policy.limit:
                break
            kept.append(token)
            used += cost
        return kept
    return list(tokens)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    if n not in (1, 2):
        raise ValueError(f"rouge_n supports n in {{1, 2}}, got {n}")
    cand = ngrams(_fold(candidate), n)
    ref = ngrams(_fold(reference), n)
    overlap = sum((cand & ref).values())
    return _score(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length, O(len(a) * len(b)) with two rows."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            current.append(previous[j - 1] + 1 if x == y else max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    cand, ref = _fold(candidate), _fold(reference)
    return _score(lcs_length(cand, ref), len(cand), len(ref))


def join_sentences(sentences: Sentences) -> list[str]:
    return [token for sentence in sentences for token in sentence]


def score_tokens(candidate: Sequence[str], reference: Sequence[str]) -> dict[str, RougeScore]:
    return {
        "rouge1": rouge_n(candidate, reference, 1),
        "rouge2": rouge_n(candidate, reference, 2),
        "rougeL": rouge_l(candidate, reference),
    }


def _mean_score(scores: list[RougeScore]) -> RougeScore:
    count = len(scores)
    return RougeScore(
        precision=sum(s.precision for s in scores) / count,
        recall=sum(s.recall for s in scores) / count,
        f1=sum(s.f1 for s in scores) / count,
        overlap=sum(s.overlap for s in scores),
        candidate_units=sum(s.candidate_units for s in scores),
        reference_units=sum(s.reference_units for s in scores),
    )


def score_corpus(
    pairs: Iterable[tuple[Sentences, Sentences]],
    policy: TruncationPolicy = NO_TRUNCATION,
    multi_reference: bool = False,
) -> RougeReport:
    """Macro-average ROUGE over (candidate sentences, reference sentences) pairs.

    Truncation applies to candidates only. With ``multi_reference`` each
    reference item is a list of alternative references and, per metric, the
    reference giving the highest F1 is kept.
    """
    per_metric: dict[str, list[RougeScore]] = {m: [] for m in METRICS}
    for candidate, reference in pairs:
        cand_tokens = truncate(join_sentences(candidate), policy)
        references = reference if multi_reference else [reference]
        if not references:
            raise ValueError("Document has no reference summary")
        scored = [score_tokens(cand_tokens, join_sentences(r)) for r in references]
        for metric in METRICS:
            per_metric[metric].append(max((s[metric] for s in scored), key=lambda s: s.f1))
    documents = len(per_metric["rouge1"])
    if documents == 0:
        raise ValueError("Cannot score an empty corpus")
    return RougeReport(
        rouge1=_mean_score(per_metric["rouge1"]),
        rouge2=_mean_score(per_metric["rouge2"]),
        rougeL=_mean_score(per_metric["rougeL"]),
        documents=documents,
        policy=policy,
    )


def default_measure(policy: TruncationPolicy) -> str:
    """Recall for length-limited protocols, F1 for full-length ones."""
    return "recall" if policy.truncates else "f1"


def format_table(systems: dict[str, RougeReport], measure: str = "recall") -> str:
    """One row per system, Rouge-1/2/L columns, scores x100."""
    if measure not in ("precision", "recall", "f1"):
        raise ValueError(f"Unknown measure: {measure}")
    width = max([len(name) for name in systems] + [12])
    lines = [f"{'System':<{width}} |" + "".join(f"{METRIC_LABELS[m]:>9}" for m in METRICS)]
    lines.append("-" * len(lines[0]))
    for name, report in systems.items():
        cells = "".join(f"{100 * getattr(report.metric(m), measure):>9.1f}" for m in METRICS)
        lines.append(f"{name:<{width}} |{cells}")
    return "\n".join(lines) + "\n"
