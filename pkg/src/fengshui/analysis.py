"""Correlation screening and exhaustive feature-subset search.

Features whose absolute correlation with the well-being score exceeds a
threshold (0.2 by default, strict) become candidates; every non-empty
subset of the candidates is then scored by cross-validated accuracy.
"""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass

import numpy as np

from .evaluation import CvSpec, EvalReport, LabeledDataset, cross_validate
from .features import FEATURE_NAMES
from .models import ModelSpec
from .seeding import derive_generator, stable_key

DEFAULT_THRESHOLD = 0.2
MAX_CANDIDATES = 20
UNDEFINED_MARKER = "undefined"


class AnalysisError(ValueError):
    pass


class ZeroVariance(AnalysisError):
    pass


class LengthMismatch(AnalysisError):
    pass


class TooFewRows(AnalysisError):
    pass


class TooManyCandidates(AnalysisError):
    pass


@dataclass(frozen=True)
class CorrelationReport:
    """Per-feature correlation with the score column.

    Zero-variance features carry None instead of a coefficient; they are
    surfaced, not silently dropped, so degenerate columns stay visible.
    """

    entries: tuple[tuple[str, float | None], ...]
    n_rows: int

    def __post_init__(self):
        names = tuple(name for name, _ in self.entries)
        if names != FEATURE_NAMES:
            raise AnalysisError("correlation entries must cover every feature in order")
        for name, r in self.entries:
            if r is not None and not abs(r) <= 1 + 1e-12:
                raise AnalysisError(f"|r| > 1 for {name}: {r}")

    def r(self, name: str) -> float | None:
        for entry_name, value in self.entries:
            if entry_name == name:
                return value
        raise KeyError(name)


@dataclass(frozen=True)
class SubsetScore:
    features: tuple[str, ...]
    accuracy: float
    report: EvalReport


@dataclass(frozen=True)
class SubsetSearchResult:
    ranking: tuple[SubsetScore, ...]

    @property
    def best_subset(self) -> tuple[str, ...]:
        return self.ranking[0].features

    @property
    def best_score(self) -> float:
        return self.ranking[0].accuracy


def pearson(x, y) -> float:
    """Covariance-normalized correlation coefficient, r = C_xy / sqrt(C_xx C_yy)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise LengthMismatch(f"shapes {x.shape} and {y.shape}")
    if len(x) < 2:
        raise LengthMismatch(f"need at least 2 points, got {len(x)}")
    dx = x - x.mean()
    dy = y - y.mean()
    # population normalization; the 1/n factors cancel in the ratio anyway
    c_xx = float(dx @ dx)
    c_yy = float(dy @ dy)
    if c_xx == 0.0:
        raise ZeroVariance("x is constant")
    if c_yy == 0.0:
        raise ZeroVariance("y is constant")
    return float((dx @ dy) / np.sqrt(c_xx * c_yy))


def correlate_dataset(dataset: LabeledDataset) -> CorrelationReport:
    """Correlate every feature against the score column."""
    if len(dataset) < 2:
        raise TooFewRows(f"need at least 2 rows, got {len(dataset)}")
    scores = np.array([r.score.value for r in dataset.rows])
    entries = []
    for name in FEATURE_NAMES:
        column = np.array([r.features[name] for r in dataset.rows])
        try:
            entries.append((name, pearson(column, scores)))
        except ZeroVariance:
            entries.append((name, None))
    return CorrelationReport(entries=tuple(entries), n_rows=len(dataset))


def filter_candidates(
    report: CorrelationReport, threshold: float = DEFAULT_THRESHOLD
) -> tuple[str, ...]:
    """Features with |r| strictly above the threshold, in feature order.

    Absolute value: strongly negative correlates (narrow rooms, loud rooms)
    are as informative as positive ones.
    """
    if threshold < 0:
        raise AnalysisError(f"threshold must be >= 0, got {threshold}")
    return tuple(
        name
        for name, r in report.entries
        if r is not None and abs(r) > threshold
    )


def _subset_seed(seed: int, subset: tuple[str, ...]) -> int:
    # derived from the canonical (sorted) name list so the outcome cannot
    # depend on candidate order or on evaluation scheduling
    rng = derive_generator(seed, stable_key(",".join(subset)))
    return int(rng.integers(0, 2**63))


def exhaustive_subset_search(
    dataset: LabeledDataset,
    candidates,
    model_spec: ModelSpec,
    cv_spec: CvSpec | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> SubsetSearchResult:
    """Score every non-empty candidate subset by cross-validated accuracy.

    Ranking order: higher accuracy, then fewer features, then lexicographic
    feature names. Capped at 20 candidates (2^20 guard). Per-subset seeds
    derive from (seed, canonical subset names), so the ranking is identical
    whatever the candidate order or the number of workers.
    """
    candidates = tuple(sorted(set(candidates)))
    if not 1 <= len(candidates) <= MAX_CANDIDATES:
        raise TooManyCandidates(
            f"need 1..{MAX_CANDIDATES} candidates, got {len(candidates)}"
        )
    unknown = [c for c in candidates if c not in FEATURE_NAMES]
    if unknown:
        raise AnalysisError(f"unknown features: {unknown}")
    cv_spec = cv_spec or CvSpec(kind="loo")
    subsets = [
        subset
        for size in range(1, len(candidates) + 1)
        for subset in itertools.combinations(candidates, size)
    ]

    def score(subset: tuple[str, ...]) -> SubsetScore:
        spec = model_spec.with_seed(_subset_seed(seed, subset))
        report = cross_validate(dataset, spec, cv_spec, feature_names=subset)
        return SubsetScore(subset, report.accuracy, report)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scored = list(pool.map(score, subsets))
    else:
        scored = [score(subset) for subset in subsets]
    scored.sort(key=lambda s: (-s.accuracy, len(s.features), s.features))
    return SubsetSearchResult(ranking=tuple(scored))


def correlation_report_to_csv(report: CorrelationReport) -> str:
    out = io.StringIO()
    out.write("feature_name,r\n")
    for name, r in report.entries:
        out.write(f"{name},{UNDEFINED_MARKER if r is None else repr(r)}\n")
    return out.getvalue()


def correlation_report_from_csv(text: str) -> CorrelationReport:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "feature_name,r":
        raise AnalysisError("expected header 'feature_name,r'")
    entries = []
    for ln in lines[1:]:
        name, _, raw = ln.partition(",")
        raw = raw.strip()
        if raw == UNDEFINED_MARKER:
            entries.append((name.strip(), None))
        else:
            try:
                entries.append((name.strip(), float(raw)))
            except ValueError as exc:
                raise AnalysisError(f"bad coefficient {raw!r}") from exc
    return CorrelationReport(entries=tuple(entries), n_rows=0)


def ranking_to_csv(result: SubsetSearchResult) -> str:
    out = io.StringIO()
    out.write("rank,accuracy,n_features,features\n")
    for rank, entry in enumerate(result.ranking, start=1):
        out.write(
            f"{rank},{repr(entry.accuracy)},{len(entry.features)},"
            f"{'|'.join(entry.features)}\n"
        )
    return out.getvalue()
