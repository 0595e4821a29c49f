"""Mean-split labeling, cross-validation and the metric suite.

Rooms scoring strictly above the dataset mean are label 1
("better than average"); everything else, including exact ties with the
mean, is label 0. Leave-one-out is the default protocol: with a couple of
dozen rooms a fixed split is statistically meaningless.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_NAMES, FeatureVector
from .models import ModelSpec, TrainedModel, fit
from .survey import WellbeingScore

REPORT_FORMAT = "fengshui-eval-report"
REPORT_VERSION = 1


class EvalError(ValueError):
    pass


class TooFewRows(EvalError):
    pass


class SingleClassDataset(EvalError):
    pass


class LengthMismatch(EvalError):
    pass


@dataclass(frozen=True)
class ScoredRow:
    """A finished session before labeling: features plus its survey score."""

    session_id: str
    features: FeatureVector
    score: WellbeingScore


@dataclass(frozen=True)
class LabeledRow:
    session_id: str
    features: FeatureVector
    score: WellbeingScore
    label: int


@dataclass(frozen=True)
class LabeledDataset:
    rows: tuple[LabeledRow, ...]
    split_mean: float

    def __len__(self) -> int:
        return len(self.rows)

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.rows], dtype=int)

    def matrix(self, names: tuple[str, ...] = FEATURE_NAMES) -> np.ndarray:
        return np.array([r.features.as_array(names) for r in self.rows])

    def project(self, names: tuple[str, ...]) -> list[tuple[dict, int]]:
        """Rows restricted to the named features, for model fitting."""
        return [
            ({n: r.features[n] for n in names}, r.label) for r in self.rows
        ]


@dataclass(frozen=True)
class CvSpec:
    kind: str = "loo"  # "loo" | "kfold"
    k: int = 5
    stratified: bool = True

    def __post_init__(self):
        if self.kind not in ("loo", "kfold"):
            raise EvalError(f"unknown cv kind {self.kind!r}")
        if self.kind == "kfold" and self.k < 2:
            raise EvalError(f"kfold needs k >= 2, got {self.k}")


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    degenerate: tuple[str, ...] = ()


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int
    n: int
    per_label: dict[int, LabelMetrics] = field(default_factory=dict)
    model_spec: ModelSpec | None = None
    cv: CvSpec | None = None
    seed: int | None = None


def label_by_mean(rows) -> LabeledDataset:
    """Label rows 1 iff score strictly exceeds the mean of all scores.

    Rows need session_id, features and score attributes (dataset-store rows
    qualify). The split mean is computed over the full input.
    """
    rows = list(rows)
    if len(rows) < 2:
        raise TooFewRows(f"need at least 2 scored rows, got {len(rows)}")
    scores = [r.score.value for r in rows]
    split_mean = sum(scores) / len(scores)
    labeled = tuple(
        LabeledRow(
            session_id=r.session_id,
            features=r.features,
            score=r.score,
            label=1 if r.score.value > split_mean else 0,
        )
        for r in rows
    )
    return LabeledDataset(rows=labeled, split_mean=split_mean)


def metrics(
    predictions,
    truths,
    model_spec: ModelSpec | None = None,
    cv: CvSpec | None = None,
) -> EvalReport:
    """Per-label precision/recall/F1 plus accuracy and confusion counts.

    Zero-denominator cases score 0 and are listed in the label's degenerate
    tuple instead of propagating NaN.
    """
    predictions = np.asarray(predictions, dtype=int)
    truths = np.asarray(truths, dtype=int)
    if predictions.shape != truths.shape or predictions.ndim != 1:
        raise LengthMismatch(
            f"predictions {predictions.shape} vs truths {truths.shape}"
        )
    if len(predictions) < 1:
        raise LengthMismatch("need at least one prediction")

    tp = int(np.sum((predictions == 1) & (truths == 1)))
    fp = int(np.sum((predictions == 1) & (truths == 0)))
    tn = int(np.sum((predictions == 0) & (truths == 0)))
    fn = int(np.sum((predictions == 0) & (truths == 1)))
    n = len(predictions)

    def label_metrics(tp_l: int, fp_l: int, fn_l: int, support: int) -> LabelMetrics:
        degenerate = []
        if tp_l + fp_l > 0:
            precision = tp_l / (tp_l + fp_l)
        else:
            precision = 0.0
            degenerate.append("precision")
        if tp_l + fn_l > 0:
            recall = tp_l / (tp_l + fn_l)
        else:
            recall = 0.0
            degenerate.append("recall")
        if precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
            degenerate.append("f1")
        return LabelMetrics(precision, recall, f1, support, tuple(degenerate))

    per_label = {
        0: label_metrics(tn, fn, fp, tn + fp),
        1: label_metrics(tp, fp, fn, tp + fn),
    }
    return EvalReport(
        accuracy=(tp + tn) / n,
        tp=tp, fp=fp, tn=tn, fn=fn, n=n,
        per_label=per_label,
        model_spec=model_spec,
        cv=cv,
        seed=model_spec.seed if model_spec is not None else None,
    )


def _canonical_rows(dataset: LabeledDataset) -> list[LabeledRow]:
    # session-id order makes every downstream result independent of row order
    return sorted(dataset.rows, key=lambda r: r.session_id)


def _check_dataset(dataset: LabeledDataset, minimum: int):
    if len(dataset) < minimum:
        raise TooFewRows(f"need at least {minimum} rows, got {len(dataset)}")
    labels = set(r.label for r in dataset.rows)
    if labels != {0, 1}:
        raise SingleClassDataset(f"both labels required, found {sorted(labels)}")


def loocv(
    dataset: LabeledDataset,
    spec: ModelSpec,
    feature_names: tuple[str, ...] | None = None,
) -> EvalReport:
    """Leave-one-out: n fit/predict rounds, metrics pooled over holdouts."""
    _check_dataset(dataset, 3)
    rows = _canonical_rows(dataset)
    names = feature_names if feature_names is not None else FEATURE_NAMES
    predictions = []
    truths = []
    for i, held_out in enumerate(rows):
        training = [
            ({n: r.features[n] for n in names}, r.label)
            for j, r in enumerate(rows) if j != i
        ]
        model = fit(spec, training)
        predictions.append(model.predict({n: held_out.features[n] for n in names}))
        truths.append(held_out.label)
    return metrics(predictions, truths, model_spec=spec, cv=CvSpec(kind="loo"))


def kfold_cv(
    dataset: LabeledDataset,
    spec: ModelSpec,
    cv: CvSpec,
    feature_names: tuple[str, ...] | None = None,
) -> EvalReport:
    """k-fold with optional stratification; fold assignment keyed by spec.seed."""
    from .seeding import derive_generator

    _check_dataset(dataset, cv.k)
    rows = _canonical_rows(dataset)
    names = feature_names if feature_names is not None else FEATURE_NAMES
    rng = derive_generator(spec.seed, 0xF01D)
    indices = np.arange(len(rows))
    fold_of = np.empty(len(rows), dtype=int)
    if cv.stratified:
        for label in (0, 1):
            members = indices[[r.label == label for r in rows]]
            members = members[rng.permutation(len(members))]
            for pos, idx in enumerate(members):
                fold_of[idx] = pos % cv.k
    else:
        shuffled = indices[rng.permutation(len(indices))]
        for pos, idx in enumerate(shuffled):
            fold_of[idx] = pos % cv.k
    predictions = np.empty(len(rows), dtype=int)
    for fold in range(cv.k):
        test_idx = indices[fold_of == fold]
        train_idx = indices[fold_of != fold]
        if len(test_idx) == 0:
            continue
        training = [
            ({n: rows[j].features[n] for n in names}, rows[j].label)
            for j in train_idx
        ]
        model = fit(spec, training)
        for j in test_idx:
            predictions[j] = model.predict({n: rows[j].features[n] for n in names})
    truths = np.array([r.label for r in rows], dtype=int)
    return metrics(predictions, truths, model_spec=spec, cv=cv)


def cross_validate(
    dataset: LabeledDataset,
    spec: ModelSpec,
    cv: CvSpec | None = None,
    feature_names: tuple[str, ...] | None = None,
) -> EvalReport:
    cv = cv or CvSpec(kind="loo")
    if cv.kind == "loo":
        return loocv(dataset, spec, feature_names)
    return kfold_cv(dataset, spec, cv, feature_names)


def train_full(
    dataset: LabeledDataset,
    spec: ModelSpec,
    feature_names: tuple[str, ...] | None = None,
) -> TrainedModel:
    """Fit one model on the entire labeled dataset (canonical row order)."""
    rows = _canonical_rows(dataset)
    names = feature_names if feature_names is not None else FEATURE_NAMES
    return fit(spec, [({n: r.features[n] for n in names}, r.label) for r in rows])


def baseline_accuracy(dataset: LabeledDataset) -> float:
    """Majority-class frequency, the accuracy of always guessing it."""
    labels = dataset.labels()
    ones = int(labels.sum())
    return max(ones, len(labels) - ones) / len(labels)


def report_to_dict(report: EvalReport) -> dict:
    from .models import spec_to_dict

    doc = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "accuracy": report.accuracy,
        "confusion": {"tp": report.tp, "fp": report.fp, "tn": report.tn, "fn": report.fn},
        "n": report.n,
        "per_label": {
            str(label): {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
                "degenerate": list(m.degenerate),
            }
            for label, m in report.per_label.items()
        },
    }
    if report.model_spec is not None:
        doc["model_spec"] = spec_to_dict(report.model_spec)
        doc["seed"] = report.model_spec.seed
    if report.cv is not None:
        doc["cv"] = {"kind": report.cv.kind, "k": report.cv.k,
                     "stratified": report.cv.stratified}
    return doc


def format_report(report: EvalReport) -> str:
    """Human-readable table: per-label precision/recall/f1 rows + accuracy."""
    lines = [f"{'':>10}  {'precision':>9}  {'recall':>9}  {'f1':>9}  {'support':>7}"]
    for label in (0, 1):
        m = report.per_label[label]
        flag = " *" if m.degenerate else ""
        lines.append(
            f"{'label ' + str(label):>10}  {m.precision:>9.4f}  {m.recall:>9.4f}  "
            f"{m.f1:>9.4f}  {m.support:>7d}{flag}"
        )
    lines.append(f"accuracy: {report.accuracy:.4f}  (n={report.n})")
    lines.append(
        f"confusion: tp={report.tp} fp={report.fp} tn={report.tn} fn={report.fn}"
    )
    if any(report.per_label[lab].degenerate for lab in (0, 1)):
        lines.append("* zero-denominator metric reported as 0")
    return "\n".join(lines)
