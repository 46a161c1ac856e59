"""Metrics and report writing.

Classification is scored with top-k accuracy and a confusion matrix over
template ids; answers and slots are scored with set precision / recall / F1,
aggregated both macro (mean over questions) and micro (pooled counts).
Reports land in a directory as JSON / CSV plus rendered figures.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path


class EvaluationError(Exception):
    pass


# ---------------------------------------------------------------------------
# classification metrics

def accuracy(ranked_predictions: list[list[int]], golds: list[int], k: int = 1) -> float:
    """Fraction of questions whose gold label appears in the top-k ranking."""
    if len(ranked_predictions) != len(golds):
        raise EvaluationError(
            f"{len(ranked_predictions)} predictions vs {len(golds)} gold labels"
        )
    if not golds:
        raise EvaluationError("cannot score an empty evaluation set")
    hits = sum(1 for ranked, gold in zip(ranked_predictions, golds) if gold in ranked[:k])
    return hits / len(golds)


class ConfusionMatrix:
    """Counts[gold][predicted] over a fixed label set."""

    def __init__(self, labels: list[int]):
        self.labels = list(labels)
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        n = len(self.labels)
        self.counts = [[0] * n for _ in range(n)]

    def add(self, gold: int, predicted: int) -> None:
        try:
            self.counts[self._index[gold]][self._index[predicted]] += 1
        except KeyError as exc:
            raise EvaluationError(f"label {exc.args[0]} outside the label set") from None

    @classmethod
    def from_pairs(cls, labels: list[int], pairs) -> "ConfusionMatrix":
        cm = cls(labels)
        for gold, predicted in pairs:
            cm.add(gold, predicted)
        return cm

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def per_label_accuracy(self) -> dict[int, float | None]:
        """Diagonal over row sum; None for labels with no gold examples."""
        out = {}
        for i, lab in enumerate(self.labels):
            row_total = sum(self.counts[i])
            out[lab] = self.counts[i][i] / row_total if row_total else None
        return out

    def render(self) -> str:
        width = max(5, max(len(str(lab)) for lab in self.labels) + 1)
        head = "gold\\pred".rjust(width) + "".join(str(l).rjust(width) for l in self.labels)
        lines = [head]
        for lab, row in zip(self.labels, self.counts):
            lines.append(str(lab).rjust(width) + "".join(str(c).rjust(width) for c in row))
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["gold\\pred"] + [str(l) for l in self.labels])
            for lab, row in zip(self.labels, self.counts):
                writer.writerow([str(lab)] + [str(c) for c in row])


# ---------------------------------------------------------------------------
# set precision / recall / F1

@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    def to_json(self) -> dict:
        return {
            "precision": round(self.precision, 6),
            "recall": round(self.recall, 6),
            "f1": round(self.f1, 6),
        }


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def set_prf(predicted: set, gold: set) -> PRF:
    """Both empty counts as a perfect answer (correctly predicting nothing)."""
    if not predicted and not gold:
        return PRF(1.0, 1.0, 1.0)
    inter = len(predicted & gold)
    p = inter / len(predicted) if predicted else 0.0
    r = inter / len(gold) if gold else 0.0
    return PRF(p, r, _f1(p, r))


def macro_prf(scores: list[PRF]) -> PRF:
    if not scores:
        raise EvaluationError("macro average of zero scores")
    n = len(scores)
    p = sum(s.precision for s in scores) / n
    r = sum(s.recall for s in scores) / n
    return PRF(p, r, _f1(p, r))


def micro_prf(pairs: list[tuple[set, set]]) -> PRF:
    """Pooled counts over (predicted, gold) set pairs."""
    if not pairs:
        raise EvaluationError("micro average of zero pairs")
    inter = sum(len(pred & gold) for pred, gold in pairs)
    n_pred = sum(len(pred) for pred, gold in pairs)
    n_gold = sum(len(gold) for pred, gold in pairs)
    p = inter / n_pred if n_pred else 0.0
    r = inter / n_gold if n_gold else 0.0
    return PRF(p, r, _f1(p, r))


def qa_prf(pairs: list[tuple[set, set]]) -> dict:
    """Answer-set scoring: per-question macro average plus pooled micro."""
    per_question = [set_prf(pred, gold) for pred, gold in pairs]
    return {
        "questions": len(pairs),
        "macro": macro_prf(per_question).to_json(),
        "micro": micro_prf(pairs).to_json(),
    }


SLOT_KINDS = ("resources", "predicates", "classes")


def slot_prf(pairs_by_kind: dict[str, list[tuple[set, set]]]) -> dict:
    """Per-kind macro PRF for slot filling (resources / predicates / classes)."""
    out = {}
    for kind in SLOT_KINDS:
        pairs = pairs_by_kind.get(kind, [])
        if pairs:
            out[kind] = macro_prf([set_prf(p, g) for p, g in pairs]).to_json()
        else:
            out[kind] = None
    return out


def answer_type_confusion(pairs: list[tuple[str, str]]) -> dict:
    """Counts of (gold answer type, predicted answer type)."""
    out: dict[str, dict[str, int]] = {}
    for gold, predicted in pairs:
        out.setdefault(gold, {}).setdefault(predicted, 0)
        out[gold][predicted] += 1
    return out


# ---------------------------------------------------------------------------
# report writer

def write_report(
    out_dir,
    accuracy_doc: dict,
    confusion: ConfusionMatrix | None = None,
    qa_doc: dict | None = None,
    slots_doc: dict | None = None,
    training_log: list[dict] | None = None,
) -> list[Path]:
    """Write the report directory: delimited/JSON artifacts plus figures."""
    from . import figures  # matplotlib import deferred to report time

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "accuracy.json"
    path.write_text(json.dumps(accuracy_doc, indent=2, sort_keys=True) + "\n", "utf-8")
    written.append(path)

    if confusion is not None:
        path = out / "confusion.csv"
        confusion.write_csv(path)
        written.append(path)
        path = out / "confusion.png"
        figures.confusion_heatmap(confusion, path)
        written.append(path)

    if qa_doc is not None:
        path = out / "qa_prf.json"
        path.write_text(json.dumps(qa_doc, indent=2, sort_keys=True) + "\n", "utf-8")
        written.append(path)

    if slots_doc is not None:
        path = out / "slots.json"
        path.write_text(json.dumps(slots_doc, indent=2, sort_keys=True) + "\n", "utf-8")
        written.append(path)

    if training_log:
        path = out / "training_curve.png"
        figures.training_curve(training_log, path)
        written.append(path)

    return written
