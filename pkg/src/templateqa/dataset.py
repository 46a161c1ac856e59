"""Dataset loading, template merging, train/test splitting and the
transfer-set filter.

Two input formats: the template-annotated training corpus (a JSON array of
records with ``_id``, ``corrected_question``, ``sparql_query`` and
``sparql_template_id``) and the transfer benchmark (QALD-style JSON with
multilingual question strings and gold answer documents).
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field

from .catalog import TemplateCatalog
from .sparql import SparqlParseError, match_template, parse_query

log = logging.getLogger(__name__)

# exclusion reasons for the transfer-set filter, checked in this order
PARSE_FAIL = "PARSE_FAIL"
FILTER_UNION = "FILTER_UNION"
MINMAX = "MINMAX"
MANY_TRIPLES = "MANY_TRIPLES"
COMPLEX_BOOLEAN = "COMPLEX_BOOLEAN"
NO_TEMPLATE = "NO_TEMPLATE"

EXCLUSION_REASONS = (
    PARSE_FAIL,
    FILTER_UNION,
    MINMAX,
    MANY_TRIPLES,
    COMPLEX_BOOLEAN,
    NO_TEMPLATE,
)


class DatasetError(Exception):
    pass


@dataclass
class QuestionRecord:
    qid: str
    question: str
    query: str
    original_template_id: int
    template_id: int | None = None  # merged id, set by apply_merge


@dataclass
class TransferRecord:
    qid: str
    question: str
    query: str
    gold_answers: set[str] = field(default_factory=set)
    template_id: int | None = None  # matched template, set by filter_transfer
    exclusion_reason: str | None = None


# ---------------------------------------------------------------------------
# template-annotated corpus

def load_lcquad(path) -> list[QuestionRecord]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise DatasetError(f"{path}: expected a JSON array of records")
    records = []
    for i, entry in enumerate(doc):
        try:
            records.append(
                QuestionRecord(
                    qid=str(entry["_id"]),
                    question=entry["corrected_question"],
                    query=entry["sparql_query"],
                    original_template_id=int(entry["sparql_template_id"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            qid = entry.get("_id", f"#{i}") if isinstance(entry, dict) else f"#{i}"
            raise DatasetError(f"{path}: malformed record {qid}: {exc}") from exc
    return records


def apply_merge(
    records: list[QuestionRecord], catalog: TemplateCatalog
) -> tuple[list[QuestionRecord], list[QuestionRecord]]:
    """Map original template ids through the merge map.

    Returns (kept, dropped): a record is kept exactly when its original id
    appears in the merge map; everything else belongs to the rare shapes the
    catalog does not model.
    """
    kept, dropped = [], []
    for rec in records:
        merged = catalog.merged_id(rec.original_template_id)
        if merged is None:
            dropped.append(rec)
        else:
            rec.template_id = merged
            kept.append(rec)
    return kept, dropped


def split_train_test(
    records: list[QuestionRecord], train_fraction: float = 0.8, seed: int = 0
) -> tuple[list[QuestionRecord], list[QuestionRecord]]:
    """Deterministic shuffled split; size of train is round(f * N)."""
    if not records:
        raise DatasetError("cannot split an empty record list")
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError(f"train_fraction must be in (0, 1), got {train_fraction}")
    shuffled = list(records)
    random.Random(seed).shuffle(shuffled)
    n_train = round(train_fraction * len(shuffled))
    return shuffled[:n_train], shuffled[n_train:]


# ---------------------------------------------------------------------------
# transfer benchmark

def _answer_values(answers_doc) -> set[str]:
    """Flatten a sparql-results+json answers document into a value set."""
    out: set[str] = set()
    for doc in answers_doc if isinstance(answers_doc, list) else [answers_doc]:
        if not isinstance(doc, dict):
            continue
        if "boolean" in doc:
            out.add("true" if doc["boolean"] else "false")
            continue
        for binding in doc.get("results", {}).get("bindings", []):
            for cell in binding.values():
                out.add(cell["value"])
    return out


def load_qald(path) -> list[TransferRecord]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    questions = doc.get("questions", doc) if isinstance(doc, dict) else doc
    records = []
    for i, entry in enumerate(questions):
        qid = str(entry.get("id", f"#{i}"))
        text = None
        for q in entry.get("question", []):
            if q.get("language") == "en":
                text = q.get("string")
                break
        query = entry.get("query", {}).get("sparql")
        if not text or not query:
            log.warning("skipping transfer record %s: missing English question or query", qid)
            continue
        records.append(
            TransferRecord(qid, text, query, gold_answers=_answer_values(entry.get("answers", [])))
        )
    return records


def filter_qald(
    records: list[TransferRecord], catalog: TemplateCatalog
) -> tuple[list[TransferRecord], list[TransferRecord]]:
    """Split transfer records into (kept, excluded).

    Kept records get ``template_id`` set to their matching catalog template;
    excluded ones get ``exclusion_reason`` set to the first applicable rule.
    """
    kept, excluded = [], []
    for rec in records:
        reason = None
        try:
            pq = parse_query(rec.query)
        except SparqlParseError:
            pq = None
            reason = PARSE_FAIL
        if reason is None:
            if pq.keywords & {"FILTER", "UNION", "OPTIONAL", "MINUS", "BIND", "VALUES"}:
                reason = FILTER_UNION
            elif pq.keywords & {"ORDER BY", "GROUP BY", "HAVING", "LIMIT", "OFFSET"}:
                reason = MINMAX
            elif len(pq.non_type_triples()) >= 3:
                reason = MANY_TRIPLES
            elif pq.form == "ASK" and len(pq.all_triples()) >= 2:
                reason = COMPLEX_BOOLEAN
            else:
                tid = match_template(rec.query, catalog)
                if tid is None:
                    reason = NO_TEMPLATE
                else:
                    rec.template_id = tid
        if reason is None:
            kept.append(rec)
        else:
            rec.exclusion_reason = reason
            excluded.append(rec)
    return kept, excluded
