"""Query instantiation and execution.

Given a ranked template hypothesis and slot candidates, enumerate concrete
slot bindings in rank order, instantiate the template pattern, run the
queries against a SPARQL endpoint (HTTP URL or an in-process store object)
and return the first viable answer.
"""

from __future__ import annotations

import itertools
import logging
import re
import time
from dataclasses import dataclass, field

import requests

from .catalog import PLACEHOLDER_RE, Template, TemplateCatalog
from .classify import ModelBundle, TemplateHypothesis, classify
from .conllu import ParsedQuestion
from .slots import Lexicon, SlotCandidates, link_entities, match_lexicon
from .sparql import parse_query

log = logging.getLogger(__name__)

DEFAULT_QUERY_BUDGET = 64
DEFAULT_TIMEOUT = 10.0
RETRIES = 2

URIS = "URIS"
COUNT = "COUNT"
BOOLEAN = "BOOLEAN"


class QueryGenError(Exception):
    pass


class EmptySlotError(QueryGenError):
    """A required slot has no candidates; the hypothesis cannot be grounded."""


class QueryExecutionError(QueryGenError):
    pass


@dataclass
class Binding:
    template_id: int
    values: dict[str, str]  # slot name -> IRI

    def __str__(self) -> str:
        inner = ", ".join(f"{k}=<{v}>" for k, v in self.values.items())
        return f"t{self.template_id}({inner})"


@dataclass
class AnswerSet:
    kind: str  # URIS | COUNT | BOOLEAN
    uris: list[str] = field(default_factory=list)
    count: int | None = None
    boolean: bool | None = None

    @property
    def viable(self) -> bool:
        if self.kind == URIS:
            return bool(self.uris)
        if self.kind == COUNT:
            return bool(self.count)
        return True  # a boolean answer is an answer either way

    def as_set(self) -> set[str]:
        """Comparable answer set; counts and booleans become singletons."""
        if self.kind == URIS:
            return set(self.uris)
        if self.kind == COUNT:
            return {str(self.count)}
        return {"true" if self.boolean else "false"}

    def to_json(self) -> dict:
        if self.kind == URIS:
            return {"kind": URIS, "uris": list(self.uris)}
        if self.kind == COUNT:
            return {"kind": COUNT, "count": self.count}
        return {"kind": BOOLEAN, "boolean": self.boolean}


# ---------------------------------------------------------------------------
# binding enumeration and instantiation

def enumerate_bindings(template: Template, candidates: SlotCandidates):
    """Lazily yield all groundings of a template, best-ranked first.

    Required slots vary in declared order with earlier slots varying slowest.
    An optional class slot contributes the class-absent binding first, then
    one binding per class candidate.
    """
    required = template.required_slots
    pools = []
    for slot in required:
        pool = candidates.for_kind(slot.kind)
        if not pool:
            raise EmptySlotError(f"template {template.id}: no candidates for slot {slot.name!r}")
        pools.append(pool)

    class_slot = next((s for s in template.slots if s.kind == "CLASS"), None)
    if class_slot is not None and class_slot.required:
        classes: list[str | None] = list(candidates.classes)
        if not classes:
            raise EmptySlotError(
                f"template {template.id}: no candidates for slot {class_slot.name!r}"
            )
    elif class_slot is not None:
        classes = [None] + list(candidates.classes)
    else:
        classes = [None]

    names = [s.name for s in required]

    def stream():
        for combo in itertools.product(*pools):
            for cls in classes:
                values = dict(zip(names, combo))
                if cls is not None:
                    values[class_slot.name] = cls
                yield Binding(template.id, values)

    return stream()


def instantiate(template: Template, binding: Binding) -> str:
    """Fill the pattern placeholders; drop the OPTIONAL clause when the
    optional class slot is unbound."""
    pattern = template.pattern
    opt = template.optional_class_slot
    if opt is not None and opt.name not in binding.values:
        pattern = re.sub(r"OPTIONAL\s*{[^}]*}\s*", "", pattern)

    def fill(m):
        name = m.group(1)
        try:
            return f"<{binding.values[name]}>"
        except KeyError:
            raise QueryGenError(
                f"binding for template {template.id} is missing slot {name!r}"
            ) from None

    return PLACEHOLDER_RE.sub(fill, pattern)


def existence_query(binding: Binding, template: Template) -> str:
    """Companion query that checks whether an ASK binding's triple exists."""
    body = instantiate(template, binding)
    inner = body[body.index("{"):]
    return f"SELECT (COUNT(*) AS ?count) WHERE {inner}"


# ---------------------------------------------------------------------------
# execution

def _execute_http(query: str, url: str, timeout: float) -> dict:
    last = None
    for attempt in range(RETRIES + 1):
        try:
            resp = requests.get(
                url,
                params={"query": query, "format": "json"},
                headers={"Accept": "application/sparql-results+json"},
                timeout=timeout,
            )
            if resp.status_code >= 500:
                raise requests.RequestException(f"server error {resp.status_code}")
            if resp.status_code != 200:
                raise QueryExecutionError(
                    f"endpoint rejected query ({resp.status_code}): {resp.text[:200]}"
                )
            return resp.json()
        except requests.RequestException as exc:
            last = exc
            if attempt < RETRIES:
                time.sleep(0.5 * 2**attempt)
    raise QueryExecutionError(f"endpoint unreachable after {RETRIES + 1} attempts: {last}")


def execute(query: str, endpoint, timeout: float = DEFAULT_TIMEOUT) -> AnswerSet:
    """Run a query against a URL or any object with ``query(text) -> dict``."""
    if isinstance(endpoint, str):
        doc = _execute_http(query, endpoint, timeout)
    else:
        doc = endpoint.query(query)

    form = parse_query(query).form
    if form == "ASK":
        if "boolean" not in doc:
            raise QueryExecutionError("ASK query returned no boolean")
        return AnswerSet(BOOLEAN, boolean=bool(doc["boolean"]))

    try:
        bindings = doc["results"]["bindings"]
    except (KeyError, TypeError):
        raise QueryExecutionError("malformed result document") from None
    if form == "COUNT":
        if not bindings:
            return AnswerSet(COUNT, count=0)
        value = next(iter(bindings[0].values()))["value"]
        return AnswerSet(COUNT, count=int(value))
    uris = []
    for b in bindings:
        for cell in b.values():
            uris.append(cell["value"])
    return AnswerSet(URIS, uris=uris)


def first_viable(
    template: Template,
    bindings,
    endpoint,
    budget: int = DEFAULT_QUERY_BUDGET,
    timeout: float = DEFAULT_TIMEOUT,
) -> tuple[Binding, AnswerSet] | None:
    """First binding (from an iterable) whose query yields a non-empty answer.

    BOOLEAN templates are grounded through a companion existence query: the
    first binding whose triple exists answers ``true``; if none does, the
    top-ranked binding answers ``false``.
    """
    is_ask = template.question_type == "BOOLEAN"
    first_binding = None
    for binding in itertools.islice(bindings, budget):
        if first_binding is None:
            first_binding = binding
        if is_ask:
            probe = execute(existence_query(binding, template), endpoint, timeout)
            if probe.count:
                return binding, AnswerSet(BOOLEAN, boolean=True)
        else:
            answers = execute(instantiate(template, binding), endpoint, timeout)
            if answers.viable:
                return binding, answers
    if is_ask and first_binding is not None:
        return first_binding, AnswerSet(BOOLEAN, boolean=False)
    return None


# ---------------------------------------------------------------------------
# end-to-end answering

@dataclass
class QAResult:
    qid: object
    template_id: int | None
    binding: Binding | None
    answers: AnswerSet | None
    reason: str | None = None  # set when the question was not answered
    hypotheses: list[TemplateHypothesis] = field(default_factory=list)

    @property
    def answered(self) -> bool:
        return self.answers is not None

    def to_json(self) -> dict:
        doc = {
            "qid": self.qid,
            "template": self.template_id,
            "binding": dict(self.binding.values) if self.binding else None,
            "answers": self.answers.to_json() if self.answers else None,
            "hypotheses": [
                {"template": h.template_id, "prob": round(h.probability, 6)}
                for h in self.hypotheses
            ],
        }
        if self.reason:
            doc["reason"] = self.reason
        return doc


def collect_candidates(
    text: str,
    linkers,
    lexicon: Lexicon,
) -> SlotCandidates:
    return SlotCandidates(
        resources=link_entities(text, linkers),
        predicates=match_lexicon(text, lexicon, "PREDICATE"),
        classes=match_lexicon(text, lexicon, "CLASS"),
    )


def answer_question(
    question: ParsedQuestion,
    bundle: ModelBundle,
    linkers,
    lexicon: Lexicon,
    endpoint,
    k: int = 2,
    budget: int = DEFAULT_QUERY_BUDGET,
    text: str | None = None,
) -> QAResult:
    """Classify, ground and execute; hypotheses are tried best-first."""
    catalog: TemplateCatalog = bundle.catalog
    hypotheses = classify(question, bundle)[:k]
    if text is None:
        text = " ".join(t.surface for t in question.tokens)
    candidates = collect_candidates(text, linkers, lexicon)

    reason = "NO_VIABLE_BINDING"
    for hyp in hypotheses:
        template = catalog[hyp.template_id]
        try:
            bindings = enumerate_bindings(template, candidates)
        except EmptySlotError as exc:
            log.debug("qid %s: %s", question.qid, exc)
            reason = "EMPTY_SLOT"
            continue
        hit = first_viable(template, bindings, endpoint, budget=budget)
        if hit is not None:
            binding, answers = hit
            return QAResult(question.qid, template.id, binding, answers, hypotheses=hypotheses)
    return QAResult(question.qid, None, None, None, reason=reason, hypotheses=hypotheses)
