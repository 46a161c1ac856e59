"""Slot candidates: entity linking for resources, lexicon matching for
predicates and ontology classes.

Resources come from an ensemble of linker clients (DBpedia Spotlight and
TagMe over HTTP, or a fixture linker that replays recorded payloads so the
test suite never touches the network).  TagMe multi-word detections rank
above Spotlight detections, which rank above TagMe single-word ones.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

log = logging.getLogger(__name__)

SOURCE_TAGME = "TAGME"
SOURCE_SPOTLIGHT = "SPOTLIGHT"
SOURCE_FIXTURE = "FIXTURE"

DEFAULT_SPOTLIGHT_CONFIDENCE = 0.4
DEFAULT_TAGME_RHO = 0.1
DEFAULT_SLOT_CAP = 10

_IRI_RE = re.compile(r"^[a-zA-Z][a-zA-Z0-9+.-]*:\S+$")


class SlotError(Exception):
    pass


class LinkerError(Exception):
    pass


@dataclass(frozen=True)
class EntityCandidate:
    uri: str
    surface: str
    source: str
    score: float

    @property
    def multiword(self) -> bool:
        return len(self.surface.split()) > 1


@dataclass
class SlotCandidates:
    resources: list[EntityCandidate] = field(default_factory=list)
    predicates: list[str] = field(default_factory=list)
    classes: list[str] = field(default_factory=list)

    def for_kind(self, kind: str) -> list[str]:
        if kind == "RESOURCE":
            return [c.uri for c in self.resources]
        if kind == "PREDICATE":
            return list(self.predicates)
        if kind == "CLASS":
            return list(self.classes)
        raise SlotError(f"unknown slot kind {kind!r}")


# ---------------------------------------------------------------------------
# linker clients

def question_hash(text: str) -> str:
    return hashlib.sha1(text.encode("utf-8")).hexdigest()


def _parse_spotlight_payload(payload: dict) -> list[EntityCandidate]:
    out = []
    for res in payload.get("Resources", []) or []:
        uri = res.get("@URI")
        surface = res.get("@surfaceForm", "")
        if not uri:
            continue
        try:
            score = float(res.get("@similarityScore", 0.0))
        except (TypeError, ValueError):
            score = 0.0
        out.append(EntityCandidate(uri, surface, SOURCE_SPOTLIGHT, score))
    return out


def _parse_tagme_payload(payload: dict) -> list[EntityCandidate]:
    out = []
    for ann in payload.get("annotations", []) or []:
        title = ann.get("title")
        if not title:
            continue
        uri = "http://dbpedia.org/resource/" + title.replace(" ", "_")
        try:
            score = float(ann.get("rho", 0.0))
        except (TypeError, ValueError):
            score = 0.0
        out.append(EntityCandidate(uri, ann.get("spot", ""), SOURCE_TAGME, score))
    return out


class SpotlightClient:
    def __init__(self, url: str = "https://api.dbpedia-spotlight.org/en/annotate",
                 confidence: float = DEFAULT_SPOTLIGHT_CONFIDENCE, timeout: float = 10.0):
        self.url = url
        self.confidence = confidence
        self.timeout = timeout

    def annotate(self, text: str) -> list[EntityCandidate]:
        resp = requests.post(
            self.url,
            data={"text": text, "confidence": self.confidence},
            headers={"Accept": "application/json"},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        return _parse_spotlight_payload(resp.json())


class TagmeClient:
    """TagMe /tag endpoint; the API key comes from the TAGME_KEY environment
    variable, never from flags or files."""

    def __init__(self, url: str = "https://tagme.d4science.org/tagme/tag",
                 timeout: float = 10.0):
        self.url = url
        self.timeout = timeout

    def annotate(self, text: str) -> list[EntityCandidate]:
        key = os.environ.get("TAGME_KEY")
        if not key:
            raise LinkerError("TAGME_KEY environment variable is not set")
        resp = requests.get(
            self.url, params={"text": text, "gcube-token": key}, timeout=self.timeout
        )
        resp.raise_for_status()
        return _parse_tagme_payload(resp.json())


class FixtureLinker:
    """Replays recorded linker payloads keyed by sha1 of the question text."""

    def __init__(self, path):
        with open(path, encoding="utf-8") as fh:
            self.payloads = json.load(fh)

    def annotate(self, text: str) -> list[EntityCandidate]:
        entry = self.payloads.get(question_hash(text))
        if entry is None:
            return []
        out = []
        if "tagme" in entry:
            out.extend(_parse_tagme_payload(entry["tagme"]))
        if "spotlight" in entry:
            out.extend(_parse_spotlight_payload(entry["spotlight"]))
        return out


def link_entities(
    question: str,
    linkers,
    spotlight_confidence: float = DEFAULT_SPOTLIGHT_CONFIDENCE,
    tagme_rho: float = DEFAULT_TAGME_RHO,
    cap: int = DEFAULT_SLOT_CAP,
    jobs: int = 4,
) -> list[EntityCandidate]:
    """Union of linker outputs, ranked: TagMe multi-word, then Spotlight,
    then TagMe single-word; descending score within each group."""
    if not linkers:
        raise SlotError("at least one linker must be configured")
    if not question.strip():
        return []
    results: list[list[EntityCandidate]] = []
    failures = 0

    def call(linker):
        return linker.annotate(question)

    with ThreadPoolExecutor(max_workers=min(jobs, len(linkers))) as pool:
        futures = [pool.submit(call, linker) for linker in linkers]
        for linker, future in zip(linkers, futures):
            try:
                results.append(future.result())
            except (requests.RequestException, LinkerError, ValueError) as exc:
                failures += 1
                log.warning("linker %s skipped: %s", type(linker).__name__, exc)
    if failures == len(linkers):
        raise SlotError("all entity linkers failed")

    candidates = [c for batch in results for c in batch]
    candidates = [
        c for c in candidates
        if not (c.source == SOURCE_SPOTLIGHT and c.score < spotlight_confidence)
        and not (c.source == SOURCE_TAGME and c.score < tagme_rho)
    ]

    def group(c: EntityCandidate) -> int:
        if c.source == SOURCE_TAGME and c.multiword:
            return 0
        if c.source == SOURCE_SPOTLIGHT:
            return 1
        if c.source == SOURCE_TAGME:
            return 2
        return 1  # generic fixture candidates rank with spotlight

    ranked = sorted(enumerate(candidates), key=lambda p: (group(p[1]), -p[1].score, p[0]))
    seen: set[str] = set()
    out = []
    for _, c in ranked:
        if c.uri in seen:
            continue
        seen.add(c.uri)
        out.append(c)
        if len(out) >= cap:
            break
    return out


# ---------------------------------------------------------------------------
# lexicon

class Lexicon:
    """Lowercased surface form -> list of predicate/class IRIs."""

    def __init__(self, entries: dict[str, list[str]]):
        self.map: dict[str, list[str]] = {}
        for key, iris in entries.items():
            if not key:
                raise SlotError("empty lexicon key")
            low = key.lower()
            bucket = self.map.setdefault(low, [])
            for iri in iris:
                if not _IRI_RE.match(iri):
                    raise SlotError(f"malformed IRI {iri!r} under key {key!r}")
                if iri not in bucket:
                    bucket.append(iri)
        self.max_key_words = max((len(k.split()) for k in self.map), default=0)

    def __len__(self) -> int:
        return len(self.map)


def load_lexicon(path) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        return Lexicon(json.load(fh))


def _is_class_iri(iri: str) -> bool:
    # DBpedia convention: ontology classes have capitalized local names
    local = iri.rstrip("/").rsplit("/", 1)[-1].rsplit("#", 1)[-1]
    return bool(local) and local[0].isupper()


def match_lexicon(question: str, lexicon: Lexicon, kind: str,
                  cap: int = DEFAULT_SLOT_CAP) -> list[str]:
    """Look up all word n-grams, longest first; flatten and deduplicate."""
    if kind not in ("PREDICATE", "CLASS"):
        raise SlotError(f"match_lexicon kind must be PREDICATE or CLASS, got {kind!r}")
    words = [w.lower() for w in re.findall(r"[A-Za-z0-9'-]+", question)]
    out: list[str] = []
    seen: set[str] = set()
    for n in range(min(lexicon.max_key_words, len(words)), 0, -1):
        for start in range(0, len(words) - n + 1):
            gram = " ".join(words[start:start + n])
            for iri in lexicon.map.get(gram, []):
                if _is_class_iri(iri) != (kind == "CLASS"):
                    continue
                if iri not in seen:
                    seen.add(iri)
                    out.append(iri)
                    if len(out) >= cap:
                        return out
    return out
