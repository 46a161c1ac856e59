"""Restricted SPARQL parsing, canonicalization and template matching.

This is not a general SPARQL engine.  It understands the query shapes that the
template catalog can produce (SELECT / COUNT / ASK over basic graph patterns
with at most one OPTIONAL block) plus just enough surface syntax of arbitrary
benchmark queries to detect FILTER / UNION / ORDER BY constructs and count
triples, which is all the dataset filters need.

A query is matched to a template by canonical signature: variables are renamed
by first appearance (the projection variable gets a fixed name), constants are
renamed positionally with equality preserved (so a template reusing ``<p>`` in
two triples stays distinguishable from one with independent predicates), and
``rdf:type`` triples with a constant object are treated as class slots.
OPTIONAL blocks are inlined before signing, so a gold query carrying the class
triple matches the merged template whose class slot is optional.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

RDF_TYPE_IRIS = {
    "a",
    "rdf:type",
    "http://www.w3.org/1999/02/22-rdf-syntax-ns#type",
}

# term kinds
VAR = "var"
IRI = "iri"
LIT = "lit"

Term = tuple[str, str]  # (kind, value)


class SparqlParseError(Exception):
    pass


@dataclass(frozen=True)
class TriplePattern:
    subj: Term
    pred: Term
    obj: Term

    @property
    def is_type_triple(self) -> bool:
        return self.pred[0] == IRI and self.pred[1] in RDF_TYPE_IRIS

    def terms(self):
        return (self.subj, self.pred, self.obj)


@dataclass
class ParsedQuery:
    form: str  # SELECT | COUNT | ASK
    distinct: bool
    projection: str | None  # variable name without '?'
    triples: list[TriplePattern] = field(default_factory=list)
    optional_triples: list[TriplePattern] = field(default_factory=list)
    keywords: set[str] = field(default_factory=set)

    def all_triples(self) -> list[TriplePattern]:
        return self.triples + self.optional_triples

    def non_type_triples(self) -> list[TriplePattern]:
        return [t for t in self.all_triples() if not t.is_type_triple]


_TOKEN_RE = re.compile(
    r"""
    <[^<>\s]*>                          # IRI ref
  | \?[A-Za-z_][A-Za-z0-9_]*            # variable
  | "(?:[^"\\]|\\.)*"(?:@[A-Za-z-]+|\^\^\S+)?   # literal
  | '(?:[^'\\]|\\.)*'(?:@[A-Za-z-]+|\^\^\S+)?
  | [A-Za-z_][A-Za-z0-9_.-]*:[A-Za-z_0-9][A-Za-z0-9_.-]*   # prefixed name
  | [A-Za-z][A-Za-z0-9_]*               # bare word / keyword
  | [0-9]+(?:\.[0-9]+)?                 # number
  | [{}();,.*=<>!&|+-]                  # punctuation
    """,
    re.VERBOSE,
)

_PREFIX_RE = re.compile(r"(?im)^\s*(?:PREFIX\s+\S+\s+<[^>]*>|BASE\s+<[^>]*>)\s*")

_KEYWORDS_OF_INTEREST = (
    "FILTER", "UNION", "OPTIONAL", "MINUS", "ORDER", "GROUP", "HAVING",
    "LIMIT", "OFFSET", "BIND", "VALUES", "EXISTS",
)


def tokenize(text: str) -> list[str]:
    text = _PREFIX_RE.sub("", text)
    tokens = []
    pos = 0
    for m in _TOKEN_RE.finditer(text):
        between = text[pos:m.start()]
        if between.strip():
            raise SparqlParseError(f"unlexable input near {between.strip()[:30]!r}")
        tokens.append(m.group(0))
        pos = m.end()
    if text[pos:].strip():
        raise SparqlParseError(f"unlexable trailing input {text[pos:].strip()[:30]!r}")
    return tokens


def _term(tok: str) -> Term:
    if tok.startswith("?"):
        return (VAR, tok[1:])
    if tok.startswith("<") and tok.endswith(">"):
        return (IRI, tok[1:-1])
    if tok[0] in "\"'":
        return (LIT, tok)
    if tok == "a":
        return (IRI, "a")
    if ":" in tok:
        return (IRI, tok)
    if re.fullmatch(r"[0-9]+(\.[0-9]+)?", tok):
        return (LIT, tok)
    raise SparqlParseError(f"unexpected term {tok!r}")


class _TokenStream:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise SparqlParseError("unexpected end of query")
        self.i += 1
        return tok

    def expect(self, *options: str) -> str:
        tok = self.next()
        if tok.upper() not in options:
            raise SparqlParseError(f"expected one of {options}, got {tok!r}")
        return tok


def _parse_group(ts: _TokenStream, pq: ParsedQuery, into: list[TriplePattern]) -> None:
    """Parse the contents of a ``{ ... }`` group (opening brace consumed)."""
    while True:
        tok = ts.peek()
        if tok is None:
            raise SparqlParseError("unbalanced braces")
        up = tok.upper()
        if tok == "}":
            ts.next()
            return
        if tok == ".":
            ts.next()
            continue
        if up == "OPTIONAL":
            ts.next()
            pq.keywords.add("OPTIONAL")
            ts.expect("{")
            _parse_group(ts, pq, pq.optional_triples)
            continue
        if up in ("FILTER", "BIND", "VALUES", "MINUS", "UNION"):
            ts.next()
            pq.keywords.add(up)
            _skip_construct(ts)
            continue
        if tok == "{":
            # bare group (usually a UNION branch); parse into the main pattern
            ts.next()
            _parse_group(ts, pq, into)
            if ts.peek() and ts.peek().upper() == "UNION":
                ts.next()
                pq.keywords.add("UNION")
                ts.expect("{")
                _parse_group(ts, pq, into)
            continue
        _parse_statement(ts, into)


def _skip_construct(ts: _TokenStream) -> None:
    """Skip a FILTER(...)/BIND(...)/MINUS{...} style construct."""
    tok = ts.peek()
    if tok is None:
        return
    if tok in ("(", "{"):
        close = ")" if tok == "(" else "}"
        depth = 0
        while True:
            t = ts.next()
            if t in ("(", "{"):
                depth += 1
            elif t in (")", "}"):
                depth -= 1
                if depth == 0:
                    return
    else:
        # keyword followed by a bare expression, e.g. FILTER EXISTS { ... }
        while ts.peek() not in (None, ".", "}"):
            if ts.peek() == "{":
                _skip_construct(ts)
            else:
                ts.next()


def _parse_statement(ts: _TokenStream, into: list[TriplePattern]) -> None:
    """One triple statement, with ';' and ',' continuation lists."""
    subj = _term(ts.next())
    while True:
        pred = _term(ts.next())
        while True:
            obj = _term(ts.next())
            into.append(TriplePattern(subj, pred, obj))
            if ts.peek() == ",":
                ts.next()
                continue
            break
        if ts.peek() == ";":
            ts.next()
            if ts.peek() in (".", "}"):  # dangling semicolon
                break
            continue
        break
    if ts.peek() == ".":
        ts.next()


def parse_query(text: str) -> ParsedQuery:
    tokens = _TokenStream(tokenize(text))
    head = tokens.next().upper()
    if head == "ASK":
        pq = ParsedQuery("ASK", False, None)
    elif head == "SELECT":
        distinct = False
        form = "SELECT"
        projection = None
        # header runs until WHERE or '{'
        while True:
            tok = tokens.peek()
            if tok is None:
                raise SparqlParseError("missing query body")
            up = tok.upper()
            if up == "WHERE" or tok == "{":
                break
            tokens.next()
            if up == "DISTINCT":
                distinct = True
            elif up == "COUNT":
                # projection of a COUNT query is the variable inside the
                # parentheses; COUNT(*) leaves it unset
                form = "COUNT"
                depth = 0
                while tokens.peek() is not None:
                    t = tokens.next()
                    if t == "(":
                        depth += 1
                    elif t == ")":
                        depth -= 1
                        if depth == 0:
                            break
                    elif t.upper() == "DISTINCT":
                        distinct = True
                    elif t.startswith("?") and projection is None:
                        projection = t[1:]
            elif tok.startswith("?") and projection is None and form != "COUNT":
                projection = tok[1:]
        pq = ParsedQuery(form, distinct, projection)
    else:
        raise SparqlParseError(f"unsupported query form {head!r}")

    tok = tokens.next()
    if tok.upper() == "WHERE":
        tok = tokens.next()
    if tok != "{":
        raise SparqlParseError("expected '{' to open query body")
    _parse_group(tokens, pq, pq.triples)

    # solution modifiers after the body
    while tokens.peek() is not None:
        tok = tokens.next().upper()
        if tok == "ORDER":
            pq.keywords.add("ORDER BY")
        elif tok == "GROUP":
            pq.keywords.add("GROUP BY")
        elif tok in ("HAVING", "LIMIT", "OFFSET"):
            pq.keywords.add(tok)
    return pq


# ---------------------------------------------------------------------------
# canonical signatures

def _canonical_render(pq: ParsedQuery, triples: list[TriplePattern]) -> str | None:
    best = None
    for perm in itertools.permutations(triples):
        var_names: dict[str, str] = {}
        pred_names: dict[str, str] = {}
        res_names: dict[str, str] = {}
        cls_names: dict[str, str] = {}

        def var_name(v: str) -> str:
            if pq.projection is not None and v == pq.projection:
                return "P"
            if v not in var_names:
                var_names[v] = f"v{len(var_names)}"
            return var_names[v]

        def named(table: dict, prefix: str, value: str) -> str:
            if value not in table:
                table[value] = f"{prefix}{len(table)}"
            return table[value]

        parts = []
        ok = True
        for t in perm:
            if any(term[0] == LIT for term in t.terms()):
                ok = False
                break
            s = var_name(t.subj[1]) if t.subj[0] == VAR else named(res_names, "r", t.subj[1])
            if t.is_type_triple:
                if t.obj[0] != IRI:
                    ok = False
                    break
                parts.append(f"{s} type {named(cls_names, 'c', t.obj[1])}")
                continue
            if t.pred[0] == VAR:
                p = var_name(t.pred[1])
            else:
                p = named(pred_names, "p", t.pred[1])
            o = var_name(t.obj[1]) if t.obj[0] == VAR else named(res_names, "r", t.obj[1])
            parts.append(f"{s} {p} {o}")
        if not ok:
            return None
        rendered = ";".join(parts)
        if best is None or rendered < best:
            best = rendered
    return best


def canonical_signature(pq: ParsedQuery) -> str | None:
    """Canonical structural signature, or None if the query uses constructs
    outside the template language (FILTER, UNION, literals, ...)."""
    blocked = pq.keywords - {"OPTIONAL"}
    if blocked:
        return None
    triples = pq.all_triples()
    if not triples or len(triples) > 4:
        return None
    body = _canonical_render(pq, triples)
    if body is None:
        return None
    return f"{pq.form}|{body}"


_DUMMY_SLOTS = {
    "r": "urn:slot:r",
    "r2": "urn:slot:r2",
    "p": "urn:slot:p",
    "p2": "urn:slot:p2",
    "class": "urn:slot:class",
}

_OPTIONAL_BLOCK_RE = re.compile(r"\s*OPTIONAL\s*{([^{}]*)}")


def template_expansions(pattern: str) -> list[str]:
    """Concrete query strings for a template pattern: the class-absent form
    (OPTIONAL block removed) and the class-present form (block inlined)."""
    filled = pattern
    for name, dummy in _DUMMY_SLOTS.items():
        filled = filled.replace(f"<{name}>", f"<{dummy}>")
    out = []
    if _OPTIONAL_BLOCK_RE.search(filled):
        out.append(_OPTIONAL_BLOCK_RE.sub("", filled))
        out.append(_OPTIONAL_BLOCK_RE.sub(lambda m: " " + m.group(1).strip() + " . ", filled))
    else:
        out.append(filled)
    return out


def build_signature_index(catalog) -> dict[str, int | None]:
    """signature -> template id; a colliding signature maps to None."""
    index: dict[str, int | None] = {}
    for template in catalog.templates:
        for query in template_expansions(template.pattern):
            sig = canonical_signature(parse_query(query))
            if sig is None:
                raise SparqlParseError(f"template {template.id} pattern does not sign")
            if sig in index and index[sig] != template.id:
                index[sig] = None  # ambiguous between templates
            else:
                index[sig] = template.id
    return index


_signature_cache: dict[int, dict[str, int | None]] = {}


def match_template(sparql: str, catalog) -> int | None:
    """Template id whose canonical signature matches the query, else None."""
    key = id(catalog)
    if key not in _signature_cache:
        _signature_cache[key] = build_signature_index(catalog)
    try:
        pq = parse_query(sparql)
    except SparqlParseError:
        return None
    sig = canonical_signature(pq)
    if sig is None:
        return None
    return _signature_cache[key].get(sig)


# ---------------------------------------------------------------------------
# gold slot extraction

def extract_gold_slots(sparql: str) -> dict[str, set[str]]:
    """IRIs of each slot kind appearing in a gold query's triple patterns."""
    pq = parse_query(sparql)
    resources: set[str] = set()
    predicates: set[str] = set()
    classes: set[str] = set()
    for t in pq.all_triples():
        if t.is_type_triple:
            if t.obj[0] == IRI:
                classes.add(t.obj[1])
            continue
        if t.pred[0] == IRI:
            predicates.add(t.pred[1])
        for term in (t.subj, t.obj):
            if term[0] == IRI:
                resources.add(term[1])
    return {"resources": resources, "predicates": predicates, "classes": classes}
