"""In-memory triple store with a small SPARQL subset, plus an HTTP endpoint.

Supports exactly the query shapes the templates produce: basic graph
patterns over ground and variable terms, a single OPTIONAL block,
``SELECT [DISTINCT] ?var``, ``SELECT (COUNT([DISTINCT] ?var|*) AS ?alias)``
and ``ASK``.  Results are rendered as ``application/sparql-results+json``
so callers cannot tell it apart from a real endpoint.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .sparql import IRI, LIT, VAR, ParsedQuery, SparqlParseError, TriplePattern, parse_query

log = logging.getLogger(__name__)

XSD_INTEGER = "http://www.w3.org/2001/XMLSchema#integer"

PREFIXES = {
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "owl": "http://www.w3.org/2002/07/owl#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
    "dbo": "http://dbpedia.org/ontology/",
    "dbr": "http://dbpedia.org/resource/",
    "dbp": "http://dbpedia.org/property/",
    "res": "http://dbpedia.org/resource/",
    "foaf": "http://xmlns.com/foaf/0.1/",
}

RDF_TYPE = PREFIXES["rdf"] + "type"

# node kinds inside the store
URI = "uri"
LITERAL = "literal"

Node = tuple[str, str]  # (kind, value)

_NT_LINE_RE = re.compile(
    r"""^\s*
        <(?P<s>[^<>\s]+)>\s+
        <(?P<p>[^<>\s]+)>\s+
        (?: <(?P<o_iri>[^<>\s]+)>
          | "(?P<o_lit>(?:[^"\\]|\\.)*)"(?:@[A-Za-z-]+|\^\^<[^<>\s]+>)?
        )
        \s*\.\s*$""",
    re.VERBOSE,
)

_NT_ESCAPES = {"\\n": "\n", "\\t": "\t", '\\"': '"', "\\\\": "\\", "\\r": "\r"}


class MockStoreError(Exception):
    pass


def _unescape_literal(raw: str) -> str:
    return re.sub(r"\\[ntr\"\\]", lambda m: _NT_ESCAPES[m.group(0)], raw)


def expand_iri(value: str) -> str:
    """Expand a prefixed name against the built-in prefix table."""
    if value == "a":
        return RDF_TYPE
    if "://" in value or value.startswith("urn:"):
        return value
    prefix, _, local = value.partition(":")
    base = PREFIXES.get(prefix)
    if base is None:
        raise MockStoreError(f"unknown prefix {prefix!r} in {value!r}")
    return base + local


class TripleStore:
    """Triples are (subject IRI, predicate IRI, object node)."""

    def __init__(self, triples):
        self.triples: list[tuple[str, str, Node]] = []
        self.by_pred: dict[str, list[tuple[str, Node]]] = {}
        for s, p, o in triples:
            self.triples.append((s, p, o))
            self.by_pred.setdefault(p, []).append((s, o))

    def __len__(self) -> int:
        return len(self.triples)

    @classmethod
    def load_ntriples(cls, path) -> "TripleStore":
        triples = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                m = _NT_LINE_RE.match(stripped)
                if m is None:
                    raise MockStoreError(f"{path}:{lineno}: not an N-Triples statement")
                if m.group("o_iri") is not None:
                    obj: Node = (URI, m.group("o_iri"))
                else:
                    obj = (LITERAL, _unescape_literal(m.group("o_lit")))
                triples.append((m.group("s"), m.group("p"), obj))
        return cls(triples)

    # -- pattern evaluation --------------------------------------------------

    def _match_triple(self, pattern: TriplePattern, binding: dict[str, Node]):
        """Yield extended bindings for one pattern under an existing binding."""

        def resolve(term, positional_kind):
            kind, value = term
            if kind == VAR:
                return binding.get(value)
            if kind == IRI:
                return (URI, expand_iri(value))
            if kind == LIT:
                raw = value
                if raw and raw[0] in "\"'":
                    raw = re.sub(r"(@[A-Za-z-]+|\^\^\S+)$", "", raw)[1:-1]
                return (LITERAL, _unescape_literal(raw))
            raise MockStoreError(f"cannot evaluate {positional_kind} term {term!r}")

        want_s = resolve(pattern.subj, "subject")
        want_p = resolve(pattern.pred, "predicate")
        want_o = resolve(pattern.obj, "object")

        if want_p is not None:
            if want_p[0] != URI:
                return
            rows = [(s, o) for s, o in self.by_pred.get(want_p[1], [])]
        else:
            rows = None  # predicate is an unbound variable: scan everything

        candidates = (
            ((s, want_p[1], o) for s, o in rows) if rows is not None else iter(self.triples)
        )
        for s, p, o in candidates:
            if want_s is not None and want_s != (URI, s):
                continue
            if want_o is not None and want_o != o:
                continue
            extended = dict(binding)
            if pattern.subj[0] == VAR:
                extended[pattern.subj[1]] = (URI, s)
            if pattern.pred[0] == VAR:
                extended[pattern.pred[1]] = (URI, p)
            if pattern.obj[0] == VAR:
                extended[pattern.obj[1]] = o
            yield extended

    def _solve(self, patterns: list[TriplePattern], seeds: list[dict[str, Node]]):
        solutions = seeds
        for pattern in patterns:
            solutions = [ext for b in solutions for ext in self._match_triple(pattern, b)]
            if not solutions:
                break
        return solutions

    def solutions(self, pq: ParsedQuery) -> list[dict[str, Node]]:
        base = self._solve(pq.triples, [{}])
        if not pq.optional_triples or not base:
            return base
        out = []
        for binding in base:
            extensions = self._solve(pq.optional_triples, [binding])
            out.extend(extensions if extensions else [binding])
        return out

    # -- query protocol ------------------------------------------------------

    def query(self, text: str) -> dict:
        """Evaluate a query string; returns sparql-results+json as a dict."""
        try:
            pq = parse_query(text)
        except SparqlParseError as exc:
            raise MockStoreError(f"cannot parse query: {exc}") from exc
        unsupported = pq.keywords - {"OPTIONAL"}
        if unsupported:
            raise MockStoreError(f"unsupported constructs: {sorted(unsupported)}")
        sols = self.solutions(pq)

        if pq.form == "ASK":
            return {"head": {}, "boolean": bool(sols)}

        if pq.form == "COUNT":
            if pq.projection is None:
                n = len(sols)
            else:
                values = [b[pq.projection] for b in sols if pq.projection in b]
                n = len(set(values)) if pq.distinct else len(values)
            return {
                "head": {"vars": ["count"]},
                "results": {
                    "bindings": [
                        {"count": {"type": LITERAL, "datatype": XSD_INTEGER, "value": str(n)}}
                    ]
                },
            }

        if pq.projection is None:
            raise MockStoreError("SELECT query has no projection variable")
        bindings = []
        seen: set[Node] = set()
        for b in sols:
            node = b.get(pq.projection)
            if node is None:
                continue
            if pq.distinct:
                if node in seen:
                    continue
                seen.add(node)
            bindings.append({pq.projection: {"type": node[0], "value": node[1]}})
        return {"head": {"vars": [pq.projection]}, "results": {"bindings": bindings}}


# ---------------------------------------------------------------------------
# HTTP endpoint

class _Handler(BaseHTTPRequestHandler):
    store: TripleStore  # set by serve()

    def _respond(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/sparql-results+json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _run(self, query: str | None) -> None:
        if not query:
            self._respond(400, {"error": "missing query parameter"})
            return
        try:
            self._respond(200, self.store.query(query))
        except MockStoreError as exc:
            self._respond(400, {"error": str(exc)})

    def do_GET(self) -> None:  # noqa: N802 (http.server API)
        params = parse_qs(urlparse(self.path).query)
        self._run(params.get("query", [None])[0])

    def do_POST(self) -> None:  # noqa: N802
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length).decode("utf-8")
        if self.headers.get("Content-Type", "").startswith("application/x-www-form-urlencoded"):
            query = parse_qs(body).get("query", [None])[0]
        else:
            query = body
        self._run(query)

    def log_message(self, fmt, *args):  # route through logging, not stderr
        log.debug("endpoint: " + fmt, *args)


class MockEndpoint:
    def __init__(self, server: ThreadingHTTPServer, thread: threading.Thread):
        self._server = server
        self._thread = thread
        host, port = server.server_address[:2]
        self.url = f"http://{host}:{port}/sparql"

    def close(self) -> None:
        self._server.shutdown()
        self._thread.join(timeout=5)
        self._server.server_close()

    def __enter__(self) -> "MockEndpoint":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def serve(store: TripleStore, host: str = "127.0.0.1", port: int = 0) -> MockEndpoint:
    """Start a background HTTP SPARQL endpoint; port 0 picks a free port."""
    handler = type("BoundHandler", (_Handler,), {"store": store})
    server = ThreadingHTTPServer((host, port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return MockEndpoint(server, thread)
