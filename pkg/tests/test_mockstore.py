import json

import pytest
import requests

from templateqa.mockstore import (
    MockStoreError,
    TripleStore,
    expand_iri,
    serve,
)

NS = "http://example.org/"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


@pytest.fixture
def store():
    r = lambda n: NS + "resource/" + n  # noqa: E731
    p = lambda n: NS + "property/" + n  # noqa: E731
    o = lambda n: NS + "ontology/" + n  # noqa: E731
    triples = [
        (r("A"), p("mayor"), ("uri", r("X"))),
        (r("A"), p("mayor"), ("uri", r("Y"))),
        (r("B"), p("mayor"), ("uri", r("X"))),
        (r("X"), RDF_TYPE, ("uri", o("Person"))),
        (r("A"), p("name"), ("literal", "Avalon")),
    ]
    return TripleStore(triples)


def test_expand_iri_prefixes():
    assert expand_iri("rdf:type") == RDF_TYPE
    assert expand_iri("dbo:mayor") == "http://dbpedia.org/ontology/mayor"


def test_select_distinct(store):
    doc = store.query(
        f"SELECT DISTINCT ?uri WHERE {{ <{NS}resource/A> <{NS}property/mayor> ?uri . }}")
    values = sorted(b["uri"]["value"] for b in doc["results"]["bindings"])
    assert values == [NS + "resource/X", NS + "resource/Y"]


def test_select_join_two_triples(store):
    doc = store.query(
        f"SELECT DISTINCT ?uri WHERE {{ ?uri <{NS}property/mayor> ?m . "
        f"?m <{RDF_TYPE}> <{NS}ontology/Person> . }}")
    values = sorted(b["uri"]["value"] for b in doc["results"]["bindings"])
    assert values == [NS + "resource/A", NS + "resource/B"]


def test_count_distinct(store):
    doc = store.query(
        f"SELECT (COUNT(DISTINCT ?uri) AS ?count) WHERE "
        f"{{ ?uri <{NS}property/mayor> <{NS}resource/X> . }}")
    (binding,) = doc["results"]["bindings"]
    assert binding["count"]["value"] == "2"
    assert binding["count"]["datatype"].endswith("integer")


def test_count_star_counts_solutions(store):
    doc = store.query(
        f"SELECT (COUNT(*) AS ?count) WHERE {{ <{NS}resource/A> <{NS}property/mayor> ?u . }}")
    assert doc["results"]["bindings"][0]["count"]["value"] == "2"


def test_ask_true_false(store):
    q = f"ASK WHERE {{ <{NS}resource/A> <{NS}property/mayor> <{NS}resource/X> . }}"
    assert store.query(q)["boolean"] is True
    q = f"ASK WHERE {{ <{NS}resource/B> <{NS}property/mayor> <{NS}resource/Y> . }}"
    assert store.query(q)["boolean"] is False


def test_optional_extends_but_never_filters(store):
    q = (f"SELECT DISTINCT ?uri WHERE {{ ?uri <{NS}property/mayor> <{NS}resource/X> . "
         f"OPTIONAL {{ ?uri <{RDF_TYPE}> <{NS}ontology/City> }} }}")
    doc = store.query(q)
    values = sorted(b["uri"]["value"] for b in doc["results"]["bindings"])
    assert values == [NS + "resource/A", NS + "resource/B"]


def test_literal_objects(store):
    doc = store.query(f"SELECT ?n WHERE {{ <{NS}resource/A> <{NS}property/name> ?n . }}")
    (binding,) = doc["results"]["bindings"]
    assert binding["n"] == {"type": "literal", "value": "Avalon"}


def test_unsupported_keyword_rejected(store):
    with pytest.raises(MockStoreError):
        store.query(
            f"SELECT ?u WHERE {{ ?u <{NS}property/mayor> ?m . FILTER(?m != ?u) }}")


def test_load_ntriples_round_trip(tmp_path, store):
    path = tmp_path / "s.nt"
    path.write_text(
        f'<{NS}resource/A> <{NS}property/mayor> <{NS}resource/X> .\n'
        f'<{NS}resource/A> <{NS}property/name> "Avalon" .\n'
        f'# a comment line\n'
        f'\n')
    loaded = TripleStore.load_ntriples(path)
    doc = loaded.query(f"SELECT ?n WHERE {{ <{NS}resource/A> <{NS}property/name> ?n . }}")
    assert doc["results"]["bindings"][0]["n"]["value"] == "Avalon"


def test_load_ntriples_reports_line_number(tmp_path):
    path = tmp_path / "s.nt"
    path.write_text(f"<{NS}a> <{NS}b> <{NS}c> .\nthis is not a triple\n")
    with pytest.raises(MockStoreError, match=":2"):
        TripleStore.load_ntriples(path)


def test_http_get_and_post(store):
    with serve(store) as endpoint:
        query = (f"SELECT DISTINCT ?uri WHERE "
                 f"{{ <{NS}resource/A> <{NS}property/mayor> ?uri . }}")
        got = requests.get(endpoint.url, params={"query": query}, timeout=5)
        assert got.status_code == 200
        doc = got.json()
        assert len(doc["results"]["bindings"]) == 2

        posted = requests.post(endpoint.url, data={"query": query}, timeout=5)
        assert posted.json() == doc

        ask = f"ASK WHERE {{ <{NS}resource/A> <{NS}property/mayor> <{NS}resource/X> . }}"
        assert requests.get(endpoint.url, params={"query": ask}, timeout=5).json()[
            "boolean"] is True


def test_http_rejects_bad_query(store):
    with serve(store) as endpoint:
        got = requests.get(endpoint.url, params={"query": "NOT SPARQL"}, timeout=5)
        assert got.status_code >= 400
