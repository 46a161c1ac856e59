import pytest

from templateqa.catalog import load_catalog
from templateqa.sparql import (
    SparqlParseError,
    canonical_signature,
    extract_gold_slots,
    match_template,
    parse_query,
    template_expansions,
)


def test_select_form():
    pq = parse_query("SELECT DISTINCT ?uri WHERE { <http://x/A> <http://x/p> ?uri . }")
    assert pq.form == "SELECT"
    assert pq.distinct
    assert pq.projection == "uri"
    assert len(pq.triples) == 1


def test_count_form_with_distinct():
    pq = parse_query(
        "SELECT (COUNT(DISTINCT ?uri) as ?count) WHERE { ?uri <http://x/p> <http://x/A> . }")
    assert pq.form == "COUNT"
    assert pq.distinct
    assert pq.projection == "uri"


def test_count_star():
    pq = parse_query("SELECT (COUNT(*) AS ?count) WHERE { <http://x/A> <http://x/p> ?o . }")
    assert pq.form == "COUNT"
    assert pq.projection is None


def test_ask_form():
    pq = parse_query("ASK WHERE { <http://x/A> <http://x/p> <http://x/B> . }")
    assert pq.form == "ASK"
    assert pq.projection is None


def test_keywords_detected():
    pq = parse_query(
        "SELECT ?u WHERE { ?u <http://x/p> <http://x/A> . "
        "FILTER(?u != <http://x/B>) } ORDER BY ?u LIMIT 5")
    assert "FILTER" in pq.keywords
    assert "ORDER BY" in pq.keywords
    assert "LIMIT" in pq.keywords


def test_optional_triples_split():
    pq = parse_query(
        "SELECT DISTINCT ?uri WHERE { ?uri <http://x/p> <http://x/A> . "
        "OPTIONAL { ?uri <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/C> } }")
    assert len(pq.triples) == 1
    assert len(pq.optional_triples) == 1
    assert pq.optional_triples[0].is_type_triple


def test_type_triple_shorthand():
    pq = parse_query("SELECT ?u WHERE { ?u a <http://x/C> . }")
    assert pq.triples[0].is_type_triple


def test_malformed_query_raises():
    with pytest.raises(SparqlParseError):
        parse_query("SELECT ?u WHERE { ?u <http://x/p> }")


def test_empty_query_raises():
    with pytest.raises(SparqlParseError):
        parse_query("")


def test_signature_invariant_under_renaming():
    a = canonical_signature(parse_query(
        "SELECT DISTINCT ?uri WHERE { <http://x/A> <http://x/p> ?uri . }"))
    b = canonical_signature(parse_query(
        "SELECT DISTINCT ?x WHERE { <http://y/Other> <http://y/q> ?x . }"))
    assert a == b


def test_signature_differs_across_shapes():
    a = canonical_signature(parse_query(
        "SELECT DISTINCT ?uri WHERE { <http://x/A> <http://x/p> ?uri . }"))
    b = canonical_signature(parse_query(
        "SELECT DISTINCT ?uri WHERE { ?uri <http://x/p> <http://x/A> . }"))
    assert a != b


def test_template_expansions_cover_optional():
    catalog = load_catalog()
    with_opt = [t for t in catalog.templates if t.optional_class_slot is not None]
    assert with_opt
    for t in with_opt:
        assert len(template_expansions(t.pattern)) == 2


def test_match_template_round_trip_all_templates():
    catalog = load_catalog()
    ns = "http://example.org/"
    values = {"r": f"<{ns}r/A>", "p": f"<{ns}p/b>", "r2": f"<{ns}r/C>",
              "p2": f"<{ns}p/d>", "class": f"<{ns}o/K>"}
    for t in catalog.templates:
        for expanded in template_expansions(t.pattern):
            concrete = expanded
            for name, iri in values.items():
                concrete = concrete.replace(f"<{name}>", iri)
            assert match_template(concrete, catalog) == t.id, t.id


def test_match_template_none_for_unknown_shape():
    catalog = load_catalog()
    q = ("SELECT ?u WHERE { ?u <http://x/p> ?v . ?v <http://x/q> ?w . "
         "?w <http://x/r> <http://x/A> . }")
    assert match_template(q, catalog) is None


def test_extract_gold_slots():
    slots = extract_gold_slots(
        "SELECT DISTINCT ?uri WHERE { <http://x/resource/A> <http://x/property/p> ?uri . "
        "?uri <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/ontology/K> . }")
    assert slots["resources"] == {"http://x/resource/A"}
    assert slots["predicates"] == {"http://x/property/p"}
    assert slots["classes"] == {"http://x/ontology/K"}
