import math

import pytest

from templateqa.catalog import Slot, Template, TemplateCatalog
from templateqa.classify import ModelBundle, answer_type, classify, hypotheses_json
from templateqa.conllu import read_conllu


def test_classify_full_ranked_distribution(bench_dir, full_bundle, catalog):
    q = read_conllu(bench_dir / "qa.conllu")[0]
    hyps = classify(q, full_bundle)
    assert len(hyps) == catalog.n_templates
    assert [h.rank for h in hyps] == list(range(1, 16))
    probs = [h.probability for h in hyps]
    assert probs == sorted(probs, reverse=True)
    assert math.isclose(sum(probs), 1.0, rel_tol=1e-9)
    assert {h.template_id for h in hyps} == set(catalog.ids)


def test_bundle_rejects_catalog_mismatch(trained_full):
    t = Template(1, "ENTITY", "SELECT DISTINCT ?uri WHERE { <r> <p> ?uri . }",
                 (Slot("r", "RESOURCE", True), Slot("p", "PREDICATE", True)))
    other = TemplateCatalog([t], {1: 1})
    with pytest.raises(ValueError, match="templates"):
        ModelBundle.load(trained_full.path, other)


def test_answer_type(catalog):
    assert answer_type(2, catalog) == "ENTITY"
    assert answer_type(151, catalog) == "BOOLEAN"


def test_hypotheses_json_truncates(bench_dir, full_bundle):
    q = read_conllu(bench_dir / "qa.conllu")[0]
    doc = hypotheses_json(q.qid, classify(q, full_bundle), k=2)
    assert doc["qid"] == q.qid
    assert len(doc["hypotheses"]) == 2
