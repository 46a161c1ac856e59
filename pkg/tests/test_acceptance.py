"""Acceptance gate: nine end-to-end checks over the full pipeline.

Each test prints a single PASS/FAIL line (run pytest with ``-s`` to see them
all) and asserts the same condition, so a failing criterion fails the suite.
"""

from __future__ import annotations

import json
import time

import numpy as np
import pytest

from templateqa.autodiff import Tape, grad_check
from templateqa.classify import classify
from templateqa.conllu import ParsedQuestion, Token, read_conllu
from templateqa.dataset import filter_qald, load_qald
from templateqa.evaluate import ConfusionMatrix, accuracy, qa_prf, set_prf
from templateqa.mockstore import TripleStore
from templateqa.querygen import (
    Binding,
    answer_question,
    enumerate_bindings,
    first_viable,
    instantiate,
)
from templateqa.slots import FixtureLinker, SlotCandidates, load_lexicon
from templateqa.treelstm import (
    TrainConfig,
    TreeLstmParams,
    VectorizedExample,
    forward,
    predict_example,
    run_example,
)
from conftest import train_variant


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"CRITERION {num} [{name}]: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    assert ok, line


def _random_tree(rng, n: int):
    heads = [0] + [int(rng.integers(0, j)) + 1 for j in range(1, n)]
    tokens = [Token(j + 1, "w", "T", "d", heads[j]) for j in range(n)]
    return ParsedQuestion(None, tokens).tree


# ---------------------------------------------------------------------------
# 1. gradient check

def test_criterion_1_gradient_check():
    rng = np.random.default_rng(7)
    input_dim, hidden, classes, lam = 5, 4, 3, 0.01
    worst = 0.0
    start = time.monotonic()
    for _ in range(20):
        tree = _random_tree(rng, int(rng.integers(1, 7)))
        params = TreeLstmParams.init(input_dim, hidden, classes,
                                     seed=int(rng.integers(1 << 30)))
        static = rng.normal(size=(input_dim, len(tree)))
        gold = int(rng.integers(classes))
        example = VectorizedExample(tree, [], static, gold)

        def loss_fn(arrays):
            params.arrays.update(arrays)
            _, loss, grads = run_example(params, example, gold=gold,
                                         weight_decay=lam)
            return loss, grads

        report = grad_check(loss_fn, dict(params.arrays), h=1e-5, tol=1e-4)
        worst = max(worst, report.max_rel_err)
    elapsed = time.monotonic() - start
    ok = worst < 1e-4 and elapsed < 10.0
    _report(1, "gradient check", ok,
            f"max rel err {worst:.3g} over 20 instances in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. single-node tree equals a standard LSTM step

def _lstm_step_oracle(x, arrays, hidden):
    """Standard LSTM step from a zero state, written out longhand."""
    sig = lambda z: 1.0 / (1.0 + np.exp(-z))  # noqa: E731
    h_prev = np.zeros(hidden)
    c_prev = np.zeros(hidden)
    i = sig(arrays["W_i"] @ x + arrays["U_i"] @ h_prev + arrays["b_i"])
    f = sig(arrays["W_f"] @ x + arrays["U_f"] @ h_prev + arrays["b_f"])
    o = sig(arrays["W_o"] @ x + arrays["U_o"] @ h_prev + arrays["b_o"])
    g = np.tanh(arrays["W_u"] @ x + arrays["U_u"] @ h_prev + arrays["b_u"])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


def test_criterion_2_single_node_reduction():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        input_dim = int(rng.integers(2, 8))
        hidden = int(rng.integers(2, 8))
        params = TreeLstmParams.init(input_dim, hidden, 3,
                                     seed=int(rng.integers(1 << 30)))
        x = rng.normal(size=input_dim)
        tree = _random_tree(rng, 1)
        tape = Tape()
        pt = {k: tape.leaf(v) for k, v in params.arrays.items()}
        states = forward(tape, tree, tape.leaf(x.reshape(-1, 1)), pt)
        h, c = states[1]
        h_ref, c_ref = _lstm_step_oracle(x, params.arrays, hidden)
        worst = max(worst,
                    float(np.max(np.abs(h.value - h_ref))),
                    float(np.max(np.abs(c.value - c_ref))))
    ok = worst < 1e-12
    _report(2, "single-node LSTM reduction", ok,
            f"max abs diff {worst:.3g} over 50 trees")


# ---------------------------------------------------------------------------
# 3. corpus preparation counts

def test_criterion_3_corpus_counts(corpus, catalog):
    counts = (len(corpus.records), len(corpus.kept), catalog.n_templates,
              len(corpus.train), len(corpus.test))
    ok = counts == (5000, 4920, 15, 3936, 984)
    _report(3, "corpus counts", ok,
            f"total/kept/templates/train/test = {counts}")


# ---------------------------------------------------------------------------
# 4. classification accuracy, full variant vs POS baseline

def test_criterion_4_classification_accuracy(trained_full, trained_pos):
    full = trained_full.log[-1]
    pos = trained_pos.log[-1]
    ok = (full["test_acc"] >= 0.78 and full["test_acc_top2"] >= 0.90
          and full["test_acc"] >= pos["test_acc"])
    _report(4, "classification accuracy", ok,
            f"full acc {full['test_acc']:.3f} top2 {full['test_acc_top2']:.3f}, "
            f"pos acc {pos['test_acc']:.3f}")


# ---------------------------------------------------------------------------
# 5. transfer accuracy bands

@pytest.fixture(scope="module")
def qald_rankings(bench_dir, catalog, full_bundle):
    kept, _ = filter_qald(load_qald(bench_dir / "qald.json"), catalog)
    parse_of = {q.qid: q for q in read_conllu(bench_dir / "qald.conllu")}
    golds, rankings = [], []
    for rec in kept:
        hyps = classify(parse_of[rec.qid], full_bundle)
        rankings.append([h.template_id for h in hyps])
        golds.append(rec.template_id)
    return rankings, golds


def test_criterion_5_transfer_bands(qald_rankings):
    rankings, golds = qald_rankings
    top1 = accuracy(rankings, golds, 1)
    top2 = accuracy(rankings, golds, 2)
    ok = (abs(top1 - 0.618) <= 0.08) and (abs(top2 - 0.786) <= 0.08)
    _report(5, "transfer accuracy", ok,
            f"{len(golds)} questions, top-1 {top1:.3f} (0.618±0.08), "
            f"top-2 {top2:.3f} (0.786±0.08)")


# ---------------------------------------------------------------------------
# 6. accuracy@k is non-decreasing in k

@pytest.fixture(scope="module")
def test_rankings(trained_full, catalog):
    rankings, golds = [], []
    for ex in trained_full.test_set:
        pred = predict_example(trained_full.params, ex, catalog.ids)
        rankings.append(pred.ranked)
        golds.append(catalog.ids[ex.label])
    return rankings, golds


def test_criterion_6_topk_monotone(test_rankings):
    rankings, golds = test_rankings
    accs = [accuracy(rankings, golds, k) for k in range(1, 16)]
    ok = all(a <= b + 1e-15 for a, b in zip(accs, accs[1:]))
    _report(6, "top-k monotone", ok,
            f"accuracy@1..15 from {accs[0]:.3f} to {accs[-1]:.3f}")


# ---------------------------------------------------------------------------
# 7. end-to-end QA on the mock store

class _RecordingStore:
    def __init__(self, store):
        self.store = store
        self.queries = []

    def query(self, text):
        self.queries.append(text)
        return self.store.query(text)


def test_criterion_7_end_to_end_qa(bench_dir, catalog, full_bundle):
    store = TripleStore.load_ntriples(bench_dir / "store.nt")
    lexicon = load_lexicon(bench_dir / "lexicon.json")
    linkers = [FixtureLinker(bench_dir / "fixtures.json")]
    records = json.loads((bench_dir / "qa.json").read_text("utf-8"))
    parse_of = {q.qid: q for q in read_conllu(bench_dir / "qa.conllu")}

    per_template = {}
    pairs = []
    for rec in records:
        per_template[rec["template_id"]] = per_template.get(rec["template_id"], 0) + 1
        result = answer_question(parse_of[rec["qid"]], full_bundle, linkers,
                                 lexicon, store, k=2, text=rec["question"])
        predicted = result.answers.as_set() if result.answers else set()
        pairs.append((predicted, set(rec["answers"])))
    doc = qa_prf(pairs)

    # first_viable must issue queries in exactly enumeration order
    template = catalog[2]
    ns = "http://example.org/"
    candidates = SlotCandidates(
        resources=[], predicates=[ns + "property/p_bad", ns + "property/p_good"])
    from templateqa.slots import EntityCandidate
    candidates.resources = [
        EntityCandidate(ns + "resource/R_bad", "R bad", "FIXTURE", 0.9),
        EntityCandidate(ns + "resource/R_good", "R good", "FIXTURE", 0.8),
    ]
    probe = TripleStore([
        (ns + "resource/R_good", ns + "property/p_good",
         ("uri", ns + "resource/Answer")),
    ])
    recording = _RecordingStore(probe)
    ordered = list(enumerate_bindings(template, candidates))
    hit = first_viable(template, iter(ordered), recording)
    expected = [instantiate(template, b) for b in ordered]
    order_ok = (hit is not None
                and recording.queries == expected[:len(recording.queries)]
                and recording.queries[-1] == instantiate(template, hit[0]))

    ok = (len(records) >= 30
          and all(n >= 2 for n in per_template.values())
          and doc["macro"]["f1"] == 1.0
          and order_ok)
    _report(7, "end-to-end QA", ok,
            f"{len(records)} questions over {len(per_template)} templates, "
            f"macro F1 {doc['macro']['f1']:.3f}, "
            f"query order {'exact' if order_ok else 'violated'}")


# ---------------------------------------------------------------------------
# 8. metric unit truths

def test_criterion_8_metric_truths(test_rankings, catalog):
    prf = set_prf({"a"}, {"a", "b"})
    exact = (prf.precision == 1.0 and prf.recall == 0.5
             and prf.f1 == pytest.approx(2 / 3, abs=0, rel=1e-15))
    empty = set_prf(set(), set()) == type(prf)(1.0, 1.0, 1.0)

    rankings, golds = test_rankings
    cm = ConfusionMatrix.from_pairs(
        catalog.ids, [(g, r[0]) for g, r in zip(golds, rankings)])
    diag = sum(cm.counts[i][i] for i in range(len(cm.labels)))
    cross = diag / cm.total() == accuracy(rankings, golds, 1)

    ok = exact and empty and cross
    _report(8, "metric unit truths", ok,
            f"prf=({prf.precision}, {prf.recall}, {prf.f1:.6f}), "
            f"both-empty={'ok' if empty else 'bad'}, "
            f"diag/N==acc@1={'ok' if cross else 'bad'}")


# ---------------------------------------------------------------------------
# 9. deterministic training

def test_criterion_9_deterministic_training(bench_dir, corpus, catalog, tmp_path):
    config = TrainConfig(epochs=2, jobs=1)
    paths = [tmp_path / "run_a.bin", tmp_path / "run_b.bin"]
    for path in paths:
        train_variant(bench_dir, corpus, catalog, "emb-pos-rels-chars", path,
                      config=TrainConfig(epochs=config.epochs, jobs=1),
                      limit=300)
    a = paths[0].read_bytes()
    b = paths[1].read_bytes()
    ok = a == b and len(a) > 0
    _report(9, "deterministic training", ok,
            f"two runs, {len(a)} bytes each, byte-identical: {a == b}")
