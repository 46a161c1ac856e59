"""Shared fixtures: the deterministic benchmark corpus and trained models.

The benchmark and the two trained classifiers (full feature variant and the
POS-only baseline) are session-scoped because training takes on the order of
a minute each; every test that needs a model reuses the same bundle.
"""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest

from templateqa.catalog import load_catalog
from templateqa.classify import ModelBundle
from templateqa.conllu import read_conllu
from templateqa.dataset import apply_merge, load_lcquad, split_train_test
from templateqa.features import FeatureVariant, Vocabularies, load_embeddings
from templateqa.synth import write_benchmark
from templateqa.treelstm import (
    TrainConfig,
    save_model,
    token_row_index,
    train,
    vectorize_example,
)


@pytest.fixture(scope="session")
def bench_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    write_benchmark(out, seed=13)
    return out


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture(scope="session")
def corpus(bench_dir, catalog):
    records = load_lcquad(bench_dir / "lcquad.json")
    kept, dropped = apply_merge(records, catalog)
    train_recs, test_recs = split_train_test(kept, 0.8, seed=0)
    parse_of = {q.qid: q for q in read_conllu(bench_dir / "lcquad.conllu")}
    return SimpleNamespace(
        records=records, kept=kept, dropped=dropped,
        train=train_recs, test=test_recs, parse_of=parse_of,
    )


def train_variant(bench_dir, corpus, catalog, variant_name, model_path,
                  config=None, limit=None):
    """Train one feature variant on the benchmark and save the bundle."""
    variant = FeatureVariant(variant_name)
    train_recs = corpus.train[:limit] if limit else corpus.train
    vocab = Vocabularies.build([corpus.parse_of[r.qid] for r in train_recs])
    if variant.uses_embedding:
        emb = load_embeddings(bench_dir / "embeddings.vec")
        tokens = sorted(emb.table)
        table = np.stack([emb.table[t] for t in tokens])
        input_dim = variant.dimension(vocab, emb.dimension)
    else:
        tokens, table = [], None
        input_dim = variant.dimension(vocab)
    token_index = token_row_index(tokens)

    def vex(recs):
        return [
            vectorize_example(corpus.parse_of[r.qid], variant, vocab,
                              token_index, label=catalog.label_index(r.template_id))
            for r in recs
        ]

    train_set = vex(train_recs)
    test_set = vex(corpus.test)
    params, log = train(
        train_set, config or TrainConfig(), catalog.ids, input_dim,
        embedding_table=table, eval_set=test_set,
    )
    save_model(model_path, params, vocab, variant, catalog.ids, tokens=tokens)
    return SimpleNamespace(
        params=params, log=log, vocab=vocab, tokens=tokens, variant=variant,
        train_set=train_set, test_set=test_set, input_dim=input_dim,
        path=model_path,
    )


@pytest.fixture(scope="session")
def trained_full(bench_dir, corpus, catalog, tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "full.bin"
    return train_variant(bench_dir, corpus, catalog, "emb-pos-rels-chars", path)


@pytest.fixture(scope="session")
def trained_pos(bench_dir, corpus, catalog, tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "pos.bin"
    return train_variant(bench_dir, corpus, catalog, "pos", path)


@pytest.fixture(scope="session")
def full_bundle(trained_full, catalog):
    return ModelBundle.load(trained_full.path, catalog)
