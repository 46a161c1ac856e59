"""Command-line entry point wiring the full pipeline.

Configuration precedence: command-line flags beat the optional JSON config
file (``--config``), which beats built-in defaults.  All commands exit 0 on
success and 1 with a single ``ERROR: ...`` line on failure; report files
written before a failure are removed.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .autodiff import grad_check
from .catalog import TemplateCatalog, load_catalog
from .classify import ModelBundle, classify, hypotheses_json
from .conllu import read_conllu
from .dataset import apply_merge, filter_qald, load_lcquad, load_qald, split_train_test
from .evaluate import ConfusionMatrix, qa_prf, slot_prf, write_report
from .features import FeatureVariant, Vocabularies, load_embeddings
from .mockstore import TripleStore
from .querygen import answer_question
from .slots import FixtureLinker, SpotlightClient, TagmeClient, load_lexicon
from .sparql import extract_gold_slots
from .treelstm import (
    TrainConfig,
    run_example,
    save_model,
    token_row_index,
    train as train_model,
    vectorize_example,
)

VARIANTS = [v.value for v in FeatureVariant]


class _Config:
    """Flag > config-file > default resolution."""

    def __init__(self, path):
        self.values = {}
        if path:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            if not isinstance(doc, dict):
                raise click.ClickException(f"{path}: config file must be a JSON object")
            self.values = doc

    def get(self, key, flag_value, default=None):
        if flag_value is not None:
            return flag_value
        return self.values.get(key, default)


def _fail(exc: Exception) -> None:
    click.echo(f"ERROR: {type(exc).__name__}: {exc}", err=True)
    sys.exit(1)


@click.group()
@click.option("--config", type=click.Path(exists=True), default=None,
              help="JSON config file supplying defaults for any flag.")
@click.pass_context
def main(ctx, config):
    """Template-classification question answering over a knowledge graph."""
    ctx.obj = _Config(config)


def _load_corpus(dataset_path, catalog: TemplateCatalog):
    """Load either corpus format; returns (records, kind)."""
    with open(dataset_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict) and "questions" in doc:
        records = load_qald(dataset_path)
        kept, _ = filter_qald(records, catalog)
        return kept, "transfer"
    records = load_lcquad(dataset_path)
    kept, _ = apply_merge(records, catalog)
    return kept, "annotated"


def _parse_index(parses_path):
    return {q.qid: q for q in read_conllu(parses_path)}


def _vectorized_split(dataset, parses, embeddings, variant, catalog,
                      split_seed, train_fraction):
    records = load_lcquad(dataset)
    kept, _ = apply_merge(records, catalog)
    train_recs, test_recs = split_train_test(kept, train_fraction, seed=split_seed)
    parse_of = _parse_index(parses)
    missing = [r.qid for r in kept if r.qid not in parse_of]
    if missing:
        raise click.ClickException(
            f"{len(missing)} records lack parses (first: {missing[0]})")
    vocab = Vocabularies.build([parse_of[r.qid] for r in train_recs])
    emb = load_embeddings(embeddings) if variant.uses_embedding else None
    tokens = sorted(emb.table) if emb else []
    token_index = token_row_index(tokens)
    table = np.stack([emb.table[t] for t in tokens]) if emb else None
    input_dim = variant.dimension(vocab, emb.dimension if emb else 0)

    def vex(recs):
        return [
            vectorize_example(parse_of[r.qid], variant, vocab, token_index,
                              label=catalog.label_index(r.template_id))
            for r in recs
        ]

    return vex(train_recs), vex(test_recs), vocab, tokens, table, input_dim


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Split shuffle seed (default 0).")
@click.option("--train-fraction", type=float, default=None)
@click.pass_obj
def preprocess(cfg, dataset, out, seed, train_fraction):
    """Merge template ids, drop unmodelled shapes and write the 80/20 split."""
    try:
        seed = cfg.get("seed", seed, 0)
        fraction = cfg.get("train_fraction", train_fraction, 0.8)
        catalog = load_catalog()
        records = load_lcquad(dataset)
        kept, dropped = apply_merge(records, catalog)
        train_recs, test_recs = split_train_test(kept, fraction, seed=seed)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)

        def dump(name, recs):
            path = out_dir / name
            payload = [
                {"_id": r.qid, "corrected_question": r.question,
                 "sparql_query": r.query, "sparql_template_id": r.original_template_id,
                 "template_id": r.template_id}
                for r in recs
            ]
            path.write_text(json.dumps(payload, indent=1) + "\n", "utf-8")

        dump("train.json", train_recs)
        dump("test.json", test_recs)
        summary = {
            "total": len(records), "kept": len(kept), "dropped": len(dropped),
            "train": len(train_recs), "test": len(test_recs),
            "templates": catalog.n_templates,
        }
        (out_dir / "preprocess.json").write_text(json.dumps(summary, indent=2) + "\n", "utf-8")
        click.echo(json.dumps(summary))
    except click.ClickException:
        raise
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--parses", required=True, type=click.Path(exists=True))
@click.option("--embeddings", type=click.Path(exists=True), default=None)
@click.option("--variant", type=click.Choice(VARIANTS), default=None)
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Parameter init / shuffle seed.")
@click.option("--split-seed", type=int, default=None)
@click.option("--train-fraction", type=float, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--weight-decay", type=float, default=None)
@click.option("--dropout", type=float, default=None)
@click.option("--hidden", type=int, default=None)
@click.option("--u-activation", type=click.Choice(["tanh", "sigmoid"]), default=None)
@click.option("--freeze-embeddings", is_flag=True, default=False)
@click.option("--jobs", type=int, default=None)
@click.option("--out", type=click.Path(), default=None,
              help="Directory for the epoch log and training figure.")
@click.pass_obj
def train(cfg, dataset, parses, embeddings, variant, model_path, seed, split_seed,
          train_fraction, epochs, batch_size, learning_rate, weight_decay, dropout,
          hidden, u_activation, freeze_embeddings, jobs, out):
    """Fit the tree classifier and write the model bundle."""
    try:
        variant = FeatureVariant(cfg.get("variant", variant, "emb-pos-rels-chars"))
        if variant.uses_embedding and not embeddings:
            raise click.ClickException(
                f"variant {variant.value} requires --embeddings")
        config = TrainConfig(
            epochs=cfg.get("epochs", epochs, 7),
            batch_size=cfg.get("batch_size", batch_size, 25),
            learning_rate=cfg.get("learning_rate", learning_rate, 1e-2),
            weight_decay=cfg.get("weight_decay", weight_decay, 2.25e-3),
            dropout=cfg.get("dropout", dropout, 0.2),
            seed=cfg.get("seed", seed, 1),
            u_activation=cfg.get("u_activation", u_activation, "tanh"),
            freeze_embeddings=freeze_embeddings or cfg.get("freeze_embeddings", None, False),
            jobs=cfg.get("jobs", jobs, 1),
        )
        catalog = load_catalog()
        train_set, test_set, vocab, tokens, table, input_dim = _vectorized_split(
            dataset, parses, embeddings, variant, catalog,
            cfg.get("split_seed", split_seed, 0),
            cfg.get("train_fraction", train_fraction, 0.8),
        )
        params, log = train_model(
            train_set, config, catalog.ids, input_dim,
            hidden=cfg.get("hidden", hidden, 150),
            embedding_table=table, eval_set=test_set,
            log_fn=lambda entry: click.echo(json.dumps(entry)),
        )
        save_model(model_path, params, vocab, variant, catalog.ids, tokens=tokens)
        if out:
            from .figures import training_curve

            out_dir = Path(out)
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "training_log.json").write_text(
                json.dumps(log, indent=2) + "\n", "utf-8")
            training_curve(log, out_dir / "training_curve.png")
        click.echo(json.dumps({"model": model_path, "final": log[-1]}))
    except click.ClickException:
        raise
    except Exception as exc:
        _fail(exc)


@main.command("eval-templates")
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--parses", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--split-seed", type=int, default=None)
@click.option("--train-fraction", type=float, default=None)
@click.option("--split", type=click.Choice(["test", "train", "all"]), default=None,
              help="Which part of an annotated corpus to score (default test).")
@click.option("--k", "k_max", type=int, default=None, help="Largest k to report.")
@click.option("--out", required=True, type=click.Path())
@click.pass_obj
def eval_templates(cfg, dataset, parses, model_path, split_seed, train_fraction,
                   split, k_max, out):
    """Top-k accuracy and confusion matrices for a trained classifier."""
    written = []
    try:
        catalog = load_catalog()
        bundle = ModelBundle.load(model_path, catalog)
        records, kind = _load_corpus(dataset, catalog)
        if kind == "annotated":
            which = cfg.get("split", split, "test")
            if which != "all":
                train_recs, test_recs = split_train_test(
                    records,
                    cfg.get("train_fraction", train_fraction, 0.8),
                    seed=cfg.get("split_seed", split_seed, 0),
                )
                records = train_recs if which == "train" else test_recs
        parse_of = _parse_index(parses)
        k_max = cfg.get("k", k_max, catalog.n_templates)
        golds, rankings = [], []
        for rec in records:
            q = parse_of.get(rec.qid)
            if q is None:
                raise click.ClickException(f"no parse for question {rec.qid}")
            hyps = classify(q, bundle)
            rankings.append([h.template_id for h in hyps])
            golds.append(rec.template_id)
        from .evaluate import accuracy

        acc = {k: accuracy(rankings, golds, k) for k in range(1, k_max + 1)}
        confusion = ConfusionMatrix.from_pairs(
            catalog.ids, [(g, r[0]) for g, r in zip(golds, rankings)])
        doc = {
            "dataset": str(dataset), "kind": kind, "questions": len(golds),
            "accuracy": {str(k): round(v, 6) for k, v in acc.items()},
            "per_template": {
                str(t): (None if v is None else round(v, 6))
                for t, v in confusion.per_label_accuracy().items()
            },
        }
        written = write_report(out, doc, confusion=confusion)
        click.echo(json.dumps({"questions": len(golds),
                               "accuracy@1": acc[1], "accuracy@2": acc.get(2)}))
    except click.ClickException:
        raise
    except Exception as exc:
        for path in written:
            Path(path).unlink(missing_ok=True)
        _fail(exc)


def _make_endpoint(endpoint, mock_store):
    if bool(endpoint) == bool(mock_store):
        raise click.ClickException("exactly one of --endpoint / --mock-store is required")
    if endpoint:
        return endpoint
    return TripleStore.load_ntriples(mock_store)


def _make_linkers(fixtures, live_linkers):
    if fixtures:
        return [FixtureLinker(fixtures)]
    if live_linkers:
        return [SpotlightClient(), TagmeClient()]
    raise click.ClickException("--fixtures is required unless --live-linkers is set")


@main.command()
@click.option("--parses", required=True, type=click.Path(exists=True))
@click.option("--qid", default=None, help="Question id inside --parses (default: first).")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", required=True, type=click.Path(exists=True))
@click.option("--fixtures", type=click.Path(exists=True), default=None)
@click.option("--live-linkers", is_flag=True, default=False,
              help="Query the live entity linkers instead of fixtures.")
@click.option("--endpoint", default=None)
@click.option("--mock-store", type=click.Path(exists=True), default=None)
@click.option("--k", type=int, default=None)
@click.option("--budget", type=int, default=None)
@click.pass_obj
def ask(cfg, parses, qid, model_path, lexicon, fixtures, live_linkers, endpoint,
        mock_store, k, budget):
    """Answer one parsed question end to end and print the answer JSON."""
    try:
        bundle = ModelBundle.load(model_path, load_catalog())
        questions = read_conllu(parses)
        if qid is not None:
            matches = [q for q in questions if q.qid == qid]
            if not matches:
                raise click.ClickException(f"no question {qid!r} in {parses}")
            question = matches[0]
        else:
            question = questions[0]
        result = answer_question(
            question, bundle,
            _make_linkers(fixtures, live_linkers),
            load_lexicon(lexicon),
            _make_endpoint(endpoint, mock_store),
            k=cfg.get("k", k, 2),
            budget=cfg.get("budget", budget, 64),
        )
        click.echo(json.dumps(result.to_json()))
    except click.ClickException:
        raise
    except Exception as exc:
        _fail(exc)


@main.command("eval-qa")
@click.option("--dataset", required=True, type=click.Path(exists=True),
              help="JSON array of {qid, question, sparql, answers} records.")
@click.option("--parses", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", required=True, type=click.Path(exists=True))
@click.option("--fixtures", type=click.Path(exists=True), default=None)
@click.option("--live-linkers", is_flag=True, default=False)
@click.option("--endpoint", default=None)
@click.option("--mock-store", type=click.Path(exists=True), default=None)
@click.option("--k", type=int, default=None)
@click.option("--budget", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@click.pass_obj
def eval_qa(cfg, dataset, parses, model_path, lexicon, fixtures, live_linkers,
            endpoint, mock_store, k, budget, out):
    """Answer a QA set end to end and score answers and slots."""
    written = []
    try:
        catalog = load_catalog()
        bundle = ModelBundle.load(model_path, catalog)
        lex = load_lexicon(lexicon)
        linkers = _make_linkers(fixtures, live_linkers)
        store = _make_endpoint(endpoint, mock_store)
        with open(dataset, encoding="utf-8") as fh:
            records = json.load(fh)
        parse_of = _parse_index(parses)
        answer_pairs, results = [], []
        slot_pairs = {"resources": [], "predicates": [], "classes": []}
        kind_of_slot = {"RESOURCE": "resources", "PREDICATE": "predicates",
                        "CLASS": "classes"}
        for rec in records:
            q = parse_of.get(rec["qid"])
            if q is None:
                raise click.ClickException(f"no parse for question {rec['qid']}")
            result = answer_question(
                q, bundle, linkers, lex, store,
                k=cfg.get("k", k, 2), budget=cfg.get("budget", budget, 64),
                text=rec.get("question"),
            )
            results.append(result.to_json())
            predicted = result.answers.as_set() if result.answers else set()
            answer_pairs.append((predicted, set(rec["answers"])))
            gold_slots = extract_gold_slots(rec["sparql"])
            predicted_slots = {"resources": set(), "predicates": set(), "classes": set()}
            if result.binding is not None:
                template = catalog[result.template_id]
                for slot in template.slots:
                    value = result.binding.values.get(slot.name)
                    if value is not None:
                        predicted_slots[kind_of_slot[slot.kind]].add(value)
            for key in slot_pairs:
                slot_pairs[key].append((predicted_slots[key], gold_slots[key]))
        qa_doc = qa_prf(answer_pairs)
        slots_doc = slot_prf(slot_pairs)
        accuracy_doc = {
            "dataset": str(dataset), "questions": len(records),
            "answered": sum(1 for r in results if r["answers"] is not None),
            "macro_f1": qa_doc["macro"]["f1"],
        }
        written = write_report(out, accuracy_doc, qa_doc=qa_doc, slots_doc=slots_doc)
        answers_path = Path(out) / "answers.json"
        answers_path.write_text(json.dumps(results, indent=1) + "\n", "utf-8")
        written.append(answers_path)
        click.echo(json.dumps({"questions": len(records),
                               "macro_f1": qa_doc["macro"]["f1"],
                               "micro_f1": qa_doc["micro"]["f1"]}))
    except click.ClickException:
        raise
    except Exception as exc:
        for path in written:
            Path(path).unlink(missing_ok=True)
        _fail(exc)


@main.command("grad-check")
@click.option("--seed", type=int, default=None)
@click.option("--cases", type=int, default=None, help="Number of random instances.")
@click.pass_obj
def grad_check_cmd(cfg, seed, cases):
    """Check analytic gradients against central finite differences."""
    try:
        from .treelstm import TreeLstmParams
        from .conllu import Token, ParsedQuestion

        seed = cfg.get("seed", seed, 7)
        cases = cfg.get("cases", cases, 20)
        rng = np.random.default_rng(seed)
        worst = None
        for case in range(cases):
            n = int(rng.integers(1, 7))
            heads = [0] + [int(rng.integers(0, j)) + 1 for j in range(1, n)]
            tokens = [Token(j + 1, "w", "T", "d", heads[j] if j else 0)
                      for j in range(n)]
            tree = ParsedQuestion(None, tokens).tree
            input_dim, hidden, classes = 5, 4, 3
            params = TreeLstmParams.init(input_dim, hidden, classes,
                                         seed=int(rng.integers(1 << 30)))
            static = rng.normal(size=(input_dim, n))
            gold = int(rng.integers(classes))
            from .treelstm import VectorizedExample

            example = VectorizedExample(tree, [], static, gold)

            def loss_fn(arrays):
                params.arrays.update(arrays)
                _, loss, grads = run_example(params, example, gold=gold,
                                             weight_decay=0.01)
                return loss, grads

            report = grad_check(loss_fn, dict(params.arrays), h=1e-5, tol=1e-4)
            if worst is None or report.max_rel_err > worst.max_rel_err:
                worst = report
        click.echo(worst.summary())
        sys.exit(0 if worst.passed else 1)
    except SystemExit:
        raise
    except Exception as exc:
        _fail(exc)


@main.command("make-benchmark")
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.pass_obj
def make_benchmark(cfg, out, seed):
    """Generate the deterministic synthetic corpus used by the test suite."""
    try:
        from .synth import write_benchmark

        manifest = write_benchmark(out, seed=cfg.get("seed", seed, 13))
        click.echo(json.dumps(manifest, indent=1))
    except Exception as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
