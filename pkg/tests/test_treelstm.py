import numpy as np
import pytest

from templateqa.conllu import ParsedQuestion, Token
from templateqa.features import FeatureVariant, Vocabularies
from templateqa.treelstm import (
    ModelError,
    TrainConfig,
    TreeLstmParams,
    VectorizedExample,
    load_model,
    lookup_token,
    predict,
    run_example,
    save_model,
    token_row_index,
    train,
    vectorize_example,
)


def _tree(n, heads=None):
    heads = heads or ([0] + [1] * (n - 1))
    tokens = [Token(j + 1, f"w{j}", "T", "d", heads[j]) for j in range(n)]
    return ParsedQuestion(None, tokens).tree


def _example(rng, n=4, input_dim=6, label=0):
    return VectorizedExample(_tree(n), [], rng.normal(size=(input_dim, n)), label)


def test_forward_is_deterministic():
    rng = np.random.default_rng(0)
    params = TreeLstmParams.init(6, 5, 3, seed=1)
    ex = _example(rng)
    p1, _, _ = run_example(params, ex)
    p2, _, _ = run_example(params, ex)
    assert np.array_equal(p1, p2)
    assert np.isclose(p1.sum(), 1.0)


def test_loss_includes_l2_term():
    rng = np.random.default_rng(0)
    params = TreeLstmParams.init(6, 5, 3, seed=1)
    ex = _example(rng)
    _, plain, _ = run_example(params, ex, gold=0)
    _, decayed, _ = run_example(params, ex, gold=0, weight_decay=0.1)
    assert decayed == pytest.approx(plain + 0.05 * params.l2_norm_sq())


def test_l2_excludes_biases_and_embeddings():
    params = TreeLstmParams.init(2, 3, 2, seed=1, embedding_table=np.ones((4, 2)))
    before = params.l2_norm_sq()
    params.arrays["b_i"] += 100.0
    params.arrays["E"] += 100.0
    assert params.l2_norm_sq() == before


def test_dropout_requires_rng_and_only_in_training():
    rng = np.random.default_rng(0)
    params = TreeLstmParams.init(6, 5, 3, seed=1)
    ex = _example(rng)
    with pytest.raises(ModelError, match="rng"):
        run_example(params, ex, dropout=0.5, gold=0)
    # inference ignores dropout entirely
    p1, _, _ = run_example(params, ex, dropout=0.5)
    p2, _, _ = run_example(params, ex)
    assert np.array_equal(p1, p2)


def test_sigmoid_candidate_variant_changes_output():
    rng = np.random.default_rng(0)
    ex = _example(rng)
    tanh = TreeLstmParams.init(6, 5, 3, seed=1, u_activation="tanh")
    sig = TreeLstmParams.init(6, 5, 3, seed=1, u_activation="sigmoid")
    p_tanh, _, _ = run_example(tanh, ex)
    p_sig, _, _ = run_example(sig, ex)
    assert not np.allclose(p_tanh, p_sig)


def test_predict_ranks_by_probability_ties_by_id():
    pred = predict(np.array([0.2, 0.5, 0.2, 0.1]), [3, 1, 2, 8])
    assert pred.ranked == [1, 2, 3, 8]
    assert pred.top(2) == [1, 2]


def test_predict_length_mismatch():
    with pytest.raises(ModelError):
        predict(np.array([0.5, 0.5]), [1, 2, 3])


def test_lr_schedule_steps_every_two_epochs():
    config = TrainConfig()
    lrs = [config.lr_at_epoch(e) for e in range(1, 8)]
    assert lrs == pytest.approx(
        [1e-2, 1e-2, 2.5e-3, 2.5e-3, 6.25e-4, 6.25e-4, 1.5625e-4])


def test_config_validation():
    with pytest.raises(ModelError):
        TrainConfig(epochs=0).validate()
    with pytest.raises(ModelError):
        TrainConfig(dropout=1.0).validate()
    with pytest.raises(ModelError):
        TrainConfig(u_activation="relu").validate()


def test_trainable_keys_freeze_embeddings():
    params = TreeLstmParams.init(2, 3, 2, seed=1, embedding_table=np.ones((4, 2)))
    assert "E" in params.trainable_keys()
    assert "E" not in params.trainable_keys(freeze_embeddings=True)


def test_lookup_token_fallback():
    index = token_row_index(["who", "Paris"])
    assert lookup_token("Who", index) == 0
    assert lookup_token("Paris", index) == 1
    assert lookup_token("unknown", index) == -1


def test_vectorize_example_requires_token_index():
    q = ParsedQuestion("Q", [Token(1, "hi", "UH", "root", 0)])
    vocab = Vocabularies.build([q])
    with pytest.raises(ModelError):
        vectorize_example(q, FeatureVariant.FASTTEXT, vocab)


def _tiny_training_setup(rng, n_examples=30):
    """Two linearly separable classes over 3-node trees."""
    examples = []
    for i in range(n_examples):
        label = i % 2
        base = np.zeros((4, 3))
        base[label] = 1.0
        examples.append(VectorizedExample(
            _tree(3), [], base + 0.05 * rng.normal(size=(4, 3)), label))
    return examples


def test_train_learns_separable_data():
    rng = np.random.default_rng(5)
    examples = _tiny_training_setup(rng)
    config = TrainConfig(epochs=6, batch_size=5, seed=2)
    params, log = train(examples, config, [10, 20], 4, hidden=8,
                        eval_set=examples)
    assert len(log) == 6
    assert log[-1]["test_acc"] == 1.0
    assert log[-1]["train_loss"] < log[0]["train_loss"]


def test_train_rejects_empty_set():
    with pytest.raises(ModelError):
        train([], TrainConfig(), [1, 2], 4)


def test_parallel_batches_match_serial_without_dropout():
    # with dropout off and one epoch the RNG streams stay aligned, so the
    # thread pool must reproduce the serial result exactly
    rng = np.random.default_rng(5)
    examples = _tiny_training_setup(rng, n_examples=20)
    config = dict(epochs=1, batch_size=5, seed=3, dropout=0.0)
    serial, _ = train(examples, TrainConfig(jobs=1, **config), [10, 20], 4, hidden=6)
    parallel, _ = train(examples, TrainConfig(jobs=4, **config), [10, 20], 4, hidden=6)
    for key in serial.arrays:
        assert np.allclose(serial.arrays[key], parallel.arrays[key]), key


def test_parallel_training_reproduces_itself():
    rng = np.random.default_rng(5)
    examples = _tiny_training_setup(rng, n_examples=20)
    config = dict(epochs=2, batch_size=5, seed=3, jobs=4)
    a, _ = train(examples, TrainConfig(**config), [10, 20], 4, hidden=6)
    b, _ = train(examples, TrainConfig(**config), [10, 20], 4, hidden=6)
    for key in a.arrays:
        assert np.array_equal(a.arrays[key], b.arrays[key]), key


def _bundle_fixture(tmp_path):
    q = ParsedQuestion("Q", [Token(1, "hi", "UH", "root", 0)])
    vocab = Vocabularies.build([q])
    table = np.arange(8, dtype=float).reshape(4, 2)
    params = TreeLstmParams.init(5, 3, 2, seed=9, embedding_table=table)
    path = tmp_path / "m.bin"
    save_model(path, params, vocab, FeatureVariant.FASTTEXT_POS_RELS_CHARS,
               [10, 20], tokens=["a", "b", "c", "d"])
    return path, params, vocab


def test_save_load_round_trip(tmp_path):
    path, params, vocab = _bundle_fixture(tmp_path)
    loaded, vocab2, variant, ids, tokens = load_model(path)
    assert variant is FeatureVariant.FASTTEXT_POS_RELS_CHARS
    assert ids == [10, 20]
    assert tokens == ["a", "b", "c", "d"]
    assert vocab2.hash() == vocab.hash()
    for key in params.arrays:
        assert np.array_equal(loaded.arrays[key], params.arrays[key]), key


def test_save_is_byte_stable(tmp_path):
    path1, params, vocab = _bundle_fixture(tmp_path)
    path2 = tmp_path / "m2.bin"
    save_model(path2, params, vocab, FeatureVariant.FASTTEXT_POS_RELS_CHARS,
               [10, 20], tokens=["a", "b", "c", "d"])
    assert path1.read_bytes() == path2.read_bytes()


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"\x00\x01\x02 not a bundle\n")
    with pytest.raises(ModelError, match="not a model bundle"):
        load_model(path)


def test_load_rejects_truncated(tmp_path):
    path, _, _ = _bundle_fixture(tmp_path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-16])
    with pytest.raises(ModelError, match="truncated"):
        load_model(path)


def test_load_rejects_trailing_bytes(tmp_path):
    path, _, _ = _bundle_fixture(tmp_path)
    path.write_bytes(path.read_bytes() + b"x")
    with pytest.raises(ModelError, match="trailing"):
        load_model(path)


def test_load_rejects_vocab_mismatch(tmp_path):
    path, _, _ = _bundle_fixture(tmp_path)
    with pytest.raises(ModelError, match="VOCAB_MISMATCH"):
        load_model(path, expected_vocab_hash="0" * 16)
