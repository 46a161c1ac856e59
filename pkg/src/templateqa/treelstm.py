"""Child-sum Tree-LSTM template classifier.

Forward composes each node's state from its input vector and the summed
hidden states of its children, with one forget gate per child; the root
hidden state feeds a softmax head over template classes.  Training follows
the reference recipe: Adam over mini-batches of 25, explicit L2 term in the
loss, inverted dropout on the input vectors and the root state, and a
stepwise learning-rate decay of 0.25 every 2 epochs.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import NonFiniteError, Tape, Tensor, init_uniform, softmax_np
from .conllu import DependencyTree, ParsedQuestion
from .features import EmbeddingStore, FeatureVariant, Vocabularies, static_features

GATES = ("i", "f", "o", "u")
WEIGHT_KEYS = tuple(f"W_{g}" for g in GATES) + tuple(f"U_{g}" for g in GATES) + ("W_s",)
BIAS_KEYS = tuple(f"b_{g}" for g in GATES) + ("b_s",)
PARAM_ORDER = tuple(
    k for g in GATES for k in (f"W_{g}", f"U_{g}", f"b_{g}")
) + ("W_s", "b_s")

MODEL_FORMAT = "templateqa-model"
MODEL_VERSION = 1


class ModelError(Exception):
    pass


@dataclass
class TrainConfig:
    epochs: int = 7
    batch_size: int = 25
    learning_rate: float = 1e-2
    weight_decay: float = 2.25e-3  # L2 lambda of the loss
    embed_learning_rate: float = 1e-2
    dropout: float = 0.2
    lr_step_epochs: int = 2
    lr_decay: float = 0.25
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 1
    u_activation: str = "tanh"  # "sigmoid" preserves the printed gate variant
    freeze_embeddings: bool = False
    jobs: int = 1

    def validate(self) -> None:
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ModelError("epochs and batch size must be positive")
        if not (0.0 <= self.dropout < 1.0):
            raise ModelError("dropout must be in [0, 1)")
        if self.u_activation not in ("tanh", "sigmoid"):
            raise ModelError(f"unknown u_activation {self.u_activation!r}")

    def lr_at_epoch(self, epoch: int) -> float:
        """Learning rate for a 1-based epoch number."""
        steps = (epoch - 1) // self.lr_step_epochs
        return self.learning_rate * self.lr_decay**steps

    def embed_lr_at_epoch(self, epoch: int) -> float:
        steps = (epoch - 1) // self.lr_step_epochs
        return self.embed_learning_rate * self.lr_decay**steps


class TreeLstmParams:
    """All gate matrices W/U/b, the softmax head, and the optional trainable
    embedding table."""

    def __init__(self, arrays: dict[str, np.ndarray], input_dim: int, hidden: int,
                 n_classes: int, u_activation: str = "tanh"):
        self.arrays = arrays
        self.input_dim = input_dim
        self.hidden = hidden
        self.n_classes = n_classes
        self.u_activation = u_activation

    @classmethod
    def init(cls, input_dim: int, hidden: int, n_classes: int, seed: int,
             embedding_table: np.ndarray | None = None,
             u_activation: str = "tanh") -> "TreeLstmParams":
        rng = np.random.default_rng(seed)
        arrays: dict[str, np.ndarray] = {}
        for g in GATES:
            arrays[f"W_{g}"] = init_uniform(rng, hidden, input_dim)
            arrays[f"U_{g}"] = init_uniform(rng, hidden, hidden)
            arrays[f"b_{g}"] = np.zeros(hidden)
        arrays["W_s"] = init_uniform(rng, n_classes, hidden)
        arrays["b_s"] = np.zeros(n_classes)
        if embedding_table is not None:
            arrays["E"] = np.array(embedding_table, dtype=np.float64)
        return cls(arrays, input_dim, hidden, n_classes, u_activation)

    @property
    def embedding_dim(self) -> int:
        return self.arrays["E"].shape[1] if "E" in self.arrays else 0

    def trainable_keys(self, freeze_embeddings: bool = False) -> tuple[str, ...]:
        keys = PARAM_ORDER
        if "E" in self.arrays and not freeze_embeddings:
            keys = keys + ("E",)
        return keys

    def l2_norm_sq(self) -> float:
        """Sum of squares over weight matrices (biases and embeddings excluded)."""
        return float(sum(np.sum(self.arrays[k] ** 2) for k in WEIGHT_KEYS))

    def copy(self) -> "TreeLstmParams":
        return TreeLstmParams(
            {k: v.copy() for k, v in self.arrays.items()},
            self.input_dim, self.hidden, self.n_classes, self.u_activation,
        )


@dataclass
class Prediction:
    probs: np.ndarray
    ranked: list[int]  # template ids by descending probability, ties by id

    def top(self, k: int) -> list[int]:
        return self.ranked[:k]


@dataclass
class VectorizedExample:
    tree: DependencyTree
    token_ids: list[int]  # -1 for out-of-vocabulary; empty if variant has no embedding
    static: np.ndarray  # (static_dim, n) one-hot feature columns
    label: int | None = None  # dense class index
    qid: str | None = None


def token_row_index(tokens: list[str]) -> dict[str, int]:
    return {t: i for i, t in enumerate(tokens)}


def lookup_token(token: str, index: dict[str, int]) -> int:
    """Verbatim first, lowercased fallback, -1 when absent."""
    i = index.get(token)
    if i is None:
        i = index.get(token.lower(), -1)
    return i


def vectorize_example(
    q: ParsedQuestion,
    variant: FeatureVariant,
    vocab: Vocabularies,
    token_index: dict[str, int] | None = None,
    label: int | None = None,
) -> VectorizedExample:
    static = static_features(q, variant, vocab)
    if variant.uses_embedding:
        if token_index is None:
            raise ModelError(f"variant {variant.value} needs a token index")
        ids = [lookup_token(t.surface, token_index) for t in q.tokens]
    else:
        ids = []
    return VectorizedExample(q.tree, ids, static, label, q.qid)


# ---------------------------------------------------------------------------
# forward / loss

def _gate_pre(tape: Tape, xcol: Tensor, u_term: Tensor | None, bias: Tensor) -> Tensor:
    pre = tape.add(xcol, bias)
    if u_term is not None:
        pre = tape.add(pre, u_term)
    return pre


def forward(
    tape: Tape,
    tree: DependencyTree,
    x_columns: Tensor,
    pt: dict[str, Tensor],
    u_activation: str = "tanh",
) -> dict[int, tuple[Tensor, Tensor]]:
    """Run the tree transition over input columns (input_dim, n).

    Returns per-node (h, c) tensors; nodes are processed children first.
    The per-node W x_j products are batched as one matmul per gate.
    """
    if x_columns.shape[1] != len(tree):
        raise ModelError(f"{x_columns.shape[1]} input columns for {len(tree)} nodes")
    wx = {g: tape.matmul(pt[f"W_{g}"], x_columns) for g in GATES}
    squash = tape.tanh if u_activation == "tanh" else tape.sigmoid
    states: dict[int, tuple[Tensor, Tensor]] = {}
    for j in tree.topological_order():
        kids = tree.children_of(j)
        xi = tape.col(wx["i"], j - 1)
        xf = tape.col(wx["f"], j - 1)
        xo = tape.col(wx["o"], j - 1)
        xu = tape.col(wx["u"], j - 1)
        if kids:
            h_tilde = tape.add_n([states[k][0] for k in kids])
            i_gate = tape.sigmoid(_gate_pre(tape, xi, tape.matmul(pt["U_i"], h_tilde), pt["b_i"]))
            o_gate = tape.sigmoid(_gate_pre(tape, xo, tape.matmul(pt["U_o"], h_tilde), pt["b_o"]))
            u_cand = squash(_gate_pre(tape, xu, tape.matmul(pt["U_u"], h_tilde), pt["b_u"]))
            forgets = []
            for k in kids:
                f_gate = tape.sigmoid(
                    _gate_pre(tape, xf, tape.matmul(pt["U_f"], states[k][0]), pt["b_f"])
                )
                forgets.append(tape.mul(f_gate, states[k][1]))
            c = tape.add(tape.mul(i_gate, u_cand), tape.add_n(forgets))
        else:
            i_gate = tape.sigmoid(_gate_pre(tape, xi, None, pt["b_i"]))
            o_gate = tape.sigmoid(_gate_pre(tape, xo, None, pt["b_o"]))
            u_cand = squash(_gate_pre(tape, xu, None, pt["b_u"]))
            c = tape.mul(i_gate, u_cand)
        h = tape.mul(o_gate, tape.tanh(c))
        states[j] = (h, c)
    return states


def _input_columns(
    tape: Tape,
    example: VectorizedExample,
    pt: dict[str, Tensor],
    params: TreeLstmParams,
) -> Tensor:
    if example.token_ids:
        emb = tape.embed_columns(pt["E"], example.token_ids)
        if example.static.shape[0] > 0:
            return tape.concat([emb, tape.leaf(example.static)], axis=0)
        return emb
    return tape.leaf(example.static)


def run_example(
    params: TreeLstmParams,
    example: VectorizedExample,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
    gold: int | None = None,
    weight_decay: float = 0.0,
    freeze_embeddings: bool = False,
):
    """One forward (and backward, when ``gold`` is given) pass.

    Returns (probs, loss, grads); loss and grads are None in inference mode.
    Dropout is applied to the input columns and the root hidden state only
    when a gold label is supplied (training mode).
    """
    tape = Tape()
    keys = params.trainable_keys(freeze_embeddings)
    pt = {k: tape.leaf(params.arrays[k]) for k in params.arrays}
    x = _input_columns(tape, example, pt, params)
    training = gold is not None
    if training and dropout > 0.0:
        if rng is None:
            raise ModelError("dropout requires an rng")
        mask = (rng.random(x.shape) >= dropout) / (1.0 - dropout)
        x = tape.mul(x, tape.leaf(mask))
    states = forward(tape, example.tree, x, pt, params.u_activation)
    h_root = states[example.tree.root][0]
    if training and dropout > 0.0:
        mask = (rng.random(h_root.shape) >= dropout) / (1.0 - dropout)
        h_root = tape.mul(h_root, tape.leaf(mask))
    logits = tape.add(tape.matmul(pt["W_s"], h_root), pt["b_s"])
    probs = softmax_np(logits.value)
    if not training:
        return probs, None, None
    log_probs = tape.log_softmax(logits)
    loss_t = tape.neg(tape.pick(log_probs, gold))
    tape.backward(loss_t)
    loss = float(loss_t.value)
    grads = {k: (pt[k].grad if pt[k].grad is not None else np.zeros_like(params.arrays[k]))
             for k in keys}
    if weight_decay > 0.0:
        loss += 0.5 * weight_decay * params.l2_norm_sq()
        for k in WEIGHT_KEYS:
            grads[k] = grads[k] + weight_decay * params.arrays[k]
    return probs, loss, grads


def predict(root_probs: np.ndarray, catalog_ids: list[int]) -> Prediction:
    if len(root_probs) != len(catalog_ids):
        raise ModelError(f"{len(root_probs)} probs for {len(catalog_ids)} templates")
    order = sorted(range(len(catalog_ids)), key=lambda i: (-root_probs[i], catalog_ids[i]))
    return Prediction(root_probs, [catalog_ids[i] for i in order])


def predict_example(params: TreeLstmParams, example: VectorizedExample,
                    catalog_ids: list[int]) -> Prediction:
    probs, _, _ = run_example(params, example)
    return predict(probs, catalog_ids)


# ---------------------------------------------------------------------------
# training

class _Adam:
    def __init__(self, shapes: dict[str, tuple], beta1: float, beta2: float, eps: float):
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def step(self, arrays: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             lr_of) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k, g in grads.items():
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            mhat = self.m[k] / (1 - b1**self.t)
            vhat = self.v[k] / (1 - b2**self.t)
            arrays[k] -= lr_of(k) * mhat / (np.sqrt(vhat) + self.eps)


def _batch_grads(params, batch, config, rng, jobs):
    results = []
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        # per-example dropout streams are pre-drawn so the result is
        # independent of scheduling
        seeds = [int(rng.integers(2**62)) for _ in batch]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(
                    run_example, params, ex,
                    dropout=config.dropout, rng=np.random.default_rng(seed),
                    gold=ex.label, weight_decay=config.weight_decay,
                    freeze_embeddings=config.freeze_embeddings,
                )
                for ex, seed in zip(batch, seeds)
            ]
            results = [f.result() for f in futures]
    else:
        for ex in batch:
            results.append(run_example(
                params, ex, dropout=config.dropout, rng=rng, gold=ex.label,
                weight_decay=config.weight_decay,
                freeze_embeddings=config.freeze_embeddings,
            ))
    total: dict[str, np.ndarray] = {}
    loss_sum = 0.0
    for _, loss, grads in results:
        loss_sum += loss
        for k, g in grads.items():
            if k in total:
                total[k] += g
            else:
                total[k] = g.copy()
    n = len(batch)
    for k in total:
        total[k] /= n
    return loss_sum / n, total


def evaluate_accuracy(params: TreeLstmParams, examples: list[VectorizedExample],
                      catalog_ids: list[int], ks=(1, 2), jobs: int = 1) -> dict[int, float]:
    """Top-k accuracy over dense-labelled examples."""
    if not examples:
        raise ModelError("empty evaluation set")
    hits = {k: 0 for k in ks}
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            preds = list(pool.map(
                lambda ex: predict_example(params, ex, catalog_ids), examples))
    else:
        preds = [predict_example(params, ex, catalog_ids) for ex in examples]
    for ex, pred in zip(examples, preds):
        gold_id = catalog_ids[ex.label]
        for k in ks:
            if gold_id in pred.top(k):
                hits[k] += 1
    return {k: hits[k] / len(examples) for k in ks}


def train(
    train_set: list[VectorizedExample],
    config: TrainConfig,
    catalog_ids: list[int],
    input_dim: int,
    hidden: int = 150,
    embedding_table: np.ndarray | None = None,
    eval_set: list[VectorizedExample] | None = None,
    log_fn=None,
) -> tuple[TreeLstmParams, list[dict]]:
    config.validate()
    if not train_set:
        raise ModelError("empty training set")
    params = TreeLstmParams.init(
        input_dim, hidden, len(catalog_ids), config.seed,
        embedding_table=embedding_table, u_activation=config.u_activation,
    )
    keys = params.trainable_keys(config.freeze_embeddings)
    adam = _Adam({k: params.arrays[k].shape for k in keys},
                 config.beta1, config.beta2, config.epsilon)
    rng = np.random.default_rng(config.seed + 1)
    log: list[dict] = []
    for epoch in range(1, config.epochs + 1):
        lr = config.lr_at_epoch(epoch)
        embed_lr = config.embed_lr_at_epoch(epoch)
        order = rng.permutation(len(train_set))
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[i] for i in order[start:start + config.batch_size]]
            loss, grads = _batch_grads(params, batch, config, rng, config.jobs)
            if not np.isfinite(loss):
                raise NonFiniteError(f"non-finite loss in epoch {epoch}")
            adam.step(params.arrays, grads,
                      lr_of=lambda k: embed_lr if k == "E" else lr)
            epoch_loss += loss
            n_batches += 1
        entry = {"epoch": epoch, "lr": lr, "train_loss": epoch_loss / n_batches}
        if eval_set:
            acc = evaluate_accuracy(params, eval_set, catalog_ids, jobs=config.jobs)
            entry["test_acc"] = acc[1]
            entry["test_acc_top2"] = acc[2]
        log.append(entry)
        if log_fn is not None:
            log_fn(entry)
    return params, log


# ---------------------------------------------------------------------------
# model bundle io
#
# Byte layout: one JSON header line (sorted keys, '\n'-terminated) describing
# dims, variant, vocabulary snapshot and the parameter list, followed by the
# raw little-endian float64 buffers of each parameter, row-major, in header
# order.

def save_model(
    path,
    params: TreeLstmParams,
    vocab: Vocabularies,
    variant: FeatureVariant,
    catalog_ids: list[int],
    tokens: list[str] | None = None,
) -> None:
    names = list(PARAM_ORDER) + (["E"] if "E" in params.arrays else [])
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "input_dim": params.input_dim,
        "hidden": params.hidden,
        "n_classes": params.n_classes,
        "u_activation": params.u_activation,
        "variant": variant.value,
        "catalog_ids": list(catalog_ids),
        "vocab": vocab.to_dict(),
        "vocab_hash": vocab.hash(),
        "tokens": tokens or [],
        "params": [{"name": n, "shape": list(params.arrays[n].shape)} for n in names],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for n in names:
            fh.write(np.ascontiguousarray(params.arrays[n], dtype="<f8").tobytes())


def load_model(path, expected_vocab_hash: str | None = None):
    """Returns (params, vocab, variant, catalog_ids, tokens)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise ModelError(f"{path}: not a model bundle") from None
        if header.get("format") != MODEL_FORMAT:
            raise ModelError(f"{path}: not a model bundle")
        if header.get("version") != MODEL_VERSION:
            raise ModelError(f"{path}: unsupported bundle version {header.get('version')}")
        if expected_vocab_hash is not None and header["vocab_hash"] != expected_vocab_hash:
            raise ModelError(f"{path}: VOCAB_MISMATCH")
        arrays = {}
        for spec in header["params"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ModelError(f"{path}: truncated parameter {spec['name']}")
            arrays[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise ModelError(f"{path}: trailing bytes after parameters")
    params = TreeLstmParams(
        arrays, header["input_dim"], header["hidden"], header["n_classes"],
        header["u_activation"],
    )
    vocab = Vocabularies.from_dict(header["vocab"])
    variant = FeatureVariant(header["variant"])
    if variant.uses_embedding and "E" not in arrays:
        raise ModelError(f"{path}: variant {variant.value} bundle lacks embedding table")
    return params, vocab, variant, [int(i) for i in header["catalog_ids"]], header["tokens"]
