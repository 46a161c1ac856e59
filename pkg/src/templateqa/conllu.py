"""Ingestion of POS-tagged dependency parses.

Questions arrive pre-parsed, either as CoNLL-U files produced offline or as
the same payload from a parse server over HTTP.  Only four columns are used:
ID, FORM, XPOS, HEAD and DEPREL.  A ``# qid = <id>`` comment line binds a
sentence block to its question record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import requests


class ConlluError(Exception):
    """Sentence-level parse error; message carries the offending block."""


@dataclass(frozen=True)
class Token:
    index: int  # 1-based
    surface: str
    pos: str
    rel: str
    head: int  # 0 = root


@dataclass
class DependencyTree:
    nodes: list[Token]
    children: list[list[int]]  # children[i] holds 1-based child indices of node i+1
    root: int  # 1-based index of the root node

    def __len__(self) -> int:
        return len(self.nodes)

    def children_of(self, index: int) -> list[int]:
        return self.children[index - 1]

    def topological_order(self) -> list[int]:
        """Children-before-parents order (post-order from the root)."""
        order: list[int] = []
        stack = [(self.root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
            else:
                stack.append((node, True))
                for child in self.children_of(node):
                    stack.append((child, False))
        return order


@dataclass
class ParsedQuestion:
    qid: str | None
    tokens: list[Token]
    tree: DependencyTree = field(init=False)

    def __post_init__(self):
        self.tree = build_tree(self.tokens)

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def text(self) -> str:
        return " ".join(self.surfaces)


def build_tree(tokens: list[Token]) -> DependencyTree:
    n = len(tokens)
    if n == 0:
        raise ConlluError("empty token list")
    roots = [t.index for t in tokens if t.head == 0]
    if len(roots) != 1:
        raise ConlluError(f"expected exactly one root, found {len(roots)}")
    children: list[list[int]] = [[] for _ in range(n)]
    for t in tokens:
        if t.index < 1 or t.index > n:
            raise ConlluError(f"token index {t.index} out of range")
        if t.head == t.index:
            raise ConlluError(f"token {t.index} is its own head (CYCLE)")
        if t.head < 0 or t.head > n:
            raise ConlluError(f"token {t.index} head {t.head} out of range")
        if t.head != 0:
            children[t.head - 1].append(t.index)
    tree = DependencyTree(list(tokens), children, roots[0])
    # reachability doubles as a cycle check: every node must be visited once
    seen = tree.topological_order()
    if len(seen) != n or len(set(seen)) != n:
        raise ConlluError("parse graph is cyclic or disconnected")
    return tree


def _parse_block(lines: list[str], qid: str | None) -> ParsedQuestion:
    tokens = []
    seen_ids = set()
    for line in lines:
        cols = line.split("\t")
        if len(cols) < 8:
            raise ConlluError(f"short CoNLL-U line: {line!r}")
        tid_s, form, xpos, head_s, rel = cols[0], cols[1], cols[4], cols[6], cols[7]
        if "-" in tid_s or "." in tid_s:
            continue  # multiword-token / empty-node lines are not tree nodes
        try:
            tid = int(tid_s)
            head = int(head_s)
        except ValueError:
            raise ConlluError(f"non-integer ID/HEAD in line: {line!r}") from None
        if tid in seen_ids:
            raise ConlluError(f"duplicate token id {tid}")
        seen_ids.add(tid)
        tokens.append(Token(tid, form, xpos, rel, head))
    try:
        return ParsedQuestion(qid, tokens)
    except ConlluError as exc:
        raise ConlluError(f"sentence {qid or '<anonymous>'}: {exc}") from None


def iter_conllu(stream, on_error: str = "raise"):
    """Yield ParsedQuestion per sentence block.  ``on_error='skip'`` drops
    malformed blocks (the qid and reason are collected on the generator)."""
    lines: list[str] = []
    qid = None
    for raw in stream:
        line = raw.rstrip("\n")
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("qid"):
                qid = body.split("=", 1)[1].strip()
            continue
        if not line.strip():
            if lines:
                yield _parse_block(lines, qid)
                lines, qid = [], None
            continue
        lines.append(line)
    if lines:
        yield _parse_block(lines, qid)


def read_conllu(path) -> list[ParsedQuestion]:
    with open(path, encoding="utf-8") as fh:
        return list(iter_conllu(fh))


def write_conllu(questions: list[ParsedQuestion], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in questions:
            if q.qid is not None:
                fh.write(f"# qid = {q.qid}\n")
            for t in q.tokens:
                fh.write(f"{t.index}\t{t.surface}\t_\t_\t{t.pos}\t_\t{t.head}\t{t.rel}\t_\t_\n")
            fh.write("\n")


class ParseServerClient:
    """POST plain text to a parse server, receive CoNLL-U back."""

    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url
        self.timeout = timeout

    def parse(self, text: str) -> ParsedQuestion:
        resp = requests.post(self.url, data=text.encode("utf-8"), timeout=self.timeout)
        resp.raise_for_status()
        questions = list(iter_conllu(resp.text.splitlines()))
        if not questions:
            raise ConlluError("parse server returned no sentences")
        return questions[0]
