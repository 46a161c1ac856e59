import io

import pytest
from hypothesis import given, strategies as st

from templateqa.conllu import (
    ConlluError,
    DependencyTree,
    ParsedQuestion,
    Token,
    build_tree,
    iter_conllu,
    read_conllu,
    write_conllu,
)

SAMPLE = """\
# qid = Q1
1\tWho\t_\t_\tWP\t_\t2\tnsubj\t_\t_
2\twrote\t_\t_\tVBD\t_\t0\troot\t_\t_
3\tHamlet\t_\t_\tNNP\t_\t2\tobj\t_\t_
4\t?\t_\t_\t.\t_\t2\tpunct\t_\t_

# qid = Q2
1\tHi\t_\t_\tUH\t_\t0\troot\t_\t_
"""


def test_iter_conllu_reads_blocks():
    questions = list(iter_conllu(io.StringIO(SAMPLE)))
    assert [q.qid for q in questions] == ["Q1", "Q2"]
    q1 = questions[0]
    assert q1.surfaces == ["Who", "wrote", "Hamlet", "?"]
    assert q1.text == "Who wrote Hamlet ?"
    assert q1.tree.root == 2


def test_round_trip(tmp_path):
    questions = list(iter_conllu(io.StringIO(SAMPLE)))
    path = tmp_path / "out.conllu"
    write_conllu(questions, path)
    back = read_conllu(path)
    assert len(back) == len(questions)
    for a, b in zip(questions, back):
        assert a.qid == b.qid
        assert a.tokens == b.tokens


def test_topological_order_children_first():
    questions = list(iter_conllu(io.StringIO(SAMPLE)))
    tree = questions[0].tree
    order = tree.topological_order()
    assert sorted(order) == [1, 2, 3, 4]
    seen = set()
    for node in order:
        for child in tree.children_of(node):
            assert child in seen
        seen.add(node)


@given(st.integers(min_value=1, max_value=12), st.randoms(use_true_random=False))
def test_topological_order_random_trees(n, rnd):
    heads = [0] + [rnd.randint(1, j) for j in range(1, n)]
    tokens = [Token(j + 1, "w", "T", "d", heads[j]) for j in range(n)]
    tree = build_tree(tokens)
    order = tree.topological_order()
    assert sorted(order) == list(range(1, n + 1))
    seen = set()
    for node in order:
        assert all(c in seen for c in tree.children_of(node))
        seen.add(node)


def test_no_root_rejected():
    tokens = [Token(1, "a", "T", "d", 2), Token(2, "b", "T", "d", 1)]
    with pytest.raises(ConlluError, match="root"):
        build_tree(tokens)


def test_two_roots_rejected():
    tokens = [Token(1, "a", "T", "d", 0), Token(2, "b", "T", "d", 0)]
    with pytest.raises(ConlluError, match="root"):
        build_tree(tokens)


def test_self_loop_rejected():
    tokens = [Token(1, "a", "T", "d", 0), Token(2, "b", "T", "d", 2)]
    with pytest.raises(ConlluError):
        build_tree(tokens)


def test_cycle_rejected():
    tokens = [Token(1, "a", "T", "d", 0), Token(2, "b", "T", "d", 3),
              Token(3, "c", "T", "d", 2)]
    with pytest.raises(ConlluError, match="cyclic|disconnected"):
        build_tree(tokens)


def test_head_out_of_range_rejected():
    tokens = [Token(1, "a", "T", "d", 9)]
    with pytest.raises(ConlluError):
        build_tree(tokens)


def test_empty_sentence_rejected():
    with pytest.raises(ConlluError, match="empty"):
        build_tree([])


def test_short_line_rejected():
    bad = "1\tWho\tWP\n\n"
    with pytest.raises(ConlluError, match="short"):
        list(iter_conllu(io.StringIO(bad)))


def test_non_integer_head_rejected():
    bad = "1\tWho\t_\t_\tWP\t_\tx\tnsubj\t_\t_\n\n"
    with pytest.raises(ConlluError, match="non-integer"):
        list(iter_conllu(io.StringIO(bad)))


def test_duplicate_id_rejected():
    bad = ("1\ta\t_\t_\tT\t_\t0\troot\t_\t_\n"
           "1\tb\t_\t_\tT\t_\t1\td\t_\t_\n\n")
    with pytest.raises(ConlluError, match="duplicate"):
        list(iter_conllu(io.StringIO(bad)))


def test_multiword_token_lines_skipped():
    text = ("# qid = Q3\n"
            "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "1\tdo\t_\t_\tVB\t_\t0\troot\t_\t_\n"
            "2\tnot\t_\t_\tRB\t_\t1\tadvmod\t_\t_\n\n")
    (q,) = list(iter_conllu(io.StringIO(text)))
    assert q.surfaces == ["do", "not"]
