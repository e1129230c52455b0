import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphqec.ffield import FieldError, FMat
from graphqec.graph import (
    CodingGraph,
    GraphFormatError,
    check_admissible,
    check_t_error_correcting,
    search_graph,
)

STAR_EDGES = [["i0", "j0", 1], ["i0", "j1", 1], ["i0", "j2", 1], ["j1", "l0", 1], ["j2", "l1", 1]]


def star():
    return CodingGraph.from_edges(2, ["i0"], ["j0", "j1", "j2"], ["l0", "l1"], STAR_EDGES)


def graph_doc(**over):
    obj = {"d": 2, "inputs": ["i0"], "outputs": ["j0", "j1", "j2"], "syndromes": ["l0", "l1"], "edges": STAR_EDGES}
    obj.update(over)
    return obj


def test_json_roundtrip_and_hash():
    g = star()
    again = CodingGraph.from_json(json.dumps(g.to_json()))
    assert again.canonical_json() == g.canonical_json()
    assert again.graph_hash() == g.graph_hash()
    assert len(g.graph_hash()) == 64


@pytest.mark.parametrize(
    "obj",
    [
        graph_doc(edges=STAR_EDGES + [["i0", "j0", 1]]),
        graph_doc(edges=STAR_EDGES + [["j0", "i0", 1]]),
        graph_doc(edges=[["j0", "j0", 1]]),
        graph_doc(edges=[["i0", "j0", 2]]),
        graph_doc(edges=[["i0", "j0", 0]]),
        graph_doc(edges=[["i0", "j0", 1.0]]),
        graph_doc(edges=[["i0", "zz", 1]]),
        graph_doc(edges=[["i0", "j0"]]),
        graph_doc(d=4),
        graph_doc(d="2"),
        graph_doc(outputs=["j0", "i0"]),
        graph_doc(inputs="i0"),
        {"d": 2},
        [1, 2],
    ],
)
def test_malformed_specs_rejected(obj):
    with pytest.raises(GraphFormatError):
        CodingGraph.from_json(obj)


def test_invalid_json_text():
    with pytest.raises(GraphFormatError):
        CodingGraph.from_json("{not json")


def test_constructor_invariants():
    verts = ("i0", "j0")
    with pytest.raises(GraphFormatError):
        CodingGraph(("i0",), ("j0",), (), FMat(verts, verts, [[0, 1], [2, 0]], 3), 3)
    with pytest.raises(GraphFormatError):
        CodingGraph(("i0",), ("j0",), (), FMat(verts, verts, [[1, 1], [1, 0]], 3), 3)


def test_admissibility_failures():
    zero = CodingGraph.from_edges(2, ["i0"], ["j0"], [], [])
    rep = check_admissible(zero)
    assert not rep.ok and "singular" in rep.reason
    il = CodingGraph.from_edges(2, ["i0"], ["j0", "j1"], ["l0"], [["i0", "j0", 1], ["j1", "l0", 1], ["i0", "l0", 1]])
    rep = check_admissible(il)
    assert not rep.ok and "i0-l0" in rep.reason
    size = CodingGraph.from_edges(2, ["i0"], ["j0", "j1"], [], [["i0", "j0", 1]])
    assert not check_admissible(size).ok


def test_admissible_inverse(graph2, graph3):
    for g in (graph2, graph3, star()):
        rep = check_admissible(g)
        assert rep.ok
        IL = g.I + g.L
        assert g.block(g.J, IL) @ rep.inverse == FMat.identity(g.J, g.d)


def test_t0_passes_with_injective_input_block(make_small):
    for d in (2, 3, 5):
        g = make_small(d, seed=d)
        assert check_t_error_correcting(g, 0).ok


def test_star_graph_fails_t1_with_witness():
    g = star()
    assert check_admissible(g).ok
    assert check_t_error_correcting(g, 0).ok
    rep = check_t_error_correcting(g, 1)
    assert not rep.ok
    assert rep.witness_E == ("j0",)
    q = rep.witness_q
    rest = tuple(j for j in g.J if j not in rep.witness_E)
    assert (g.block(rest, q.labels) @ q).is_zero()
    assert not (g.block(g.I, rep.witness_E) @ q.restrict(rep.witness_E)).is_zero()


def test_searched_graphs_certified(graph2, graph3):
    for g in (graph2, graph3):
        rep = check_t_error_correcting(g, 1)
        assert rep.ok and rep.subsets_checked == 16


def test_thread_count_does_not_change_verdict(graph2):
    g = star()
    assert check_t_error_correcting(g, 1, threads=4) == check_t_error_correcting(g, 1)
    assert check_t_error_correcting(graph2, 1, threads=4) == check_t_error_correcting(graph2, 1)


def test_search_is_deterministic(graph2):
    again = search_graph(2, 1, 5, 1, budget=20000, seed=0)
    assert again.canonical_json() == graph2.canonical_json()


def test_search_impossible_parameters():
    assert search_graph(2, 1, 2, 1, budget=10_000) is None
    assert search_graph(3, 1, 2, 1, budget=10_000) is None
    assert search_graph(2, 2, 1, 1) is None
    with pytest.raises(FieldError):
        search_graph(4, 1, 5, 1)


@settings(max_examples=20, deadline=None)
@given(st.permutations(range(5)), st.permutations(range(4)), st.integers(0, 1))
def test_verdicts_invariant_under_relabeling(graph2, perm_j, perm_l, t):
    g = graph2
    h = g.permuted(g.I, tuple(g.J[k] for k in perm_j), tuple(g.L[k] for k in perm_l))
    assert check_admissible(h).ok
    assert check_t_error_correcting(h, t).ok
    s = star()
    h2 = s.permuted(s.I, tuple(reversed(s.J)), tuple(reversed(s.L)))
    assert check_admissible(h2).ok == check_admissible(s).ok
    assert check_t_error_correcting(h2, 1).ok is False


def test_relabel_preserves_structure():
    g = star()
    h = g.relabel({"i0": "in", "j0": "out0"})
    assert h.I == ("in",) and h.J[0] == "out0"
    assert np.array_equal(h.lam.values, g.lam.values)
    assert check_t_error_correcting(h, 1).witness_E == ("out0",)
