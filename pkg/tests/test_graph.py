import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secretgraph import oracle
from secretgraph.graph import (
    GraphError,
    TwoColorableGraph,
    bits_to_int,
    closed_form_shift,
    cluster,
    correlation_operator,
    enlarge,
    ghz,
    graph_from_preset,
    int_to_bits,
    is_enlargement_of,
    line,
    mask_of,
    parse_graph,
    pauli_shift_vector,
    ring,
    serialize_graph,
    split_index,
    two_color,
    vertices_of,
)


@st.composite
def bipartite_graphs(draw, max_n=6):
    """Random bipartite graphs: draw a side for each vertex, keep cross edges."""
    n = draw(st.integers(1, max_n))
    side = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    edges = []
    for u in range(1, n + 1):
        for v in range(u + 1, n + 1):
            if side[u - 1] != side[v - 1] and draw(st.booleans()):
                edges.append((u, v))
    return TwoColorableGraph.from_edges(n, edges)


def test_bit_helpers_roundtrip():
    assert bits_to_int("100") == 1
    assert bits_to_int("001") == 4
    assert int_to_bits(5, 4) == "1010"
    assert mask_of([1, 3]) == 0b101
    assert vertices_of(0b1010) == [2, 4]
    with pytest.raises(ValueError):
        bits_to_int("10a")


def test_parse_ghz3_star():
    g = parse_graph("3\n1 2\n1 3")
    assert g.color_a == mask_of([1])
    assert g.color_b == mask_of([2, 3])
    assert g == ghz(3)


def test_parse_line4():
    g = parse_graph("4\n1 2\n2 3\n3 4")
    assert g.color_a == mask_of([1, 3])
    assert g.color_b == mask_of([2, 4])


def test_parse_is_whitespace_tolerant_and_skips_comments():
    g = parse_graph("  4  \n\n1   2 # first\n 2\t3\n3 4\n")
    assert g == line(4)


@pytest.mark.parametrize(
    "text",
    [
        "3\n1 2\n2 3\n1 3",  # odd cycle
        "3\n1 2\n1 2",  # duplicate
        "3\n1 4",  # out of range
        "3\n2 1",  # u > v
        "3\n1 2 3",  # malformed
        "x\n1 2",
        "",
    ],
)
def test_parse_rejects(text):
    with pytest.raises(GraphError):
        parse_graph(text)


def test_two_color_per_component_rule():
    a, b = two_color(4, [(1, 2), (3, 4)])
    assert a == mask_of([1, 3])
    assert b == mask_of([2, 4])


def test_two_color_star_and_line():
    assert two_color(3, [(1, 2), (1, 3)])[0] == mask_of([1])
    assert two_color(4, [(1, 2), (2, 3), (3, 4)])[0] == mask_of([1, 3])


def test_graph_rejects_bad_coloring():
    with pytest.raises(GraphError):
        TwoColorableGraph(2, ((1, 2),), 0b11, 0)
    with pytest.raises(GraphError):
        TwoColorableGraph(2, ((1, 2),), 0b01, 0b01)
    with pytest.raises(GraphError):
        TwoColorableGraph.from_edges(2, [(1, 1)])


def test_enlarge_edge():
    big = enlarge(TwoColorableGraph.from_edges(2, [(1, 2)]))
    assert big.n_vertices == 4
    assert set(big.edges) == {(1, 2), (1, 3), (2, 4)}


def test_enlarge_ghz3():
    big = enlarge(ghz(3))
    assert set(big.edges) == {(1, 2), (1, 3), (1, 4), (2, 5), (3, 6)}
    assert big.in_a(1) and not big.in_a(4)
    assert not big.in_a(2) and big.in_a(5)


def test_enlarge_twice_gives_path():
    twice = enlarge(enlarge(ghz(1)))
    assert twice.n_vertices == 4
    degrees = sorted(twice.degree(j) for j in range(1, 5))
    assert degrees == [1, 1, 2, 2]
    assert len(twice.edges) == 3


@settings(max_examples=60, deadline=None)
@given(bipartite_graphs())
def test_enlarge_properties(g):
    big = enlarge(g)
    assert big.n_vertices == 2 * g.n_vertices
    assert len(big.edges) == len(g.edges) + g.n_vertices
    assert is_enlargement_of(big, g)
    for k in range(1, g.n_vertices + 1):
        assert big.in_a(k) != big.in_a(k + g.n_vertices)


def test_correlation_operator_examples():
    g = ghz(3)
    k1 = correlation_operator(g, 1)
    assert (k1.letter, k1.support) == ("X", mask_of([1, 2, 3]))
    k2 = correlation_operator(g, 2)
    assert (k2.letter, k2.support) == ("Z", mask_of([1, 2]))
    k3 = correlation_operator(line(4), 3)
    assert (k3.letter, k3.support) == ("X", mask_of([2, 3, 4]))
    with pytest.raises(GraphError):
        correlation_operator(g, 4)


@settings(max_examples=60, deadline=None)
@given(bipartite_graphs())
def test_stabilizers_commute_and_letters_follow_color(g):
    ops = [correlation_operator(g, j) for j in range(1, g.n_vertices + 1)]
    for j, op in enumerate(ops, start=1):
        assert op.letter == ("X" if g.in_a(j) else "Z")
        assert op.support == (1 << (j - 1)) | g.neighborhood(j)
        for other in ops:
            assert not op.anticommutes(other)


def test_shift_vector_examples():
    g = ghz(3)
    assert int_to_bits(pauli_shift_vector(g, 1, "Z"), 3) == "100"
    assert int_to_bits(pauli_shift_vector(g, 1, "X"), 3) == "011"
    assert int_to_bits(pauli_shift_vector(g, 2, "X"), 3) == "010"
    assert pauli_shift_vector(g, 2, "I") == 0


@settings(max_examples=60, deadline=None)
@given(bipartite_graphs(), st.data())
def test_shift_vector_y_and_closed_form(g, data):
    k = data.draw(st.integers(1, g.n_vertices))
    x = pauli_shift_vector(g, k, "X")
    z = pauli_shift_vector(g, k, "Z")
    assert pauli_shift_vector(g, k, "Y") == x ^ z
    for letter in "XYZ":
        assert pauli_shift_vector(g, k, letter) == closed_form_shift(g, k, letter)


@pytest.mark.parametrize("g", [ghz(2), ghz(3), line(3), line(4), ring(4)], ids=str)
def test_shift_vector_matches_dense_state_vectors(g):
    n = g.n_vertices
    for k in range(1, n + 1):
        for letter in "XYZ":
            op = oracle.embed(oracle.PAULIS[letter], k - 1, n)
            shift = pauli_shift_vector(g, k, letter)
            for m in range(1 << n):
                got = op @ oracle.graph_basis_vector(g, m)
                want = oracle.graph_basis_vector(g, m ^ shift)
                assert abs(abs(np.vdot(want, got)) - 1) < 1e-10


@settings(max_examples=60, deadline=None)
@given(bipartite_graphs())
def test_edge_list_roundtrip(g):
    text = serialize_graph(g)
    back = parse_graph(text)
    assert back == g
    assert serialize_graph(back) == text


def test_presets_and_split():
    assert graph_from_preset("ghz:3") == ghz(3)
    assert graph_from_preset("cluster:2x3") == cluster(2, 3)
    assert graph_from_preset("ring:6").n_vertices == 6
    with pytest.raises(GraphError):
        ring(5)
    with pytest.raises(GraphError):
        graph_from_preset("blob:3")
    g = line(4)
    assert split_index(g, 0b1111) == (0b0101, 0b1010)


def test_degrees():
    assert ghz(4).max_degree == 3
    assert line(4).max_degree == 2
    assert line(4).min_degree == 1
