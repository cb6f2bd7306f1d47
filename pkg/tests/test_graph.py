import io

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.csgraph import connected_components

from specpart.graph import (
    BannerError,
    EmptyGraphError,
    Graph,
    IndexRangeError,
    Kind,
    MatrixMarketError,
    Partition,
    TruncatedError,
    UnsupportedFormatError,
    classify,
    cutsize,
    imbalance,
    largest_connected_component,
    parse_matrix_market,
    read_partition,
    symmetrize,
    write_matrix_market,
    write_partition,
)
from specpart.laplacian import build_combinatorial


def dense(A):
    return np.asarray(A.todense())


class TestParser:
    def test_pattern_general(self):
        A = parse_matrix_market(b"%%MatrixMarket matrix coordinate pattern general\n3 3 2\n2 1\n3 2\n")
        assert A.shape == (3, 3)
        assert sorted(zip(*A.nonzero())) == [(1, 0), (2, 1)]

    def test_real_symmetric_expands(self):
        A = parse_matrix_market("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 5.0\n")
        assert dense(A).tolist() == [[0.0, 5.0], [5.0, 0.0]]

    def test_array_format_rejected(self):
        with pytest.raises(UnsupportedFormatError):
            parse_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n")

    def test_comments_and_blank_lines(self):
        src = "%%MatrixMarket matrix coordinate integer general\n% hi\n\n2 2 1\n% x\n1 2 7\n"
        assert dense(parse_matrix_market(src))[0, 1] == 7

    def test_numeric_duplicates_summed(self):
        A = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.5\n1 2 2\n")
        assert A[0, 1] == 3.5

    def test_pattern_duplicates_collapse(self):
        A = parse_matrix_market("%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n1 2\n")
        assert A.nnz == 1 and A[0, 1] == 1.0

    def test_explicit_zero_kept_structurally(self):
        A = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 0\n")
        assert symmetrize(A).num_edges == 1

    @pytest.mark.parametrize(
        "src, exc, line",
        [
            ("", BannerError, 1),
            ("hello\n", BannerError, 1),
            ("%%MatrixMarket vector coordinate real general\n", UnsupportedFormatError, 1),
            ("%%MatrixMarket matrix coordinate complex general\n", UnsupportedFormatError, 1),
            ("%%MatrixMarket matrix coordinate real hermitian\n", UnsupportedFormatError, 1),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n", IndexRangeError, 3),
            ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1\n", TruncatedError, 4),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 1\n2 1 1\n", MatrixMarketError, 4),
            ("%%MatrixMarket matrix coordinate real general\n2 x 1\n", MatrixMarketError, 2),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2\n", MatrixMarketError, 3),
        ],
    )
    def test_errors_carry_line(self, src, exc, line):
        with pytest.raises(exc) as info:
            parse_matrix_market(src)
        assert info.value.line == line
        assert str(info.value).startswith(f"line {line}:")

    def test_write_roundtrip(self, cycle4):
        buf = io.StringIO()
        write_matrix_market(cycle4, buf)
        G = symmetrize(parse_matrix_market(buf.getvalue()))
        assert (G.adjacency != cycle4.adjacency).nnz == 0


class TestSymmetrize:
    def test_single_entry(self):
        G = symmetrize(sp.csr_matrix(([1.0], ([0], [1])), shape=(2, 2)))
        assert G.num_edges == 1 and G.adjacency[1, 0] == 1

    def test_idempotent_on_symmetric(self, triangle):
        assert (symmetrize(triangle.adjacency).adjacency != triangle.adjacency).nnz == 0

    def test_zero_matrix(self):
        G = symmetrize(sp.csr_matrix((3, 3)))
        assert G.n == 3 and G.num_edges == 0

    def test_drops_self_loops(self):
        G = symmetrize(sp.csr_matrix(np.array([[1.0, 1.0], [0.0, 1.0]])))
        assert G.adjacency.diagonal().sum() == 0 and G.num_edges == 1

    def test_non_square(self):
        with pytest.raises(ValueError):
            symmetrize(sp.csr_matrix((2, 3)))


class TestComponents:
    def test_picks_larger(self):
        G = Graph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
        H, ids = largest_connected_component(G)
        assert H.n == 3 and ids.tolist() == [0, 1, 2]

    def test_larger_component_later(self):
        G = Graph.from_edges(5, [(0, 1), (2, 3), (3, 4)])
        _, ids = largest_connected_component(G)
        assert ids.tolist() == [2, 3, 4]

    def test_connected_identity(self, cycle4):
        H, ids = largest_connected_component(cycle4)
        assert H is cycle4 and ids.tolist() == [0, 1, 2, 3]

    def test_tie_smallest_id(self):
        G = Graph.from_edges(4, [(2, 3), (0, 1)])
        assert largest_connected_component(G)[1].tolist() == [0, 1]
        G = Graph.from_edges(5, [(1, 4), (0, 3)])
        # components {1,4}, {0,3}, {2}
        assert largest_connected_component(G)[1].tolist() == [0, 3]

    def test_empty(self):
        with pytest.raises(EmptyGraphError):
            largest_connected_component(Graph(sp.csr_matrix((0, 0))))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 12), st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11)), max_size=20))
    def test_result_connected_and_maximal(self, n, pairs):
        edges = [(i, j) for i, j in pairs if i < n and j < n and i != j]
        G = Graph.from_edges(n, edges)
        H, ids = largest_connected_component(G)
        assert connected_components(H.adjacency, directed=False)[0] == 1
        _, labels = connected_components(G.adjacency, directed=False)
        assert np.bincount(labels).max() == H.n
        assert np.all(np.diff(ids) > 0)


class TestClassify:
    def test_complete_graph_regular(self):
        G = Graph.from_edges(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
        k = classify(G)
        assert (k.max_degree, k.avg_degree, k.ratio, k.kind) == (3, 3.0, 1.0, Kind.REGULAR)

    def test_star_irregular(self):
        # max 40, avg 80/41
        G = Graph.from_edges(41, [(0, i) for i in range(1, 41)])
        k = classify(G)
        assert k.kind is Kind.IRREGULAR and k.ratio == pytest.approx(20.5)

    def test_ratio_threshold_inclusive(self):
        # star with 10 leaves plus a detached matching: max 10, avg 1
        edges = [(0, i) for i in range(1, 11)] + [(11 + 2 * i, 12 + 2 * i) for i in range(4)]
        k = classify(Graph.from_edges(19, edges))
        assert k.max_degree == 10 and k.avg_degree * 19 == 28
        assert k.kind is Kind.REGULAR

    def test_deterministic(self):
        src = b"%%MatrixMarket matrix coordinate pattern symmetric\n4 4 3\n2 1\n3 1\n4 1\n"
        assert classify(symmetrize(parse_matrix_market(src))) == classify(symmetrize(parse_matrix_market(src)))


class TestMetrics:
    def test_triangle_cut(self, triangle):
        assert cutsize(triangle, [0, 1, 1]) == 2

    def test_single_part_zero(self, cycle4):
        assert cutsize(cycle4, [0, 0, 0, 0]) == 0

    def test_cycle_cut_and_doubled(self, cycle4):
        assert cutsize(cycle4, [0, 0, 1, 1]) == 2
        assert cutsize(cycle4, [0, 0, 1, 1], doubled=True) == 4

    def test_edge_costs(self):
        G = Graph.from_edges(3, [(0, 1), (1, 2)], costs=[2.5, 4.0])
        assert cutsize(G, [0, 1, 1]) == 2.5

    @pytest.mark.parametrize("w, expect", [([4] * 4, 1.0), ([5, 3], 1.25), ([1, 1, 1], 1.0)])
    def test_imbalance(self, w, expect):
        assert imbalance(w) == expect

    def test_partition_validates(self, cycle4):
        with pytest.raises(ValueError):
            Partition.from_assignment(cycle4, [0, 0, 0, 0], 2)
        p = Partition.from_assignment(cycle4, [0, 1, 1, 0], 2)
        assert p.cutsize == 2 and p.part_weights.tolist() == [2, 2] and p.part_weights.sum() == 4

    def test_vertex_weights_must_be_positive(self):
        with pytest.raises(ValueError):
            Graph.from_edges(2, [(0, 1)], vertex_weights=[1.0, 0.0])

    def test_partition_file_roundtrip(self):
        buf = io.StringIO()
        write_partition(buf, np.array([1, 0, 1]), vertex_ids=np.array([7, 2, 5]))
        assert buf.getvalue() == "2 0\n5 1\n7 1\n"
        ids, parts = read_partition(io.StringIO(buf.getvalue()))
        assert ids.tolist() == [2, 5, 7] and parts.tolist() == [0, 1, 1]


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 6).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=15),
        st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n),
    )
))
def test_quarter_quadratic_form_counts_cut_edges(case):
    n, pairs, x = case
    G = Graph.from_edges(n, [(i, j) for i, j in pairs if i != j])
    x = np.array(x, dtype=float)
    L = build_combinatorial(G).matrix
    assert 0.25 * x @ (L @ x) == cutsize(G, (x > 0).astype(int))
