import dataclasses
import io

import numpy as np
import pytest

from fqflats.config import Budget
from fqflats.errors import BadSubset, IdenticalFlats, InvalidParameters, ParameterMismatch, TooLarge
from fqflats.flats import count_flats, enumerate_flats, flat_contains_flat, flat_from_span, gaussian_binomial, points_of
from fqflats.incidence import (
    build_graph,
    common_neighbor_count,
    count_incidences,
    export_adjacency_csv,
    export_gram_csv,
    gram_matrix,
    index_mask,
    pair_rank,
    pair_rank_matrix,
    verify_decomposition,
)
from fqflats.sampling import make_rng, sample_subset


def test_plane_graph_shape(plane_graph):
    g = plane_graph
    assert (g.n_a, g.n_b, g.edge_count) == (9, 12, 36)
    assert set(g.degrees_a.tolist()) == {4}
    assert set(g.degrees_b.tolist()) == {3}
    assert g.check_biregular() == []


def test_space_graph_shape(space_graph):
    g = space_graph
    assert (g.n_a, g.n_b) == (27, 39)
    assert (g.counts.y_hk, g.counts.x_hk) == (13, 9)
    assert g.edge_count == 351


def test_lines_graph_shape(lines_graph):
    g = lines_graph
    assert (g.n_a, g.n_b, g.edge_count) == (1080, 120, 14040)
    assert set(g.degrees_a.tolist()) == {13}
    assert set(g.degrees_b.tolist()) == {117}


def test_edges_match_containment(plane_graph):
    n = plane_graph.incidence_matrix()
    for i, p in enumerate(plane_graph.part_a):
        for j, line in enumerate(plane_graph.part_b):
            assert n[i, j] == flat_contains_flat(line, p)


def test_adjacency_views(space_graph):
    g = space_graph
    for i, neighbours in enumerate(g.adjacency):
        assert all(flat_contains_flat(g.part_b[j], g.part_a[i]) for j in neighbours)
    for j, neighbours in enumerate(g.adjacency_b):
        assert len(neighbours) == g.counts.x_hk
        assert all(j in g.adjacency[i] for i in neighbours)


def test_vertex_indices(space_graph):
    g = space_graph
    assert g.index_a(g.part_a[5]) == 5
    assert g.index_b(g.part_b[17]) == 17
    with pytest.raises(ParameterMismatch):
        g.index_a(g.part_b[0])


def test_budget_refuses_large_graphs(gf3):
    with pytest.raises(TooLarge):
        build_graph(gf3, 3, 0, 1, Budget(max_flats=100))


def test_build_rejects_bad_parameters(gf3):
    with pytest.raises(InvalidParameters):
        build_graph(gf3, 2, 1, 1)


def test_tampered_graph_is_not_biregular(plane_graph):
    broken = plane_graph.drop_edges([0])
    assert broken.edge_count == 35
    assert broken.check_biregular()
    assert plane_graph.check_biregular() == []


# ---------------------------------------------------------
# Incidence counting
# ---------------------------------------------------------


def test_count_incidences_all(plane_graph):
    assert count_incidences(plane_graph.part_a, plane_graph.part_b) == 36
    assert count_incidences([], plane_graph.part_b) == 0


def test_count_incidences_against_point_oracle(space_graph):
    g = space_graph
    rng = make_rng(1, "test:incidences")
    for _ in range(20):
        ps = [g.part_a[i] for i in sample_subset(rng, g.n_a)]
        hs = [g.part_b[j] for j in sample_subset(rng, g.n_b)]
        wanted = {p.base for p in ps}
        expected = sum(len(wanted & set(points_of(plane))) for plane in hs)
        assert count_incidences(ps, hs) == expected


def test_count_incidences_large_path_matches_edges(lines_graph):
    g = lines_graph
    rng = make_rng(2, "test:incidences-large")
    xs = sample_subset(rng, g.n_a, 600)
    ys = sample_subset(rng, g.n_b, 10)
    ks = [g.part_a[i] for i in xs]
    hs = [g.part_b[j] for j in ys]
    assert count_incidences(ks, hs) == g.count_edges(xs, ys)


def test_count_incidences_ignores_duplicates(plane_graph):
    ps = list(plane_graph.part_a[:3]) * 2
    assert count_incidences(ps, plane_graph.part_b) == 3 * 4


def test_count_incidences_shape_checks(gf3, plane_graph):
    line_in_space = flat_from_span(gf3, [(1, 0, 0)], (0, 0, 0))
    with pytest.raises(ParameterMismatch):
        count_incidences(plane_graph.part_a, [line_in_space])
    with pytest.raises(ParameterMismatch):
        count_incidences([plane_graph.part_a[0], line_in_space], plane_graph.part_b)


def test_count_edges(plane_graph):
    g = plane_graph
    assert g.count_edges(range(g.n_a), range(g.n_b)) == 36
    assert g.count_edges([], range(g.n_b)) == 0
    assert g.count_edges([0, 0, 0], [0]) == int(g.incidence_matrix()[0, 0])


@pytest.mark.parametrize("bad", [[9], [-1], [0.5]])
def test_index_mask_rejects(bad):
    with pytest.raises(BadSubset):
        index_mask(bad, 9)


# ---------------------------------------------------------
# Pair ranks and common neighbours
# ---------------------------------------------------------


def test_pair_rank_examples(gf3):
    l1 = flat_from_span(gf3, [(1, 0)], (0, 0))
    l2 = flat_from_span(gf3, [(1, 0)], (0, 1))
    l3 = flat_from_span(gf3, [(0, 1)], (0, 0))
    assert pair_rank(l1, l2) == 2
    assert pair_rank(l1, l3) == 2

    skew_a = flat_from_span(gf3, [(1, 0, 0, 0)], (0, 0, 0, 0))
    skew_b = flat_from_span(gf3, [(0, 1, 0, 0)], (0, 0, 1, 0))
    assert pair_rank(skew_a, skew_b) == 3

    with pytest.raises(IdenticalFlats):
        pair_rank(l1, flat_from_span(gf3, [(2, 0)], (1, 0)))


def test_common_neighbors_lines_in_f3_4(gf3, lines_graph):
    g = lines_graph
    coplanar_a = flat_from_span(gf3, [(1, 0, 0, 0)], (0, 0, 0, 0))
    coplanar_b = flat_from_span(gf3, [(0, 1, 0, 0)], (0, 0, 0, 0))
    skew = flat_from_span(gf3, [(0, 1, 0, 0)], (0, 0, 1, 0))

    def shared(u, v):
        return np.intersect1d(g.adjacency[g.index_a(u)], g.adjacency[g.index_a(v)]).size

    assert common_neighbor_count(coplanar_a, coplanar_b, 3) == 4 == shared(coplanar_a, coplanar_b)
    assert common_neighbor_count(coplanar_a, skew, 3) == 1 == shared(coplanar_a, skew)


def test_common_neighbors_zero_when_rank_exceeds_h(gf3):
    u = flat_from_span(gf3, [(1, 0, 0, 0, 0)], (0, 0, 0, 0, 0))
    v = flat_from_span(gf3, [(0, 1, 0, 0, 0)], (0, 0, 1, 0, 0))
    assert pair_rank(u, v) == 3
    assert common_neighbor_count(u, v, 2) == 0


def test_pair_rank_matrix_matches_pairwise(space_graph):
    g = space_graph
    ranks = pair_rank_matrix(g)
    assert np.array_equal(np.diagonal(ranks), np.zeros(g.n_a))
    for i in range(0, g.n_a, 4):
        for j in range(g.n_a):
            if i != j:
                assert ranks[i, j] == pair_rank(g.part_a[i], g.part_a[j])


def test_pair_rank_matrix_lines(gf3):
    g = build_graph(gf3, 3, 1, 2)
    ranks = pair_rank_matrix(g)
    rng = make_rng(3, "test:pair-ranks")
    for _ in range(300):
        i, j = (int(x) for x in rng.integers(0, g.n_a, size=2))
        expected = 1 if i == j else pair_rank(g.part_a[i], g.part_a[j])
        assert ranks[i, j] == expected


# ---------------------------------------------------------
# Gram matrix and its decomposition
# ---------------------------------------------------------


def test_plane_gram_is_j_plus_3i(plane_graph):
    gram = gram_matrix(plane_graph)
    assert np.array_equal(gram, np.ones((9, 9), dtype=np.int64) + 3 * np.eye(9, dtype=np.int64))


def test_gram_row_sums(space_graph):
    gram = gram_matrix(space_graph)
    assert set(gram.sum(axis=1).tolist()) == {13 * 9}
    assert np.array_equal(gram, gram.T)


def test_other_side_gram(plane_graph):
    gram_b = gram_matrix(plane_graph, side="B")
    assert gram_b.shape == (12, 12)
    assert set(np.diagonal(gram_b).tolist()) == {3}
    # two lines meet in one point or are parallel
    assert set(gram_b[~np.eye(12, dtype=bool)].tolist()) == {0, 1}


def test_gram_invariant_under_relabeling_b(space_graph):
    perm = np.random.default_rng(7).permutation(space_graph.n_b)
    part_b = tuple(space_graph.part_b[j] for j in perm)
    pairs = [
        (a, b)
        for a, p in enumerate(space_graph.part_a)
        for b, plane in enumerate(part_b)
        if flat_contains_flat(plane, p)
    ]
    edge_a, edge_b = (np.array(column, dtype=np.int64) for column in zip(*pairs))
    relabeled = dataclasses.replace(space_graph, part_b=part_b, edge_a=edge_a, edge_b=edge_b)

    assert relabeled.check_biregular() == []
    assert np.array_equal(gram_matrix(relabeled), gram_matrix(space_graph))
    gram_b = gram_matrix(space_graph, side="B")
    assert np.array_equal(gram_matrix(relabeled, side="B"), gram_b[np.ix_(perm, perm)])


def test_gram_budget(space_graph):
    with pytest.raises(TooLarge):
        gram_matrix(space_graph, Budget(max_gram_entries=100))
    with pytest.raises(TooLarge):
        pair_rank_matrix(space_graph, Budget(max_dense=10))


def test_decomposition_plane(plane_graph):
    report = verify_decomposition(plane_graph)
    assert report.passed
    assert report.diagonal == 4
    (cls,) = report.classes
    assert (cls.t, cls.constant, cls.degree, cls.mismatches) == (1, 1, 8, 0)


def test_decomposition_space(space_graph):
    report = verify_decomposition(space_graph)
    assert report.passed, report.failures
    assert [c.constant for c in report.classes] == [gaussian_binomial(2, 1, 3)]


@pytest.mark.slow
def test_decomposition_lines_in_f3_4(lines_graph):
    report = verify_decomposition(lines_graph)
    assert report.passed, report.failures
    assert report.diagonal == 13
    constants = {c.t: c.constant for c in report.classes}
    assert constants == {2: 4, 3: 1}
    degrees = {c.t: c.degree for c in report.classes}
    assert degrees == {2: 143, 3: 936}
    assert sum(degrees.values()) == 1079
    assert all(c.exponent_ok for c in report.classes)
    assert report.to_dict()["pass"] is True


def test_decomposition_catches_tampering(plane_graph):
    report = verify_decomposition(plane_graph.drop_edges([0, 5]))
    assert not report.passed
    assert report.diagonal_mismatches > 0


# ---------------------------------------------------------
# CSV export
# ---------------------------------------------------------


def test_export_adjacency_csv(plane_graph):
    stream = io.StringIO()
    export_adjacency_csv(plane_graph, stream)
    lines = stream.getvalue().split("\n")
    assert lines[0] == "a_index,b_index"
    assert len(lines) == 1 + 36 + 1 and lines[-1] == ""
    assert "\r" not in stream.getvalue()


def test_export_gram_csv(plane_graph):
    stream = io.StringIO()
    export_gram_csv(gram_matrix(plane_graph), stream)
    lines = stream.getvalue().splitlines()
    assert lines[0] == ",".join(f"c{j}" for j in range(9))
    assert lines[1] == "4,1,1,1,1,1,1,1,1"


def test_enumeration_counts_agree(gf3):
    assert len(enumerate_flats(gf3, 3, 2)) == count_flats(3, 2, 3)
