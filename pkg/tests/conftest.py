import numpy as np
import pytest

from tvclust import SimilarityGraph


def make_line_graph(n):
    return SimilarityGraph(n_vertices=n, edge_i=np.arange(n - 1),
                           edge_j=np.arange(1, n), weights=np.ones(n - 1))


def make_random_graph(n, rng, extra_edges=None):
    """Connected random graph: a random spanning chain plus extra edges."""
    perm = rng.permutation(n)
    pairs = {(min(perm[i], perm[i + 1]), max(perm[i], perm[i + 1]))
             for i in range(n - 1)}
    if extra_edges is None:
        extra_edges = int(rng.integers(n, 3 * n))
    for _ in range(extra_edges):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    pairs = sorted(pairs)
    return SimilarityGraph(
        n_vertices=n,
        edge_i=np.array([p[0] for p in pairs], dtype=np.int64),
        edge_j=np.array([p[1] for p in pairs], dtype=np.int64),
        weights=rng.uniform(0.1, 1.0, size=len(pairs)))


@pytest.fixture
def line20():
    return make_line_graph(20)
