"""Similarity graphs, the edge-gradient operator, and cut/TV quantities.

A graph is stored as an undirected edge list with each unordered pair kept
exactly once (i < j). All cut and total variation values in this package
count each edge once. With that convention the total variation of a set
indicator equals the cut weight of the set, and every cluster energy is a
plain ratio of the two.
"""

import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


class SimilarityGraph:
    """Undirected weighted graph over n vertices.

    Edges are stored once per unordered pair with ``edge_i < edge_j``,
    sorted lexicographically. Weights are non-negative and self loops are
    rejected.
    """

    def __init__(self, n_vertices, edge_i, edge_j, weights):
        edge_i = np.asarray(edge_i, dtype=np.int64)
        edge_j = np.asarray(edge_j, dtype=np.int64)
        weights = np.asarray(weights, dtype=float)
        if not (len(edge_i) == len(edge_j) == len(weights)):
            raise ValueError("edge arrays must have equal length")
        if len(edge_i) and (edge_i.min() < 0 or edge_j.max() >= n_vertices):
            raise ValueError("edge endpoint out of range")
        if np.any(edge_i == edge_j):
            raise ValueError("self loops are not allowed")
        if np.any(weights < 0):
            raise ValueError("negative edge weight")
        # normalize to i < j and sort
        lo = np.minimum(edge_i, edge_j)
        hi = np.maximum(edge_i, edge_j)
        order = np.lexsort((hi, lo))
        lo, hi, weights = lo[order], hi[order], weights[order]
        if len(lo) > 1:
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if dup.any():
                raise ValueError("duplicate edge")
        self.n_vertices = int(n_vertices)
        self.edge_i = lo
        self.edge_j = hi
        self.weights = weights

    @property
    def n_edges(self):
        return len(self.weights)

    def __repr__(self):
        return "SimilarityGraph(n_vertices=%d, n_edges=%d)" % (
            self.n_vertices, self.n_edges)


def build_knn_graph(points, k=10, scale="self-tuning"):
    """Build a symmetrized k-nearest-neighbor similarity graph.

    Parameters
    ----------
    points : array_like, shape (n, d)
        One feature vector per row.
    k : int
        Number of neighbors per point. An edge (i, j) is kept if i is
        among the k nearest neighbors of j or vice versa.
    scale : "self-tuning" or positive float
        With "self-tuning" the weight is exp(-d(i,j)^2 / (s_i * s_j))
        where s_i is the distance from point i to its ceil(k/2)-th
        neighbor. A float gives the global kernel exp(-d^2 / scale^2).

    Returns
    -------
    SimilarityGraph

    Notes
    -----
    Coincident points get weight 1 (zero distance). If a self-tuning
    bandwidth degenerates to zero while the pair distance is positive,
    the weight underflows to 0 and the edge is dropped.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= n:
        raise ValueError("k must be smaller than the number of points")
    tree = cKDTree(points)
    dist, idx = tree.query(points, k=k + 1)
    # column 0 is the point itself (distance 0); with duplicates any
    # zero-distance column works just as well
    if scale == "self-tuning":
        sig = dist[:, (k + 1) // 2]
    else:
        s = float(scale)
        if s <= 0:
            raise ValueError("scale must be positive")
        sig = None

    pair_w = {}
    for i in range(n):
        for c in range(1, k + 1):
            j = int(idx[i, c])
            if j == i:
                continue
            a, b = (i, j) if i < j else (j, i)
            if (a, b) in pair_w:
                continue
            d = dist[i, c]
            if d == 0.0:
                w = 1.0
            elif sig is not None:
                ss = sig[a] * sig[b]
                w = math.exp(-d * d / ss) if ss > 0 else 0.0
            else:
                w = math.exp(-d * d / (s * s))
            if w > 0.0:
                pair_w[(a, b)] = w
    if pair_w:
        ei = np.fromiter((p[0] for p in pair_w), dtype=np.int64, count=len(pair_w))
        ej = np.fromiter((p[1] for p in pair_w), dtype=np.int64, count=len(pair_w))
        ew = np.fromiter(pair_w.values(), dtype=float, count=len(pair_w))
    else:
        ei = ej = np.zeros(0, dtype=np.int64)
        ew = np.zeros(0)
    return SimilarityGraph(n, ei, ej, ew)


def gradient_operator(g):
    """Sparse edge-difference operator K with one row per edge.

    Row for edge (i, j) holds +w at column i and -w at column j, rows in
    the graph's edge order. Returned as a CSR matrix of shape
    (n_edges, n_vertices), so ``K @ f`` lists the weighted differences
    and ``abs(K @ f).sum()`` is the total variation of f.
    """
    m = g.n_edges
    rows = np.repeat(np.arange(m), 2)
    cols = np.stack([g.edge_i, g.edge_j], axis=1).ravel()
    vals = np.stack([g.weights, -g.weights], axis=1).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, g.n_vertices))


def tv_norm(K, f):
    """Total variation of a vertex function: sum of w_ij |f_i - f_j| over edges."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] != K.shape[1]:
        raise ValueError("function length does not match vertex count")
    return float(np.abs(K @ f).sum())


def cut_value(g, subset):
    """Weight of edges crossing between a vertex subset and its complement.

    ``subset`` is an iterable of vertex indices or a boolean mask of
    length n_vertices.
    """
    mask = np.zeros(g.n_vertices, dtype=bool)
    subset = np.asarray(list(subset) if not isinstance(subset, np.ndarray) else subset)
    if subset.dtype == bool:
        if len(subset) != g.n_vertices:
            raise ValueError("mask length does not match vertex count")
        mask = subset
    else:
        if len(subset) and (subset.min() < 0 or subset.max() >= g.n_vertices):
            raise IndexError("vertex index out of range")
        mask[subset] = True
    crossing = mask[g.edge_i] != mask[g.edge_j]
    return float(g.weights[crossing].sum())


def operator_norm(K, tol=1e-6, max_iter=1000):
    """Largest singular value of K, estimated by power iteration on K^T K.

    The estimate is multiplied by (1 + tol) before returning so that step
    size bounds built from it stay on the safe side. Deterministic: the
    start vector comes from a fixed seed, since the all-ones vector lies
    in the kernel of K^T K and cannot seed the iteration.
    """
    m, n = K.shape
    if m == 0 or K.nnz == 0:
        return 0.0
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    prev = 0.0
    nu = 0.0
    for _ in range(max_iter):
        w = K.T @ (K @ v)
        nu = float(np.linalg.norm(w))
        if nu == 0.0:
            return 0.0
        v = w / nu
        if abs(nu - prev) <= tol * nu:
            break
        prev = nu
    return math.sqrt(nu) * (1.0 + tol)


def laplacian_matrix(g):
    """Unnormalized graph Laplacian D - W as a CSR matrix."""
    n = g.n_vertices
    deg = np.zeros(n)
    np.add.at(deg, g.edge_i, g.weights)
    np.add.at(deg, g.edge_j, g.weights)
    rows = np.concatenate([g.edge_i, g.edge_j, np.arange(n)])
    cols = np.concatenate([g.edge_j, g.edge_i, np.arange(n)])
    vals = np.concatenate([-g.weights, -g.weights, deg])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def laplacian_apply(g, f):
    """Apply the unnormalized Laplacian: (D - W) f.

    The quadratic form ``f @ laplacian_apply(g, f)`` equals
    sum over edges of w_ij (f_i - f_j)^2.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] != g.n_vertices:
        raise ValueError("function length does not match vertex count")
    return laplacian_matrix(g) @ f


def largest_component_fraction(g):
    """Fraction of vertices in the largest connected component."""
    if g.n_vertices == 0:
        return 0.0
    adj = sp.csr_matrix(
        (np.ones(2 * g.n_edges),
         (np.concatenate([g.edge_i, g.edge_j]),
          np.concatenate([g.edge_j, g.edge_i]))),
        shape=(g.n_vertices, g.n_vertices))
    _, labels = connected_components(adj, directed=False)
    return float(np.bincount(labels).max()) / g.n_vertices


# ---------------------------------------------------------------------------
# file formats


def read_edge_list(path):
    """Read a plain-text edge list, one "i j w" per line, 0-based indices.

    Blank lines and lines starting with '#' are skipped. The vertex count
    is one plus the largest index seen.
    """
    ei, ej, ew = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError("%s:%d: expected 'i j w'" % (path, lineno))
            ei.append(int(parts[0]))
            ej.append(int(parts[1]))
            ew.append(float(parts[2]))
    if not ei:
        raise ValueError("%s: empty edge list" % path)
    n = int(max(max(ei), max(ej))) + 1
    return SimilarityGraph(n, ei, ej, ew)


def write_edge_list(g, path):
    """Write the edge list in the same "i j w" format read_edge_list parses."""
    with open(path, "w") as fh:
        for i, j, w in zip(g.edge_i, g.edge_j, g.weights):
            fh.write("%d %d %.17g\n" % (i, j, w))


def read_matrix_market(path):
    """Read a symmetric similarity matrix in Matrix Market format.

    Off-diagonal entries of the upper triangle become edges; the diagonal
    is ignored. The matrix must be symmetric up to a relative 1e-8.
    """
    from scipy.io import mmread
    W = mmread(path).tocsr()
    if W.shape[0] != W.shape[1]:
        raise ValueError("similarity matrix must be square")
    asym = abs(W - W.T)
    if asym.nnz and asym.max() > 1e-8 * max(1.0, abs(W).max()):
        raise ValueError("similarity matrix must be symmetric")
    Wu = sp.triu(W, k=1).tocoo()
    keep = Wu.data > 0
    return SimilarityGraph(W.shape[0], Wu.row[keep], Wu.col[keep], Wu.data[keep])


def read_feature_csv(path):
    """Read a dense feature CSV, one point per row. A header row is skipped."""
    with open(path) as fh:
        first = fh.readline()
    skip = 0
    try:
        [float(x) for x in first.replace(",", " ").split()]
    except ValueError:
        skip = 1
    X = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    return X
