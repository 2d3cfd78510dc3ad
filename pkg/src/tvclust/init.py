"""Starting points for the clustering solver.

Two families: rows drawn at random from the simplex, and columns obtained
by diffusing seed vertices through the graph. The diffusion produces one
column per class by solving (I + L) x = e_seed with the graph Laplacian
L, which concentrates mass near the seed and decays with graph distance.

The diffused columns are deliberately returned as they come out of the
linear solve, without row normalization. Their small amplitude means the
first outer step of the solver sees a large energy ratio and takes a
strong, spatially coherent step that clips most rows straight onto
simplex vertices. Normalizing first flattens that transient and tends to
strand the iterate on a non-sharp face. The solver accepts such a start
and produces feasible iterates from the first inner step on.
"""

import numpy as np
from scipy.sparse import identity
from scipy.sparse.linalg import cg

from .graph import laplacian_matrix
from .projection import project_rows

__all__ = ["random_simplex_init", "pick_seeds", "seeded_propagation_init",
           "load_init_from_file"]


def random_simplex_init(n_vertices, n_classes, seed=None):
    """Assignment matrix with rows drawn uniformly from the simplex."""
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(n_classes), size=n_vertices)


def pick_seeds(n_vertices, n_classes, rng, partition_hint=None):
    """Choose one seed vertex per class.

    Without a hint, draws n_classes distinct vertices uniformly. With a
    partition_hint (an integer label per vertex), draws one vertex from
    each hinted class, so the seeds cover the classes.
    """
    rng = np.random.default_rng(rng)
    if partition_hint is None:
        return rng.choice(n_vertices, size=n_classes, replace=False).tolist()
    hint = np.asarray(partition_hint)
    if len(hint) != n_vertices:
        raise ValueError("partition hint length does not match vertex count")
    seeds = []
    for r in range(n_classes):
        members = np.flatnonzero(hint == r)
        if members.size == 0:
            raise ValueError("partition hint has no vertices of class %d" % r)
        seeds.append(int(rng.choice(members)))
    return seeds


def seeded_propagation_init(g, seeds, tol=1e-8, max_iter=5000):
    """Diffuse seed vertices into soft class columns.

    Parameters
    ----------
    g : SimilarityGraph
    seeds : sequence
        One entry per class: either a vertex index or a sequence of
        vertex indices (e.g. all labeled vertices of that class). The
        source for class r is the indicator of its seed set.
    tol, max_iter : conjugate gradient controls for (I + L) x = b.

    Returns
    -------
    ndarray, shape (n_vertices, len(seeds)), values in [0, 1]. Column r
    solves (I + L) x = b_r. On a graph with no edges this is exactly the
    seed indicator itself. Rows are not normalized; see the module
    docstring for why.
    """
    n = g.n_vertices
    A = (identity(n, format="csr") + laplacian_matrix(g)).tocsr()
    cols = []
    for s in seeds:
        b = np.zeros(n)
        idx = np.atleast_1d(np.asarray(s, dtype=np.int64))
        if idx.size == 0:
            raise ValueError("empty seed set for a class")
        b[idx] = 1.0
        x, info = cg(A, b, rtol=tol, atol=0.0, maxiter=max_iter)
        if info != 0:
            raise RuntimeError("seed propagation solve did not converge "
                               "(info=%d)" % info)
        cols.append(x)
    F = np.stack(cols, axis=1)
    return np.clip(F, 0.0, None)


def load_init_from_file(path):
    """Read a dense assignment matrix from CSV and project rows onto the simplex."""
    F = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    if F.shape[1] < 2:
        raise ValueError("initial matrix must have at least two columns")
    return project_rows(F)
