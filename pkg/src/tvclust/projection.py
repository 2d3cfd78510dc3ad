"""Euclidean projection onto the probability simplex, with label pinning."""

import numpy as np


class LabelConstraint:
    """Known class assignments for a subset of vertices.

    Stored as an integer array of length n with -1 marking unlabeled
    vertices. Labeled rows of an assignment matrix are forced to the
    corresponding unit coordinate vector.
    """

    def __init__(self, labels):
        labels = np.asarray(labels, dtype=np.int64)
        self.labels = labels
        self.mask = labels >= 0

    @classmethod
    def from_pairs(cls, pairs, n_vertices):
        """Build from (vertex, class) pairs; vertices may not repeat."""
        labels = np.full(n_vertices, -1, dtype=np.int64)
        for v, c in pairs:
            if labels[v] >= 0:
                raise ValueError("vertex %d labeled twice" % v)
            labels[v] = c
        return cls(labels)

    @property
    def n_labeled(self):
        return int(self.mask.sum())

    def validate(self, n_classes):
        if self.labels.max(initial=-1) >= n_classes:
            raise ValueError("label class index out of range")


def read_label_file(path, n_vertices):
    """Read labels from plain text, one "vertex_index class_index" per line."""
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError("%s:%d: expected 'vertex class'" % (path, lineno))
            pairs.append((int(parts[0]), int(parts[1])))
    return LabelConstraint.from_pairs(pairs, n_vertices)


def project_rows(Y):
    """Project every row of Y onto the probability simplex.

    Uses the iterative mean-shift-and-clip scheme: subtract the mean
    excess of the active coordinates, clip negatives, repeat. At most R
    passes are needed for rows of length R. Coordinates that land exactly
    on zero are kept active (the clip test is strict), so boundary rows
    pass through unchanged.

    Row sums are then canonicalized toward exactly 1.0 by folding the
    rounding residual into the smallest coordinate that can absorb it
    without changing sign. Rows that reach an exact sum are bitwise
    fixed points of the projection. In the rare row where the last ulp
    of residual rounds away in the recomputed sum no matter where it is
    added, the sum stays within one ulp of 1 and we stop rather than
    keep nudging coordinates.
    """
    Y = np.asarray(Y, dtype=float)
    n, r = Y.shape
    active = np.ones((n, r), dtype=bool)
    mu = np.zeros(n)
    for _ in range(r):
        na = active.sum(axis=1)
        mu = (np.where(active, Y, 0.0).sum(axis=1) - 1.0) / na
        X = Y - mu[:, None]
        neg = active & (X < 0.0)
        if not neg.any():
            break
        active &= X >= 0.0
    X = np.where(active, Y - mu[:, None], 0.0)
    for _ in range(4):
        s = X.sum(axis=1)
        bad = np.flatnonzero(s != 1.0)
        if bad.size == 0:
            break
        rows = X[bad]
        d = 1.0 - s[bad]
        can_absorb = rows > np.abs(d)[:, None]
        smallest = np.argmin(np.where(can_absorb, rows, np.inf), axis=1)
        fallback = np.argmax(rows, axis=1)
        j = np.where(can_absorb.any(axis=1), smallest, fallback)
        X[bad, j] += d
    return X


def project_simplex_row(y):
    """Euclidean projection of one vector onto the probability simplex."""
    y = np.asarray(y, dtype=float)
    return project_rows(y[None, :])[0]


def project_constraint(F, labels=None):
    """Project an assignment matrix onto the feasible set.

    Unlabeled rows go to their closest point on the simplex; labeled rows
    are overwritten with the exact unit vector of their class, which is
    both the projection restricted to that row and the constraint itself.
    """
    F = project_rows(F)
    if labels is not None and labels.n_labeled:
        idx = np.flatnonzero(labels.mask)
        F[idx, :] = 0.0
        F[idx, labels.labels[idx]] = 1.0
    return F
