"""Asymmetric-median balance terms and cluster energies.

The clustering model scores a soft cluster indicator f by the ratio

    E(f) = TV(f) / B(f),

where B(f) measures how far f sits from its lambda-median under an
asymmetric l1 norm that charges lambda per unit above the median and 1
per unit below. For a set indicator this ratio reduces to the balanced
cut value cut(A) / min(lambda |A|, |A^c|), which is what makes it a
faithful continuous stand-in for the discrete partitioning objective.
"""

import math

import numpy as np

from .graph import tv_norm, cut_value


class DegenerateClusterError(ValueError):
    """Raised when a cluster column is constant, so its balance term is zero."""


def default_lambda(n_classes):
    """Default asymmetry parameter for a given class count: R - 1."""
    if n_classes < 2:
        raise ValueError("need at least two classes")
    return float(n_classes - 1)


def lambda_median(f, lam):
    """Asymmetric median: the (k+1)-st largest value of f, k = floor(N / (lambda+1)).

    Values are ranked as a multiset, so repeated values occupy repeated
    ranks. For lambda = 1 this is the upper median. The index is clamped
    to the smallest value for extreme lambda so the result is always one
    of the stored values.
    """
    f = np.asarray(f, dtype=float)
    n = len(f)
    if n == 0:
        raise ValueError("empty function")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    k = min(int(math.floor(n / (lam + 1.0))), n - 1)
    return float(np.sort(f)[::-1][k])


def asym_l1_norm(f, lam):
    """Asymmetric l1 norm: sum of lambda*t for t >= 0 and -t for t < 0."""
    f = np.asarray(f, dtype=float)
    return float(lam * f[f > 0].sum() - f[f < 0].sum())


def balance_term(f, lam):
    """B(f): asymmetric l1 deviation of f from its lambda-median.

    Zero exactly when f is constant. For an indicator 1_A the value is
    min(lambda |A|, |A^c|), the denominator of the balanced cut.
    """
    f = np.asarray(f, dtype=float)
    return asym_l1_norm(f - lambda_median(f, lam), lam)


def balance_subgradient(f, lam):
    """A subgradient of the balance term at f.

    Entries are lambda above the median, -1 below, and
    (n_minus - lambda * n_plus) / n_zero on the median itself, where the
    three counts partition the vertices by their position relative to
    the median. The returned vector always sums to exactly 0.0 in floating
    point; the residual of the textbook formula is folded into one of the
    median-valued entries, which stays inside its valid range because the
    correction is at rounding scale.
    """
    f = np.asarray(f, dtype=float)
    med = lambda_median(f, lam)
    up = f > med
    lo = f < med
    tie = ~(up | lo)
    n_plus = int(up.sum())
    n_minus = int(lo.sum())
    n_zero = int(tie.sum())
    mval = (n_minus - lam * n_plus) / n_zero
    v = np.where(up, float(lam), np.where(lo, -1.0, mval))
    j = np.flatnonzero(tie)[-1]
    for _ in range(10):
        r = math.fsum(v)
        if r == 0.0:
            break
        v[j] -= r
    return v


def balance_terms(F, lam):
    """Balance term of every column of a matrix, in one vectorized pass.

    Matches balance_term(F[:, r], lam) per column to rounding error; the
    solver inner loop calls this once per iteration, which is why it is
    worth avoiding the column-by-column sort.
    """
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    if n == 0:
        raise ValueError("empty function")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    k = min(int(math.floor(n / (lam + 1.0))), n - 1)
    med = np.sort(F, axis=0)[n - 1 - k, :]
    D = F - med[None, :]
    return np.where(D > 0.0, lam * D, -D).sum(axis=0)


def median_counts(f, lam):
    """Counts (n_plus, n_zero, n_minus) of values above, at, and below the median."""
    f = np.asarray(f, dtype=float)
    med = lambda_median(f, lam)
    n_plus = int((f > med).sum())
    n_minus = int((f < med).sum())
    return n_plus, len(f) - n_plus - n_minus, n_minus


def cluster_energy(K, f, lam):
    """Ratio energy E(f) = TV(f) / B(f) of one soft cluster indicator."""
    b = balance_term(f, lam)
    if b <= 0.0:
        raise DegenerateClusterError("constant cluster column has zero balance")
    return tv_norm(K, f) / b


def discrete_energy(g, labels, lam, n_classes=None):
    """Balanced-cut objective of a hard partition.

    Sums cut(A_r) / min(lambda |A_r|, |A_r^c|) over the classes present
    in 0..n_classes-1. Every class must be non-empty and no class may
    cover the whole graph.
    """
    labels = np.asarray(labels)
    n = g.n_vertices
    if len(labels) != n:
        raise ValueError("label array length does not match vertex count")
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    total = 0.0
    for r in range(n_classes):
        size = int((labels == r).sum())
        if size == 0:
            raise DegenerateClusterError("class %d is empty" % r)
        if size == n:
            raise DegenerateClusterError("class %d covers the whole graph" % r)
        total += cut_value(g, labels == r) / min(lam * size, float(n - size))
    return total
