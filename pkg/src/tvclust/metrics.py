"""Evaluation helpers: rounding, cluster quality, and trial selection."""

import numpy as np

__all__ = ["assign_clusters", "sharpness", "purity", "count_empty_classes",
           "select_best_trial"]


def assign_clusters(F):
    """Round an assignment matrix to hard labels.

    Each vertex goes to its largest coordinate; ties break toward the
    lowest class index.
    """
    return np.asarray(F).argmax(axis=1)


def sharpness(F):
    """Smallest row maximum of an assignment matrix.

    Equals 1 exactly when every row is a unit coordinate vector, and
    1/n_classes at the barycenter. A value above 0.99 means the matrix
    is an indicator for all practical purposes.
    """
    return float(np.asarray(F).max(axis=1).min())


def purity(pred, truth):
    """Fraction of vertices in the majority true class of their cluster.

    Standard external cluster-quality score in [0, 1]; permutation
    invariant in the predicted labels, 1 iff every predicted cluster is
    contained in one true class.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("label arrays differ in length")
    correct = 0
    for c in np.unique(pred):
        members = truth[pred == c]
        correct += int(np.bincount(members).max())
    return correct / len(pred)


def count_empty_classes(labels, n_classes):
    """Number of class indices in 0..n_classes-1 with no vertex assigned."""
    labels = np.asarray(labels)
    return int(sum(1 for r in range(n_classes) if not np.any(labels == r)))


def select_best_trial(energies, empty_counts=None):
    """Index of the winning trial.

    Picks the lowest discrete energy; trials whose rounding left one or
    more classes empty rank behind every complete one regardless of
    energy. Ties resolve to the lowest trial index, so selection is
    deterministic.
    """
    energies = list(energies)
    if not energies:
        raise ValueError("no trials to select from")
    if empty_counts is None:
        empty_counts = [0] * len(energies)
    order = sorted(range(len(energies)),
                   key=lambda i: (empty_counts[i] > 0, energies[i], i))
    return order[0]
