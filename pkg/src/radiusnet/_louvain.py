"""Dense two-phase Louvain on a modularity matrix ``B = A - P``."""

import numpy as np


def _local_moves(B, rng, tol):
    k = B.shape[0]
    labels = np.arange(k)
    diag = np.diag(B)
    improved = False
    moved = True
    while moved:
        moved = False
        for i in rng.permutation(k):
            w = np.bincount(labels, weights=B[i], minlength=k)
            a = labels[i]
            w[a] -= diag[i]
            best = int(np.argmax(w))
            if w[best] > w[a] + tol:
                labels[i] = best
                moved = improved = True
    return labels, improved


def louvain_labels(B, rng, tol=1e-12):
    """Labels ``1..C`` numbered by each community's smallest node index."""
    B = np.asarray(B, dtype=float)
    membership = np.arange(B.shape[0])
    while True:
        labels, improved = _local_moves(B, rng, tol)
        if not improved:
            break
        _, inv = np.unique(labels, return_inverse=True)
        membership = inv[membership]
        S = np.zeros((B.shape[0], inv.max() + 1))
        S[np.arange(B.shape[0]), inv] = 1.0
        B = S.T @ B @ S
    first = {}
    for c in membership:
        first.setdefault(c, len(first) + 1)
    return np.array([first[c] for c in membership], dtype=np.int64)
