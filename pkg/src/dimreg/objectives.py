"""Dense skip-gram objectives and their analytic gradients.

``X`` is the ``n x d`` embedding matrix and ``S`` an ``n x n`` 0/1 similarity
matrix.  Sums run over ordered pairs, diagonal included, so for symmetric
``S`` every unordered pair is counted twice.  All gradients here are the true
gradients of the stated loss; the theory harness rescales where the proofs
use a different convention.
"""

import numpy as np
from scipy.special import expit, log_expit

sigmoid = expit
log_sigmoid = log_expit


def gram(X):
    return X @ X.T


def positive_loss(X, S):
    """-sum_{S_ij = 1} log sigma(<X_i, X_j>)"""
    return -float(np.sum(S * log_sigmoid(gram(X))))


def positive_grad(X, S):
    W = S * sigmoid(-gram(X))
    return -(W @ X + W.T @ X)


def negative_loss(X, S):
    """-sum_{S_ij = 0} log sigma(-<X_i, X_j>)"""
    return -float(np.sum((1 - S) * log_sigmoid(-gram(X))))


def negative_grad(X, S):
    W = (1 - S) * sigmoid(gram(X))
    return W @ X + W.T @ X


def all_to_all_loss(X):
    """-sum_{i,j} log sigma(-<X_i, X_j>) over all ordered pairs."""
    return -float(np.sum(log_sigmoid(-gram(X))))


def all_to_all_grad(X):
    return 2.0 * sigmoid(gram(X)) @ X


def _weights(n, weights):
    return np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)


def dimension_mean_loss(X, weights=None):
    """||X^T w||^2; ``w`` defaults to the all-ones vector."""
    v = X.T @ _weights(len(X), weights)
    return float(v @ v)


def dimension_mean_grad(X, weights=None):
    w = _weights(len(X), weights)
    return 2.0 * np.outer(w, w @ X)


def pair_positive_loss(X, pairs):
    """Positive loss restricted to a list of ordered pairs (a mini-batch)."""
    i, j = pairs[:, 0], pairs[:, 1]
    return -float(np.sum(log_sigmoid(np.einsum("ij,ij->i", X[i], X[j]))))


def similarity_matrix(pairs, n):
    """0/1 matrix with ``S[i, j] = 1`` for every listed pair."""
    S = np.zeros((n, n))
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    S[pairs[:, 0], pairs[:, 1]] = 1.0
    return S
