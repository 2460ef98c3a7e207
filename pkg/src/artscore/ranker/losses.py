"""Listwise ranking loss and the pointwise MSE baseline."""

import numpy as np

from ..errors import ConfigError


def _check(scores, ranking):
    scores = np.asarray(scores, dtype=np.float64)
    ranking = np.asarray(ranking)
    n = scores.shape[0]
    if scores.ndim != 1 or n == 0:
        raise ConfigError("scores must be a non-empty vector")
    if ranking.shape != (n,) or not np.array_equal(np.sort(ranking), np.arange(n)):
        raise ConfigError(f"ranking must be a permutation of 0..{n - 1}")
    return scores, ranking


def _tail_lse(s):
    """``out[i] = log(sum(exp(s[i:])))`` computed from the back."""
    return np.logaddexp.accumulate(s[::-1])[::-1]


def listmle_loss(scores, ranking):
    """Plackett-Luce negative log-likelihood of ``ranking``.

    ``ranking[i]`` is the index of the item placed at position ``i``, best
    (most artistic) first.
    """
    scores, ranking = _check(scores, ranking)
    s = scores[ranking]
    return float(np.sum(_tail_lse(s) - s))


def listmle_grad(scores, ranking):
    """Gradient of :func:`listmle_loss` with respect to ``scores``.

    The item at position ``j`` receives ``sum_{i<=j} softmax_i(s)_j - 1``, the
    softmax taken over the suffix starting at position ``i``.
    """
    scores, ranking = _check(scores, ranking)
    s = scores[ranking]
    lse = _tail_lse(s)
    n = s.shape[0]
    # probs[i, j] = exp(s_j - lse_i), valid for j >= i
    probs = np.exp(np.minimum(s[None, :] - lse[:, None], 0.0))
    probs *= np.triu(np.ones((n, n)))
    g_pos = probs.sum(axis=0) - 1.0
    grad = np.empty(n)
    grad[ranking] = g_pos
    return grad


def _targets(ranking):
    n = len(ranking)
    ranks = np.empty(n)
    # best-first ranking -> rank n-1 for position 0
    ranks[np.asarray(ranking)] = np.arange(n - 1, -1, -1)
    return ranks / (n - 1) if n > 1 else np.zeros(1)


def mse_rank_loss(scores, ranking):
    """Mean squared error against ranks rescaled to ``[0, 1]`` (``r / (n - 1)``).

    A single item gets target 0.
    """
    scores, ranking = _check(scores, ranking)
    return float(np.mean((scores - _targets(ranking)) ** 2))


def mse_rank_grad(scores, ranking):
    scores, ranking = _check(scores, ranking)
    return 2.0 * (scores - _targets(ranking)) / scores.shape[0]


LOSSES = {
    "listmle": (listmle_loss, listmle_grad),
    "mse": (mse_rank_loss, mse_rank_grad),
}
