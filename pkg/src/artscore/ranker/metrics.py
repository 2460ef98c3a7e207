"""Ranking quality: NDCG and pairwise ordering accuracy over sequence sets."""

import numpy as np

from .. import seeding
from ..errors import ConfigError


def ndcg(scores, true_ranks):
    """Untruncated NDCG with linear gain (relevance of rank r is r).

    Items are placed by descending score; equal scores keep input order.
    When every relevance is zero the ideal DCG is 0 and the result is 1.
    """
    scores = np.asarray(scores, dtype=np.float64)
    rel = np.asarray(true_ranks, dtype=np.float64)
    if scores.ndim != 1 or scores.shape != rel.shape or scores.size == 0:
        raise ConfigError("scores and true_ranks must be equal-length non-empty vectors")
    discount = 1.0 / np.log2(np.arange(2, scores.size + 2))
    order = np.argsort(-scores, kind="stable")
    dcg = np.sum(rel[order] * discount)
    ideal = np.sum(np.sort(rel)[::-1] * discount)
    if ideal == 0.0:
        return 1.0
    return float(dcg / ideal)


def mean_ndcg(scores, ranks):
    """Average :func:`ndcg` over the rows of ``(S, n)`` score and rank arrays."""
    return float(np.mean([ndcg(s, r) for s, r in zip(scores, ranks)]))


def within_sequence_accuracy(scores, ranks, min_gap=2):
    """Fraction of same-sequence pairs at least ``min_gap`` ranks apart ordered correctly.

    Exact score ties count one half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    ranks = np.asarray(ranks)
    dr = ranks[:, :, None] - ranks[:, None, :]
    ds = scores[:, :, None] - scores[:, None, :]
    sel = dr >= min_gap
    if not sel.any():
        raise ConfigError("no pairs satisfy the rank gap")
    hits = (ds[sel] > 0).sum() + 0.5 * (ds[sel] == 0).sum()
    return float(hits / sel.sum())


def cross_sequence_accuracy(scores, ranks, min_gap=3, n_pairs=20000, seed=0):
    """Ordering accuracy on random pairs drawn from two different sequences."""
    scores = np.asarray(scores, dtype=np.float64)
    ranks = np.asarray(ranks)
    s, n = scores.shape
    if s < 2:
        raise ConfigError("need at least two sequences")
    r = seeding.rng(seed, "cross-pairs")
    hits = total = 0.0
    while total < n_pairs:
        m = 4 * n_pairs
        a = r.integers(s, size=m)
        b = r.integers(s - 1, size=m)
        b = b + (b >= a)
        ia = r.integers(n, size=m)
        ib = r.integers(n, size=m)
        gap = ranks[a, ia] - ranks[b, ib]
        keep = np.abs(gap) >= min_gap
        if not keep.any():
            raise ConfigError("no pairs satisfy the rank gap")
        gap, da = gap[keep], (scores[a, ia] - scores[b, ib])[keep]
        take = int(min(len(gap), n_pairs - total))
        signed = np.sign(gap[:take]) * da[:take]
        hits += (signed > 0).sum() + 0.5 * (signed == 0).sum()
        total += take
    return float(hits / total)
