"""Algorithm-level scores, multi-metric aggregation and significance tests."""

import csv
import functools
import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError

SMALLER = "smaller_better"
LARGER = "larger_better"
_SUFFIX = {"smaller": SMALLER, "larger": LARGER}

# Upper bound on |exact permutation p - t-approximated p| over every untied
# pairing of n observations (measured maxima: 0.333, 0.150, 0.077, 0.048, 0.027).
PERMUTATION_GAP = {3: 0.34, 4: 0.16, 5: 0.08, 6: 0.05, 7: 0.03}


@dataclass
class MetricTable:
    """Algorithms (rows) by metrics (columns) with per-column orientation."""

    algorithms: list
    metrics: list
    values: np.ndarray
    orientation: list

    def __post_init__(self):
        self.algorithms = list(self.algorithms)
        self.metrics = list(self.metrics)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.orientation = list(self.orientation)
        if self.values.shape != (len(self.algorithms), len(self.metrics)):
            raise ConfigError(
                f"values have shape {self.values.shape}, expected "
                f"({len(self.algorithms)}, {len(self.metrics)})"
            )
        if len(self.orientation) != len(self.metrics):
            raise ConfigError("every metric needs an orientation")
        bad = [o for o in self.orientation if o not in (SMALLER, LARGER)]
        if bad:
            raise ConfigError(f"unknown orientations {bad}")
        if not self.metrics:
            raise ConfigError("table has no metrics")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("table has missing or non-finite cells")

    def column(self, name):
        return self.values[:, self.metrics.index(name)]

    def select(self, metrics):
        idx = [self.metrics.index(m) for m in metrics]
        return MetricTable(self.algorithms, [self.metrics[i] for i in idx], self.values[:, idx],
                           [self.orientation[i] for i in idx])


def read_metric_csv(path):
    """Load a table whose header reads ``algorithm,name:smaller,name:larger,...``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise FormatError(f"{path}: need a header and at least one row")
    header = [h.strip() for h in rows[0]]
    metrics, orientation = [], []
    for h in header[1:]:
        name, sep, suffix = h.rpartition(":")
        if not sep or suffix not in _SUFFIX:
            raise ConfigError(f"{path}: column {h!r} must end in ':smaller' or ':larger'")
        metrics.append(name)
        orientation.append(_SUFFIX[suffix])
    algorithms, values = [], []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(header):
            raise FormatError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        algorithms.append(row[0].strip())
        try:
            values.append([float(x) for x in row[1:]])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return MetricTable(algorithms, metrics, np.array(values), orientation)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def artscore_of_algorithm(scores):
    """Mean logistic sigmoid of an algorithm's raw per-image scores."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise ConfigError("need at least one score")
    return float(np.mean(sigmoid(scores)))


def normalize_metrics(table):
    """Min-max every column to [0, 1] and flip larger-better columns.

    A constant column becomes all zeros (with a warning).
    """
    v = table.values
    lo, hi = v.min(axis=0), v.max(axis=0)
    span = hi - lo
    out = np.zeros_like(v)
    for j, name in enumerate(table.metrics):
        if span[j] == 0.0:
            warnings.warn(f"metric {name!r} is constant; normalised to zeros", stacklevel=2)
            continue
        col = (v[:, j] - lo[j]) / span[j]
        out[:, j] = 1.0 - col if table.orientation[j] == LARGER else col
    return MetricTable(table.algorithms, table.metrics, out, [SMALLER] * len(table.metrics))


def average_ranks(x):
    """1-based ranks of ``x`` in ascending order; tied values share the mean rank."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    xs = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def aggregate_rank(table):
    """Sum over metrics of each algorithm's rank (1 = best); smaller is better."""
    total = np.zeros(len(table.algorithms))
    for j, orient in enumerate(table.orientation):
        col = table.values[:, j]
        total += average_ranks(-col if orient == LARGER else col)
    return total


def aggregate_add(table):
    """Row sums of the normalised table; smaller is better."""
    return normalize_metrics(table).values.sum(axis=1)


def aggregate_multiply(table):
    """Row products of ``1 + normalised value``; smaller is better."""
    return np.prod(1.0 + normalize_metrics(table).values, axis=1)


AGGREGATORS = {"rank": aggregate_rank, "add": aggregate_add, "multiply": aggregate_multiply}


# -- significance tests -------------------------------------------------------


@dataclass(frozen=True)
class StatResult:
    statistic: float
    p_value: float
    method: str


def _betacf(a, b, x, tol=1e-15, max_iter=500):
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a, b, x):
    """Regularised incomplete beta ``I_x(a, b)``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided(t, df):
    """``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def _pearson(x, y):
    x = x - x.mean()
    y = y - y.mean()
    return float(np.dot(x, y) / math.sqrt(np.dot(x, x) * np.dot(y, y)))


def spearman(a, b):
    """Spearman's rho with a two-sided Student-t p-value (``n - 2`` dof).

    Rho is the Pearson correlation of average ranks, so it is exact under
    ties. For ``|rho| = 1`` the p-value is 0.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    n = a.size
    if b.size != n:
        raise ConfigError("spearman inputs must have equal length")
    if n < 3:
        raise ConfigError("spearman needs at least 3 observations")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise ConfigError("spearman is undefined for a constant input")
    rho = _pearson(average_ranks(a), average_ranks(b))
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) >= 1.0 - 1e-15:
        return StatResult(rho, 0.0, "spearman-t")
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = student_t_two_sided(t, n - 2)
    return StatResult(rho, min(1.0, max(0.0, p)), "spearman-t")


def spearman_permutation_pvalue(a, b):
    """Exact two-sided permutation p-value of Spearman's rho, for ``n <= 8`` only.

    Enumerates every reordering of ``b``'s ranks. Against :func:`spearman` the
    t-approximated p-value differs by at most ``PERMUTATION_GAP[n]`` for
    ``3 <= n <= 7`` on untied data.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    n = a.size
    if n > 8:
        raise ConfigError("exact permutation p-values are limited to n <= 8")
    ra, rb = average_ranks(a), average_ranks(b)
    observed = abs(_pearson(ra, rb))
    null = _permutation_null(tuple(ra), tuple(np.sort(rb)))
    return float(np.mean(null >= observed - 1e-12))


@functools.lru_cache(maxsize=64)
def _permutation_null(ra, rb_sorted):
    """|rho| for every pairing of ``rb_sorted`` against ``ra``."""
    ra = np.array(ra)
    rb = np.array(rb_sorted)
    perms = rb[np.array(list(itertools.permutations(range(ra.size))))]
    ca = ra - ra.mean()
    cp = perms - perms.mean(axis=1, keepdims=True)
    return np.abs(cp @ ca / np.sqrt(np.sum(cp * cp, axis=1) * np.dot(ca, ca)))


def mcnemar(b, c, corrected=False):
    """McNemar's chi-square on discordant counts ``b`` and ``c`` (1 dof).

    ``corrected`` applies the continuity correction
    ``max(|b - c| - 1, 0)**2 / (b + c)``.
    """
    if b < 0 or c < 0:
        raise ConfigError("discordant counts must be non-negative")
    if b + c == 0:
        raise ConfigError("McNemar is undefined without discordant pairs")
    diff = abs(b - c)
    if corrected:
        diff = max(diff - 1, 0)
    chi2 = diff * diff / (b + c)
    return StatResult(float(chi2), math.erfc(math.sqrt(chi2 / 2.0)),
                      "mcnemar-corrected" if corrected else "mcnemar")


def pairwise_accuracy(score_pairs):
    """Share of ``(score_a, score_b, truth)`` pairs where the higher score wins.

    ``truth`` is ``"A"`` or ``"B"``; an exact tie scores one half.
    """
    pairs = list(score_pairs)
    if not pairs:
        raise ConfigError("need at least one pair")
    hits = 0.0
    for sa, sb, truth in pairs:
        if truth not in ("A", "B"):
            raise ConfigError(f"truth must be 'A' or 'B', got {truth!r}")
        if sa == sb:
            hits += 0.5
        elif (sa > sb) == (truth == "A"):
            hits += 1.0
    return hits / len(pairs)


def correlate_table(table, human):
    """Spearman of every metric and every aggregate of ``table`` against ``human``.

    ``human`` is a one-column :class:`MetricTable`. Values are oriented so a
    positive rho means agreement with the human preference.
    Returns a list of ``(name, method, StatResult)``.
    """
    if len(human.metrics) != 1:
        raise ConfigError("human table must have exactly one score column")
    lookup = dict(zip(human.algorithms, human.values[:, 0]))
    missing = [a for a in table.algorithms if a not in lookup]
    if missing:
        raise ConfigError(f"human table lacks algorithms {missing}")
    h = np.array([lookup[a] for a in table.algorithms])
    if human.orientation[0] == SMALLER:
        h = -h
    rows = []
    for j, name in enumerate(table.metrics):
        col = table.values[:, j]
        rows.append((name, "single", spearman(col if table.orientation[j] == LARGER else -col, h)))
    if len(table.metrics) > 1:
        for method, fn in AGGREGATORS.items():
            rows.append(("+".join(table.metrics), method, spearman(-fn(table), h)))
    return rows
