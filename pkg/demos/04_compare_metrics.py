"""
Comparing quality metrics against human preference
==================================================

Metric tables mix orientations. Each column is normalised to
smaller-is-better before the add or multiply aggregates. The rank aggregate
sorts each column under its own orientation.
"""

import numpy as np

from artscore import evaluation as ev

algorithms = ["adain", "wct", "sanet", "linear", "mast", "ours"]
fid = np.array([23.1, 27.4, 21.0, 24.9, 22.2, 20.5])
lpips = np.array([0.51, 0.62, 0.55, 0.48, 0.53, 0.50])
art = np.array([0.61, 0.70, 0.64, 0.52, 0.66, 0.72])
human = np.array([3, 5, 4, 1, 2, 6])

table = ev.MetricTable(algorithms, ["fid", "lpips", "artscore"], np.column_stack([fid, lpips, art]),
                       [ev.SMALLER, ev.SMALLER, ev.LARGER])
human_table = ev.MetricTable(algorithms, ["human"], human[:, None], [ev.LARGER])

for method, fn in ev.AGGREGATORS.items():
    print(f"{method:9s}", np.round(fn(table), 3))

print()
for name, method, r in ev.correlate_table(table, human_table):
    print(f"{name:20s} {method:8s} rho={r.statistic:+.4f} p={r.p_value:.4f}")

# With so few algorithms the exact permutation p-value is cheap to compare.
print("exact p for artscore:", round(ev.spearman_permutation_pvalue(art, human), 4))

# Paired human-study comparison of two metrics.
r = ev.mcnemar(31, 12)
print(f"McNemar chi2={r.statistic:.3f} p={r.p_value:.4f}")
