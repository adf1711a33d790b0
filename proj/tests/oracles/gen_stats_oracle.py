"""Writes stats_oracle.json: reference values computed with scipy.

Run: python3 gen_stats_oracle.py  (needs numpy and scipy)
"""
import json
import math
from pathlib import Path

import numpy as np
from scipy import stats


def ci95(xs):
    xs = np.asarray(xs, dtype=float)
    k = len(xs)
    s = xs.std(ddof=1)
    t = stats.t.ppf(0.975, k - 1)
    return {"scores": xs.tolist(), "mean": float(xs.mean()), "stddev": float(s),
            "t": float(t), "halfwidth": float(t * s / math.sqrt(k))}


def paired(a, b):
    r = stats.ttest_rel(a, b)
    return {"a": list(a), "b": list(b), "t": float(r.statistic), "p": float(r.pvalue)}


def main():
    rng = np.random.default_rng(20240501)
    out = {
        "ci95": [ci95([0.50, 0.60, 0.55, 0.58, 0.52])],
        "paired_t": [
            paired([0.61, 0.72, 0.55, 0.68, 0.64], [0.51, 0.621, 0.449, 0.582, 0.538]),
            paired([0.445, 0.52, 0.61, 0.48, 0.57], [0.43, 0.53, 0.58, 0.49, 0.55]),
        ],
        "t_quantile_975": [{"dof": d, "value": float(stats.t.ppf(0.975, d))}
                           for d in (1, 2, 3, 4, 9, 29, 100)],
        "relative_gain": [
            {"x": 44.5, "baseline": 26.6, "gain": (44.5 - 26.6) / 26.6},
            {"x": 58.4, "baseline": 45.0, "gain": (58.4 - 45.0) / 45.0},
        ],
    }
    for _ in range(20):
        k = int(rng.integers(2, 11))
        out["ci95"].append(ci95(np.round(rng.uniform(0.2, 0.9, k), 6)))
        a = np.round(rng.uniform(0.2, 0.9, k), 6)
        b = np.round(a - rng.normal(0.02, 0.05, k), 6)
        out["paired_t"].append(paired(a.tolist(), b.tolist()))
    path = Path(__file__).with_name("stats_oracle.json")
    path.write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main()
