"""Reference values for the statistics tests, computed with SciPy.

Run `python3 tests/oracles/stats_reference.py` to regenerate the constants
frozen in tests/unit/test_stats.cpp and tests/acceptance/acceptance.cpp.
"""
import numpy as np
from scipy import stats

TABLES = {
    "textbook": [[1, 2, 3], [2, 3, 4], [10, 11, 12]],
    "unequal": [
        [4.2, 5.1, 3.9, 4.8, 5.5, 4.4],
        [5.0, 6.2, 5.8, 6.6, 5.1],
        [3.1, 2.7, 4.0, 3.3, 2.9, 3.8, 3.5],
        [4.9, 5.3, 4.1, 5.7],
    ],
    "shifted": [
        [0.12, -0.35, 0.41, -0.08, 0.27, -0.19, 0.05, 0.33],
        [-0.22, 0.18, 0.09, -0.41, 0.36, 0.02, -0.13, 0.25],
        [10.1, 9.7, 10.4, 9.9, 10.2, 9.8, 10.3, 10.0],
    ],
}

PEARSON = {
    "linear_noise": (
        [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        [2.1, 3.9, 6.2, 7.8, 10.1, 12.2, 13.8, 16.1, 18.0, 19.9],
    ),
    "weak": (
        [3.0, 7.0, 5.0, 8.0, 2.0, 6.0, 4.0, 9.0, 1.0, 5.0, 6.0, 7.0],
        [6.0, 5.0, 7.0, 4.0, 5.0, 8.0, 3.0, 6.0, 5.0, 4.0, 7.0, 6.0],
    ),
    "negative": (
        [0.5, 1.5, 2.0, 3.5, 4.0, 5.5, 6.0],
        [9.0, 7.5, 7.9, 5.1, 5.6, 2.2, 2.9],
    ),
}

if __name__ == "__main__":
    for name, groups in TABLES.items():
        f, p = stats.f_oneway(*groups)
        print(f"{name}: F={f:.17g} p={p:.17g}")
        res = stats.tukey_hsd(*groups)
        k = len(groups)
        for i in range(k):
            for j in range(i + 1, k):
                diff = np.mean(groups[i]) - np.mean(groups[j])
                print(f"  ({i},{j}) diff={diff:.17g} p={res.pvalue[i, j]:.17g}")
    for name, (x, y) in PEARSON.items():
        r, p = stats.pearsonr(x, y)
        print(f"{name}: r={r:.17g} p={p:.17g}")
    for q, k, df in [(3.5, 3, 10), (2.0, 4, 20), (4.2, 5, 60), (1.0, 2, 5), (6.0, 3, 2), (3.3, 4, 1000)]:
        print(f"ptukey q={q} k={k} df={df}: sf={stats.studentized_range.sf(q, k, df):.17g}")
