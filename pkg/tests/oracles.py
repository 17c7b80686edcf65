"""Independent reference implementations used only by the tests.

Each one is written from the rule or formula directly, without calling the
package code it checks.
"""

import itertools

import numpy as np
from cvxopt import matrix, solvers

PARAMS = ("ph", "po2", "pco2", "be", "tco2")
INSIDE = {"ph": 7.40, "po2": 60.0, "pco2": 40.0, "be": 0.0, "tco2": 26.0}
BELOW = {"ph": 7.20, "po2": 45.0, "pco2": 28.0, "be": -6.0, "tco2": 18.0}
ABOVE = {"ph": 7.55, "po2": 90.0, "pco2": 60.0, "be": 7.0, "tco2": 34.0}


def severity_truth_table(inside):
    """Cascade outcome from inside/outside flags keyed by parameter name.

    The all-inside and all-outside branches are special cases of the two
    disjunction branches, so the cascade collapses to two clauses in which
    PO2 plays no part. Returns 0, 1 or None (unlabeled).
    """
    companions = (inside["pco2"], inside["tco2"], inside["be"])
    if inside["ph"] and any(companions):
        return 0
    if not inside["ph"] and not all(companions):
        return 1
    return None


def all_combinations():
    for flags in itertools.product((True, False), repeat=5):
        yield dict(zip(PARAMS, flags))


def values_for(inside, outside=BELOW):
    return {p: INSIDE[p] if inside[p] else outside[p] for p in PARAMS}


def brute_force_auc(scores, y):
    pos = scores[y == 1]
    neg = scores[y == 0]
    diff = pos[:, None] - neg[None, :]
    return (np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / (pos.size * neg.size)


def reference_svm_dual(K, y, c):
    """Solve the soft-margin dual with cvxopt's interior-point QP.

    Returns ``(alpha, objective)`` with objective ``1/2 a'Qa - sum(a)``.
    """
    n = y.size
    yf = y.astype(float)
    P = matrix(np.outer(yf, yf) * K)
    q = matrix(-np.ones(n))
    G = matrix(np.vstack([-np.eye(n), np.eye(n)]))
    h = matrix(np.r_[np.zeros(n), np.full(n, float(c))])
    A = matrix(yf[None, :])
    opts = {"show_progress": False, "abstol": 1e-12, "reltol": 1e-12, "feastol": 1e-12}
    sol = solvers.qp(P, q, G, h, A, matrix(0.0), options=opts)
    a = np.array(sol["x"]).ravel()
    ay = a * yf
    return a, float(0.5 * ay @ K @ ay - a.sum())


def propagation_by_loops(W, seeds, iters=2000):
    """Plain-loop label propagation (uniform start, hard clamp) on a small dense graph."""
    n = len(seeds)
    F = [[0.5, 0.5] if s < 0 else [1.0 - s, float(s)] for s in seeds]
    for _ in range(iters):
        nxt = []
        for i in range(n):
            if seeds[i] >= 0:
                nxt.append(F[i])
                continue
            deg = sum(W[i][j] for j in range(n))
            if deg == 0:
                nxt.append(F[i])
                continue
            nxt.append([sum(W[i][j] * F[j][c] for j in range(n)) / deg for c in range(2)])
        F = nxt
    return np.array(F)
