"""Platt sigmoid fit ``P(y=1 | s) = 1 / (1 + exp(A s + B))``.

Uses Newton's method with backtracking on the regularized likelihood, with
Platt's smoothed targets ``(N+ + 1) / (N+ + 2)`` and ``1 / (N- + 2)`` so that
perfectly separated scores still give a finite fit (Lin, Lin & Weng, 2007).
"""

import numpy as np
from scipy.special import expit


def platt_calibrate(scores, y, max_iter=100, min_step=1e-10, sigma=1e-12, eps=1e-5):
    s = np.asarray(scores, dtype=float)
    y = np.asarray(y)
    positive = y > 0
    n_pos = int(positive.sum())
    n_neg = s.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("Platt calibration needs both classes")
    t = np.where(positive, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    A, B = 0.0, float(np.log((n_neg + 1.0) / (n_pos + 1.0)))

    def objective(A, B):
        f = s * A + B
        # log(1 + exp(f)) - (1 - t)' f; logaddexp avoids overflow for either sign of f.
        return float(np.sum(np.logaddexp(0.0, f) - (1.0 - t) * f))

    fval = objective(A, B)
    for _ in range(max_iter):
        f = s * A + B
        p = expit(-f)
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + np.sum(s * s * d2)
        h22 = sigma + np.sum(d2)
        h21 = np.sum(s * d2)
        d1 = t - p
        g1 = np.sum(s * d1)
        g2 = np.sum(d1)
        if abs(g1) < eps and abs(g2) < eps:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            newA, newB = A + step * dA, B + step * dB
            newf = objective(newA, newB)
            if newf < fval + 1e-4 * step * gd:
                A, B, fval = newA, newB, newf
                break
            step /= 2.0
        else:
            break
    return float(A), float(B)


def platt_probability(scores, A, B):
    f = np.asarray(scores, dtype=float) * A + B
    return expit(-f)
