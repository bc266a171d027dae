"""Brute-force reference implementations used to check the fitted models."""

import numpy as np


def grid_argmin_1d(loss, lo, hi, n=2001, rounds=6):
    """Minimize a 1-D loss by repeatedly zooming a uniform grid."""
    for _ in range(rounds):
        xs = np.linspace(lo, hi, n)
        vals = np.array([loss(x) for x in xs])
        i = int(vals.argmin())
        step = xs[1] - xs[0]
        lo, hi = max(xs[max(i - 2, 0)], 0.0), xs[min(i + 2, n - 1)]
        if step == 0:
            break
    return float(xs[i])


def grid_kernel_a(P, t):
    P, t = np.asarray(P, float), np.asarray(t, float)
    guess = float(np.max(t * P))
    return grid_argmin_1d(lambda a: np.sum((t - a / P) ** 2), 0.0, 2 * guess)


def grid_two_term(x, y, alpha_hi, beta_hi, n=401, rounds=8):
    """Least-squares (alpha, beta) for y = alpha*x + beta on a zooming 2-D grid, both >= 0."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    a_lo, a_hi, b_lo, b_hi = 0.0, alpha_hi, 0.0, beta_hi
    for _ in range(rounds):
        A = np.linspace(a_lo, a_hi, n)
        B = np.linspace(b_lo, b_hi, n)
        # sse[i, j] for alpha A[i], beta B[j], expanded to avoid a 3-D array
        sxx, sx, sxy, sy, syy, m = (x * x).sum(), x.sum(), (x * y).sum(), y.sum(), (y * y).sum(), len(x)
        Ai, Bj = A[:, None], B[None, :]
        sse = Ai**2 * sxx + 2 * Ai * Bj * sx + m * Bj**2 - 2 * Ai * sxy - 2 * Bj * sy + syy
        i, j = np.unravel_index(int(sse.argmin()), sse.shape)
        da, db = A[1] - A[0], B[1] - B[0]
        a_lo, a_hi = max(A[i] - 3 * da, 0.0), A[i] + 3 * da
        b_lo, b_hi = max(B[j] - 3 * db, 0.0), B[j] + 3 * db
    return float(A[i]), float(B[j])


def grid_l1_location(y):
    """Constant minimizing the sum of absolute deviations (the median set)."""
    y = np.asarray(y, float)
    return grid_argmin_1d(lambda b: np.abs(y - b).sum(), float(y.min()), float(y.max()), n=4001)


def enumerate_root(f, lo, hi, n=200001):
    """Sign-change location of an increasing f on a dense grid, refined by zooming."""
    for _ in range(6):
        xs = np.linspace(lo, hi, n)
        vals = f(xs)
        i = int(np.argmax(vals >= 0))
        lo, hi = xs[max(i - 1, 0)], xs[i]
    return 0.5 * (lo + hi)
