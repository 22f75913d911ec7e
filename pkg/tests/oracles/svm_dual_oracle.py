"""Reference solver for the soft-margin SVM dual, plus a problem corpus.

The solver is deliberately independent of the library's SMO path: it
runs accelerated projected gradient ascent on the dual, enforcing
feasibility by exact projection onto the box [0, C]^n intersected with
the hyperplane y'alpha = 0.  The projection shift is found by bisection
on the monotone constraint residual.  Only numpy primitives are used.
"""

import numpy as np


def project(p, y, c):
    """Euclidean projection of p onto {0 <= a <= c, y'a = 0}."""
    span = float(np.max(np.abs(p))) + c + 1.0
    lo, hi = -span, span
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        if y @ np.clip(p - mid * y, 0.0, c) > 0.0:
            lo = mid
        else:
            hi = mid
    return np.clip(p - 0.5 * (lo + hi) * y, 0.0, c)


def dual_objective(k, y, alpha):
    s = alpha * y
    return float(alpha.sum() - 0.5 * (s @ k @ s))


def solve_dual(k, y, c, max_iter=200_000):
    """Maximizes the dual; returns (alpha, bias)."""
    y = np.asarray(y, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    q = k * np.outer(y, y)
    step = 1.0 / max(float(np.linalg.eigvalsh(q).max()), 1e-12)
    alpha = project(np.zeros(y.size), y, c)
    mom = alpha.copy()
    t = 1.0
    for it in range(max_iter):
        prev = alpha
        alpha = project(mom + step * (1.0 - q @ mom), y, c)
        if alpha @ q @ alpha * 0.5 - alpha.sum() > prev @ q @ prev * 0.5 - prev.sum():
            # momentum overshoot: restart from the last monotone point
            mom = prev
            t = 1.0
            alpha = project(mom + step * (1.0 - q @ mom), y, c)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        mom = alpha + ((t - 1.0) / t_next) * (alpha - prev)
        t = t_next
        if np.max(np.abs(alpha - prev)) <= 1e-15:
            break
        if it % 64 == 0 and it > 0:
            residual = alpha - project(alpha + step * (1.0 - q @ alpha), y, c)
            if np.max(np.abs(residual)) <= 1e-11:
                break
    f0 = k @ (alpha * y)
    v = y - f0
    free = (alpha > 1e-9) & (c - alpha > 1e-9)
    if free.any():
        bias = float(np.mean(v[free]))
    else:
        pos = y > 0
        up = (pos & (alpha < c)) | (~pos & (alpha > 0.0))
        low = (pos & (alpha > 0.0)) | (~pos & (alpha < c))
        hi = np.where(up, v, -np.inf).max()
        lo = np.where(low, v, np.inf).min()
        bias = 0.5 * float(hi + lo) if np.isfinite(hi) and np.isfinite(lo) else 0.0
    return alpha, bias


def oracle_predictions(k, y, alpha, bias):
    """Signs of the decision values on the training rows; 0 maps to +1."""
    f = k @ (alpha * y) + bias
    return np.where(f >= 0.0, 1, -1)


def _blobs(rng, n_pos, n_neg, center, spread):
    pos = center + spread * rng.standard_normal((n_pos, 2))
    neg = -center + spread * rng.standard_normal((n_neg, 2))
    x = np.vstack([pos, neg])
    y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    return x, y


def corpus():
    """25 fixed problems of at most 8 points each.

    Five families (cleanly separable under linear and RBF kernels,
    overlapping clouds, XOR, and duplicate rows with conflicting
    labels), five seeds per family.  Returns a list of dicts with keys
    name, x, y, c, kernel (kind/sigma/degree/coef tuple).
    """
    problems = []
    for i in range(5):
        rng = np.random.default_rng(100 + i)
        x, y = _blobs(rng, 3 + i % 2, 3, np.array([2.0, 2.0]), 0.4)
        problems.append(
            dict(name=f"separable-linear-{i}", x=x, y=y, c=1.0 + i, kernel=("linear", 0.5, 3, 1.0))
        )
    for i in range(5):
        rng = np.random.default_rng(200 + i)
        x, y = _blobs(rng, 4, 3 + i % 2, np.array([1.5, -1.5]), 0.3)
        problems.append(
            dict(name=f"separable-rbf-{i}", x=x, y=y, c=10.0, kernel=("rbf", 1.0, 3, 1.0))
        )
    for i in range(5):
        rng = np.random.default_rng(300 + i)
        x, y = _blobs(rng, 4, 4, np.array([0.5, 0.5]), 1.0)
        problems.append(
            dict(name=f"overlap-rbf-{i}", x=x, y=y, c=1.0, kernel=("rbf", 1.0, 3, 1.0))
        )
    for i in range(5):
        rng = np.random.default_rng(400 + i)
        base = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        x = base + 0.05 * rng.standard_normal(base.shape)
        y = np.array([1.0, 1.0, -1.0, -1.0])
        problems.append(
            dict(name=f"xor-rbf-{i}", x=x, y=y, c=10.0, kernel=("rbf", 0.5, 3, 1.0))
        )
    for i in range(5):
        rng = np.random.default_rng(500 + i)
        dup = rng.uniform(-1.0, 1.0, size=2)
        far = rng.uniform(2.0, 3.0, size=2)
        x = np.vstack([dup, dup, far, -far])
        y = np.array([1.0, -1.0, 1.0, -1.0])
        kernel = ("rbf", 0.8, 3, 1.0) if i % 2 == 0 else ("linear", 0.5, 3, 1.0)
        problems.append(dict(name=f"dup-conflict-{i}", x=x, y=y, c=2.0, kernel=kernel))
    return problems
