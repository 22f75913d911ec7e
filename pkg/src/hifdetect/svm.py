"""Kernel SVM trained by sequential minimal optimization.

The binary trainer maximizes the soft-margin dual with the
max-violating-pair working-set rule: at each step the most violating
index pair over the feasible up/down sets is updated analytically, the
cached margins are refreshed in O(n), and the loop stops when the
feasibility gap closes below half the KKT tolerance, which leaves every
training point within the stated tolerance of its margin condition.
The bias is the mean margin residual over free support vectors, falling
back to the gap midpoint when every multiplier is at a bound.

Multiclass decomposition is one-versus-one by default (one-versus-all
available): inputs are z-scored once, each pair of classes trains a
binary machine (+1 is the higher class code), and prediction takes the
majority vote, breaking ties by the largest summed absolute decision
value over won votes and then by the lowest class code.  A decision
value of exactly zero counts as +1, erring toward fault declaration.

Penalty-factor selection runs stratified k-fold cross-validation over a
log-spaced C grid, scoring each C by mean ranking AUC of the decision
values; multipliers warm-start along the ascending grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataio import ClassCode, DataMatrix, Normalizer, normalize_apply, normalize_fit
from .errors import ConvergenceError, InvalidInputError
from .modelio import need, read_model, write_model
from .numerics import derive_seed, make_rng

_MAX_ITER = 100_000
_ALPHA_FLOOR = 1e-12
_ETA_FLOOR = 1e-12

_KINDS = ("linear", "polynomial", "rbf")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters.

    RBF uses exp(-||x-y||^2 / (2 sigma^2)); the polynomial kernel is
    (x'y + coef)^degree.
    """

    kind: str
    sigma: float = 0.5
    degree: int = 3
    coef: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidInputError(f"kernel kind must be one of {_KINDS}, got {self.kind!r}")
        if self.kind == "rbf" and self.sigma <= 0.0:
            raise InvalidInputError(f"sigma must be positive, got {self.sigma}")
        if self.kind == "polynomial":
            if self.degree < 1 or int(self.degree) != self.degree:
                raise InvalidInputError(f"degree must be an integer >= 1, got {self.degree}")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(kind="linear")

    @classmethod
    def polynomial(cls, degree: int = 3, coef: float = 1.0) -> "KernelSpec":
        return cls(kind="polynomial", degree=degree, coef=coef)

    @classmethod
    def rbf(cls, sigma: float = 0.5) -> "KernelSpec":
        return cls(kind="rbf", sigma=sigma)


def gram(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kernel matrix between row sets a (p x m) and b (r x m)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise InvalidInputError(
            f"row lengths differ: {a.shape[1]} vs {b.shape[1]}"
        )
    if spec.kind == "linear":
        return a @ b.T
    if spec.kind == "polynomial":
        return (a @ b.T + spec.coef) ** spec.degree
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.exp(-np.maximum(sq, 0.0) / (2.0 * spec.sigma**2))


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Kernel value for a single row pair."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInputError(f"rows must match in length, got {x.shape} vs {y.shape}")
    return float(gram(spec, x[None, :], y[None, :])[0, 0])


@dataclass(frozen=True)
class SvmClassifier:
    """Trained binary machine; alphas are signed (alpha_i * y_i)."""

    support_vectors: np.ndarray
    alphas: np.ndarray
    bias: float
    kernel: KernelSpec
    c: float
    kkt_tolerance: float
    support_indices: np.ndarray | None = None


def _smo(k: np.ndarray, y: np.ndarray, c: float, tol: float, alpha0=None):
    """Dual ascent on a precomputed Gram matrix.

    Returns (alpha, bias, iterations).  The stopping gap is tol/2 so
    recomputed margins stay within tol of their KKT conditions.
    """
    n = y.size
    alpha = np.zeros(n) if alpha0 is None else np.clip(alpha0, 0.0, c)
    f0 = k @ (alpha * y) if alpha0 is not None else np.zeros(n)
    v = y - f0
    pos = y > 0
    snap = 1e-12 * max(1.0, c)
    for iteration in range(_MAX_ITER):
        up = (pos & (alpha < c)) | (~pos & (alpha > 0.0))
        low = (pos & (alpha > 0.0)) | (~pos & (alpha < c))
        if not up.any() or not low.any():
            break
        vi = np.where(up, v, -np.inf)
        vj = np.where(low, v, np.inf)
        i = int(np.argmax(vi))
        j = int(np.argmin(vj))
        gap = v[i] - v[j]
        if gap <= 0.5 * tol:
            break
        eta = k[i, i] + k[j, j] - 2.0 * k[i, j]
        delta = y[j] * (v[j] - v[i]) / max(eta, _ETA_FLOOR)
        if y[i] != y[j]:
            lo_clip = max(0.0, alpha[j] - alpha[i])
            hi_clip = min(c, c + alpha[j] - alpha[i])
        else:
            lo_clip = max(0.0, alpha[i] + alpha[j] - c)
            hi_clip = min(c, alpha[i] + alpha[j])
        new_j = min(max(alpha[j] + delta, lo_clip), hi_clip)
        # snap bound dust so set membership reflects the true active set
        if new_j < snap:
            new_j = 0.0
        elif new_j > c - snap:
            new_j = c
        step_j = new_j - alpha[j]
        new_i = alpha[i] - y[i] * y[j] * step_j
        if new_i < snap:
            new_i = 0.0
        elif new_i > c - snap:
            new_i = c
        step_i = new_i - alpha[i]
        if step_i == 0.0 and step_j == 0.0:
            raise ConvergenceError(
                f"stalled at iteration {iteration} with gap {gap:.3e} (tol {tol})"
            )
        alpha[i] = new_i
        alpha[j] = new_j
        f0 += (y[i] * step_i) * k[:, i] + (y[j] * step_j) * k[:, j]
        v = y - f0
    else:
        up = (pos & (alpha < c)) | (~pos & (alpha > 0.0))
        low = (pos & (alpha > 0.0)) | (~pos & (alpha < c))
        gap = np.where(up, v, -np.inf).max() - np.where(low, v, np.inf).min()
        raise ConvergenceError(
            f"no convergence after {_MAX_ITER} iterations; gap {gap:.3e}, tol {tol}"
        )
    free = (alpha > _ALPHA_FLOOR) & (c - alpha > _ALPHA_FLOOR)
    if free.any():
        bias = float(np.mean(v[free]))
    else:
        up = (pos & (alpha < c)) | (~pos & (alpha > 0.0))
        low = (pos & (alpha > 0.0)) | (~pos & (alpha < c))
        hi = np.where(up, v, -np.inf).max()
        lo = np.where(low, v, np.inf).min()
        if not np.isfinite(hi) or not np.isfinite(lo):
            bias = float(v[alpha > _ALPHA_FLOOR].mean()) if (alpha > _ALPHA_FLOOR).any() else 0.0
        else:
            bias = 0.5 * float(hi + lo)
    return alpha, bias, iteration + 1


def _check_binary_labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise InvalidInputError("labels must be a 1-D sequence")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise InvalidInputError("labels must be -1 or +1")
    if np.all(y == 1.0) or np.all(y == -1.0):
        raise InvalidInputError("both labels must be present")
    return y


def train_binary(
    x: DataMatrix,
    y,
    c: float,
    kernel: KernelSpec,
    tol: float = 0.001,
    gram_ridge: float = 0.0,
) -> SvmClassifier:
    """Trains one soft-margin machine.

    Args:
        x: Observation rows (any labels on the matrix are ignored).
        y: One -1/+1 label per row; both classes must appear.
        c: Penalty factor, positive.
        kernel: Kernel family and parameters.
        tol: KKT slack tolerance (default 0.001).
        gram_ridge: Optional ridge added to the Gram diagonal; the
            default 0 trains on the unmodified kernel.

    Raises:
        InvalidInputError: on bad labels or parameters.
        ConvergenceError: if the pass limit is hit.
    """
    y = _check_binary_labels(y)
    obs = x.observations
    if y.size != obs.shape[0]:
        raise InvalidInputError(
            f"label count {y.size} does not match rows {obs.shape[0]}"
        )
    if c <= 0.0:
        raise InvalidInputError(f"penalty factor must be positive, got {c}")
    if tol <= 0.0:
        raise InvalidInputError(f"tolerance must be positive, got {tol}")
    if gram_ridge < 0.0:
        raise InvalidInputError(f"gram_ridge must be >= 0, got {gram_ridge}")
    k = gram(kernel, obs, obs)
    if gram_ridge > 0.0:
        k = k + gram_ridge * np.eye(obs.shape[0])
    alpha, bias, _ = _smo(k, y, c, tol)
    keep = alpha > _ALPHA_FLOOR
    if not keep.any():
        raise ConvergenceError("training produced no support vectors")
    return SvmClassifier(
        support_vectors=obs[keep].copy(),
        alphas=(alpha * y)[keep],
        bias=bias,
        kernel=kernel,
        c=c,
        kkt_tolerance=tol,
        support_indices=np.nonzero(keep)[0],
    )


def decision_value(clf: SvmClassifier, x) -> float:
    """f(x) = b + sum of signed alpha_l k(x_l, x)."""
    x = np.asarray(x, dtype=np.float64)
    m = clf.support_vectors.shape[1]
    if x.shape != (m,):
        raise InvalidInputError(f"observation must have shape ({m},), got {x.shape}")
    k = gram(clf.kernel, clf.support_vectors, x[None, :])[:, 0]
    return float(clf.bias + clf.alphas @ k)


def predict_binary(clf: SvmClassifier, x) -> int:
    """Sign of the decision value; exactly zero maps to +1."""
    return 1 if decision_value(clf, x) >= 0.0 else -1


def kkt_audit(clf: SvmClassifier, x: DataMatrix, y) -> float:
    """Largest KKT violation of the classifier over its training set.

    Per point: alpha = 0 requires y f >= 1, free requires y f = 1, and
    alpha = C requires y f <= 1; the violation is how far the margin is
    on the wrong side.  Requires the fit-time support indices.
    """
    if clf.support_indices is None:
        raise InvalidInputError("audit needs a classifier with fit-time indices")
    y = np.asarray(y, dtype=np.float64)
    obs = x.observations
    alpha = np.zeros(obs.shape[0])
    alpha[clf.support_indices] = np.abs(clf.alphas)
    k = gram(clf.kernel, obs, clf.support_vectors)
    yf = y * (k @ clf.alphas + clf.bias)
    worst = 0.0
    for i in range(obs.shape[0]):
        if alpha[i] <= _ALPHA_FLOOR:
            worst = max(worst, 1.0 - yf[i])
        elif clf.c - alpha[i] <= _ALPHA_FLOOR:
            worst = max(worst, yf[i] - 1.0)
        else:
            worst = max(worst, abs(yf[i] - 1.0))
    return float(max(worst, 0.0))


_STRATEGIES = ("one_vs_one", "one_vs_all")


@dataclass(frozen=True)
class MulticlassSvm:
    """Decomposed multiclass machine over z-scored inputs."""

    strategy: str
    classifiers: tuple
    targets: tuple
    label_map: np.ndarray
    normalizer: Normalizer


def train_multiclass(
    x: DataMatrix,
    strategy: str = "one_vs_one",
    kernel: KernelSpec | None = None,
    c: float = 10.0,
    tol: float = 0.001,
    gram_ridge: float = 0.0,
) -> MulticlassSvm:
    """Trains the pairwise (or per-class) machines on labeled data.

    Inputs are z-scored with a normalizer fit here and stored on the
    model.  In one_vs_one, +1 is the higher class code of each pair.

    Raises:
        InvalidInputError: without labels or with fewer than 2 classes.
        ConvergenceError: from a sub-problem, naming the pair.
    """
    if kernel is None:
        kernel = KernelSpec.rbf(0.5)
    if strategy not in _STRATEGIES:
        raise InvalidInputError(
            f"strategy must be one of {_STRATEGIES}, got {strategy!r}"
        )
    if x.labels is None:
        raise InvalidInputError("labeled observations are required")
    codes = np.unique(x.labels)
    if codes.size < 2:
        raise InvalidInputError(f"need at least 2 classes, got {codes.size}")
    normalizer = normalize_fit(x)
    z = normalize_apply(normalizer, x)
    obs, labels = z.observations, z.labels
    classifiers = []
    targets = []
    if strategy == "one_vs_one":
        pairs = [
            (int(codes[i]), int(codes[j]))
            for i in range(codes.size)
            for j in range(i + 1, codes.size)
        ]
        for lo, hi in pairs:
            mask = (labels == lo) | (labels == hi)
            sub = DataMatrix(obs[mask], x.channel_names)
            y = np.where(labels[mask] == hi, 1.0, -1.0)
            try:
                clf = train_binary(sub, y, c, kernel, tol, gram_ridge)
            except (InvalidInputError, ConvergenceError) as err:
                raise type(err)(f"classifier ({lo} vs {hi}): {err}") from err
            classifiers.append(clf)
            targets.append((lo, hi))
    else:
        for code in codes:
            y = np.where(labels == int(code), 1.0, -1.0)
            sub = DataMatrix(obs, x.channel_names)
            try:
                clf = train_binary(sub, y, c, kernel, tol, gram_ridge)
            except (InvalidInputError, ConvergenceError) as err:
                raise type(err)(f"classifier ({int(code)} vs rest): {err}") from err
            classifiers.append(clf)
            targets.append((int(code),))
    return MulticlassSvm(
        strategy=strategy,
        classifiers=tuple(classifiers),
        targets=tuple(targets),
        label_map=codes.astype(np.int64),
        normalizer=normalizer,
    )


def predict_multiclass(model: MulticlassSvm, x) -> ClassCode:
    """Majority vote (one_vs_one) or largest decision (one_vs_all)."""
    x = np.asarray(x, dtype=np.float64)
    m = model.normalizer.means.shape[0]
    if x.shape != (m,):
        raise InvalidInputError(f"observation must have shape ({m},), got {x.shape}")
    z = (x - model.normalizer.means) / model.normalizer.stds
    if model.strategy == "one_vs_all":
        values = [decision_value(clf, z) for clf in model.classifiers]
        return ClassCode(int(model.targets[int(np.argmax(values))][0]))
    votes = {int(code): 0 for code in model.label_map}
    strength = {int(code): 0.0 for code in model.label_map}
    for clf, (lo, hi) in zip(model.classifiers, model.targets):
        f = decision_value(clf, z)
        winner = hi if f >= 0.0 else lo
        votes[winner] += 1
        strength[winner] += abs(f)
    best = max(votes.values())
    tied = [code for code, n in votes.items() if n == best]
    if len(tied) > 1:
        top = max(strength[code] for code in tied)
        tied = [code for code in tied if strength[code] == top]
    return ClassCode(min(tied))


def auc(scores, labels) -> float:
    """Probability a positive outranks a negative; ties count half.

    Raises:
        InvalidInputError: unless both -1 and +1 labels appear.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary_labels(labels)
    if scores.shape != labels.shape:
        raise InvalidInputError("scores and labels must align")
    n = scores.size
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    n_pos = int(np.sum(labels > 0))
    n_neg = n - n_pos
    rank_sum = float(np.sum(ranks[labels > 0]))
    return (rank_sum - 0.5 * n_pos * (n_pos + 1)) / (n_pos * n_neg)


def cross_validate_c(
    x: DataMatrix,
    y,
    grid=None,
    folds: int = 3,
    seed: int = 0,
    kernel: KernelSpec | None = None,
    tol: float = 0.001,
    gram_ridge: float = 0.0,
):
    """Stratified k-fold selection of the penalty factor by mean AUC.

    Returns (best_c, curve) with curve rows (c, mean AUC) in ascending
    c order; ties go to the smallest c.  Multipliers warm-start along
    the grid within each fold.

    Raises:
        InvalidInputError: on a degenerate grid/folds, or when some fold
            lacks a class after 10 reseeded attempts.
    """
    if kernel is None:
        kernel = KernelSpec.rbf(0.5)
    y = _check_binary_labels(y)
    obs = x.observations
    n = obs.shape[0]
    if y.size != n:
        raise InvalidInputError(f"label count {y.size} does not match rows {n}")
    if folds < 2:
        raise InvalidInputError(f"folds must be >= 2, got {folds}")
    if grid is None:
        grid = np.logspace(math.log10(0.1), math.log10(100.0), 1000)
    grid = np.sort(np.asarray(grid, dtype=np.float64))
    if grid.size == 0 or grid[0] <= 0.0:
        raise InvalidInputError("penalty grid must be nonempty and positive")

    fold_of = None
    for attempt in range(10):
        rng = make_rng(derive_seed(seed, "cv", attempt))
        assign = np.empty(n, dtype=np.int64)
        for cls in (-1.0, 1.0):
            idx = np.nonzero(y == cls)[0]
            idx = idx[rng.permutation(idx.size)]
            assign[idx] = np.arange(idx.size) % folds
        ok = all(
            np.unique(y[assign == f]).size == 2 for f in range(folds)
        )
        if ok:
            fold_of = assign
            break
    if fold_of is None:
        raise InvalidInputError("a fold lacked a class after 10 attempts")

    k_full = gram(kernel, obs, obs)
    scores = np.zeros((folds, grid.size))
    for f in range(folds):
        te = fold_of == f
        tr = ~te
        k_tr = k_full[np.ix_(tr, tr)].copy()
        if gram_ridge > 0.0:
            k_tr[np.diag_indices_from(k_tr)] += gram_ridge
        k_te = k_full[np.ix_(te, tr)]
        y_tr, y_te = y[tr], y[te]
        alpha = None
        for ci, c in enumerate(grid):
            alpha, bias, _ = _smo(k_tr, y_tr, float(c), tol, alpha)
            f_te = k_te @ (alpha * y_tr) + bias
            scores[f, ci] = auc(f_te, y_te)
    means = scores.mean(axis=0)
    best = int(np.argmax(means))
    return float(grid[best]), np.column_stack([grid, means])


def save_svm(model: MulticlassSvm, path) -> None:
    kernel = model.classifiers[0].kernel
    scalars = {
        "strategy": model.strategy,
        "n_classifiers": len(model.classifiers),
        "kernel_kind": kernel.kind,
        "kernel_sigma": kernel.sigma,
        "kernel_degree": kernel.degree,
        "kernel_coef": kernel.coef,
        "c": model.classifiers[0].c,
        "kkt_tolerance": model.classifiers[0].kkt_tolerance,
    }
    vectors = {
        "label_map": model.label_map.astype(np.float64),
        "means": model.normalizer.means,
        "stds": model.normalizer.stds,
    }
    matrices = {}
    for idx, (clf, target) in enumerate(zip(model.classifiers, model.targets)):
        vectors[f"target_{idx}"] = np.asarray(target, dtype=np.float64)
        vectors[f"alphas_{idx}"] = clf.alphas
        scalars[f"bias_{idx}"] = clf.bias
        matrices[f"support_{idx}"] = clf.support_vectors
    write_model(path, "svm", scalars, vectors, matrices)


def load_svm(path) -> MulticlassSvm:
    scalars, vectors, matrices = read_model(path, "svm")
    kind = need(scalars, "kernel_kind", path)
    kernel = KernelSpec(
        kind=kind,
        sigma=float(need(scalars, "kernel_sigma", path)),
        degree=int(need(scalars, "kernel_degree", path)),
        coef=float(need(scalars, "kernel_coef", path)),
    )
    count = need(scalars, "n_classifiers", path)
    classifiers = []
    targets = []
    for idx in range(count):
        classifiers.append(
            SvmClassifier(
                support_vectors=need(matrices, f"support_{idx}", path),
                alphas=need(vectors, f"alphas_{idx}", path),
                bias=float(need(scalars, f"bias_{idx}", path)),
                kernel=kernel,
                c=float(need(scalars, "c", path)),
                kkt_tolerance=float(need(scalars, "kkt_tolerance", path)),
            )
        )
        targets.append(tuple(int(t) for t in need(vectors, f"target_{idx}", path)))
    return MulticlassSvm(
        strategy=need(scalars, "strategy", path),
        classifiers=tuple(classifiers),
        targets=tuple(targets),
        label_map=need(vectors, "label_map", path).astype(np.int64),
        normalizer=Normalizer(
            means=need(vectors, "means", path), stds=need(vectors, "stds", path)
        ),
    )
