"""Fisher discriminant analysis for fault classification.

Scatter matrices are accumulated per class (S_k), summed into the
within-class scatter S_w, and contrasted with the between-class scatter
S_b built from class-mean offsets.  The discriminant directions V_q are
the top q-1 generalized eigenvectors of (S_b, S_w).  Classification uses
the Gaussian discriminant score in the projected space: a Mahalanobis
term against the class's projected covariance, a log-prior, and a
log-determinant penalty; the largest score wins, ties going to the
lowest class code.  A per-class T-squared statistic against the
projected class scatter supports detection-style use.

Projected class covariances are regularized by eps * trace/dim * I
(eps = 1e-8) before inversion and log-determinant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataio import ClassCode, DataMatrix
from .errors import IllConditionedError, InvalidInputError
from .modelio import need, read_model, write_model
from .numerics import eig_generalized

_PROJ_RIDGE = 1e-8


@dataclass(frozen=True)
class FdaModel:
    """Fitted discriminant model.

    The full scatter matrices are fit-time artifacts; a model loaded
    from disk carries only the projected per-class scatters it needs for
    classification, and the raw scatter fields are None.
    """

    class_codes: np.ndarray
    class_counts: np.ndarray
    class_means: np.ndarray
    total_mean: np.ndarray
    priors: np.ndarray
    fda_vectors: np.ndarray
    eigenvalues: np.ndarray
    proj_scatter: np.ndarray
    within_scatter: np.ndarray | None = None
    between_scatter: np.ndarray | None = None
    class_scatter: np.ndarray | None = None

    @property
    def n_channels(self) -> int:
        return self.fda_vectors.shape[0]

    @property
    def n_classes(self) -> int:
        return self.class_codes.size


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def fit_fda(x: DataMatrix) -> FdaModel:
    """Fits scatter matrices and discriminant directions.

    Args:
        x: Labeled observations; at least two classes, each with at
            least two rows.

    Raises:
        InvalidInputError: on missing labels or an undersized class,
            naming the class.
    """
    if x.labels is None:
        raise InvalidInputError("labeled observations are required")
    obs, labels = x.observations, x.labels
    codes = np.unique(labels)
    if codes.size < 2:
        raise InvalidInputError(f"need at least 2 classes, got {codes.size}")
    n, m = obs.shape
    q = codes.size
    counts = np.empty(q, dtype=np.int64)
    means = np.empty((q, m))
    class_scatter = np.empty((q, m, m))
    for idx, code in enumerate(codes):
        rows = obs[labels == code]
        if rows.shape[0] < 2:
            raise InvalidInputError(
                f"class {int(code)} has {rows.shape[0]} rows; need at least 2"
            )
        counts[idx] = rows.shape[0]
        means[idx] = rows.mean(axis=0)
        centered = rows - means[idx]
        class_scatter[idx] = _symmetrize(centered.T @ centered)
    total_mean = obs.mean(axis=0)
    s_w = _symmetrize(class_scatter.sum(axis=0))
    offsets = means - total_mean
    s_b = _symmetrize((offsets.T * counts) @ offsets)
    eig = eig_generalized(s_b, s_w)
    v_q = eig.eigenvectors[:, : q - 1].copy()
    proj = np.empty((q, q - 1, q - 1))
    for idx in range(q):
        proj[idx] = _symmetrize(v_q.T @ class_scatter[idx] @ v_q)
    return FdaModel(
        class_codes=codes.astype(np.int64),
        class_counts=counts,
        class_means=means,
        total_mean=total_mean,
        priors=counts / float(n),
        fda_vectors=v_q,
        eigenvalues=eig.eigenvalues[: q - 1].copy(),
        proj_scatter=proj,
        within_scatter=s_w,
        between_scatter=s_b,
        class_scatter=class_scatter,
    )


def _check_row(model: FdaModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_channels,):
        raise InvalidInputError(
            f"observation must have shape ({model.n_channels},), got {x.shape}"
        )
    return x


def _class_index(model: FdaModel, k) -> int:
    hits = np.nonzero(model.class_codes == int(k))[0]
    if hits.size == 0:
        raise InvalidInputError(f"class {k!r} not in model")
    return int(hits[0])


def _regularized(mat: np.ndarray) -> np.ndarray:
    dim = mat.shape[0]
    return mat + (_PROJ_RIDGE * np.trace(mat) / dim) * np.eye(dim)


def _chol(mat: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(_regularized(mat))
    except np.linalg.LinAlgError:
        raise IllConditionedError(
            f"{what} not positive definite after regularization"
        ) from None


def fda_project(model: FdaModel, x) -> np.ndarray:
    """Projects a row onto the q-1 discriminant directions."""
    return model.fda_vectors.T @ _check_row(model, x)


def fda_t2(model: FdaModel, x, k, a: int | None = None) -> float:
    """Per-class T-squared against the projected class scatter.

    Args:
        a: Retained direction count, defaulting to all q-1.

    Raises:
        InvalidInputError: on an unknown class or a outside [1, q-1].
        IllConditionedError: if the projected scatter is singular even
            after regularization.
    """
    x = _check_row(model, x)
    idx = _class_index(model, k)
    q1 = model.fda_vectors.shape[1]
    if a is None:
        a = q1
    if not (1 <= a <= q1):
        raise InvalidInputError(f"retained count must be in [1, {q1}], got {a}")
    d = x - model.class_means[idx]
    z = model.fda_vectors[:, :a].T @ d
    chol = _chol(model.proj_scatter[idx][:a, :a], f"projected scatter of class {k}")
    y = np.linalg.solve(chol, z)
    return float(y @ y)


def discriminant(model: FdaModel, x) -> np.ndarray:
    """Per-class discriminant scores g_k, ordered by class code.

    g_k = -0.5 d'Q_k^-1 d + ln(prior_k) - 0.5 ln det Q_k with d the
    projected offset from the class mean and Q_k the projected class
    covariance.
    """
    x = _check_row(model, x)
    q = model.n_classes
    scores = np.empty(q)
    for idx in range(q):
        d = x - model.class_means[idx]
        z = model.fda_vectors.T @ d
        cov = model.proj_scatter[idx] / (model.class_counts[idx] - 1.0)
        chol = _chol(cov, f"projected covariance of class {model.class_codes[idx]}")
        y = np.linalg.solve(chol, z)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        scores[idx] = (
            -0.5 * float(y @ y) + math.log(model.priors[idx]) - 0.5 * logdet
        )
    return scores


def classify(model: FdaModel, x) -> ClassCode:
    """Largest discriminant wins; ties go to the lowest class code."""
    scores = discriminant(model, x)
    return ClassCode(int(model.class_codes[int(np.argmax(scores))]))


def save_fda(model: FdaModel, path) -> None:
    matrices = {
        "class_means": model.class_means,
        "fda_vectors": model.fda_vectors,
    }
    for idx, code in enumerate(model.class_codes):
        matrices[f"proj_scatter_{int(code)}"] = model.proj_scatter[idx]
    write_model(
        path,
        "fda",
        scalars={},
        vectors={
            "class_codes": model.class_codes.astype(np.float64),
            "class_counts": model.class_counts.astype(np.float64),
            "total_mean": model.total_mean,
            "priors": model.priors,
            "eigenvalues": model.eigenvalues,
        },
        matrices=matrices,
    )


def load_fda(path) -> FdaModel:
    scalars, vectors, matrices = read_model(path, "fda")
    codes = need(vectors, "class_codes", path).astype(np.int64)
    proj = np.stack(
        [need(matrices, f"proj_scatter_{int(code)}", path) for code in codes]
    )
    return FdaModel(
        class_codes=codes,
        class_counts=need(vectors, "class_counts", path).astype(np.int64),
        class_means=need(matrices, "class_means", path),
        total_mean=need(vectors, "total_mean", path),
        priors=need(vectors, "priors", path),
        fda_vectors=need(matrices, "fda_vectors", path),
        eigenvalues=need(vectors, "eigenvalues", path),
        proj_scatter=proj,
    )
