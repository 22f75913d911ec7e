"""PCA fault detector: loading vectors, T-squared statistic, threshold.

The model is fit on normal-condition data only.  Rows are z-scored with
the training normalizer, the scaled matrix X/sqrt(n-1) is factored by
SVD, and the smallest leading set of components whose cumulative
singular-value energy reaches the variance target is retained.  A new
observation's score vector is its projection on those loadings, and its
T-squared statistic is the squared score norm with each coordinate
whitened by its singular value, so training data has mean T-squared of
about the retained count.  The detection threshold scales an F quantile
by a(n-1)(n+1)/(n(n-a)); a fault is declared on strict exceedance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataio import ClassCode, DataMatrix, Normalizer, normalize_apply, normalize_fit
from .errors import IllConditionedError, InvalidInputError
from .modelio import need, read_model, write_model
from .numerics import f_quantile, svd

_MIN_SINGULAR = 1e-12
_TARGET_SLACK = 1e-12


@dataclass(frozen=True)
class PcaModel:
    """Loadings and scale of a fitted normal-condition subspace."""

    normalizer: Normalizer
    loadings: np.ndarray
    singular_values: np.ndarray
    a: int
    n_train: int
    variance_captured: float


def fit_pca(x_normal: DataMatrix, variance_target: float = 0.98) -> PcaModel:
    """Fits the detector on normal-condition observations.

    Args:
        x_normal: Observation matrix; labels, if present, must all be
            normal.
        variance_target: Fraction of total variance the retained
            components must reach, in (0, 1].

    Returns:
        The fitted model; `a` is the smallest component count whose
        cumulative variance fraction reaches the target.

    Raises:
        InvalidInputError: on fault labels, fewer than two rows, or a
            target outside (0, 1].
    """
    if not (0.0 < variance_target <= 1.0):
        raise InvalidInputError(
            f"variance_target must be in (0, 1], got {variance_target}"
        )
    if x_normal.labels is not None and np.any(x_normal.labels != int(ClassCode.NORMAL)):
        raise InvalidInputError("training data must contain only normal rows")
    n, m = x_normal.observations.shape
    if n < 2:
        raise InvalidInputError(f"need at least 2 rows to fit, got {n}")
    if n < m:
        warnings.warn(
            f"fitting with fewer rows ({n}) than channels ({m})", stacklevel=2
        )
    normalizer = normalize_fit(x_normal)
    z = normalize_apply(normalizer, x_normal).observations
    result = svd(z / np.sqrt(n - 1.0))
    energy = result.singular_values**2
    cum = np.cumsum(energy) / energy.sum()
    a = int(np.searchsorted(cum, variance_target - _TARGET_SLACK) + 1)
    return PcaModel(
        normalizer=normalizer,
        loadings=result.v[:, :a].copy(),
        singular_values=result.singular_values[:a].copy(),
        a=a,
        n_train=n,
        variance_captured=float(cum[a - 1]),
    )


def _normalized_row(model: PcaModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    m = model.loadings.shape[0]
    if x.shape != (m,):
        raise InvalidInputError(f"observation must have shape ({m},), got {x.shape}")
    return (x - model.normalizer.means) / model.normalizer.stds


def project(model: PcaModel, x) -> np.ndarray:
    """Score vector (length a) of one observation row."""
    return model.loadings.T @ _normalized_row(model, x)


def t2_statistic(model: PcaModel, x) -> float:
    """T-squared of one observation: squared whitened score norm.

    Raises:
        IllConditionedError: if any retained singular value is below
            1e-12.
    """
    if np.any(model.singular_values < _MIN_SINGULAR):
        raise IllConditionedError(
            "retained singular values below 1e-12; refit with a lower target"
        )
    t = project(model, x)
    return float(np.sum((t / model.singular_values) ** 2))


def t2_threshold(model: PcaModel, alpha: float, dof: str = "retained") -> float:
    """Detection threshold at significance alpha.

    dof selects the component count in the formula: "retained" uses the
    a kept components (default), "full" uses all m channels.

    Raises:
        InvalidInputError: unless 0 < alpha < 1 and n_train exceeds the
            selected component count.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidInputError(f"alpha must be in (0, 1), got {alpha}")
    if dof == "retained":
        k = model.a
    elif dof == "full":
        k = model.loadings.shape[0]
    else:
        raise InvalidInputError(f"dof must be 'retained' or 'full', got {dof!r}")
    n = model.n_train
    if n <= k:
        raise InvalidInputError(
            f"threshold needs n_train > components, got n={n}, k={k}"
        )
    coeff = k * (n - 1.0) * (n + 1.0) / (n * (n - k))
    return coeff * f_quantile(1.0 - alpha, k, n - k)


def detect(model: PcaModel, x, alpha: float, dof: str = "retained") -> bool:
    """True when the observation is declared a fault.

    The comparison is strict: a statistic exactly at the threshold is
    still Normal.
    """
    return t2_statistic(model, x) > t2_threshold(model, alpha, dof)


def save_pca(model: PcaModel, path) -> None:
    write_model(
        path,
        "pca",
        scalars={
            "n_train": model.n_train,
            "a": model.a,
            "variance_captured": model.variance_captured,
        },
        vectors={
            "means": model.normalizer.means,
            "stds": model.normalizer.stds,
            "singular_values": model.singular_values,
        },
        matrices={"loadings": model.loadings},
    )


def load_pca(path) -> PcaModel:
    scalars, vectors, matrices = read_model(path, "pca")
    return PcaModel(
        normalizer=Normalizer(
            means=need(vectors, "means", path), stds=need(vectors, "stds", path)
        ),
        loadings=need(matrices, "loadings", path),
        singular_values=need(vectors, "singular_values", path),
        a=need(scalars, "a", path),
        n_train=need(scalars, "n_train", path),
        variance_captured=need(scalars, "variance_captured", path),
    )
