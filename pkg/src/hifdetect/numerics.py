"""Dense linear algebra and statistical primitives used by the detectors.

Decompositions are delegated to LAPACK through numpy and wrapped with the
validation, ordering, and sign conventions the rest of the package relies
on: singular values and eigenvalues are returned in descending order, and
every singular/eigenvector is normalised so that its first entry larger
than 1e-12 in magnitude is positive.  The F-distribution quantile is
computed locally by bisection on the regularized incomplete beta
representation of the F CDF, which keeps the package free of a statistics
dependency and makes the result bit-stable across platforms.

Random numbers come from numpy's PCG64 generator, pinned explicitly so
that a seed fully determines every downstream draw.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedError, InvalidInputError

# Entries of a vector at or below this magnitude are treated as zero when
# picking the entry that anchors the sign convention.
_SIGN_EPS = 1e-12

# Relative ridge added to s_w before factorization in eig_generalized.
_GENEIG_RIDGE = 1e-8


def _as_matrix(a, name: str) -> np.ndarray:
    """Validates and returns `a` as a 2-D float64 array with finite entries."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _check_symmetric(a: np.ndarray, name: str) -> np.ndarray:
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > 1e-12 * scale:
        raise InvalidInputError(
            f"{name} is not symmetric (max |a - a^T| = {asym:.3e})"
        )
    # Work on the exactly symmetric part so LAPACK sees a clean input.
    return 0.5 * (a + a.T)


def _fix_column_signs(*mats: np.ndarray) -> None:
    """Flips columns in place so the first non-negligible entry of the
    leading matrix's column is positive; companion matrices flip with it."""
    lead = mats[0]
    for k in range(lead.shape[1]):
        col = lead[:, k]
        nonzero = np.nonzero(np.abs(col) > _SIGN_EPS)[0]
        if nonzero.size and col[nonzero[0]] < 0.0:
            for m in mats:
                m[:, k] = -m[:, k]


@dataclass
class SvdResult:
    """Thin singular value decomposition a = u @ diag(s) @ v.T."""

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray


@dataclass
class EigResult:
    """Eigenvalues (descending) and matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def svd(a) -> SvdResult:
    """Thin SVD with descending singular values and fixed vector signs.

    Args:
        a: Real matrix, any shape (n, m) with n, m >= 1.

    Returns:
        SvdResult with u (n, k), singular_values (k,), v (m, k) for
        k = min(n, m); u and v have orthonormal columns and the first
        entry of each column of v larger than 1e-12 in magnitude is
        positive.

    Raises:
        InvalidInputError: if `a` is empty or contains non-finite values.
    """
    arr = _as_matrix(a, "a")
    u, s, vt = np.linalg.svd(arr, full_matrices=False)
    v = vt.T
    _fix_column_signs(v, u)
    return SvdResult(u=u, singular_values=s, v=v)


def eig_symmetric(a) -> EigResult:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Args:
        a: Square matrix, symmetric to 1e-12 relative to its magnitude.

    Returns:
        EigResult; eigenvector columns are orthonormal and sign-fixed.

    Raises:
        InvalidInputError: if `a` is not square or not symmetric.
    """
    arr = _check_symmetric(_as_matrix(a, "a"), "a")
    w, vec = np.linalg.eigh(arr)
    order = np.argsort(w)[::-1]
    w = w[order]
    vec = vec[:, order]
    _fix_column_signs(vec)
    return EigResult(eigenvalues=w, eigenvectors=vec)


def eig_generalized(s_b, s_w) -> EigResult:
    """Solves s_b @ v = lam * s_w @ v for symmetric s_b and s_w.

    s_w receives a relative ridge (1e-8 * trace(s_w) / m on the diagonal)
    before a Cholesky reduction to an ordinary symmetric problem, so the
    nearly singular within-class scatters produced by tightly clustered
    data still factor.  Eigenvalues come back in descending order;
    eigenvectors are unit-norm columns with the usual sign convention.

    Raises:
        InvalidInputError: on shape mismatch or asymmetry.
        IllConditionedError: if s_w fails to factor even after the ridge.
    """
    b = _check_symmetric(_as_matrix(s_b, "s_b"), "s_b")
    w = _check_symmetric(_as_matrix(s_w, "s_w"), "s_w")
    if b.shape != w.shape:
        raise InvalidInputError(
            f"s_b and s_w must have equal shapes, got {b.shape} and {w.shape}"
        )
    m = w.shape[0]
    trace = float(np.trace(w))
    if not trace > 0.0:
        raise IllConditionedError(
            f"s_w has non-positive trace ({trace:.3e}); cannot regularize"
        )
    w_reg = w + (_GENEIG_RIDGE * trace / m) * np.eye(m)
    try:
        chol = np.linalg.cholesky(w_reg)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(
            "s_w is singular beyond the 1e-8 relative ridge; "
            "Cholesky factorization failed"
        ) from exc
    # Reduce to the symmetric problem (L^-1 s_b L^-T) y = lam y.
    y = np.linalg.solve(chol, b)
    mid = np.linalg.solve(chol, y.T).T
    mid = 0.5 * (mid + mid.T)
    lam, yvec = np.linalg.eigh(mid)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    yvec = yvec[:, order]
    vec = np.linalg.solve(chol.T, yvec)
    vec /= np.linalg.norm(vec, axis=0, keepdims=True)
    _fix_column_signs(vec)
    return EigResult(eigenvalues=lam, eigenvectors=vec)


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _beta_cont_frac(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta function,
    evaluated with the modified Lentz scheme."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for 0 <= x <= 1."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cont_frac(a, b, x) / a
    return 1.0 - front * _beta_cont_frac(b, a, 1.0 - x) / b


def _f_cdf(x: float, d1: int, d2: int) -> float:
    if x <= 0.0:
        return 0.0
    t = d1 * x / (d1 * x + d2)
    return _betainc_reg(0.5 * d1, 0.5 * d2, t)


def f_quantile(p: float, d1: int, d2: int) -> float:
    """Quantile of the F distribution with (d1, d2) degrees of freedom.

    Bisects the regularized-incomplete-beta form of the F CDF, so the
    returned x satisfies CDF_F(x; d1, d2) = p to well within 1e-9 and is
    identical across runs and platforms.

    Args:
        p: Probability, strictly between 0 and 1.
        d1: Numerator degrees of freedom, integer >= 1.
        d2: Denominator degrees of freedom, integer >= 1.

    Raises:
        InvalidInputError: if p is outside (0, 1) or a dof is below 1.
    """
    if not (0.0 < p < 1.0):
        raise InvalidInputError(f"p must lie strictly in (0, 1), got {p}")
    if int(d1) != d1 or int(d2) != d2 or d1 < 1 or d2 < 1:
        raise InvalidInputError(
            f"degrees of freedom must be integers >= 1, got d1={d1}, d2={d2}"
        )
    d1 = int(d1)
    d2 = int(d2)
    lo = 0.0
    hi = 1.0
    doublings = 0
    while _f_cdf(hi, d1, d2) < p:
        hi *= 2.0
        doublings += 1
        if doublings > 4000:
            raise InvalidInputError(
                f"quantile bracket failed for p={p}, d1={d1}, d2={d2}"
            )
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _f_cdf(mid, d1, d2) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, lo):
            break
    return 0.5 * (lo + hi)


def derive_seed(base_seed: int, *tags) -> int:
    """Deterministic 64-bit child seed for a named sub-task.

    The child is the first eight bytes of SHA-256 over the decimal base
    seed joined with the string form of each tag, so any (seed, path)
    pair maps to the same stream on every platform.
    """
    text = "/".join([str(int(base_seed))] + [str(t) for t in tags])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def make_rng(seed: int) -> np.random.Generator:
    """Generator with the PCG64 stream pinned for reproducibility."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def rng_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    """One uniform draw from [lo, hi); returns lo exactly when lo == hi.

    The generator advances in place and acts as the threaded state: the
    same seed and call sequence always reproduce the same values.

    Raises:
        InvalidInputError: if lo > hi or either bound is non-finite.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidInputError(f"bounds must be finite, got [{lo}, {hi}]")
    if lo > hi:
        raise InvalidInputError(f"lower bound {lo} exceeds upper bound {hi}")
    return float(rng.uniform(lo, hi))
