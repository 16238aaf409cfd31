"""Multivariate Gaussians and closed-form divergence/distance measures.

All five measures are evaluated directly from their closed forms for
Gaussian arguments; log-determinants go through Cholesky factors rather
than raw determinants so small covariances do not underflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

__all__ = [
    "GaussianNd",
    "Criterion",
    "CRITERION_NAMES",
    "ensure_spd",
    "kl_divergence",
    "renyi_divergence",
    "fisher_distance",
    "bhattacharyya_distance",
    "wasserstein2_squared",
    "divergence",
]

_SPD_FLOOR = 1e-12

CRITERION_NAMES = ("kl", "renyi", "fisher", "bhattacharyya", "wasserstein")


@dataclass(frozen=True)
class GaussianNd:
    """Gaussian with mean ``mean`` (d,) and SPD covariance ``cov`` (d, d)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1:
            raise ValueError("mean must be a vector")
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise ValueError(f"covariance must be {d}x{d}")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def ensure_spd(cov, floor: float = _SPD_FLOOR) -> np.ndarray:
    """Symmetrize and lift the spectrum so the smallest eigenvalue is >= floor.

    Filter covariances shrink toward singularity as measurements accumulate;
    this keeps factorizations well defined without materially changing any
    non-degenerate input.
    """
    cov = np.asarray(cov, dtype=float)
    sym = 0.5 * (cov + cov.T)
    lmin = float(np.linalg.eigvalsh(sym).min())
    if lmin < floor:
        sym = sym + (floor - lmin) * np.eye(sym.shape[0])
    return sym


def _chol(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("covariance is not positive definite") from None


def _logdet_from_chol(L: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def _check_pair(p: GaussianNd, q: GaussianNd) -> None:
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")


def kl_divergence(p_i: GaussianNd, p_j: GaussianNd) -> float:
    """Kullback-Leibler divergence D(p_i || p_j) between two Gaussians.

    0.5 * [log|S_j|/|S_i| + tr(S_j^-1 S_i) - d + (m_i-m_j)' S_j^-1 (m_i-m_j)]
    """
    _check_pair(p_i, p_j)
    d = p_i.dim
    cov_i = ensure_spd(p_i.cov)
    cov_j = ensure_spd(p_j.cov)
    L_i = _chol(cov_i)
    L_j = _chol(cov_j)
    dm = p_i.mean - p_j.mean
    sol = cho_solve((L_j, True), np.column_stack([cov_i, dm]))
    trace_term = float(np.trace(sol[:, :d]))
    quad = float(dm @ sol[:, d])
    return 0.5 * (_logdet_from_chol(L_j) - _logdet_from_chol(L_i) + trace_term - d + quad)


def renyi_divergence(p_i: GaussianNd, p_j: GaussianNd, alpha: float) -> float:
    """Renyi divergence of order alpha between two Gaussians.

    Uses the mixed covariance S_a = alpha*S_j + (1-alpha)*S_i:

        a/2 * (m_i-m_j)' S_a^-1 (m_i-m_j)
        - 1/(2(a-1)) * log( |S_a| / (|S_i|^(1-a) |S_j|^a) )

    Valid for 0 < alpha != 1 with S_a positive definite (it always is for
    alpha in (0, 1); for alpha > 1 indefinite mixtures are rejected).
    """
    _check_pair(p_i, p_j)
    if not (alpha > 0.0) or not np.isfinite(alpha):
        raise ValueError("alpha must be a positive finite number")
    if alpha == 1.0:
        raise ValueError("alpha = 1 is the KL limit; call kl_divergence instead")
    cov_i = ensure_spd(p_i.cov)
    cov_j = ensure_spd(p_j.cov)
    mixed = alpha * cov_j + (1.0 - alpha) * cov_i
    mixed = 0.5 * (mixed + mixed.T)
    eigs = np.linalg.eigvalsh(mixed)
    if eigs.min() <= 0.0:
        raise ValueError("mixed covariance alpha*S_j + (1-alpha)*S_i is not positive definite")
    L_a = _chol(mixed)
    dm = p_i.mean - p_j.mean
    quad = float(dm @ cho_solve((L_a, True), dm))
    log_ratio = (
        _logdet_from_chol(L_a)
        - (1.0 - alpha) * _logdet_from_chol(_chol(cov_i))
        - alpha * _logdet_from_chol(_chol(cov_j))
    )
    return 0.5 * alpha * quad - log_ratio / (2.0 * (alpha - 1.0))


def fisher_distance(p_i: GaussianNd, p_j: GaussianNd) -> float:
    """Fisher-information-based discrepancy between two Gaussians.

    |S_j^-1 (m_i-m_j)|^2 + tr(S_j^-2 S_i - 2 S_j^-1 + S_i^-1)
    """
    _check_pair(p_i, p_j)
    cov_i = ensure_spd(p_i.cov)
    cov_j = ensure_spd(p_j.cov)
    L_i = _chol(cov_i)
    L_j = _chol(cov_j)
    dm = p_i.mean - p_j.mean
    y = cho_solve((L_j, True), dm)
    eye = np.eye(p_i.dim)
    inv_j = cho_solve((L_j, True), eye)
    inv_i = cho_solve((L_i, True), eye)
    jj_i = cho_solve((L_j, True), cho_solve((L_j, True), cov_i))
    return float(y @ y) + float(np.trace(jj_i - 2.0 * inv_j + inv_i))


def bhattacharyya_distance(p_i: GaussianNd, p_j: GaussianNd) -> float:
    """Bhattacharyya distance with the averaged covariance S = (S_i + S_j)/2."""
    _check_pair(p_i, p_j)
    cov_i = ensure_spd(p_i.cov)
    cov_j = ensure_spd(p_j.cov)
    avg = 0.5 * (cov_i + cov_j)
    L = _chol(avg)
    dm = p_i.mean - p_j.mean
    quad = float(dm @ cho_solve((L, True), dm))
    log_term = _logdet_from_chol(L) - 0.5 * (
        _logdet_from_chol(_chol(cov_i)) + _logdet_from_chol(_chol(cov_j))
    )
    return 0.125 * quad + 0.5 * log_term


def wasserstein2_squared(p_i: GaussianNd, p_j: GaussianNd) -> float:
    """Squared 2-Wasserstein distance between two Gaussians.

    |m_i-m_j|^2 + tr(S_i + S_j - 2 (S_i^1/2 S_j S_i^1/2)^1/2), with matrix
    square roots taken via symmetric eigendecomposition.
    """
    _check_pair(p_i, p_j)
    cov_i = ensure_spd(p_i.cov)
    cov_j = ensure_spd(p_j.cov)
    w, U = np.linalg.eigh(cov_i)
    root_i = (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T
    inner = root_i @ cov_j @ root_i
    inner = 0.5 * (inner + inner.T)
    w_inner = np.linalg.eigvalsh(inner)
    cross = 2.0 * float(np.sum(np.sqrt(np.clip(w_inner, 0.0, None))))
    dm = p_i.mean - p_j.mean
    return float(dm @ dm) + float(np.trace(cov_i) + np.trace(cov_j)) - cross


@dataclass(frozen=True)
class Criterion:
    """Named information-gain criterion; ``alpha`` only applies to 'renyi'."""

    name: str
    alpha: float | None = None

    def __post_init__(self):
        if self.name not in CRITERION_NAMES:
            raise ValueError(f"unknown criterion {self.name!r} (expected one of {CRITERION_NAMES})")
        if self.name == "renyi":
            if self.alpha is None:
                raise ValueError("renyi criterion requires alpha")
            if not (self.alpha > 0.0) or self.alpha == 1.0 or not np.isfinite(self.alpha):
                raise ValueError("renyi alpha must be positive, finite, and != 1")

    def label(self) -> str:
        if self.name == "renyi":
            return f"renyi({self.alpha:g})"
        return self.name


def divergence(criterion: Criterion, posterior: GaussianNd, prior: GaussianNd) -> float:
    """Evaluate ``criterion`` as D(posterior || prior)."""
    if criterion.name == "kl":
        return kl_divergence(posterior, prior)
    if criterion.name == "renyi":
        return renyi_divergence(posterior, prior, criterion.alpha)
    if criterion.name == "fisher":
        return fisher_distance(posterior, prior)
    if criterion.name == "bhattacharyya":
        return bhattacharyya_distance(posterior, prior)
    if criterion.name == "wasserstein":
        return wasserstein2_squared(posterior, prior)
    raise ValueError(f"unknown criterion {criterion.name!r}")
