"""Covariance, partial correlation, Fisher's z CI test and Pearson weights."""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _backend
from .encoding import EncodedMatrix
from .errors import SingularCovariance, TooFewSamples, ZeroVariance

PIVOT_TOL = 1e-10
CLAMP_EPS = 1e-12


class Degeneracy(str, enum.Enum):
    SINGULAR_COVARIANCE = "singular_covariance"
    ZERO_VARIANCE = "zero_variance"
    TOO_FEW_SAMPLES = "too_few_samples"


@dataclass(frozen=True)
class CiDecision:
    x: int
    y: int
    cond_set: tuple[int, ...]
    partial_r: float
    statistic: float
    p_value: float
    independent: bool
    degenerate: Degeneracy | None = None


def _as_array(m) -> np.ndarray:
    return m.data if isinstance(m, EncodedMatrix) else np.asarray(m, dtype=np.float64)


def covariance(m) -> np.ndarray:
    """Sample covariance (1/(n-1)) of the columns of an encoded matrix."""
    data = _as_array(m)
    n = data.shape[0]
    if n < 2:
        raise TooFewSamples(f"covariance needs at least 2 rows, got {n}")
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    np.fill_diagonal(cov, np.maximum(np.diag(cov), 0.0))
    return cov


def correlation_from_covariance(cov: np.ndarray) -> np.ndarray:
    """Unit-diagonal rescaling; zero-variance rows/columns are left at 0."""
    d = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(d > 0, 1.0 / d, 0.0)
    corr = cov * inv[:, None] * inv[None, :]
    corr = (corr + corr.T) / 2.0
    np.fill_diagonal(corr, np.where(d > 0, 1.0, 0.0))
    return np.ascontiguousarray(corr)


def _clamp(r: float) -> float:
    return min(max(r, -1.0 + CLAMP_EPS), 1.0 - CLAMP_EPS)


def _check_indices(x, y, cond_set, p):
    cond = tuple(sorted(int(c) for c in cond_set))
    if x == y or x in cond or y in cond or len(set(cond)) != len(cond):
        raise ValueError(f"indices must be distinct: x={x}, y={y}, cond={cond}")
    for i in (x, y, *cond):
        if not 0 <= i < p:
            raise IndexError(f"column index {i} out of range")
    return cond


def _partial_from_corr(corr, x, y, cond, kernels) -> float:
    if not cond:
        return _clamp(float(corr[x][y]))
    idx = np.array((x, y, *cond), dtype=np.int64)
    r, singular = kernels.partial_corr(corr, idx, PIVOT_TOL)
    if singular:
        raise SingularCovariance(x, y, cond)
    return _clamp(r)


def partial_correlation(cov, x: int, y: int, cond_set=(), backend: str | None = None) -> float:
    """Partial correlation of x and y given cond_set, from a covariance matrix.

    Equal to -P_xy / sqrt(P_xx P_yy) with P the inverse of the submatrix over
    {x, y} and the conditioning set; computed by eliminating the conditioning
    block of the unit-diagonal rescaled submatrix.  A pivot below 1e-10 means
    the submatrix is singular.  The result is clamped to [-1+1e-12, 1-1e-12].
    """
    cov = np.asarray(cov, dtype=np.float64)
    cond = _check_indices(int(x), int(y), cond_set, cov.shape[0])
    for v in (x, y):
        if not cov[v, v] > 0:
            raise ZeroVariance(f"column {v} has zero variance")
    idx = [x, y, *cond]
    sub = correlation_from_covariance(cov[np.ix_(idx, idx)])
    kernels = _backend.get(backend)
    if kernels is _backend.python_kernels:
        sub = sub.tolist()
    k = len(cond)
    try:
        return _partial_from_corr(sub, 0, 1, tuple(range(2, 2 + k)), kernels)
    except SingularCovariance:
        raise SingularCovariance(x, y, cond) from None


def fisher_z_test(m, x: int, y: int, cond_set=(), alpha: float = 0.01, cov=None,
                  raise_on_degenerate: bool = True) -> CiDecision:
    """Fisher's z test of x _||_ y | cond_set on the columns of an encoded matrix.

    With ``raise_on_degenerate=False`` degenerate cases come back as a
    dependent verdict carrying a ``degenerate`` flag instead of raising.
    """
    data = _as_array(m)
    n, p = data.shape
    cond = _check_indices(int(x), int(y), cond_set, p)
    try:
        if n <= len(cond) + 3:
            raise TooFewSamples(f"{n} rows is too few for a conditioning set of size {len(cond)}")
        if cov is None:
            cov = covariance(data)
        r = partial_correlation(cov, x, y, cond)
    except (TooFewSamples, ZeroVariance, SingularCovariance) as exc:
        if raise_on_degenerate:
            raise
        flag = {
            TooFewSamples: Degeneracy.TOO_FEW_SAMPLES,
            ZeroVariance: Degeneracy.ZERO_VARIANCE,
            SingularCovariance: Degeneracy.SINGULAR_COVARIANCE,
        }[type(exc)]
        return CiDecision(x, y, cond, math.nan, math.nan, math.nan, False, flag)
    stat, pval = _backend.kernels.fisher_z(r, n, len(cond))
    return CiDecision(x, y, cond, r, stat, pval, pval > alpha)


def pearson_arrays(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da = a - a.mean()
    db = b - b.mean()
    saa = float(da @ da)
    sbb = float(db @ db)
    if saa <= 0.0 or sbb <= 0.0:
        raise ZeroVariance("pearson correlation of a constant column")
    r = float(da @ db) / math.sqrt(saa * sbb)
    return min(max(r, -1.0), 1.0)


def pearson(m, x: int, y: int) -> float:
    """Sample Pearson correlation between two columns."""
    data = _as_array(m)
    return pearson_arrays(data[:, x], data[:, y])


class FisherZTest:
    """Cached Fisher-z independence query over one encoded matrix.

    Calling ``test(x, y, cond)`` returns True for independence.  The
    covariance is computed once and shared read-only, so queries can be
    issued from several threads.
    """

    def __init__(self, m, alpha: float = 0.01, backend: str | None = None):
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        self.data = _as_array(m)
        self.n, self.n_vars = self.data.shape
        self.alpha = alpha
        self.kernels = _backend.get(backend)
        cov = covariance(self.data)
        self._zero_var = np.diag(cov) <= 0.0
        corr = correlation_from_covariance(cov)
        self._corr = corr.tolist() if self.kernels is _backend.python_kernels else corr
        self._cache: dict = {}
        self._lock = threading.Lock()
        self.n_tests = 0

    def decision(self, x: int, y: int, cond=()) -> CiDecision:
        if x > y:
            x, y = y, x
        cond = tuple(sorted(cond))
        key = (x, y, cond)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.n <= len(cond) + 3:
            raise TooFewSamples(f"{self.n} rows is too few for a conditioning set of size {len(cond)}")
        for v in (x, y):
            if self._zero_var[v]:
                raise ZeroVariance(f"column {v} has zero variance")
        r = _partial_from_corr(self._corr, x, y, cond, self.kernels)
        stat, pval = self.kernels.fisher_z(r, self.n, len(cond))
        dec = CiDecision(x, y, cond, r, stat, pval, pval > self.alpha)
        with self._lock:
            self._cache[key] = dec
            self.n_tests += 1
        return dec

    def __call__(self, x: int, y: int, cond=()) -> bool:
        return self.decision(x, y, cond).independent
