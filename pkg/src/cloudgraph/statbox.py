"""The 10-operator statistical feature bank.

For one input vector the bank produces, in this fixed, normative order:

    mean, std, median, skewness, kurtosis, geometric_mean,
    quantile_25, quantile_75, percentile_25, percentile_75

Conventions (all degenerate-safe):

* std is the population standard deviation sqrt(m2).
* skewness = m3 / m2^(3/2) and kurtosis = m4 / m2^2 (Pearson, non-excess);
  both are defined as 0 when m2 < epsilon.
* geometric_mean = exp(mean(log(max(|v|, epsilon)))).  Inputs here are
  signed (coordinates, Doppler velocities), so the operator runs on
  absolute values clamped away from zero.  NOTE: this deviates from the
  textbook geometric mean on signed data, deliberately, to keep the
  operator total and finite.
* quantile uses linear interpolation between order statistics at position
  p * (n - 1); percentile uses nearest-rank (sorted value at index
  ceil(p * n) - 1).  The two are distinct estimators on purpose.
* median is the quantile at p = 0.5 under the interpolation rule.

The input is sorted before anything is computed, which makes every output
exactly permutation invariant (bit for bit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput

STAT_NAMES = (
    "mean",
    "std",
    "median",
    "skewness",
    "kurtosis",
    "geometric_mean",
    "quantile_25",
    "quantile_75",
    "percentile_25",
    "percentile_75",
)

NUM_STATS = len(STAT_NAMES)


@dataclass(frozen=True)
class StatboxVector:
    """The 10 operator outputs for one input vector, in the fixed order."""

    mean: float
    std: float
    median: float
    skewness: float
    kurtosis: float
    geometric_mean: float
    quantile_25: float
    quantile_75: float
    percentile_25: float
    percentile_75: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STAT_NAMES], dtype=np.float64)


def _quantile_linear(sorted_vals: np.ndarray, p: float) -> float:
    n = sorted_vals.size
    pos = p * (n - 1)
    lo = int(math.floor(pos))
    frac = pos - lo
    if frac == 0.0 or lo + 1 >= n:
        return float(sorted_vals[lo])
    return float(sorted_vals[lo] + frac * (sorted_vals[lo + 1] - sorted_vals[lo]))


def _percentile_nearest_rank(sorted_vals: np.ndarray, p: float) -> float:
    n = sorted_vals.size
    idx = math.ceil(p * n) - 1
    return float(sorted_vals[max(idx, 0)])


def statbox(values, epsilon: float = 1e-12) -> StatboxVector:
    """Apply the operator bank to a non-empty vector of finite reals."""
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise EmptyInput("statbox requires at least one value")
    s = np.sort(v)
    mean = float(s.mean())
    d = s - mean
    d2 = d * d
    m2 = float(d2.mean())
    std = math.sqrt(m2)
    if m2 < epsilon:
        skewness = 0.0
        kurtosis = 0.0
    else:
        m3 = float((d2 * d).mean())
        m4 = float((d2 * d2).mean())
        skewness = m3 / m2**1.5
        kurtosis = m4 / (m2 * m2)
    gmean = math.exp(float(np.log(np.maximum(np.abs(s), epsilon)).mean()))
    return StatboxVector(
        mean=mean,
        std=std,
        median=_quantile_linear(s, 0.5),
        skewness=skewness,
        kurtosis=kurtosis,
        geometric_mean=gmean,
        quantile_25=_quantile_linear(s, 0.25),
        quantile_75=_quantile_linear(s, 0.75),
        percentile_25=_percentile_nearest_rank(s, 0.25),
        percentile_75=_percentile_nearest_rank(s, 0.75),
    )


def statbox_array(values, epsilon: float = 1e-12) -> np.ndarray:
    """statbox() flattened to a length-10 array."""
    return statbox(values, epsilon).as_array()


def statbox_columns(matrix, epsilon: float = 1e-12) -> np.ndarray:
    """Apply the bank to each column of an n x d matrix.

    Output layout is column-major by statistic blocks:
    [stats(col_0), stats(col_1), ...], each block in the fixed 10-order,
    giving a vector of length 10 * d.  Identical, bit for bit, to d
    independent statbox calls.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("statbox_columns expects an n x d matrix")
    if m.shape[0] == 0:
        raise EmptyInput("statbox_columns requires at least one row")
    return np.concatenate([statbox_array(m[:, j], epsilon) for j in range(m.shape[1])])
