"""Least-squares fits for scaling laws."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    points: int

    def to_dict(self):
        return asdict(self)


def fit_loglog(x, y, base=np.e) -> FitResult:
    """Fit log y = slope * log x + intercept (logs in ``base``)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if len(x) < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("need at least two positive points")
    lx, ly = np.log(x) / np.log(base), np.log(y) / np.log(base)
    res = stats.linregress(lx, ly)
    return FitResult(float(res.slope), float(res.intercept), float(res.rvalue**2), len(x))


def fit_geometric(j, y) -> FitResult:
    """Fit log2 y = slope * j + intercept; the decay exponent is -slope."""
    j, y = np.asarray(j, dtype=float), np.asarray(y, dtype=float)
    if len(j) < 2 or np.any(y <= 0):
        raise ValueError("need at least two positive points")
    res = stats.linregress(j, np.log2(y))
    return FitResult(float(res.slope), float(res.intercept), float(res.rvalue**2), len(j))
