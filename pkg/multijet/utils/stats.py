"""Small statistical helpers shared by the estimators and the validation suite."""

import math
from collections.abc import Sequence

import numpy as np


def mean_and_se(total: float, total_sq: float, count: int) -> tuple[float, float]:
    """Mean and standard error from a sum and a sum of squares."""
    if count < 1:
        raise ValueError("count must be positive")
    mean = total / count
    if count == 1:
        return mean, 0.0
    var = max(total_sq / count - mean * mean, 0.0) * count / (count - 1)
    return mean, math.sqrt(var / count)


def weighted_slope(
    x: Sequence[float], y: Sequence[float], sigma: Sequence[float] | None = None
) -> tuple[float, float, float]:
    """
    Weighted least-squares line fit.

    Args:
        x: Abscissae
        y: Ordinates
        sigma: Per-point standard deviations of y (None or zeros for unweighted)

    Returns:
        (slope, slope standard error, intercept)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    if sigma is None or not np.all(np.asarray(sigma) > 0):
        w = np.ones_like(x)
    else:
        w = 1.0 / np.asarray(sigma, dtype=float) ** 2
    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    slope = (w * (x - xbar) * (y - ybar)).sum() / sxx
    intercept = ybar - slope * xbar
    if x.size > 2:
        resid = y - intercept - slope * x
        scale = (w * resid**2).sum() / (x.size - 2)
        slope_se = math.sqrt(scale / sxx)
    else:
        slope_se = 0.0
    return float(slope), float(slope_se), float(intercept)


def weighted_intercept(
    x: Sequence[float], y: Sequence[float], sigma: Sequence[float]
) -> tuple[float, float]:
    """
    Value at x = 0 of the weighted least-squares line through (x, y).

    The standard error comes from the known sigmas, not from the residuals.

    Returns:
        (intercept, intercept standard error)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for an intercept")
    if not np.all(sigma > 0):
        raise ValueError("sigmas must be positive")
    w = 1.0 / sigma**2
    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    slope = (w * (x - xbar) * (y - ybar)).sum() / sxx
    return float(ybar - slope * xbar), math.sqrt(1.0 / sw + xbar * xbar / sxx)


def combined_se(*errors: float) -> float:
    """Standard error of a difference of independent estimates."""
    return math.sqrt(math.fsum(e * e for e in errors))


def within_band(
    value: float, reference: float, se: float, bands: float = 3.0, floor: float = 0.0
) -> bool:
    """Whether |value - reference| is within ``bands`` standard errors (or floor)."""
    return abs(value - reference) <= max(bands * se, floor)
