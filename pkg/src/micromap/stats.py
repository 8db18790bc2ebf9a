"""Numeric kernels for derived figure statistics.

Everything in this module is a pure function over immutable inputs and is
safe to call concurrently.  No I/O, no drawing; the rendering layers consume
these values through the binding step.

Conventions used by the smoother:

* the local neighborhood of a point is its ``r = ceil(span * n)`` nearest
  x-neighbors (the point itself included), ties broken by input order;
* tricube weights are scaled by the maximum distance inside the selected
  neighborhood, so the boundary point always gets weight zero;
* robustness passes reweight by the bisquare of ``residual / (6 * MAD)``;
  a zero MAD ends the iteration early (the fit already interpolates);
* if a robustness pass zeroes every weight in some neighborhood, the fit
  at that point falls back to the raw y value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

__all__ = [
    "StatsError",
    "LQInput",
    "LowessParams",
    "WageStatRow",
    "location_quotient",
    "over_year_pct_change",
    "ci_from_prse",
    "lowess_fit",
    "lowess_residuals",
    "pca_scores",
]


class StatsError(ValueError):
    """Raised when a kernel is called outside its stated domain."""


@dataclass(frozen=True)
class LQInput:
    """Employment counts feeding a location quotient.

    ``cat`` counts are employment in the category of interest, ``total``
    counts are all employment, each for the local area and the nation.
    """

    emp_cat_area: float
    emp_total_area: float
    emp_cat_nat: float
    emp_total_nat: float

    def __post_init__(self) -> None:
        for label, value in (
            ("emp_cat_area", self.emp_cat_area),
            ("emp_cat_nat", self.emp_cat_nat),
        ):
            if not math.isfinite(value) or value < 0:
                raise StatsError(f"{label} must be a finite count >= 0, got {value!r}")
        for label, value in (
            ("emp_total_area", self.emp_total_area),
            ("emp_total_nat", self.emp_total_nat),
        ):
            if not math.isfinite(value) or value <= 0:
                raise StatsError(f"{label} must be a finite count > 0, got {value!r}")
        if self.emp_cat_area > self.emp_total_area:
            raise StatsError("category employment exceeds area total")
        if self.emp_cat_nat > self.emp_total_nat:
            raise StatsError("category employment exceeds national total")


@dataclass(frozen=True)
class LowessParams:
    """Smoother settings: neighborhood span and robustness passes."""

    span: float = 2.0 / 3.0
    robust_iters: int = 3

    def __post_init__(self) -> None:
        if not (0.0 < self.span <= 1.0):
            raise StatsError(f"span must be in (0, 1], got {self.span!r}")
        if self.robust_iters < 0 or int(self.robust_iters) != self.robust_iters:
            raise StatsError(f"robust_iters must be an integer >= 0, got {self.robust_iters!r}")

    def neighborhood_size(self, n: int) -> int:
        r = math.ceil(self.span * n)
        if r < 2:
            raise StatsError(
                f"span {self.span} gives a neighborhood of {r} for {n} points; need >= 2"
            )
        return min(r, n)


@dataclass(frozen=True)
class WageStatRow:
    """Published mean, its percent relative standard error, and five percentiles."""

    mean: float
    prse: float
    p10: float
    p25: float
    p50: float
    p75: float
    p90: float

    def __post_init__(self) -> None:
        if self.prse < 0:
            raise StatsError(f"prse must be >= 0, got {self.prse!r}")
        ordered = (self.p10, self.p25, self.p50, self.p75, self.p90)
        if any(a > b for a, b in zip(ordered, ordered[1:])):
            raise StatsError(f"percentiles out of order: {ordered}")

    def percentiles(self) -> tuple[float, float, float, float, float]:
        return (self.p10, self.p25, self.p50, self.p75, self.p90)


def location_quotient(inp: LQInput) -> float:
    """Ratio of local to national employment concentration for a category.

    Values above 1 mark a disproportionately high local concentration.
    """
    if inp.emp_cat_nat == 0:
        raise StatsError("undefined LQ (national concentration zero)")
    local = inp.emp_cat_area / inp.emp_total_area
    national = inp.emp_cat_nat / inp.emp_total_nat
    return local / national


def over_year_pct_change(series, lag: int) -> np.ndarray:
    """Percent change of each value against the value ``lag`` periods earlier.

    Entries before ``lag`` are NaN; a zero or missing base value makes that
    single entry NaN rather than failing the whole series.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise StatsError("series must be one-dimensional")
    if lag < 1 or int(lag) != lag:
        raise StatsError(f"lag must be an integer >= 1, got {lag!r}")
    if x.size <= lag:
        raise StatsError(f"series length {x.size} must exceed lag {lag}")
    out = np.full(x.size, np.nan)
    base = x[:-lag]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[lag:] = 100.0 * (x[lag:] - base) / base
    out[lag:][base == 0] = np.nan
    return out


def ci_from_prse(mean: float, prse: float, level: float = 0.90) -> tuple[float, float]:
    """Two-sided normal interval from a mean and its percent relative SE.

    Half-width is ``z * (prse / 100) * |mean|`` with ``z`` the two-sided
    standard normal quantile for ``level`` (1.6449 at 90%).
    """
    if prse < 0:
        raise StatsError(f"prse must be >= 0, got {prse!r}")
    if not (0.0 < level < 1.0):
        raise StatsError(f"confidence level must be in (0, 1), got {level!r}")
    z = NormalDist().inv_cdf((1.0 + level) / 2.0)
    half = z * (prse / 100.0) * abs(mean)
    return (mean - half, mean + half)


def _local_linear_pass(
    x: np.ndarray, y: np.ndarray, r: int, robustness: np.ndarray
) -> np.ndarray:
    n = x.size
    fitted = np.empty(n)
    for i in range(n):
        d = np.abs(x - x[i])
        # stable sort keeps input order for tied distances
        idx = np.argsort(d, kind="stable")[:r]
        ds = d[idx]
        dmax = ds[-1]
        if dmax > 0.0:
            w = (1.0 - (ds / dmax) ** 3) ** 3
        else:
            w = np.ones(r)
        w = w * robustness[idx]
        sw = w.sum()
        if sw <= 0.0:
            fitted[i] = y[i]
            continue
        xs = x[idx]
        ys = y[idx]
        xbar = (w @ xs) / sw
        ybar = (w @ ys) / sw
        dx = xs - xbar
        sxx = w @ (dx * dx)
        if sxx > 0.0:
            slope = (w @ (dx * (ys - ybar))) / sxx
            fitted[i] = ybar + slope * (x[i] - xbar)
        else:
            fitted[i] = ybar
    return fitted


def lowess_fit(x, y, params: LowessParams = LowessParams()) -> np.ndarray:
    """Locally weighted scatterplot smoothing, evaluated at each input x.

    Local linear fits with tricube distance weights over the nearest
    ``ceil(span * n)`` neighbors, followed by ``robust_iters`` bisquare
    reweighting passes.  Output order matches input order.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise StatsError("x and y must be one-dimensional and the same length")
    n = xa.size
    if n < 3:
        raise StatsError(f"need at least 3 points, got {n}")
    if not np.isfinite(xa).all() or not np.isfinite(ya).all():
        raise StatsError("x and y must be finite")
    if np.ptp(xa) == 0.0:
        raise StatsError("degenerate abscissa: all x values identical")
    r = params.neighborhood_size(n)
    robustness = np.ones(n)
    fitted = _local_linear_pass(xa, ya, r, robustness)
    for _ in range(params.robust_iters):
        resid = ya - fitted
        s = float(np.median(np.abs(resid)))
        if s <= 0.0:
            break
        u = resid / (6.0 * s)
        robustness = np.where(np.abs(u) < 1.0, (1.0 - u**2) ** 2, 0.0)
        fitted = _local_linear_pass(xa, ya, r, robustness)
    return fitted


def lowess_residuals(x, y, params: LowessParams = LowessParams()) -> np.ndarray:
    """Observed minus smoothed values; useful as a derived sort variable."""
    return np.asarray(y, dtype=float) - lowess_fit(x, y, params)


def pca_scores(matrix, component: int = 1, column_names=None) -> np.ndarray:
    """Scores on the k-th principal component of the standardized columns.

    Columns are centered and scaled to unit sample variance before the
    decomposition (correlation-matrix PCA), so candidate variables with
    incommensurate units contribute equally.  The sign is fixed so the first
    nonzero loading of the component is positive.
    """
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise StatsError("matrix must be two-dimensional (rows x variables)")
    n, p = X.shape
    if n < 2:
        raise StatsError(f"need at least 2 rows, got {n}")
    if not (1 <= component <= p):
        raise StatsError(f"component must be in 1..{p}, got {component}")
    if not np.isfinite(X).all():
        raise StatsError("matrix must be finite")
    names = list(column_names) if column_names is not None else [str(j) for j in range(p)]
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    for j in range(p):
        if std[j] == 0.0:
            raise StatsError(f"zero-variance column {names[j]}")
    Z = (X - mean) / std
    # SVD of the standardized matrix; right singular vectors are the
    # eigenvectors of the correlation matrix with singular values descending.
    _, _, vt = np.linalg.svd(Z, full_matrices=False)
    loading = vt[component - 1]
    nonzero = np.nonzero(np.abs(loading) > 1e-12)[0]
    if nonzero.size and loading[nonzero[0]] < 0:
        loading = -loading
    return Z @ loading
