"""Finite-size extrapolation of spectral gaps and time-series statistics.

The gap at size L is modeled as gamma + exp(alpha - L/beta).  For each
offset gamma on a sweep grid the model is linear in (alpha, 1/beta)
after taking ln(delta - gamma), so the inner fit is closed-form least
squares; the returned gamma minimizes the summed squared log residuals,
polished by a bounded scalar minimization between its grid neighbours.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    DegenerateSeriesError,
    InvalidParameterError,
    UnderdeterminedFitError,
)

_GUARD = 1e-12
_FLAT_SLOPE = 1e-12


@dataclass
class GapSeries:
    """Converged gaps delta(L) at one measurement strength."""

    points: list
    eta: float

    def __post_init__(self):
        self.points = [(int(L), float(d)) for L, d in self.points]
        sizes = [L for L, _ in self.points]
        if sizes != sorted(set(sizes)):
            raise InvalidParameterError("sizes must be strictly increasing")
        if any(d < 0 for _, d in self.points):
            raise InvalidParameterError("gaps must be nonnegative")

    @property
    def sizes(self) -> np.ndarray:
        return np.array([L for L, _ in self.points], dtype=float)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([d for _, d in self.points], dtype=float)


@dataclass
class GapFitResult:
    """Fitted (alpha, beta, gamma) with the residual cost at the optimum.

    gamma is the extrapolated infinite-size gap (may come out negative;
    floor at zero for phase classification).  flat_fit marks series with
    no resolvable L-dependence, where gamma pins to the top of the sweep
    grid and beta is infinite.
    """

    alpha: float
    beta: float
    gamma: float
    cost: float
    gamma_grid_size: int
    flat_fit: bool = False

    @property
    def limiting_gap(self) -> float:
        """gamma floored at zero (the gap is nonnegative by construction)."""
        return max(self.gamma, 0.0)


def _linear_fit_cost(sizes: np.ndarray, log_resid: np.ndarray) -> tuple[float, float, float]:
    """Least squares of y against (alpha - L/beta); returns (alpha, slope, rss)."""
    x_mean = sizes.mean()
    y_mean = log_resid.mean()
    dx = sizes - x_mean
    slope = float(dx @ (log_resid - y_mean) / (dx @ dx))
    alpha = float(y_mean - slope * x_mean)
    resid = log_resid - (alpha + slope * sizes)
    return alpha, slope, float(resid @ resid)


def fit_gap_extrapolation(series: GapSeries, grid_points: int = 2001) -> GapFitResult:
    """Sweep gamma over [-min delta, +min delta), fit, keep the best offset."""
    sizes = series.sizes
    deltas = series.deltas
    if sizes.size < 3:
        raise UnderdeterminedFitError("need gaps at three or more sizes")
    if np.any(deltas <= 0):
        raise DegenerateSeriesError("all gaps must be positive to sweep offsets")
    if grid_points < 3:
        raise InvalidParameterError("grid_points must be >= 3")

    dmin = deltas.min()
    grid = np.linspace(-dmin, dmin, grid_points, endpoint=False)
    grid = grid[grid < dmin - _GUARD]
    if grid.size == 0:
        raise DegenerateSeriesError("sweep grid is empty")

    #: rows = grid offsets; the inner (alpha, slope) fit is closed form.
    y = np.log(deltas[None, :] - grid[:, None])
    x_mean = sizes.mean()
    dx = sizes - x_mean
    sxx = dx @ dx
    y_mean = y.mean(axis=1)
    slope = (y - y_mean[:, None]) @ dx / sxx
    alpha = y_mean - slope * x_mean
    resid = y - (alpha[:, None] + slope[:, None] * sizes[None, :])
    cost = (resid**2).sum(axis=1)

    cost_min = cost.min()
    flat_cost = cost.max() - cost_min <= 1e-12 * (1.0 + cost_min)
    # Prefer the largest offset when the sweep cannot distinguish them.
    best = grid.size - 1 - int(np.argmin(cost[::-1]))
    gamma = float(grid[best])

    def cost_at(g: float) -> float:
        return _linear_fit_cost(sizes, np.log(deltas - g))[2]

    if not flat_cost:
        best_cost = float(cost[best])
        lo = grid[best - 1] if best > 0 else float(grid[0])
        hi = grid[best + 1] if best + 1 < grid.size else dmin - _GUARD
        if hi > lo:
            res = minimize_scalar(
                cost_at, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
            )
            if res.fun <= best_cost:
                best_cost = float(res.fun)
                gamma = float(res.x)
        # Exponentially converging series put the optimum a vanishing
        # offset u = min(delta) - gamma below the sweep endpoint, inside a
        # basin far narrower than any uniform grid cell; rescan the sweep
        # range geometrically in u (resolves offsets at every scale, and
        # gives alpha and beta their needed relative accuracy), then polish
        # each local dip of that scan.
        v_grid = np.linspace(np.log(_GUARD), np.log(2 * dmin), 512)
        v_costs = np.array([cost_at(dmin - np.exp(v)) for v in v_grid])
        interior = np.flatnonzero(
            (v_costs[1:-1] <= v_costs[:-2]) & (v_costs[1:-1] <= v_costs[2:])
        ) + 1
        for k in interior:
            res = minimize_scalar(
                lambda v: cost_at(dmin - np.exp(v)),
                bounds=(v_grid[k - 1], v_grid[k + 1]),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if res.fun < best_cost:
                best_cost = float(res.fun)
                gamma = dmin - float(np.exp(res.x))

    alpha_b, slope_b, cost_b = _linear_fit_cost(sizes, np.log(deltas - gamma))
    flat = flat_cost or slope_b >= -_FLAT_SLOPE
    beta = math.inf if abs(slope_b) < _FLAT_SLOPE else -1.0 / slope_b
    return GapFitResult(
        alpha=alpha_b,
        beta=beta,
        gamma=gamma,
        cost=cost_b,
        gamma_grid_size=grid_points,
        flat_fit=bool(flat),
    )


def load_gap_series(path, eta: float) -> GapSeries:
    """Read a gap series from a CSV with (at least) columns L and delta."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"L", "delta"} <= set(reader.fieldnames):
            raise InvalidParameterError(f"{path} needs columns L and delta")
        points = [(int(row["L"]), float(row["delta"])) for row in reader]
    return GapSeries(sorted(points), eta)


def equilibration_time(delta: float, tol: float = 1e-3, cap: int = 100_000) -> int:
    """Steps until exp(-delta t) decays to tol: ceil(|ln tol| / delta).

    Gapless points (delta below 1e-6) return the configured cap.
    """
    if delta < 0:
        raise InvalidParameterError("delta must be nonnegative")
    if delta < 1e-6:
        return cap
    return math.ceil(abs(math.log(tol)) / delta)


def timeseries_stats(samples: Sequence[float]) -> tuple[float, float, float]:
    """(mean, unbiased variance, standard error) of a nonempty series."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise InvalidParameterError("empty sample series")
    mean = float(x.mean())
    if x.size == 1:
        return mean, 0.0, 0.0
    var = float(x.var(ddof=1))
    return mean, var, math.sqrt(var / x.size)
