"""Deterministic mean structure: linear trend plus daily/weekly harmonics.

The model is linear in its parameters: trend ``a + b*t`` over the sample
index plus, per seasonal block, ``k + sum_i a_i sin(2*pi*i*t/T) + b_i
cos(2*pi*i*t/T)``. Phase-shifted sinusoids are algebraically absorbed into
the paired sin/cos coefficients. Fitting removes components sequentially:
trend, then the weekly block, then the daily block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series_io import SeriesError, TravelTimeSeries

DEFAULT_HARMONICS = 3
SLOPE_T_THRESHOLD = 1.96


@dataclass(frozen=True)
class SeasonalBlock:
    """One periodic component: constant plus harmonic pairs."""

    k: float
    sin_coef: np.ndarray
    cos_coef: np.ndarray
    period: float

    def __post_init__(self):
        object.__setattr__(self, "sin_coef", np.atleast_1d(np.asarray(self.sin_coef, float)))
        object.__setattr__(self, "cos_coef", np.atleast_1d(np.asarray(self.cos_coef, float)))
        if self.period <= 0:
            raise SeriesError("seasonal period must be positive")
        if self.sin_coef.size < 1 or self.cos_coef.size < 1:
            raise SeriesError("seasonal block needs at least one harmonic")
        if not (np.all(np.isfinite(self.sin_coef)) and np.all(np.isfinite(self.cos_coef)) and np.isfinite(self.k)):
            raise SeriesError("seasonal coefficients must be finite")

    @classmethod
    def zero(cls, period: float, harmonics: int = DEFAULT_HARMONICS) -> "SeasonalBlock":
        return cls(0.0, np.zeros(harmonics), np.zeros(harmonics), period)

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.k, dtype=float)
        for i, a in enumerate(self.sin_coef, start=1):
            out += a * np.sin(2.0 * np.pi * i * t / self.period)
        for i, b in enumerate(self.cos_coef, start=1):
            out += b * np.cos(2.0 * np.pi * i * t / self.period)
        return out

    def integral(self, t1: float, t2: float) -> float:
        """Exact integral of the block over sample-index interval [t1, t2]."""
        total = self.k * (t2 - t1)
        for i, a in enumerate(self.sin_coef, start=1):
            w = 2.0 * np.pi * i / self.period
            total += a * (np.cos(w * t1) - np.cos(w * t2)) / w
        for i, b in enumerate(self.cos_coef, start=1):
            w = 2.0 * np.pi * i / self.period
            total += b * (np.sin(w * t2) - np.sin(w * t1)) / w
        return float(total)


@dataclass(frozen=True)
class SeasonalTrendModel:
    """Trend line plus daily and weekly harmonic blocks (sample-index domain)."""

    a: float
    b: float
    daily: SeasonalBlock
    weekly: SeasonalBlock

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise SeriesError("trend coefficients must be finite")
        if not self.weekly.period > self.daily.period:
            raise SeriesError("weekly period must exceed daily period")


@dataclass(frozen=True)
class TrendReport:
    a: float
    b: float
    slope_t_stat: float
    slope_se: float
    slope_retained: bool


def _values(series) -> np.ndarray:
    if isinstance(series, TravelTimeSeries):
        return series.values
    return np.asarray(series, dtype=float)


def fit_trend(series, t_threshold: float = SLOPE_T_THRESHOLD):
    """OLS line over the sample index; the slope is kept only if significant.

    Returns ``(a, b, TrendReport)``. An insignificant slope (|t| below the
    threshold) is zeroed so the trend degenerates to a stable mean.
    """
    y = _values(series)
    n = y.size
    if n < 3:
        raise SeriesError("trend fit needs at least 3 observations")
    t = np.arange(n, dtype=float)
    tbar = t.mean()
    sxx = float(((t - tbar) ** 2).sum())
    b_hat = float(((t - tbar) * (y - y.mean())).sum() / sxx)
    a_hat = float(y.mean() - b_hat * tbar)
    resid = y - (a_hat + b_hat * t)
    rss = float((resid**2).sum())
    if n > 2 and rss > 0:
        se = np.sqrt(rss / (n - 2) / sxx)
    else:
        se = 0.0
    if se > 0:
        t_stat = b_hat / se
    else:
        t_stat = np.inf if b_hat != 0 else 0.0
    retained = abs(t_stat) >= t_threshold
    if not retained:
        b_hat = 0.0
        a_hat = float(y.mean())
    return a_hat, b_hat, TrendReport(a_hat, b_hat, float(t_stat), float(se), retained)


def fit_seasonal(series, period: float, harmonics: int = DEFAULT_HARMONICS):
    """Least-squares harmonic fit at the given period.

    Returns ``(SeasonalBlock, r_squared)``.
    """
    y = _values(series)
    n = y.size
    if period <= 0:
        raise SeriesError("seasonal period must be positive")
    if harmonics < 1:
        raise SeriesError("need at least one harmonic")
    if n < 2 * period:
        raise SeriesError(
            f"series length {n} shorter than two periods ({2 * period:g})"
        )
    t = np.arange(n, dtype=float)
    cols = [np.ones(n)]
    for i in range(1, harmonics + 1):
        cols.append(np.sin(2.0 * np.pi * i * t / period))
    for i in range(1, harmonics + 1):
        cols.append(np.cos(2.0 * np.pi * i * t / period))
    design = np.column_stack(cols)
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise SeriesError(
            f"rank-deficient seasonal design ({harmonics} harmonics at period {period:g})"
        )
    fitted = design @ coef
    tss = float(((y - y.mean()) ** 2).sum())
    rss = float(((y - fitted) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    block = SeasonalBlock(
        k=float(coef[0]),
        sin_coef=coef[1 : harmonics + 1],
        cos_coef=coef[harmonics + 1 :],
        period=float(period),
    )
    return block, r2


def decompose(
    series: TravelTimeSeries,
    daily_period: float | None = None,
    weekly_period: float | None = None,
    harmonics: int = DEFAULT_HARMONICS,
    daily_only: bool = False,
):
    """Split a series into its deterministic part and a residual.

    Fits trend, then the weekly block, then the daily block, each on the
    residual of the previous step. Returns ``(SeasonalTrendModel, residual)``
    where the residual series carries ``is_residual=True``.
    """
    t_d = daily_period if daily_period is not None else round(24 * 60 / series.h)
    t_w = weekly_period if weekly_period is not None else round(7 * 24 * 60 / series.h)
    y = series.values
    n = y.size
    if not daily_only and n < 2 * t_w:
        raise SeriesError(
            f"series length {n} covers less than two weekly periods "
            f"({2 * t_w:g} samples); pass daily_only=True to skip the weekly block"
        )
    a, b, _ = fit_trend(series)
    resid = y - (a + b * np.arange(n, dtype=float))
    if daily_only:
        weekly = SeasonalBlock.zero(float(t_w), harmonics)
    else:
        weekly, _ = fit_seasonal(resid, t_w, harmonics)
        resid = resid - weekly.evaluate(np.arange(n, dtype=float))
    daily, _ = fit_seasonal(resid, t_d, harmonics)
    resid = resid - daily.evaluate(np.arange(n, dtype=float))
    model = SeasonalTrendModel(a=a, b=b, daily=daily, weekly=weekly)
    residual = series.with_values(resid, is_residual=True)
    return model, residual


def reconstruct(model: SeasonalTrendModel, t):
    """Evaluate the deterministic part at sample index *t* (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    out = model.a + model.b * t_arr
    out = out + model.daily.evaluate(t_arr) + model.weekly.evaluate(t_arr)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def reconstruct_integral(model: SeasonalTrendModel, t1: float, t2: float) -> float:
    """Exact integral of the deterministic part over sample indices [t1, t2]."""
    trend = model.a * (t2 - t1) + model.b * (t2 * t2 - t1 * t1) / 2.0
    return float(trend + model.daily.integral(t1, t2) + model.weekly.integral(t1, t2))
