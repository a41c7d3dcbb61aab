"""Travel-time series: ingestion, validation, windowed measurements, indexing.

All internal times are minutes. A series is a uniform grid: observation ``i``
sits at ``start_time + i*h`` minutes. Measurement windows are closed on the
left and open on the right so that adjacent windows partition the grid.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_H_MINUTES = 5.0
DEFAULT_MAX_GAP_MINUTES = 24.0 * 60.0
CSV_HEADER = "timestamp,travel_time_min"


class SeriesError(ValueError):
    """Invalid series data or an out-of-range query."""


class IngestError(SeriesError):
    """Malformed input file; carries the offending row number when known."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class TravelTimeSeries:
    """Uniformly sampled travel times (minutes) for one path."""

    path_id: str
    start_time: datetime
    h: float
    values: np.ndarray
    is_residual: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 2:
            raise SeriesError("series needs at least 2 observations")
        if not np.all(np.isfinite(vals)):
            raise SeriesError("series contains non-finite values")
        if not self.is_residual and np.any(vals <= 0):
            raise SeriesError("raw travel times must be strictly positive")
        if not self.h > 0:
            raise SeriesError("sampling interval h must be positive")

    def __len__(self):
        return self.values.size

    @property
    def span_minutes(self) -> float:
        """Offset of the last observation from the first, in minutes."""
        return (len(self) - 1) * self.h

    def grid_minutes(self) -> np.ndarray:
        return np.arange(len(self)) * self.h

    def time_at(self, i: int) -> datetime:
        return self.start_time + timedelta(minutes=i * self.h)

    def minutes_of(self, t: datetime) -> float:
        """Offset of timestamp *t* from the series start, in minutes."""
        return (t - self.start_time).total_seconds() / 60.0

    def with_values(self, values, is_residual=None) -> "TravelTimeSeries":
        return replace(
            self,
            values=np.asarray(values, dtype=float),
            is_residual=self.is_residual if is_residual is None else is_residual,
        )


@dataclass(frozen=True)
class SpatialIndexSpec:
    """Weighted combination of per-path measurements; weights normalize to 1."""

    components: tuple

    def __post_init__(self):
        comps = [(str(pid), float(w)) for pid, w in self.components]
        if not comps:
            raise SeriesError("spatial index needs at least one component")
        total = sum(w for _, w in comps)
        if any(w <= 0 for _, w in comps) or not np.isfinite(total) or total <= 0:
            raise SeriesError("spatial index weights must be positive")
        object.__setattr__(
            self, "components", tuple((pid, w / total) for pid, w in comps)
        )


def _parse_timestamp(text, row):
    try:
        return datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    except ValueError:
        raise IngestError(f"bad timestamp {text!r}", row=row) from None


def _open_text(source):
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    # byte stream
    return io.TextIOWrapper(source, encoding="utf-8")


@dataclass(frozen=True)
class IngestResult:
    series: TravelTimeSeries
    rows_read: int
    filled: int


def ingest_csv(
    source,
    h: float = DEFAULT_H_MINUTES,
    path_id: str = "",
    max_gap_minutes: float = DEFAULT_MAX_GAP_MINUTES,
) -> IngestResult:
    """Read a ``timestamp,travel_time_min`` CSV into a uniform series.

    Rows must be strictly increasing in time and strictly positive in value.
    Missing grid cells (gap a multiple of *h*, at most *max_gap_minutes*) are
    filled by linear interpolation; the fill count is reported.
    """
    fh = _open_text(source)
    times: list[datetime] = []
    vals: list[float] = []
    for row, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        if row == 1 and line.lower().startswith("timestamp"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise IngestError(f"expected 2 columns, got {len(parts)}", row=row)
        t = _parse_timestamp(parts[0], row)
        try:
            v = float(parts[1])
        except ValueError:
            raise IngestError(f"bad value {parts[1]!r}", row=row) from None
        if not np.isfinite(v):
            raise IngestError(f"non-finite value {parts[1]!r}", row=row)
        if v <= 0:
            raise IngestError(f"non-positive travel time {v}", row=row)
        if times:
            gap = (t - times[-1]).total_seconds() / 60.0
            if gap <= 0:
                raise IngestError("timestamps not strictly increasing", row=row)
            if gap > max_gap_minutes:
                raise IngestError(
                    f"gap of {gap:g} min exceeds limit {max_gap_minutes:g} min",
                    row=row,
                )
            steps = gap / h
            if abs(steps - round(steps)) > 1e-6:
                raise IngestError(
                    f"timestamp off the {h:g}-minute grid (gap {gap:g} min)",
                    row=row,
                )
        times.append(t)
        vals.append(v)
    if not times:
        raise IngestError("empty file")
    if len(times) < 2:
        raise IngestError("need at least 2 rows", row=len(times))

    n_rows = len(times)
    grid_vals = [vals[0]]
    filled = 0
    for i in range(1, n_rows):
        steps = int(round((times[i] - times[i - 1]).total_seconds() / 60.0 / h))
        if steps > 1:
            # linear interpolation across the missing cells
            lo, hi = vals[i - 1], vals[i]
            for k in range(1, steps):
                grid_vals.append(lo + (hi - lo) * k / steps)
            filled += steps - 1
        grid_vals.append(vals[i])
    series = TravelTimeSeries(
        path_id=path_id, start_time=times[0], h=float(h), values=np.array(grid_vals)
    )
    return IngestResult(series=series, rows_read=n_rows, filled=filled)


def write_csv(series: TravelTimeSeries, target) -> None:
    """Write a series back to the ingest CSV format (lossless round-trip)."""
    own = isinstance(target, (str, Path))
    fh = open(target, "w", encoding="utf-8") if own else target
    try:
        fh.write(CSV_HEADER + "\n")
        for i, v in enumerate(series.values):
            fh.write(f"{series.time_at(i).isoformat()},{float(v)!r}\n")
    finally:
        if own:
            fh.close()


def _as_offset_minutes(series: TravelTimeSeries, t) -> float:
    if isinstance(t, datetime):
        return series.minutes_of(t)
    return float(t)


def standard_measurement(
    series: TravelTimeSeries, t, window: float | None = None
) -> float:
    """Mean travel time in the window [t - w/2, t + w/2) around instant *t*.

    *t* may be a timestamp or an offset in minutes from the series start.
    The default window is one sampling step, which selects the nearest
    grid observation.
    """
    if window is None:
        window = series.h
    if not window > 0:
        raise SeriesError("measurement window must be positive")
    tm = _as_offset_minutes(series, t)
    lo, hi = tm - window / 2.0, tm + window / 2.0
    if hi <= 0 or lo > series.span_minutes:
        raise SeriesError(
            f"window [{lo:g}, {hi:g}) min does not overlap the series span"
        )
    grid = series.grid_minutes()
    mask = (grid >= lo) & (grid < hi)
    if not mask.any():
        raise SeriesError(f"no observation falls in window [{lo:g}, {hi:g}) min")
    return float(series.values[mask].mean())


def daily_mean(
    series: TravelTimeSeries,
    day: date,
    plan: Sequence[time],
    window: float | None = None,
) -> float:
    """Mean of standard measurements at the plan times-of-day on *day*."""
    if not plan:
        raise SeriesError("measurement plan is empty")
    end = series.time_at(len(series) - 1)
    if day < series.start_time.date() or day > end.date():
        raise SeriesError(f"day {day.isoformat()} outside the series span")
    vals = [
        standard_measurement(
            series, datetime.combine(day, tod, tzinfo=series.start_time.tzinfo), window
        )
        for tod in plan
    ]
    return float(np.mean(vals))


def spatial_index(
    series_set: Iterable[TravelTimeSeries],
    spec: SpatialIndexSpec,
    t,
    window: float | None = None,
) -> float:
    """Weighted sum of standard measurements across paths at instant *t*."""
    by_id = {s.path_id: s for s in series_set}
    total = 0.0
    for pid, w in spec.components:
        if pid not in by_id:
            raise SeriesError(f"no series for path_id {pid!r}")
        total += w * standard_measurement(by_id[pid], t, window)
    return total


# Persistence for fitted artifacts lives in ttderiv.modelfile; re-exported
# here because serialization belongs to the ingestion layer's surface.
def save_model(artifact, path):
    from . import modelfile

    return modelfile.save_model(artifact, path)


def load_model(path):
    from . import modelfile

    return modelfile.load_model(path)
