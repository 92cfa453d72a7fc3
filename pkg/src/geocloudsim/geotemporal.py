"""Per-location electricity prices, outdoor temperatures and energy cost.

Traces are hourly (by default) series of electricity price in $/kWh and
outdoor temperature in Celsius. Prices are always $/kWh; loaders perform
no unit conversion. Cooling overhead is a quadratic in temperature whose
minimum is about 1.0157 at -28.6 C, so total power always exceeds IT power.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np


class GeotemporalError(ValueError):
    """Base class for trace/energy accounting errors."""


class LengthMismatch(GeotemporalError):
    """Power and price series have different lengths."""


class ParseError(GeotemporalError):
    """Trace CSV could not be parsed; message carries the row number."""


class InvariantViolation(GeotemporalError):
    """Parsed trace violates a trace invariant."""


TEMP_MIN_C = -40.0
TEMP_MAX_C = 60.0

#: default timestamp for synthetic traces (a Monday, 00:00 UTC)
SYNTH_START = datetime(2016, 1, 4, 0, 0)


@dataclass(frozen=True)
class Location:
    """A data center site and its climatological/market means."""

    id: str
    timezone_offset_h: int
    mean_price: float  # $/kWh
    mean_temp: float  # Celsius

    def __post_init__(self):
        if self.mean_price <= 0:
            raise GeotemporalError(f"{self.id}: mean_price must be positive")


@dataclass(frozen=True)
class GeotemporalTrace:
    """Equal-length price and temperature series for one location."""

    location: str
    start: datetime
    step_h: float
    prices: tuple[float, ...]
    temps: tuple[float, ...]

    def __post_init__(self):
        if len(self.prices) != len(self.temps):
            raise LengthMismatch(
                f"{self.location}: {len(self.prices)} prices vs {len(self.temps)} temps"
            )
        if len(self.prices) < 1:
            raise InvariantViolation(f"{self.location}: empty trace")
        if self.step_h <= 0:
            raise InvariantViolation(f"{self.location}: step must be positive")
        for i, p in enumerate(self.prices):
            if p <= 0:
                raise InvariantViolation(f"{self.location}: price {p} at index {i} not > 0")
        for i, t in enumerate(self.temps):
            if not TEMP_MIN_C <= t <= TEMP_MAX_C:
                raise InvariantViolation(
                    f"{self.location}: temperature {t} at index {i} outside "
                    f"[{TEMP_MIN_C}, {TEMP_MAX_C}]"
                )

    def __len__(self) -> int:
        return len(self.prices)


@dataclass(frozen=True)
class EnergyLedgerEntry:
    """One machine's power and cost during one step."""

    pm: str
    step: int
    p_it_w: float
    p_tot_w: float
    cost: float
    location: str


def ppue(temp_c: float) -> float:
    """Partial PUE of outside-air cooling as a function of outdoor temperature."""
    return 7.1705e-5 * temp_c * temp_c + 0.0041 * temp_c + 1.0743


def total_power(p_it_w: float, temp_c: float) -> float:
    """IT power plus its cooling overhead, in W."""
    return ppue(temp_c) * p_it_w


def energy_cost(powers_w, prices, step_h: float) -> float:
    """Cost in $ of the power series under the price series (rectangle rule).

    ``powers_w`` is in W per step, ``prices`` in $/kWh, ``step_h`` the step
    duration in hours.
    """
    if len(powers_w) != len(prices):
        raise LengthMismatch(f"{len(powers_w)} powers vs {len(prices)} prices")
    if step_h <= 0:
        raise GeotemporalError("step must be positive")
    return step_h * math.fsum(
        (p / 1000.0) * e for p, e in zip(powers_w, prices)
    )


def step_energy_cost(p_it_w: float, temp_c: float, price: float, step_h: float) -> float:
    """Cost in $ of running at p_it_w for one step, cooling overhead included.

    This is the single formula used both by the frequency-scaling controller
    when predicting savings and by the simulator when accounting, so the
    controller's accepted decisions translate exactly into the report.
    """
    return step_h * (total_power(p_it_w, temp_c) / 1000.0) * price


@dataclass(frozen=True)
class TraceParams:
    """Shape parameters of the synthetic trace generator.

    Price follows a diurnal sinusoid (trough at local 04:00, peak at local
    16:00) plus Gaussian noise, floored at a fraction of the mean;
    temperature a sinusoid peaking at local 15:00 plus noise.
    """

    price_amplitude_frac: float = 0.3
    price_noise_frac: float = 0.05
    price_floor_frac: float = 0.2
    temp_amplitude_c: float = 6.0
    temp_noise_c: float = 1.0
    price_peak_local_h: float = 16.0
    temp_peak_local_h: float = 15.0


def _trace_rng(seed: int, location_id: str) -> np.random.Generator:
    entropy = [seed] + list(location_id.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def synth_trace(
    loc: Location,
    hours: int,
    mode: str = "rtep",
    seed: int = 0,
    params: TraceParams = TraceParams(),
) -> GeotemporalTrace:
    """Generate a synthetic hourly trace for one location.

    ``fixed`` mode produces a constant price at the location mean and a
    noise-free diurnal temperature sinusoid. ``rtep`` mode adds the diurnal
    price sinusoid with seeded noise. Pure in (loc, hours, mode, seed,
    params): the same arguments always yield the same trace.
    """
    if hours < 1:
        raise GeotemporalError("hours must be >= 1")
    if mode not in ("fixed", "rtep"):
        raise GeotemporalError(f"unknown trace mode {mode!r}")
    hrs = np.arange(hours, dtype=float)
    local_h = (hrs + loc.timezone_offset_h) % 24.0
    temp_phase = np.cos(2.0 * np.pi * (local_h - params.temp_peak_local_h) / 24.0)
    temps = loc.mean_temp + params.temp_amplitude_c * temp_phase
    if mode == "fixed":
        prices = np.full(hours, loc.mean_price)
    else:
        rng = _trace_rng(seed, loc.id)
        price_phase = np.cos(2.0 * np.pi * (local_h - params.price_peak_local_h) / 24.0)
        prices = loc.mean_price * (1.0 + params.price_amplitude_frac * price_phase)
        prices = prices + rng.normal(0.0, params.price_noise_frac * loc.mean_price, hours)
        prices = np.maximum(prices, params.price_floor_frac * loc.mean_price)
        temps = temps + rng.normal(0.0, params.temp_noise_c, hours)
    temps = np.clip(temps, TEMP_MIN_C, TEMP_MAX_C)
    return GeotemporalTrace(
        location=loc.id,
        start=SYNTH_START,
        step_h=1.0,
        prices=tuple(float(p) for p in prices),
        temps=tuple(float(t) for t in temps),
    )


TRACE_HEADER = ["timestamp", "price_usd_per_kwh", "temp_c"]


def load_trace(path: str, location_id: str | None = None) -> GeotemporalTrace:
    """Load a trace from CSV with header ``timestamp,price_usd_per_kwh,temp_c``.

    Timestamps must be ISO-8601 and equally spaced; a gap raises
    InvariantViolation, a malformed row raises ParseError with its row
    number. The location id defaults to the file's stem.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if [h.strip() for h in header] != TRACE_HEADER:
            raise ParseError(
                f"{path}: row 1: expected header {','.join(TRACE_HEADER)!r}, "
                f"got {','.join(header)!r}"
            )
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ParseError(f"{path}: row {rownum}: expected 3 fields, got {len(row)}")
            try:
                ts = datetime.fromisoformat(row[0].strip())
                price = float(row[1])
                temp = float(row[2])
            except ValueError as exc:
                raise ParseError(f"{path}: row {rownum}: {exc}") from exc
            rows.append((rownum, ts, price, temp))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    step: timedelta | None = None
    for (prev_row, prev_ts, _, _), (rownum, ts, _, _) in zip(rows, rows[1:]):
        delta = ts - prev_ts
        if delta <= timedelta(0):
            raise InvariantViolation(
                f"{path}: row {rownum}: timestamp {ts} not after {prev_ts}"
            )
        if step is None:
            step = delta
        elif delta != step:
            raise InvariantViolation(
                f"{path}: row {rownum}: gap in timestamps ({delta} vs step {step})"
            )
    step_h = (step.total_seconds() / 3600.0) if step is not None else 1.0
    for rownum, _, price, _ in rows:
        if price <= 0:
            raise InvariantViolation(f"{path}: row {rownum}: price {price} not > 0")
    if location_id is None:
        location_id = os.path.splitext(os.path.basename(path))[0]
    return GeotemporalTrace(
        location=location_id,
        start=rows[0][1],
        step_h=step_h,
        prices=tuple(r[2] for r in rows),
        temps=tuple(r[3] for r in rows),
    )


def write_trace(trace: GeotemporalTrace, path: str) -> None:
    """Write a trace in the CSV format accepted by ``load_trace``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for i, (p, t) in enumerate(zip(trace.prices, trace.temps)):
            ts = trace.start + timedelta(hours=i * trace.step_h)
            writer.writerow([ts.isoformat(), repr(p), repr(t)])
