"""Join population, hourly LAeq, weather and flight activity at tract x hour.

Each monitoring terminal's hourly level stands in for the whole census tract
that contains it. The feature table carries exactly 22 numeric columns per
(terminal, hour, operation) row:

    hour_of_day, day_of_week, nmt_lat, nmt_lon,
    temperature_c, wind_speed_kt, wind_deviation_deg, cloud_cover_tenths,
    departures_total, arrivals_total,
    combo_<name> x 12   (hourly flight counts of the 12 most frequent
                         aircraft+engine combinations over the window;
                         less frequent combos are pooled into the totals only)

Combo counts cover both operations within the hour, so a departure row and an
arrival row of the same hour see the same fleet mix. The hourly LAeq at the
terminal is duplicated into both target columns of each operation row; the
take-off model downstream trains on departure rows against takeoff_laeq and
the landing model on arrival rows against landing_laeq. Hours with no
retained samples have absent targets and never enter training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .acoustics import HourlyLaeq
from .errors import AmbiguousMapping, MissingPopulation, MissingWeather
from .ingest import FlightEvent, NmtMeta, Operation, PopulationRecord, TractMeta, WeatherHour

N_FEATURES = 22
N_COMBO_FEATURES = 12

MAPPING_CONTAINING = "containing"
MAPPING_NEAREST_CENTROID = "nearest"


@dataclass(frozen=True, slots=True)
class TractHourRecord:
    tract_id: str
    hour_start: datetime
    population_defacto: float
    population_resident: float
    laeq: float | None
    source_nmt: str


@dataclass(frozen=True)
class FeatureTable:
    """Model inputs: row keys, 22 named feature columns, two targets.

    ``matrix`` has shape (n_rows, 22); absent targets are NaN.
    """

    keys: list[tuple[str, datetime, Operation]]
    feature_names: list[str]
    matrix: np.ndarray
    takeoff_laeq: np.ndarray
    landing_laeq: np.ndarray

    def __post_init__(self):
        if len(self.feature_names) != N_FEATURES:
            raise ValueError(f"feature table must have exactly {N_FEATURES} columns")


def great_circle_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Haversine distance between two (lat, lon) pairs in kilometres."""
    lat1, lon1, lat2, lon2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    s = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * 6371.0 * math.asin(math.sqrt(s))


def map_tracts(
    nmts: Sequence[NmtMeta],
    tracts: Sequence[TractMeta],
    mode: str = MAPPING_CONTAINING,
) -> dict[str, str]:
    """Map tract ids to the terminal that proxies their noise level.

    containing: only tracts that contain a terminal are mapped; two terminals
    in one tract is an error. nearest: every tract maps to the terminal with
    the smallest great-circle centroid distance, ties to the lexicographically
    smaller terminal id.
    """
    tract_by_id = {t.tract_id: t for t in tracts}
    for n in nmts:
        if n.tract_id not in tract_by_id:
            raise KeyError(f"NMT {n.nmt_id} references unknown tract {n.tract_id}")

    if mode == MAPPING_CONTAINING:
        mapping: dict[str, str] = {}
        for n in nmts:
            if n.tract_id in mapping:
                raise AmbiguousMapping(
                    f"tract {n.tract_id} contains both {mapping[n.tract_id]} and {n.nmt_id}"
                )
            mapping[n.tract_id] = n.nmt_id
        return mapping

    if mode == MAPPING_NEAREST_CENTROID:
        mapping = {}
        for t in tracts:
            best = min(nmts, key=lambda n: (great_circle_km(t.centroid, n.location), n.nmt_id))
            mapping[t.tract_id] = best.nmt_id
        return mapping

    raise ValueError(f"unknown mapping mode {mode!r}")


def fuse(
    population: Sequence[PopulationRecord],
    hourly_laeq: Sequence[HourlyLaeq],
    mapping: Mapping[str, str],
    tracts: Sequence[TractMeta],
    hours: Sequence[datetime],
) -> list[TractHourRecord]:
    """One record per mapped tract per window hour, sorted by (tract, hour).

    The terminal's LAeq is copied verbatim; an absent level propagates as
    absent. A missing population record is an error that names every missing
    (tract, hour) pair.
    """
    pop = {(p.tract_id, p.hour_start): p.defacto_count for p in population}
    levels = {(h.nmt_id, h.hour_start): h.laeq for h in hourly_laeq}
    residents = {t.tract_id: t.resident_count for t in tracts}

    missing = [
        (tract, hour.isoformat(timespec="minutes"))
        for tract in sorted(mapping) for hour in hours
        if (tract, hour) not in pop
    ]
    if missing:
        raise MissingPopulation(missing)

    out = []
    for tract in sorted(mapping):
        nmt = mapping[tract]
        for hour in hours:
            out.append(TractHourRecord(
                tract_id=tract,
                hour_start=hour,
                population_defacto=pop[(tract, hour)],
                population_resident=residents[tract],
                laeq=levels.get((nmt, hour)),
                source_nmt=nmt,
            ))
    return out


def wind_deviation(wind_direction: float, runway_heading: float) -> float:
    """Minimal angular distance between two bearings, in degrees [0, 180]."""
    d = abs(wind_direction - runway_heading) % 360.0
    return min(d, 360.0 - d)


def runway_heading(runway: str) -> float:
    """Heading in degrees from a runway designator ("32L" -> 320)."""
    digits = "".join(ch for ch in runway if ch.isdigit())
    if not digits:
        raise ValueError(f"runway {runway!r} has no numeric designator")
    return (int(digits) * 10.0) % 360.0


def rank_combos(flights: Sequence[FlightEvent], top: int = N_COMBO_FEATURES) -> list[str]:
    """The ``top`` most frequent "aircraft+engine" combos over the window.

    Ranked once over all flights, ties broken by name so the feature layout
    is stable for a given dataset.
    """
    counts: dict[str, int] = {}
    for f in flights:
        name = f"{f.aircraft_type}+{f.engine_type}"
        counts[name] = counts.get(name, 0) + 1
    ranked = sorted(counts, key=lambda name: (-counts[name], name))
    return ranked[:top]


def active_runways(
    flights: Sequence[FlightEvent],
    hours: Sequence[datetime],
    schedule: Mapping[tuple[datetime, Operation], str] | None = None,
) -> dict[tuple[datetime, Operation], str]:
    """Active runway per (hour, operation).

    With no declared schedule the majority runway among that hour's
    operations wins, ties to the runway whose first use that hour is
    earliest. Hours without flights of an operation inherit the previous
    hour's assignment (or the first following one at the window edge).
    """
    if schedule is not None:
        return dict(schedule)

    by_hour: dict[tuple[datetime, Operation], list[FlightEvent]] = {}
    for f in flights:
        hour = f.timestamp.replace(minute=0, second=0, microsecond=0)
        by_hour.setdefault((hour, f.operation), []).append(f)

    out: dict[tuple[datetime, Operation], str] = {}
    for op in Operation:
        last: str | None = None
        pending: list[datetime] = []
        for hour in hours:
            events = by_hour.get((hour, op))
            if events:
                counts: dict[str, int] = {}
                first_use: dict[str, datetime] = {}
                for e in events:
                    counts[e.runway] = counts.get(e.runway, 0) + 1
                    if e.runway not in first_use or e.timestamp < first_use[e.runway]:
                        first_use[e.runway] = e.timestamp
                last = min(counts, key=lambda r: (-counts[r], first_use[r]))
                for h in pending:
                    out[(h, op)] = last
                pending.clear()
            if last is None:
                pending.append(hour)
            else:
                out[(hour, op)] = last
        for h in pending:  # no flights of this operation anywhere
            out[(h, op)] = ""
    return out


def build_features(
    flights: Sequence[FlightEvent],
    weather: Sequence[WeatherHour],
    nmts: Sequence[NmtMeta],
    hourly_laeq: Sequence[HourlyLaeq],
    hours: Sequence[datetime],
    runway_schedule: Mapping[tuple[datetime, Operation], str] | None = None,
) -> FeatureTable:
    """Assemble the 22-column feature table over every (terminal, hour, operation).

    Row order is sorted by (terminal, hour, operation name); row count is
    |terminals| x |hours| x 2 regardless of flight activity.
    """
    weather_by_hour = {w.hour_start: w for w in weather}
    for hour in hours:
        if hour not in weather_by_hour:
            raise MissingWeather(hour.isoformat(timespec="minutes"))

    combos = rank_combos(flights)
    combo_index = {name: i for i, name in enumerate(combos)}
    combo_columns = [f"combo_{name}" for name in combos]
    # datasets with fewer than 12 distinct combos keep the 22-column layout
    # through all-zero placeholder columns
    combo_columns += [f"combo_unused_{k}" for k in range(len(combos), N_COMBO_FEATURES)]
    feature_names = [
        "hour_of_day", "day_of_week", "nmt_lat", "nmt_lon",
        "temperature_c", "wind_speed_kt", "wind_deviation_deg", "cloud_cover_tenths",
        "departures_total", "arrivals_total",
    ] + combo_columns

    # hourly flight statistics (combo counts pool both operations)
    dep_total: dict[datetime, int] = {}
    arr_total: dict[datetime, int] = {}
    combo_counts: dict[datetime, np.ndarray] = {}
    for f in flights:
        hour = f.timestamp.replace(minute=0, second=0, microsecond=0)
        if f.operation is Operation.DEPARTURE:
            dep_total[hour] = dep_total.get(hour, 0) + 1
        else:
            arr_total[hour] = arr_total.get(hour, 0) + 1
        idx = combo_index.get(f"{f.aircraft_type}+{f.engine_type}")
        if idx is not None:
            counts = combo_counts.get(hour)
            if counts is None:
                counts = combo_counts[hour] = np.zeros(N_COMBO_FEATURES)
            counts[idx] += 1

    active = active_runways(flights, hours, runway_schedule)
    levels = {(h.nmt_id, h.hour_start): h.laeq for h in hourly_laeq}
    zero_combos = np.zeros(N_COMBO_FEATURES)

    keys: list[tuple[str, datetime, Operation]] = []
    rows: list[np.ndarray] = []
    takeoff: list[float] = []
    landing: list[float] = []
    for nmt in sorted(nmts, key=lambda n: n.nmt_id):
        for hour in hours:
            w = weather_by_hour[hour]
            target = levels.get((nmt.nmt_id, hour))
            for op in (Operation.ARRIVAL, Operation.DEPARTURE):
                rw = active.get((hour, op), "")
                dev = wind_deviation(w.wind_direction, runway_heading(rw)) if rw else 0.0
                row = np.empty(N_FEATURES)
                row[0] = hour.hour
                row[1] = hour.weekday()
                row[2] = nmt.location[0]
                row[3] = nmt.location[1]
                row[4] = w.temperature
                row[5] = w.wind_speed
                row[6] = dev
                row[7] = w.cloud_cover
                row[8] = dep_total.get(hour, 0)
                row[9] = arr_total.get(hour, 0)
                row[10:] = combo_counts.get(hour, zero_combos)
                keys.append((nmt.nmt_id, hour, op))
                rows.append(row)
                t = math.nan if target is None else target
                takeoff.append(t)
                landing.append(t)

    return FeatureTable(
        keys=keys,
        feature_names=feature_names,
        matrix=np.vstack(rows) if rows else np.empty((0, N_FEATURES)),
        takeoff_laeq=np.array(takeoff),
        landing_laeq=np.array(landing),
    )


# ---------------------------------------------------------------------------
# file outputs

def write_fused(records: Iterable[TractHourRecord], dest) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_fused(records, fh)
        return
    dest.write("tract_id,hour_start,population_defacto,population_resident,laeq_dba,source_nmt\n")
    for r in records:
        level = "" if r.laeq is None else repr(r.laeq)
        dest.write(
            f"{r.tract_id},{r.hour_start.isoformat(timespec='minutes')},"
            f"{r.population_defacto!r},{r.population_resident!r},{level},{r.source_nmt}\n"
        )


def write_features(table: FeatureTable, dest) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_features(table, fh)
        return
    cols = ",".join(table.feature_names)
    dest.write(f"nmt_id,hour_start,operation,{cols},takeoff_laeq,landing_laeq\n")
    for (nmt, hour, op), row, t, l in zip(table.keys, table.matrix, table.takeoff_laeq, table.landing_laeq):
        values = ",".join(repr(float(v)) for v in row)
        t_s = "" if math.isnan(t) else repr(float(t))
        l_s = "" if math.isnan(l) else repr(float(l))
        dest.write(f"{nmt},{hour.isoformat(timespec='minutes')},{op.value},{values},{t_s},{l_s}\n")


def read_fused(source) -> list[TractHourRecord]:
    """Inverse of write_fused (floats round-trip exactly via repr)."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return read_fused(fh)
    lines = source.read().splitlines()
    out = []
    for line in lines[1:]:
        tract, hour, pop_d, pop_r, level, nmt = line.split(",")
        out.append(TractHourRecord(
            tract_id=tract,
            hour_start=datetime.fromisoformat(hour),
            population_defacto=float(pop_d),
            population_resident=float(pop_r),
            laeq=None if level == "" else float(level),
            source_nmt=nmt,
        ))
    return out


def read_features(source) -> FeatureTable:
    """Inverse of write_features."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return read_features(fh)
    lines = source.read().splitlines()
    header = lines[0].split(",")
    feature_names = header[3:-2]
    keys = []
    rows = []
    takeoff = []
    landing = []
    for line in lines[1:]:
        fields = line.split(",")
        keys.append((fields[0], datetime.fromisoformat(fields[1]), Operation(fields[2])))
        rows.append([float(v) for v in fields[3:-2]])
        takeoff.append(math.nan if fields[-2] == "" else float(fields[-2]))
        landing.append(math.nan if fields[-1] == "" else float(fields[-1]))
    return FeatureTable(
        keys=keys,
        feature_names=feature_names,
        matrix=np.array(rows) if rows else np.empty((0, N_FEATURES)),
        takeoff_laeq=np.array(takeoff),
        landing_laeq=np.array(landing),
    )
