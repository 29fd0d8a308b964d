"""Parsers, serializers and cross-stream validation for the six input schemas.

All inputs are UTF-8 comma-separated text with a mandatory header row and "."
as the decimal separator. Timestamps are local civil time without a timezone
suffix. Parsing is pure and order-preserving; parsed datasets are immutable
and safe to share between threads.

Schemas (header row shown):

    spl.csv:        nmt_id,timestamp,level_dba
    flights.csv:    timestamp,operation,runway,aircraft_type,engine_type,airline
    weather.csv:    hour_start,temperature_c,wind_speed_kt,wind_direction_deg,cloud_cover_tenths
    population.csv: tract_id,hour_start,defacto_count
    tracts.csv:     tract_id,district_id,centroid_lat,centroid_lon,resident_count,land_use
    nmts.csv:       nmt_id,tract_id,lat,lon
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .errors import DuplicateKey, MalformedRow, RangeViolation

# Nominal 3-second samples in one hour; completeness is reported against this,
# never imputed.
SAMPLES_PER_HOUR_NOMINAL = 1200

LEVEL_MIN_DBA = 0.0
LEVEL_MAX_DBA = 140.0


class Operation(enum.Enum):
    DEPARTURE = "DEPARTURE"
    ARRIVAL = "ARRIVAL"


class LandUse(enum.Enum):
    COMMERCIAL = "COMMERCIAL"
    RESIDENTIAL = "RESIDENTIAL"
    MIXED = "MIXED"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True, slots=True)
class SplSample:
    """One 3-second A-weighted sound-pressure reading at one terminal."""

    nmt_id: str
    timestamp: datetime
    level: float


@dataclass(frozen=True, slots=True)
class FlightEvent:
    timestamp: datetime
    operation: Operation
    runway: str
    aircraft_type: str
    engine_type: str
    airline: str


@dataclass(frozen=True, slots=True)
class WeatherHour:
    hour_start: datetime
    temperature: float
    wind_speed: float
    wind_direction: float
    cloud_cover: int


@dataclass(frozen=True, slots=True)
class PopulationRecord:
    tract_id: str
    hour_start: datetime
    defacto_count: float


@dataclass(frozen=True, slots=True)
class TractMeta:
    tract_id: str
    district_id: str
    centroid: tuple[float, float]
    resident_count: float
    land_use: LandUse


@dataclass(frozen=True, slots=True)
class NmtMeta:
    nmt_id: str
    tract_id: str
    location: tuple[float, float]


@dataclass(frozen=True)
class Bundle:
    """All six parsed datasets for one run."""

    spl: list[SplSample]
    flights: list[FlightEvent]
    weather: list[WeatherHour]
    population: list[PopulationRecord]
    tracts: list[TractMeta]
    nmts: list[NmtMeta]


# ---------------------------------------------------------------------------
# low-level helpers

def _rows(source, expected_header: Sequence[str]):
    """Yield (line_number, fields) for each data row, checking the header.

    ``source`` may be raw bytes, CSV text, an open text stream, or a Path.
    """
    if isinstance(source, (bytes, bytearray)):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, Path):
        source = io.StringIO(source.read_text(encoding="utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None:
        return  # empty file: no header required, no rows
    if [h.strip() for h in header] != list(expected_header):
        raise MalformedRow(1, f"expected header {','.join(expected_header)}")
    for lineno, fields in enumerate(reader, start=2):
        if not fields:
            continue
        if len(fields) != len(expected_header):
            raise MalformedRow(lineno, f"expected {len(expected_header)} fields, got {len(fields)}")
        yield lineno, fields


def _float(value: str, lineno: int, name: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise MalformedRow(lineno, f"{name} not numeric") from None


def _int(value: str, lineno: int, name: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise MalformedRow(lineno, f"{name} not an integer") from None


def _datetime(value: str, lineno: int, name: str) -> datetime:
    try:
        ts = datetime.fromisoformat(value)
    except ValueError:
        raise MalformedRow(lineno, f"{name} not an ISO timestamp") from None
    if ts.tzinfo is not None:
        raise MalformedRow(lineno, f"{name} must be local civil time without timezone")
    return ts


def _hour(value: str, lineno: int, name: str) -> datetime:
    ts = _datetime(value, lineno, name)
    if ts.minute or ts.second or ts.microsecond:
        raise MalformedRow(lineno, f"{name} must be on the hour")
    return ts


def _enum(cls, value: str, lineno: int, name: str):
    try:
        return cls(value)
    except ValueError:
        allowed = "/".join(m.value for m in cls)
        raise MalformedRow(lineno, f"{name} must be one of {allowed}") from None


# ---------------------------------------------------------------------------
# parsers

SPL_HEADER = ("nmt_id", "timestamp", "level_dba")
FLIGHTS_HEADER = ("timestamp", "operation", "runway", "aircraft_type", "engine_type", "airline")
WEATHER_HEADER = ("hour_start", "temperature_c", "wind_speed_kt", "wind_direction_deg", "cloud_cover_tenths")
POPULATION_HEADER = ("tract_id", "hour_start", "defacto_count")
TRACTS_HEADER = ("tract_id", "district_id", "centroid_lat", "centroid_lon", "resident_count", "land_use")
NMTS_HEADER = ("nmt_id", "tract_id", "lat", "lon")


def parse_spl(source) -> list[SplSample]:
    """Parse spl.csv rows in file order, validating the level band [0, 140] dBA."""
    out = []
    for lineno, (nmt_id, ts, level) in _rows(source, SPL_HEADER):
        lv = _float(level, lineno, "level")
        if not LEVEL_MIN_DBA <= lv <= LEVEL_MAX_DBA:
            raise RangeViolation(lineno, "level_dba", lv, f"[{LEVEL_MIN_DBA}, {LEVEL_MAX_DBA}]")
        out.append(SplSample(nmt_id, _datetime(ts, lineno, "timestamp"), lv))
    return out


def parse_flights(source) -> list[FlightEvent]:
    out = []
    for lineno, (ts, op, runway, actype, engine, airline) in _rows(source, FLIGHTS_HEADER):
        out.append(FlightEvent(
            _datetime(ts, lineno, "timestamp"),
            _enum(Operation, op, lineno, "operation"),
            runway, actype, engine, airline,
        ))
    return out


def parse_weather(source) -> list[WeatherHour]:
    out = []
    seen: set[datetime] = set()
    for lineno, (hour, temp, wind, wdir, cloud) in _rows(source, WEATHER_HEADER):
        hs = _hour(hour, lineno, "hour_start")
        if hs in seen:
            raise DuplicateKey(lineno, hs.isoformat(timespec="minutes"))
        seen.add(hs)
        ws = _float(wind, lineno, "wind_speed")
        if ws < 0:
            raise RangeViolation(lineno, "wind_speed_kt", ws, "[0, inf)")
        wd = _float(wdir, lineno, "wind_direction")
        if not 0 <= wd < 360:
            raise RangeViolation(lineno, "wind_direction_deg", wd, "[0, 360)")
        cc = _int(cloud, lineno, "cloud_cover")
        if not 0 <= cc <= 10:
            raise RangeViolation(lineno, "cloud_cover_tenths", cc, "[0, 10]")
        out.append(WeatherHour(hs, _float(temp, lineno, "temperature"), ws, wd, cc))
    return out


def parse_population(source) -> list[PopulationRecord]:
    out = []
    seen: set[tuple[str, datetime]] = set()
    for lineno, (tract, hour, count) in _rows(source, POPULATION_HEADER):
        hs = _hour(hour, lineno, "hour_start")
        key = (tract, hs)
        if key in seen:
            raise DuplicateKey(lineno, (tract, hs.isoformat(timespec="minutes")))
        seen.add(key)
        n = _float(count, lineno, "defacto_count")
        if n < 0:
            raise RangeViolation(lineno, "defacto_count", n, "[0, inf)")
        out.append(PopulationRecord(tract, hs, n))
    return out


def parse_tracts(source) -> list[TractMeta]:
    out = []
    seen: set[str] = set()
    for lineno, (tract, district, lat, lon, residents, land_use) in _rows(source, TRACTS_HEADER):
        if tract in seen:
            raise DuplicateKey(lineno, tract)
        seen.add(tract)
        res = _float(residents, lineno, "resident_count")
        if res < 0:
            raise RangeViolation(lineno, "resident_count", res, "[0, inf)")
        out.append(TractMeta(
            tract, district,
            (_float(lat, lineno, "centroid_lat"), _float(lon, lineno, "centroid_lon")),
            res, _enum(LandUse, land_use, lineno, "land_use"),
        ))
    return out


def parse_nmts(source) -> list[NmtMeta]:
    out = []
    seen: set[str] = set()
    for lineno, (nmt, tract, lat, lon) in _rows(source, NMTS_HEADER):
        if nmt in seen:
            raise DuplicateKey(lineno, nmt)
        seen.add(nmt)
        out.append(NmtMeta(nmt, tract, (_float(lat, lineno, "lat"), _float(lon, lineno, "lon"))))
    return out


def parse_bundle(directory) -> Bundle:
    """Parse the six canonical files from ``directory``."""
    d = Path(directory)
    return Bundle(
        spl=parse_spl(d / "spl.csv"),
        flights=parse_flights(d / "flights.csv"),
        weather=parse_weather(d / "weather.csv"),
        population=parse_population(d / "population.csv"),
        tracts=parse_tracts(d / "tracts.csv"),
        nmts=parse_nmts(d / "nmts.csv"),
    )


# ---------------------------------------------------------------------------
# serializers
#
# serialize(parse(x)) reproduces x up to canonical number formatting: floats
# are written with repr() (shortest round-trip form), hours with minute
# precision, timestamps with second precision.

def _fmt(x: float) -> str:
    return repr(float(x))


def _ts(ts: datetime) -> str:
    return ts.isoformat(timespec="seconds")


def _hs(ts: datetime) -> str:
    return ts.isoformat(timespec="minutes")


def _write(stream_or_path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    if isinstance(stream_or_path, (str, Path)):
        with open(stream_or_path, "w", encoding="utf-8", newline="") as fh:
            _write(fh, header, rows)
        return
    fh: TextIO = stream_or_path
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(row) + "\n")


def write_spl(samples: Iterable[SplSample], dest) -> None:
    _write(dest, SPL_HEADER, ((s.nmt_id, _ts(s.timestamp), _fmt(s.level)) for s in samples))


def write_flights(flights: Iterable[FlightEvent], dest) -> None:
    _write(dest, FLIGHTS_HEADER, (
        (f.timestamp.isoformat(timespec="seconds"), f.operation.value, f.runway,
         f.aircraft_type, f.engine_type, f.airline)
        for f in flights
    ))


def write_weather(hours: Iterable[WeatherHour], dest) -> None:
    _write(dest, WEATHER_HEADER, (
        (_hs(w.hour_start), _fmt(w.temperature), _fmt(w.wind_speed), _fmt(w.wind_direction), str(w.cloud_cover))
        for w in hours
    ))


def write_population(records: Iterable[PopulationRecord], dest) -> None:
    _write(dest, POPULATION_HEADER, (
        (p.tract_id, _hs(p.hour_start), _fmt(p.defacto_count)) for p in records
    ))


def write_tracts(tracts: Iterable[TractMeta], dest) -> None:
    _write(dest, TRACTS_HEADER, (
        (t.tract_id, t.district_id, _fmt(t.centroid[0]), _fmt(t.centroid[1]), _fmt(t.resident_count), t.land_use.value)
        for t in tracts
    ))


def write_nmts(nmts: Iterable[NmtMeta], dest) -> None:
    _write(dest, NMTS_HEADER, (
        (n.nmt_id, n.tract_id, _fmt(n.location[0]), _fmt(n.location[1])) for n in nmts
    ))


def write_bundle(bundle: Bundle, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_spl(bundle.spl, d / "spl.csv")
    write_flights(bundle.flights, d / "flights.csv")
    write_weather(bundle.weather, d / "weather.csv")
    write_population(bundle.population, d / "population.csv")
    write_tracts(bundle.tracts, d / "tracts.csv")
    write_nmts(bundle.nmts, d / "nmts.csv")


# ---------------------------------------------------------------------------
# cross-stream validation (report-only; never raises on findings)

SEVERITY_ERROR = "error"

COVERAGE_GAP = "COVERAGE_GAP"
DUPLICATE_KEY = "DUPLICATE_KEY"
DANGLING_REFERENCE = "DANGLING_REFERENCE"
OUT_OF_WINDOW = "OUT_OF_WINDOW"


@dataclass(frozen=True, slots=True)
class Finding:
    stream: str
    kind: str
    key: str
    detail: str
    severity: str = SEVERITY_ERROR


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)
    # (nmt_id, hour_start) -> sample count / 1200
    completeness: dict[tuple[str, datetime], float] = field(default_factory=dict)

    @property
    def error_count(self) -> int:
        return sum(1 for f in self.findings if f.severity == SEVERITY_ERROR)


def window_hours(window: tuple[datetime, datetime]) -> list[datetime]:
    """Hour starts in the closed-open window [start, end)."""
    start, end = window
    hours = []
    t = start
    while t < end:
        hours.append(t)
        t += timedelta(hours=1)
    return hours


def validate_bundle(
    bundle: Bundle,
    window: tuple[datetime, datetime],
    declared_runways: set[str] | None = None,
) -> ValidationReport:
    """Check coverage, duplicates and references across streams.

    ``declared_runways`` defaults to the set observed in the flight stream
    (no file schema declares runways, so an explicit set must come from run
    configuration when one exists).
    """
    report = ValidationReport()
    hours = window_hours(window)
    hour_set = set(hours)
    add = report.findings.append

    def hs(ts: datetime) -> str:
        return ts.isoformat(timespec="minutes")

    # -- window membership
    def in_window(ts: datetime) -> bool:
        return window[0] <= ts < window[1]

    for s in bundle.spl:
        if not in_window(s.timestamp):
            add(Finding("spl", OUT_OF_WINDOW, s.timestamp.isoformat(), f"sample at {s.nmt_id}"))
    for f in bundle.flights:
        if not in_window(f.timestamp):
            add(Finding("flights", OUT_OF_WINDOW, f.timestamp.isoformat(), f.runway))
    for w in bundle.weather:
        if not in_window(w.hour_start):
            add(Finding("weather", OUT_OF_WINDOW, hs(w.hour_start), ""))
    for p in bundle.population:
        if not in_window(p.hour_start):
            add(Finding("population", OUT_OF_WINDOW, hs(p.hour_start), p.tract_id))

    # -- weather coverage: exactly one record per window hour
    weather_hours = {w.hour_start for w in bundle.weather}
    for h in hours:
        if h not in weather_hours:
            add(Finding("weather", COVERAGE_GAP, hs(h), "no weather record"))

    # -- population coverage per tract
    pop_keys = {(p.tract_id, p.hour_start) for p in bundle.population}
    tract_ids = {t.tract_id for t in bundle.tracts}
    for t in sorted(tract_ids):
        for h in hours:
            if (t, h) not in pop_keys:
                add(Finding("population", COVERAGE_GAP, f"{t}@{hs(h)}", "no population record"))

    # -- SPL duplicates, coverage and per-NMT-hour completeness
    nmt_ids = {n.nmt_id for n in bundle.nmts}
    counts: dict[tuple[str, datetime], int] = {}
    seen_samples: set[tuple[str, datetime]] = set()
    for s in bundle.spl:
        key = (s.nmt_id, s.timestamp)
        if key in seen_samples:
            add(Finding("spl", DUPLICATE_KEY, f"{s.nmt_id}@{s.timestamp.isoformat()}", "duplicate sample"))
        seen_samples.add(key)
        hour = s.timestamp.replace(minute=0, second=0, microsecond=0)
        counts[(s.nmt_id, hour)] = counts.get((s.nmt_id, hour), 0) + 1
    for n in sorted(nmt_ids):
        for h in hours:
            c = counts.get((n, h), 0)
            report.completeness[(n, h)] = c / SAMPLES_PER_HOUR_NOMINAL
            if c == 0:
                add(Finding("spl", COVERAGE_GAP, f"{n}@{hs(h)}", "no samples"))

    # -- dangling references
    for n in bundle.nmts:
        if n.tract_id not in tract_ids:
            add(Finding("nmts", DANGLING_REFERENCE, n.nmt_id, f"unknown tract {n.tract_id}"))
    for p in {p.tract_id for p in bundle.population} - tract_ids:
        add(Finding("population", DANGLING_REFERENCE, p, "unknown tract"))
    for s in {s.nmt_id for s in bundle.spl} - nmt_ids:
        add(Finding("spl", DANGLING_REFERENCE, s, "unknown nmt"))
    runways = declared_runways if declared_runways is not None else {f.runway for f in bundle.flights}
    for f in {f.runway for f in bundle.flights} - runways:
        add(Finding("flights", DANGLING_REFERENCE, f, "undeclared runway"))

    return report
