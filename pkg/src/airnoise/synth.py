"""Deterministic synthetic month: flights, weather, SPL streams, population.

The generated bundle is internally consistent (it passes ingest validation
with zero findings) and every structural pattern is known ground truth:

* runway roles swap every block (default 3 h), so terminals on opposite
  approach paths see anti-phase loud/quiet blocks;
* each terminal-hour's equivalent level is an additive function of the model
  features (monotone temperature response, cloud-cover step, per-combo flight
  counts, terminal base level, rotation term) plus Gaussian noise;
* 3-second SPL samples are jittered around that level with an exact energy
  correction, so re-aggregating them reproduces the intended level to within
  CSV rounding, and a controlled fraction of sub-threshold samples exercises
  the retention rule;
* population follows commuter waves: commercial tracts fill up by day,
  the donor tracts by night, with the hourly city total conserved.

Hours whose flight count is zero emit only ambient (sub-threshold) samples:
no traffic, no measured aircraft noise, an absent hourly level, and no
training target.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import InvalidConfig
from .ingest import (
    Bundle,
    FlightEvent,
    LandUse,
    NmtMeta,
    Operation,
    PopulationRecord,
    SplSample,
    TractMeta,
    WeatherHour,
    write_bundle,
)
from .rng import substream

RUNWAY_EAST = "32R"
RUNWAY_WEST = "32L"

# (aircraft, engine) -> sampling weight; names follow the common fleet around
# a mid-size international airport.
DEFAULT_FLEET: tuple[tuple[str, str, float], ...] = (
    ("B737-800", "CFM56-7B", 0.17),
    ("A320", "V2500-A5", 0.14),
    ("B737-8MAX", "LEAP-1B", 0.10),
    ("A320neo", "PW1100G", 0.09),
    ("A330-300", "PW4170", 0.08),
    ("A220-300", "PW1500G", 0.08),
    ("B767-300", "CF6-80C2", 0.07),
    ("A321", "V2500-A5", 0.06),
    ("B747-400F", "CF6-80C2", 0.05),
    ("B777-300", "GE90-115B", 0.04),
    ("B787-9", "GEnx-1B", 0.03),
    ("A350-900", "TrentXWB", 0.03),
    ("ATR72", "PW127", 0.03),
    ("E190", "CF34-10E", 0.03),
)

# dB added per hourly movement of the combo (newer engines are quieter).
# Weighted by fleet share these cancel to ~0, so the overall traffic level
# does not leak a diurnal component into every terminal's series.
DEFAULT_COMBO_COEFFS: Mapping[str, float] = {
    "B737-800+CFM56-7B": 0.155,
    "A320+V2500-A5": 0.125,
    "B767-300+CF6-80C2": 0.14,
    "B747-400F+CF6-80C2": 0.175,
    "B777-300+GE90-115B": 0.085,
    "A321+V2500-A5": 0.07,
    "B737-8MAX+LEAP-1B": -0.25,
    "A320neo+PW1100G": -0.195,
    "A330-300+PW4170": -0.195,
    "A220-300+PW1500G": -0.10,
    "B787-9+GEnx-1B": -0.085,
}

AIRLINES = ("KE", "OZ", "7C", "BX", "TW", "ZE")

# Hours with zero movements become ambient-only hours. Movements are
# block-constant (the schedule rotates runway roles in the same 3-hour blocks)
# with a day-shaped envelope.
DEFAULT_FLIGHTS_PER_HOUR = (5, 5, 0, 0, 7, 7, 11, 11, 11, 17, 17, 17, 12, 12, 12, 18, 18, 18, 14, 14, 14, 10, 10, 10)


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    days: int = 31
    start: date = date(2023, 1, 1)
    # tract layout: near-runway tracts carry the terminals, commercial tracts
    # carry one terminal each on the east side, residential tracts have none
    near_32l_tracts: int = 2
    near_32r_tracts: int = 2
    commercial_tracts: int = 1
    residential_tracts: int = 2
    flights_per_hour: tuple[int, ...] = DEFAULT_FLIGHTS_PER_HOUR
    block_hours: int = 3
    # ground-truth noise function: the monotone met response is a step at the
    # reference temperature plus a mild slope, so it stays monotone while a
    # tree model can represent the bulk of it with a single split
    base_level: float = 77.0
    base_spread: float = 0.8
    rotation_amplitude: float = 4.2
    temperature_ref: float = 2.0
    temperature_std: float = 4.0
    temperature_step_db: float = 2.6
    temperature_coeff: float = 0.12
    cloud_threshold: int = 5
    cloud_step: float = 1.2
    combo_coeffs: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_COMBO_COEFFS))
    noise_std: float = 1.5
    level_floor: float = 62.0
    level_ceiling: float = 100.0
    # population waves
    commercial_base: float = 500.0
    commercial_residents: float = 1200.0
    residential_base: float = 2300.0
    residential_residents: float = 2300.0
    commuter_inflow: float = 3400.0
    weekend_factor: float = 0.8
    # SPL stream shape
    samples_per_hour: int = 300
    sub_threshold_fraction: float = 0.1
    jitter_db: float = 1.5

    def __post_init__(self):
        if self.days < 1:
            raise InvalidConfig("days must be positive")
        for name in ("near_32l_tracts", "near_32r_tracts", "commercial_tracts", "residential_tracts"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be positive")
        if self.block_hours < 1 or 24 % self.block_hours != 0:
            raise InvalidConfig("block_hours must divide 24")
        if len(self.flights_per_hour) != 24 or any(n < 0 for n in self.flights_per_hour):
            raise InvalidConfig("flights_per_hour must list 24 non-negative counts")
        if not 1 <= self.samples_per_hour <= 1200:
            raise InvalidConfig("samples_per_hour must lie in [1, 1200]")
        if not 0 <= self.sub_threshold_fraction < 1:
            raise InvalidConfig("sub_threshold_fraction must lie in [0, 1)")
        if self.noise_std < 0 or self.jitter_db < 0:
            raise InvalidConfig("noise_std and jitter_db must be non-negative")


@dataclass
class GroundTruth:
    """Everything the generator knows that the pipeline must rediscover."""

    seed: int
    window_start: datetime
    window_end: datetime
    block_hours: int
    landing_runway_by_parity: dict[int, str]
    quiet_hours: list[int]
    nmt_side: dict[str, str]             # nmt_id -> runway whose approach it sits under
    nmt_base: dict[str, float]
    tract_of_nmt: dict[str, str]
    diurnal: dict[str, str]              # tract_id -> DAYTIME_PEAK / NIGHTTIME_PEAK
    dominant_feature: str
    threshold_feature: str
    threshold_value: float
    coefficients: dict
    noise_std: float
    clean_level: dict[str, float]        # "nmt|hour" -> additive function value
    intended_level: dict[str, float]     # "nmt|hour" -> clean + noise (clamped)

    def irreducible_mae(self) -> float:
        """Mean |intended - clean| over all measured hours."""
        diffs = [abs(self.intended_level[k] - self.clean_level[k]) for k in self.intended_level]
        return float(np.mean(diffs))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "window_start": self.window_start.isoformat(timespec="minutes"),
            "window_end": self.window_end.isoformat(timespec="minutes"),
            "block_hours": self.block_hours,
            "landing_runway_by_parity": {str(k): v for k, v in self.landing_runway_by_parity.items()},
            "quiet_hours": self.quiet_hours,
            "nmt_side": self.nmt_side,
            "nmt_base": self.nmt_base,
            "tract_of_nmt": self.tract_of_nmt,
            "diurnal": self.diurnal,
            "dominant_feature": self.dominant_feature,
            "threshold_feature": self.threshold_feature,
            "threshold_value": self.threshold_value,
            "coefficients": self.coefficients,
            "noise_std": self.noise_std,
            "clean_level": self.clean_level,
            "intended_level": self.intended_level,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GroundTruth":
        return cls(
            seed=doc["seed"],
            window_start=datetime.fromisoformat(doc["window_start"]),
            window_end=datetime.fromisoformat(doc["window_end"]),
            block_hours=doc["block_hours"],
            landing_runway_by_parity={int(k): v for k, v in doc["landing_runway_by_parity"].items()},
            quiet_hours=list(doc["quiet_hours"]),
            nmt_side=dict(doc["nmt_side"]),
            nmt_base=dict(doc["nmt_base"]),
            tract_of_nmt=dict(doc["tract_of_nmt"]),
            diurnal=dict(doc["diurnal"]),
            dominant_feature=doc["dominant_feature"],
            threshold_feature=doc["threshold_feature"],
            threshold_value=doc["threshold_value"],
            coefficients=dict(doc["coefficients"]),
            noise_std=doc["noise_std"],
            clean_level=dict(doc["clean_level"]),
            intended_level=dict(doc["intended_level"]),
        )


def landing_runway(hour: datetime, block_hours: int) -> str:
    """Runway on landing duty this hour: roles swap every block.

    Odd blocks land on the east runway (block 3, 09:00-11:59, lands 32R),
    even blocks on the west one; departures use the other runway.
    """
    parity = (hour.hour // block_hours) % 2
    return RUNWAY_EAST if parity == 1 else RUNWAY_WEST


def commuter_wave(hour: int) -> float:
    """Fraction of the commuter pool present downtown at this hour (0..1)."""
    if hour < 6 or hour > 20:
        return 0.0
    return math.sin(math.pi * (hour - 6) / 15.0) ** 2


def generate(config: ScenarioConfig) -> tuple[Bundle, GroundTruth]:
    """Build the full six-schema bundle plus its ground truth record."""
    window_start = datetime.combine(config.start, time(0))
    window_end = window_start + timedelta(days=config.days)
    hours = [window_start + timedelta(hours=k) for k in range(config.days * 24)]

    rng_weather = substream(config.seed, "synth.weather")
    rng_flights = substream(config.seed, "synth.flights")
    rng_noise = substream(config.seed, "synth.noise")
    rng_spl = substream(config.seed, "synth.jitter")

    # --- layout -----------------------------------------------------------
    tracts: list[TractMeta] = []
    nmts: list[NmtMeta] = []
    nmt_side: dict[str, str] = {}
    diurnal: dict[str, str] = {}
    donors: list[str] = []
    commercial: list[str] = []

    def add_tract(tract_id, district, lat, lon, residents, land_use):
        tracts.append(TractMeta(tract_id, district, (lat, lon), residents, land_use))

    nmt_no = 0

    def add_nmt(tract_id, lat, lon, side):
        nonlocal nmt_no
        nmt_no += 1
        nmt_id = f"NMT{nmt_no}"
        nmts.append(NmtMeta(nmt_id, tract_id, (lat, lon)))
        nmt_side[nmt_id] = side

    for i in range(config.near_32r_tracts):
        tid = f"R{i + 1:02d}"
        add_tract(tid, "perimeter", 40.00 + 0.005 * i, 10.02 + 0.01 * i, config.residential_residents, LandUse.RESIDENTIAL)
        add_nmt(tid, 40.00 + 0.005 * i, 10.02 + 0.01 * i, RUNWAY_EAST)
        donors.append(tid)
        diurnal[tid] = "NIGHTTIME_PEAK"
    for i in range(config.near_32l_tracts):
        tid = f"L{i + 1:02d}"
        add_tract(tid, "perimeter", 40.00 + 0.005 * i, 9.97 - 0.01 * i, config.residential_residents, LandUse.RESIDENTIAL)
        add_nmt(tid, 40.00 + 0.005 * i, 9.97 - 0.01 * i, RUNWAY_WEST)
        donors.append(tid)
        diurnal[tid] = "NIGHTTIME_PEAK"
    for i in range(config.commercial_tracts):
        tid = f"C{i + 1:02d}"
        add_tract(tid, "downtown", 40.01 + 0.005 * i, 10.05 + 0.01 * i, config.commercial_residents, LandUse.COMMERCIAL)
        add_nmt(tid, 40.01 + 0.005 * i, 10.05 + 0.01 * i, RUNWAY_EAST)
        commercial.append(tid)
        diurnal[tid] = "DAYTIME_PEAK"
    for i in range(config.residential_tracts):
        tid = f"S{i + 1:02d}"
        add_tract(tid, "perimeter", 39.95 - 0.005 * i, 10.00 + 0.02 * i, config.residential_residents, LandUse.RESIDENTIAL)
        donors.append(tid)
        diurnal[tid] = "NIGHTTIME_PEAK"

    n_nmts = len(nmts)
    bases = np.linspace(config.base_level - config.base_spread, config.base_level + config.base_spread, n_nmts)
    nmt_base = {nmts[k].nmt_id: round(float(bases[k]), 3) for k in range(n_nmts)}
    tract_of_nmt = {n.nmt_id: n.tract_id for n in nmts}

    # --- weather ------------------------------------------------------------
    weather: list[WeatherHour] = []
    for h in hours:
        weather.append(WeatherHour(
            hour_start=h,
            temperature=round(config.temperature_ref + config.temperature_std * float(rng_weather.standard_normal()), 2),
            wind_speed=round(min(abs(float(rng_weather.normal(9.0, 4.0))), 30.0), 1),
            wind_direction=float(rng_weather.integers(0, 360)),
            cloud_cover=int(rng_weather.integers(0, 11)),
        ))
    weather_by_hour = {w.hour_start: w for w in weather}

    # --- flights -------------------------------------------------------------
    fleet_names = [f"{a}+{e}" for a, e, _ in DEFAULT_FLEET]
    fleet_probs = np.array([w for _, _, w in DEFAULT_FLEET])
    fleet_probs = fleet_probs / fleet_probs.sum()
    flights: list[FlightEvent] = []
    combo_counts: dict[datetime, dict[str, int]] = {}
    for h in hours:
        n = config.flights_per_hour[h.hour]
        if n == 0:
            continue
        lands = landing_runway(h, config.block_hours)
        departs = RUNWAY_WEST if lands == RUNWAY_EAST else RUNWAY_EAST
        picks = rng_flights.choice(len(fleet_names), size=n, p=fleet_probs)
        airline_picks = rng_flights.integers(0, len(AIRLINES), size=n)
        counts = combo_counts.setdefault(h, {})
        for k in range(n):
            op = Operation.ARRIVAL if k % 2 == 0 else Operation.DEPARTURE
            combo = fleet_names[int(picks[k])]
            counts[combo] = counts.get(combo, 0) + 1
            aircraft, engine = combo.split("+")
            flights.append(FlightEvent(
                timestamp=h + timedelta(seconds=int((k + 0.5) * 3600 / n)),
                operation=op,
                runway=lands if op is Operation.ARRIVAL else departs,
                aircraft_type=aircraft,
                engine_type=engine,
                airline=AIRLINES[int(airline_picks[k])],
            ))

    # --- population -------------------------------------------------------------
    population: list[PopulationRecord] = []
    for h in hours:
        day_factor = config.weekend_factor if h.weekday() >= 5 else 1.0
        inflow = config.commuter_inflow * commuter_wave(h.hour) * day_factor
        outflow_each = inflow * len(commercial) / len(donors)
        for t in tracts:
            if t.tract_id in commercial:
                count = config.commercial_base + inflow
            else:
                count = config.residential_base - outflow_each
            population.append(PopulationRecord(t.tract_id, h, round(count, 4)))

    # --- intended hourly levels and SPL streams ---------------------------------
    clean_level: dict[str, float] = {}
    intended_level: dict[str, float] = {}
    spl: list[SplSample] = []

    n_samples = config.samples_per_hour
    n_low = int(round(config.sub_threshold_fraction * n_samples))
    slots = [i * 1200 // n_samples for i in range(n_samples)]
    low_positions = sorted({j * n_samples // n_low for j in range(n_low)}) if n_low else []
    low_index = np.array(low_positions, dtype=int)
    retained_index = np.array([i for i in range(n_samples) if i not in set(low_positions)], dtype=int)

    for nmt in nmts:
        side = nmt_side[nmt.nmt_id]
        base = nmt_base[nmt.nmt_id]
        for h in hours:
            key = f"{nmt.nmt_id}|{h.isoformat(timespec='minutes')}"
            quiet = config.flights_per_hour[h.hour] == 0
            w = weather_by_hour[h]
            if not quiet:
                rot = config.rotation_amplitude if landing_runway(h, config.block_hours) == side else -config.rotation_amplitude
                level = base + rot
                dev = w.temperature - config.temperature_ref
                level += config.temperature_step_db * math.copysign(1.0, dev) + config.temperature_coeff * dev
                if w.cloud_cover > config.cloud_threshold:
                    level += config.cloud_step
                for combo, count in combo_counts.get(h, {}).items():
                    level += config.combo_coeffs.get(combo, 0.0) * count
                clean_level[key] = round(level, 6)
                noisy = level + config.noise_std * float(rng_noise.standard_normal())
                noisy = min(max(noisy, config.level_floor), config.level_ceiling)
                intended_level[key] = round(noisy, 6)

            # ambient sub-threshold baseline, also used for the low fraction
            ambient = 50.0 + 6.0 * rng_spl.random(n_samples)
            if quiet:
                levels = ambient
            else:
                # jitter only the retained samples and correct their energy
                # mean exactly, so re-aggregation reproduces the intended level
                jitter = config.jitter_db * (2.0 * rng_spl.random(retained_index.size) - 1.0)
                energy_offset = 10.0 * math.log10(np.mean(10.0 ** (jitter / 10.0)))
                levels = np.empty(n_samples)
                levels[retained_index] = intended_level[key] + jitter - energy_offset
                if low_index.size:
                    levels[low_index] = ambient[low_index]
            for i, slot in enumerate(slots):
                spl.append(SplSample(
                    nmt_id=nmt.nmt_id,
                    timestamp=h + timedelta(seconds=3 * slot),
                    level=round(float(levels[i]), 2),
                ))

    bundle = Bundle(
        spl=spl, flights=flights, weather=weather,
        population=population, tracts=tracts, nmts=nmts,
    )
    truth = GroundTruth(
        seed=config.seed,
        window_start=window_start,
        window_end=window_end,
        block_hours=config.block_hours,
        landing_runway_by_parity={0: RUNWAY_WEST, 1: RUNWAY_EAST},
        quiet_hours=[h for h in range(24) if config.flights_per_hour[h] == 0],
        nmt_side=nmt_side,
        nmt_base=nmt_base,
        tract_of_nmt=tract_of_nmt,
        diurnal=diurnal,
        dominant_feature="temperature_c",
        threshold_feature="cloud_cover_tenths",
        threshold_value=float(config.cloud_threshold),
        coefficients={
            "temperature_step_db": config.temperature_step_db,
            "temperature_coeff": config.temperature_coeff,
            "temperature_ref": config.temperature_ref,
            "cloud_step": config.cloud_step,
            "rotation_amplitude": config.rotation_amplitude,
            "combo": dict(config.combo_coeffs),
        },
        noise_std=config.noise_std,
        clean_level=clean_level,
        intended_level=intended_level,
    )
    return bundle, truth


def write_scenario(config: ScenarioConfig, out_dir) -> tuple[Bundle, GroundTruth]:
    """Generate and write the six CSV schemas plus ground_truth.json."""
    bundle, truth = generate(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_bundle(bundle, out)
    (out / "ground_truth.json").write_text(
        json.dumps(truth.to_dict(), sort_keys=True, indent=1), encoding="utf-8"
    )
    return bundle, truth


def load_ground_truth(path) -> GroundTruth:
    return GroundTruth.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
