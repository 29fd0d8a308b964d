"""Hourly equivalent continuous sound levels from 3-second samples.

The pipeline keeps only samples strictly above the retention threshold
(default 60 dBA, the level at which aircraft noise starts to interfere with
speech), then energy-averages the retained levels per terminal-hour. Hours
whose samples all fall at or below the threshold carry an explicitly absent
level: 0 dBA is a valid physical reading, so absence is never encoded as a
number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyInput
from .ingest import SAMPLES_PER_HOUR_NOMINAL, SplSample

DEFAULT_RETENTION_DBA = 60.0


@dataclass(frozen=True, slots=True)
class HourlyLaeq:
    nmt_id: str
    hour_start: datetime
    laeq: float | None
    n_retained: int
    completeness: float


def retain_above(samples: Sequence[SplSample], threshold: float) -> list[SplSample]:
    """Samples with level strictly greater than ``threshold``, order preserved.

    ``float("-inf")`` is the documented sentinel for "retention disabled":
    every sample passes. NaN thresholds are rejected.
    """
    if math.isnan(threshold):
        raise ValueError("retention threshold must not be NaN")
    return [s for s in samples if s.level > threshold]


def laeq(levels: Sequence[float]) -> float:
    """Energy mean 10*log10(mean(10**(L/10))) of a non-empty level list.

    Summation happens in linear power units relative to the maximum level, so
    a constant input returns that constant exactly and wide dynamic ranges do
    not overflow. math.fsum makes the reduction exactly rounded and therefore
    independent of chunking or sample order.
    """
    if len(levels) == 0:
        raise EmptyInput("laeq of an empty level list")
    peak = max(levels)
    if not math.isfinite(peak):
        raise ValueError("levels must be finite")
    total = math.fsum(10.0 ** ((lv - peak) / 10.0) for lv in levels)
    return peak + 10.0 * math.log10(total / len(levels))


def hourly_series(
    samples: Iterable[SplSample],
    retention: float = DEFAULT_RETENTION_DBA,
) -> list[HourlyLaeq]:
    """Per (terminal, hour) LAeq over retained samples.

    Every (terminal, hour) that appears in ``samples`` yields a record; hours
    with zero retained samples get ``laeq=None`` and ``n_retained=0``.
    Completeness counts all samples, retained or not, against the nominal
    1200 per hour. Output is sorted by (terminal, hour).
    """
    groups: dict[tuple[str, datetime], tuple[list[float], int]] = {}
    for s in samples:
        hour = s.timestamp.replace(minute=0, second=0, microsecond=0)
        key = (s.nmt_id, hour)
        entry = groups.get(key)
        if entry is None:
            entry = ([], 0)
        retained, total = entry
        if s.level > retention:
            retained.append(s.level)
        groups[key] = (retained, total + 1)

    out = []
    for (nmt_id, hour), (retained, total) in sorted(groups.items()):
        out.append(HourlyLaeq(
            nmt_id=nmt_id,
            hour_start=hour,
            laeq=laeq(retained) if retained else None,
            n_retained=len(retained),
            completeness=total / SAMPLES_PER_HOUR_NOMINAL,
        ))
    return out


def write_hourly_laeq(series: Iterable[HourlyLaeq], dest) -> None:
    """Emit hourly_laeq.csv; an absent LAeq is an empty field."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_hourly_laeq(series, fh)
        return
    dest.write("nmt_id,hour_start,laeq_dba,n_retained,completeness\n")
    for h in series:
        level = "" if h.laeq is None else repr(h.laeq)
        dest.write(f"{h.nmt_id},{h.hour_start.isoformat(timespec='minutes')},{level},{h.n_retained},{h.completeness!r}\n")


def read_hourly_laeq(source) -> list[HourlyLaeq]:
    """Inverse of write_hourly_laeq."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return read_hourly_laeq(fh)
    lines = iter(source.read().splitlines())
    next(lines, None)  # header
    out = []
    for line in lines:
        nmt_id, hour, level, n_ret, comp = line.split(",")
        out.append(HourlyLaeq(
            nmt_id=nmt_id,
            hour_start=datetime.fromisoformat(hour),
            laeq=None if level == "" else float(level),
            n_retained=int(n_ret),
            completeness=float(comp),
        ))
    return out
