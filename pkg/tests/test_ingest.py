import io
from datetime import datetime, timedelta

import pytest
from hypothesis import given, strategies as st

from airnoise import ingest
from airnoise.errors import DuplicateKey, MalformedRow, RangeViolation
from airnoise.ingest import (
    Bundle,
    LandUse,
    NmtMeta,
    Operation,
    TractMeta,
    parse_flights,
    parse_population,
    parse_spl,
    parse_tracts,
    parse_weather,
    validate_bundle,
    window_hours,
    write_spl,
)

SPL_HEADER = "nmt_id,timestamp,level_dba\n"


def test_parse_spl_row():
    out = parse_spl(SPL_HEADER + "NMT1,2023-01-05T09:00:03,72.4\n")
    assert len(out) == 1
    s = out[0]
    assert s.nmt_id == "NMT1"
    assert s.timestamp == datetime(2023, 1, 5, 9, 0, 3)
    assert s.level == 72.4


def test_parse_spl_rejects_non_numeric_level():
    with pytest.raises(MalformedRow) as exc:
        parse_spl(SPL_HEADER + "NMT1,2023-01-05T09:00:03,abc\n")
    assert exc.value.line == 2
    assert "level" in exc.value.reason


def test_parse_spl_rejects_out_of_band_level():
    with pytest.raises(RangeViolation) as exc:
        parse_spl(SPL_HEADER + "NMT1,2023-01-05T09:00:03,141.0\n")
    assert exc.value.line == 2


def test_parse_spl_rejects_wrong_field_count():
    with pytest.raises(MalformedRow) as exc:
        parse_spl(SPL_HEADER + "NMT1,2023-01-05T09:00:03\n")
    assert exc.value.line == 2


def test_parse_spl_order_preserved_full_hour():
    hour = datetime(2023, 1, 5, 9)
    rows = "".join(
        f"NMT1,{(hour + timedelta(seconds=3 * k)).isoformat()},{60 + (k % 20)}\n"
        for k in range(1200)
    )
    out = parse_spl(SPL_HEADER + rows)
    assert len(out) == 1200
    assert [s.timestamp for s in out] == sorted(s.timestamp for s in out)


def test_empty_file_gives_empty_list():
    assert parse_spl("") == []
    assert parse_flights("") == []
    assert parse_weather("") == []


def test_header_only_gives_empty_list():
    assert parse_spl(SPL_HEADER) == []


def test_wrong_header_is_line_1_error():
    with pytest.raises(MalformedRow) as exc:
        parse_spl("a,b,c\nNMT1,2023-01-05T09:00:03,72.4\n")
    assert exc.value.line == 1


def test_parse_weather_cloud_cover_bound():
    head = "hour_start,temperature_c,wind_speed_kt,wind_direction_deg,cloud_cover_tenths\n"
    with pytest.raises(RangeViolation):
        parse_weather(head + "2023-01-05T09:00,1.5,10.0,180.0,11\n")
    ok = parse_weather(head + "2023-01-05T09:00,1.5,10.0,180.0,10\n")
    assert ok[0].cloud_cover == 10


def test_parse_weather_duplicate_hour():
    head = "hour_start,temperature_c,wind_speed_kt,wind_direction_deg,cloud_cover_tenths\n"
    with pytest.raises(DuplicateKey):
        parse_weather(
            head
            + "2023-01-05T09:00,1.5,10.0,180.0,3\n"
            + "2023-01-05T09:00,1.6,10.0,180.0,4\n"
        )


def test_parse_population_duplicate_tract_hour():
    head = "tract_id,hour_start,defacto_count\n"
    with pytest.raises(DuplicateKey) as exc:
        parse_population(head + "T1,2023-01-05T09:00,10\nT1,2023-01-05T09:00,11\n")
    assert exc.value.line == 3


def test_parse_flights_operation_enum():
    head = "timestamp,operation,runway,aircraft_type,engine_type,airline\n"
    out = parse_flights(head + "2023-01-05T09:12:00,DEPARTURE,32L,B737-800,CFM56-7B,KE\n")
    assert out[0].operation is Operation.DEPARTURE
    with pytest.raises(MalformedRow):
        parse_flights(head + "2023-01-05T09:12:00,TAKEOFF,32L,B737-800,CFM56-7B,KE\n")


def test_parse_tracts_land_use_and_duplicates():
    head = "tract_id,district_id,centroid_lat,centroid_lon,resident_count,land_use\n"
    out = parse_tracts(head + "T1,D1,37.5,127.0,1200,COMMERCIAL\n")
    assert out[0].land_use is LandUse.COMMERCIAL
    with pytest.raises(DuplicateKey):
        parse_tracts(
            head + "T1,D1,37.5,127.0,1200,COMMERCIAL\nT1,D1,37.5,127.0,1200,MIXED\n"
        )


def test_timezone_suffix_rejected():
    with pytest.raises(MalformedRow):
        parse_spl(SPL_HEADER + "NMT1,2023-01-05T09:00:03+09:00,72.4\n")


# --- round-trips --------------------------------------------------------------

def test_spl_round_trip_exact():
    text = (
        SPL_HEADER
        + "NMT1,2023-01-05T09:00:03,72.4\n"
        + "NMT2,2023-01-05T09:00:06,61.25\n"
    )
    buf = io.StringIO()
    write_spl(parse_spl(text), buf)
    assert buf.getvalue() == text


@given(
    st.lists(
        st.tuples(
            st.sampled_from(["NMT1", "NMT2", "NMT3"]),
            st.integers(min_value=0, max_value=3599),
            st.floats(min_value=0, max_value=140, allow_nan=False).map(lambda x: round(x, 2)),
        ),
        max_size=30,
    )
)
def test_spl_parse_serialize_fixpoint(rows):
    base = datetime(2023, 1, 5, 9)
    samples = [
        ingest.SplSample(nmt, base + timedelta(seconds=sec), level)
        for nmt, sec, level in rows
    ]
    buf = io.StringIO()
    write_spl(samples, buf)
    parsed = parse_spl(buf.getvalue())
    assert parsed == samples
    buf2 = io.StringIO()
    write_spl(parsed, buf2)
    assert buf2.getvalue() == buf.getvalue()


def test_parsing_is_pure():
    text = SPL_HEADER + "NMT1,2023-01-05T09:00:03,72.4\n"
    assert parse_spl(text) == parse_spl(text)


# --- validate_bundle ------------------------------------------------------------

def _tiny_bundle(window_start):
    hours = [window_start + timedelta(hours=k) for k in range(2)]
    tracts = [TractMeta("T1", "D1", (37.5, 127.0), 100, LandUse.RESIDENTIAL)]
    nmts = [NmtMeta("N1", "T1", (37.5, 127.0))]
    spl = [
        ingest.SplSample("N1", h + timedelta(seconds=3 * k), 70.0)
        for h in hours
        for k in range(3)
    ]
    weather = [ingest.WeatherHour(h, 1.0, 5.0, 180.0, 3) for h in hours]
    population = [ingest.PopulationRecord("T1", h, 50.0) for h in hours]
    return Bundle(spl=spl, flights=[], weather=weather, population=population, tracts=tracts, nmts=nmts)


def test_validate_clean_bundle_no_findings():
    start = datetime(2023, 1, 5)
    bundle = _tiny_bundle(start)
    report = validate_bundle(bundle, (start, start + timedelta(hours=2)))
    assert report.error_count == 0
    assert report.completeness[("N1", start)] == 3 / 1200


def test_validate_weather_gap():
    start = datetime(2023, 1, 5)
    bundle = _tiny_bundle(start)
    bundle = Bundle(
        spl=bundle.spl, flights=[], weather=bundle.weather[:1],
        population=bundle.population, tracts=bundle.tracts, nmts=bundle.nmts,
    )
    report = validate_bundle(bundle, (start, start + timedelta(hours=2)))
    gaps = [f for f in report.findings if f.kind == ingest.COVERAGE_GAP and f.stream == "weather"]
    assert len(gaps) == 1


def test_validate_dangling_nmt():
    start = datetime(2023, 1, 5)
    bundle = _tiny_bundle(start)
    bundle.nmts.append(NmtMeta("N9", "NO_SUCH_TRACT", (0.0, 0.0)))
    report = validate_bundle(bundle, (start, start + timedelta(hours=2)))
    dangles = [f for f in report.findings if f.kind == ingest.DANGLING_REFERENCE and f.stream == "nmts"]
    assert len(dangles) == 1
    assert dangles[0].key == "N9"


def test_validate_out_of_window():
    start = datetime(2023, 1, 5)
    bundle = _tiny_bundle(start)
    bundle.spl.append(ingest.SplSample("N1", start - timedelta(hours=1), 70.0))
    report = validate_bundle(bundle, (start, start + timedelta(hours=2)))
    assert any(f.kind == ingest.OUT_OF_WINDOW for f in report.findings)


def test_window_hours_closed_open():
    start = datetime(2023, 1, 5)
    hours = window_hours((start, start + timedelta(hours=3)))
    assert hours == [start, start + timedelta(hours=1), start + timedelta(hours=2)]
