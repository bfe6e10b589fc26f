import math
from datetime import date, datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from leosched.orbital import (
    Constellation,
    ObserverLocation,
    PropagationError,
    StaleElementsError,
    Topocentric,
    format_tle,
    is_sunlit,
    launch_bin,
    look_angles,
    parse_tle_catalog,
    position_from_look_angles,
    propagate,
    read_launch_catalog,
    satellite_age,
    visible_satellites,
    write_launch_catalog,
)
from leosched.orbital.frames import (
    EARTH_RADIUS_KM,
    ecef_to_teme,
    enu_basis,
    in_umbra,
    observer_ecef,
    sun_direction,
    teme_to_ecef,
)
from leosched.orbital.launches import UnknownLaunchError
from leosched.orbital.sgp4 import DeepSpaceError, Sgp4Batch
from leosched.orbital.tle import checksum, parse_pair
from leosched.orbital.visibility import SatelliteState
from leosched.simulator import Shell, generate_constellation
from leosched.timeutil import from_unix, to_unix

ISS = (
    "ISS (ZARYA)\n"
    "1 25544U 98067A   08264.51782528 -.00002182  00000-0 -11606-4 0  2927\n"
    "2 25544  51.6416 247.4627 0006703 130.5360 325.0288 15.72125391563537\n"
)

# public SGP4 verification cases (WGS-72 constants), minutes since epoch -> TEME km, km/s
SGP4_CASES = {
    "88888": (
        "1 88888U          80275.98708465  .00073094  13844-3  66816-4 0    87",
        "2 88888  72.8435 115.9689 0086731  52.6988 110.5714 16.05824518  1058",
        {
            0.0: ((2328.96975262, -5995.22051338, 1719.97297192), (2.91207328, -0.98341796, -7.09081621)),
            360.0: ((2456.10706533, -6071.93855503, 1222.89768554), (2.67939004, -0.44829081, -7.22879215)),
        },
    ),
    "00005": (
        "1 00005U 58002B   00179.78495062  .00000023  00000-0  28098-4 0  4753",
        "2 00005  34.2682 348.7242 1859667 331.7664  19.3264 10.82419157413667",
        {
            0.0: ((7022.46529266, -1400.08296755, 0.03995155), (1.89384101, 6.40589376, 4.53480725)),
            360.0: ((-7154.03120202, -3783.17682504, -3536.19412294), None),
            720.0: ((-7134.59340119, 6531.68641334, 3260.27186483), None),
        },
    ),
    "06251": (
        "1 06251U 62025E   06176.82412014  .00008885  00000-0  12808-3 0  3985",
        "2 06251  58.0579  54.0425 0030035 139.1568 221.1854 15.56387291  6774",
        {
            0.0: ((3988.31022699, 5498.96657235, 0.90055879), (-3.29003274, 2.35765282, 6.49662347)),
            120.0: ((-3935.69800083, 409.10980837, 5471.33577327), None),
            360.0: ((4993.62642836, 2890.54969900, -3600.40145627), None),
        },
    ),
}


def geodetic_altitude(r_ecef):
    a, f = 6378.137, 1 / 298.257223563
    e2 = f * (2 - f)
    x, y, z = r_ecef
    p = math.hypot(x, y)
    lat = math.atan2(z, p * (1 - e2))
    for _ in range(10):
        n = a / math.sqrt(1 - e2 * math.sin(lat) ** 2)
        h = p / math.cos(lat) - n
        lat = math.atan2(z, p * (1 - e2 * n / (n + h)))
    return h


# ---------------------------------------------------------------- TLE parsing


def test_parse_iss_record():
    recs, errs = parse_tle_catalog(ISS)
    assert errs == []
    (r,) = recs
    assert r.norad_id == 25544
    assert r.name == "ISS (ZARYA)"
    assert r.intl_designator == "98067A"
    assert r.inclination == pytest.approx(51.6416)
    assert r.raan == pytest.approx(247.4627)
    assert r.eccentricity == pytest.approx(0.0006703)
    assert r.mean_motion == pytest.approx(15.72125391)
    assert r.bstar == pytest.approx(-0.11606e-4)
    assert r.epoch.year == 2008
    assert r.epoch.timetuple().tm_yday == 264
    assert r.launch_year == 1998


def test_empty_catalog():
    assert parse_tle_catalog("") == ([], [])


def test_corrupted_checksum_reports_line():
    lines = ISS.splitlines()
    bad = lines[2][:-1] + str((int(lines[2][-1]) + 1) % 10)
    recs, errs = parse_tle_catalog("\n".join([lines[0], lines[1], bad]))
    assert recs == []
    assert len(errs) == 1
    assert "checksum" in errs[0].message
    assert errs[0].line == 3


def test_invalid_records_reported_in_order():
    lines = ISS.splitlines()
    text = "\n".join([lines[1], "garbage name", lines[1], lines[2], lines[2]])
    recs, errs = parse_tle_catalog(text)
    assert [r.norad_id for r in recs] == [25544]
    assert [e.line for e in errs] == [1, 5]
    assert all("truncated" in e.message for e in errs)


def test_malformed_field():
    l1 = ISS.splitlines()[1]
    l2 = ISS.splitlines()[2]
    body = l2[:8] + "51.6x16" + l2[15:68]
    l2_bad = body + str(checksum(body))
    recs, errs = parse_tle_catalog(l1 + "\n" + l2_bad + "\n")
    assert recs == [] and len(errs) == 1


def test_checksum_counts_minus_signs():
    assert checksum("1 -" + " " * 65) == 2


@given(
    n=st.floats(11.0, 16.5),
    e=st.floats(0.0, 0.2),
    inc=st.floats(0.0, 180.0),
    raan=st.floats(0.0, 359.9999),
    argp=st.floats(0.0, 359.9999),
    ma=st.floats(0.0, 359.9999),
    bstar=st.sampled_from([0.0, 1.2e-4, -3.4e-5, 5.5e-3]),
    norad=st.integers(1, 99999),
)
def test_format_tle_roundtrip(n, e, inc, raan, argp, ma, bstar, norad):
    epoch = datetime(2024, 3, 1, 6, 30, tzinfo=timezone.utc)
    l1, l2 = format_tle(norad, "24012C", epoch, n, e, inc, raan, argp, ma, bstar)
    assert len(l1) == len(l2) == 69
    assert int(l1[-1]) == checksum(l1) and int(l2[-1]) == checksum(l2)
    r = parse_pair(l1, l2)
    assert r.norad_id == norad
    assert r.mean_motion == pytest.approx(n, abs=1e-8)
    assert r.eccentricity == pytest.approx(e, abs=1e-7)
    assert r.inclination == pytest.approx(inc, abs=1e-4)
    assert abs(to_unix(r.epoch) - to_unix(epoch)) < 1e-3
    assert r.bstar == pytest.approx(bstar, rel=1e-4, abs=1e-12)


# ---------------------------------------------------------------- SGP4


@pytest.mark.parametrize("case", sorted(SGP4_CASES))
def test_sgp4_reference_vectors(case):
    l1, l2, expected = SGP4_CASES[case]
    batch = Sgp4Batch.from_records([parse_pair(l1, l2)])
    times = sorted(expected)
    r, v, err = batch.propagate_minutes(np.array(times)[None, :])
    assert not err.any()
    for k, t in enumerate(times):
        ref_r, ref_v = expected[t]
        assert np.max(np.abs(r[0, k] - ref_r)) < 1e-3
        if ref_v is not None:
            assert np.max(np.abs(v[0, k] - ref_v)) < 1e-6


def test_matches_reference_library_on_walker_shell(walker):
    sgp4_api = pytest.importorskip("sgp4.api")
    recs = walker[0][::97]
    times = np.linspace(-1440.0, 2880.0, 9)
    r, v, err = Sgp4Batch.from_records(recs).propagate_minutes(np.tile(times, (len(recs), 1)))
    assert not err.any()
    for i, rec in enumerate(recs):
        sat = sgp4_api.Satrec.twoline2rv(rec.line1, rec.line2, sgp4_api.WGS72)
        for k, t in enumerate(times):
            e, rr, vv = sat.sgp4_tsince(t)
            assert e == 0
            assert np.max(np.abs(r[i, k] - rr)) < 1e-6
            assert np.max(np.abs(v[i, k] - vv)) < 1e-9


@pytest.mark.parametrize("mm,ecc,bstar", [(16.2, 0.001, 3e-4), (16.0, 0.01, 1e-4), (16.4, 0.002, 5e-4)])
def test_matches_reference_library_below_220km_perigee(mm, ecc, bstar):
    # perigee under 220 km switches SGP4 to its simplified drag model
    sgp4_api = pytest.importorskip("sgp4.api")
    l1, l2 = format_tle(12345, "25001A", datetime(2025, 1, 15, tzinfo=timezone.utc), mm, ecc, 51.6, 40.0, 30.0, 10.0, bstar)
    sat = sgp4_api.Satrec.twoline2rv(l1, l2, sgp4_api.WGS72)
    assert sat.altp * 6378.135 < 220.0
    times = np.linspace(0.0, 600.0, 7)
    r, _, err = Sgp4Batch.from_records([parse_pair(l1, l2)]).propagate_minutes(times[None, :])
    for k, t in enumerate(times):
        e, rr, _ = sat.sgp4_tsince(t)
        assert (e != 0) == (err[0, k] != 0)
        if e == 0:
            assert np.max(np.abs(r[0, k] - rr)) < 1e-6


def test_altitude_at_epoch_matches_kepler():
    recs, _ = parse_tle_catalog(ISS)
    rec = recs[0]
    st_ = propagate(rec, rec.epoch)
    mu = 398600.4418
    n = rec.mean_motion * 2 * math.pi / 86400.0
    a = (mu / n**2) ** (1 / 3)
    alt = geodetic_altitude(teme_to_ecef(np.array(st_.position), to_unix(rec.epoch)))
    assert abs(alt - (a - 6378.137)) < 25.0
    assert 6500 < np.linalg.norm(st_.position) < 8500
    assert 6 < np.linalg.norm(st_.velocity) < 9


def test_finite_difference_velocity():
    rec = parse_tle_catalog(ISS)[0][0]
    t = to_unix(rec.epoch) + 1234.0
    a = propagate(rec, from_unix(t))
    b = propagate(rec, from_unix(t + 0.5))
    fd = (np.array(b.position) - np.array(a.position)) / 0.5
    v = np.array(a.velocity)
    assert np.linalg.norm(fd - v) / np.linalg.norm(v) < 0.01


def test_epoch_age_guard():
    rec = parse_tle_catalog(ISS)[0][0]
    with pytest.raises(StaleElementsError):
        propagate(rec, rec.epoch + timedelta(days=8))
    propagate(rec, rec.epoch + timedelta(days=8), max_age_days=None)
    propagate(rec, rec.epoch - timedelta(days=6.9))


def test_decayed_orbit_is_an_error():
    l1, l2 = format_tle(1, "20001A", datetime(2020, 1, 1, tzinfo=timezone.utc), 16.4, 0.0, 51.6, 0, 0, 0, 0.5)
    rec = parse_pair(l1, l2)
    with pytest.raises(PropagationError):
        propagate(rec, rec.epoch + timedelta(days=5))


def test_deep_space_rejected():
    l1, l2 = format_tle(2, "20001A", datetime(2020, 1, 1, tzinfo=timezone.utc), 1.0027, 0.0002, 0.05, 0, 0, 0)
    with pytest.raises(DeepSpaceError):
        Sgp4Batch.from_records([parse_pair(l1, l2)])


# ---------------------------------------------------------------- frames


def _state_at(obs, local, t):
    """Satellite state at ``local`` (east, north, up km) from ``obs``."""
    ecef = observer_ecef(obs) + np.asarray(local, dtype=float) @ enu_basis(obs)
    return SatelliteState(0, from_unix(t), tuple(ecef_to_teme(ecef, t)), (0.0, 0.0, 0.0))


T0 = to_unix(datetime(2025, 1, 15, 10, tzinfo=timezone.utc))


def test_zenith():
    obs = ObserverLocation(47.4, 8.5, 400.0)
    topo = look_angles(_state_at(obs, (0, 0, 550.0), T0), obs)
    assert topo.elevation == pytest.approx(90.0, abs=1e-6)
    assert topo.range == pytest.approx(550.0, abs=1e-6)


def test_north_horizon():
    obs = ObserverLocation(-33.9, 151.2)
    topo = look_angles(_state_at(obs, (0, 800.0, 0), T0), obs)
    assert topo.elevation == pytest.approx(0.0, abs=1e-6)
    assert min(topo.azimuth, 360 - topo.azimuth) < 0.5


def test_equator_east():
    obs = ObserverLocation(0.0, 0.0)
    lon = math.radians(5.0)
    ecef = (EARTH_RADIUS_KM + 550.0) * np.array([math.cos(lon), math.sin(lon), 0.0])
    st_ = SatelliteState(0, from_unix(T0), tuple(ecef_to_teme(ecef, T0)), (0, 0, 0))
    topo = look_angles(st_, obs)
    assert 45.0 < topo.azimuth < 135.0
    assert topo.elevation > 0


def test_teme_ecef_inverse():
    r = np.array([[7000.0, -1200.0, 300.0], [-4000.0, 5000.0, 1.0]])
    back = ecef_to_teme(teme_to_ecef(r, T0), T0)
    assert np.allclose(back, r, atol=1e-9)


@given(
    lat=st.floats(-89.0, 89.0),
    lon=st.floats(-180.0, 180.0),
    el=st.floats(0.0, 89.9),
    az=st.floats(0.0, 359.999),
    rng=st.floats(300.0, 3000.0),
)
def test_look_angle_roundtrip(lat, lon, el, az, rng):
    obs = ObserverLocation(lat, lon, 100.0)
    r = position_from_look_angles(obs, Topocentric(el, az, rng), T0)
    topo = look_angles(SatelliteState(0, from_unix(T0), tuple(r), (0, 0, 0)), obs)
    assert abs(topo.elevation - el) < 1e-6
    d = abs(topo.azimuth - az)
    assert min(d, 360 - d) < 1e-6
    assert 0.0 <= topo.azimuth < 360.0


def test_observer_validation():
    with pytest.raises(ValueError):
        ObserverLocation(91.0, 0.0)
    with pytest.raises(ValueError):
        ObserverLocation(0.0, 181.0)
    assert ObserverLocation.parse("47.4,8.5") == ObserverLocation(47.4, 8.5, 0.0)
    with pytest.raises(ValueError):
        ObserverLocation.parse("1,2,3,4")


# ---------------------------------------------------------------- sunlight


def test_sun_direction_at_june_solstice():
    s = sun_direction(to_unix(datetime(2024, 6, 20, 21, tzinfo=timezone.utc)))
    assert math.degrees(math.asin(s[2])) == pytest.approx(23.44, abs=0.05)


def test_sunlit_cases():
    t = datetime(2025, 1, 15, 12, tzinfo=timezone.utc)
    s = sun_direction(to_unix(t))
    a = EARTH_RADIUS_KM + 550.0

    def state(r):
        return SatelliteState(0, t, tuple(r), (0, 0, 0))

    assert is_sunlit(state(a * s))
    assert not is_sunlit(state(-a * s))
    perp = np.cross(s, [0.0, 0.0, 1.0])
    perp /= np.linalg.norm(perp)
    assert is_sunlit(state(-1000.0 * s + 7000.0 * perp))


@given(
    angle=st.floats(0.0, 2 * math.pi),
    r=st.lists(st.floats(-9000, 9000), min_size=3, max_size=3),
)
def test_umbra_invariant_under_rotation_about_sun_axis(angle, r):
    s = sun_direction(T0)
    r = np.array(r)
    # Rodrigues rotation about s
    k = s
    rot = r * math.cos(angle) + np.cross(k, r) * math.sin(angle) + k * np.dot(k, r) * (1 - math.cos(angle))
    along = np.dot(r, s)
    perp = np.linalg.norm(r - along * s)
    if abs(perp - EARTH_RADIUS_KM) < 1e-6 or abs(along) < 1e-6:
        return
    assert bool(in_umbra(r, s)) == bool(in_umbra(rot, s))


# ---------------------------------------------------------------- launches


def test_age_and_bin():
    cat = {44713: date(2020, 3, 18)}
    t = datetime(2020, 3, 28, tzinfo=timezone.utc)
    assert satellite_age(44713, cat, t) == pytest.approx(10.0)
    assert satellite_age(44713, cat, datetime(2020, 3, 18, tzinfo=timezone.utc)) == 0.0
    b = launch_bin(44713, cat)
    assert b.key == (2020, 3) and not b.low_precision


def test_designator_fallback():
    b = launch_bin(45000, {}, "20019BD")
    assert b.key == (2020, 1) and b.low_precision
    with pytest.raises(UnknownLaunchError):
        launch_bin(45000, {}, "garbage")


def test_launch_catalog_roundtrip(tmp_path):
    cat = {44713: date(2020, 3, 18), 45000: date(2021, 12, 1)}
    text = write_launch_catalog(cat)
    assert text.splitlines()[0] == "norad_id,launch_date"
    assert read_launch_catalog(text) == cat
    p = tmp_path / "launches.csv"
    p.write_text(text)
    assert read_launch_catalog(p) == cat
    with pytest.raises(ValueError):
        read_launch_catalog("id,date\n1,2020-01-01\n")


# ---------------------------------------------------------------- visibility


def test_visible_empty_catalog():
    assert visible_satellites([], ObserverLocation(0, 0), T0) == []


def test_visible_matches_brute_force(walker):
    records, launches, _ = walker
    subset = records[::31][:50]
    obs = ObserverLocation(47.4, 8.5, 400.0)
    t = from_unix(T0)
    got = {s.norad_id for s in visible_satellites(subset, obs, t, min_elevation=0.0, launches=launches)}
    want = set()
    for rec in subset:
        topo = look_angles(propagate(rec, t), obs)
        if topo.elevation >= 0.0:
            want.add(rec.norad_id)
    assert got == want


def test_snapshot_fields(walker):
    _, launches, c = walker
    t = from_unix(T0)
    snaps = visible_satellites(c, ObserverLocation(47.4, 8.5), t)
    assert snaps
    for s in snaps:
        assert s.elevation >= 25.0
        assert 0 <= s.azimuth < 360
        assert s.age >= 0
        assert s.age == pytest.approx(satellite_age(s.norad_id, launches, t))
        idx = c.index_of(s.norad_id)
        assert s.sunlit == is_sunlit(propagate(c.records[idx], t))
    assert visible_satellites(c, ObserverLocation(47.4, 8.5), t, min_elevation=90.0) == []


def test_mid_latitude_fov_count():
    shells = [Shell(1584, 22, 53.0, 550.0), Shell(1584, 72, 53.2, 540.0), Shell(720, 36, 70.0, 570.0), Shell(348, 6, 97.6, 560.0)]
    records, launches = generate_constellation(shells)
    c = Constellation(records, launches)
    obs = ObserverLocation(47.4, 8.5, 400.0)
    for k in range(4):
        n = len(visible_satellites(c, obs, from_unix(T0 + 1800 * k)))
        assert 20 <= n <= 60
