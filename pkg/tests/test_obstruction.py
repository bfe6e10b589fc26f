from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from leosched.obstruction import (
    DEFAULT_GEOMETRY,
    MAP_SIZE,
    AmbiguousDiff,
    EmptyDiff,
    GeometryError,
    MapError,
    MapGeometry,
    ObstructionMap,
    chain_pixels,
    decode_pgm,
    disk_mask,
    disk_pixels,
    encode_pgm,
    extract_track,
    map_filename,
    parse_map_filename,
    pixel_to_polar,
    polar_to_pixel,
    read_map,
    write_map,
    xor_maps,
)
from leosched.simulator.render import line_pixels, trail_pixels

T = datetime(2025, 1, 15, 0, 0, 12, tzinfo=timezone.utc)


def lit_map(pixels, slot=1, terminal="t"):
    m = ObstructionMap.blank(T + timedelta(seconds=15 * slot), slot, terminal)
    for c, r in pixels:
        m.pixels[r, c] = True
    return m


# ---------------------------------------------------------------- geometry


def test_center_and_rim():
    assert pixel_to_polar((62, 62)) == (90.0, 0.0)
    el, az = pixel_to_polar((62, 17))
    assert el == pytest.approx(25.0) and az == pytest.approx(0.0)
    el, az = pixel_to_polar((107, 62))
    assert el == pytest.approx(25.0) and az == pytest.approx(90.0)
    el, az = pixel_to_polar((62, 107))
    assert az == pytest.approx(180.0)


def test_counter_clockwise_flip():
    ccw = MapGeometry(clockwise=False)
    assert pixel_to_polar((107, 62), ccw)[1] == pytest.approx(270.0)
    assert polar_to_pixel(25.0, 270.0, ccw) == (107, 62)


def test_outside_disk_rejected():
    with pytest.raises(GeometryError):
        pixel_to_polar((0, 0))
    with pytest.raises(GeometryError):
        polar_to_pixel(24.0, 0.0)
    with pytest.raises(GeometryError):
        polar_to_pixel(90.5, 0.0)


def test_inverse_examples():
    assert polar_to_pixel(90.0, 123.0) == (62, 62)
    assert polar_to_pixel(25.0, 0.0) == (62, 17)


def test_disk_pixel_count():
    # integer lattice points with x^2 + y^2 <= 45^2
    brute = sum(1 for x in range(-45, 46) for y in range(-45, 46) if x * x + y * y <= 2025)
    assert len(disk_pixels()) == brute == 6361
    assert disk_mask().sum() == brute


@pytest.mark.parametrize("geom", [DEFAULT_GEOMETRY, MapGeometry(clockwise=False)])
def test_roundtrip_all_disk_pixels(geom):
    for px in disk_pixels(geom):
        assert polar_to_pixel(*pixel_to_polar(px, geom), geom) == px


@given(el=st.floats(25.0, 90.0), az=st.floats(0.0, 360.0))
def test_polar_to_pixel_stays_in_disk(el, az):
    c, r = polar_to_pixel(el, az)
    assert (c - 62) ** 2 + (r - 62) ** 2 <= 45**2


# ---------------------------------------------------------------- maps


def test_map_shape_checked():
    with pytest.raises(MapError):
        ObstructionMap(np.zeros((10, 10), bool), T, 0)


def test_disk_invariant():
    m = lit_map([(0, 0)])
    assert m.outside_disk() == 1
    with pytest.raises(MapError):
        m.validate()
    lit_map([(62, 17), (107, 62)]).validate()


def test_xor_identities():
    a = lit_map([(60, 60), (61, 61)], slot=1)
    b = lit_map([(60, 60), (61, 61)], slot=2)
    assert not xor_maps(a, b).pixels.any()
    blank = lit_map([], slot=1)
    assert np.array_equal(xor_maps(blank, b).pixels, b.pixels)
    d = xor_maps(a, b)
    assert d.slot_index == 2 and d.captured_at == b.captured_at


def test_xor_errors():
    a = lit_map([], slot=1)
    with pytest.raises(MapError):
        xor_maps(a, lit_map([], slot=3))
    with pytest.raises(MapError):
        xor_maps(a, lit_map([], slot=2, terminal="other"))


pixel_sets = st.sets(st.sampled_from(disk_pixels()), max_size=60)


@given(p=pixel_sets, q=pixel_sets)
def test_xor_recovers_new_disjoint_trail(p, q):
    q = q - p
    a = lit_map(p, slot=4)
    b = lit_map(p | q, slot=5)
    d = xor_maps(a, b)
    assert {(int(c), int(r)) for r, c in zip(*np.nonzero(d.pixels))} == q


@given(p=pixel_sets, q=pixel_sets)
def test_xor_involution(p, q):
    a = lit_map(p, slot=1)
    b = lit_map(q, slot=2)
    d = xor_maps(a, b)
    assert np.array_equal(d.pixels ^ b.pixels, a.pixels)


# ---------------------------------------------------------------- PGM codec


@pytest.mark.parametrize("binary", [True, False])
def test_pgm_roundtrip_bit_exact(binary):
    rng = np.random.default_rng(3)
    arr = rng.integers(0, 256, size=(MAP_SIZE, MAP_SIZE), dtype=np.uint8)
    data = encode_pgm(arr, binary=binary)
    back, maxval = decode_pgm(data)
    assert maxval == 255
    assert np.array_equal(back, arr)
    assert encode_pgm(back, binary=binary) == data


def test_pgm_comments_and_sixteen_bit():
    data = b"P2\n# a comment\n3 2\n# another\n65535\n0 1 2\n65535 300 7\n"
    arr, maxval = decode_pgm(data)
    assert maxval == 65535
    assert arr.tolist() == [[0, 1, 2], [65535, 300, 7]]
    wide = encode_pgm(arr, binary=True, maxval=65535)
    assert np.array_equal(decode_pgm(wide)[0], arr)


@pytest.mark.parametrize(
    "data",
    [b"P6\n1 1\n255\n\x00\x00\x00", b"P5\n2 2\n255\n\x00", b"P2\n2 1\n255\n1\n", b"", b"P5\n-1 2\n255\n"],
)
def test_pgm_malformed(data):
    with pytest.raises(MapError):
        decode_pgm(data)


def test_map_file_roundtrip(tmp_path):
    m = lit_map(disk_pixels()[::7], slot=12, terminal="dish-a")
    p = write_map(m, tmp_path)
    assert p.name == map_filename("dish-a", 12, m.captured_at)
    back = read_map(p)
    assert np.array_equal(back.pixels, m.pixels)
    assert (back.terminal_id, back.slot_index, back.captured_at) == ("dish-a", 12, m.captured_at)
    assert p.read_bytes() == write_map(back, tmp_path / "again").read_bytes()


def test_threshold_at_128(tmp_path):
    arr = np.zeros((MAP_SIZE, MAP_SIZE), np.uint8)
    arr[62, 62] = 128
    arr[62, 63] = 127
    p = tmp_path / "t_0_1736899212.pgm"
    p.write_bytes(encode_pgm(arr))
    m = read_map(p)
    assert m.pixels[62, 62] and not m.pixels[62, 63]


def test_filename_convention():
    assert parse_map_filename("dish_a_7_1736899212.pgm") == ("dish_a", 7, 1736899212)
    with pytest.raises(MapError):
        parse_map_filename("nope.pgm")


# ---------------------------------------------------------------- tracks


def test_horizontal_run_near_rim():
    m = lit_map([(c, 17) for c in range(62, 67)])
    tr = extract_track(m)
    assert len(tr.points) == 5
    els = [e for e, _ in tr.points]
    azs = [a for _, a in tr.points]
    assert all(24.5 <= e <= 26.5 for e in els)
    assert azs == sorted(azs) or azs == sorted(azs, reverse=True)


def test_empty_and_ambiguous():
    with pytest.raises(EmptyDiff):
        extract_track(lit_map([]))
    with pytest.raises(AmbiguousDiff):
        extract_track(lit_map([(c, 30) for c in range(40, 45)] + [(c, 90) for c in range(70, 75)]))


def test_noise_specks_ignored():
    trail = [(c, 40) for c in range(50, 60)]
    tr = extract_track(lit_map(trail + [(80, 80), (81, 81)]))
    assert sorted(tr.pixels) == sorted(trail)


def test_loop_is_ambiguous():
    ring = [(60, 60), (61, 60), (62, 60), (62, 61), (62, 62), (61, 62), (60, 62), (60, 61)]
    with pytest.raises(AmbiguousDiff):
        extract_track(lit_map(ring))


def test_chain_orders_line():
    pts = [(r, c) for c, r in line_pixels((40, 50), (70, 58))]
    shuffled = list(reversed(pts[::2])) + pts[1::2]
    path = chain_pixels(shuffled)
    assert path == pts or path == pts[::-1]


@given(
    a=st.sampled_from(disk_pixels()),
    b=st.sampled_from(disk_pixels()),
    c=st.sampled_from(disk_pixels()),
)
def test_rendered_trail_chains_and_roundtrips(a, b, c):
    pts = [pixel_to_polar(p) for p in (a, b, c)]
    trail = trail_pixels(pts)
    if len(set(trail)) != len(trail) or len(trail) < 3:
        return  # self-crossing polylines are not single-pass trails
    try:
        tr = extract_track(lit_map(trail))
    except AmbiguousDiff:
        return
    # consecutive pixels are 8-adjacent
    for (c0, r0), (c1, r1) in zip(tr.pixels, tr.pixels[1:]):
        assert max(abs(c0 - c1), abs(r0 - r1)) == 1
    lit = set(trail)
    for el, az in tr.points:
        assert polar_to_pixel(el, az) in lit


def _resample_polar(points, n):
    from leosched.matching import resample_arc_length

    xy = resample_arc_length(polar_to_xy_arr(points), n)
    r = np.hypot(xy[:, 0], xy[:, 1])
    return np.stack([90.0 - r, np.degrees(np.arctan2(xy[:, 0], xy[:, 1])) % 360.0], axis=1)


def polar_to_xy_arr(points):
    from leosched.matching import polar_to_xy

    p = np.asarray(points, dtype=float)
    return polar_to_xy(p[:, 0], p[:, 1])


def test_track_recovers_rendered_polar_points(short_campaign, walker, terminal):
    from leosched.simulator.render import slot_look_angles

    constellation = walker[2]
    prev = None
    el_rms, az_rms = [], []
    for g in short_campaign:
        m = g.map
        if g.clean and g.record.selected is not None:
            base = prev if prev is not None and m.slot_index != 0 else ObstructionMap.blank(T, -1, m.terminal_id)
            tr = extract_track(xor_maps(base, m))
            truth = slot_look_angles(constellation, g.record.selected, terminal.location, g.record.slot_start)
            truth = truth[truth[:, 0] >= 25.0]
            got = np.array(tr.points)
            # direction resolved the way the matcher does: pick the closer orientation
            a = _resample_polar(truth, 15)
            fwd, rev = _resample_polar(got, 15), _resample_polar(got[::-1], 15)
            err_f = np.linalg.norm(polar_to_xy_arr(fwd) - polar_to_xy_arr(a))
            err_r = np.linalg.norm(polar_to_xy_arr(rev) - polar_to_xy_arr(a))
            b = fwd if err_f <= err_r else rev
            el_rms.append(np.sqrt(np.mean((b[:, 0] - a[:, 0]) ** 2)))
            # azimuth is ill-conditioned near zenith, where one pixel spans many degrees
            if a[:, 0].max() < 80.0:
                daz = (b[:, 1] - a[:, 1] + 180.0) % 360.0 - 180.0
                az_rms.append(np.sqrt(np.mean(daz**2)))
        prev = m
    assert len(el_rms) > 20
    assert max(el_rms) <= 1.5
    assert az_rms and max(az_rms) <= 4.0
