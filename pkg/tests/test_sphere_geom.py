import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panodrag.errors import (
    DegenerateBasisError,
    DegenerateGreatCircleError,
    DegenerateInputError,
    InvalidArgumentError,
)
from panodrag.sphere_geom import (
    PixelCoord,
    SphericalCoord,
    alignment_rotation,
    cartesian_to_spherical,
    great_circle_direction,
    great_circle_distance,
    normalize_lon,
    pixel_to_spherical,
    rotation_lat,
    rotation_lon,
    spherical_to_cartesian,
    spherical_to_pixel,
    tangent_basis,
)

W, H = 1024, 512
PI = math.pi


def _lon_gap(a, b):
    return abs(math.remainder(a - b, 2 * PI))


@pytest.mark.parametrize("p, expected", [
    ((512, 256), (0.0, 0.0)),
    ((0, 0), (PI / 2, PI)),
    ((768, 128), (PI / 4, PI / 2)),
])
def test_pixel_to_spherical_examples(p, expected):
    s = pixel_to_spherical(p, W, H)
    assert s.lat == pytest.approx(expected[0], abs=1e-15)
    assert s.lon == pytest.approx(expected[1], abs=1e-15)


def test_pixel_to_spherical_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        pixel_to_spherical((float("nan"), 3.0), W, H)
    with pytest.raises(InvalidArgumentError):
        pixel_to_spherical((1.0, 3.0), 1, 1)


def test_column_wraps_and_row_clamps():
    assert pixel_to_spherical((512 + W, 256), W, H) == pixel_to_spherical((512, 256), W, H)
    assert pixel_to_spherical((100, -5), W, H).lat == PI / 2
    assert pixel_to_spherical((100, H + 9), W, H).lat == -PI / 2


def test_lon_normalisation_is_half_open():
    assert normalize_lon(-PI) == PI
    assert normalize_lon(PI) == PI
    assert normalize_lon(3 * PI) == pytest.approx(PI)
    assert normalize_lon(0.0) == 0.0


@pytest.mark.parametrize("s, expected", [
    ((0.0, 0.0), (512, 256)),
    ((PI / 4, PI / 2), (768, 128)),
])
def test_spherical_to_pixel_examples(s, expected):
    p = spherical_to_pixel(s, W, H)
    assert p.i == pytest.approx(expected[0], abs=1e-12)
    assert p.j == pytest.approx(expected[1], abs=1e-12)


def test_pole_maps_to_top_row_with_column_from_lon():
    p = spherical_to_pixel((PI / 2, PI / 2), W, H)
    assert p.j == 0.0
    assert p.i == pytest.approx(768)


@given(st.integers(4, 4096), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_pixel_round_trip(half_w, u, v):
    w, h = 2 * half_w, half_w
    i = 1 + u * (w - 2 - 1e-9)
    j = 1 + v * (h - 2 - 1e-9)
    back = spherical_to_pixel(pixel_to_spherical((i, j), w, h), w, h)
    assert abs(back.i - i) < 1e-9 and abs(back.j - j) < 1e-9


@pytest.mark.parametrize("s, v", [
    ((0.0, 0.0), (1, 0, 0)),
    ((PI / 2, 0.0), (0, 0, 1)),
    ((0.0, PI / 2), (0, 1, 0)),
])
def test_spherical_to_cartesian(s, v):
    np.testing.assert_allclose(spherical_to_cartesian(s), v, atol=1e-15)


def test_cartesian_to_spherical_examples():
    assert cartesian_to_spherical((0, 0, 1)) == (PI / 2, 0.0)
    assert cartesian_to_spherical((1, 0, 0)) == (0.0, 0.0)
    s = cartesian_to_spherical((0.5, 0.5, math.sqrt(2) / 2))
    assert s.lat == pytest.approx(PI / 4, abs=1e-15)
    assert s.lon == pytest.approx(PI / 4, abs=1e-15)
    with pytest.raises(DegenerateInputError):
        cartesian_to_spherical((0, 0, 0))


@given(st.floats(-PI / 2 + 1e-6, PI / 2 - 1e-6), st.floats(-PI + 1e-9, PI))
def test_cartesian_round_trip(lat, lon):
    v = spherical_to_cartesian((lat, lon))
    assert abs(np.linalg.norm(v) - 1) < 1e-12
    back = cartesian_to_spherical(v)
    assert abs(back.lat - lat) < 1e-10
    assert _lon_gap(back.lon, lon) < 1e-10


def test_rotation_lon_examples():
    np.testing.assert_array_equal(rotation_lon(0.0), np.eye(3))
    np.testing.assert_allclose(rotation_lon(PI / 2) @ [1, 0, 0], [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(rotation_lon(PI) @ [1, 0, 0], [-1, 0, 0], atol=1e-15)


def test_rotation_lat_examples():
    np.testing.assert_array_equal(rotation_lat(0.0), np.eye(3))
    np.testing.assert_allclose(rotation_lat(PI / 2) @ [0, 1, 0], [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(rotation_lat(0.7) @ rotation_lat(-0.7), np.eye(3), atol=1e-12)


def _assert_rotation(R):
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-10)
    assert abs(np.linalg.det(R) - 1) < 1e-10


def test_rotations_fuzz():
    rng = np.random.default_rng(5)
    for a, b, c in rng.uniform(-10, 10, size=(1000, 3)):
        _assert_rotation(rotation_lon(a))
        _assert_rotation(rotation_lat(b))
        mid = (float(np.clip(c, -1.5, 1.5)), float(a))
        _assert_rotation(alignment_rotation(mid, b, keep_lat=bool(c > 0)))


def test_alignment_keep_lat_is_pure_lon_shift():
    mid = SphericalCoord(0.3, 1.2)
    R = alignment_rotation(mid, 0.0, keep_lat=True)
    np.testing.assert_allclose(R, rotation_lon(-1.2), atol=1e-15)
    out = cartesian_to_spherical(R @ spherical_to_cartesian(mid))
    assert abs(out.lon) < 1e-10 and abs(out.lat - 0.3) < 1e-10


def test_alignment_identity_for_centred_midpoint():
    np.testing.assert_array_equal(alignment_rotation((0.0, 0.0)), np.eye(3))


def test_alignment_full_moves_midpoint_to_origin():
    mid = SphericalCoord(0.3, 1.2)
    R = alignment_rotation(mid, 0.0, keep_lat=False)
    out = cartesian_to_spherical(R @ spherical_to_cartesian(mid))
    assert abs(out.lat) < 1e-10 and abs(out.lon) < 1e-10


@given(st.floats(-1.5, 1.5), st.floats(-PI, PI), st.floats(-PI, PI), st.booleans())
def test_alignment_hits_target_lon(lat, lon, target, keep):
    R = alignment_rotation((lat, lon), target, keep_lat=keep)
    out = cartesian_to_spherical(R @ spherical_to_cartesian((lat, lon)))
    assert _lon_gap(out.lon, target) < 1e-9
    assert abs(out.lat - (lat if keep else 0.0)) < 1e-10


def test_tangent_basis_examples():
    b = tangent_basis((0.0, 0.0))
    np.testing.assert_allclose(b.east, [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(b.north, [0, 0, 1], atol=1e-15)
    b = tangent_basis((0.0, PI / 2))
    np.testing.assert_allclose(b.east, [-1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(b.north, [0, 0, 1], atol=1e-15)
    with pytest.raises(DegenerateBasisError):
        tangent_basis((PI / 2, 0.0))


@given(st.floats(-1.5, 1.5), st.floats(-PI, PI))
def test_tangent_basis_orthonormal(lat, lon):
    b = tangent_basis((lat, lon))
    r = spherical_to_cartesian((lat, lon))
    assert abs(b.east @ b.north) < 1e-10
    assert abs(b.east @ r) < 1e-10 and abs(b.north @ r) < 1e-10
    assert abs(np.linalg.norm(b.east) - 1) < 1e-12 and abs(np.linalg.norm(b.north) - 1) < 1e-12


def test_great_circle_distance_examples():
    assert great_circle_distance((0.2, 0.3), (0.2, 0.3)) == 0.0
    assert great_circle_distance((0, 0), (0, PI / 2)) == pytest.approx(PI / 2, abs=1e-15)
    assert great_circle_distance((0, 0), (PI / 4, 0)) == pytest.approx(PI / 4, abs=1e-15)


def test_great_circle_distance_metric_properties():
    rng = np.random.default_rng(9)
    pts = [(math.asin(rng.uniform(-1, 1)), rng.uniform(-PI, PI)) for _ in range(300)]
    for a, b, c in zip(pts, pts[1:], pts[2:]):
        ab = great_circle_distance(a, b)
        assert ab == pytest.approx(great_circle_distance(b, a), abs=1e-15)
        assert 0 <= ab <= PI
        assert great_circle_distance(a, c) <= ab + great_circle_distance(b, c) + 1e-12


def test_direction_equator_eastward():
    d = great_circle_direction((512, 256), (640, 256), (512, 256), W, H)
    assert d.di == 1.0 and d.dj == 0.0


def test_direction_meridian_north():
    d = great_circle_direction((512, 256), (512, 192), (512, 256), W, H)
    assert d.di == 0.0 and d.dj == -1.0


def test_direction_antipodal_is_degenerate():
    with pytest.raises(DegenerateGreatCircleError):
        great_circle_direction((512, 256), (0, 256), (512, 256), W, H)
    with pytest.raises(DegenerateGreatCircleError):
        great_circle_direction((512, 256), (512, 256), (512, 256), W, H)


def test_direction_at_target_is_zero():
    d = great_circle_direction((500, 200), (540, 210), (540, 210), W, H)
    assert d == (0.0, 0.0)


def test_direction_at_pole_rejected():
    with pytest.raises(DegenerateBasisError):
        great_circle_direction((500, 200), (540, 210), (7, 0), W, H)


def test_direction_falls_back_when_projection_hits_target():
    # cur lies on the target's meridian, off the equatorial great circle
    d = great_circle_direction((400, 256), (512, 256), (512, 200), W, H)
    assert d.di == pytest.approx(0.0, abs=1e-12) and d.dj == pytest.approx(1.0)


def test_direction_equatorial_matches_planar():
    rng = np.random.default_rng(2)
    for _ in range(500):
        hi, ti, ci = rng.uniform(300, 700, size=3)
        if abs(ti - ci) < 1e-3 or abs(hi - ti) < 1e-3:
            continue
        d = great_circle_direction((hi, 256), (ti, 256), (ci, 256), W, H)
        assert d.di == pytest.approx(math.copysign(1.0, ti - ci), abs=1e-9)
        assert abs(d.dj) < 1e-9


def test_projection_lies_on_great_circle_plane():
    # recompute the projected point the same way a reader of the docstring would
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b, c = (spherical_to_cartesian(pixel_to_spherical(p, W, H))
                   for p in rng.uniform((0, 60), (W, H - 60), size=(3, 2)))
        n = np.cross(a, b)
        n /= np.linalg.norm(n)
        proj = c - (c @ n) * n
        proj /= np.linalg.norm(proj)
        assert abs(proj @ n) < 1e-10


def _fuzz_triples(n, rng, max_lat=80.0):
    lim = (90 - max_lat) / 180 * H
    out = []
    while len(out) < n:
        pts = rng.uniform((0, lim), (W, H - lim), size=(3, 2))
        han, tar, cur = (PixelCoord(*p) for p in pts)
        a, b = (spherical_to_cartesian(pixel_to_spherical(p, W, H)) for p in (han, tar))
        if np.linalg.norm(np.cross(a, b)) < 1e-3:
            continue
        out.append((han, tar, cur))
    return out


def descent_holds(han, tar, cur, eps=1e-4):
    d = great_circle_direction(han, tar, cur, W, H)
    assert abs(math.hypot(*d) - 1.0) < 1e-10
    before = great_circle_distance(pixel_to_spherical(cur, W, H), pixel_to_spherical(tar, W, H))
    nxt = (cur.i + eps * d.di, cur.j + eps * d.dj)
    after = great_circle_distance(pixel_to_spherical(nxt, W, H), pixel_to_spherical(tar, W, H))
    return after < before


def test_descent_property_fuzz():
    rng = np.random.default_rng(11)
    triples = _fuzz_triples(1000, rng)
    failures = [t for t in triples if not descent_holds(*t)]
    assert not failures


@settings(max_examples=200, deadline=None)
@given(st.floats(0, W - 1), st.floats(60, H - 60), st.floats(0, W - 1), st.floats(60, H - 60),
       st.floats(0, 1))
def test_descent_from_points_on_the_path(hi, hj, ti, tj, t):
    # cur interpolated along the great circle between handle and target
    a = spherical_to_cartesian(pixel_to_spherical((hi, hj), W, H))
    b = spherical_to_cartesian(pixel_to_spherical((ti, tj), W, H))
    if np.linalg.norm(np.cross(a, b)) < 1e-3 or a @ b < -0.9:
        return
    v = (1 - t) * a + t * b
    s = cartesian_to_spherical(v)
    if abs(s.lat) > math.radians(80):
        return
    cur = spherical_to_pixel(s, W, H)
    if np.linalg.norm(spherical_to_cartesian(s) - b) < 1e-6:
        return
    assert descent_holds(PixelCoord(hi, hj), PixelCoord(ti, tj), cur)
