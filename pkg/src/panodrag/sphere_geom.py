"""Coordinate and direction math on the unit sphere for ERP panoramas.

Conventions used throughout the package:

* pixel ``(i, j)``: ``i`` is the column (wraps modulo ``W``), ``j`` the row
  (clamped to ``[0, H]``); integer coordinates are sample positions, so
  ``(W/2, H/2)`` is latitude 0, longitude 0.
* ``lat = pi/2 - j/H * pi`` and ``lon = i/W * 2pi - pi``, with longitude
  normalised to ``(-pi, pi]``.
* Cartesian embedding ``(cos lat cos lon, cos lat sin lon, sin lat)``.
* A pixel-space direction ``(di, dj)`` has ``dj > 0`` pointing down the
  image, i.e. towards the south.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateBasisError,
    DegenerateGreatCircleError,
    DegenerateInputError,
    DegenerateProjectionError,
    InvalidArgumentError,
)

POLE_EPS = 1e-6
DEGENERATE_EPS = 1e-9
AT_TARGET_EPS = 1e-9


class PixelCoord(NamedTuple):
    i: float
    j: float


class SphericalCoord(NamedTuple):
    lat: float
    lon: float


class TangentBasis(NamedTuple):
    east: np.ndarray
    north: np.ndarray


class DirectionVec2(NamedTuple):
    di: float
    dj: float


def normalize_lon(lon):
    """Wrap longitude into ``(-pi, pi]``; works on scalars and arrays."""
    wrapped = math.pi - np.mod(math.pi - np.asarray(lon, dtype=float), 2.0 * math.pi)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def _check_size(W, H):
    if W < 2 or H < 2:
        raise InvalidArgumentError(f"image size must be at least 2x2, got {W}x{H}")


# -- vectorised conversions (arrays in, arrays out) --------------------------

def pixels_to_latlon(i, j, W, H):
    i = np.mod(np.asarray(i, dtype=float), W)
    j = np.clip(np.asarray(j, dtype=float), 0.0, H)
    lat = math.pi / 2 - j / H * math.pi
    lon = normalize_lon(i / W * 2.0 * math.pi - math.pi)
    return lat, lon


def latlon_to_pixels(lat, lon, W, H):
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    i = np.mod((lon + math.pi) / (2.0 * math.pi) * W, W)
    j = (math.pi / 2 - lat) / math.pi * H
    return i, j


def latlon_to_xyz(lat, lon):
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    c = np.cos(lat)
    return np.stack([c * np.cos(lon), c * np.sin(lon), np.sin(lat)], axis=-1)


def xyz_to_latlon(v):
    v = np.asarray(v, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    rho = np.hypot(x, y)
    lat = np.arctan2(z, rho)
    lon = np.where(rho < 1e-12, 0.0, np.arctan2(y, x))
    return lat, normalize_lon(lon)


# -- scalar API ---------------------------------------------------------------

def pixel_to_spherical(p, W, H) -> SphericalCoord:
    _check_size(W, H)
    i, j = p
    if not (math.isfinite(i) and math.isfinite(j)):
        raise InvalidArgumentError(f"non-finite pixel coordinate {p!r}")
    lat, lon = pixels_to_latlon(i, j, W, H)
    return SphericalCoord(float(lat), float(lon))


def spherical_to_pixel(s, W, H) -> PixelCoord:
    """Inverse of :func:`pixel_to_spherical`.

    At the poles every column is the same sphere point; the column returned
    is simply the one implied by ``s.lon``.
    """
    _check_size(W, H)
    lat, lon = s
    if not (math.isfinite(lat) and math.isfinite(lon)):
        raise InvalidArgumentError(f"non-finite spherical coordinate {s!r}")
    i, j = latlon_to_pixels(lat, lon, W, H)
    return PixelCoord(float(i), float(j))


def spherical_to_cartesian(s) -> np.ndarray:
    return latlon_to_xyz(s[0], s[1])


def cartesian_to_spherical(v) -> SphericalCoord:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm < DEGENERATE_EPS:
        raise DegenerateInputError("cannot take the direction of a zero vector")
    lat, lon = xyz_to_latlon(v / norm)
    return SphericalCoord(float(lat), float(lon))


def rotation_lon(dlon: float) -> np.ndarray:
    """Rotation about the polar (z) axis; shifts longitudes by ``dlon``."""
    c, s = math.cos(dlon), math.sin(dlon)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_lat(dlat: float) -> np.ndarray:
    """Rotation about the x axis (the lon-0 equatorial axis)."""
    c, s = math.cos(dlat), math.sin(dlat)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def alignment_rotation(mid, target_lon: float = 0.0, keep_lat: bool = True) -> np.ndarray:
    """Rotation taking ``mid`` to longitude ``target_lon``.

    With ``keep_lat`` the rotation is a pure longitude shift. Otherwise the
    midpoint is additionally tilted along the target meridian onto the
    equator. The tilt axis is the equatorial axis orthogonal to that
    meridian; for ``target_lon = 0`` that is the y axis.
    """
    lat, lon = mid
    shift = rotation_lon(target_lon - lon)
    if keep_lat or lat == 0.0:
        return shift
    tilt = rotation_lon(target_lon) @ _rotation_y(lat) @ rotation_lon(-target_lon)
    return tilt @ shift


def tangent_basis(s) -> TangentBasis:
    lat, lon = s
    if abs(lat) >= math.pi / 2 - POLE_EPS:
        raise DegenerateBasisError(f"tangent basis undefined at latitude {lat!r}")
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    east = np.array([-so, co, 0.0])
    north = np.array([-sl * co, -sl * so, cl])
    return TangentBasis(east, north)


def great_circle_distance(a, b) -> float:
    va = spherical_to_cartesian(a)
    vb = spherical_to_cartesian(b)
    return _arc(va, vb)


def _arc(va, vb) -> float:
    return math.atan2(float(np.linalg.norm(np.cross(va, vb))), float(np.dot(va, vb)))


def great_circle_direction(han, tar, cur, W, H) -> DirectionVec2:
    """Pixel-space unit direction that moves ``cur`` along the handle-target great circle.

    ``cur`` is first projected onto the plane of the great circle through
    ``han`` and ``tar``; the chord from that projection to the target is
    decomposed in the tangent frame at ``cur`` and rescaled into ERP pixel
    units (east by ``1/cos(lat)``, north flipped into row order).

    Returns ``DirectionVec2(0.0, 0.0)`` when ``cur`` already sits on the
    target. If ``cur`` projects exactly onto the target (it lies on the
    target's perpendicular meridian) the chord vanishes, and the direct
    tangent direction from ``cur`` to the target is used instead.
    """
    _check_size(W, H)
    s_han = pixel_to_spherical(han, W, H)
    s_tar = pixel_to_spherical(tar, W, H)
    s_cur = pixel_to_spherical(cur, W, H)
    p_han = spherical_to_cartesian(s_han)
    p_tar = spherical_to_cartesian(s_tar)
    p_cur = spherical_to_cartesian(s_cur)

    normal = np.cross(p_han, p_tar)
    nn = np.linalg.norm(normal)
    if nn < DEGENERATE_EPS:
        raise DegenerateGreatCircleError(
            f"handle {tuple(han)} and target {tuple(tar)} do not define a great circle"
        )
    normal /= nn

    basis = tangent_basis(s_cur)
    if np.linalg.norm(p_tar - p_cur) < AT_TARGET_EPS:
        return DirectionVec2(0.0, 0.0)

    proj = p_cur - np.dot(p_cur, normal) * normal
    pn = np.linalg.norm(proj)
    if pn < DEGENERATE_EPS:
        raise DegenerateProjectionError("current point is parallel to the great-circle normal")
    proj /= pn

    move = p_tar - proj
    if np.linalg.norm(move) < DEGENERATE_EPS:
        move = p_tar - np.dot(p_tar, p_cur) * p_cur
    move /= np.linalg.norm(move)

    v_east = float(np.dot(move, basis.east))
    v_north = float(np.dot(move, basis.north))
    # radians -> pixels: one column spans 2pi/W of longitude, one row pi/H of latitude
    di = v_east / math.cos(s_cur.lat) * W / (2.0 * math.pi)
    dj = -v_north * H / math.pi
    norm = math.hypot(di, dj)
    if norm == 0.0:
        raise DegenerateProjectionError("movement direction has no tangent component")
    return DirectionVec2(di / norm, dj / norm)
