"""Rotating ERP panoramas, masks and drag points on the sphere.

Images are float64 arrays of shape ``(H, W, C)`` (or ``(H, W)``) with
samples in ``[0, 1]`` and ``W == 2 * H``; masks are ``(H, W)`` uint8 arrays
holding 0/1. Rotations act on content: rotating by ``R`` moves the sphere
point ``v`` to ``R @ v``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import kernels
from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    InvalidArgumentError,
    PoleAmbiguityWarning,
)
from .sphere_geom import (
    PixelCoord,
    SphericalCoord,
    alignment_rotation,
    latlon_to_pixels,
    latlon_to_xyz,
    pixel_to_spherical,
    pixels_to_latlon,
    spherical_to_cartesian,
    xyz_to_latlon,
)

_IDENTITY_TOL = 1e-14


@dataclass
class DragCase:
    image: np.ndarray
    mask: np.ndarray
    pairs: list
    id: str = "case"

    def __post_init__(self):
        self.pairs = [(PixelCoord(*h), PixelCoord(*t)) for h, t in self.pairs]

    @property
    def width(self) -> int:
        return self.image.shape[1]

    @property
    def height(self) -> int:
        return self.image.shape[0]

    def validate(self) -> "DragCase":
        img = self.image
        if img.ndim not in (2, 3):
            raise InvalidArgumentError(f"image must be 2-D or 3-D, got shape {img.shape}")
        H, W = img.shape[:2]
        if W != 2 * H:
            raise InvalidArgumentError(f"ERP image must have W = 2H, got {W}x{H}")
        if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
            raise InvalidArgumentError("image samples must be finite and inside [0, 1]")
        if self.mask.shape != (H, W):
            raise DimensionMismatchError(
                f"mask shape {self.mask.shape} does not match image {(H, W)}"
            )
        if not np.isin(self.mask, (0, 1)).all():
            raise InvalidArgumentError("mask must be strictly binary")
        if not self.pairs:
            raise InvalidArgumentError("a drag case needs at least one handle/target pair")
        for k, (h, t) in enumerate(self.pairs):
            for name, p in (("handle", h), ("target", t)):
                if not (0 <= p.i < W and 0 <= p.j <= H):
                    raise InvalidArgumentError(f"pair {k}: {name} {tuple(p)} outside {W}x{H}")
            if h == t:
                raise InvalidArgumentError(f"pair {k}: handle equals target")
        return self


@dataclass
class AlignmentRecord:
    rotation: np.ndarray
    target_lon: float
    keep_lat: bool
    midpoint_before: SphericalCoord
    midpoint_after: SphericalCoord

    @classmethod
    def identity(cls) -> "AlignmentRecord":
        origin = SphericalCoord(0.0, 0.0)
        return cls(np.eye(3), 0.0, True, origin, origin)


@dataclass
class PerspectiveSpec:
    center: SphericalCoord
    fov: float
    out_size: int = 512

    def __post_init__(self):
        if not 0.0 < self.fov < 180.0:
            raise InvalidArgumentError(f"fov must lie in (0, 180) degrees, got {self.fov}")
        if self.out_size < 16:
            raise InvalidArgumentError(f"out_size must be >= 16, got {self.out_size}")


def spherical_midpoint(handle, target, W, H) -> SphericalCoord:
    """Shortest-arc midpoint of two pixels (normalised sum of their embeddings)."""
    a = spherical_to_cartesian(pixel_to_spherical(handle, W, H))
    b = spherical_to_cartesian(pixel_to_spherical(target, W, H))
    s = a + b
    n = np.linalg.norm(s)
    if n < 1e-9:
        raise DegenerateInputError(f"{tuple(handle)} and {tuple(target)} are antipodal")
    lat, lon = xyz_to_latlon(s / n)
    return SphericalCoord(float(lat), float(lon))


def _is_identity(R) -> bool:
    return bool(np.max(np.abs(np.asarray(R) - np.eye(3))) <= _IDENTITY_TOL)


def rotate_erp_image(img, R, interp: str = "bilinear") -> np.ndarray:
    """Resample ``img`` so that its content is rotated by ``R``.

    Inverse mapping: each output sample looks up ``R.T @ v`` in the source.
    Rotations within 1e-14 of the identity return an exact copy.
    """
    if interp not in ("bilinear", "nearest"):
        raise InvalidArgumentError(f"unknown interpolation {interp!r}")
    img = np.asarray(img)
    if _is_identity(R):
        return img.copy()
    squeeze = img.ndim == 2
    src = img[..., None] if squeeze else img
    H, W = src.shape[:2]
    jj, ii = np.mgrid[0:H, 0:W].astype(np.float64)
    lat, lon = pixels_to_latlon(ii, jj, W, H)
    # row-vector form of R.T @ v
    pre = latlon_to_xyz(lat, lon) @ np.asarray(R, dtype=np.float64)
    plat, plon = xyz_to_latlon(pre)
    xs, ys = latlon_to_pixels(plat, plon, W, H)
    sampler = kernels.bilinear_remap if interp == "bilinear" else kernels.nearest_remap
    out = sampler(src.astype(np.float64), xs, ys)
    if interp == "nearest":
        out = out.astype(img.dtype)
    return out[..., 0] if squeeze else out


def rotate_mask(mask, R) -> np.ndarray:
    return rotate_erp_image(np.asarray(mask, dtype=np.uint8), R, "nearest")


def rotate_point(p, R, W, H) -> PixelCoord:
    v = np.asarray(R, dtype=np.float64) @ spherical_to_cartesian(pixel_to_spherical(p, W, H))
    lat, lon = xyz_to_latlon(v)
    if abs(abs(float(lat)) - math.pi / 2) < 1e-12:
        warnings.warn(f"rotated point {tuple(p)} lands on a pole; longitude fixed to 0",
                      PoleAmbiguityWarning, stacklevel=2)
        lon = 0.0
    i, j = latlon_to_pixels(lat, lon, W, H)
    return PixelCoord(float(i), float(j))


def _rotate_case(case: DragCase, R, case_id=None) -> DragCase:
    H, W = case.height, case.width
    pairs = [(rotate_point(h, R, W, H), rotate_point(t, R, W, H)) for h, t in case.pairs]
    return DragCase(
        image=rotate_erp_image(case.image, R, "bilinear"),
        mask=rotate_mask(case.mask, R),
        pairs=pairs,
        id=case.id if case_id is None else case_id,
    )


def align_case(case: DragCase, target_lon: float = 0.0, keep_lat: bool = True):
    """Rotate a case so the first pair's midpoint sits at ``target_lon``.

    Returns ``(aligned_case, record)``. The image is resampled bilinearly,
    the mask by nearest neighbour and the points analytically.
    """
    H, W = case.height, case.width
    handle, target = case.pairs[0]
    mid = spherical_midpoint(handle, target, W, H)
    R = alignment_rotation(mid, target_lon, keep_lat)
    after = xyz_to_latlon(R @ spherical_to_cartesian(mid))
    rec = AlignmentRecord(
        rotation=R,
        target_lon=float(target_lon),
        keep_lat=bool(keep_lat),
        midpoint_before=mid,
        midpoint_after=SphericalCoord(float(after[0]), float(after[1])),
    )
    return _rotate_case(case, R), rec


def inverse_align(case: DragCase, rec: AlignmentRecord) -> DragCase:
    R = np.asarray(rec.rotation)
    if R.shape != (3, 3):
        raise DimensionMismatchError(f"alignment rotation must be 3x3, got {R.shape}")
    return _rotate_case(case, R.T)


def perspective_rays(spec: PerspectiveSpec) -> np.ndarray:
    """Unit viewing rays, shape ``(S, S, 3)``, for a square gnomonic camera.

    Output pixel ``(S/2, S/2)`` lies on the optical axis; columns increase
    eastwards and rows southwards, as in the panorama.
    """
    S = spec.out_size
    half = math.tan(math.radians(spec.fov) / 2.0)
    coords = (np.arange(S, dtype=np.float64) - S / 2.0) / (S / 2.0) * half
    u, v = np.meshgrid(coords, coords)
    # camera frame looking along +x with east = +y and up = +z
    rays = np.stack([np.ones_like(u), u, -v], axis=-1)
    rays /= np.linalg.norm(rays, axis=-1, keepdims=True)
    lat, lon = spec.center
    c, s = math.cos(lat), math.sin(lat)
    pitch = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    cl, sl = math.cos(lon), math.sin(lon)
    yaw = np.array([[cl, -sl, 0.0], [sl, cl, 0.0], [0.0, 0.0, 1.0]])
    return rays @ (yaw @ pitch).T


def extract_perspective(img, spec: PerspectiveSpec) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    src = img[..., None] if squeeze else img
    H, W = src.shape[:2]
    lat, lon = xyz_to_latlon(perspective_rays(spec))
    xs, ys = latlon_to_pixels(lat, lon, W, H)
    out = kernels.bilinear_remap(src, xs, ys)
    return out[..., 0] if squeeze else out


# -- 8-bit file I/O -----------------------------------------------------------

def load_image(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def save_image(path, img) -> None:
    img = np.asarray(img, dtype=np.float64)
    # np.rint rounds half to even
    q = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    if q.ndim == 3 and q.shape[2] == 1:
        q = q[..., 0]
    Image.fromarray(q).save(Path(path))


def load_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return (arr != 0).astype(np.uint8)


def save_mask(path, mask) -> None:
    q = (np.asarray(mask) != 0).astype(np.uint8) * 255
    Image.fromarray(q).save(Path(path))
