"""Motion supervision and point tracking over a feature field.

The field plays the role of both the optimised latent and its feature maps
(an identity feature extractor), so every quantity here is exact: the loss
is an L1 objective over bilinear samples and its gradient is written out by
hand. Field coordinates follow the package pixel convention with the field
size ``(W', H')`` standing in for ``(W, H)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, TextIO

import numpy as np

from . import jsonfmt, kernels
from .errors import (
    ClampWarning,
    DegenerateInputError,
    DragAbortedError,
    InvalidArgumentError,
)
from .sphere_geom import (
    DirectionVec2,
    PixelCoord,
    great_circle_direction,
    latlon_to_xyz,
    pixel_to_spherical,
    pixels_to_latlon,
    spherical_to_cartesian,
)


@dataclass
class FeatureField:
    data: np.ndarray
    downsample_factor: int = 1

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    def copy(self) -> "FeatureField":
        return FeatureField(self.data.copy(), self.downsample_factor)


@dataclass
class DragConfig:
    lam: float = 0.1
    lr: float = 0.01
    r_base: float = 3.0
    r0: Optional[float] = None
    r_motion: int = 1
    max_iter: int = 80
    stop_eps: float = 1.0
    ssrt_enabled: bool = True
    gcta_enabled: bool = True
    r_cap: Optional[float] = None
    # which radius the latitude factor stretches; "vertical" is the published rule
    ssrt_axis: str = "vertical"

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidArgumentError("lambda must be >= 0")
        if self.lr <= 0:
            raise InvalidArgumentError("learning rate must be > 0")
        if self.r_base < 1 or (self.r0 is not None and self.r0 < 1) or self.r_motion < 0:
            raise InvalidArgumentError("radii must be >= 1 (motion radius >= 0)")
        if self.max_iter < 1:
            raise InvalidArgumentError("max_iter must be >= 1")
        if self.ssrt_axis not in ("vertical", "horizontal"):
            raise InvalidArgumentError(f"unknown ssrt_axis {self.ssrt_axis!r}")

    @property
    def horizontal_radius(self) -> float:
        return self.r_base if self.r0 is None else self.r0

    def cap_for(self, height: int) -> float:
        return height / 4.0 if self.r_cap is None else self.r_cap


@dataclass
class SearchRegion:
    center: PixelCoord
    rx: float
    ry: float
    xs: np.ndarray
    ys: np.ndarray

    def __len__(self):
        return len(self.xs)


@dataclass
class DragState:
    k: int
    handle: PixelCoord
    handle0: PixelCoord
    field: np.ndarray
    field0: np.ndarray
    handle0_feature: np.ndarray
    trajectory: list = field(default_factory=list)


@dataclass
class DragResult:
    converged: bool
    iterations: int
    trajectory: list
    final_field: FeatureField
    final_distance: float
    directions: list = field(default_factory=list)
    regions: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    clipped_steps: int = 0


def build_field(img, s: int) -> FeatureField:
    """Box-downsample an image by an integer factor ``s``."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[..., None]
    H, W, C = img.shape
    if s < 1 or H % s or W % s:
        raise InvalidArgumentError(f"factor {s} does not divide image size {W}x{H}")
    data = img.reshape(H // s, s, W // s, s, C).mean(axis=(1, 3))
    return FeatureField(data, s)


def downsample_mask(mask, s: int) -> np.ndarray:
    """Majority vote per ``s x s`` block; ties count as editable."""
    mask = np.asarray(mask)
    H, W = mask.shape
    if s < 1 or H % s or W % s:
        raise InvalidArgumentError(f"factor {s} does not divide mask size {W}x{H}")
    votes = (mask != 0).reshape(H // s, s, W // s, s).sum(axis=(1, 3))
    return (2 * votes >= s * s).astype(np.uint8)


def _data(f):
    return f.data if isinstance(f, FeatureField) else np.asarray(f, dtype=np.float64)


def sample_feature(fld, pos) -> np.ndarray:
    """Bilinear feature lookup with horizontal wrap; rows outside the field are clamped."""
    data = _data(fld)
    x, y = pos
    if y < 0 or y > data.shape[0] - 1:
        warnings.warn(f"row {y} outside field; clamped", ClampWarning, stacklevel=2)
    return kernels.bilinear_remap(data, np.array([x], float), np.array([y], float))[0]


def cell_distance(a, b, W: int, H: int) -> float:
    """Great-circle distance between two field positions, in equatorial cells."""
    va = spherical_to_cartesian(pixel_to_spherical(a, W, H))
    vb = spherical_to_cartesian(pixel_to_spherical(b, W, H))
    ang = math.atan2(float(np.linalg.norm(np.cross(va, vb))), float(np.dot(va, vb)))
    return ang / (math.pi / H)


def motion_direction(state: DragState, target, cfg: DragConfig, W: int, H: int) -> DirectionVec2:
    if cfg.gcta_enabled:
        return great_circle_direction(state.handle0, target, state.handle, W, H)
    di = target[0] - state.handle[0]
    dj = target[1] - state.handle[1]
    n = math.hypot(di, dj)
    if n == 0.0:
        raise DegenerateInputError("handle coincides with target")
    return DirectionVec2(di / n, dj / n)


def _patch(handle, d, r: int, H: int):
    """Patch points q and their shifted partners q + d, dropping rows outside the field."""
    off = np.arange(-r, r + 1, dtype=np.float64)
    oy, ox = np.meshgrid(off, off, indexing="ij")
    qx = handle[0] + ox.ravel()
    qy = handle[1] + oy.ravel()
    sx = qx + d[0]
    sy = qy + d[1]
    keep = (qy >= 0) & (qy <= H - 1) & (sy >= 0) & (sy <= H - 1)
    return qx[keep], qy[keep], sx[keep], sy[keep], int((~keep).sum())


def _loss_and_grad(state: DragState, d, mask, cfg: DragConfig, want_grad=True):
    F = state.field
    H, W, C = F.shape
    qx, qy, sx, sy, clipped = _patch(state.handle, d, cfg.r_motion, H)
    ref = kernels.bilinear_remap(F, qx, qy)          # frozen reference
    cur = kernels.bilinear_remap(F, sx, sy)
    res = cur - ref
    term1 = float(np.abs(res).sum())

    keep = 1.0 - np.asarray(mask, dtype=np.float64)
    diff = F - state.field0
    term2 = cfg.lam * float((np.abs(diff) * keep[..., None]).sum())

    if not want_grad:
        return term1 + term2, None, clipped

    grad = cfg.lam * np.sign(diff) * keep[..., None]
    sgn = np.sign(res)
    xf = np.floor(sx)
    fx = (sx - xf)[:, None]
    x0 = np.mod(xf.astype(np.int64), W)
    x1 = np.where(x0 + 1 == W, 0, x0 + 1)
    yf = np.floor(sy)
    fy = (sy - yf)[:, None]
    y0 = yf.astype(np.int64)
    y1 = np.minimum(y0 + 1, H - 1)
    for yy, xx, w in (
        (y0, x0, (1 - fx) * (1 - fy)),
        (y0, x1, fx * (1 - fy)),
        (y1, x0, (1 - fx) * fy),
        (y1, x1, fx * fy),
    ):
        np.add.at(grad, (yy, xx), sgn * w)
    return term1 + term2, grad, clipped


def motion_supervision_loss(state: DragState, d, mask, cfg: DragConfig) -> float:
    """Shifted-patch L1 term plus the lambda-weighted off-mask drift term.

    Patch points whose row, or whose shifted row, falls outside the field
    are skipped.
    """
    loss, _, _ = _loss_and_grad(state, d, mask, cfg, want_grad=False)
    return loss


def loss_gradient(state: DragState, d, mask, cfg: DragConfig) -> np.ndarray:
    """Exact subgradient of :func:`motion_supervision_loss` w.r.t. the field.

    The reference samples and ``field0`` are constants; ``sign(0)`` is 0.
    """
    return _loss_and_grad(state, d, mask, cfg)[1]


def build_search_region(handle, cfg: DragConfig, W: int, H: int) -> SearchRegion:
    r0 = cfg.horizontal_radius
    rx, ry = r0, cfg.r_base
    if cfg.ssrt_enabled:
        cap = cfg.cap_for(H)
        c = math.cos(pixel_to_spherical(handle, W, H).lat)
        stretched = cap if c * cap <= cfg.r_base else cfg.r_base / c
        if cfg.ssrt_axis == "vertical":
            ry = stretched
        else:
            rx = cap if c * cap <= r0 else r0 / c
    px, py = handle
    # nearest-integer radii keep the covered solid angle within a few percent
    # of the continuous region; ceil over-covers by up to 2 rows near the equator
    Rx, Ry = math.floor(rx + 0.5), math.floor(ry + 0.5)
    x_lo, x_hi = math.ceil(px - Rx), math.floor(px + Rx)
    if x_hi - x_lo + 1 > W:
        x_lo, x_hi = math.ceil(px - W / 2), math.ceil(px - W / 2) + W - 1
    y_lo = max(math.ceil(py - Ry), 0)
    y_hi = min(math.floor(py + Ry), H - 1)
    ys, xs = np.meshgrid(np.arange(y_lo, y_hi + 1), np.arange(x_lo, x_hi + 1), indexing="ij")
    return SearchRegion(PixelCoord(float(px), float(py)), float(rx), float(ry),
                        np.mod(xs.ravel(), W).astype(np.int64), ys.ravel().astype(np.int64))


def track_point(state: DragState, region: SearchRegion) -> PixelCoord:
    """Region cell whose feature is L1-closest to the initial handle feature.

    Ties go to the cell nearest (great-circle) to the current handle, then
    to the first cell in row-major order.
    """
    F = state.field
    H, W = F.shape[:2]
    dist = kernels.region_l1(F, region.xs, region.ys, state.handle0_feature)
    best = np.flatnonzero(dist == dist.min())
    if len(best) > 1:
        lat, lon = pixels_to_latlon(region.xs[best], region.ys[best], W, H)
        v = latlon_to_xyz(lat, lon)
        h = spherical_to_cartesian(pixel_to_spherical(state.handle, W, H))
        ang = np.arctan2(np.linalg.norm(np.cross(v, h), axis=-1), v @ h)
        # mirror-image cells are equidistant up to rounding; let row-major order decide them
        best = best[ang <= ang.min() + 1e-12]
        if len(best) > 1:
            order = np.lexsort((region.xs[best], region.ys[best]))
            best = best[order]
    k = int(best[0])
    return PixelCoord(float(region.xs[k]), float(region.ys[k]))


def _trace_line(stream, k, handle, loss, d):
    stream.write(jsonfmt.dumps({"k": k, "handle": list(handle), "loss": loss,
                                "direction": list(d)}) + "\n")


def run_drag(case_field, field_mask, handle, target, cfg: DragConfig,
             trace: Optional[TextIO] = None) -> DragResult:
    """Drag ``handle`` towards ``target`` on a field; positions are in field cells.

    The starting handle is snapped to its nearest cell. Each iteration takes
    one gradient step on the motion-supervision loss and then re-locates the
    handle by point tracking; the loop stops once the handle is within
    ``cfg.stop_eps`` cells (great-circle) of the target.
    """
    fld = case_field if isinstance(case_field, FeatureField) else FeatureField(
        np.asarray(case_field, dtype=np.float64))
    H, W = fld.height, fld.width
    mask = np.asarray(field_mask)
    if mask.shape != (H, W):
        raise InvalidArgumentError(f"mask shape {mask.shape} does not match field {(H, W)}")
    h0 = PixelCoord(float(round(handle[0]) % W), float(min(max(round(handle[1]), 0), H - 1)))
    target = PixelCoord(float(target[0]), float(target[1]))
    if h0 == target:
        raise InvalidArgumentError("handle equals target")

    field0 = fld.data.copy()
    field0.flags.writeable = False
    ref = sample_feature(field0, h0)
    ref.flags.writeable = False
    state = DragState(k=0, handle=h0, handle0=h0, field=fld.data.copy(), field0=field0,
                      handle0_feature=ref, trajectory=[h0])
    result = DragResult(False, 0, state.trajectory, fld, float("nan"))

    for k in range(cfg.max_iter + 1):
        state.k = k
        dist = cell_distance(state.handle, target, W, H)
        if dist <= cfg.stop_eps:
            result.converged = True
            break
        if k == cfg.max_iter:
            break
        try:
            d = motion_direction(state, target, cfg, W, H)
        except DegenerateInputError as exc:
            raise DragAbortedError(f"iteration {k}: {exc}") from exc
        loss, grad, clipped = _loss_and_grad(state, d, mask, cfg)
        if not math.isfinite(loss):
            raise DragAbortedError(f"iteration {k}: non-finite loss")
        if trace is not None:
            _trace_line(trace, k, state.handle, loss, d)
        result.clipped_steps += clipped > 0
        result.losses.append(loss)
        result.directions.append(d)
        state.field -= cfg.lr * grad
        region = build_search_region(state.handle, cfg, W, H)
        result.regions.append((region.rx, region.ry, len(region)))
        state.handle = track_point(state, region)
        state.trajectory.append(state.handle)

    result.iterations = len(result.directions)
    result.final_distance = dist
    result.final_field = FeatureField(state.field, fld.downsample_factor)
    return result
