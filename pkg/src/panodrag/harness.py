"""Case directories, synthetic cases and end-to-end benchmark suites.

A case directory holds ``manifest.json``, an 8-bit RGB panorama and an
8-bit grayscale mask::

    {
      "id": "seam-0003",
      "image_path": "image.png",
      "mask_path": "mask.png",
      "width": 1024,
      "height": 512,
      "pairs": [[[1014, 256], [10, 256]]]
    }

Paths are relative to the directory; each pair is ``[handle, target]`` with
integer ``[i, j]`` pixel coordinates.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, jsonfmt
from .drag_engine import DragConfig, build_field, cell_distance, downsample_mask, run_drag
from .errors import (
    CaseFormatError,
    DimensionMismatchError,
    InvalidArgumentError,
    MissingFileError,
    PanoDragError,
    SchemaError,
)
from .metrics import MetricReport, evaluate_metrics
from .reproject import (
    AlignmentRecord,
    DragCase,
    align_case,
    inverse_align,
    load_image,
    load_mask,
    save_image,
    save_mask,
    spherical_midpoint,
)
from .sphere_geom import latlon_to_pixels, latlon_to_xyz, pixels_to_latlon

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
FAMILIES = ("equatorial", "seam", "highlat", "oblique")
ERP_WIDTH, ERP_HEIGHT = 1024, 512
FIELD_FACTOR = 8


class AspectRatioError(CaseFormatError, ValueError):
    pass


# -- case I/O -------------------------------------------------------------------

def _parse_point(raw, k, what):
    if (not isinstance(raw, list) or len(raw) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw)):
        raise SchemaError(f"pair {k}: {what} must be an [i, j] pair of integers, got {raw!r}")
    return raw


def load_case(path) -> DragCase:
    path = Path(path)
    mpath = path / MANIFEST
    if not mpath.is_file():
        raise MissingFileError(f"{mpath} not found")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{mpath}: invalid JSON ({exc})") from exc
    required = {"id": str, "image_path": str, "mask_path": str, "pairs": list,
                "width": int, "height": int}
    for key, typ in required.items():
        if key not in manifest:
            raise SchemaError(f"{mpath}: missing key {key!r}")
        if not isinstance(manifest[key], typ):
            raise SchemaError(f"{mpath}: {key!r} must be {typ.__name__}")
    W, H = manifest["width"], manifest["height"]
    if W != 2 * H:
        raise AspectRatioError(f"{mpath}: width {W} must equal twice the height {H}")
    if not manifest["pairs"]:
        raise SchemaError(f"{mpath}: 'pairs' is empty")
    pairs = []
    for k, pair in enumerate(manifest["pairs"]):
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(f"pair {k}: expected [handle, target], got {pair!r}")
        h = _parse_point(pair[0], k, "handle")
        t = _parse_point(pair[1], k, "target")
        for what, (i, j) in (("handle", h), ("target", t)):
            if not (0 <= i < W and 0 <= j <= H):
                raise SchemaError(f"pair {k}: {what} {[i, j]} outside the {W}x{H} image")
        if h == t:
            raise SchemaError(f"pair {k}: handle equals target")
        pairs.append((tuple(h), tuple(t)))

    files = {}
    for key in ("image_path", "mask_path"):
        f = path / manifest[key]
        if not f.is_file():
            raise MissingFileError(f"{key} {f} not found")
        files[key] = f
    image = load_image(files["image_path"])
    mask = load_mask(files["mask_path"])
    if image.shape[:2] != (H, W):
        raise DimensionMismatchError(
            f"image is {image.shape[1]}x{image.shape[0]}, manifest says {W}x{H}")
    if mask.shape != (H, W):
        raise DimensionMismatchError(
            f"mask is {mask.shape[1]}x{mask.shape[0]}, image is {W}x{H}")
    return DragCase(image, mask, pairs, manifest["id"]).validate()


def case_manifest(case: DragCase, image_name="image.png", mask_name="mask.png") -> dict:
    pairs = []
    for h, t in case.pairs:
        pt = [[int(round(p.i)) % case.width, int(round(p.j))] for p in (h, t)]
        pairs.append(pt)
    return {"id": case.id, "image_path": image_name, "mask_path": mask_name,
            "width": case.width, "height": case.height, "pairs": pairs}


def save_case(case: DragCase, path) -> Path:
    """Write a case directory; point coordinates are rounded to integers."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = case_manifest(case)
    save_image(path / manifest["image_path"], case.image)
    save_mask(path / manifest["mask_path"], case.mask)
    (path / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")
    return path


# -- synthetic cases --------------------------------------------------------------

@dataclass
class SynthParams:
    family: str = "equatorial"
    blob_count: int = 3
    latitudes: Optional[tuple] = None      # degrees; range for the dragged blob
    drag_length: Optional[float] = None    # great-circle arc, in field cells
    sigma_cells: float = 2.0
    width: int = ERP_WIDTH
    height: int = ERP_HEIGHT


_FAMILY_DEFAULTS = {
    # latitude range (deg), azimuth range (deg from north), drag arc (cells)
    "equatorial": ((0.0, 0.0), (90.0, 90.0), 10.0),
    "seam": ((-15.0, 15.0), (80.0, 100.0), 10.0),
    "highlat": ((55.0, 70.0), (80.0, 100.0), 8.0),
    "oblique": ((-35.0, 35.0), (30.0, 60.0), 14.0),
}


def destination(lat, lon, azimuth, arc):
    """Point reached from ``(lat, lon)`` along a great circle (radians; azimuth from north)."""
    lat2 = math.asin(math.sin(lat) * math.cos(arc)
                     + math.cos(lat) * math.sin(arc) * math.cos(azimuth))
    lon2 = lon + math.atan2(math.sin(azimuth) * math.sin(arc) * math.cos(lat),
                            math.cos(arc) - math.sin(lat) * math.sin(lat2))
    return lat2, lon2


def _angular_distance(xyz, v):
    return np.arctan2(np.linalg.norm(np.cross(xyz, v), axis=-1), xyz @ v)


def _arc_distance(xyz, a, b):
    """Angular distance from each point to the minor great-circle arc a-b."""
    n = np.cross(a, b)
    n /= np.linalg.norm(n)
    foot = xyz - (xyz @ n)[..., None] * n
    # the foot lies on the arc when it is on the inner side of both endpoints
    inside = (np.cross(a, foot) @ n >= 0) & (np.cross(foot, b) @ n >= 0)
    to_plane = np.arcsin(np.clip(np.abs(xyz @ n), 0.0, 1.0))
    ends = np.minimum(_angular_distance(xyz, a), _angular_distance(xyz, b))
    return np.where(inside, to_plane, ends)


def generate_synthetic_case(seed: int, params: Optional[SynthParams] = None, case_id=None) -> DragCase:
    """Render a smooth panorama with Gaussian blobs and one drag pair.

    Blobs are drawn in angular distance on the sphere, so their ERP
    footprints stretch by ``1/cos(lat)`` like real content. The handle is
    the centre of blob 0 and the target lies ``drag_length`` cells away
    along a great circle; the mask covers the blob swept along that path.
    """
    p = params or SynthParams()
    if p.family not in FAMILIES:
        raise InvalidArgumentError(f"unknown family {p.family!r}; choose from {FAMILIES}")
    lat_rng, az_rng, default_len = _FAMILY_DEFAULTS[p.family]
    if p.latitudes is not None:
        lat_rng = p.latitudes
    length = default_len if p.drag_length is None else p.drag_length
    if length <= 0:
        raise InvalidArgumentError("drag length must be positive (handle would equal target)")
    W, H = p.width, p.height
    cell = math.pi / (H // FIELD_FACTOR)
    arc = length * cell
    if arc >= math.pi - 1e-6:
        raise InvalidArgumentError("drag endpoints would be antipodal")
    sigma = p.sigma_cells * cell

    rng = np.random.default_rng(seed)
    lat0 = math.radians(rng.uniform(*lat_rng))
    if p.family == "highlat" and rng.random() < 0.5:
        lat0 = -lat0
    az = math.radians(rng.uniform(*az_rng))
    if p.family == "seam":
        lon0 = math.pi - arc / 2 + rng.uniform(-0.25, 0.25) * arc
    else:
        lon0 = rng.uniform(-math.pi, math.pi)

    # snap the handle to a pixel so the manifest stores it exactly
    hi, hj = latlon_to_pixels(lat0, lon0, W, H)
    hi, hj = int(round(float(hi))) % W, int(round(float(hj)))
    lat0, lon0 = (float(v) for v in pixels_to_latlon(hi, hj, W, H))
    lat1, lon1 = destination(lat0, lon0, az, arc)
    ti, tj = latlon_to_pixels(lat1, lon1, W, H)
    ti, tj = int(round(float(ti))) % W, int(round(float(tj)))
    if (ti, tj) == (hi, hj):
        raise InvalidArgumentError("drag too short: handle and target share a pixel")

    jj, ii = np.mgrid[0:H, 0:W].astype(np.float64)
    glat, glon = pixels_to_latlon(ii, jj, W, H)
    xyz = latlon_to_xyz(glat, glon)

    img = np.empty((H, W, 3))
    base = rng.uniform(0.25, 0.45, size=3)
    for c in range(3):
        a = rng.uniform(-0.08, 0.08, size=3)
        ph = rng.uniform(0, 2 * np.pi)
        img[..., c] = (base[c] + a[0] * np.sin(glat)
                       + a[1] * np.cos(glat) * np.cos(glon - ph)
                       + a[2] * np.cos(glat) ** 2 * np.cos(2 * (glon + ph)))
    centers = [(lat0, lon0)]
    for _ in range(p.blob_count - 1):
        centers.append((math.asin(rng.uniform(-0.9, 0.9)), rng.uniform(-math.pi, math.pi)))
    for k, (bl, bo) in enumerate(centers):
        v = latlon_to_xyz(bl, bo)
        amp = 0.5 if k == 0 else rng.uniform(0.15, 0.35)
        color = np.array([1.0, 0.6, 0.3]) if k == 0 else rng.uniform(0.3, 1.0, size=3)
        g = np.exp(-_angular_distance(xyz, v) ** 2 / (2 * sigma ** 2))
        img += amp * g[..., None] * color
    img = np.clip(img, 0.0, 1.0)

    # mask: blob support (3 sigma) swept along the drag path
    near = _arc_distance(xyz, latlon_to_xyz(lat0, lon0), latlon_to_xyz(lat1, lon1))
    mask = (near <= 3 * sigma).astype(np.uint8)

    cid = case_id or f"{p.family}-{seed:04d}"
    return DragCase(img, mask, [((hi, hj), (ti, tj))], cid).validate()


# -- suite -------------------------------------------------------------------------

@dataclass
class Ablation:
    ar: bool = True
    gcta: bool = True
    ssrt: bool = True


@dataclass
class CaseOutcome:
    case_id: str
    ok: bool
    error: Optional[str] = None
    success: Optional[bool] = None
    iterations: list = field(default_factory=list)
    final_distance: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    hashes: dict = field(default_factory=dict)
    metrics: Optional[MetricReport] = None
    edited: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class SuiteReport:
    cases: list
    aggregate: dict
    config: dict
    version: str
    seeds: dict

    @property
    def failed(self) -> list:
        return [c.case_id for c in self.cases if not c.ok]

    @property
    def success_rate(self) -> float:
        done = [c for c in self.cases if c.ok]
        return sum(bool(c.success) for c in done) / len(done) if done else 0.0

    def to_dict(self) -> dict:
        rows, cases = [], []
        for c in self.cases:
            if c.metrics is not None:
                rows.extend(c.metrics.rows(c.case_id, self.seeds["metrics"]))
            cases.append({
                "case_id": c.case_id, "ok": c.ok, "error": c.error, "success": c.success,
                "iterations": c.iterations, "converged": c.converged,
                "final_distance": c.final_distance, "hashes": c.hashes,
            })
        return {"version": self.version, "config": self.config, "seeds": self.seeds,
                "aggregate": self.aggregate, "rows": rows, "cases": cases}

    def to_json(self) -> str:
        return jsonfmt.dumps(self.to_dict(), indent=2) + "\n"


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[:16]


def view_centers(mid, fov: float, n_views: int = 5) -> list:
    """The drag midpoint plus views nudged by a quarter FOV east, west, north and south."""
    lat, lon = mid
    q = math.radians(fov) / 4
    offsets = [(0.0, 0.0), (0.0, q), (0.0, -q), (q, 0.0), (-q, 0.0)]
    out = []
    for dlat, dlon in offsets[:n_views]:
        out.append((max(min(lat + dlat, math.pi / 2), -math.pi / 2), lon + dlon))
    return out


def _upsample(delta, s):
    return np.repeat(np.repeat(delta, s, axis=0), s, axis=1)


def run_case(case: DragCase, cfg: DragConfig, fovs=(30, 60, 90), ablation: Ablation = Ablation(),
             s: int = FIELD_FACTOR, metric_seed: int = 0, dry_run: bool = False,
             view_size: int = 224, n_views: int = 5, trace=None) -> CaseOutcome:
    """Align, drag every pair, map the edit back and score it."""
    cfg = DragConfig(**{**asdict(cfg), "gcta_enabled": ablation.gcta,
                        "ssrt_enabled": ablation.ssrt})
    out = CaseOutcome(case.id, ok=True)
    W, H = case.width, case.height
    mid = spherical_midpoint(*case.pairs[0], W, H)
    if ablation.ar:
        aligned, rec = align_case(case)
    else:
        aligned, rec = case, AlignmentRecord.identity()
    out.hashes["align"] = _digest(aligned.image, aligned.mask,
                                  [list(p) for pair in aligned.pairs for p in pair])

    if dry_run:
        edited = case.image.copy()
        out.success = True
    else:
        fld = build_field(aligned.image, s)
        start = fld.data.copy()
        mask_f = downsample_mask(aligned.mask, s)
        Wf, Hf = fld.width, fld.height
        directions, regions, finals = [], [], []
        for h, t in aligned.pairs:
            res = run_drag(fld, mask_f, (h.i / s, h.j / s), (t.i / s, t.j / s), cfg, trace=trace)
            fld = res.final_field
            out.iterations.append(res.iterations)
            out.converged.append(res.converged)
            err = cell_distance(res.trajectory[-1], (t.i / s, t.j / s), Wf, Hf)
            out.final_distance.append(err)
            finals.append(err)
            directions.append([list(d) for d in res.directions])
            regions.append([list(r) for r in res.regions])
        out.success = all(e <= 2.0 for e in finals)
        out.hashes["direction0"] = _digest([d[:1] for d in directions])
        out.hashes["region0"] = _digest([r[:1] for r in regions])
        out.hashes["directions"] = _digest(directions)
        edited = np.clip(aligned.image + _upsample(fld.data - start, s), 0.0, 1.0)
        if ablation.ar:
            edited = inverse_align(DragCase(edited, aligned.mask, aligned.pairs, case.id), rec).image
    out.edited = edited

    if not fovs:
        return out
    per_fov = {}
    for fov in fovs:
        centers = view_centers(mid, fov, n_views)
        rep = evaluate_metrics([case.image] * len(centers), [edited] * len(centers), [fov],
                               centers=centers, seed=metric_seed, view_size=view_size)
        per_fov.update(rep.per_fov)
    n = len(per_fov)
    out.metrics = MetricReport(
        if_score=sum(m["if"] for m in per_fov.values()) / n,
        fid=sum(m["fid"] for m in per_fov.values()) / n,
        sfid=sum(m["sfid"] for m in per_fov.values()) / n,
        per_fov=per_fov,
    )
    return out


def run_suite(cases: Sequence[DragCase], cfg: Optional[DragConfig] = None, fovs=(30, 60, 90),
              ablation: Ablation = Ablation(), metric_seed: int = 0, dry_run: bool = False,
              case_seeds=None, keep_edited: bool = False, **kwargs) -> SuiteReport:
    """Run every case; failures are recorded and do not stop the suite."""
    cases = list(cases)
    if not cases:
        raise InvalidArgumentError("run_suite needs at least one case")
    cfg = cfg or DragConfig()
    outcomes = []
    for case in sorted(cases, key=lambda c: c.id):
        try:
            out = run_case(case, cfg, fovs, ablation, metric_seed=metric_seed,
                           dry_run=dry_run, **kwargs)
        except PanoDragError as exc:
            log.warning("case %s failed: %s", case.id, exc)
            out = CaseOutcome(case.id, ok=False, error=f"{type(exc).__name__}: {exc}")
        if not keep_edited:
            out.edited = None
        outcomes.append(out)

    aggregate = {}
    done = [o for o in outcomes if o.ok and o.metrics is not None]
    for fov in fovs:
        vals = [o.metrics.per_fov[fov] for o in done]
        if vals:
            aggregate[str(fov)] = {k: sum(v[k] for v in vals) / len(vals)
                                   for k in ("if", "fid", "sfid")}
    drags = [o for o in outcomes if o.ok]
    aggregate["tracking_success_rate"] = (
        sum(bool(o.success) for o in drags) / len(drags) if drags else 0.0)
    config = {**asdict(cfg), "ablation": asdict(ablation), "fovs": list(fovs),
              "dry_run": dry_run, "field_factor": kwargs.get("s", FIELD_FACTOR)}
    seeds = {"metrics": metric_seed, "cases": list(case_seeds) if case_seeds is not None else None}
    return SuiteReport(outcomes, aggregate, config, __version__, seeds)
