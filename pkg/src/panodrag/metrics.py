"""Image fidelity and Frechet distances over pluggable distances and features.

The perceptual distance and the feature extractor are deterministic
stand-ins (mean absolute difference; seeded random projections of local
patches). Reports carry variant labels so the numbers are never mistaken
for scores computed with pretrained networks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    InsufficientSamplesError,
    InvalidArgumentError,
    InvalidMetricError,
    NotPSDError,
)
from .reproject import PerspectiveSpec, extract_perspective

PSD_TOL = 1e-8
PROJ_DIM = 64
PATCH = 4
GRID = 7
VIEW_SIZE = 224

IF_VARIANT = "IF/mad"
FID_VARIANT = f"FID/rp{PROJ_DIM}"
SFID_VARIANT = f"sFID/rp{PROJ_DIM}x{GRID}x{GRID}"


def default_distance(a, b) -> float:
    """Mean absolute difference of co-registered samples (range [0, 1] for [0, 1] data)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"cannot compare shapes {a.shape} and {b.shape}")
    return float(np.mean(np.abs(a - b)))


def image_fidelity(pairs, dist: Callable = default_distance) -> float:
    pairs = list(pairs)
    if not pairs:
        raise InvalidArgumentError("image fidelity needs at least one pair")
    total = 0.0
    for k, (orig, edit) in enumerate(pairs):
        v = float(dist(orig, edit))
        if not (0.0 <= v <= 1.0):
            raise InvalidMetricError(f"distance {v!r} for pair {k} is outside [0, 1]")
        total += v
    return 1.0 - total / len(pairs)


@dataclass
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray
    n: int
    # centred samples scaled by 1/sqrt(n-1), so that cov == factor.T @ factor
    factor: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def gaussian_stats(features) -> GaussianStats:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidArgumentError(f"features must be a list of equal-length vectors, got {X.shape}")
    n = X.shape[0]
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 feature vectors, got {n}")
    mean = X.mean(axis=0)
    A = (X - mean) / math.sqrt(n - 1)
    cov = A.T @ A
    cov = 0.5 * (cov + cov.T)
    return GaussianStats(mean, cov, n, A)


def psd_sqrt(cov) -> np.ndarray:
    """Symmetric square root of a PSD matrix; eigenvalues above -1e-8 are clipped to 0."""
    cov = np.asarray(cov, dtype=np.float64)
    w, V = np.linalg.eigh(0.5 * (cov + cov.T))
    if w.size and w.min() < -PSD_TOL:
        raise NotPSDError(f"matrix has eigenvalue {w.min():.3g} < -{PSD_TOL}")
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def _trace_sqrt_dense(c1, c2) -> float:
    w2 = np.linalg.eigvalsh(0.5 * (c2 + c2.T))
    if w2.size and w2.min() < -PSD_TOL:
        raise NotPSDError(f"second covariance has eigenvalue {w2.min():.3g}")
    s1 = psd_sqrt(c1)
    mid = s1 @ c2 @ s1
    w = np.linalg.eigvalsh(0.5 * (mid + mid.T))
    return float(np.sqrt(np.clip(w, 0.0, None)).sum())


def _trace_sqrt_lowrank(a1, a2) -> float:
    # sqrt(S1) = V diag(s) V^T from the thin SVD of the sample factor; the
    # sandwich sqrt(S1) S2 sqrt(S1) then shares its nonzero spectrum with
    # the small matrix diag(s) (A2 V)^T (A2 V) diag(s).
    _, s, Vt = np.linalg.svd(a1, full_matrices=False)
    B = (a2 @ Vt.T) * s
    mid = B.T @ B
    w = np.linalg.eigvalsh(0.5 * (mid + mid.T))
    return float(np.sqrt(np.clip(w, 0.0, None)).sum())


def frechet_distance(s1: GaussianStats, s2: GaussianStats) -> float:
    """||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)), clamped at 0.

    The trace of the matrix square root is taken from the symmetric form
    sqrt(S1) S2 sqrt(S1). When both inputs carry sample factors and have
    fewer samples than dimensions, the same quantity is computed in the
    sample space instead of the (much larger) feature space.
    """
    if s1.dim != s2.dim or s1.cov.shape != s2.cov.shape:
        raise DimensionMismatchError(f"feature dimensions differ: {s1.dim} vs {s2.dim}")
    d = s1.dim
    lowrank = (s1.factor is not None and s2.factor is not None
               and min(s1.factor.shape[0], s2.factor.shape[0]) < d)
    if lowrank:
        a, b = (s1, s2) if s1.factor.shape[0] <= s2.factor.shape[0] else (s2, s1)
        tr_sqrt = _trace_sqrt_lowrank(a.factor, b.factor)
    else:
        tr_sqrt = _trace_sqrt_dense(s1.cov, s2.cov)
    diff = s1.mean - s2.mean
    val = float(diff @ diff) + float(np.trace(s1.cov)) + float(np.trace(s2.cov)) - 2.0 * tr_sqrt
    return max(val, 0.0)


# -- stand-in feature extractor ------------------------------------------------

def _projection(seed: int, in_dim: int, out_dim: int = PROJ_DIM) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((in_dim, out_dim)) / math.sqrt(in_dim)


def _patch_codes(img, seed: int, patch: int = PATCH) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[..., None]
    h, w, c = img.shape
    ph, pw = h // patch, w // patch
    if ph == 0 or pw == 0:
        raise InvalidArgumentError(f"image {w}x{h} smaller than one {patch}px patch")
    blocks = img[: ph * patch, : pw * patch].reshape(ph, patch, pw, patch, c)
    blocks = blocks.transpose(0, 2, 1, 3, 4).reshape(ph, pw, patch * patch * c)
    return np.tanh(blocks @ _projection(seed, patch * patch * c))


def global_features(img, seed: int = 0) -> np.ndarray:
    """Mean-pooled patch codes: one ``PROJ_DIM`` vector per image."""
    codes = _patch_codes(img, seed)
    return codes.reshape(-1, codes.shape[-1]).mean(axis=0)


def spatial_features(img, seed: int = 0, grid: int = GRID) -> np.ndarray:
    """Patch codes pooled per cell of a ``grid x grid`` layout, concatenated row-major.

    Dimension is ``PROJ_DIM * grid**2``.
    """
    codes = _patch_codes(img, seed)
    ph, pw, k = codes.shape
    if ph < grid or pw < grid:
        raise InvalidArgumentError(f"{pw}x{ph} patch layout is smaller than the {grid}x{grid} grid")
    rows = np.arange(ph) * grid // ph
    cols = np.arange(pw) * grid // pw
    out = np.zeros((grid, grid, k))
    counts = np.zeros((grid, grid, 1))
    np.add.at(out, (rows[:, None], cols[None, :]), codes)
    np.add.at(counts, (rows[:, None], cols[None, :]), 1.0)
    return (out / counts).ravel()


@dataclass
class MetricReport:
    if_score: float
    fid: float
    sfid: float
    per_fov: dict = field(default_factory=dict)
    variant: dict = field(default_factory=lambda: {
        "if": IF_VARIANT, "fid": FID_VARIANT, "sfid": SFID_VARIANT})

    def rows(self, case_id: str, seed: int) -> list:
        variant = f"{self.variant['if']};{self.variant['fid']};{self.variant['sfid']}"
        return [
            {"case_id": case_id, "fov": fov, "if": m["if"], "fid": m["fid"], "sfid": m["sfid"],
             "metric_variant": variant, "seed": seed}
            for fov, m in self.per_fov.items()
        ]


def evaluate_metrics(originals: Sequence, editeds: Sequence, fovs=(30, 60, 90),
                     centers: Optional[Sequence] = None, seed: int = 0,
                     view_size: int = VIEW_SIZE, dist: Callable = default_distance) -> MetricReport:
    """IF, FID and sFID between perspective views of two aligned panorama sets.

    View ``k`` of both sets is taken at ``centers[k]`` (default: lat 0,
    lon 0). FID and sFID compare the set of original views with the set of
    edited views, so at least two pairs are required.
    """
    originals, editeds = list(originals), list(editeds)
    if len(originals) != len(editeds):
        raise DimensionMismatchError(f"{len(originals)} originals vs {len(editeds)} edited images")
    if len(originals) < 2:
        raise InsufficientSamplesError("FID needs at least two image pairs")
    if centers is None:
        centers = [(0.0, 0.0)] * len(originals)
    per_fov = {}
    for fov in fovs:
        views_o, views_e = [], []
        for o, e, c in zip(originals, editeds, centers):
            spec = PerspectiveSpec(tuple(c), float(fov), view_size)
            views_o.append(extract_perspective(o, spec))
            views_e.append(extract_perspective(e, spec))
        if_score = image_fidelity(zip(views_o, views_e), dist)
        fid = frechet_distance(gaussian_stats([global_features(v, seed) for v in views_o]),
                               gaussian_stats([global_features(v, seed) for v in views_e]))
        sfid = frechet_distance(gaussian_stats([spatial_features(v, seed) for v in views_o]),
                                gaussian_stats([spatial_features(v, seed) for v in views_e]))
        per_fov[fov] = {"if": if_score, "fid": fid, "sfid": sfid}
    n = len(per_fov)
    return MetricReport(
        if_score=sum(m["if"] for m in per_fov.values()) / n,
        fid=sum(m["fid"] for m in per_fov.values()) / n,
        sfid=sum(m["sfid"] for m in per_fov.values()) / n,
        per_fov=per_fov,
    )
