"""Threshold segmentation of the mean image into left/right striatal regions."""

import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from .exceptions import AmbiguousSides, RegionTooSmall, TooFewComponents

LEFT, RIGHT = "Left", "Right"
MIN_AREA = 10
AUTO_GRID = tuple(round(0.50 + 0.01 * i, 2) for i in range(31))
AUTO_MAX_AREA = 400
FALLBACK_THRESHOLD = 0.63
# per-group thresholds an expert might pick (means of the reported manual choices)
GROUP_THRESHOLDS = {"Normal": 0.63, "SWEDD": 0.63, "PD": 0.69}

_EIGHT = np.ones((3, 3), dtype=bool)


class ThresholdFallbackWarning(UserWarning):
    """No grid threshold produced a valid region pair."""


@dataclass(frozen=True)
class Region:
    """A single 8-connected region.

    ``pixels`` is an ``(n, 2)`` integer array of ``(x, y)`` coordinates in
    raster order; ``intensities`` holds the mean-image value at each pixel.
    """

    pixels: np.ndarray
    intensities: np.ndarray
    side: str

    @property
    def area(self):
        return len(self.pixels)

    @property
    def bbox(self):
        lo = self.pixels.min(axis=0)
        hi = self.pixels.max(axis=0)
        return (int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1]))

    @property
    def centroid(self):
        return self.pixels.mean(axis=0)


@dataclass(frozen=True)
class RegionPair:
    left: Region
    right_flipped: Region
    threshold_used: float
    width: int = 91
    height: int = 109

    def right_original(self):
        """Undo the mirroring of the right region."""
        return mirror_region(self.right_flipped, self.width)


def threshold_mask(pixels, t):
    """Binary mask of pixels with value >= ``t``."""
    if not 0 < t < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {t}")
    return np.asarray(pixels) >= t


def connected_components(mask):
    """8-connected components of ``mask``.

    Returns a list of ``(n, 2)`` arrays of ``(x, y)`` pixel coordinates,
    sorted by area (largest first), ties broken by the first pixel in raster
    order.  Pixels within a component are in raster order.
    """
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)  # raster order
    lab = labels[ys, xs]
    order = np.argsort(lab, kind="stable")
    ys, xs, lab = ys[order], xs[order], lab[order]
    bounds = np.searchsorted(lab, np.arange(1, n + 2))
    comps = [
        np.column_stack([xs[bounds[i]:bounds[i + 1]], ys[bounds[i]:bounds[i + 1]]])
        for i in range(n)
    ]
    comps.sort(key=lambda c: (-len(c), int(c[0, 1]), int(c[0, 0])))
    return comps


def mirror_region(region, width):
    """Reflect ``x -> width - 1 - x``; pixels are re-sorted into raster order."""
    px = region.pixels.copy()
    px[:, 0] = width - 1 - px[:, 0]
    order = np.lexsort((px[:, 0], px[:, 1]))
    side = RIGHT if region.side == LEFT else LEFT
    return Region(px[order], region.intensities[order], side)


def _straddles(comp, midline):
    return comp[:, 0].min() < midline <= comp[:, 0].max()


def extract_region_pair(img, t, min_area=MIN_AREA, radiological=False) -> RegionPair:
    """Segment ``img`` at ``t`` and return the left region and mirrored right region.

    The two largest components are kept.  The one whose centroid lies left
    of the vertical midline ``x = width / 2`` is named Left (swapped when
    ``radiological`` is set).
    """
    pixels = img.pixels
    height, width = pixels.shape
    midline = width / 2
    comps = connected_components(threshold_mask(pixels, t))
    if comps and _straddles(comps[0], midline):
        raise AmbiguousSides(f"largest region at t={t} spans the midline")
    if len(comps) < 2:
        raise TooFewComponents(f"threshold {t} yields {len(comps)} component(s)")
    a, b = comps[0], comps[1]
    if len(b) < min_area:
        raise RegionTooSmall(f"second region has {len(b)} pixels (< {min_area})")
    ca, cb = a[:, 0].mean(), b[:, 0].mean()
    if (ca < midline) == (cb < midline):
        raise AmbiguousSides(f"both regions lie on one side of the midline at t={t}")
    lo, hi = (a, b) if ca < midline else (b, a)
    if radiological:
        lo, hi = hi, lo

    def build(comp, side):
        return Region(comp, pixels[comp[:, 1], comp[:, 0]].copy(), side)

    right = build(hi, RIGHT)
    return RegionPair(build(lo, LEFT), mirror_region(right, width), float(t), width, height)


def auto_threshold(img, grid=AUTO_GRID, max_area=AUTO_MAX_AREA, min_area=MIN_AREA,
                   radiological=False, fallback=FALLBACK_THRESHOLD):
    """Smallest grid threshold giving a valid pair with both areas <= ``max_area``.

    Falls back to ``fallback`` with a :class:`ThresholdFallbackWarning`.
    """
    for t in grid:
        try:
            pair = extract_region_pair(img, t, min_area=min_area, radiological=radiological)
        except (TooFewComponents, AmbiguousSides, RegionTooSmall):
            continue
        if pair.left.area <= max_area and pair.right_flipped.area <= max_area:
            return float(t)
    warnings.warn(f"no grid threshold qualified; using {fallback}", ThresholdFallbackWarning,
                  stacklevel=2)
    return float(fallback)
