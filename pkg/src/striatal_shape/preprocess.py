"""Slice selection, intensity normalization and the per-subject mean image."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import ConstantInput, ConstantSlice, WindowOutOfRange

# 0-based indices; 14 slices centred near the slice of peak striatal uptake
DEFAULT_FIRST_SLICE = 35
DEFAULT_LAST_SLICE = 48
MIN_WINDOW = 3


@dataclass(frozen=True)
class SliceWindow:
    """Inclusive, 0-based range of axial slices."""

    first: int = DEFAULT_FIRST_SLICE
    last: int = DEFAULT_LAST_SLICE

    def __len__(self):
        return max(0, self.last - self.first + 1)

    def indices(self):
        return range(self.first, self.last + 1)

    def validate(self, nz, min_length=MIN_WINDOW):
        if not (0 <= self.first <= self.last < nz):
            raise WindowOutOfRange(
                f"slice window {self.first}..{self.last} invalid for {nz} slices"
            )
        if len(self) < min_length:
            raise WindowOutOfRange(
                f"slice window {self.first}..{self.last} shorter than {min_length} slices"
            )

    @classmethod
    def parse(cls, text):
        """Parse ``"a:b"`` (inclusive)."""
        try:
            a, b = text.split(":")
            return cls(int(a), int(b))
        except ValueError:
            raise WindowOutOfRange(f"cannot parse slice window {text!r}") from None


@dataclass(frozen=True)
class MeanImage:
    """2D analysis image, ``pixels[y, x]`` with values in [0, 1]."""

    pixels: np.ndarray
    pixel_size_mm: Tuple[float, float] = (2.0, 2.0)

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 2:
            raise ValueError(f"mean image must be 2D, got shape {px.shape}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


def normalize_unit(values):
    """Affinely map ``values`` onto [0, 1]."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if not hi > lo:
        raise ConstantInput("cannot normalize a constant array")
    out = (values - lo) / (hi - lo)
    # guard the endpoints against rounding
    out[values == lo] = 0.0
    out[values == hi] = 1.0
    return out


def mean_image(volume, window=None):
    """Normalize each slice in ``window``, average, and renormalize.

    Parameters
    ----------
    volume : Volume
    window : SliceWindow, optional
        Defaults to slices 35..48.

    Returns
    -------
    MeanImage
    """
    window = SliceWindow() if window is None else window
    window.validate(volume.nz, min_length=1)
    acc = np.zeros((volume.data.shape[1], volume.data.shape[0]))
    for k in window.indices():
        try:
            acc += normalize_unit(volume.axial_slice(k))
        except ConstantInput:
            raise ConstantSlice(k) from None
    acc /= len(window)
    sx, sy = volume.voxel_size_mm[:2]
    return MeanImage(normalize_unit(acc), (sx, sy))


def slice_area_profile(volume, threshold, slices=None):
    """Per-slice count of pixels at or above ``threshold`` after per-slice normalization.

    Constant slices contribute an area of 0.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if slices is None:
        slices = range(volume.nz)
    slices = list(slices)
    for k in slices:
        if not 0 <= k < volume.nz:
            raise WindowOutOfRange(f"slice {k} outside 0..{volume.nz - 1}")
    profile = []
    for k in slices:
        sl = volume.axial_slice(k)
        if sl.max() > sl.min():
            area = int(np.count_nonzero(normalize_unit(sl) >= threshold))
        else:
            area = 0
        profile.append((k, area))
    return profile
