"""Per-subject feature extraction and the fixed 34-column feature layout."""

import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .preprocess import MeanImage, SliceWindow, mean_image, normalize_unit
from .segmentation import ThresholdFallbackWarning, auto_threshold, extract_region_pair
from .shape import SHAPE_FEATURES, asymmetry_index, shape_features
from .surface import SURFACE_FEATURES, surface_features
from .volume_io import Volume

SBR_FEATURES = ("caudate_sbr", "putamen_sbr", "caudate_sbr_ai", "putamen_sbr_ai")
IMAGE_FEATURES = SHAPE_FEATURES + SURFACE_FEATURES
FEATURE_NAMES = IMAGE_FEATURES + SBR_FEATURES
FEATURE_LAYOUT_VERSION = 1


def feature_number(name):
    """1-based position of a feature in the 34-column layout."""
    return FEATURE_NAMES.index(name) + 1


def sbr_features(record):
    """Mean and asymmetry of caudate and putamen binding ratios."""
    return {
        "caudate_sbr": (record.caudate_left + record.caudate_right) / 2,
        "putamen_sbr": (record.putamen_left + record.putamen_right) / 2,
        "caudate_sbr_ai": asymmetry_index(record.caudate_left, record.caudate_right),
        "putamen_sbr_ai": asymmetry_index(record.putamen_left, record.putamen_right),
    }


@dataclass
class SubjectFeatures:
    values: Dict[str, float]
    threshold: float
    warnings: List[str] = field(default_factory=list)

    def vector(self, names=IMAGE_FEATURES):
        return np.array([self.values[n] for n in names], dtype=np.float64)


def as_mean_image(item, window=None):
    if isinstance(item, MeanImage):
        return item
    if isinstance(item, Volume):
        if item.nz == 1:  # a stored mean image
            return MeanImage(normalize_unit(item.axial_slice(0)), tuple(item.voxel_size_mm[:2]))
        return mean_image(item, window)
    arr = np.asarray(item, dtype=np.float64)
    if arr.ndim == 2:
        return MeanImage(arr)
    if arr.ndim == 3:
        return mean_image(Volume(arr), window)
    raise ValueError(f"cannot interpret input of shape {arr.shape} as an image")


def extract_features(image, threshold="auto", combine_mode="mean", absolute_ai=False,
                     radiological=False, perimeter="corrected", window=None):
    """Compute the 30 image features of one subject.

    ``image`` may be a :class:`MeanImage`, a :class:`Volume`, or a 2D/3D
    array.  ``threshold`` is a number in (0, 1) or ``"auto"``.
    """
    img = as_mean_image(image, window)
    notes = []
    if threshold == "auto":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ThresholdFallbackWarning)
            t = auto_threshold(img, radiological=radiological)
        notes.extend(str(w.message) for w in caught
                     if issubclass(w.category, ThresholdFallbackWarning))
    else:
        t = float(threshold)
    pair = extract_region_pair(img, t, radiological=radiological)
    values = shape_features(pair, combine_mode, absolute_ai, perimeter)
    values.update(surface_features(pair, combine_mode))
    return SubjectFeatures(values, t, notes)


class StriatalFeatureExtractor(TransformerMixin, BaseEstimator):
    """Map SPECT volumes or mean images to the 30 shape and surface features.

    Stateless: ``fit`` only records the output width.  ``transform`` accepts
    a sequence of :class:`Volume`, :class:`MeanImage` or arrays and returns an
    ``(n_subjects, 30)`` array.  The thresholds actually used are kept in
    ``thresholds_`` after each call.

    Parameters
    ----------
    threshold : float or "auto"
    combine_mode : {"mean", "left", "right"}
    absolute_ai : bool
    radiological : bool
    perimeter : {"corrected", "polygon"}
    slice_window : (int, int) or None
        Inclusive 0-based axial slice range for volume inputs.
    """

    def __init__(self, threshold="auto", combine_mode="mean", absolute_ai=False,
                 radiological=False, perimeter="corrected", slice_window=None):
        self.threshold = threshold
        self.combine_mode = combine_mode
        self.absolute_ai = absolute_ai
        self.radiological = radiological
        self.perimeter = perimeter
        self.slice_window = slice_window

    def fit(self, X, y=None):
        self.n_features_out_ = len(IMAGE_FEATURES)
        return self

    def transform(self, X, thresholds: Optional[List[float]] = None):
        window = SliceWindow(*self.slice_window) if self.slice_window else None
        rows, used = [], []
        for i, item in enumerate(X):
            t = self.threshold
            if thresholds is not None and thresholds[i] is not None:
                t = thresholds[i]
            res = extract_features(item, t, self.combine_mode, self.absolute_ai,
                                   self.radiological, self.perimeter, window)
            rows.append(res.vector())
            used.append(res.threshold)
        self.thresholds_ = np.array(used)
        return np.vstack(rows) if rows else np.empty((0, len(IMAGE_FEATURES)))

    def get_feature_names_out(self, input_features=None):
        return np.array(IMAGE_FEATURES, dtype=object)
