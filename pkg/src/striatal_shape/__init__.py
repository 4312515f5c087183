"""Shape and surface-fit features of striatal uptake in DaT SPECT, and classifiers built on them."""

__version__ = "0.1.0"

from .exceptions import StriatalShapeError
from .features import FEATURE_NAMES, IMAGE_FEATURES, SBR_FEATURES, StriatalFeatureExtractor, extract_features
from .phantom import PhantomSpec, calibrate_defaults, generate_cohort
from .preprocess import MeanImage, SliceWindow, mean_image
from .segmentation import auto_threshold, extract_region_pair
from .shape import asymmetry_index, region_shape
from .stats import group_summary, ranksum, screen_features
from .surface import fit_surface
from .volume_io import Volume, read_volume

__all__ = [
    "FEATURE_NAMES", "IMAGE_FEATURES", "MeanImage", "PhantomSpec", "SBR_FEATURES", "SliceWindow",
    "StriatalFeatureExtractor", "StriatalShapeError", "Volume", "asymmetry_index",
    "auto_threshold", "calibrate_defaults", "extract_features", "extract_region_pair",
    "fit_surface", "generate_cohort", "group_summary", "mean_image", "ranksum", "read_volume",
    "region_shape", "screen_features",
]
