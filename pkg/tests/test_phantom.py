from dataclasses import replace

import numpy as np
import pytest

from striatal_shape.exceptions import InvalidSpec
from striatal_shape.features import extract_features
from striatal_shape.phantom import (PhantomSpec, calibrate_defaults, generate_cohort, synthetic_sbr)
from striatal_shape.preprocess import SliceWindow, mean_image
from striatal_shape.shape import SHAPE_FEATURES
from striatal_shape.volume_io import Volume

from conftest import cohort, cohort_features


def mean_of(feats, name):
    return float(np.mean([f[name] for f in feats]))


def test_normal_aspect_ratio_band():
    feats = cohort_features([im for im, _ in cohort("Normal", 50, seed=21)])
    # 1.72 +/- 2 x 0.13
    assert 1.46 <= mean_of(feats, "aspect_ratio") <= 1.98


def test_pd_roundness_band():
    feats = cohort_features([im for im, _ in cohort("PD", 50, seed=21)])
    # 1.03 +/- 2 x 0.06
    assert 0.91 <= mean_of(feats, "roundness") <= 1.15


def test_normal_orientation_and_pd_area(small_cohorts):
    normal = cohort_features([im for im, _ in small_cohorts["Normal"]])
    pd = cohort_features([im for im, _ in small_cohorts["PD"]])
    assert 33.7 <= mean_of(normal, "orientation") <= 65.2
    assert 36.6 <= mean_of(pd, "area") <= 107.0


def test_noise_free_symmetric_has_zero_ai():
    for group in ("Normal", "PD"):
        for im, _ in cohort(group, 4, seed=2, noise_sd=0.0, asymmetry=0.0, asymmetry_sd=0.0):
            f = extract_features(im).values
            assert all(f[k] == 0 for k in SHAPE_FEATURES if k.endswith("_ai"))


def test_swedd_is_normal_with_own_stream():
    d = calibrate_defaults()
    assert replace(d["SWEDD"], group="Normal") == d["Normal"]
    a = generate_cohort(replace(d["Normal"], n_subjects=2))
    b = generate_cohort(replace(d["SWEDD"], n_subjects=2))
    assert not np.array_equal(a[0][0].pixels, b[0][0].pixels)


def test_deterministic():
    spec = replace(calibrate_defaults()["PD"], n_subjects=3, seed=4)
    a, b = generate_cohort(spec), generate_cohort(spec)
    for (ia, ta), (ib, tb) in zip(a, b):
        assert np.array_equal(ia.pixels, ib.pixels) and ta == tb


def test_image_layout():
    (im, truth), = cohort("Normal", 1)
    assert im.pixels.shape == (109, 91)
    assert im.pixels.min() == 0 and im.pixels.max() == 1
    assert truth.group == "Normal" and truth.subject_id.startswith("normal")


@pytest.mark.parametrize("field, value", [
    ("spine_length", -1.0), ("posterior_attenuation", 1.5), ("noise_sd", -0.1),
    ("n_subjects", -1), ("asymmetry_amplitude_share", 2.0),
])
def test_invalid_spec(field, value):
    with pytest.raises(InvalidSpec):
        generate_cohort(replace(PhantomSpec(), **{field: value}))


def test_attenuation_monotone():
    majors, rounds = [], []
    for att in (0.0, 0.4, 0.8):
        feats = cohort_features([im for im, _ in cohort(
            "Normal", 25, seed=8, posterior_attenuation=att, attenuation_onset=0.15)])
        majors.append(mean_of(feats, "major_axis_length"))
        rounds.append(mean_of(feats, "roundness"))
    assert majors[0] > majors[1] > majors[2]
    assert rounds[0] < rounds[1] < rounds[2]


def test_truth_consistent_with_spec():
    for _, t in cohort("PD", 10, seed=1):
        assert 0 <= t.posterior_loss_left <= 1 and 0 <= t.posterior_loss_right <= 1
    for _, t in cohort("Normal", 10, seed=1):
        assert t.posterior_loss_left <= 0.05 and t.posterior_loss_right <= 0.05


def test_volume_mode_peaks_at_slice_42():
    spec = replace(calibrate_defaults()["Normal"], n_subjects=1, seed=3)
    (vol, _), = generate_cohort(spec, as_volume=True)
    assert isinstance(vol, Volume) and vol.dims == (91, 109, 91)
    img = mean_image(vol, SliceWindow())
    f = extract_features(img)
    assert 60 < f.values["area"] < 250


def test_synthetic_sbr_tracks_loss():
    truths = [t for _, t in cohort("Normal", 40, seed=2)] + [t for _, t in cohort("PD", 40, seed=2)]
    recs = synthetic_sbr(truths, seed=0)
    put = np.array([(r.putamen_left + r.putamen_right) / 2 for r in recs])
    assert put[40:].mean() < put[:40].mean()
    assert all(min(r.caudate_left, r.caudate_right, r.putamen_left, r.putamen_right) >= 0.05
               for r in recs)
    assert synthetic_sbr(truths, seed=0) == recs
