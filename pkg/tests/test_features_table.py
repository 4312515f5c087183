import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from striatal_shape.exceptions import BadRow, DuplicateSubject, MissingHeader
from striatal_shape.features import (FEATURE_NAMES, IMAGE_FEATURES, SBR_FEATURES,
                                     StriatalFeatureExtractor, extract_features, feature_number,
                                     sbr_features)
from striatal_shape.preprocess import MeanImage
from striatal_shape.table import FeatureTable, config_hash, read_feature_table, write_feature_table
from striatal_shape.volume_io import SbrRecord

from conftest import blob_image, cohort


def test_layout():
    assert len(FEATURE_NAMES) == 34 and len(IMAGE_FEATURES) == 30
    assert feature_number("major_axis_length") == 2
    assert feature_number("p00") == 17 and feature_number("rmse") == 30
    assert FEATURE_NAMES[30:] == SBR_FEATURES


def test_sbr_features():
    f = sbr_features(SbrRecord("s", 2.97, 2.97, 2.13, 2.13))
    assert f["caudate_sbr"] == 2.97 and f["putamen_sbr"] == 2.13
    assert f["caudate_sbr_ai"] == 0 and f["putamen_sbr_ai"] == 0
    g = sbr_features(SbrRecord("s", 3.0, 1.0, 1.0, 3.0))
    assert g["caudate_sbr_ai"] == 1.0 and g["putamen_sbr_ai"] == -1.0


def test_extract_fixed_threshold_and_warnings():
    res = extract_features(MeanImage(blob_image()), 0.6)
    assert res.threshold == 0.6 and res.warnings == []
    assert res.vector().shape == (30,)
    res = extract_features(MeanImage(blob_image()), "auto")
    assert res.threshold == 0.5


def test_transformer():
    ims = [im for im, _ in cohort("Normal", 3, seed=9)]
    ext = StriatalFeatureExtractor().fit(ims)
    X = ext.transform(ims)
    assert X.shape == (3, 30) and ext.thresholds_.shape == (3,)
    assert list(ext.get_feature_names_out()) == list(IMAGE_FEATURES)
    X2 = ext.transform(ims, thresholds=[0.7, None, None])
    assert ext.thresholds_[0] == 0.7
    assert np.array_equal(X[1:], X2[1:])


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (4, 34), elements=st.floats(-1e300, 1e300, allow_nan=False)))
def test_table_roundtrip_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("t") / "f.csv"
    t = FeatureTable([f"s{i}" for i in range(4)], ["Normal", "SWEDD", "PD", "PD"], values,
                     list(FEATURE_NAMES))
    write_feature_table(t, path)
    assert read_feature_table(path).equals(t)


def test_table_subset_columns(tmp_path):
    t = FeatureTable(["a"], ["PD"], [[1.0, 2.0]], ["area", "p00"])
    write_feature_table(t, tmp_path / "f.csv")
    assert read_feature_table(tmp_path / "f.csv").columns == ["area", "p00"]
    with pytest.raises(ValueError):
        FeatureTable(["a"], ["PD"], [[1.0, 2.0]], ["p00", "area"])
    with pytest.raises(ValueError):
        FeatureTable(["a"], ["PD"], [[np.nan]], ["area"])


@pytest.mark.parametrize("text, exc", [
    ("id,label,area\n", MissingHeader),
    ("subject_id,label,bogus\n", MissingHeader),
    ("subject_id,label,area\na,PD\n", BadRow),
    ("subject_id,label,area\na,PD,x\n", BadRow),
    ("subject_id,label,area\na,PD,inf\n", BadRow),
    ("subject_id,label,area\na,Healthy,1\n", BadRow),
    ("subject_id,label,area\na,PD,1\na,PD,2\n", DuplicateSubject),
])
def test_table_errors(tmp_path, text, exc):
    (tmp_path / "f.csv").write_text(text)
    with pytest.raises(exc):
        read_feature_table(tmp_path / "f.csv")


def test_config_hash_stable():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
