"""End-to-end acceptance criteria, one test per criterion.

Each test records a one-line verdict that is printed in the terminal
summary (see ``conftest.pytest_terminal_summary``).  Run directly with
``python tests/test_acceptance.py`` for the same report.
"""

import json
import math
import time
import warnings
from itertools import combinations

import numpy as np
import pytest

from striatal_shape.classify import RandomForest, auc, cross_validate, make_classifier, oob_importance
from striatal_shape.cli import main
from striatal_shape.shape import SHAPE_FEATURES, central_moments, region_shape
from striatal_shape.stats import group_summary, ranksum
from striatal_shape.surface import SURFACE_FEATURES, fit_surface
from striatal_shape.table import read_feature_table

RESULTS = {}

# published cohort (mean, SD) per group for the nine calibrated features
REFERENCE = {
    "area": {"Normal": (122.2, 18.9), "SWEDD": (123.9, 16.7), "PD": (71.8, 17.6)},
    "major_axis_length": {"Normal": (16.58, 1.47), "SWEDD": (16.65, 1.4), "PD": (11.06, 1.59)},
    "aspect_ratio": {"Normal": (1.72, 0.13), "SWEDD": (1.71, 0.12), "PD": (1.35, 0.15)},
    "eccentricity": {"Normal": (0.81, 0.03), "SWEDD": (0.81, 0.03), "PD": (0.63, 0.1)},
    "roundness": {"Normal": (0.88, 0.04), "SWEDD": (0.89, 0.04), "PD": (1.03, 0.06)},
    "orientation": {"Normal": (49.46, 7.89), "SWEDD": (50.75, 7.0), "PD": (29.66, 17.34)},
    "p11": {"Normal": (-0.11, 0.02), "SWEDD": (-0.11, 0.02), "PD": (-0.03, 0.02)},
    "p20": {"Normal": (-0.11, 0.01), "SWEDD": (-0.11, 0.01), "PD": (-0.07, 0.01)},
    "p02": {"Normal": (-0.11, 0.01), "SWEDD": (-0.11, 0.01), "PD": (-0.07, 0.02)},
}

# direction of the published PD change relative to Normal
DIRECTIONS = {
    "area": -1, "major_axis_length": -1, "minor_axis_length": -1, "aspect_ratio": -1,
    "eccentricity": -1, "equivalent_diameter": -1, "orientation": -1, "roundness": 1,
    "p20": 1, "p11": 1, "p02": 1,
}


def record(number, title, ok, detail):
    RESULTS[number] = (title, bool(ok), detail)


@pytest.fixture(scope="module")
def study(tmp_path_factory):
    """Default cohorts of 100 Normal, 40 SWEDD and 200 PD through the whole CLI pipeline."""
    d = tmp_path_factory.mktemp("study")
    t0 = time.perf_counter()
    assert main(["phantom", str(d / "ph"), "--normal", "100", "--swedd", "40", "--pd", "200",
                 "--seed", "2024"]) == 0
    code = main(["extract", str(d / "ph" / "manifest.csv"), "-o", str(d / "features.csv"),
                 "--sbr", str(d / "ph" / "sbr.csv")])
    assert code in (0, 1)
    return {"dir": d, "t0": t0, "table": read_feature_table(d / "features.csv"),
            "extract_code": code}


# ---------------------------------------------------------------- 1

def test_criterion_1_end_to_end_svm(study):
    d = study["dir"]
    code = main(["cv", str(d / "features.csv"), "-o", str(d / "svm"), "--classifier", "svm",
                 "--k", "10", "--repeats", "10", "--seed", "0"])
    elapsed = time.perf_counter() - study["t0"]
    rep = json.loads((d / "svm.cv.json").read_text())["reports"][0]["summary"]
    acc, area = rep["accuracy"]["mean"], rep["auc"]["mean"] / 100
    n = len(study["table"])
    ok = code == 0 and acc >= 95 and area >= 0.97 and elapsed < 300
    record(1, "phantom end-to-end SVM", ok,
           f"accuracy {acc:.2f}% (>= 95), AUC {area:.4f} (>= 0.97), {elapsed:.0f} s (< 300), "
           f"{n}/340 subjects extracted")
    assert ok


# ---------------------------------------------------------------- 2

def test_criterion_2_directional_table(study):
    t = study["table"]
    summary = {f.name: f for f in group_summary(t.values, np.array(t.labels), t.columns).features}
    bad = []
    for name, sign in DIRECTIONS.items():
        f = summary[name]
        moved = sign * (f.mean["PD"] - f.mean["Normal"]) > 0
        if not (moved and f.p2 < 0.01):
            bad.append(f"{name} (PD {f.mean['PD']:.3g} vs {f.mean['Normal']:.3g}, p2 {f.p2:.2g})")
    worst = max(summary[n].p2 for n in DIRECTIONS)
    record(2, "directional group differences", not bad,
           f"{len(DIRECTIONS) - len(bad)}/{len(DIRECTIONS)} inequalities hold, max p2 {worst:.1e}"
           + (f"; failing: {', '.join(bad)}" if bad else ""))
    assert not bad


# ---------------------------------------------------------------- 3

def test_criterion_3_calibration_bands(study):
    t = study["table"]
    labels = np.array(t.labels)
    misses, checked = [], 0
    for name, groups in REFERENCE.items():
        col = t.column(name)
        for g, (m, s) in groups.items():
            v = col[labels == g].mean()
            checked += 1
            if abs(v - m) > 2 * s:
                misses.append(f"{g} {name} {v:.3g} vs {m} +/- {2 * s:.3g}")
    record(3, "calibration bands", not misses,
           f"{checked - len(misses)}/{checked} group means within published mean +/- 2 SD"
           + (f"; out: {'; '.join(misses)}" if misses else ""))
    assert not misses


# ---------------------------------------------------------------- 4

def _two_pass(px):
    px = px.astype(float)
    d = px - px.mean(axis=0)
    return (np.mean(d[:, 0] ** 2), np.mean(d[:, 1] ** 2), np.mean(d[:, 0] * d[:, 1]))


def _ellipse(rng):
    a, b, th = rng.uniform(3, 9), rng.uniform(2, 6), rng.uniform(0, np.pi)
    ys, xs = np.mgrid[-10:11, -10:11]
    u = xs * np.cos(th) + ys * np.sin(th)
    v = -xs * np.sin(th) + ys * np.cos(th)
    keep = (u / a) ** 2 + (v / b) ** 2 <= 1
    return np.column_stack([xs[keep], ys[keep]])


def test_criterion_4_shape_oracle():
    ys, xs = np.mgrid[0:5, 0:10]
    s = region_shape(np.column_stack([xs.ravel(), ys.ravel()]))
    expect = (50, 4 * math.sqrt(100 / 12), 4 * math.sqrt(25 / 12), 2.0, math.sqrt(0.75),
              math.sqrt(200 / math.pi), 0.0)
    got = (s.area, s.major_axis_length, s.minor_axis_length, s.aspect_ratio, s.eccentricity,
           s.equivalent_diameter, s.orientation)
    rect_err = max(abs(a - b) for a, b in zip(got, expect))

    rng = np.random.default_rng(4)
    mom_err = 0.0
    for _ in range(500):
        m = rng.random((16, 16)) < rng.uniform(0.1, 0.9)
        y, x = np.nonzero(m)
        if len(x) < 2:
            continue
        px = np.column_stack([x, y])
        mom_err = max(mom_err, np.max(np.abs(np.subtract(central_moments(px), _two_pass(px)))))

    inv_err = 0.0
    for _ in range(200):
        px = _ellipse(rng)
        a = region_shape(px)
        b = region_shape(px + rng.integers(-40, 40, 2))
        inv_err = max(inv_err, np.max(np.abs(np.subtract(a.as_tuple(), b.as_tuple()))))
        r = region_shape(np.column_stack([px[:, 1], -px[:, 0]]))
        for name in ("area", "major_axis_length", "minor_axis_length", "eccentricity", "roundness"):
            inv_err = max(inv_err, abs(getattr(a, name) - getattr(r, name)))
        if a.eccentricity > 1e-6:
            d = (r.orientation - a.orientation - 90) % 180
            inv_err = max(inv_err, min(d, 180 - d))
    ok = rect_err <= 1e-9 and mom_err <= 1e-10 and inv_err <= 1e-9
    record(4, "shape oracle suite", ok,
           f"rectangle err {rect_err:.1e}, moments err {mom_err:.1e} over 500 masks, "
           f"invariance err {inv_err:.1e}")
    assert ok


# ---------------------------------------------------------------- 5

def _design(px):
    x = (px[:, 0] - px[:, 0].mean()) / px[:, 0].std()
    y = (px[:, 1] - px[:, 1].mean()) / px[:, 1].std()
    return np.column_stack([x ** i * y ** j for i, j in
                            [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
                             (3, 0), (2, 1), (1, 2), (0, 3)]])


def test_criterion_5_surface_oracle():
    rng = np.random.default_rng(5)
    coef_err = r2_err = orth_err = ident_err = 0.0
    perturb_ok = True
    for _ in range(200):
        n = int(rng.integers(60, 301))
        flat = rng.choice(50 * 50, n, replace=False)
        px = np.column_stack([flat % 50, flat // 50]).astype(float)
        A = _design(px)
        beta = rng.normal(size=10)
        fit = fit_surface(px, A @ beta)
        coef_err = max(coef_err, np.max(np.abs(fit.coefficients - beta)))
        r2_err = max(r2_err, abs(fit.r2 - 1))

        z = A @ beta + rng.normal(scale=0.1, size=n)
        fit = fit_surface(px, z)
        res = z - A @ fit.coefficients
        orth_err = max(orth_err, np.max(np.abs(A.T @ res) / np.linalg.norm(A, axis=0)))
        ident_err = max(ident_err,
                        abs(fit.rmse - math.sqrt(fit.se / (n - 10))),
                        abs(fit.r2_adj - (1 - (1 - fit.r2) * (n - 1) / (n - 10))))
        for j in range(10):
            for h in (1e-3, -1e-3):
                b = fit.coefficients.copy()
                b[j] += h
                r = z - A @ b
                perturb_ok &= bool(r @ r >= fit.se)
    ok = coef_err <= 1e-8 and r2_err <= 1e-10 and orth_err <= 1e-8 and ident_err <= 1e-12 and perturb_ok
    record(5, "surface-fit oracle suite", ok,
           f"coef err {coef_err:.1e}, |r2-1| {r2_err:.1e}, orthogonality {orth_err:.1e}, "
           f"identities {ident_err:.1e}, perturbation {'ok' if perturb_ok else 'FAILED'}")
    assert ok


# ---------------------------------------------------------------- 6

def _enumerated(x, y):
    pooled = sorted(x + y)
    rank = {v: i + 1 for i, v in enumerate(pooled)}
    obs = sum(rank[v] for v in x)
    sums = [sum(c) for c in combinations(range(1, len(pooled) + 1), len(x))]
    lo = sum(s <= obs for s in sums) / len(sums)
    hi = sum(s >= obs for s in sums) / len(sums)
    return min(1.0, 2 * min(lo, hi))


def test_criterion_6_ranksum():
    p_small = ranksum([1, 2, 3], [4, 5, 6]).pvalue
    p_same = ranksum([3.0, 1.0, 2.0, 5.0], [3.0, 1.0, 2.0, 5.0]).pvalue
    rng = np.random.default_rng(6)
    gap = 0.0
    for _ in range(1000):
        x = rng.normal(size=5).tolist()
        y = (rng.normal(size=5) + rng.uniform(0, 2)).tolist()
        gap = max(gap, abs(ranksum(x, y, "normal").pvalue - _enumerated(x, y)))
    ok = abs(p_small - 0.10) < 1e-12 and p_same == 1.0 and gap < 0.02
    record(6, "rank-sum statistics", ok,
           f"p([1,2,3],[4,5,6]) = {p_small:.4f}, identical p = {p_same}, "
           f"max approx-exact gap {gap:.4f} (< 0.02) over 1000 draws")
    assert ok


# ---------------------------------------------------------------- 7

def _pairwise(scores, labels):
    pos, neg = scores[labels == 1], scores[labels == 0]
    return ((pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()) / (
        len(pos) * len(neg))


def test_criterion_7_classifier_properties():
    rng = np.random.default_rng(7)
    auc_err = 0.0
    for _ in range(100):
        n = int(rng.integers(10, 200))
        labels = rng.integers(0, 2, n)
        labels[:2] = [0, 1]
        scores = np.round(rng.normal(size=n), int(rng.integers(0, 3)))
        auc_err = max(auc_err, abs(auc(scores, labels) - _pairwise(scores, labels)))

    X = rng.normal(size=(300, 6))
    y = rng.integers(0, 2, 300)
    oob_frac = RandomForest(n_trees=75, random_state=1).fit(X, y).oob_fraction()

    noise_ok = 0
    for seed in range(20):
        r = np.random.default_rng(1000 + seed)
        yy = r.integers(0, 2, 200)
        XX = r.normal(size=(200, 5))
        XX[:, 0] += 2.5 * yy
        XX[:, 1] += 1.5 * yy
        s = oob_importance(XX, yy, n_trees=75, seed=seed).scores
        noise_ok += bool(min(s[:2]) > max(s[2:]))

    Xp = rng.normal(size=(200, 8))
    yp = rng.permutation(np.array([1] * 130 + [0] * 70))
    rep = cross_validate(Xp, yp, make_classifier("svm"), k=10, repeats=5, seed=3)
    majority = 100 * 130 / 200
    perm_gap = abs(rep.mean("accuracy") - majority)

    ok = auc_err <= 1e-12 and 0.33 <= oob_frac <= 0.41 and noise_ok == 20 and perm_gap <= 5
    record(7, "classifier properties", ok,
           f"AUC err {auc_err:.1e}, OOB fraction {oob_frac:.3f}, noise below informative "
           f"{noise_ok}/20 seeds, permutation accuracy {rep.mean('accuracy'):.1f}% vs majority "
           f"{majority:.0f}%")
    assert ok


# ---------------------------------------------------------------- 8

def test_criterion_8_determinism(study, tmp_path):
    src = str(study["dir"] / "features.csv")
    same = []
    for cmd, extra, suffixes in (
        ("cv", ["--classifier", "all", "--k", "5", "--repeats", "2"], (".cv.json", ".cv.csv")),
        ("importance", ["--trees", "40"], (".importance.json", ".importance.csv")),
    ):
        for jobs in ("1", "2"):
            assert main([cmd, src, "-o", str(tmp_path / f"{cmd}{jobs}"), "--seed", "11",
                         "--jobs", jobs, *extra]) == 0
        for sfx in suffixes:
            same.append((tmp_path / f"{cmd}1{sfx}").read_bytes() == (tmp_path / f"{cmd}2{sfx}").read_bytes())
    ok = all(same)
    record(8, "determinism across worker counts", ok,
           f"{sum(same)}/{len(same)} report files byte-identical for --jobs 1 vs 2")
    assert ok


# ---------------------------------------------------------------- 9

def test_criterion_9_importance_surrogate(study):
    d = study["dir"]
    assert main(["importance", str(d / "features.csv"), "-o", str(d / "imp"), "--trees", "75",
                 "--seed", "0"]) == 0
    doc = json.loads((d / "imp.importance.json").read_text())
    scores = {f["feature"]: f["score"] for f in doc["features"]}
    rank = doc["ranking"].index("major_axis_length") + 1
    ref = scores["caudate_sbr"]
    shape_above = sum(scores[n] > ref for n in SHAPE_FEATURES)
    surface_above = sum(scores[n] > ref for n in SURFACE_FEATURES)
    ok = rank <= 3 and shape_above >= 5 and surface_above >= 5
    record(9, "importance surrogate", ok,
           f"major axis rank {rank} (<= 3), above caudate SBR: {shape_above} shape (>= 5), "
           f"{surface_above} surface (>= 5); top 5 {doc['ranking'][:5]}")
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
