import warnings
from dataclasses import replace

import numpy as np
import pytest

from striatal_shape.phantom import calibrate_defaults, generate_cohort


def disk(radius, cx=0, cy=0):
    """Pixel centres within ``radius`` of ``(cx, cy)`` as an ``(n, 2)`` array."""
    r = int(np.ceil(radius))
    ys, xs = np.mgrid[-r:r + 1, -r:r + 1]
    keep = xs ** 2 + ys ** 2 <= radius ** 2
    return np.column_stack([xs[keep] + cx, ys[keep] + cy])


def rectangle(w, h, x0=0, y0=0):
    ys, xs = np.mgrid[y0:y0 + h, x0:x0 + w]
    return np.column_stack([xs.ravel(), ys.ravel()])


def blob_image(width=91, height=109, centres=((30, 50), (60, 50)), sd=(6.0, 4.0)):
    """Sum of axis-aligned Gaussians, normalized to [0, 1]."""
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    img = np.zeros((height, width))
    for cx, cy in centres:
        img += np.exp(-((xx - cx) ** 2 / (2 * sd[0] ** 2) + (yy - cy) ** 2 / (2 * sd[1] ** 2)))
    return (img - img.min()) / (img.max() - img.min())


def cohort(group, n, seed=0, **overrides):
    spec = replace(calibrate_defaults()[group], n_subjects=n, seed=seed, **overrides)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return generate_cohort(spec)


@pytest.fixture(scope="session")
def small_cohorts():
    """20 Normal and 20 PD phantom mean images."""
    return {"Normal": cohort("Normal", 20, seed=11), "PD": cohort("PD", 20, seed=11)}


def cohort_features(images, max_fail=0.05):
    """Feature dicts for a cohort, skipping subjects whose extraction fails.

    Fails the calling test if more than ``max_fail`` of the cohort is lost.
    """
    from striatal_shape.exceptions import StriatalShapeError
    from striatal_shape.features import extract_features

    out = []
    for im in images:
        try:
            out.append(extract_features(im).values)
        except StriatalShapeError:
            pass
    assert len(out) >= (1 - max_fail) * len(images), "too many extraction failures"
    return out


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        title, ok, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
