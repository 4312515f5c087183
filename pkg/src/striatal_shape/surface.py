"""Cubic polynomial surface fitted to region intensities by least squares."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DegenerateAxis, RankDeficient, TooFewPixels
from .shape import combine

# (power of x, power of y), in reporting order
TERMS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3))
COEFFICIENTS = tuple(f"p{i}{j}" for i, j in TERMS)
GOODNESS = ("se", "r2", "r2_adj", "rmse")
SURFACE_FEATURES = COEFFICIENTS + GOODNESS
N_TERMS = len(TERMS)


@dataclass(frozen=True)
class SurfaceFit:
    coefficients: np.ndarray
    se: float
    r2: float
    r2_adj: float
    rmse: float
    n_points: int
    x_mean: float = 0.0
    x_sd: float = 1.0
    y_mean: float = 0.0
    y_sd: float = 1.0

    def __getattr__(self, name):
        if name in COEFFICIENTS:
            return float(self.coefficients[COEFFICIENTS.index(name)])
        raise AttributeError(name)

    def as_dict(self):
        out = dict(zip(COEFFICIENTS, map(float, self.coefficients)))
        out.update(se=self.se, r2=self.r2, r2_adj=self.r2_adj, rmse=self.rmse)
        return out

    def predict(self, pixels):
        """Evaluate the fitted surface at raw ``(x, y)`` pixel coordinates."""
        px = np.asarray(pixels, dtype=np.float64)
        xh = (px[:, 0] - self.x_mean) / self.x_sd
        yh = (px[:, 1] - self.y_mean) / self.y_sd
        return design_matrix(xh, yh) @ self.coefficients


def standardize_coords(pixels):
    """Center and scale each axis to zero mean and unit population SD.

    Returns ``(x_hat, y_hat, (x_mean, x_sd), (y_mean, y_sd))``.
    """
    px = np.asarray(pixels, dtype=np.float64)
    out = []
    for axis in (0, 1):
        v = px[:, axis]
        if len(np.unique(v)) < 2:
            raise DegenerateAxis(f"axis {'xy'[axis]} has fewer than 2 distinct values")
        mean = v.mean()
        sd = np.sqrt(np.mean((v - mean) ** 2))
        out.append(((v - mean) / sd, (float(mean), float(sd))))
    (xh, xs), (yh, ys) = out
    return xh, yh, xs, ys


def design_matrix(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return np.column_stack([x ** i * y ** j for i, j in TERMS])


def _solve_qr(A, z):
    q, r = np.linalg.qr(A)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * max(diag.max(), 1.0):
        raise RankDeficient("design matrix does not have full column rank")
    return solve_triangular(r, q.T @ z)


def fit_surface(pixels, values) -> SurfaceFit:
    """Least-squares cubic fit of ``values`` over standardized pixel coordinates."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n <= N_TERMS:
        raise TooFewPixels(f"{n} pixels; need more than {N_TERMS} to fit and judge the fit")
    xh, yh, (mx, sx), (my, sy) = standardize_coords(pixels)
    A = design_matrix(xh, yh)
    coef = _solve_qr(A, values)

    resid = values - A @ coef
    se = float(resid @ resid)
    centered = values - values.mean()
    sst = float(centered @ centered)
    if sst == 0.0:
        r2 = r2_adj = 1.0
    else:
        r2 = 1.0 - se / sst
        r2_adj = 1.0 - (1.0 - r2) * (n - 1) / (n - N_TERMS)
    rmse = float(np.sqrt(se / (n - N_TERMS)))
    return SurfaceFit(coef, se, r2, r2_adj, rmse, n, mx, sx, my, sy)


def fit_cubic(region) -> SurfaceFit:
    """Fit the cubic surface to a region's mean-image intensities."""
    return fit_surface(region.pixels, region.intensities)


def surface_features(pair, combine_mode="mean"):
    """The 14 surface features: 10 coefficients then SE, R2, adjusted R2, RMSE.

    Left and mirrored-right fits are combined field by field.
    """
    left = fit_cubic(pair.left).as_dict()
    right = fit_cubic(pair.right_flipped).as_dict()
    return {k: combine(left[k], right[k], combine_mode) for k in SURFACE_FEATURES}
