"""Closed-form disk geometry for clustered-network distance laws.

Everything here is expressed for a reference user at the origin and a
cluster ("cloud") of radius ``D`` whose center sits at distance ``x_norm``
from the user.  The central object is the two-disk intersection area
``lens_area`` and its radial derivative, from which the distance density
of a uniformly placed cloud node, its CDF, the order-statistic serving
distance, and the guard-disk exclusion area all follow.

Functions accept scalars or numpy arrays in the distance argument and are
pure, so they are safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this fraction of D the cloud center is treated as coincident with
# the user; the lens formulas divide by x_norm and lose accuracy there.
_CENTER_EPS = 1e-12


class GeometryDomainError(ValueError):
    """Argument outside the closed-form validity region."""


@dataclass(frozen=True)
class CloudGeometry:
    """Cloud disk radius, guard-disk radius, and user-to-center distance.

    All lengths are in meters.  ``x_norm`` is the distance from the user
    at the origin to the cloud center.
    """

    D: float
    d_g: float = 0.0
    x_norm: float = 0.0

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"cloud radius must be positive, got {self.D}")
        if self.d_g < 0:
            raise ValueError(f"guard radius must be nonnegative, got {self.d_g}")
        if self.x_norm < 0:
            raise ValueError(f"center distance must be nonnegative, got {self.x_norm}")


def _acos_clipped(c):
    # Roundoff can push cosine arguments marginally outside [-1, 1].
    return np.arccos(np.clip(c, -1.0, 1.0))


def lens_area_arr(x_norm: float, y, D: float):
    """Intersection area of disk(center, D) and disk(origin, y), vectorized.

    Valid on |x_norm - D| <= y <= x_norm + D; values outside are clipped
    onto that interval, so callers integrating across the lens branch get
    continuous saturation (0 at the inner edge, the smaller disk area at
    the outer edge).
    """
    y = np.asarray(y, dtype=float)
    lo = abs(x_norm - D)
    y_c = np.clip(y, lo, x_norm + D)
    c_big = (D * D + x_norm * x_norm - y_c * y_c) / (2.0 * x_norm * D)
    c_small = (y_c * y_c + x_norm * x_norm - D * D) / (2.0 * x_norm * y_c)
    q = ((y_c + x_norm) ** 2 - D * D) * (D * D - (y_c - x_norm) ** 2)
    q = np.maximum(q, 0.0)
    return (
        D * D * _acos_clipped(c_big)
        + y_c * y_c * _acos_clipped(c_small)
        - 0.5 * np.sqrt(q)
    )


def lens_area(x_norm: float, y: float, geom: CloudGeometry) -> float:
    """Two-disk intersection area at radius ``y`` (scalar, validating).

    Raises :class:`GeometryDomainError` outside |x_norm - D| <= y <=
    x_norm + D or when the disks are concentric; the disjoint and nested
    regimes are handled by the distance-law branches, not here.
    """
    D = geom.D
    if x_norm <= _CENTER_EPS * D:
        raise GeometryDomainError("lens area undefined for concentric disks")
    if not abs(x_norm - D) <= y <= x_norm + D:
        raise GeometryDomainError(
            f"y={y} outside lens interval [{abs(x_norm - D)}, {x_norm + D}]"
        )
    return float(lens_area_arr(x_norm, y, D))


def lens_area_slope_arr(x_norm: float, y, D: float):
    """d(lens area)/dy, vectorized: 2 y acos((y^2 + x^2 - D^2) / (2 x y)).

    The derivative equals the arc length of the radius-y circle lying
    inside the cloud disk.  Zero outside the lens interval.
    """
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    lo = abs(x_norm - D)
    mask = (y >= lo) & (y <= x_norm + D) & (y > 0)
    y_m = y[mask]
    c = (y_m * y_m + x_norm * x_norm - D * D) / (2.0 * x_norm * y_m)
    out[mask] = 2.0 * y_m * _acos_clipped(c)
    return out


def distance_pdf(y, geom: CloudGeometry):
    """Density of the distance from the origin to a uniform point of the cloud.

    Piecewise: a linear 2y/D^2 part while the radius-y circle is fully
    inside the cloud disk, the normalized lens-area derivative across the
    crossing range, and zero outside the support.  ``y`` may be an array.
    """
    D, x = geom.D, geom.x_norm
    y_arr = np.asarray(y, dtype=float)
    scalar = y_arr.ndim == 0
    y_arr = np.atleast_1d(y_arr)
    out = np.zeros_like(y_arr)
    if x <= _CENTER_EPS * D:
        inside = (y_arr >= 0) & (y_arr < D)
        out[inside] = 2.0 * y_arr[inside] / (D * D)
    else:
        if x < D:
            uniform = (y_arr >= 0) & (y_arr < D - x)
            out[uniform] = 2.0 * y_arr[uniform] / (D * D)
        lens = (y_arr >= abs(D - x)) & (y_arr < D + x)
        out[lens] = lens_area_slope_arr(x, y_arr[lens], D) / (np.pi * D * D)
    return float(out[0]) if scalar else out


def distance_cdf(y, geom: CloudGeometry):
    """CDF matching :func:`distance_pdf`; closed form on every branch."""
    D, x = geom.D, geom.x_norm
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    scalar = np.asarray(y).ndim == 0
    out = np.zeros_like(y_arr)
    if x <= _CENTER_EPS * D:
        inside = (y_arr >= 0) & (y_arr < D)
        out[inside] = (y_arr[inside] / D) ** 2
        out[y_arr >= D] = 1.0
    else:
        if x < D:
            uniform = (y_arr >= 0) & (y_arr < D - x)
            out[uniform] = (y_arr[uniform] / D) ** 2
        lens = (y_arr >= abs(D - x)) & (y_arr < D + x)
        out[lens] = lens_area_arr(x, y_arr[lens], D) / (np.pi * D * D)
        out[y_arr >= D + x] = 1.0
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def serving_distance_pdf_given_n(r, n: int, geom: CloudGeometry):
    """Density of the minimum of ``n`` i.i.d. cloud-node distances.

    Order statistics: n f(r) (1 - F(r))^(n-1) on the support of the
    distance law, zero beyond it.
    """
    if n < 1:
        raise GeometryDomainError(f"need at least one node, got n={n}")
    f = distance_pdf(r, geom)
    F = distance_cdf(r, geom)
    return n * f * (1.0 - F) ** (n - 1)


def guard_excluded_area(x_norm: float, geom: CloudGeometry) -> float:
    """Area of the cloud disk at center distance ``x_norm`` outside the guard disk.

    Three regimes: the guard disk nested in (or containing) the cloud
    disk, partial overlap resolved through the lens area, and no overlap.
    """
    D, d_g = geom.D, geom.d_g
    full = np.pi * D * D
    if d_g == 0.0:
        return full
    if x_norm >= D + d_g:
        return full
    if x_norm < abs(D - d_g):
        return full - np.pi * min(d_g, D) ** 2
    return full - float(lens_area_arr(x_norm, d_g, D))


def guard_excluded_area_arr(x, D: float, d_g: float):
    """Vectorized :func:`guard_excluded_area` over center distances ``x``."""
    x = np.asarray(x, dtype=float)
    full = np.pi * D * D
    out = np.full_like(x, full)
    if d_g == 0.0:
        return out
    near = x < abs(D - d_g)
    out[near] = full - np.pi * min(d_g, D) ** 2
    mid = (x >= abs(D - d_g)) & (x < D + d_g)
    x_mid = np.maximum(x[mid], _CENTER_EPS * D)
    out[mid] = full - lens_area_arr_center(x_mid, d_g, D)
    return out


def lens_area_arr_center(x, y: float, D: float):
    """Lens area vectorized over the center distance ``x`` at fixed radius ``y``.

    Callers guarantee |x - D| <= y <= x + D elementwise.
    """
    x = np.asarray(x, dtype=float)
    c_big = (D * D + x * x - y * y) / (2.0 * x * D)
    c_small = (y * y + x * x - D * D) / (2.0 * x * y)
    q = ((y + x) ** 2 - D * D) * (D * D - (y - x) ** 2)
    q = np.maximum(q, 0.0)
    return (
        D * D * _acos_clipped(c_big)
        + y * y * _acos_clipped(c_small)
        - 0.5 * np.sqrt(q)
    )
