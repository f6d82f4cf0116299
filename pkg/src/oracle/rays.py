"""
Brute-force ray tests against the 3-sigma ellipsoid.

Everything here works on numpy arrays and scipy root finders and shares no
code with the torch projection path, so it can be used to check it.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import optimize

from src.utils.errors import OracleError
from src.utils.logger import get_logger

logger = get_logger("conicsplat.oracle")

SIGMA_LEVEL = 9.0
SCAN_STEP = np.pi / 720
BISECT_XTOL = 1e-12
BISECT_MAXITER = 200


def as_array(value) -> np.ndarray:
    """float64 numpy copy of a tensor or sequence."""
    if hasattr(value, "detach"):
        value = value.detach().cpu().numpy()
    return np.asarray(value, dtype=np.float64)


@dataclass(frozen=True)
class RayQuadratic:
    """a t^2 + b t + c = 0 for the ray e + t d against the unit-level ellipsoid."""

    a: float
    b: float
    c: float

    def roots(self) -> Tuple[float, float]:
        """Real roots in ascending order; raises OracleError when the ray misses."""
        disc = tangency_residual(self)
        if disc < 0:
            raise OracleError("Ray misses the ellipsoid")
        root = np.sqrt(disc)
        half_b = self.b / 2
        return ((-half_b - root) / self.a, (-half_b + root) / self.a)


def ray_quadratic(A, center, e, d) -> RayQuadratic:
    """
    Coefficients of the ray-ellipsoid quadratic.

    Args:
        A: Unit-level form (the surface is (x - center)^T A (x - center) = 1)
        center: Ellipsoid centre
        e: Ray origin
        d: Ray direction

    Returns:
        RayQuadratic with a = d^T A d, b = 2 delta^T A d, c = delta^T A delta - 1
        where delta = e - center
    """
    A, center, e, d = as_array(A), as_array(center), as_array(e), as_array(d)
    delta = e - center
    Ad = A @ d
    return RayQuadratic(a=float(d @ Ad), b=float(2.0 * delta @ Ad), c=float(delta @ A @ delta - 1.0))


def tangency_residual(rq: RayQuadratic) -> float:
    """(b/2)^2 - a c: positive for two hits, zero when tangent, negative for a miss."""
    return (rq.b / 2) ** 2 - rq.a * rq.c


def ray_hits_by_bisection(A, center, e, d) -> Tuple[float, float]:
    """
    Entry and exit parameters found by bisecting the level function along the ray.

    Locates the ray point of lowest level with scipy, then bisects
    level(t) = 1 on either side of it.
    """
    A, center, e, d = as_array(A), as_array(center), as_array(e), as_array(d)

    def level(t: float) -> float:
        delta = e + t * d - center
        return float(delta @ A @ delta) - 1.0

    # The level is a convex parabola in t with its vertex at t0
    t0 = float(-(d @ A @ (e - center)) / (d @ A @ d))
    if level(t0) >= 0:
        raise OracleError("Ray does not enter the ellipsoid")

    span = 1.0
    while level(t0 - span) < 0 or level(t0 + span) < 0:
        span *= 2.0
        if span > 1e12:
            raise OracleError("Could not bracket the surface crossings")
    entry = optimize.bisect(level, t0 - span, t0, xtol=BISECT_XTOL, maxiter=BISECT_MAXITER)
    exit_ = optimize.bisect(level, t0, t0 + span, xtol=BISECT_XTOL, maxiter=BISECT_MAXITER)
    return entry, exit_


def _orthonormal_frame(axis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    first = np.cross(axis, helper)
    first /= np.linalg.norm(first)
    second = np.cross(axis, first)
    return first, second


def silhouette_by_search(A, center, e, count: int) -> np.ndarray:
    """
    Silhouette points on the z = 1 plane found purely by root counting.

    For `count` azimuths around the direction from `e` to the centre, scan the
    elevation until the ray stops hitting the ellipsoid, then bisect the sign
    change of the discriminant. The tangent directions are intersected with
    the plane one unit in front of `e`.

    Args:
        A: Level-9 form Sigma_c^-1 (rescaled to level 1 internally)
        center: Ellipsoid centre in camera space
        e: Camera origin (normally zero)
        count: Number of azimuths

    Returns:
        Array of shape (count, 2)

    Raises:
        OracleError: camera inside, no bracket, or a tangent ray that never
            reaches the plane (the silhouette is not an ellipse)
    """
    unit_form = as_array(A) / SIGMA_LEVEL
    center, e = as_array(center), as_array(e)

    axis = center - e
    if float(axis @ unit_form @ axis) <= 1.0:
        raise OracleError("Camera lies inside the ellipsoid")
    axis /= np.linalg.norm(axis)
    delta = e - center
    c_const = float(delta @ unit_form @ delta) - 1.0
    first, second = _orthonormal_frame(axis)

    thetas = np.arange(1, int(np.pi / SCAN_STEP)) * SCAN_STEP
    points = np.empty((count, 2))

    for k in range(count):
        phi = 2.0 * np.pi * k / count
        sideways = np.cos(phi) * first + np.sin(phi) * second

        def direction(theta: float) -> np.ndarray:
            return np.cos(theta) * axis + np.sin(theta) * sideways

        def residual(theta: float) -> float:
            return tangency_residual(ray_quadratic(unit_form, center, e, direction(theta)))

        dirs = np.cos(thetas)[:, None] * axis + np.sin(thetas)[:, None] * sideways
        a_dd = np.einsum("ti,ij,tj->t", dirs, unit_form, dirs)
        half_b = dirs @ unit_form @ delta
        misses = np.flatnonzero(half_b ** 2 - a_dd * c_const < 0)
        if misses.size == 0:
            raise OracleError(f"No silhouette bracket at azimuth {k}")
        hi = thetas[misses[0]]
        lo = hi - SCAN_STEP
        theta = optimize.bisect(residual, lo, hi, xtol=BISECT_XTOL, maxiter=BISECT_MAXITER)

        d = direction(theta)
        if d[2] <= 0:
            raise OracleError(f"Tangent ray at azimuth {k} does not reach the z = 1 plane")
        points[k] = d[:2] / d[2]

    logger.debug(f"Silhouette search produced {count} points")
    return points
