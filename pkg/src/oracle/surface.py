"""Numerical lowest-depth search on the 3-sigma ellipsoid surface."""

import numpy as np
from scipy import optimize

from src.oracle.rays import SIGMA_LEVEL, as_array
from src.utils.errors import OracleError

CHUNK = 200_000


def sample_surface_points(cov_c, p_c, n: int, seed: int = 0) -> np.ndarray:
    """n points on the 3-sigma surface: sphere samples pushed through 3 L (L L^T = Sigma_c)."""
    cov_c, p_c = as_array(cov_c), as_array(p_c)
    L = np.linalg.cholesky(cov_c)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return p_c + 3.0 * u @ L.T


def sample_surface_min_depth(cov_c, p_c, n: int = 1_000_000, seed: int = 0) -> float:
    """Smallest camera-space z over n random surface samples (processed in chunks)."""
    rng = np.random.default_rng(seed)
    best = np.inf
    remaining = n
    while remaining > 0:
        size = min(CHUNK, remaining)
        chunk_seed = int(rng.integers(0, 2**63 - 1))
        best = min(best, float(sample_surface_points(cov_c, p_c, size, chunk_seed)[:, 2].min()))
        remaining -= size
    return best


def numerical_min_depth(cov_c, p_c, seed: int = 0) -> float:
    """
    Minimise z subject to (x - p)^T Sigma_c^-1 (x - p) = 9 with SLSQP.

    Starts from the best of a few thousand surface samples.
    """
    cov_c, p_c = as_array(cov_c), as_array(p_c)
    A = np.linalg.inv(cov_c)

    samples = sample_surface_points(cov_c, p_c, 2000, seed)
    x0 = samples[np.argmin(samples[:, 2])]

    constraint = {
        "type": "eq",
        "fun": lambda x: (x - p_c) @ A @ (x - p_c) - SIGMA_LEVEL,
        "jac": lambda x: 2.0 * A @ (x - p_c),
    }
    result = optimize.minimize(
        lambda x: x[2],
        x0,
        jac=lambda x: np.array([0.0, 0.0, 1.0]),
        constraints=[constraint],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    if not result.success:
        raise OracleError(f"Constrained minimisation failed: {result.message}")
    return float(result.x[2])
