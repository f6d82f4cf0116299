"""Central finite differences."""

from typing import Callable

import numpy as np

from src.oracle.rays import as_array
from src.utils.errors import OracleError


def fd_gradient(f: Callable[[np.ndarray], float], x0, step: float = 1e-4) -> np.ndarray:
    """
    Gradient of a scalar function by central differences.

    Coordinate i uses h_i = step * max(1, |x0_i|).

    Args:
        f: Scalar function of a parameter vector
        x0: Point of evaluation
        step: Relative step

    Returns:
        Gradient estimate with the shape of x0
    """
    x0 = as_array(x0)
    flat = x0.reshape(-1)
    grad = np.empty_like(flat)

    for i in range(flat.size):
        h = step * max(1.0, abs(flat[i]))
        forward = flat.copy()
        backward = flat.copy()
        forward[i] += h
        backward[i] -= h
        f_plus = float(f(forward.reshape(x0.shape)))
        f_minus = float(f(backward.reshape(x0.shape)))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise OracleError(f"Function is not finite around coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * h)

    return grad.reshape(x0.shape)
