"""Binary PPM (P6) encoding."""

import numpy as np

from src.core.types import Image


def to_bytes(img: Image) -> np.ndarray:
    """Quantise to uint8 with clamping to [0, 1] and round-half-up."""
    values = np.clip(img.pixels.detach().cpu().numpy(), 0.0, 1.0)
    return np.floor(values * 255.0 + 0.5).astype(np.uint8)


def write_ppm(img: Image) -> bytes:
    """`P6\\n<w> <h>\\n255\\n` followed by row-major RGB bytes, top row first."""
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + to_bytes(img).tobytes()
