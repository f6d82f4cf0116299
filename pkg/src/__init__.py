"""conicsplat: Gaussian splatting with exact tangent-cone projection."""

__version__ = "0.1.0"
