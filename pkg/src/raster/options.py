"""Validated rasterizer settings."""

from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from src.utils.config import Config, get_config


class RenderOptions(BaseModel):
    """Rasterizer settings; defaults follow the 3DGS ecosystem conventions."""

    model_config = ConfigDict(frozen=True)

    dilation_s: float = Field(0.3, ge=0.0, description="Isotropic px^2 added to every 2D covariance")
    alpha_cutoff: float = Field(1.0 / 255.0, ge=0.0, lt=1.0, description="Skip contributions below this alpha")
    transmittance_floor: float = Field(1e-4, gt=0.0, lt=1.0, description="A pixel finishes once T drops below")
    sh_degree: int = Field(0, ge=0, le=3)
    background: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    tile_size: int = Field(16, ge=1)
    margin_px: float = Field(16.0, ge=0.0, description="Frustum-cull dilation of the image rectangle")
    near_plane: float = Field(0.0, ge=0.0, description="Extra clearance above z = 0 for the behind-plane filter")

    @classmethod
    def from_config(cls, config: Optional[Config] = None, **overrides) -> "RenderOptions":
        """
        Build options from the `render` and `prefilter` config sections.

        Args:
            config: Config instance (uses the global one if None)
            **overrides: Explicit values that win over the config file

        Returns:
            RenderOptions
        """
        config = config or get_config()
        values = {
            key: config.get(f"render.{key}")
            for key in ("dilation_s", "alpha_cutoff", "transmittance_floor", "sh_degree", "background", "tile_size")
        }
        values["margin_px"] = config.get("prefilter.margin_px")
        values["near_plane"] = config.get("prefilter.near_plane")
        values = {k: v for k, v in values.items() if v is not None}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
