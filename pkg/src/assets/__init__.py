"""Synthetic scene generation."""

from src.assets.generator import PRESETS, SceneGenerator, reference_sphere, rgb_to_sh_dc

__all__ = ["PRESETS", "SceneGenerator", "reference_sphere", "rgb_to_sh_dc"]
