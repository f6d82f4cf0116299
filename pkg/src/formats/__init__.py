"""File formats: PLY point clouds, camera text, PPM images and exports."""

from src.formats.cameras import read_cameras, write_cameras
from src.formats.export import Exporter, format_cell
from src.formats.ply import read_ply, write_ply
from src.formats.ppm import write_ppm

__all__ = [
    "Exporter",
    "format_cell",
    "read_cameras",
    "read_ply",
    "write_cameras",
    "write_ply",
    "write_ppm",
]
