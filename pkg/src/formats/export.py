"""Write rendered images and result tables to disk."""

import csv
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from PIL import Image as PILImage

from src.core.types import Image
from src.formats.ppm import to_bytes, write_ppm
from src.utils.config import get_config
from src.utils.logger import get_logger

logger = get_logger("conicsplat.export")

PathLike = Union[str, Path]


def format_cell(value) -> str:
    """Floats with 17 significant digits; everything else as str."""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


class Exporter:
    """Export images (PPM, optional PNG) and CSV tables."""

    def __init__(self, png: Optional[bool] = None):
        """
        Initialize exporter.

        Args:
            png: Also write a PNG next to every PPM (config `render.write_png` if None)
        """
        self.config = get_config()
        self.png = bool(self.config.get("render.write_png", False)) if png is None else png

    def export_image(self, img: Image, path: PathLike) -> List[Path]:
        """
        Write `img` as PPM, and as PNG when enabled.

        Returns:
            Paths written
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(write_ppm(img))
        written = [path]

        if self.png:
            png_path = path.with_suffix(".png")
            PILImage.fromarray(to_bytes(img)).save(png_path)
            written.append(png_path)

        logger.debug(f"Image exported: {', '.join(str(p) for p in written)}")
        return written

    def export_images(self, images: Sequence[Image], output_dir: PathLike, prefix: str = "view") -> List[Path]:
        """Write one image per entry as <prefix>_<index>.ppm."""
        output_dir = Path(output_dir)
        written = []
        for i, img in enumerate(images):
            written.extend(self.export_image(img, output_dir / f"{prefix}_{i:03d}.ppm"))
        logger.info(f"Exported {len(images)} images to {output_dir}")
        return written

    def export_csv(self, rows: Iterable[Sequence], header: Sequence[str], path: PathLike) -> Path:
        """
        Write a CSV table with a header row.

        Args:
            rows: Table rows (floats are written losslessly)
            header: Column names
            path: Output path

        Returns:
            Path written
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            count = 0
            for row in rows:
                writer.writerow([format_cell(v) for v in row])
                count += 1
        logger.info(f"CSV exported: {path} ({count} rows)")
        return path
