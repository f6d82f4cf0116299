"""Line-oriented camera text format."""

from typing import List, Sequence, Union

import torch

from src.core.types import DTYPE, Camera
from src.utils.errors import CameraFormatError, InvalidParameterError

ORTHONORMAL_TOLERANCE = 1e-6
TOKENS_PER_LINE = 17

HEADER = "# id width height fx fy r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz"


def _parse_line(tokens: List[str], line_no: int) -> Camera:
    try:
        camera_id, width, height = (int(t) for t in tokens[:3])
        values = [float(t) for t in tokens[3:]]
    except ValueError as e:
        raise CameraFormatError(f"non-numeric token ({e})", line_no)

    fx, fy = values[0], values[1]
    matrix = torch.tensor(values[2:], dtype=DTYPE).reshape(3, 4)
    rotation, translation = matrix[:, :3], matrix[:, 3]

    drift = float((rotation.T @ rotation - torch.eye(3, dtype=DTYPE)).abs().max())
    if drift > ORTHONORMAL_TOLERANCE:
        raise CameraFormatError("rotation is not orthonormal", line_no)
    if float(torch.linalg.det(rotation)) <= 0:
        raise CameraFormatError("rotation has determinant -1 (reflection)", line_no)

    # Snap to the nearest rotation so text rounding cannot fail later checks
    if drift > 1e-12:
        U, _, Vh = torch.linalg.svd(rotation)
        rotation = U @ Vh

    try:
        return Camera(fx=fx, fy=fy, width=width, height=height,
                      rotation=rotation, translation=translation, camera_id=camera_id)
    except InvalidParameterError as e:
        raise CameraFormatError(str(e), line_no)


def read_cameras(text: Union[str, bytes]) -> List[Camera]:
    """
    Parse one camera per line.

    Bytes are decoded as UTF-8 first.

    Line layout: `id width height fx fy r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz`,
    whitespace separated; `#` starts a comment.

    Raises:
        CameraFormatError: wrong token count, bad numbers or an invalid
            rotation, or undecodable bytes, naming the 1-based line
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            line_no = text.count(b"\n", 0, e.start) + 1
            raise CameraFormatError(f"not UTF-8 text ({e.reason} at byte {e.start})", line_no)

    cameras = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        if len(tokens) != TOKENS_PER_LINE:
            raise CameraFormatError(f"expected {TOKENS_PER_LINE} tokens, got {len(tokens)}", line_no)
        cameras.append(_parse_line(tokens, line_no))
    return cameras


def write_cameras(cameras: Sequence[Camera]) -> str:
    """Format cameras with 17 significant digits so they read back unchanged."""
    lines = [HEADER]
    for cam in cameras:
        matrix = torch.cat([cam.rotation, cam.translation.unsqueeze(-1)], dim=1).reshape(-1).tolist()
        numbers = " ".join(f"{v:.17g}" for v in [cam.fx, cam.fy] + matrix)
        lines.append(f"{cam.camera_id} {cam.width} {cam.height} {numbers}")
    return "\n".join(lines) + "\n"
