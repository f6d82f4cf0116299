"""
Gaussian point clouds in the binary little-endian PLY layout used by 3DGS.

Per vertex, 62 float32 properties in this order: x y z, nx ny nz,
f_dc_0..2, f_rest_0..44, opacity (logit), scale_0..2 (log), rot_0..3
(w x y z, unnormalised). f_rest may be absent (degree-0 clouds) or shorter
for degree 1 and 2. f_rest_i holds channel i // (K - 1), coefficient
1 + i % (K - 1).
"""

import io
from typing import List, Sequence, Tuple

import numpy as np
import torch
from plyfile import PlyData, PlyElement

from src.core.types import DTYPE, SH_COUNTS, Gaussian3D
from src.utils.errors import PlyParseError
from src.utils.logger import get_logger

logger = get_logger("conicsplat.formats")

HEAD_FIELDS = ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"]
TAIL_FIELDS = ["opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
MAX_REST = 3 * (SH_COUNTS[-1] - 1)


def property_names(rest_count: int = MAX_REST) -> List[str]:
    return HEAD_FIELDS + [f"f_rest_{i}" for i in range(rest_count)] + TAIL_FIELDS


def vertex_dtype(rest_count: int = MAX_REST) -> np.dtype:
    return np.dtype([(name, "<f4") for name in property_names(rest_count)])


def _scan_header(data: bytes) -> Tuple[int, int, List[str]]:
    """
    Validate the header line by line.

    Returns:
        (header length in bytes, vertex count, property names)
    """
    offset = 0
    count = None
    names: List[str] = []
    expected_start = [b"ply", b"format binary_little_endian 1.0"]
    index = 0

    while True:
        end = data.find(b"\n", offset)
        if end < 0:
            raise PlyParseError("Header is not terminated by end_header", offset)
        line = data[offset:end].rstrip(b"\r")
        tokens = line.split()

        if index < len(expected_start):
            if line != expected_start[index]:
                raise PlyParseError(f"Expected {expected_start[index].decode()!r}, got {line[:40]!r}", offset)
        elif not tokens or tokens[0] in (b"comment", b"obj_info"):
            pass
        elif tokens[0] == b"element":
            if count is not None or len(tokens) != 3 or tokens[1] != b"vertex" or not tokens[2].isdigit():
                raise PlyParseError(f"Unsupported element declaration {line[:40]!r}", offset)
            count = int(tokens[2])
        elif tokens[0] == b"property":
            if count is None:
                raise PlyParseError("Property declared before the vertex element", offset)
            if len(tokens) != 3 or tokens[1] != b"float":
                raise PlyParseError(f"Only float properties are supported, got {line[:40]!r}", offset)
            name = tokens[2].decode("ascii", errors="replace")
            expected = _expected_name(names)
            if name not in expected:
                raise PlyParseError(f"Unexpected property {name!r} (expected {' or '.join(expected)})", offset)
            names.append(name)
        elif tokens == [b"end_header"]:
            offset = end + 1
            break
        else:
            raise PlyParseError(f"Malformed header line {line[:40]!r}", offset)

        offset = end + 1
        index += 1

    if count is None:
        raise PlyParseError("Header declares no vertex element", offset)
    rest = len(names) - len(HEAD_FIELDS) - len(TAIL_FIELDS)
    if rest not in [3 * (k - 1) for k in SH_COUNTS] or names != property_names(rest):
        raise PlyParseError(f"Incomplete property list ({len(names)} properties)", offset)
    return offset, count, names


def _expected_name(seen: List[str]) -> List[str]:
    """Names allowed for the next property given those already declared."""
    i = len(seen)
    if i < len(HEAD_FIELDS):
        return [HEAD_FIELDS[i]]
    rest = sum(1 for name in seen if name.startswith("f_rest_"))
    tail = i - len(HEAD_FIELDS) - rest
    if tail == 0 and rest < MAX_REST:
        return [f"f_rest_{rest}", TAIL_FIELDS[0]]
    if tail < len(TAIL_FIELDS):
        return [TAIL_FIELDS[tail]]
    return ["(none)"]


def read_ply(data: bytes) -> List[Gaussian3D]:
    """
    Parse a binary PLY point cloud.

    Stored logits, log-scales and raw quaternions are kept as they are.

    Raises:
        PlyParseError: malformed header, unexpected property order or a
            truncated payload, each with the byte offset of the problem
    """
    header_len, count, names = _scan_header(data)
    rest = len(names) - len(HEAD_FIELDS) - len(TAIL_FIELDS)
    record = vertex_dtype(rest).itemsize

    available = len(data) - header_len
    if available < count * record:
        complete = available // record
        raise PlyParseError(
            f"Payload truncated: {count} vertices declared, {complete} complete",
            header_len + complete * record,
        )

    vertices = PlyData.read(io.BytesIO(data))["vertex"].data
    table = np.stack([vertices[name] for name in names], axis=-1).astype(np.float64)

    sh_count = rest // 3 + 1
    gaussians = []
    for row in table:
        values = dict(zip(names, row))
        sh = np.zeros((sh_count, 3))
        sh[0] = [values["f_dc_0"], values["f_dc_1"], values["f_dc_2"]]
        for i in range(rest):
            sh[1 + i % (sh_count - 1), i // (sh_count - 1)] = values[f"f_rest_{i}"]
        gaussians.append(Gaussian3D(
            position=torch.tensor([values["x"], values["y"], values["z"]], dtype=DTYPE),
            rotation=torch.tensor([values[f"rot_{i}"] for i in range(4)], dtype=DTYPE),
            log_scales=torch.tensor([values[f"scale_{i}"] for i in range(3)], dtype=DTYPE),
            opacity_logit=torch.tensor(values["opacity"], dtype=DTYPE),
            sh_coeffs=torch.from_numpy(sh),
        ))

    logger.debug(f"Read {len(gaussians)} Gaussians (SH degree {SH_COUNTS.index(sh_count)})")
    return gaussians


def write_ply(gaussians: Sequence[Gaussian3D]) -> bytes:
    """
    Serialise Gaussians; f_rest is always written in the degree-3 layout.

    Returns:
        PLY bytes (deterministic for identical input)
    """
    names = property_names()
    column = {name: j for j, name in enumerate(names)}
    table = np.zeros((len(gaussians), len(names)))
    for row, g in zip(table, gaussians):
        sh = g.sh_coeffs.detach().numpy()
        row[0:3] = g.position.detach().numpy()
        row[column["f_dc_0"]:column["f_dc_0"] + 3] = sh[0]
        # Channel-major rest coefficients, 15 slots per channel
        for channel in range(3):
            start = column["f_rest_0"] + channel * (SH_COUNTS[-1] - 1)
            row[start:start + sh.shape[0] - 1] = sh[1:, channel]
        row[column["opacity"]] = float(g.opacity_logit)
        row[column["scale_0"]:column["scale_0"] + 3] = g.log_scales.detach().numpy()
        row[column["rot_0"]:column["rot_0"] + 4] = g.rotation.detach().numpy()

    records = np.zeros(len(gaussians), dtype=vertex_dtype())
    for j, name in enumerate(names):
        records[name] = table[:, j]

    stream = io.BytesIO()
    PlyData([PlyElement.describe(records, "vertex")], text=False, byte_order="<").write(stream)
    return stream.getvalue()
