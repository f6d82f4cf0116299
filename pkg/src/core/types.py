"""Value types shared by every stage: Gaussians, cameras, images."""

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Union

import torch

from src.utils.errors import InvalidParameterError

DTYPE = torch.float64

# Number of SH coefficients per channel for degrees 0..3
SH_COUNTS = (1, 4, 9, 16)

ArrayLike = Union[torch.Tensor, Sequence[float], float]


def as_tensor(value: ArrayLike) -> torch.Tensor:
    """Convert to a float64 CPU tensor without detaching autograd history."""
    if isinstance(value, torch.Tensor):
        return value if value.dtype == DTYPE else value.to(DTYPE)
    return torch.as_tensor(value, dtype=DTYPE)


def sh_degree_for(count: int) -> int:
    """Map a per-channel coefficient count (1, 4, 9, 16) to its SH degree."""
    if count not in SH_COUNTS:
        raise InvalidParameterError(f"SH coefficient count must be one of {SH_COUNTS}, got {count}")
    return SH_COUNTS.index(count)


@dataclass(frozen=True, eq=False)
class Gaussian3D:
    """
    One scene primitive, stored in unconstrained (optimiser) parameters.

    Attributes:
        position: World-space centre, shape (3,)
        rotation: Quaternion (w, x, y, z), normalised on use, shape (4,)
        log_scales: Log of per-axis standard deviations, shape (3,)
        opacity_logit: Opacity before the sigmoid, shape ()
        sh_coeffs: SH coefficients, shape (K, 3) with K in {1, 4, 9, 16}
    """

    position: torch.Tensor
    rotation: torch.Tensor
    log_scales: torch.Tensor
    opacity_logit: torch.Tensor
    sh_coeffs: torch.Tensor

    @classmethod
    def create(
        cls,
        position: ArrayLike,
        rotation: ArrayLike = (1.0, 0.0, 0.0, 0.0),
        log_scales: ArrayLike = (0.0, 0.0, 0.0),
        opacity_logit: ArrayLike = 0.0,
        sh_coeffs: Optional[ArrayLike] = None,
    ) -> "Gaussian3D":
        """Build a validated Gaussian from plain numbers or tensors."""
        sh = as_tensor(sh_coeffs) if sh_coeffs is not None else torch.zeros(1, 3, dtype=DTYPE)
        if sh.ndim == 1:
            sh = sh.reshape(1, 3)
        gaussian = cls(
            position=as_tensor(position).reshape(3),
            rotation=as_tensor(rotation).reshape(4),
            log_scales=as_tensor(log_scales).reshape(3),
            opacity_logit=as_tensor(opacity_logit).reshape(()),
            sh_coeffs=sh,
        )
        gaussian.validate()
        return gaussian

    def validate(self):
        """Check the parameter invariants, raising InvalidParameterError."""
        for name in ("position", "rotation", "log_scales", "opacity_logit", "sh_coeffs"):
            if not bool(torch.isfinite(getattr(self, name)).all()):
                raise InvalidParameterError(f"Gaussian {name} is not finite")
        if not bool(torch.isfinite(torch.exp(self.log_scales)).all()):
            raise InvalidParameterError("Gaussian scales overflow")
        if self.sh_coeffs.ndim != 2 or self.sh_coeffs.shape[1] != 3:
            raise InvalidParameterError(f"SH coefficients must be (K, 3), got {tuple(self.sh_coeffs.shape)}")
        sh_degree_for(self.sh_coeffs.shape[0])

    @property
    def opacity(self) -> torch.Tensor:
        return torch.sigmoid(self.opacity_logit)

    @property
    def scales(self) -> torch.Tensor:
        return torch.exp(self.log_scales)

    @property
    def sh_degree(self) -> int:
        return sh_degree_for(self.sh_coeffs.shape[0])


class Intrinsics(NamedTuple):
    """Pinhole intrinsics; the principal point sits at the image centre."""

    fx: float
    fy: float
    width: float
    height: float


@dataclass(frozen=True, eq=False)
class Camera:
    """
    Pinhole camera with a rigid world-to-camera transform.

    Camera space is x right, y down, z forward; the camera origin is the
    origin of camera space.
    """

    fx: float
    fy: float
    width: int
    height: int
    rotation: torch.Tensor = field(default_factory=lambda: torch.eye(3, dtype=DTYPE))
    translation: torch.Tensor = field(default_factory=lambda: torch.zeros(3, dtype=DTYPE))
    camera_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rotation", as_tensor(self.rotation).reshape(3, 3))
        object.__setattr__(self, "translation", as_tensor(self.translation).reshape(3))

        if not (self.fx > 0 and self.fy > 0 and math.isfinite(self.fx) and math.isfinite(self.fy)):
            raise InvalidParameterError(f"Focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.width < 1 or self.height < 1:
            raise InvalidParameterError(f"Image size must be at least 1x1, got {self.width}x{self.height}")
        if not bool(torch.isfinite(self.rotation).all() and torch.isfinite(self.translation).all()):
            raise InvalidParameterError("Camera transform is not finite")

        gram = self.rotation.T @ self.rotation
        if float((gram - torch.eye(3, dtype=DTYPE)).abs().max()) > 1e-9:
            raise InvalidParameterError("Camera rotation is not orthonormal")
        if float(torch.linalg.det(self.rotation)) < 0:
            raise InvalidParameterError("Camera rotation is a reflection (det < 0)")

    @classmethod
    def identity(cls, fx: float, fy: float, width: int, height: int, camera_id: int = 0) -> "Camera":
        """Camera sitting at the world origin looking down +z."""
        return cls(fx=fx, fy=fy, width=width, height=height, camera_id=camera_id)

    @classmethod
    def look_at(
        cls,
        eye: ArrayLike,
        target: ArrayLike,
        up: ArrayLike,
        fx: float,
        fy: float,
        width: int,
        height: int,
        camera_id: int = 0,
    ) -> "Camera":
        """
        Build a camera at `eye` looking towards `target`.

        Args:
            eye: Camera centre in world space
            target: Point the optical axis passes through
            up: World direction that should appear upwards in the image

        Returns:
            Camera whose rows of R are (right, down, forward)
        """
        eye, target, up = as_tensor(eye), as_tensor(target), as_tensor(up)
        forward = target - eye
        if float(forward.norm()) == 0.0:
            raise InvalidParameterError("look_at eye and target coincide")
        forward = forward / forward.norm()
        right = torch.linalg.cross(forward, up)
        if float(right.norm()) < 1e-12:
            raise InvalidParameterError("look_at up vector is parallel to the viewing direction")
        right = right / right.norm()
        down = torch.linalg.cross(forward, right)
        rotation = torch.stack([right, down, forward])
        translation = -rotation @ eye
        return cls(fx=fx, fy=fy, width=width, height=height,
                   rotation=rotation, translation=translation, camera_id=camera_id)

    @property
    def center(self) -> torch.Tensor:
        """Camera origin in world space (-R^T t)."""
        return -self.rotation.T @ self.translation

    @property
    def intrinsics(self) -> Intrinsics:
        return Intrinsics(float(self.fx), float(self.fy), float(self.width), float(self.height))


@dataclass(frozen=True, eq=False)
class Image:
    """Row-major linear RGB image, pixels of shape (height, width, 3)."""

    width: int
    height: int
    pixels: torch.Tensor

    def __post_init__(self):
        if tuple(self.pixels.shape) != (self.height, self.width, 3):
            raise InvalidParameterError(
                f"Pixel array shape {tuple(self.pixels.shape)} does not match {self.height}x{self.width}x3"
            )
        if not bool(torch.isfinite(self.pixels).all()):
            raise InvalidParameterError("Image contains non-finite values")

    @classmethod
    def filled(cls, width: int, height: int, rgb: ArrayLike = (0.0, 0.0, 0.0)) -> "Image":
        color = as_tensor(rgb).reshape(1, 1, 3)
        return cls(width=width, height=height, pixels=color.expand(height, width, 3).clone())

    @classmethod
    def from_tensor(cls, pixels: torch.Tensor) -> "Image":
        return cls(width=int(pixels.shape[1]), height=int(pixels.shape[0]), pixels=pixels)


@dataclass(eq=False)
class GaussianScene:
    """
    Stacked tensor form of a list of Gaussians.

    The rasterizer and the optimiser work on this layout; every field has the
    Gaussian index as its leading dimension.
    """

    positions: torch.Tensor       # (N, 3)
    rotations: torch.Tensor       # (N, 4)
    log_scales: torch.Tensor      # (N, 3)
    opacity_logits: torch.Tensor  # (N,)
    sh_coeffs: torch.Tensor       # (N, K, 3)

    @classmethod
    def from_gaussians(cls, gaussians: Sequence[Gaussian3D]) -> "GaussianScene":
        if not gaussians:
            return cls.empty()
        count = max(g.sh_coeffs.shape[0] for g in gaussians)
        sh = torch.zeros(len(gaussians), count, 3, dtype=DTYPE)
        for i, g in enumerate(gaussians):
            sh[i, : g.sh_coeffs.shape[0]] = g.sh_coeffs
        return cls(
            positions=torch.stack([g.position for g in gaussians]),
            rotations=torch.stack([g.rotation for g in gaussians]),
            log_scales=torch.stack([g.log_scales for g in gaussians]),
            opacity_logits=torch.stack([g.opacity_logit for g in gaussians]),
            sh_coeffs=sh,
        )

    @classmethod
    def empty(cls, sh_count: int = 1) -> "GaussianScene":
        return cls(
            positions=torch.zeros(0, 3, dtype=DTYPE),
            rotations=torch.zeros(0, 4, dtype=DTYPE),
            log_scales=torch.zeros(0, 3, dtype=DTYPE),
            opacity_logits=torch.zeros(0, dtype=DTYPE),
            sh_coeffs=torch.zeros(0, sh_count, 3, dtype=DTYPE),
        )

    def to_gaussians(self) -> List[Gaussian3D]:
        scene = self.detach()
        return [
            Gaussian3D(
                position=scene.positions[i].clone(),
                rotation=scene.rotations[i].clone(),
                log_scales=scene.log_scales[i].clone(),
                opacity_logit=scene.opacity_logits[i].clone(),
                sh_coeffs=scene.sh_coeffs[i].clone(),
            )
            for i in range(len(scene))
        ]

    def parameters(self) -> List[torch.Tensor]:
        return [self.positions, self.rotations, self.log_scales, self.opacity_logits, self.sh_coeffs]

    def detach(self) -> "GaussianScene":
        return GaussianScene(*(p.detach() for p in self.parameters()))

    def clone(self) -> "GaussianScene":
        return GaussianScene(*(p.detach().clone() for p in self.parameters()))

    @property
    def sh_degree(self) -> int:
        return sh_degree_for(self.sh_coeffs.shape[1])

    def __len__(self) -> int:
        return int(self.positions.shape[0])


def intrinsics_of(cam: Union[Camera, Intrinsics]) -> Intrinsics:
    """Accept either a full camera or bare intrinsics."""
    return cam.intrinsics if isinstance(cam, Camera) else Intrinsics(*cam)


def first_index(mask: torch.Tensor) -> int:
    """Index of the first True entry of a flattened boolean mask."""
    return int(torch.nonzero(mask.reshape(-1))[0, 0])
