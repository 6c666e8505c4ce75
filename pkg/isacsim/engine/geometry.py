"""Positions, view-angle conventions and UPA array responses.

All positions are kilometers. Angles follow two conventions:

- downlook (satellite looking at a lower point): azimuth measured from the negative
  y-axis, elevation from the negative z-axis;
- uplook (gateway looking at a higher target): elevation measured from the positive
  z-axis, azimuth in the same form as downlook.

Steering vectors depend on the angles only through the direction cosines
``(cos(phi) cos(theta), sin(phi) cos(theta))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from isacsim.errors import ContractViolation

# Below this magnitude a Dirichlet-kernel denominator is treated as its limit.
_DIRICHLET_EPS = 1e-9


class Position3(BaseModel):
    """A point in the local Cartesian frame.

    Accepts either keyword fields or a length-3 sequence, so YAML entries such as
    ``[50, 50, 600]`` validate directly.

    Attributes:
        x: East coordinate in km
        y: North coordinate in km
        z: Altitude in km
    """

    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    z: float

    @model_validator(mode="before")
    @classmethod
    def from_sequence(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple, np.ndarray)):
            if len(data) != 3:
                raise ValueError(f"position needs 3 coordinates, got {len(data)}")
            return {"x": data[0], "y": data[1], "z": data[2]}
        return data

    @field_validator("x", "y", "z")
    @classmethod
    def finite(cls, value: float) -> float:
        if not np.isfinite(value):
            raise ValueError("position coordinates must be finite")
        return value

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values: ArrayLike) -> "Position3":
        arr = np.asarray(values, dtype=float)
        return cls(x=float(arr[0]), y=float(arr[1]), z=float(arr[2]))


class UpaGeometry(BaseModel):
    """Half-wavelength uniform planar array with ``n_x * n_y`` elements."""

    model_config = ConfigDict(frozen=True)

    n_x: int = Field(ge=1, description="Elements along the x axis")
    n_y: int = Field(ge=1, description="Elements along the y axis")

    @model_validator(mode="before")
    @classmethod
    def from_sequence(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            if len(data) != 2:
                raise ValueError(f"array size needs 2 entries, got {len(data)}")
            return {"n_x": data[0], "n_y": data[1]}
        return data

    @property
    def n(self) -> int:
        return self.n_x * self.n_y


class ViewConvention(str, Enum):
    DOWNLOOK = "downlook"
    UPLOOK = "uplook"


@dataclass(frozen=True)
class Direction:
    azimuth: float
    elevation: float
    convention: ViewConvention

    def __post_init__(self) -> None:
        if not (np.isfinite(self.azimuth) and np.isfinite(self.elevation)):
            raise ContractViolation("direction angles must be finite")

    def cosines(self) -> tuple[float, float]:
        """Direction cosines that enter the array phase progression."""
        c = np.cos(self.elevation)
        return float(np.cos(self.azimuth) * c), float(np.sin(self.azimuth) * c)


def _as_points(value: Position3 | ArrayLike) -> NDArray[np.float64]:
    if isinstance(value, Position3):
        return value.as_array()
    return np.asarray(value, dtype=float)


def downlook_angles(
    sources: ArrayLike, targets: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Vectorized downlook azimuth/elevation for broadcastable ``(..., 3)`` arrays."""
    delta = np.asarray(sources, dtype=float) - np.asarray(targets, dtype=float)
    azimuth = np.arctan2(-delta[..., 0], delta[..., 1])
    elevation = np.arctan2(np.hypot(delta[..., 0], delta[..., 1]), delta[..., 2])
    return azimuth, elevation


def uplook_angles(
    gateways: ArrayLike, targets: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Vectorized uplook azimuth/elevation for broadcastable ``(..., 3)`` arrays."""
    delta = np.asarray(gateways, dtype=float) - np.asarray(targets, dtype=float)
    azimuth = np.arctan2(-delta[..., 0], delta[..., 1])
    elevation = np.arctan2(np.hypot(delta[..., 0], delta[..., 1]), -delta[..., 2])
    return azimuth, elevation


def downlook_direction(source: Position3, target: Position3) -> Direction:
    """Direction from a higher node (satellite) down to a lower point.

    Args:
        source: Observing node, must be strictly above ``target``
        target: Observed point

    Returns:
        Direction tagged ``DOWNLOOK``

    Raises:
        ContractViolation: If ``source.z <= target.z``
    """
    if source.z <= target.z:
        raise ContractViolation(
            f"downlook requires source above target (source z={source.z}, target z={target.z})"
        )
    azimuth, elevation = downlook_angles(source.as_array(), target.as_array())
    return Direction(float(azimuth), float(elevation), ViewConvention.DOWNLOOK)


def uplook_elevation(gateway: Position3, target: Position3) -> Direction:
    """Direction from a ground gateway up to an airborne target.

    Raises:
        ContractViolation: If ``target.z <= gateway.z``
    """
    if target.z <= gateway.z:
        raise ContractViolation(
            f"uplook requires target above gateway (gateway z={gateway.z}, target z={target.z})"
        )
    azimuth, elevation = uplook_angles(gateway.as_array(), target.as_array())
    return Direction(float(azimuth), float(elevation), ViewConvention.UPLOOK)


def steering_from_angles(
    geom: UpaGeometry, azimuth: ArrayLike, elevation: ArrayLike
) -> NDArray[np.complex128]:
    """Steering vectors for arrays of angles; output shape ``angles.shape + (n,)``.

    The flat index runs row-major over (x index, y index), i.e. ``v_x kron v_y``.
    """
    azimuth = np.asarray(azimuth, dtype=float)
    elevation = np.asarray(elevation, dtype=float)
    u_x = np.cos(azimuth) * np.cos(elevation)
    u_y = np.sin(azimuth) * np.cos(elevation)
    v_x = np.exp(-1j * np.pi * np.arange(geom.n_x) * u_x[..., None])
    v_y = np.exp(-1j * np.pi * np.arange(geom.n_y) * u_y[..., None])
    v = v_x[..., :, None] * v_y[..., None, :]
    return v.reshape(u_x.shape + (geom.n,))


def steering_vector(geom: UpaGeometry, direction: Direction) -> NDArray[np.complex128]:
    return steering_from_angles(geom, direction.azimuth, direction.elevation)


def downlook_steering(
    geom: UpaGeometry, sources: ArrayLike, targets: ArrayLike
) -> NDArray[np.complex128]:
    return steering_from_angles(geom, *downlook_angles(sources, targets))


def uplook_steering(
    geom: UpaGeometry, gateways: ArrayLike, targets: ArrayLike
) -> NDArray[np.complex128]:
    return steering_from_angles(geom, *uplook_angles(gateways, targets))


def crosstalk(geom: UpaGeometry, dir1: Direction, dir2: Direction) -> float:
    """Normalized inner-product power ``|v1^H v2|^2 / n`` between two array responses."""
    v1 = steering_vector(geom, dir1)
    v2 = steering_vector(geom, dir2)
    return float(np.abs(np.vdot(v1, v2)) ** 2 / geom.n)


def _dirichlet(n: int, delta: NDArray[np.float64]) -> NDArray[np.float64]:
    half = np.pi * delta / 2.0
    den = np.sin(half)
    singular = np.abs(den) < _DIRICHLET_EPS
    safe = np.where(singular, 1.0, den)
    ratio = np.sin(n * half) / safe
    # |ratio| tends to n at every multiple of pi; only the magnitude is used
    return np.where(singular, float(n), np.abs(ratio))


def crosstalk_closed_form(
    geom: UpaGeometry, dir1: Direction, dir2: Direction
) -> float:
    """Crosstalk through the product of two Dirichlet-kernel factors."""
    ux1, uy1 = dir1.cosines()
    ux2, uy2 = dir2.cosines()
    fx = _dirichlet(geom.n_x, np.asarray(ux1 - ux2))
    fy = _dirichlet(geom.n_y, np.asarray(uy1 - uy2))
    return float((fx * fy) ** 2 / geom.n)


def pairwise_crosstalk(
    steering_a: NDArray[np.complex128], steering_b: NDArray[np.complex128]
) -> NDArray[np.float64]:
    """Crosstalk matrix between two stacks of steering vectors ``(A, n)`` and ``(B, n)``."""
    n = steering_a.shape[-1]
    return np.abs(steering_a.conj() @ steering_b.T) ** 2 / n


def distances_m(a: ArrayLike, b: ArrayLike) -> NDArray[np.float64]:
    """Euclidean distances in meters between km-valued point arrays."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return np.linalg.norm(diff, axis=-1) * 1e3


def as_points(values: Sequence[Position3] | ArrayLike) -> NDArray[np.float64]:
    """Stack positions (models or raw coordinates) into a ``(N, 3)`` float array."""
    if isinstance(values, np.ndarray):
        return values.astype(float).reshape(-1, 3)
    return np.array([_as_points(v) for v in values], dtype=float).reshape(-1, 3)
