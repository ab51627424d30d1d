"""Height-field terrain: a 1D cell profile shifted against a flat floor.

One field is generated per training run; unevenness is varied by moving the
field horizontally and vertically. The vertical offset spans [-peak, 0]:
at the bottom of the range the profile disappears below the floor (flat
ground), at 0 the profile is fully exposed.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError


@dataclass
class TerrainField:
    heights: np.ndarray  # (n_cells,) >= 0
    span: float = 10.0
    cell: float = 0.04
    x_offset: float = 0.0
    z_offset: float = 0.0
    enabled: bool = True


def flat_field() -> TerrainField:
    """Featureless rigid floor at z = 0."""
    return TerrainField(heights=np.zeros(1), enabled=False)


def generate_heightfield(rng: np.random.Generator, peak_height: float,
                         span: float = 10.0, cell: float = 0.04) -> TerrainField:
    """Sample cell heights i.i.d. uniform in [0, peak_height]."""
    if peak_height < 0.0:
        raise ConfigError("peak_height must be non-negative")
    n_cells = int(round(span / cell))
    heights = rng.uniform(0.0, peak_height, size=n_cells)
    return TerrainField(heights=heights, span=span, cell=cell)


def terrain_height(field: TerrainField, x: float) -> float:
    """Ground height at world x (0 outside the field span)."""
    return float(_kernels.terrain_height_at(
        float(x), field.heights, field.span, field.cell,
        field.x_offset, field.z_offset, field.enabled))


def randomize_terrain(field: TerrainField, rng: np.random.Generator,
                      in_double_support: bool,
                      x_range=(-0.5, 0.5), z_range=(-0.04, 0.0)) -> TerrainField:
    """Resample field offsets, unless the gait is in double support.

    Double support gates the move so the ground cannot shift under a loaded
    stance and launch the robot upward. No RNG is consumed when gated.
    """
    if in_double_support:
        return field
    x_off = rng.uniform(x_range[0], x_range[1])
    z_off = rng.uniform(z_range[0], z_range[1])
    return dataclasses.replace(field, x_offset=x_off, z_offset=z_off)
