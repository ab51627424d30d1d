import dataclasses

import numpy as np
import pytest

from planarwalk.errors import ConfigError
from planarwalk.terrain import (TerrainField, flat_field, generate_heightfield,
                                randomize_terrain, terrain_height)


def test_zero_peak_gives_zero_heights():
    field = generate_heightfield(np.random.default_rng(0), 0.0)
    assert np.all(field.heights == 0.0)


def test_heights_bounded_by_peak():
    field = generate_heightfield(np.random.default_rng(1), 0.04)
    assert field.heights.min() >= 0.0
    assert field.heights.max() <= 0.04
    assert field.heights.shape[0] == 250  # 10 m span over 4 cm cells


def test_generation_deterministic():
    a = generate_heightfield(np.random.default_rng(7), 0.04)
    b = generate_heightfield(np.random.default_rng(7), 0.04)
    assert np.array_equal(a.heights, b.heights)


def test_negative_peak_rejected():
    with pytest.raises(ConfigError):
        generate_heightfield(np.random.default_rng(0), -0.01)


def test_lowest_offset_yields_flat_floor():
    field = generate_heightfield(np.random.default_rng(2), 0.04)
    field = dataclasses.replace(field, z_offset=-0.04)
    for x in np.linspace(-6.0, 6.0, 101):
        assert terrain_height(field, x) == 0.0


def test_zero_offset_exposes_full_profile():
    field = generate_heightfield(np.random.default_rng(3), 0.04)
    centers = -0.5 * field.span + (np.arange(250) + 0.5) * field.cell
    sampled = np.array([terrain_height(field, x) for x in centers])
    np.testing.assert_allclose(sampled, field.heights, atol=1e-15)


def test_outside_span_is_flat():
    field = generate_heightfield(np.random.default_rng(4), 0.04)
    assert terrain_height(field, 5.5) == 0.0
    assert terrain_height(field, -5.5) == 0.0


def test_disabled_field_is_flat():
    field = flat_field()
    assert terrain_height(field, 0.0) == 0.0


def test_piecewise_constant_within_cell():
    field = generate_heightfield(np.random.default_rng(5), 0.04)
    # cell 130 spans x in [0.2, 0.24)
    xs = [0.2001, 0.21, 0.22, 0.2399]
    vals = {terrain_height(field, x) for x in xs}
    assert len(vals) == 1
    assert vals.pop() == pytest.approx(field.heights[130], abs=1e-15)


def test_randomize_gated_in_double_support():
    field = generate_heightfield(np.random.default_rng(6), 0.04)
    rng = np.random.default_rng(10)
    same = randomize_terrain(field, rng, in_double_support=True)
    assert same is field
    # the gated call must not consume randomness
    moved = randomize_terrain(field, np.random.default_rng(10), False)
    moved2 = randomize_terrain(field, np.random.default_rng(10), False)
    assert moved.x_offset == moved2.x_offset
    assert moved.z_offset == moved2.z_offset


def test_randomize_offsets_within_ranges():
    field = generate_heightfield(np.random.default_rng(8), 0.04)
    rng = np.random.default_rng(11)
    for _ in range(500):
        field2 = randomize_terrain(field, rng, False)
        assert -0.5 <= field2.x_offset <= 0.5
        assert -0.04 <= field2.z_offset <= 0.0


def test_randomize_shares_height_grid():
    field = generate_heightfield(np.random.default_rng(9), 0.04)
    moved = randomize_terrain(field, np.random.default_rng(0), False)
    assert moved.heights is field.heights


def test_offset_shifts_profile():
    heights = np.zeros(250)
    heights[125] = 0.04  # single bump at x in [0, 0.04)
    field = TerrainField(heights=heights)
    assert terrain_height(field, 0.02) == pytest.approx(0.04)
    shifted = dataclasses.replace(field, x_offset=0.5)
    assert terrain_height(shifted, 0.02) == 0.0
    assert terrain_height(shifted, 0.52) == pytest.approx(0.04)
