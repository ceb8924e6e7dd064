import json

import numpy as np
import pytest
from scipy import ndimage

from abelsets.phantom import (Disk, Ellipse, PhantomSpec, Polygon, disk_phantom,
                              from_hole_object, hole_mask, hole_object, load_spec,
                              paper_phantom, paper_phantom_spec, render)
from abelsets.raster import Grid2D


def test_empty_spec_is_constant():
    f = render(PhantomSpec(Grid2D.centered(16), lam=1.5))
    assert np.all(f.values == 1.5)
    assert not render(PhantomSpec(Grid2D.centered(16), background="void")).values.any()


@pytest.mark.parametrize("R", [5.0, 12.3, 30.0])
def test_disk_area(R):
    f = disk_phantom(128, radius=R, z=64.0)
    n = hole_mask(f).sum()
    assert abs(n - np.pi * R * R) <= 2 * np.pi * R


def test_render_deterministic():
    spec = paper_phantom_spec(128)
    assert render(spec).values.tobytes() == render(spec).values.tobytes()


def test_paper_phantom_binary_and_symmetric():
    f = paper_phantom(256)
    assert set(np.unique(f.values)) == {0.0, 2.0}
    assert f.binary and f.lam == 2.0
    o = f.grid.origin
    k = np.arange(1, 128)
    np.testing.assert_array_equal(f.values[:, o + k], f.values[:, o - k])


@pytest.mark.parametrize("width", [64, 128, 256])
def test_paper_phantom_holes(width):
    holes = hole_mask(paper_phantom(width))
    # count components in the right half-plane (one per hole in the slice)
    right = holes[:, width // 2 :]
    assert ndimage.label(right)[1] >= 3


def test_paper_phantom_features():
    f = paper_phantom(256)
    holes = hole_mask(f)
    o = f.grid.origin
    # a hole crossing the axis and a small on-axis hole
    assert holes[:, o].sum() > 0
    lab, n = ndimage.label(holes)
    on_axis = {lab[i, o] for i in range(256) if lab[i, o]}
    assert len(on_axis) >= 2
    assert n >= 3
    with pytest.raises(ValueError):
        paper_phantom(32)


def test_painter_order():
    g = Grid2D.centered(32)
    spec = PhantomSpec(g, 2.0, (Disk("hole", r=8, z=16, radius=6),
                               Disk("material", r=8, z=16, radius=3)))
    f = render(spec).values
    assert f[16, g.origin + 8] == 2.0
    assert f[16, g.origin + 13] == 0.0


def test_shapes_contain():
    e = Ellipse("hole", r=10, z=10, ar=4, az=2, angle=90.0)
    assert e.contains(np.array([10.0]), np.array([13.5]))[0]
    assert not e.contains(np.array([13.5]), np.array([10.0]))[0]
    p = Polygon("hole", points=((0, 0), (4, 0), (4, 4), (0, 4)))
    assert p.contains(np.array([2.0]), np.array([2.0]))[0]
    assert not p.contains(np.array([5.0]), np.array([2.0]))[0]
    with pytest.raises(ValueError):
        Disk("foam", r=0, z=0, radius=1)


def test_shape_outside_grid_rejected():
    spec = PhantomSpec(Grid2D.centered(16), 2.0, (Disk("hole", r=6, z=8, radius=5),))
    with pytest.raises(ValueError):
        render(spec)


def test_json_roundtrip(tmp_path):
    spec = paper_phantom_spec(64)
    p = tmp_path / "s.json"
    p.write_text(json.dumps(spec.to_json()))
    back = load_spec(p)
    assert render(back) == render(spec)


def test_json_unknown_shape():
    with pytest.raises(ValueError):
        PhantomSpec.from_json({"width": 16, "shapes": [{"type": "star"}]})


def test_hole_object_roundtrip():
    f = paper_phantom(64)
    h = hole_object(f)
    np.testing.assert_array_equal(h.values == 2.0, hole_mask(f))
    assert from_hole_object(h, 2.0) == f
