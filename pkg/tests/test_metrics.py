import numpy as np
import pytest
from scipy import ndimage

from abelsets.metrics import boundary, count_components, dice, evaluate, hausdorff
from abelsets.objective import ContractError
from abelsets.phantom import disk_phantom, paper_phantom
from abelsets.raster import DensityField, Grid2D


def test_identity():
    t = paper_phantom(64)
    m = evaluate(t, t)
    assert m["dice"] == 1.0 and m["misclassification"] == 0.0
    assert m["hausdorff_px"] == 0.0 and m["hole_count_diff"] == 0
    assert m["dice_off_axis"] == 1.0


def test_complement():
    t = paper_phantom(64)
    comp = DensityField(t.grid, np.where(t.values == 0, 2.0, 0.0))
    m = evaluate(comp, t)
    assert m["dice"] == 0.0 and m["misclassification"] == 1.0


def test_dilated_by_one():
    t = disk_phantom(64, radius=10, z=30, r=8)
    holes = t.values == 0
    grown = ndimage.binary_dilation(holes, ndimage.generate_binary_structure(2, 1))
    recon = DensityField(t.grid, np.where(grown, 0.0, 2.0))
    m = evaluate(recon, t)
    assert m["hausdorff_px"] == 1.0
    # counting oracle
    expect = 2 * holes.sum() / (holes.sum() + grown.sum())
    assert m["dice"] == pytest.approx(expect, rel=1e-15)
    assert m["holes_recon"] == m["holes_truth"] == 1


def test_non_binary_rejected():
    t = paper_phantom(64)
    with pytest.raises(ContractError):
        evaluate(DensityField(t.grid, t.values * 0.5 + 0.1), t)
    with pytest.raises(ValueError):
        evaluate(paper_phantom(128), t)


def test_component_count():
    m = np.zeros((10, 10), dtype=bool)
    m[1:3, 1:3] = m[5:7, 5:7] = True
    m[3, 3] = True  # diagonal touch does not join
    assert count_components(m) == 3


def test_helpers_edge_cases():
    e = np.zeros((5, 5), dtype=bool)
    assert dice(e, e) == 1.0
    assert hausdorff(e, e) == 0.0
    f = e.copy()
    f[2, 2] = True
    assert hausdorff(e, f) == np.inf
    assert boundary(f).sum() == 1


def test_off_axis_excludes_three_columns():
    g = Grid2D.centered(16)
    truth = np.full(g.shape, 2.0)
    truth[4:8, 6:11] = 0.0
    recon = truth.copy()
    recon[4:8, g.origin - 1 : g.origin + 2] = 2.0  # miss the axis columns only
    m = evaluate(DensityField(g, recon), DensityField(g, truth))
    assert m["dice"] < 1.0 and m["dice_off_axis"] == 1.0
