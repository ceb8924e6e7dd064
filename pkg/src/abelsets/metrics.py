"""Scores comparing a binary reconstruction with the ground truth."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from abelsets.objective import ContractError
from abelsets.raster import DensityField, check_same_grid


def hole_set(field: DensityField) -> np.ndarray:
    if not field.binary:
        raise ContractError("evaluation needs binary fields with values in {0, lam}")
    return field.values == 0


def dice(a: np.ndarray, b: np.ndarray) -> float:
    """2|A & B| / (|A| + |B|); two empty sets score 1."""
    den = a.sum() + b.sum()
    return 1.0 if den == 0 else float(2.0 * np.logical_and(a, b).sum() / den)


def boundary(mask: np.ndarray) -> np.ndarray:
    """Mask cells with at least one 4-neighbour outside the mask (grid edge excluded)."""
    inner = ndimage.binary_erosion(mask, structure=ndimage.generate_binary_structure(2, 1),
                                   border_value=1)
    return mask & ~inner


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between the boundaries of two masks, in pixels."""
    ba, bb = boundary(a), boundary(b)
    if not ba.any() and not bb.any():
        return 0.0
    if not ba.any() or not bb.any():
        return float("inf")
    da = ndimage.distance_transform_edt(~ba)
    db = ndimage.distance_transform_edt(~bb)
    return float(max(da[bb].max(), db[ba].max()))


def count_components(mask: np.ndarray) -> int:
    return int(ndimage.label(mask)[1])


def evaluate(recon: DensityField, truth: DensityField, axis_halfwidth: int = 1) -> dict:
    """Hole-set scores (holes are the zero cells of both fields).

    ``dice_off_axis`` repeats the Dice score without the columns within
    ``axis_halfwidth`` of the axis (3 columns for the default of 1), where the
    geometry leaves the least information.
    """
    check_same_grid(recon, truth)
    r, t = hole_set(recon), hole_set(truth)
    out = {
        "dice": dice(r, t),
        "misclassification": float(np.mean(r != t)),
        "holes_recon": count_components(r),
        "holes_truth": count_components(t),
        "hole_count_diff": count_components(r) - count_components(t),
        "hausdorff_px": hausdorff(r, t),
    }
    keep = np.abs(np.arange(truth.grid.width) - truth.grid.origin) > axis_halfwidth
    out["dice_off_axis"] = dice(r[:, keep], t[:, keep])
    return out
