"""Discrete Abel projection H, its exact transpose H*, and the direct inverse.

Radial pixel model: column ``origin + k`` (and, mirrored, ``origin - k``) holds a
density that is constant on ``|r| in [k dx, (k + 1) dx)``. Detector samples sit at
``u = (i - origin) dx``. The weight coupling detector offset ``|u|`` to pixel
``[r_k, r_{k+1})`` is the exact chord integral

    2 (sqrt(r_{k+1}^2 - u^2) - sqrt(max(r_k, |u|)^2 - u^2)),

so the integrable singularity of ``r / sqrt(r^2 - u^2)`` at ``r = |u|`` never gets
sampled. Left and right half-planes are decoupled: rays with ``u < 0`` only see
columns left of the axis, rays with ``u > 0`` only the axis column and right. The
axis ray ``u = 0`` sees the axis column plus the mean of each mirrored pair, so
the transpose treats both halves alike.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from abelsets.raster import DensityField, Grid2D, Radiograph, check_same_grid


def radial_weights(n: int, spacing: float = 1.0) -> np.ndarray:
    """One-sided chord weights, ``W[a, b]`` = detector offset ``a``, pixel ``b``."""
    edges = np.arange(n + 1) * spacing
    u = edges[:n, None]
    hi = edges[None, 1:]
    lo = np.maximum(edges[None, :-1], u)
    hi2 = np.maximum(hi * hi - u * u, 0.0)
    lo2 = np.maximum(lo * lo - u * u, 0.0)
    # difference of square roots written without cancellation
    num = (hi * hi - lo * lo)
    den = np.sqrt(hi2) + np.sqrt(lo2)
    w = np.zeros((n, n))
    hit = hi > u
    w[hit] = 2.0 * num[hit] / den[hit]
    return w


class AbelOperator:
    """Per-row projection matrix for one grid.

    ``matrix[i, j]`` is the weight of source column ``j`` in detector column ``i``.
    Rows are applied independently, so ``project`` is ``f @ matrix.T`` and the
    adjoint is the plain transpose.
    """

    def __init__(self, grid: Grid2D):
        self.grid = grid
        o, w = grid.origin, grid.width
        n = max(w - o, o + 1)
        W = radial_weights(n, grid.spacing)
        m = np.zeros((w, w))
        right = np.arange(o, w)
        m[np.ix_(right, right)] = W[: w - o, : w - o]
        if o > 0:
            left = np.arange(o - 1, -1, -1)  # offsets 1..o
            m[np.ix_(left, left)] = W[1 : o + 1, 1 : o + 1]
            # the u = 0 ray crosses both halves: split each shared annulus evenly
            shared = min(w - 1 - o, o)
            k = np.arange(1, shared + 1)
            m[o, o + k] = 0.5 * W[0, k]
            m[o, o - k] = 0.5 * W[0, k]
            k = np.arange(shared + 1, o + 1)
            m[o, o - k] = W[0, k]
        m.setflags(write=False)
        self.matrix = m
        self._mt = np.ascontiguousarray(m.T)

    def pairs(self, i: int) -> list[tuple[int, float]]:
        """Nonzero ``(source column, weight)`` pairs feeding detector column ``i``."""
        row = self.matrix[i]
        return [(int(j), float(row[j])) for j in np.flatnonzero(row)]

    def _check(self, r):
        if r.grid != self.grid:
            raise ValueError(f"grid mismatch: operator {self.grid} vs field {r.grid}")

    def project_array(self, f: np.ndarray) -> np.ndarray:
        return f @ self._mt

    def backproject_array(self, g: np.ndarray) -> np.ndarray:
        return g @ self.matrix


def build_operator(grid: Grid2D) -> AbelOperator:
    return AbelOperator(grid)


def project(op: AbelOperator, f: DensityField) -> Radiograph:
    op._check(f)
    return Radiograph(f.grid, op.project_array(f.values))


def backproject(op: AbelOperator, g: Radiograph) -> DensityField:
    op._check(g)
    return DensityField(g.grid, op.backproject_array(g.values))


@lru_cache(maxsize=16)
def _inverse_matrix(n: int, spacing: float) -> np.ndarray:
    """Linear map from a one-sided profile g(k dx), k = 0..n-1, to f(k dx).

    g' is taken by central differences (zero at k = 0 by even extension,
    backward difference at the last sample) and held constant on the sample's
    cell ``[x_k - dx/2, x_k + dx/2]``; each cell is integrated against
    ``1 / sqrt(x^2 - r^2)`` in closed form.
    """
    x = np.arange(n) * spacing
    deriv = np.zeros((n, n))
    if n > 2:
        k = np.arange(1, n - 1)
        deriv[k, k + 1] = 0.5 / spacing
        deriv[k, k - 1] = -0.5 / spacing
    if n > 1:
        deriv[n - 1, n - 1] = 1.0 / spacing
        deriv[n - 1, n - 2] = -1.0 / spacing

    a = np.maximum(x - 0.5 * spacing, 0.0)
    b = x + 0.5 * spacing
    r = x[:, None]
    lo = np.maximum(a[None, :], r)
    hi = np.broadcast_to(b[None, :], (n, n))
    seg = np.zeros((n, n))
    live = hi > r
    pos = live & (r > 0)
    rr = np.broadcast_to(r, (n, n))
    seg[pos] = np.arccosh(hi[pos] / rr[pos]) - np.arccosh(lo[pos] / rr[pos])
    axis = live & (rr == 0) & (lo > 0)
    seg[axis] = np.log(hi[axis] / lo[axis])
    # the k = 0 cell on the axis row is 1/x-singular; its slope is zero anyway
    return -(seg @ deriv) / np.pi


def inverse_abel_array(g: np.ndarray, grid: Grid2D) -> np.ndarray:
    o, w = grid.origin, grid.width
    out = np.empty_like(g, dtype=np.float64)
    right = g[:, o:]
    out[:, o:] = right @ _inverse_matrix(w - o, grid.spacing).T
    if o > 0:
        left = g[:, o::-1]  # axis sample, then offsets 1..o
        inv_left = left @ _inverse_matrix(o + 1, grid.spacing).T
        out[:, o - 1 :: -1] = inv_left[:, 1:]
    return out


def inverse_abel(g: Radiograph) -> DensityField:
    """Direct inversion of H, each half-plane processed on its own.

    No regularization: noise in ``g`` is amplified through the derivative.
    Values on the axis column are the least reliable.
    """
    return DensityField(g.grid, inverse_abel_array(g.values, g.grid))


__all__ = [
    "AbelOperator",
    "backproject",
    "build_operator",
    "check_same_grid",
    "inverse_abel",
    "project",
    "radial_weights",
]
