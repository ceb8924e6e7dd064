"""Discrete energy E = ||F(Hf) - g||^2 + alpha * TV(f / lam) and its gradient pieces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from abelsets.abel import AbelOperator, build_operator
from abelsets.degrade import BlurKernel, blur_array
from abelsets.raster import DensityField, Radiograph

TV_ESTIMATOR = "isotropic-forward-difference-tv"


class ContractError(ValueError):
    """Input violates an operation's precondition (e.g. non-binary density)."""


@dataclass(frozen=True)
class EnergyReport:
    e1: float
    e2: float
    total: float
    alpha: float


class Pipeline:
    """Forward model FH bound to one data set; ``gstar = H* F* g`` is computed once."""

    def __init__(self, data: Radiograph, lam: float, kernel: BlurKernel | None = None,
                 abel: AbelOperator | None = None):
        self.data = data
        self.lam = float(lam)
        self.kernel = kernel if kernel is not None else BlurKernel(0.0)
        self.abel = abel if abel is not None else build_operator(data.grid)
        if self.abel.grid != data.grid:
            raise ValueError("operator and data grids differ")
        self.grid = data.grid
        self.gstar = DensityField(self.grid, self.adjoint_array(data.values))

    # array-level kernels, used by the solver's inner loop
    def forward_array(self, f: np.ndarray) -> np.ndarray:
        return blur_array(self.kernel.taps, self.abel.project_array(f))

    def adjoint_array(self, g: np.ndarray) -> np.ndarray:
        return self.abel.backproject_array(blur_array(self.kernel.taps, g))

    def normal_array(self, u: np.ndarray) -> np.ndarray:
        return self.adjoint_array(self.forward_array(u))

    def _check(self, f):
        if f.grid != self.grid:
            raise ValueError(f"grid mismatch: pipeline {self.grid} vs field {f.grid}")


def tv_length(u: np.ndarray, spacing: float) -> float:
    """Isotropic TV with forward differences and replicate boundary, times spacing."""
    dx = np.zeros_like(u)
    dy = np.zeros_like(u)
    dx[:, :-1] = u[:, 1:] - u[:, :-1]
    dy[:-1, :] = u[1:, :] - u[:-1, :]
    return float(np.sum(np.sqrt(dx * dx + dy * dy)) * spacing)


def data_misfit(p: Pipeline, f: np.ndarray) -> float:
    """e1 = sum of squared residuals times cell area; f need not be binary."""
    res = p.forward_array(f) - p.data.values
    return float(np.sum(res * res) * p.grid.spacing**2)


def energy(p: Pipeline, f: DensityField, alpha: float) -> EnergyReport:
    p._check(f)
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not f.binary or (f.values.any() and f.lam != p.lam):
        raise ContractError(f"energy needs a field with values in {{0, {p.lam}}}")
    e1 = data_misfit(p, f.values)
    e2 = tv_length(f.values / p.lam, p.grid.spacing)
    return EnergyReport(e1, e2, e1 + alpha * e2, float(alpha))


def matching_gradient(p: Pipeline, f: DensityField) -> DensityField:
    """A f = H*F*g - H*F*FHf; ``dE1 = -2 <A f, df>`` with cell-area weighting."""
    p._check(f)
    return DensityField(p.grid, p.gstar.values - p.normal_array(f.values))


def apply_G(p: Pipeline, indicator: DensityField) -> DensityField:
    """(FH)* FH applied to a 0/1 field, one pass through the operators."""
    p._check(indicator)
    if not np.all((indicator.values == 0) | (indicator.values == 1)):
        raise ContractError("apply_G expects an indicator with values in {0, 1}")
    return DensityField(p.grid, p.normal_array(indicator.values))
