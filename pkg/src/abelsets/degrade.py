"""Forward degradation chain g = F(Hf) + noise, plus reference subtraction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from abelsets.raster import Radiograph, check_same_grid


@dataclass(frozen=True)
class BlurKernel:
    """Separable symmetric kernel; the 2-D kernel is ``outer(taps, taps)``."""

    sigma: float
    taps: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValueError(f"blur sigma must be >= 0, got {self.sigma}")
        object.__setattr__(self, "taps", gaussian_taps(self.sigma))

    @property
    def radius(self) -> int:
        return (len(self.taps) - 1) // 2


def gaussian_taps(sigma: float) -> np.ndarray:
    """Sampled Gaussian on ``[-ceil(4 sigma), ceil(4 sigma)]``, renormalized to sum 1."""
    if sigma == 0:
        t = np.ones(1)
    else:
        rad = math.ceil(4 * sigma)
        k = np.arange(-rad, rad + 1, dtype=np.float64)
        t = np.exp(-0.5 * (k / sigma) ** 2)
        t = 0.5 * (t + t[::-1])
        t /= t.sum()
    t.setflags(write=False)
    return t


def blur_array(taps: np.ndarray, g: np.ndarray) -> np.ndarray:
    if taps.size == 1 and taps[0] == 1.0:
        return np.array(g, dtype=np.float64, copy=True)
    out = correlate1d(g, taps, axis=1, mode="constant", cval=0.0)
    return correlate1d(out, taps, axis=0, mode="constant", cval=0.0)


def blur(k: BlurKernel, g: Radiograph) -> Radiograph:
    """Zero-padded separable convolution N * g."""
    return Radiograph(g.grid, blur_array(k.taps, g.values))


def blur_adjoint(k: BlurKernel, g: Radiograph) -> Radiograph:
    # symmetric taps: correlation and convolution coincide, F* = F
    return blur(k, g)


def blur_nonlinear(k: BlurKernel, nu: float, g: Radiograph) -> Radiograph:
    """Blur acting on intensity: ``-(1/nu) ln(N * exp(-nu g))``.

    Forward simulation only. Outside the grid the intensity is taken as 1
    (zero attenuation), which keeps the map consistent with the linear blur's
    zero padding as ``nu -> 0``.
    """
    if not nu > 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    if k.taps.size == 1:
        return Radiograph(g.grid, g.values)
    # work with 1 - exp(-nu g) so zero padding means unit intensity outside
    absorbed = -np.expm1(-nu * g.values)
    blurred = blur_array(k.taps, absorbed)
    transmitted = 1.0 - blurred
    if np.any(transmitted <= 0) or not np.all(np.isfinite(transmitted)):
        raise FloatingPointError("nonpositive intensity after blur; cannot take log")
    return Radiograph(g.grid, -np.log(transmitted) / nu)


@dataclass(frozen=True)
class NoiseModel:
    """Additive white Gaussian noise from a seeded counter-based generator.

    Uniforms come from numpy's Philox4x32-10 keyed by ``seed``; cell ``n`` (row-major)
    consumes uniforms ``2n`` and ``2n + 1`` of the stream, mapped to a normal
    deviate by the Box-Muller cosine branch. The mapping depends only on the
    seed and the cell index, so results are identical across platforms.
    """

    sigma_noise: float
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma_noise >= 0 and math.isfinite(self.sigma_noise)):
            raise ValueError(f"sigma_noise must be >= 0, got {self.sigma_noise}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def standard_normal(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        gen = np.random.Generator(np.random.Philox(key=int(self.seed)))
        u = gen.random(2 * n).reshape(n, 2)
        u1 = 1.0 - u[:, 0]  # (0, 1], keeps log finite
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u[:, 1])
        return z.reshape(shape)


def add_noise(m: NoiseModel, g: Radiograph) -> Radiograph:
    if m.sigma_noise == 0:
        return Radiograph(g.grid, g.values)
    return Radiograph(g.grid, g.values + m.sigma_noise * m.standard_normal(g.values.shape))


def subtract_reference(data: Radiograph, reference: Radiograph) -> Radiograph:
    """Remove the projection of the known, hole-free object from the data."""
    check_same_grid(data, reference)
    return Radiograph(data.grid, data.values - reference.values)


def noise_sigma_for_snr(clean: Radiograph, snr_db: float) -> float:
    """Noise std giving ``10 log10(mean(clean^2) / sigma^2) = snr_db`` over the grid."""
    power = float(np.mean(clean.values**2))
    return math.sqrt(power / 10.0 ** (snr_db / 10.0))
