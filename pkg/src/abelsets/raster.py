"""Grid containers and the F64R raster format.

F64R layout: one ASCII header line ``F64R <width> <height> <spacing> <origin>\\n``
followed by ``width * height`` little-endian float64 values, row-major, row 0 at
the top. Columns run along the radial direction, rows along the symmetry axis.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

MAGIC = b"F64R"


class RasterFormatError(ValueError):
    """Malformed F64R header."""


class RasterTruncatedError(RasterFormatError):
    """Payload size disagrees with the header dimensions."""


@dataclass(frozen=True)
class Grid2D:
    width: int
    height: int
    spacing: float = 1.0
    origin: int = 0

    def __post_init__(self):
        if int(self.width) != self.width or self.width < 1:
            raise ValueError(f"width must be an integer >= 1, got {self.width}")
        if int(self.height) != self.height or self.height < 1:
            raise ValueError(f"height must be an integer >= 1, got {self.height}")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError(f"spacing must be > 0, got {self.spacing}")
        if int(self.origin) != self.origin or not 0 <= self.origin < self.width:
            raise ValueError(f"origin must lie in [0, {self.width}), got {self.origin}")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "origin", int(self.origin))

    @classmethod
    def centered(cls, width: int, height: int | None = None, spacing: float = 1.0) -> "Grid2D":
        """Square-ish grid with the symmetry axis on column ``width // 2``."""
        return cls(width, width if height is None else height, spacing, width // 2)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def coord(self, i):
        """Signed radial coordinate of column ``i``."""
        return (np.asarray(i) - self.origin) * self.spacing

    @property
    def x(self) -> np.ndarray:
        return self.coord(np.arange(self.width))

    @property
    def z(self) -> np.ndarray:
        return np.arange(self.height) * self.spacing


class _Raster:
    """Immutable grid + float64 payload."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid2D, values):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.shape != grid.shape:
            raise ValueError(f"values shape {arr.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("raster values must be finite")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr

    @classmethod
    def zeros(cls, grid: Grid2D):
        return cls(grid, np.zeros(grid.shape))

    def with_values(self, values):
        return type(self)(self.grid, values)

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.grid == other.grid
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"{type(self).__name__}({self.grid!r})"


class DensityField(_Raster):
    """Density f(r, z); column index maps to signed r, row index to z."""

    __slots__ = ()

    @property
    def levels(self) -> np.ndarray:
        return np.unique(self.values)

    @property
    def binary(self) -> bool:
        """True when the field takes values in {0, lam} for a single lam > 0."""
        lv = self.levels
        return bool(np.all(lv >= 0) and lv.size <= 2 and (lv.size == 1 or lv[0] == 0))

    @property
    def lam(self) -> float:
        """Material density of a binary field (0.0 for the all-zero field)."""
        if not self.binary:
            raise ValueError("field is not binary")
        return float(self.values.max())


class Radiograph(_Raster):
    """Detector image g(u, v), line-integral units."""

    __slots__ = ()


def check_same_grid(a: _Raster, b: _Raster) -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def _header(grid: Grid2D) -> bytes:
    return f"F64R {grid.width} {grid.height} {grid.spacing!r} {grid.origin}\n".encode("ascii")


def write_raster(field: _Raster, path) -> None:
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(_header(field.grid))
        fh.write(payload)


def read_raster(path, kind=DensityField):
    """Read an F64R file as ``kind`` (DensityField or Radiograph)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    if nl < 0 or not raw.startswith(MAGIC + b" "):
        raise RasterFormatError(f"{os.fspath(path)}: missing F64R header")
    parts = raw[:nl].split()
    if len(parts) != 5:
        raise RasterFormatError(f"{os.fspath(path)}: header needs 5 fields, got {len(parts)}")
    try:
        width, height = int(parts[1]), int(parts[2])
        spacing = float(parts[3])
        origin = int(parts[4])
        grid = Grid2D(width, height, spacing, origin)
    except ValueError as exc:
        raise RasterFormatError(f"{os.fspath(path)}: bad header: {exc}") from None
    body = raw[nl + 1 :]
    expected = width * height * 8
    if len(body) != expected:
        raise RasterTruncatedError(
            f"{os.fspath(path)}: expected {expected} payload bytes, found {len(body)}"
        )
    values = np.frombuffer(body, dtype="<f8").reshape(height, width)
    return kind(grid, values)


def export_pgm(field: _Raster, path, vmin: float, vmax: float) -> None:
    """Write a 16-bit binary PGM with ``vmin -> 0`` and ``vmax -> 65535``.

    Values are clamped to [vmin, vmax] and rounded half-to-even after the affine
    map, so the midpoint (vmin + vmax) / 2 lands on 32768 (65535/2 = 32767.5).
    """
    if not vmin < vmax:
        raise ValueError(f"export_pgm needs min < max, got {vmin} >= {vmax}")
    scaled = (np.clip(field.values, vmin, vmax) - vmin) / (vmax - vmin) * 65535.0
    pix = np.rint(scaled).astype(">u2")
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(pix.tobytes())
