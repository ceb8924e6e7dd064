"""Level-set reconstruction of binary, radially symmetric objects from one radiograph."""

from abelsets.raster import DensityField, Grid2D, Radiograph, read_raster, write_raster

__version__ = "0.1.0"

__all__ = ["DensityField", "Grid2D", "Radiograph", "read_raster", "write_raster", "__version__"]
