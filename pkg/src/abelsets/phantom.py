"""Synthetic binary test objects in the (r, z) half-plane, mirrored across the axis.

Shapes are given in length units: ``r >= 0`` is the distance from the symmetry
axis, ``z`` the height measured from row 0. A cell takes the value of the last
shape containing its center point ``(|x_j| + dx/2, z_i)``; the half-pixel offset
in ``r`` matches the Abel pixel model, where column ``j`` spans
``|r| in [|x_j|, |x_j| + dx)``.

JSON form of a spec::

    {"width": 128, "height": 128, "spacing": 1.0, "origin": 64,
     "lambda": 2.0, "background": "material",
     "shapes": [
        {"type": "disk", "kind": "hole", "r": 0, "z": 40, "radius": 6},
        {"type": "ellipse", "kind": "hole", "r": 30, "z": 80, "ar": 8, "az": 4, "angle": 20},
        {"type": "polygon", "kind": "material", "points": [[0, 10], [20, 10], [0, 30]]}
     ]}

``origin`` defaults to ``width // 2``, ``height`` to ``width``, ``spacing`` to 1,
``background`` to ``"material"``; ``angle`` is in degrees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from abelsets.raster import DensityField, Grid2D

PHANTOM_VERSION = 1


@dataclass(frozen=True)
class Shape:
    kind: str  # "material" or "hole"

    def __post_init__(self):
        if self.kind not in ("material", "hole"):
            raise ValueError(f"shape kind must be 'material' or 'hole', got {self.kind!r}")

    def contains(self, r: np.ndarray, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounds(self) -> tuple[float, float, float, float]:
        """(r_min, r_max, z_min, z_max)."""
        raise NotImplementedError


@dataclass(frozen=True)
class Disk(Shape):
    r: float = 0.0
    z: float = 0.0
    radius: float = 1.0

    def contains(self, r, z):
        return (r - self.r) ** 2 + (z - self.z) ** 2 < self.radius**2

    def bounds(self):
        return (self.r - self.radius, self.r + self.radius, self.z - self.radius, self.z + self.radius)

    def to_json(self):
        return {"type": "disk", "kind": self.kind, "r": self.r, "z": self.z, "radius": self.radius}


@dataclass(frozen=True)
class Ellipse(Shape):
    r: float = 0.0
    z: float = 0.0
    ar: float = 1.0
    az: float = 1.0
    angle: float = 0.0

    def contains(self, r, z):
        t = math.radians(self.angle)
        c, s = math.cos(t), math.sin(t)
        dr, dz = r - self.r, z - self.z
        p = c * dr + s * dz
        q = -s * dr + c * dz
        return (p / self.ar) ** 2 + (q / self.az) ** 2 < 1.0

    def bounds(self):
        t = math.radians(self.angle)
        er = math.hypot(self.ar * math.cos(t), self.az * math.sin(t))
        ez = math.hypot(self.ar * math.sin(t), self.az * math.cos(t))
        return (self.r - er, self.r + er, self.z - ez, self.z + ez)

    def to_json(self):
        return {"type": "ellipse", "kind": self.kind, "r": self.r, "z": self.z,
                "ar": self.ar, "az": self.az, "angle": self.angle}


@dataclass(frozen=True)
class Polygon(Shape):
    points: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        pts = tuple((float(a), float(b)) for a, b in self.points)
        if len(pts) < 3:
            raise ValueError("polygon needs at least 3 points")
        object.__setattr__(self, "points", pts)

    def contains(self, r, z):
        # even-odd crossing test
        inside = np.zeros(np.broadcast(r, z).shape, dtype=bool)
        pts = self.points
        for (r0, z0), (r1, z1) in zip(pts, pts[1:] + pts[:1]):
            if z0 == z1:
                continue
            straddle = (z0 > z) != (z1 > z)
            r_cross = r0 + (z - z0) * (r1 - r0) / (z1 - z0)
            inside ^= straddle & (r < r_cross)
        return inside

    def bounds(self):
        a = np.array(self.points)
        return (a[:, 0].min(), a[:, 0].max(), a[:, 1].min(), a[:, 1].max())

    def to_json(self):
        return {"type": "polygon", "kind": self.kind, "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class PhantomSpec:
    grid: Grid2D
    lam: float = 2.0
    shapes: tuple = ()
    background: str = "material"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if self.background not in ("material", "void"):
            raise ValueError(f"background must be 'material' or 'void', got {self.background!r}")
        object.__setattr__(self, "shapes", tuple(self.shapes))

    def to_json(self) -> dict:
        g = self.grid
        return {"width": g.width, "height": g.height, "spacing": g.spacing, "origin": g.origin,
                "lambda": self.lam, "background": self.background,
                "shapes": [s.to_json() for s in self.shapes]}

    @classmethod
    def from_json(cls, doc: dict) -> "PhantomSpec":
        width = int(doc["width"])
        grid = Grid2D(width, int(doc.get("height", width)), float(doc.get("spacing", 1.0)),
                      int(doc.get("origin", width // 2)))
        shapes = []
        for s in doc.get("shapes", []):
            s = dict(s)
            typ = s.pop("type", None)
            maker = {"disk": Disk, "ellipse": Ellipse, "polygon": Polygon}.get(typ)
            if maker is None:
                raise ValueError(f"unknown shape type {typ!r}")
            shapes.append(maker(**s))
        return cls(grid, float(doc.get("lambda", 2.0)), tuple(shapes), doc.get("background", "material"))


def load_spec(path) -> PhantomSpec:
    with open(path) as fh:
        return PhantomSpec.from_json(json.load(fh))


def _check_inside(spec: PhantomSpec, shape: Shape) -> None:
    g = spec.grid
    r_lim = min(g.width - 1 - g.origin, g.origin if g.origin > 0 else g.width) * g.spacing + g.spacing
    z_lim = (g.height - 1) * g.spacing
    _, r1, z0, z1 = shape.bounds()
    # r < 0 is the mirror image of r > 0, so only the outer extent matters
    if r1 > r_lim or z0 < 0 or z1 > z_lim:
        raise ValueError(f"shape {shape} leaves the grid (r <= {r_lim}, 0 <= z <= {z_lim})")


def render(spec: PhantomSpec) -> DensityField:
    g = spec.grid
    r = (np.abs(g.x) + 0.5 * g.spacing)[None, :]
    z = g.z[:, None]
    out = np.full(g.shape, spec.lam if spec.background == "material" else 0.0)
    for shape in spec.shapes:
        _check_inside(spec, shape)
        out[shape.contains(r, z)] = spec.lam if shape.kind == "material" else 0.0
    return DensityField(g, out)


def paper_phantom_spec(width: int, lam: float = 2.0) -> PhantomSpec:
    """Built-in object covering the usual difficulties of the experiment.

    Material background with: a small hole on the axis (diameter width/32), a
    ring-shaped hole (two mirrored blobs in the slice), an off-axis ellipse, and a
    top hole crossing the axis whose upper edge carries triangular teeth of
    height and base width/16, width/32, ... down to one pixel.
    """
    if width < 64:
        raise ValueError(f"paper_phantom needs width >= 64, got {width}")
    W = float(width)
    grid = Grid2D.centered(width)
    shapes = [
        Disk("hole", r=0.0, z=0.78 * W, radius=W / 64),
        Disk("hole", r=0.22 * W, z=0.52 * W, radius=0.07 * W),
        Ellipse("hole", r=0.30 * W, z=0.76 * W, ar=0.08 * W, az=0.045 * W, angle=30.0),
    ]
    # top hole: slab from the axis to 0.36 W, teeth along its upper edge
    z_top, z_bot, r_end = 0.22 * W, 0.32 * W, 0.36 * W
    pts = [(0.0, z_bot), (0.0, z_top)]
    r_pos = 0.02 * W
    size = W / 16
    while size >= 1.0 and r_pos + size <= r_end:
        pts += [(r_pos, z_top), (r_pos + size / 2, z_top - size), (r_pos + size, z_top)]
        r_pos += size + max(size / 2, 1.5)
        size /= 2
    pts += [(r_end, z_top), (r_end, z_bot)]
    shapes.append(Polygon("hole", points=tuple(pts)))
    return PhantomSpec(grid, lam, tuple(shapes), "material")


def paper_phantom(width: int, lam: float = 2.0) -> DensityField:
    return render(paper_phantom_spec(width, lam))


def disk_phantom(width: int, radius: float, z: float | None = None, r: float = 0.0,
                 lam: float = 2.0) -> DensityField:
    """Single hole in material; the one-disk test object."""
    grid = Grid2D.centered(width)
    zc = 0.5 * (width - 1) * grid.spacing if z is None else z
    return render(PhantomSpec(grid, lam, (Disk("hole", r=r, z=zc, radius=radius),), "material"))


def hole_mask(field: DensityField) -> np.ndarray:
    """Cells that carry no material."""
    return field.values == 0


def hole_object(field: DensityField) -> DensityField:
    """Fictive object with density lam in the holes and 0 in the material.

    This is what remains after subtracting the projection of the hole-free
    object from the data; the level-set solver reconstructs it.
    """
    lam = field.lam
    return DensityField(field.grid, np.where(hole_mask(field), lam, 0.0))


def from_hole_object(holes: DensityField, lam: float) -> DensityField:
    """Inverse of :func:`hole_object` for a material-background object."""
    return DensityField(holes.grid, np.where(holes.values > 0, 0.0, lam))
