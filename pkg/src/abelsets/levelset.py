"""Explicit level-set evolution of the hole/material interface.

The interface moves with normal speed ``S = lam * A f + beta * curv`` where
``A f = H*F*g - H*F*FH f`` and ``f = lam * 1{phi > 0}``. With material at
``phi > 0`` the descent flow is ``phi_t = S |grad phi|``: cells where the data
ask for more material grow, and the curvature term (``-1/R`` on a disk)
shrinks convex blobs.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from abelsets.abel import inverse_abel_array
from abelsets.objective import TV_ESTIMATOR, EnergyReport, Pipeline, data_misfit, tv_length
from abelsets.raster import DensityField, Grid2D
from abelsets.redistance import signed_distance

log = logging.getLogger(__name__)

TRACE_HEADER = ("iter", "e1", "e2", "total", "interface_cells")


class DivergenceError(FloatingPointError):
    """Non-finite values appeared in phi; carries the last finite iterate."""

    def __init__(self, iteration: int, last_good: "LevelSetField", trace=None):
        super().__init__(f"level set diverged at iteration {iteration}")
        self.iteration = iteration
        self.last_good = last_good
        self.trace = trace or []


@dataclass
class LevelSetField:
    grid: Grid2D
    phi: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.phi.shape != self.grid.shape:
            raise ValueError("phi shape does not match grid")

    def density(self, lam: float) -> DensityField:
        return DensityField(self.grid, np.where(self.phi > 0, lam, 0.0))


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 10.0
    lam: float = 2.0
    dt: float = 1e-4
    dx: float = 1.0
    reinit_every: int = 500
    max_iters: int = 20000
    eps_curv: Optional[float] = None  # None -> 1e-6 * dx**2
    init: str = "from_inversion"
    seed_circles: tuple = ()  # ((r, z, radius), ...) in length units, mirrored
    trace_every: int = 100
    seed: int = 0  # recorded for provenance; the solver draws no random numbers
    flip_sign: bool = False
    legacy_scheme: bool = False
    cfl: Optional[float] = 0.5  # cap |data speed| * dt <= cfl * dx; None disables


    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.dx > 0:
            raise ValueError(f"dx must be > 0, got {self.dx}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be an integer >= 1, got {self.max_iters}")
        if int(self.reinit_every) != self.reinit_every or self.reinit_every < 1:
            raise ValueError(f"reinit_every must be an integer >= 1, got {self.reinit_every}")
        if int(self.trace_every) != self.trace_every or self.trace_every < 1:
            raise ValueError(f"trace_every must be an integer >= 1, got {self.trace_every}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if self.eps_curv is not None and not self.eps_curv > 0:
            raise ValueError(f"eps_curv must be > 0, got {self.eps_curv}")
        if self.cfl is not None and not self.cfl > 0:
            raise ValueError(f"cfl must be > 0 or None, got {self.cfl}")
        if self.init not in ("from_inversion", "seed_circles"):
            raise ValueError(f"init must be 'from_inversion' or 'seed_circles', got {self.init!r}")
        object.__setattr__(self, "seed_circles",
                           tuple(tuple(float(v) for v in c) for c in self.seed_circles))
        for c in self.seed_circles:
            if len(c) != 3 or c[2] <= 0:
                raise ValueError(f"seed circle must be (r, z, radius>0), got {c}")

    @property
    def beta(self) -> float:
        return 0.5 * self.alpha

    @property
    def speed_cap(self) -> float:
        return math.inf if self.cfl is None else self.cfl * self.dx / self.dt

    @property
    def eps(self) -> float:
        return 1e-6 * self.dx**2 if self.eps_curv is None else self.eps_curv

    def to_json(self) -> dict:
        d = asdict(self)
        d["seed_circles"] = [list(c) for c in self.seed_circles]
        return d

    @classmethod
    def from_json(cls, doc: dict) -> "SolverConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown solver fields: {sorted(extra)}")
        return cls(**doc)


# -- stencils ------------------------------------------------------------

def _pad(phi):
    return np.pad(phi, 1, mode="edge")


def curvature(phi: np.ndarray, spacing: float = 1.0, eps: float | None = None) -> np.ndarray:
    """div(grad phi / |grad phi|) from central differences, clamped to +-1/spacing."""
    if eps is None:
        eps = 1e-6 * spacing**2
    if not eps > 0:
        raise ValueError("eps must be > 0")
    p = _pad(phi)
    h = spacing
    c = p[1:-1, 1:-1]
    px = (p[1:-1, 2:] - p[1:-1, :-2]) / (2 * h)
    py = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2 * h)
    pxx = (p[1:-1, 2:] - 2 * c + p[1:-1, :-2]) / h**2
    pyy = (p[2:, 1:-1] - 2 * c + p[:-2, 1:-1]) / h**2
    pxy = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4 * h * h)
    num = pxx * py * py - 2 * px * py * pxy + pyy * px * px
    k = num / (px * px + py * py + eps) ** 1.5
    return np.clip(k, -1.0 / h, 1.0 / h)


def central_gradient_norm(phi: np.ndarray, spacing: float = 1.0) -> np.ndarray:
    p = _pad(phi)
    px = (p[1:-1, 2:] - p[1:-1, :-2]) / (2 * spacing)
    py = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2 * spacing)
    return np.sqrt(px * px + py * py)


def upwind_gradient_norm(phi: np.ndarray, speed, spacing: float = 1.0) -> np.ndarray:
    """Godunov-switched |grad phi| for ``phi_t + speed |grad phi| = 0``.

    ``speed < 0`` uses ``max(D+x,0)^2 + max(D+y,0)^2 + min(D-x,0)^2 + min(D-y,0)^2``,
    ``speed >= 0`` the mirrored combination. Replicated edges make the outward
    one-sided difference zero at the border.
    """
    p = _pad(phi)
    c = p[1:-1, 1:-1]
    dxp = (p[1:-1, 2:] - c) / spacing
    dxm = (c - p[1:-1, :-2]) / spacing
    dyp = (p[2:, 1:-1] - c) / spacing
    dym = (c - p[:-2, 1:-1]) / spacing
    neg = (np.maximum(dxp, 0) ** 2 + np.maximum(dyp, 0) ** 2
           + np.minimum(dxm, 0) ** 2 + np.minimum(dym, 0) ** 2)
    pos = (np.maximum(dxm, 0) ** 2 + np.maximum(dym, 0) ** 2
           + np.minimum(dxp, 0) ** 2 + np.minimum(dyp, 0) ** 2)
    return np.sqrt(np.where(np.asarray(speed) < 0, neg, pos))


def interface_cells(phi: np.ndarray) -> int:
    """Cells with a 4-neighbour on the other side of the zero level."""
    s = phi > 0
    edge = np.zeros_like(s)
    dh = s[:, 1:] != s[:, :-1]
    dv = s[1:, :] != s[:-1, :]
    edge[:, 1:] |= dh
    edge[:, :-1] |= dh
    edge[1:, :] |= dv
    edge[:-1, :] |= dv
    return int(edge.sum())


# -- reinitialization and initial fields ------------------------------------

def reinitialize(phi: LevelSetField) -> tuple[LevelSetField, bool]:
    """Replace phi by the signed distance to its own zero set.

    Returns ``(field, found)``; ``found`` is False (and phi is returned
    unchanged) when there is no zero crossing.
    """
    d, found = signed_distance(phi.phi, phi.grid.spacing)
    if not found:
        return LevelSetField(phi.grid, phi.phi.copy()), False
    return LevelSetField(phi.grid, d), True


def from_mask(grid: Grid2D, mask: np.ndarray) -> LevelSetField:
    """Signed distance whose zero set runs midway between mask and non-mask cells."""
    psi = np.where(mask, 0.5, -0.5) * grid.spacing
    d, _ = signed_distance(psi, grid.spacing)
    return LevelSetField(grid, d)


def circles_field(grid: Grid2D, circles: Sequence[tuple]) -> LevelSetField:
    """Union of mirrored disks ``(r, z, radius)``, as ``max(radius - distance)``."""
    r = np.abs(grid.x)[None, :] + 0.5 * grid.spacing
    z = grid.z[:, None]
    phi = np.full(grid.shape, -np.inf)
    for rc, zc, rad in circles:
        phi = np.maximum(phi, rad - np.hypot(r - rc, z - zc))
    return LevelSetField(grid, phi)


def seed_lattice(grid: Grid2D) -> tuple:
    """Regular lattice of small seed disks covering the grid (fallback init)."""
    h = grid.spacing
    r_max = (grid.width - 1 - grid.origin) * h
    z_max = (grid.height - 1) * h
    step = max(min(r_max, z_max) / 4.0, 4 * h)
    rad = 0.25 * step
    rs = np.arange(0.5 * step, r_max, step)
    zs = np.arange(0.5 * step, z_max, step)
    return tuple((float(a), float(b), float(rad)) for b in zs for a in rs)


def initial_field(p: Pipeline, cfg: SolverConfig) -> tuple[LevelSetField, str]:
    grid = p.grid
    if cfg.init == "from_inversion":
        inv = inverse_abel_array(p.data.values, grid)
        mask = inv > 0.5 * cfg.lam
        if mask.any() and not mask.all():
            return from_mask(grid, mask), "from_inversion"
        log.warning("thresholded inversion has no interface; falling back to seed lattice")
        circles = cfg.seed_circles or seed_lattice(grid)
    else:
        circles = cfg.seed_circles or seed_lattice(grid)
    phi = circles_field(grid, circles)
    return reinitialize(phi)[0], "seed_circles"


# -- time stepping -------------------------------------------------------

def data_speed(p: Pipeline, phi: np.ndarray) -> np.ndarray:
    """lam * A(lam 1{phi>0}) = lam g* - lam^2 G(1{phi>0})."""
    ind = (phi > 0).astype(np.float64)
    return p.lam * p.gstar.values - p.lam**2 * p.normal_array(ind)


def update(phi: np.ndarray, vdata: Optional[np.ndarray], cfg: SolverConfig) -> np.ndarray:
    """Time derivative of phi for the given data speed (None = curvature only)."""
    h = cfg.dx
    sign = -1.0 if cfg.flip_sign else 1.0
    vcurv = cfg.beta * curvature(phi, h, cfg.eps) if cfg.beta else 0.0
    cap = cfg.speed_cap
    if cfg.legacy_scheme:
        s = sign * ((0.0 if vdata is None else vdata) + vcurv)
        s = np.clip(s, -cap, cap)
        return s * upwind_gradient_norm(phi, -s, h)
    out = sign * vcurv * central_gradient_norm(phi, h) if cfg.beta else np.zeros_like(phi)
    if vdata is not None:
        v = np.clip(sign * vdata, -cap, cap)
        # phi_t = v |grad phi|  <=>  phi_t + (-v) |grad phi| = 0
        out = out + v * upwind_gradient_norm(phi, -v, h)
    return out


def step(p: Optional[Pipeline], phi: LevelSetField, cfg: SolverConfig,
         iteration: int = 0, dt: Optional[float] = None) -> LevelSetField:
    """One explicit Euler step; ``p=None`` evolves under curvature alone.

    ``dt`` overrides ``cfg.dt`` for this step only (0 leaves phi unchanged).
    """
    if p is not None and p.grid != phi.grid:
        raise ValueError("pipeline and level set grids differ")
    dt = cfg.dt if dt is None else dt
    if not dt >= 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    if dt == 0:
        return LevelSetField(phi.grid, phi.phi.copy())
    vdata = None if p is None else data_speed(p, phi.phi)
    with np.errstate(over="ignore", invalid="ignore"):
        # non-finite values are caught below and reported as divergence
        new = phi.phi + dt * update(phi.phi, vdata, cfg)
    if not np.all(np.isfinite(new)):
        raise DivergenceError(iteration, phi)
    return LevelSetField(phi.grid, new)


def energy_of(p: Pipeline, phi: np.ndarray, alpha: float) -> EnergyReport:
    ind = (phi > 0).astype(np.float64)
    e1 = data_misfit(p, p.lam * ind)
    e2 = tv_length(ind, p.grid.spacing)
    return EnergyReport(e1, e2, e1 + alpha * e2, alpha)


@dataclass
class SolveResult:
    field: DensityField
    phi: LevelSetField
    trace: list = field(default_factory=list)
    init: str = "from_inversion"
    empty_interface: bool = False
    iterations: int = 0

    def write_trace(self, path) -> None:
        write_trace(self.trace, path)


def write_trace(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in rows:
            w.writerow([r[0], repr(r[1]), repr(r[2]), repr(r[3]), r[4]])


def solve(p: Pipeline, cfg: SolverConfig,
          phi0: Optional[LevelSetField] = None,
          checkpoint: Optional[Callable[[int, LevelSetField], None]] = None) -> SolveResult:
    """Run ``cfg.max_iters`` explicit steps from the configured initial field.

    Reinitializes every ``cfg.reinit_every`` iterations and records the energy
    at iteration 0, every ``cfg.trace_every`` iterations, and at the end.
    """
    if abs(cfg.dx - p.grid.spacing) > 1e-12 * p.grid.spacing:
        raise ValueError(f"config dx={cfg.dx} differs from grid spacing {p.grid.spacing}")
    if abs(cfg.lam - p.lam) > 1e-12 * p.lam:
        raise ValueError(f"config lam={cfg.lam} differs from pipeline lam {p.lam}")
    if phi0 is None:
        phi, how = initial_field(p, cfg)
    else:
        phi, how = phi0, "given"

    trace = []

    def record(n, a):
        e = energy_of(p, a, cfg.alpha)
        trace.append((n, e.e1, e.e2, e.total, interface_cells(a)))

    record(0, phi.phi)
    empty = False
    n = 0
    for n in range(1, cfg.max_iters + 1):
        try:
            phi = step(p, phi, cfg, n)
        except DivergenceError as exc:
            exc.trace = trace
            raise
        if n % cfg.reinit_every == 0:
            phi, found = reinitialize(phi)
            if not found:
                log.warning("zero level set vanished at iteration %d; stopping", n)
                empty = True
                break
            if checkpoint is not None:
                checkpoint(n, phi)
        if n % cfg.trace_every == 0:
            record(n, phi.phi)
    if trace[-1][0] != n:
        record(n, phi.phi)
    return SolveResult(phi.density(p.lam), phi, trace, how, empty, n)


def manifest_fields(cfg: SolverConfig) -> dict:
    return {
        "tv_estimator": TV_ESTIMATOR,
        "sign_convention": "flipped (phi_t = -S|grad phi|)" if cfg.flip_sign else "descent (material phi>0, phi_t = S|grad phi|)",
        "scheme": "legacy-single-upwind" if cfg.legacy_scheme else "upwind-advection+central-curvature",
    }
