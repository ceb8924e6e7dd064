"""Config-driven synthetic experiments: phantom -> radiograph -> reconstruction -> scores."""

from __future__ import annotations

import json
import math
import os
import platform
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from abelsets import __version__
from abelsets.abel import build_operator, inverse_abel, project
from abelsets.degrade import (BlurKernel, NoiseModel, add_noise, blur, blur_nonlinear,
                              noise_sigma_for_snr, subtract_reference)
from abelsets.levelset import (DivergenceError, LevelSetField, SolverConfig, manifest_fields,
                               solve, write_trace)
from abelsets.metrics import evaluate
from abelsets.objective import Pipeline
from abelsets.phantom import (PhantomSpec, from_hole_object, hole_object, paper_phantom,
                              render)
from abelsets.raster import DensityField, Radiograph, export_pgm, read_raster, write_raster


class ConfigError(ValueError):
    """Experiment configuration failed validation."""


@dataclass
class ExperimentConfig:
    """One reproducible run.

    Exactly one source: ``phantom`` (``{"builtin": width}`` or an inline phantom
    spec), ``truth`` (F64R path, material/hole convention), or ``data`` (F64R
    radiograph of the hole object, optionally with ``reference`` subtracted).
    Noise: ``noise_sigma`` or ``snr_db`` (exactly one for synthetic sources).
    """

    solver: SolverConfig
    output_dir: str = "run"
    phantom: Optional[dict] = None
    truth: Optional[str] = None
    data: Optional[str] = None
    reference: Optional[str] = None
    blur_sigma: float = 5.0
    nonlinear_nu: Optional[float] = None
    noise_sigma: Optional[float] = None
    snr_db: Optional[float] = None
    noise_seed: int = 0
    base_dir: str = field(default=".", repr=False)

    def __post_init__(self):
        sources = [s for s in ("phantom", "truth", "data") if getattr(self, s) is not None]
        if len(sources) != 1:
            raise ConfigError(f"need exactly one of phantom/truth/data, got {sources or 'none'}")
        if self.reference is not None and self.data is None:
            raise ConfigError("reference subtraction needs a 'data' radiograph")
        if not (self.blur_sigma >= 0 and math.isfinite(self.blur_sigma)):
            raise ConfigError(f"blur_sigma must be >= 0, got {self.blur_sigma}")
        if self.nonlinear_nu is not None and not self.nonlinear_nu > 0:
            raise ConfigError(f"nonlinear_nu must be > 0, got {self.nonlinear_nu}")
        if self.data is None:
            if (self.noise_sigma is None) == (self.snr_db is None):
                raise ConfigError("give exactly one of noise_sigma or snr_db")
            if self.noise_sigma is not None and not self.noise_sigma >= 0:
                raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        for key in ("truth", "data", "reference"):
            path = getattr(self, key)
            if path is not None and not self.resolve(path).is_file():
                raise ConfigError(f"{key} file not found: {self.resolve(path)}")

    def resolve(self, path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @classmethod
    def from_json(cls, doc: dict, base_dir=".") -> "ExperimentConfig":
        doc = dict(doc)
        try:
            solver = SolverConfig.from_json(doc.pop("solver", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver: {exc}") from None
        known = set(cls.__dataclass_fields__) - {"solver", "base_dir"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        return cls(solver=solver, base_dir=str(base_dir), **doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            doc = json.load(fh)
        return cls.from_json(doc, base_dir=Path(path).resolve().parent)

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k not in ("solver", "base_dir")}
        out["solver"] = self.solver.to_json()
        return out


def default_config_doc() -> dict:
    """The shipped configuration (reference parameter set on the built-in phantom)."""
    text = resources.files("abelsets").joinpath("configs/default.json").read_text()
    return json.loads(text)


def truth_field(cfg: ExperimentConfig) -> Optional[DensityField]:
    if cfg.phantom is not None:
        if "builtin" in cfg.phantom:
            return paper_phantom(int(cfg.phantom["builtin"]), cfg.solver.lam)
        return render(PhantomSpec.from_json(cfg.phantom))
    if cfg.truth is not None:
        return read_raster(cfg.resolve(cfg.truth), DensityField)
    return None


def simulate(holes: DensityField, kernel: BlurKernel, noise: NoiseModel,
             nu: Optional[float] = None):
    """Blurred projection of the hole object, before and after noise."""
    op = build_operator(holes.grid)
    proj = project(op, holes)
    clean = blur_nonlinear(kernel, nu, proj) if nu else blur(kernel, proj)
    return clean, add_noise(noise, clean)


def snr_db(clean: Radiograph, noisy: Radiograph) -> float:
    err = noisy.values - clean.values
    return float(10 * np.log10(np.mean(clean.values**2) / np.mean(err**2)))


def prepare_inputs(cfg: ExperimentConfig):
    """Returns ``(truth or None, data radiograph, info dict)``."""
    kernel = BlurKernel(cfg.blur_sigma)
    truth = truth_field(cfg)
    info = {}
    if truth is None:
        data = read_raster(cfg.resolve(cfg.data), Radiograph)
        if cfg.reference is not None:
            data = subtract_reference(data, read_raster(cfg.resolve(cfg.reference), Radiograph))
        return None, data, info
    if not truth.binary or truth.lam != cfg.solver.lam:
        raise ConfigError(f"truth must be binary with values {{0, {cfg.solver.lam}}}")
    holes = hole_object(truth)
    op = build_operator(truth.grid)
    proj = project(op, holes)
    clean = blur_nonlinear(kernel, cfg.nonlinear_nu, proj) if cfg.nonlinear_nu else blur(kernel, proj)
    sigma = cfg.noise_sigma if cfg.noise_sigma is not None else noise_sigma_for_snr(clean, cfg.snr_db)
    data = add_noise(NoiseModel(sigma, cfg.noise_seed), clean)
    info.update(noise_sigma_effective=sigma, noise_seed=cfg.noise_seed,
                snr_db_measured=snr_db(clean, data) if sigma > 0 else None)
    return truth, data, info


def versions() -> dict:
    return {"abelsets": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run_experiment(cfg: ExperimentConfig, checkpoints: bool = True) -> dict:
    """Run and write all artifacts to ``cfg.output_dir``; returns the manifest.

    Raises DivergenceError after saving the last finite level set.
    """
    out = cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    truth, data, info = prepare_inputs(cfg)
    lam = cfg.solver.lam
    write_raster(data, out / "data.f64r")
    pipe = Pipeline(data, lam, BlurKernel(cfg.blur_sigma))

    baseline = inverse_abel(data)
    write_raster(baseline, out / "inversion.f64r")

    def save_checkpoint(n, phi: LevelSetField):
        write_raster(DensityField(phi.grid, phi.phi), out / "phi_checkpoint.f64r")
        write_raster(phi.density(lam), out / "f_checkpoint.f64r")

    try:
        res = solve(pipe, cfg.solver, checkpoint=save_checkpoint if checkpoints else None)
    except DivergenceError as exc:
        save_checkpoint(exc.iteration - 1, exc.last_good)
        write_trace(exc.trace, out / "trace.csv")
        raise

    write_raster(res.field, out / "f.f64r")
    write_raster(DensityField(res.phi.grid, res.phi.phi), out / "phi.f64r")
    export_pgm(res.field, out / "f.pgm", 0.0, lam)
    obj = from_hole_object(res.field, lam)
    write_raster(obj, out / "object.f64r")
    res.write_trace(out / "trace.csv")

    manifest = {
        "config": cfg.to_json(),
        "versions": versions(),
        **manifest_fields(cfg.solver),
        "init": res.init,
        "iterations": res.iterations,
        "empty_interface": res.empty_interface,
        "energy_initial": res.trace[0][3],
        "energy_final": res.trace[-1][3],
        **info,
    }
    if truth is not None:
        write_raster(truth, out / "truth.f64r")
        export_pgm(truth, out / "truth.pgm", 0.0, lam)
        base_obj = from_hole_object(DensityField(data.grid, np.where(baseline.values > 0.5 * lam, lam, 0.0)), lam)
        metrics = evaluate(obj, truth)
        metrics["baseline_inversion"] = evaluate(base_obj, truth)
        manifest["metrics"] = metrics
        with open(out / "metrics.json", "w") as fh:
            json.dump(metrics, fh, indent=2, sort_keys=True)
    manifest["wall_time_s"] = time.perf_counter() - t0
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
