"""Command-line driver.

Exit codes: 0 success, 2 usage or validation error, 3 numerical divergence.
``ABELSETS_THREADS`` sets the default BLAS thread count (``--threads`` overrides).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from abelsets.abel import build_operator, inverse_abel, project
from abelsets.degrade import (BlurKernel, NoiseModel, add_noise, blur, blur_nonlinear,
                              noise_sigma_for_snr, subtract_reference)
from abelsets.experiment import ConfigError, ExperimentConfig, default_config_doc, run_experiment
from abelsets.levelset import DivergenceError
from abelsets.metrics import evaluate
from abelsets.objective import ContractError
from abelsets.phantom import load_spec, paper_phantom, render
from abelsets.raster import DensityField, Radiograph, RasterFormatError, export_pgm, read_raster, write_raster

EXIT_USAGE = 2
EXIT_DIVERGED = 3


class UsageError(Exception):
    pass


def _pgm_for(field, path, lo=None, hi=None):
    v = field.values
    lo = float(v.min()) if lo is None else lo
    hi = float(v.max()) if hi is None else hi
    if hi <= lo:
        hi = lo + 1.0
    export_pgm(field, path, lo, hi)


def cmd_phantom(args):
    if (args.builtin is None) == (args.spec is None):
        raise UsageError("give exactly one of --builtin WIDTH or --spec FILE")
    if args.builtin is not None:
        field = paper_phantom(args.builtin, args.lam)
    else:
        field = render(load_spec(args.spec))
    write_raster(field, args.output)
    if args.pgm:
        _pgm_for(field, args.pgm, 0.0, max(field.values.max(), 1e-300))
    print(f"wrote {args.output} ({field.grid.width}x{field.grid.height})")


def cmd_project(args):
    f = read_raster(args.input, DensityField)
    g = project(build_operator(f.grid), f)
    write_raster(g, args.output)
    if args.pgm:
        _pgm_for(g, args.pgm)


def cmd_degrade(args):
    g = read_raster(args.input, Radiograph)
    k = BlurKernel(args.blur_sigma)
    out = blur_nonlinear(k, args.nu, g) if args.nu else blur(k, g)
    if args.noise_sigma is not None:
        sigma = args.noise_sigma
    else:
        sigma = noise_sigma_for_snr(out, args.snr_db)
    out = add_noise(NoiseModel(sigma, args.seed), out)
    write_raster(out, args.output)
    print(f"seed={args.seed} noise_sigma={sigma!r}")
    if args.pgm:
        _pgm_for(out, args.pgm)


def cmd_invert(args):
    g = read_raster(args.input, Radiograph)
    f = inverse_abel(g)
    write_raster(f, args.output)
    if args.pgm:
        _pgm_for(f, args.pgm)


def cmd_prepare(args):
    d = read_raster(args.data, Radiograph)
    r = read_raster(args.reference, Radiograph)
    write_raster(subtract_reference(d, r), args.output)


def cmd_reconstruct(args):
    if (args.config is None) == (not args.default):
        raise UsageError("give a config file or --default")
    if args.default:
        cfg_doc, base = default_config_doc(), Path.cwd()
    else:
        with open(args.config) as fh:
            cfg_doc = json.load(fh)
        base = Path(args.config).resolve().parent
    if args.max_iters is not None:
        cfg_doc.setdefault("solver", {})["max_iters"] = args.max_iters
    if args.output_dir is not None:
        cfg_doc["output_dir"] = str(Path(args.output_dir).resolve())
    cfg = ExperimentConfig.from_json(cfg_doc, base_dir=base)
    manifest = run_experiment(cfg)
    print(json.dumps({k: manifest[k] for k in ("iterations", "energy_initial", "energy_final")}))
    if "metrics" in manifest:
        print(json.dumps(manifest["metrics"], sort_keys=True))


def cmd_evaluate(args):
    recon = read_raster(args.recon, DensityField)
    truth = read_raster(args.truth, DensityField)
    m = evaluate(recon, truth, axis_halfwidth=args.axis_halfwidth)
    text = json.dumps(m, indent=2, sort_keys=True)
    print(text)
    if args.output:
        Path(args.output).write_text(text + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abelsets", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--threads", type=int, default=None,
                    help="BLAS threads (default: $ABELSETS_THREADS or library default)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="render a phantom to F64R")
    p.add_argument("--builtin", type=int, metavar="WIDTH", help="built-in test object")
    p.add_argument("--spec", help="phantom spec JSON")
    p.add_argument("--lam", type=float, default=2.0, help="material density for --builtin")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--pgm")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("project", help="Abel projection of a density field")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--pgm")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("degrade", help="blur and add noise to a radiograph")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--blur-sigma", type=float, required=True)
    p.add_argument("--nu", type=float, default=None, help="use the nonlinear (intensity) blur")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--noise-sigma", type=float)
    grp.add_argument("--snr-db", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pgm")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("invert", help="direct inverse Abel transform")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--pgm")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("prepare", help="subtract the projection of the hole-free object")
    p.add_argument("--data", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("reconstruct", help="run a level-set reconstruction from a JSON config")
    p.add_argument("config", nargs="?")
    p.add_argument("--default", action="store_true", help="use the shipped configuration")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score a reconstruction against the truth")
    p.add_argument("recon")
    p.add_argument("truth")
    p.add_argument("-o", "--output")
    p.add_argument("--axis-halfwidth", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads
    if threads is None and os.environ.get("ABELSETS_THREADS"):
        threads = int(os.environ["ABELSETS_THREADS"])
    try:
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=threads):
                args.func(args)
        else:
            args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (UsageError, ConfigError, ContractError, RasterFormatError, ValueError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
