"""Command-line front end.

Subcommands: shadow, render, bifurcation, classify, separatrix,
observer-info. Runs are config-driven and reproducible: the config format is
flat ``key = value`` lines under ``[section]`` headers (parsed here, no
external schema), every flag overrides its config key, and the only
environment hook is KERRSHADOW_OUTPUT_DIR overriding the output directory.
Exit codes: 0 success, 2 validation error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bifurcation import (
    SpinZeroError,
    classify,
    critical_eta,
    critical_lambda,
    curve_to_csv,
    diagram_scan,
    photon_ring_radii,
    sample_sigma_r,
    sample_sigma_theta,
    scan_to_csv,
    separatrix_Z,
    separatrix_r,
)
from .geodesics import IntegratorControls
from .kerr import KerrParams
from .observer import (
    ErgosphereViolationError,
    ObserverKind,
    ObserverSpec,
    TimelikeViolationError,
    named_observer,
    observer_report,
)
from .raytracer import (
    ImagePlane,
    SceneConfig,
    overlay_boundary,
    render,
    render_flat,
    write_ppm,
)
from .shadow import shadow_curve, shadow_curve_to_csv

VALIDATION_ERRORS = (ValueError, KeyError)


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict[str, dict[str, str]]:
    """Parse the flat sectioned key=value format. '#' and ';' start
    comments; section headers are [name]; keys before any header go into
    the '' section."""
    sections: dict[str, dict[str, str]] = {}
    current = sections.setdefault("", {})
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1].strip().lower(), {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value: {raw!r}")
        key, value = line.split("=", 1)
        current[key.strip().lower()] = value.strip()
    return sections


def load_config(path: str | None) -> dict[str, dict[str, str]]:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(p.read_text())


@dataclass
class RunConfig:
    """Validated run parameters assembled from config file plus flags."""

    params: KerrParams
    observer: ObserverSpec | None = None
    scene: SceneConfig = field(default_factory=SceneConfig)
    plane: ImagePlane | None = None
    controls: IntegratorControls = field(default_factory=IntegratorControls)
    out_dir: Path = Path(".")


def _get(cfg, section, key, flag_value, default=None, cast=float):
    """Flag beats config beats default."""
    if flag_value is not None:
        return flag_value
    sec = cfg.get(section, {})
    if key in sec:
        raw = sec[key]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)
    return default


def _build_observer(cfg, args, params: KerrParams) -> ObserverSpec:
    r0 = _get(cfg, "observer", "r0", getattr(args, "r0", None))
    theta0 = _get(cfg, "observer", "theta0", getattr(args, "theta0", None),
                  default=math.pi / 2)
    phi0 = _get(cfg, "observer", "phi0", getattr(args, "phi0", None),
                default=0.0)
    if r0 is None:
        raise ConfigError("observer r0 is required (flag --r0 or [observer] r0)")
    kind = _get(cfg, "observer", "kind", getattr(args, "observer", None),
                default=None, cast=str)
    omega = _get(cfg, "observer", "omega", getattr(args, "omega", None))
    if kind is not None:
        obs = named_observer(kind, r0, theta0, params, phi0=phi0)
        if omega is not None and abs(omega - obs.Omega) > 0.0:
            raise ConfigError(
                "give either a named observer kind or an explicit omega, "
                "not both"
            )
        return obs
    if omega is None:
        omega = 0.0
    return ObserverSpec(params=params, r0=r0, theta0=theta0, Omega=omega,
                        phi0=phi0)


def _build_run(cfg, args, need_observer: bool, need_plane: bool) -> RunConfig:
    a = _get(cfg, "observer", "a", getattr(args, "a", None))
    if a is None:
        raise ConfigError("spin a is required (flag --a or [observer] a)")
    params = KerrParams(a)

    scene = SceneConfig(
        r_celestial=_get(cfg, "scene", "r_celestial",
                         getattr(args, "r_celestial", None), default=1000.0))
    controls = IntegratorControls(
        rtol=_get(cfg, "integrator", "rtol", getattr(args, "rtol", None),
                  default=1e-10),
        atol=_get(cfg, "integrator", "atol", getattr(args, "atol", None),
                  default=1e-12),
        r_max=_get(cfg, "integrator", "r_max", None, default=1000.0),
        max_steps=int(_get(cfg, "integrator", "max_steps",
                           getattr(args, "max_steps", None),
                           default=1_000_000, cast=int)),
        sigma_max=_get(cfg, "integrator", "sigma_max",
                       getattr(args, "sigma_max", None), default=200.0),
    )

    run = RunConfig(params=params, scene=scene, controls=controls)
    if need_observer:
        run.observer = _build_observer(cfg, args, params)
    if need_plane:
        run.plane = ImagePlane(
            width=int(_get(cfg, "image", "width",
                           getattr(args, "width", None), default=512,
                           cast=int)),
            height=int(_get(cfg, "image", "height",
                            getattr(args, "height", None), default=512,
                            cast=int)),
            extent=_get(cfg, "image", "extent",
                        getattr(args, "extent", None), default=2.5),
        )
    out_dir = _get(cfg, "output", "dir", getattr(args, "out_dir", None),
                   default=".", cast=str)
    out_dir = os.environ.get("KERRSHADOW_OUTPUT_DIR", out_dir)
    run.out_dir = Path(out_dir)
    return run


def _resolve_out(run: RunConfig, name: str) -> Path:
    run.out_dir.mkdir(parents=True, exist_ok=True)
    return run.out_dir / name


def cmd_shadow(args) -> int:
    cfg = load_config(args.config)
    run = _build_run(cfg, args, need_observer=True, need_plane=False)
    curve = shadow_curve(run.observer, n_samples=args.samples)
    out = _resolve_out(run, args.out)
    out.write_text(shadow_curve_to_csv(curve))
    print(f"wrote {len(curve)} boundary samples to {out}")
    return 0


def cmd_render(args) -> int:
    cfg = load_config(args.config)
    run = _build_run(cfg, args, need_observer=True, need_plane=True)
    if args.flat:
        result = render_flat(run.observer, run.scene, run.plane)
    else:
        result = render(run.observer, run.scene, run.plane,
                        controls=run.controls, workers=args.workers)
    image = result.image
    if args.overlay_boundary:
        curve = shadow_curve(run.observer, n_samples=4096)
        image = overlay_boundary(image, curve, run.plane,
                                 color=run.scene.overlay_color)
    out = _resolve_out(run, args.out)
    write_ppm(out, image)
    print(f"wrote {run.plane.width}x{run.plane.height} image to {out}")
    if args.manifest:
        man = _resolve_out(run, args.manifest)
        man.write_text(result.manifest(run.observer, run.scene, run.plane,
                                       run.controls))
        print(f"wrote manifest to {man}")
    return 0


def cmd_bifurcation(args) -> int:
    cfg = load_config(args.config)
    run = _build_run(cfg, args, need_observer=False, need_plane=False)
    params = run.params
    try:
        r_points = sample_sigma_r(params, n=args.samples)
    except SpinZeroError as exc:
        raise SpinZeroError(
            f"bifurcation curves need a > 0: {exc}"
        ) from exc
    out_r = _resolve_out(run, "sigma_r.csv")
    out_r.write_text(curve_to_csv(r_points))
    th_points = (sample_sigma_theta(params, +1, n=args.samples)
                 + sample_sigma_theta(params, -1, n=args.samples))
    out_th = _resolve_out(run, "sigma_theta.csv")
    out_th.write_text(curve_to_csv(th_points))
    scan = diagram_scan(params, n_lam=args.raster, n_eta=args.raster)
    out_scan = _resolve_out(run, "feasibility.csv")
    out_scan.write_text(scan_to_csv(scan))
    r1, r2 = photon_ring_radii(params)
    print(f"photon shell [r1, r2] = [{r1:.12g}, {r2:.12g}]")
    print(f"wrote {out_r}, {out_th}, {out_scan}")
    return 0


def cmd_classify(args) -> int:
    params = KerrParams(args.a)
    result = classify(args.lam, args.eta, args.r_start, params)
    print(f"a        = {args.a:.12g}")
    print(f"lambda   = {args.lam:.12g}")
    print(f"eta      = {args.eta:.12g}")
    print(f"r_start  = {args.r_start:.12g}")
    print(f"class    = {result.kind.value}")
    print(f"vortical = {'yes' if result.vortical else 'no'}")
    return 0


def cmd_separatrix(args) -> int:
    cfg = load_config(args.config)
    run = _build_run(cfg, args, need_observer=False, need_plane=False)
    params = run.params
    z = separatrix_Z(args.rc, params)
    sig = np.linspace(0.0, args.sigma_end, args.samples)
    if args.r0 == args.rc:
        r = np.full_like(sig, args.rc)
    else:
        r = separatrix_r(sig, args.r0, args.rc, params)
    # equatorial azimuth by cumulative trapezoid on a 20x finer grid
    lam = critical_lambda(args.rc, params)
    fine = np.linspace(0.0, args.sigma_end, 20 * (args.samples - 1) + 1)
    if args.r0 == args.rc:
        rf = np.full_like(fine, args.rc)
    else:
        rf = separatrix_r(fine, args.r0, args.rc, params)
    a = params.a
    delta = rf * rf - 2.0 * rf + a * a
    dphi = a * (rf * rf + a * a - a * lam) / delta - a + lam
    phi_fine = np.concatenate(
        [[0.0], np.cumsum(0.5 * (dphi[1:] + dphi[:-1]) * np.diff(fine))])
    phi = phi_fine[::20]
    out = _resolve_out(run, args.out)
    lines = ["sigma,r,phi"]
    for s_, r_, p_ in zip(sig, r, phi):
        lines.append(f"{s_:.17g},{r_:.17g},{p_:.17g}")
    out.write_text("\n".join(lines) + "\n")
    print(f"r_c = {args.rc:.12g}, Z = {z:.12g}, lambda = {lam:.12g}, "
          f"eta = {critical_eta(args.rc, params):.12g}")
    print(f"wrote {out}")
    return 0


def cmd_observer_info(args) -> int:
    cfg = load_config(args.config)
    run = _build_run(cfg, args, need_observer=True, need_plane=False)
    sys.stdout.write(observer_report(run.observer))
    return 0


def _add_common(p, observer=False, image=False):
    p.add_argument("--config", default=None, help="config file path")
    p.add_argument("--a", type=float, default=None, help="dimensionless spin")
    p.add_argument("--out-dir", default=None,
                   help="output directory (env KERRSHADOW_OUTPUT_DIR wins)")
    if observer:
        p.add_argument("--r0", type=float, default=None)
        p.add_argument("--theta0", type=float, default=None)
        p.add_argument("--phi0", type=float, default=None)
        p.add_argument("--omega", type=float, default=None,
                       help="observer angular velocity")
        p.add_argument("--observer", choices=[k.value for k in ObserverKind],
                       default=None, help="named observer kind")
    if image:
        p.add_argument("--width", type=int, default=None)
        p.add_argument("--height", type=int, default=None)
        p.add_argument("--extent", type=float, default=None,
                       help="half-width of the image-plane window")
        p.add_argument("--r-celestial", dest="r_celestial", type=float,
                       default=None)
        p.add_argument("--rtol", type=float, default=None)
        p.add_argument("--atol", type=float, default=None)
        p.add_argument("--max-steps", dest="max_steps", type=int, default=None)
        p.add_argument("--sigma-max", dest="sigma_max", type=float,
                       default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kerrshadow",
        description="Rotating-black-hole light bending: shadow boundary, "
                    "bifurcation curves, ray-traced images.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shadow", help="export the analytic shadow boundary")
    _add_common(p, observer=True)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--out", default="shadow.csv")
    p.set_defaults(func=cmd_shadow)

    p = sub.add_parser("render", help="backward ray trace an image")
    _add_common(p, observer=True, image=True)
    p.add_argument("--out", default="render.ppm")
    p.add_argument("--manifest", default=None,
                   help="also write a key=value run manifest")
    p.add_argument("--overlay-boundary", action="store_true",
                   help="rasterize the analytic boundary in the overlay color")
    p.add_argument("--flat", action="store_true",
                   help="straight-ray control image (no gravity)")
    p.add_argument("--workers", type=int, default=None,
                   help="numba thread count (output is identical for any value)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("bifurcation",
                       help="export critical curves and feasibility raster")
    _add_common(p)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--raster", type=int, default=201,
                   help="feasibility raster resolution per axis")
    p.set_defaults(func=cmd_bifurcation)

    p = sub.add_parser("classify", help="classify a ray by its integrals")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--lam", type=float, required=True,
                   help="impact parameter lambda = L/E")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--r-start", dest="r_start", type=float, required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("separatrix",
                       help="closed-form separatrix r(sigma), phi(sigma)")
    _add_common(p)
    p.add_argument("--rc", type=float, required=True,
                   help="spherical orbit radius in [r1, r2]")
    p.add_argument("--r0", type=float, required=True,
                   help="initial radius r(0) >= r_c")
    p.add_argument("--sigma-end", dest="sigma_end", type=float, default=5.0)
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--out", default="separatrix.csv")
    p.set_defaults(func=cmd_separatrix)

    p = sub.add_parser("observer-info",
                       help="report admissible Omega range, u0 and tetrad")
    _add_common(p, observer=True)
    p.set_defaults(func=cmd_observer_info)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 1
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
