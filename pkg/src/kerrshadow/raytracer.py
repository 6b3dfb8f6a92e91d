"""Deterministic backward ray tracing of the observer's sky onto a
four-colored celestial sphere.

Every pixel of the image plane window is mapped through the inverse
stereographic projection to sky angles, launched as a null ray and
integrated with the time reversal tau -> -tau. Rays reaching the horizon
shell, exhausting their step budget or trapped near the photon shell render
black; rays reaching the celestial sphere take the color of the quadrant
they hit. Pixels are fully independent, so the output is bitwise identical
for any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._accel import USE_NUMBA
from .geodesics import IntegratorControls
from .kerr import KerrParams, horizon_radius
from .observer import ObserverSpec, observer_kernel_block
from .shadow import ShadowCurve

BLACK = (0, 0, 0)
OVERLAY_RED = (255, 0, 0)
ERROR_MAGENTA = (255, 0, 255)
# quadrant order: (north, first azimuth half), (north, second), (south,
# first), (south, second); the azimuth seam sits at the observer's phi0
DEFAULT_PALETTE = (
    (46, 174, 82),    # green
    (58, 98, 227),    # blue
    (232, 146, 38),   # orange
    (238, 220, 64),   # yellow
)


class RenderError(RuntimeError):
    """More than the tolerated fraction of pixels failed to integrate."""


@dataclass(frozen=True)
class SceneConfig:
    """Celestial sphere and coloring."""

    r_celestial: float = 1000.0
    palette: tuple = DEFAULT_PALETTE
    shadow_color: tuple = BLACK
    overlay_color: tuple = OVERLAY_RED
    error_color: tuple = ERROR_MAGENTA

    def color_table(self) -> np.ndarray:
        """Index -> RGB for the kernel's color indices 0..5."""
        table = np.zeros((6, 3), dtype=np.uint8)
        table[0] = self.shadow_color
        for q in range(4):
            table[1 + q] = self.palette[q]
        table[5] = self.error_color
        return table


@dataclass(frozen=True)
class ImagePlane:
    """Pixel grid over the plane window [-extent, extent]^2; row 0 is the
    top of the image (positive Y), column 0 the left (negative X)."""

    width: int
    height: int
    extent: float

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.extent <= 0.0:
            raise ValueError("image plane needs positive size and extent")

    def pixel_to_plane(self, i: float, j: float) -> tuple[float, float]:
        x = -self.extent + (i + 0.5) * (2.0 * self.extent / self.width)
        y = self.extent - (j + 0.5) * (2.0 * self.extent / self.height)
        return x, y

    def plane_to_pixel(self, x: float, y: float) -> tuple[float, float]:
        i = (x + self.extent) * self.width / (2.0 * self.extent) - 0.5
        j = (self.extent - y) * self.height / (2.0 * self.extent) - 0.5
        return i, j


@dataclass
class RenderResult:
    image: np.ndarray          # (height, width, 3) uint8
    indices: np.ndarray        # (height, width) uint8 raw class indices
    counters: dict = field(default_factory=dict)

    def manifest(self, obs: ObserverSpec, scene: SceneConfig,
                 plane: ImagePlane, controls: IntegratorControls) -> str:
        p = obs.params
        pairs = [
            ("a", f"{p.a:.17g}"),
            ("r0", f"{obs.r0:.17g}"),
            ("theta0", f"{obs.theta0:.17g}"),
            ("omega", f"{obs.Omega:.17g}"),
            ("phi0", f"{obs.phi0:.17g}"),
            ("r_celestial", f"{scene.r_celestial:.17g}"),
            ("width", str(plane.width)),
            ("height", str(plane.height)),
            ("extent", f"{plane.extent:.17g}"),
            ("rtol", f"{controls.rtol:.17g}"),
            ("atol", f"{controls.atol:.17g}"),
            ("delta_h", f"{controls.delta_h:.17g}"),
            ("max_steps", str(controls.max_steps)),
            ("sigma_max", f"{controls.sigma_max:.17g}"),
        ]
        pairs += sorted(self.counters.items())
        return "".join(f"{k}={v}\n" for k, v in pairs)


def _integrator_args(params: KerrParams, scene: SceneConfig,
                     controls: IntegratorControls) -> tuple:
    r_inner = horizon_radius(params) * (1.0 + controls.delta_h)
    return (controls.rtol, controls.atol, r_inner, scene.r_celestial,
            controls.max_steps, controls.sigma_max)


def trace_pixel(i: int, j: int, obs: ObserverSpec, scene: SceneConfig,
                plane: ImagePlane,
                controls: IntegratorControls = IntegratorControls(),
                ) -> tuple[int, int, int]:
    """Color of a single pixel (useful for spot checks; render() is the
    batch path)."""
    if not (0 <= i < plane.width and 0 <= j < plane.height):
        raise ValueError(f"pixel ({i}, {j}) outside the image")
    x, y = plane.pixel_to_plane(i, j)
    blk = observer_kernel_block(obs)
    idx = _kernels.trace_pixel_index(
        x, y, *blk, *_integrator_args(obs.params, scene, controls))
    return tuple(int(v) for v in scene.color_table()[idx])


def render(obs: ObserverSpec, scene: SceneConfig, plane: ImagePlane,
           controls: IntegratorControls = IntegratorControls(),
           workers: int | None = None,
           max_failure_fraction: float = 1e-3) -> RenderResult:
    """Trace the full pixel grid.

    workers pins the numba thread count for this call (output bytes do not
    depend on it); the run fails if more than max_failure_fraction of the
    pixels report integrator step failures.
    """
    blk = observer_kernel_block(obs)
    args = _integrator_args(obs.params, scene, controls)

    if workers is not None and USE_NUMBA:
        import numba

        previous = numba.get_num_threads()
        numba.set_num_threads(max(1, min(workers, numba.config.NUMBA_NUM_THREADS)))
        try:
            idx = _kernels.render_indices(plane.width, plane.height,
                                          plane.extent, *blk, *args)
        finally:
            numba.set_num_threads(previous)
    else:
        idx = _kernels.render_indices(plane.width, plane.height,
                                      plane.extent, *blk, *args)

    counts = np.bincount(idx.ravel(), minlength=6)
    failures = int(counts[5])
    total = plane.width * plane.height
    counters = {
        "pixels": total,
        "horizon_or_trapped": int(counts[0]),
        "escaped": int(counts[1:5].sum()),
        "failures": failures,
    }
    if failures > max_failure_fraction * total:
        raise RenderError(
            f"{failures} of {total} pixels failed integration "
            f"(> {max_failure_fraction:.1%})"
        )
    image = scene.color_table()[idx]
    return RenderResult(image=image, indices=idx, counters=counters)


def render_flat(obs: ObserverSpec, scene: SceneConfig, plane: ImagePlane,
                ) -> RenderResult:
    """Straight-ray control image of the celestial sphere (integrator
    bypassed, spin ignored)."""
    idx = _kernels.render_indices_flat(plane.width, plane.height,
                                       plane.extent, obs.r0, obs.theta0,
                                       obs.phi0, scene.r_celestial)
    counters = {
        "pixels": plane.width * plane.height,
        "horizon_or_trapped": 0,
        "escaped": plane.width * plane.height,
        "failures": 0,
    }
    image = scene.color_table()[idx]
    return RenderResult(image=image, indices=idx, counters=counters)


def overlay_boundary(image: np.ndarray, curve: ShadowCurve,
                     plane: ImagePlane,
                     color: tuple[int, int, int] = OVERLAY_RED) -> np.ndarray:
    """Rasterize the analytic boundary over a rendered image (returns a
    copy; the input buffer is untouched). Curve samples are joined by dense
    polyline segments so no gaps open where the curve crosses pixels fast."""
    out = image.copy()
    n = len(curve)
    if n == 0:
        return out
    ii = np.empty(n)
    jj = np.empty(n)
    for k in range(n):
        ii[k], jj[k] = plane.plane_to_pixel(curve.X[k], curve.Y[k])
    if n == 1:
        i, j = int(round(ii[0])), int(round(jj[0]))
        if 0 <= i < plane.width and 0 <= j < plane.height:
            out[j, i] = color
        return out
    for k in range(n):
        k2 = (k + 1) % n  # the sampled curve is closed
        steps = int(max(abs(ii[k2] - ii[k]), abs(jj[k2] - jj[k]))) + 1
        ts = np.linspace(0.0, 1.0, steps + 1)
        pi = np.rint(ii[k] + ts * (ii[k2] - ii[k])).astype(int)
        pj = np.rint(jj[k] + ts * (jj[k2] - jj[k])).astype(int)
        ok = (pi >= 0) & (pi < plane.width) & (pj >= 0) & (pj < plane.height)
        out[pj[ok], pi[ok]] = color
    return out


def write_ppm(path, image: np.ndarray) -> None:
    """Binary PPM (P6), 8-bit RGB, rows top to bottom."""
    h, w, c = image.shape
    assert c == 3 and image.dtype == np.uint8
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P6":
            raise ValueError(f"not a binary PPM file: magic={magic!r}")
        dims = fh.readline().split()
        w, h = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        if maxval != 255:
            raise ValueError(f"unsupported maxval {maxval}")
        data = fh.read(w * h * 3)
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3)
