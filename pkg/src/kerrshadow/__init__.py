"""Null geodesics, bifurcation structure, shadow boundary and backward ray
tracing around rotating black holes."""

from ._accel import USE_NUMBA, backend_name
from .bifurcation import (
    classify,
    photon_ring_radii,
    separatrix_r,
    separatrix_Z,
    sigma_r,
    sigma_theta,
)
from .geodesics import (
    ConservedSet,
    IntegratorControls,
    PhaseState,
    TerminationReason,
    TrajectorySample,
    carter_integral,
    hamiltonian,
    integrate,
    polar_potential,
    radial_potential,
    state_from_integrals,
    turning_points,
)
from .kerr import (
    BLPoint,
    KerrParams,
    MetricScalars,
    horizon_radius,
    metric_scalars,
    to_cartesian,
)
from .observer import (
    ObserverKind,
    ObserverSpec,
    Tetrad,
    named_observer,
    omega_bounds,
    tetrad,
    u_time_component,
)
from .raytracer import ImagePlane, SceneConfig, overlay_boundary, render
from .shadow import (
    DirectionAngles,
    ShadowCurve,
    angles_from_ray,
    boundary_angles,
    ray_from_angles,
    shadow_curve,
    stereographic,
    theta_star_roots,
)

__version__ = "0.1.0"

__all__ = [
    "BLPoint",
    "ConservedSet",
    "DirectionAngles",
    "ImagePlane",
    "IntegratorControls",
    "KerrParams",
    "MetricScalars",
    "ObserverKind",
    "ObserverSpec",
    "PhaseState",
    "SceneConfig",
    "ShadowCurve",
    "Tetrad",
    "TerminationReason",
    "TrajectorySample",
    "USE_NUMBA",
    "angles_from_ray",
    "backend_name",
    "boundary_angles",
    "carter_integral",
    "classify",
    "hamiltonian",
    "horizon_radius",
    "integrate",
    "metric_scalars",
    "named_observer",
    "omega_bounds",
    "overlay_boundary",
    "photon_ring_radii",
    "polar_potential",
    "radial_potential",
    "ray_from_angles",
    "render",
    "separatrix_Z",
    "separatrix_r",
    "shadow_curve",
    "sigma_r",
    "sigma_theta",
    "state_from_integrals",
    "stereographic",
    "tetrad",
    "theta_star_roots",
    "to_cartesian",
    "turning_points",
    "u_time_component",
    "__version__",
]
