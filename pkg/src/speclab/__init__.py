"""speclab: Dirichlet eigenpairs and boundary flux statistics on strictly convex domains."""

__version__ = "0.1.0"

from . import analytic, functionals, geometry, kernels, mps, packets  # noqa: E402
from .analytic import ball_spectrum, disk_spectrum  # noqa: E402
from .geometry import build_domain, build_grid, g_bounds  # noqa: E402
from .mps import MpsConfig, mps_spectrum, scan_and_refine  # noqa: E402

__all__ = [
    "MpsConfig",
    "analytic",
    "ball_spectrum",
    "build_domain",
    "build_grid",
    "disk_spectrum",
    "functionals",
    "g_bounds",
    "geometry",
    "kernels",
    "mps",
    "mps_spectrum",
    "packets",
    "scan_and_refine",
]
