"""Strictly convex domains, their discretized boundaries and support functions.

Planar boundaries are parametrized by t in [0, 2 pi) and discretized with the
uniform periodic trapezoid rule. The ball is discretized with Gauss-Legendre
nodes in cos(polar angle) times uniform azimuth.
"""

from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np
from scipy.special import ellipe

from .errors import ConvexityViolation, InvalidParameter, NonPositiveSupport

KINDS = ("disk", "ball", "ellipse", "perturbed_disk")
CONVEXITY_OVERSAMPLE = 16


def unit_ball_volume(d):
    return pi ** (d / 2.0) / gamma(d / 2.0 + 1.0)


def _frozen(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True)
class DomainSpec:
    """A strictly convex domain with a base point ``x0`` for the support function."""

    kind: str
    params: tuple
    x0: tuple

    @property
    def dimension(self):
        return 3 if self.kind == "ball" else 2

    @property
    def planar(self):
        return self.dimension == 2

    def param(self, name):
        return dict(self.params)[name]

    # ---- planar parametrization -------------------------------------------
    def curve(self, t):
        """Points and first/second derivatives of the boundary at parameter t.

        Returns (x, y, dx, dy, ddx, ddy), each an array shaped like ``t``.
        """
        t = np.asarray(t, dtype=float)
        c, s = np.cos(t), np.sin(t)
        if self.kind == "disk":
            R = self.param("R")
            return R * c, R * s, -R * s, R * c, -R * c, -R * s
        if self.kind == "ellipse":
            a, b = self.param("a"), self.param("b")
            return a * c, b * s, -a * s, b * c, -a * c, -b * s
        if self.kind == "perturbed_disk":
            R, eps, p = self.param("R"), self.param("eps"), self.param("p")
            r = R * (1.0 + eps * np.cos(p * t))
            dr = -R * eps * p * np.sin(p * t)
            ddr = -R * eps * p * p * np.cos(p * t)
            x, y = r * c, r * s
            dx = dr * c - r * s
            dy = dr * s + r * c
            ddx = ddr * c - 2.0 * dr * s - r * c
            ddy = ddr * s + 2.0 * dr * c - r * s
            return x, y, dx, dy, ddx, ddy
        raise InvalidParameter(f"{self.kind} has no planar parametrization")

    def curvature(self, t):
        """Signed curve curvature at parameter t (positive for convex, CCW)."""
        _, _, dx, dy, ddx, ddy = self.curve(t)
        return (dx * ddy - dy * ddx) / (dx * dx + dy * dy) ** 1.5

    def polar_radius(self, theta, center=None):
        """Distance from ``center`` to the boundary along direction ``theta``.

        Closed forms when the center is the origin; otherwise Newton iteration
        on the (monotone) polar angle of the boundary seen from the center.
        """
        theta = np.asarray(theta, dtype=float)
        center = self.x0 if center is None else center
        cx, cy = float(center[0]), float(center[1])
        if cx == 0.0 and cy == 0.0:
            if self.kind == "disk":
                return np.full_like(theta, self.param("R"))
            if self.kind == "ellipse":
                a, b = self.param("a"), self.param("b")
                return a * b / np.sqrt((b * np.cos(theta)) ** 2 + (a * np.sin(theta)) ** 2)
            if self.kind == "perturbed_disk":
                R, eps, p = self.param("R"), self.param("eps"), self.param("p")
                return R * (1.0 + eps * np.cos(p * theta))
        # tabulate the boundary angle, then polish with Newton steps
        tt = np.linspace(0.0, 2 * pi, 4096, endpoint=False)
        x, y, *_ = self.curve(tt)
        ang = np.unwrap(np.arctan2(y - cy, x - cx))
        ang0 = ang[0]
        target = ang0 + np.mod(theta - ang0, 2 * pi)
        t = np.interp(target, np.append(ang, ang0 + 2 * pi), np.append(tt, 2 * pi))
        for _ in range(30):
            x, y, dx, dy, _, _ = self.curve(t)
            ux, uy = x - cx, y - cy
            phi = np.arctan2(uy, ux)
            resid = np.angle(np.exp(1j * (phi - target)))
            dphi = (ux * dy - uy * dx) / (ux * ux + uy * uy)
            step = resid / dphi
            t = t - step
            if np.max(np.abs(step)) < 1e-15:
                break
        x, y, *_ = self.curve(t)
        return np.hypot(x - cx, y - cy)

    # ---- global quantities ------------------------------------------------
    @property
    def volume(self):
        """|Omega| (area in d = 2)."""
        if self.kind == "disk":
            return pi * self.param("R") ** 2
        if self.kind == "ball":
            return 4.0 * pi / 3.0 * self.param("R") ** 3
        if self.kind == "ellipse":
            return pi * self.param("a") * self.param("b")
        R, eps = self.param("R"), self.param("eps")
        return pi * R * R * (1.0 + 0.5 * eps * eps)

    @property
    def boundary_measure(self):
        """|dOmega| (perimeter in d = 2, surface area in d = 3)."""
        if self.kind == "disk":
            return 2 * pi * self.param("R")
        if self.kind == "ball":
            return 4 * pi * self.param("R") ** 2
        if self.kind == "ellipse":
            a, b = self.param("a"), self.param("b")
            return 4.0 * a * float(ellipe(1.0 - (b / a) ** 2))
        # speed is analytic and periodic; 4096 trapezoid nodes are converged
        tt = np.linspace(0.0, 2 * pi, 4096, endpoint=False)
        _, _, dx, dy, _, _ = self.curve(tt)
        return float(np.sum(np.hypot(dx, dy)) * 2 * pi / tt.size)


def _centroid(kind, params):
    # every supported shape is centrally symmetric about the origin up to the
    # p-fold perturbation, whose first moments vanish for p >= 2
    return (0.0, 0.0, 0.0) if kind == "ball" else (0.0, 0.0)


def _positive(name, value):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InvalidParameter(f"{name} must be positive, got {value}")
    return value


def build_domain(spec_params=None, **kwargs):
    """Validate parameters and return a :class:`DomainSpec`.

    Accepts a mapping such as ``{"kind": "ellipse", "a": 1, "b": 0.8}`` or
    keyword arguments. ``x0`` overrides the default base point (the centroid).
    """
    params = dict(spec_params or {})
    params.update(kwargs)
    kind = params.pop("kind", None)
    if kind not in KINDS:
        raise InvalidParameter(f"unknown domain kind {kind!r}; expected one of {KINDS}")
    x0 = params.pop("x0", None)
    if kind in ("disk", "ball"):
        clean = (("R", _positive("R", params.pop("R", 1.0))),)
    elif kind == "ellipse":
        a = _positive("a", params.pop("a"))
        b = _positive("b", params.pop("b"))
        if a < b:
            raise InvalidParameter(f"ellipse semi-axes must satisfy a >= b, got a={a}, b={b}")
        clean = (("a", a), ("b", b))
    else:
        R = _positive("R", params.pop("R", 1.0))
        eps = float(params.pop("eps", params.pop("amplitude", 0.0)))
        p = int(params.pop("p", params.pop("frequency", 2)))
        if eps < 0 or not np.isfinite(eps):
            raise InvalidParameter(f"perturbation amplitude must be >= 0, got {eps}")
        if eps >= 1:
            raise InvalidParameter("perturbation amplitude must be < 1 for a positive radius")
        if p < 2:
            raise InvalidParameter(f"perturbation frequency must be >= 2, got {p}")
        clean = (("R", R), ("eps", eps), ("p", p))
    if params:
        raise InvalidParameter(f"unexpected parameters for {kind}: {sorted(params)}")

    if x0 is None:
        x0 = _centroid(kind, clean)
    x0 = tuple(float(v) for v in x0)
    dom = DomainSpec(kind, clean, x0)
    if len(x0) != dom.dimension:
        raise InvalidParameter(f"x0 must have {dom.dimension} coordinates")

    if dom.planar:
        n_check = CONVEXITY_OVERSAMPLE * max(256, 16 * dict(clean).get("p", 0))
        tt = np.linspace(0.0, 2 * pi, n_check, endpoint=False)
        kappa = dom.curvature(tt)
        if np.min(kappa) <= 0:
            raise ConvexityViolation(
                f"{kind} is not strictly convex: min curvature {np.min(kappa):.6g} "
                f"at t={tt[np.argmin(kappa)]:.6g}"
            )
        x, y, dx, dy, _, _ = dom.curve(tt)
        speed = np.hypot(dx, dy)
        g = ((x - x0[0]) * dy - (y - x0[1]) * dx) / speed
    else:
        R = dom.param("R")
        g = np.array([R - np.linalg.norm(x0)])
    if np.min(g) <= 0:
        raise NonPositiveSupport(f"x0={x0} is not strictly interior (min support {np.min(g):.6g})")
    return dom


def disk(R=1.0, x0=None):
    return build_domain(kind="disk", R=R, x0=x0)


def ball(R=1.0, x0=None):
    return build_domain(kind="ball", R=R, x0=x0)


def ellipse(a, b, x0=None):
    return build_domain(kind="ellipse", a=a, b=b, x0=x0)


def perturbed_disk(R=1.0, eps=0.05, p=3, x0=None):
    return build_domain(kind="perturbed_disk", R=R, eps=eps, p=p, x0=x0)


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    """Boundary quadrature nodes with normals, curvature and support function.

    ``params`` holds the curve parameter t for planar domains, or the pair
    (polar angle, azimuth) per node for the sphere; sphere nodes are stored
    latitude-major with ``shape = (n_lat, n_lon)``.
    """

    domain: DomainSpec
    nodes: np.ndarray
    quad_weights: np.ndarray
    normals: np.ndarray
    curvature_H: np.ndarray
    support_g: np.ndarray
    params: np.ndarray
    shape: tuple
    H_bar: float = field(init=False)

    def __post_init__(self):
        hbar = float(np.sum(self.quad_weights * self.curvature_H) / np.sum(self.quad_weights))
        object.__setattr__(self, "H_bar", hbar)
        _frozen(self.nodes, self.quad_weights, self.normals, self.curvature_H,
                self.support_g, self.params)

    @property
    def n_nodes(self):
        return self.quad_weights.size

    @property
    def measure(self):
        return float(np.sum(self.quad_weights))

    def integrate(self, values):
        return float(np.dot(self.quad_weights, values))


def build_grid(domain, n_nodes):
    """Discretize the boundary of ``domain``.

    ``n_nodes`` is an integer (>= 64) for planar domains and a pair
    (n_lat, n_lon) for the ball.
    """
    x0 = np.asarray(domain.x0)
    if domain.planar:
        n = int(n_nodes)
        if n < 64:
            raise InvalidParameter(f"planar grids need at least 64 nodes, got {n}")
        t = 2 * pi * np.arange(n) / n
        x, y, dx, dy, _, _ = domain.curve(t)
        speed = np.hypot(dx, dy)
        nodes = np.column_stack([x, y])
        normals = np.column_stack([dy / speed, -dx / speed])
        weights = speed * (2 * pi / n)
        H = domain.curvature(t)
        g = np.einsum("ij,ij->i", nodes - x0, normals)
        return BoundaryGrid(domain, nodes, weights, normals, H, g, t, (n,))

    try:
        n_lat, n_lon = (int(v) for v in n_nodes)
    except TypeError:
        raise InvalidParameter("ball grids need n_nodes=(n_lat, n_lon)") from None
    if n_lat < 2 or n_lon < 4:
        raise InvalidParameter(f"sphere grid too small: {(n_lat, n_lon)}")
    R = domain.param("R")
    ct, wt = np.polynomial.legendre.leggauss(n_lat)
    polar = np.arccos(ct)
    azim = 2 * pi * np.arange(n_lon) / n_lon
    P, A = np.meshgrid(polar, azim, indexing="ij")
    normals = np.column_stack([
        (np.sin(P) * np.cos(A)).ravel(),
        (np.sin(P) * np.sin(A)).ravel(),
        np.cos(P).ravel(),
    ])
    nodes = R * normals
    weights = np.repeat(R * R * wt * (2 * pi / n_lon), n_lon)
    H = np.full(weights.size, 1.0 / R)
    g = np.einsum("ij,ij->i", nodes - x0, normals)
    params = np.column_stack([P.ravel(), A.ravel()])
    return BoundaryGrid(domain, nodes, weights, normals, H, g, params, (n_lat, n_lon))


def curvature_at(domain, param):
    """Curve curvature (d = 2) or mean curvature (d = 3) at a boundary parameter."""
    if domain.kind == "ball":
        return 1.0 / domain.param("R")
    val = domain.curvature(np.asarray(param, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


def g_bounds(grid):
    """(m, M) = (min, max) of the support function over the grid."""
    m = float(np.min(grid.support_g))
    M = float(np.max(grid.support_g))
    if m <= 0:
        raise NonPositiveSupport(f"support function not positive (min {m:.6g}); x0 not interior?")
    return m, M


def weyl_reference(domain):
    """Leading Weyl constant c_Omega in lambda_k ~ c_Omega k^(2/d)."""
    d = domain.dimension
    return 4 * pi * pi * (unit_ball_volume(d) * domain.volume) ** (-2.0 / d)


def weyl_count_estimate(domain, lam):
    """Two-term planar Weyl estimate |Omega| L/(4 pi) - |dOmega| sqrt(L)/(4 pi)."""
    lam = np.asarray(lam, dtype=float)
    if domain.planar:
        return domain.volume * lam / (4 * pi) - domain.boundary_measure * np.sqrt(lam) / (4 * pi)
    # d = 3: |Omega| L^(3/2)/(6 pi^2) - |dOmega| L/(16 pi)
    return domain.volume * lam ** 1.5 / (6 * pi * pi) - domain.boundary_measure * lam / (16 * pi)
