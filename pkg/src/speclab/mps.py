"""Planar Dirichlet eigenpairs by the method of particular solutions.

Each eigenfunction is expanded in Fourier-Bessel functions
J_m(sqrt(lam) r) cos(m theta), J_m(sqrt(lam) r) sin(m theta) centred at the
domain base point. For a trial lam the basis is sampled on boundary
collocation points and on random interior points; the tension is the
smallest singular value of the boundary block of an orthonormal basis for
the column space (the sine of the subspace angle between the span and the
functions vanishing on the boundary). It dips to round-off exactly at
Dirichlet eigenvalues. Reflection symmetries of the domain split the basis
into classes that are scanned independently.
"""

from dataclasses import dataclass, field, replace
from math import ceil, pi

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import (
    DomainMismatch,
    IllConditioned,
    InvalidParameter,
    MissedEigenvalueSuspected,
    NormalizationFailure,
)
from .geometry import build_grid, weyl_count_estimate
from .special import bessel_zero
from .spectrum import Mode, Spectrum, same_geometry

RANK_RTOL = 1e-14
CLUSTER_RTOL = 1e-8
MODE_CEILING = 300
ORDER_STEP = 8


@dataclass(frozen=True)
class MpsConfig:
    basis_order: int = 40
    n_boundary: int = 200
    n_interior: int = 80
    scan_window: tuple = (1.0, 100.0)
    scan_step: float = 0.5
    tension_tol: float = 1e-6
    refine_tol: float = 1e-11
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scan_window", tuple(float(v) for v in self.scan_window))
        lo, hi = self.scan_window
        if self.basis_order < 0:
            raise InvalidParameter("basis_order must be >= 0")
        if self.n_boundary < 2 * self.basis_order + 16:
            raise InvalidParameter(
                f"n_boundary={self.n_boundary} < 2*basis_order + 16 = {2 * self.basis_order + 16}")
        if self.n_interior < self.basis_order:
            raise InvalidParameter(f"n_interior={self.n_interior} < basis_order={self.basis_order}")
        if not 0 < lo < hi:
            raise InvalidParameter(f"scan_window must satisfy 0 < lo < hi, got {self.scan_window}")
        if self.scan_step <= 0 or self.tension_tol <= 0 or self.refine_tol <= 0:
            raise InvalidParameter("scan_step, tension_tol and refine_tol must be positive")

    def raised(self, extra=ORDER_STEP):
        """Same config with the basis order raised by ``extra`` (sizes bumped as needed)."""
        M = self.basis_order + extra
        return replace(self, basis_order=M, n_boundary=max(self.n_boundary, 2 * M + 16),
                       n_interior=max(self.n_interior, M))


@dataclass(frozen=True, eq=False)
class MpsEigenpair:
    """Refined eigenpair; ``coeffs`` multiply the columns listed in ``basis``.

    ``basis`` is a pair of integer arrays (m, parity) with parity 0 for cosine
    and 1 for sine; ``center`` is the expansion point.
    """

    lam: float
    coeffs: np.ndarray
    tension: float
    rellich_residual: float
    cluster_size: int
    sym_class: str
    basis: tuple
    center: tuple
    domain: object = field(repr=False)


@dataclass(frozen=True)
class MpsMode(Mode):
    pair: MpsEigenpair = field(default=None, repr=False, compare=False)

    @property
    def coeffs(self):
        return self.pair.coeffs


# ---- symmetry classes -----------------------------------------------------

def _mirror_x(domain, c):
    """Reflection y -> -y maps the domain to itself and fixes the center."""
    return c[1] == 0.0


def _mirror_y(domain, c):
    if c[0] != 0.0:
        return False
    if domain.kind == "perturbed_disk":
        return int(domain.param("p")) % 2 == 0
    return True


def symmetry_classes(domain, M, center=None):
    """Basis columns (m, parity) for each reflection-symmetry class."""
    c = domain.x0 if center is None else center
    m = np.concatenate([np.arange(M + 1), np.arange(1, M + 1)])
    par = np.concatenate([np.zeros(M + 1, dtype=np.int64), np.ones(M, dtype=np.int64)])
    mx, my = _mirror_x(domain, c), _mirror_y(domain, c)
    if mx and my:
        sel = {f"{p}-{e}": (par == pi_) & (m % 2 == r)
               for pi_, p in enumerate(("cos", "sin")) for r, e in enumerate(("even", "odd"))}
    elif mx:
        sel = {"cos": par == 0, "sin": par == 1}
    elif my:
        flip = (m + par) % 2
        sel = {"y-even": flip == 0, "y-odd": flip == 1}
    else:
        sel = {"all": np.ones(m.size, dtype=bool)}
    return {name: (m[s], par[s]) for name, s in sel.items() if np.any(s)}


# ---- collocation system ---------------------------------------------------

def _polar(points, center):
    d = points - np.asarray(center, dtype=float)
    return np.hypot(d[:, 0], d[:, 1]), np.arctan2(d[:, 1], d[:, 0])


def _basis_values(m, par, lam, r, theta, derivs=False):
    """Columns J_m(k r) trig(m theta); with ``derivs`` also d/dr and d/dtheta."""
    k = np.sqrt(lam)
    M = int(m.max()) if m.size else 0
    J = kernels.jn_table(M + 1, k * r)
    ang = np.outer(theta, m)
    trig = np.where(par == 0, np.cos(ang), np.sin(ang))
    vals = J[:, m] * trig
    if not derivs:
        return vals
    Jm1 = np.where(m == 0, -J[:, 1 % (M + 2)][:, None], J[:, np.maximum(m - 1, 0)])
    dJ = 0.5 * (Jm1 - J[:, m + 1])
    dtrig = np.where(par == 0, -np.sin(ang), np.cos(ang)) * m
    return vals, k * dJ * trig, J[:, m] * dtrig


class _Collocation:
    """Boundary collocation and interior regularization points for one config."""

    def __init__(self, domain, config, center=None):
        if not domain.planar:
            raise InvalidParameter("collocation solver handles planar domains only")
        self.domain, self.config = domain, config
        self.center = tuple(domain.x0 if center is None else center)
        nb, ni = config.n_boundary, config.n_interior
        t = 2 * pi * np.arange(nb) / nb
        x, y, dx, dy, _, _ = domain.curve(t)
        rb, tb = _polar(np.column_stack([x, y]), self.center)
        wb = np.sqrt(np.hypot(dx, dy) * 2 * pi / nb)
        rng = np.random.default_rng(config.seed)
        ti = rng.uniform(0.0, 2 * pi, ni)
        ri = domain.polar_radius(ti, self.center) * np.sqrt(rng.uniform(0.0, 1.0, ni))
        wi = np.full(ni, np.sqrt(domain.volume / ni))
        self.nb = nb
        self.r = np.concatenate([rb, ri])
        self.theta = np.concatenate([tb, ti])
        self.rowscale = np.concatenate([wb, wi])
        self.classes = symmetry_classes(domain, config.basis_order, self.center)

    def _factor(self, lam, cls):
        m, par = self.classes[cls]
        A = _basis_values(m, par, lam, self.r, self.theta) * self.rowscale[:, None]
        cn = np.linalg.norm(A, axis=0)
        cn = np.where(cn > 0, cn, 1.0)
        try:
            U, S, Vt = np.linalg.svd(A / cn, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise IllConditioned(f"SVD failed at lambda={lam}") from exc
        keep = S > RANK_RTOL * S[0]
        return U[: self.nb, keep], S[keep], Vt[keep], cn

    def sigmas(self, lam, cls):
        """Singular values of the boundary block, ascending."""
        UB = self._factor(lam, cls)[0]
        try:
            return np.linalg.svd(UB, compute_uv=False)[::-1]
        except np.linalg.LinAlgError as exc:
            raise IllConditioned(f"SVD failed at lambda={lam}") from exc

    def tension(self, lam, cls):
        return float(self.sigmas(lam, cls)[0])

    def null_coeffs(self, lam, cls, count):
        """Raw basis coefficients of the ``count`` smallest boundary singular vectors."""
        UB, S, Vt, cn = self._factor(lam, cls)
        _, sv, Yt = np.linalg.svd(UB, full_matrices=False)
        Y = Yt[::-1][:count].T
        return (Vt.T @ (Y / S[:, None])) / cn[:, None], sv[::-1][:count]


def tension(domain, config, lam, sym_class=None):
    """Minimal boundary singular value at ``lam``, over all classes unless one is named."""
    if lam <= 0:
        raise InvalidParameter("lambda must be positive")
    col = _Collocation(domain, config)
    names = list(col.classes) if sym_class is None else [sym_class]
    return min(col.tension(lam, c) for c in names)


# ---- normalization and traces ----------------------------------------------

def _interior_rule(domain, center, k, M):
    """Mapped polar tensor rule: trapezoid in angle, Gauss-Legendre along rays."""
    n_t = 4 * M + 64
    th = 2 * pi * np.arange(n_t) / n_t
    rb = domain.polar_radius(th, center)
    n_r = int(k * rb.max()) + 40
    xi, wx = np.polynomial.legendre.leggauss(n_r)
    s = 0.5 * (xi + 1.0)
    r = np.outer(rb, s)
    w = np.outer(rb * rb, 0.5 * wx * s) * (2 * pi / n_t)
    return r.ravel(), np.repeat(th, n_r), w.ravel()


def _normalize(domain, center, lam, m, par, C):
    """Orthonormalize coefficient columns in L2(Omega); orientation by largest entry."""
    M = int(m.max()) if m.size else 0
    r, th, w = _interior_rule(domain, center, np.sqrt(lam), M)
    U = _basis_values(m, par, lam, r, th) @ C
    G = U.T @ (U * w[:, None])
    evals = np.linalg.eigvalsh(G)
    if not np.all(evals > 0):
        raise NormalizationFailure(f"interior norm not positive at lambda={lam}")
    L = np.linalg.cholesky(G)
    C = np.linalg.solve(L, C.T).T
    for j in range(C.shape[1]):
        i = int(np.argmax(np.abs(C[:, j])))
        if C[i, j] < 0:
            C[:, j] = -C[:, j]
    return C


def normal_derivative(pair, grid):
    """Signed d_n u of an eigenpair at the grid nodes."""
    if not same_geometry(pair.domain, grid.domain):
        raise DomainMismatch("eigenpair and grid describe different domains")
    m, par = pair.basis
    r, th = _polar(grid.nodes, pair.center)
    _, ur, ut = _basis_values(m, par, pair.lam, r, th, derivs=True)
    c, s = np.cos(th), np.sin(th)
    nx, ny = grid.normals[:, 0], grid.normals[:, 1]
    er_n = c * nx + s * ny
    et_n = -s * nx + c * ny
    return (ur @ pair.coeffs) * er_n + (ut @ pair.coeffs) / r * et_n


def extract_trace(pair, grid):
    """Boundary flux density rho = |d_n u|^2 at the grid nodes."""
    if isinstance(pair, MpsMode):
        pair = pair.pair
    return normal_derivative(pair, grid) ** 2


def _rellich(pair, grid):
    rho = extract_trace(pair, grid)
    return abs(grid.integrate(grid.support_g * rho) - 2 * pair.lam) / (2 * pair.lam)


# ---- scan, refine, certify ------------------------------------------------

def _local_minima(vals):
    return [i for i in range(1, vals.size - 1) if vals[i] < vals[i - 1] and vals[i] <= vals[i + 1]]


def _refine(col, cls, a, b, c, tol):
    res = minimize_scalar(lambda x: col.tension(x, cls), bracket=(a, b, c), method="golden",
                          options={"xtol": tol})
    return float(res.x)


def _scan_class(col, cls, lo, hi, step, cfg, depth=0):
    """Refined (lam, multiplicity) pairs for one class in [lo, hi]."""
    n = int(ceil((hi - lo) / step)) + 1
    grid = np.linspace(lo, hi, n)
    h = grid[1] - grid[0]
    grid = np.concatenate([[max(lo - h, 0.5 * lo)], grid, [hi + h]])
    vals = np.array([col.tension(x, cls) for x in grid])
    found = []
    for i in _local_minima(vals):
        x = _refine(col, cls, grid[i - 1], grid[i], grid[i + 1], cfg.refine_tol)
        sv = col.sigmas(x, cls)
        if sv[0] > cfg.tension_tol:
            continue
        mult = int(np.count_nonzero(sv[:4] <= cfg.tension_tol))
        # the tension grows roughly linearly away from an isolated eigenvalue;
        # the steeper side gives the slope, and the next singular value at x
        # then bounds the distance to any further eigenvalue in this class
        slope = max(vals[i - 1] / abs(x - grid[i - 1]), vals[i + 1] / abs(grid[i + 1] - x))
        if mult < sv.size and sv[mult] < 2.0 * slope * h and depth < 3:
            a, b = max(x - 2 * h, 0.5 * grid[i - 1]), x + 2 * h
            found.extend(_scan_class(col, cls, a, b, h / 32, cfg, depth + 1))
            continue
        found.append((x, mult))
    found.sort()
    out = []
    for x, mult in found:
        if lo <= x <= hi and not (out and abs(x - out[-1][0]) <= CLUSTER_RTOL * x):
            out.append((x, mult))
    return out


def _order_check(x, cls, col_hi, cfg):
    """Eigenvalue re-refined with the raised basis order."""
    d = max(1e-7 * x, 10 * cfg.refine_tol * x)
    res = minimize_scalar(lambda y: col_hi.tension(y, cls), bracket=(x - d, x + d), method="golden",
                          options={"xtol": cfg.refine_tol})
    return float(res.x)


def _weyl_margin(lam):
    return 3.0 + lam ** (1.0 / 3.0)


def scan_and_refine(domain, config, check_count=True, order_check=True, return_rejected=False):
    """All eigenpairs in ``config.scan_window``, one per eigenspace dimension, sorted by lambda."""
    cfg = config
    col = _Collocation(domain, cfg)
    col_hi = _Collocation(domain, cfg.raised()) if order_check else None
    lo, hi = cfg.scan_window
    grid = build_grid(domain, max(1024, 4 * cfg.n_boundary))
    raw, rejected = [], []
    for cls in col.classes:
        m, par = col.classes[cls]
        for x, mult in _scan_class(col, cls, lo, hi, cfg.scan_step, cfg):
            if order_check and abs(_order_check(x, cls, col_hi, cfg) - x) > 10 * cfg.refine_tol * x:
                rejected.append((x, cls))
                continue
            C, sv = col.null_coeffs(x, cls, mult)
            C = _normalize(domain, col.center, x, m, par, C)
            for j in range(mult):
                coeffs = C[:, j].copy()
                coeffs.setflags(write=False)
                raw.append(dict(lam=x, coeffs=coeffs, tension=float(sv[j]), sym_class=cls,
                                basis=(m, par)))
    order = {c: i for i, c in enumerate(col.classes)}
    raw.sort(key=lambda e: (e["lam"], order[e["sym_class"]]))
    pairs = []
    i = 0
    while i < len(raw):
        j = i + 1
        while j < len(raw) and raw[j]["lam"] - raw[j - 1]["lam"] <= CLUSTER_RTOL * raw[j]["lam"]:
            j += 1
        for e in raw[i:j]:
            p = MpsEigenpair(e["lam"], e["coeffs"], e["tension"], 0.0, j - i, e["sym_class"],
                             e["basis"], col.center, domain)
            pairs.append(replace(p, rellich_residual=float(_rellich(p, grid))))
        i = j
    if check_count:
        expected = float(weyl_count_estimate(domain, hi) - weyl_count_estimate(domain, lo))
        if abs(len(pairs) - expected) > _weyl_margin(hi):
            raise MissedEigenvalueSuspected(
                f"{len(pairs)} eigenvalues in {cfg.scan_window}, two-term Weyl estimate {expected:.1f}")
    if return_rejected:
        return pairs, rejected
    return pairs


# ---- spectrum wrapper -----------------------------------------------------

class MpsSpectrum(Spectrum):
    """Collocation spectrum; eigenspaces are the detected clusters."""

    cluster_rtol = CLUSTER_RTOL

    def traces(self, grid, idx=None):
        self.check_grid(grid)
        pos = self._positions(idx)
        if pos.size == 0:
            return np.zeros((0, grid.n_nodes))
        return np.vstack([normal_derivative(self.modes[p].pair, grid) for p in pos])

    def truncated(self, K):
        return MpsSpectrum(self.domain, self.modes[:K])


def _window_top(domain, n):
    """Smallest lam with two-term Weyl count n (solved as a quadratic in sqrt(lam))."""
    A = domain.volume / (4 * pi)
    B = domain.boundary_measure / (4 * pi)
    s = (B + np.sqrt(B * B + 4 * A * n)) / (2 * A)
    return float(s * s)


def default_config(domain, K, **overrides):
    """Config sized so that the first K modes fall inside the scan window."""
    top = _window_top(domain, K + _weyl_margin(_window_top(domain, K)) + 2)
    c = np.asarray(domain.x0)
    tt = np.linspace(0.0, 2 * pi, 512, endpoint=False)
    x, y, *_ = domain.curve(tt)
    rmax = float(np.max(np.hypot(x - c[0], y - c[1])))
    M = int(ceil(np.sqrt(top) * rmax)) + 16
    n_cls = len(symmetry_classes(domain, 2, domain.x0))
    lam1_floor = pi * bessel_zero(0, 1) ** 2 / domain.volume  # Faber-Krahn
    spacing = 4 * pi / domain.volume * n_cls
    kw = dict(basis_order=M, n_boundary=4 * M + 32, n_interior=2 * M,
              scan_window=(0.9 * lam1_floor, top), scan_step=spacing / 8)
    kw.update(overrides)
    return MpsConfig(**kw)


def mps_spectrum(domain, K, config=None, check_count=True):
    """First K collocation modes of a planar domain."""
    if K > MODE_CEILING:
        raise InvalidParameter(f"K={K} exceeds the collocation ceiling of {MODE_CEILING} modes")
    cfg = default_config(domain, K) if config is None else config
    pairs = scan_and_refine(domain, cfg, check_count=check_count)
    if len(pairs) < K:
        raise MissedEigenvalueSuspected(f"only {len(pairs)} eigenvalues in {cfg.scan_window}, need {K}")
    pairs = pairs[:K]
    counters = {}
    modes = []
    for k, p in enumerate(pairs, start=1):
        counters[p.sym_class] = counters.get(p.sym_class, 0) + 1
        modes.append(MpsMode(k, p.lam, ("mps", p.sym_class, counters[p.sym_class], p.cluster_size),
                             1.0, p))
    return MpsSpectrum(domain, modes)


__all__ = [
    "MpsConfig",
    "MpsEigenpair",
    "MpsMode",
    "MpsSpectrum",
    "default_config",
    "extract_trace",
    "mps_spectrum",
    "normal_derivative",
    "scan_and_refine",
    "symmetry_classes",
    "tension",
]
