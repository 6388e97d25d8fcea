"""Spectral packets, mode-to-packet ratios, correlation averages and rate fits.

A packet at index k is the window J_k = {k, ..., k + N_k - 1} with
N_k = max(N_min, ceil(k^alpha)), 0 <= alpha < 1. Packet statistics are
computed by direct per-mode summation; cumulative pairings are only used
for the telescoping consistency check.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil

import numpy as np

from .errors import DegenerateFit, InvalidParameter, MeanNotZero, SpectrumTooShort
from .functionals import cumulative_below, mode_functionals
from .geometry import build_grid, unit_ball_volume


@dataclass(frozen=True)
class PacketSchedule:
    alpha: float
    N_min: int = 2
    k_list: tuple = field(default=())

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise InvalidParameter(f"alpha must lie in [0, 1) so that N_k = o(k); got {self.alpha}")
        # N_min = 1 is allowed so that singleton packets (ratio exactly 1) can be formed
        if int(self.N_min) < 1:
            raise InvalidParameter(f"N_min must be a positive integer, got {self.N_min}")
        object.__setattr__(self, "N_min", int(self.N_min))
        object.__setattr__(self, "k_list", tuple(int(k) for k in self.k_list))

    def length(self, k):
        # guard against k**alpha landing a hair above an integer
        return max(self.N_min, int(ceil(k ** self.alpha - 1e-9)))

    def lengths(self, ks):
        return np.array([self.length(int(k)) for k in ks], dtype=np.int64)


def packet_indices(k, schedule, K=None):
    """1-based indices {k, ..., k + N_k - 1}."""
    if k < 1:
        raise InvalidParameter("packet start k must be >= 1")
    n = schedule.length(k)
    if K is not None and k + n - 1 > K:
        raise SpectrumTooShort(f"packet at k={k} needs modes up to {k + n - 1}, only {K} computed")
    return np.arange(k, k + n)


def default_grid(domain):
    return build_grid(domain, (64, 128) if domain.kind == "ball" else 1024)


def _energies(source, grid=None):
    """Per-mode energies from a ModeFunctionals, an array, or a spectrum."""
    if hasattr(source, "E"):
        return np.asarray(source.E)
    if isinstance(source, np.ndarray):
        return source
    grid = default_grid(source.domain) if grid is None else grid
    return source.modal_integrals(grid, np.ones((1, grid.n_nodes)))[:, 0]


def mode_to_packet_ratio(spectrum, k, schedule, grid=None):
    """E_k / sum_{m in J_k} E_m."""
    E = _energies(spectrum, grid)
    idx = packet_indices(k, schedule, E.size) - 1
    return float(E[idx[0]] / np.sum(E[idx]))


def packet_correlation_average(spectrum, k, schedule, weight, grid):
    """Energy-weighted packet average of C_j(w): sum E_j(w) / sum E_j over J_k."""
    if weight.level < 1:
        raise MeanNotZero(f"weight {weight.name!r} is not zero-mean")
    funcs = spectrum if hasattr(spectrum, "E_w") else mode_functionals(spectrum, grid, weight)
    idx = packet_indices(k, schedule, funcs.E.size) - 1
    return float(np.sum(funcs.E_w[idx]) / np.sum(funcs.E[idx]))


@dataclass(frozen=True)
class PacketStats:
    k: int
    N_k: int
    lambda_k: float
    packet_energy: float
    ratio: float
    corr_avg: dict

    @property
    def scaled_ratio(self):
        return self.N_k * self.ratio


def packet_table(lambdas, energies, schedule, ks, weighted=None):
    """PacketStats for every k in ``ks``.

    ``weighted`` maps a weight name to its per-mode E_j(w) array; corr_avg
    holds the energy-weighted correlation average for each.
    """
    weighted = weighted or {}
    E = np.asarray(energies)
    out = []
    for k in ks:
        idx = packet_indices(int(k), schedule, E.size) - 1
        pe = float(np.sum(E[idx]))
        corr = {name: float(np.sum(ew[idx]) / pe) for name, ew in weighted.items()}
        out.append(PacketStats(int(k), idx.size, float(lambdas[idx[0]]), pe, float(E[idx[0]] / pe), corr))
    return out


def threshold_exponent(d, level, floor=True):
    """Packet-growth exponent theta with N_k >> k^theta guaranteeing cancellation.

    Level 1 (zero mean): 1 - 2/d. Level 2 (zero mean and zero curvature
    moment): (d - 3)/d, floored at 0 for reporting.
    """
    if d < 2:
        raise InvalidParameter("dimension must be >= 2")
    if level == 1:
        theta = Fraction(d - 2, d)
    elif level == 2:
        theta = Fraction(d - 3, d)
    else:
        raise InvalidParameter(f"level must be 1 or 2, got {level}")
    if floor:
        theta = max(theta, Fraction(0))
    return float(theta)


def cancellation_rate_bound(k, N_k, d, level):
    """Envelope k^theta / N_k with the unfloored threshold exponent."""
    theta = threshold_exponent(d, level, floor=False)
    return float(k) ** theta / float(N_k)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    slope_stderr: float = float("nan")


def rate_fit(xs, ys):
    """Least-squares line through (log x, log |y|)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size:
        raise InvalidParameter("xs and ys differ in length")
    if xs.size < 5:
        raise DegenerateFit(f"need at least five points, got {xs.size}")
    if np.any(ys == 0) or np.any(xs <= 0):
        raise InvalidParameter("rate_fit needs positive xs and nonzero ys")
    lx, ly = np.log(xs), np.log(np.abs(ys))
    sxx = np.sum((lx - lx.mean()) ** 2)
    if sxx <= 1e-300:
        raise DegenerateFit("zero variance in xs")
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    syy = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 if syy == 0 else float(1.0 - np.sum(resid ** 2) / syy)
    se = float(np.sqrt(np.sum(resid ** 2) / (xs.size - 2) / sxx)) if xs.size > 2 else float("nan")
    return RateFit(slope, intercept, r2, int(xs.size), se)


def two_term_regression(x, y, p1, p2):
    """OLS of y on [x^p1, x^p2] (no intercept). Returns coefficients and standard errors."""
    X = np.column_stack([x ** p1, x ** p2])
    scale = np.max(np.abs(X), axis=0)
    Xs = X / scale
    coef, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    resid = y - Xs @ coef
    dof = max(x.size - 2, 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(Xs.T @ Xs)
    return coef / scale, np.sqrt(np.diag(cov)) / scale


@dataclass(frozen=True)
class WeylFit:
    mode: str
    fit: RateFit
    expected_exponent: float
    window: tuple
    leading_constant: float = float("nan")
    reference_constant: float = float("nan")
    second_constant: float = float("nan")
    leading_stderr: float = float("nan")
    second_stderr: float = float("nan")
    scale: float = float("nan")

    @property
    def constant_ratio(self):
        return self.leading_constant / self.reference_constant

    @property
    def leading_consistent_with_zero(self):
        # exact degeneracy can leave pure round-off, which has no meaningful stderr
        return bool(abs(self.leading_constant) <= 3.0 * self.leading_stderr
                    or abs(self.leading_constant) <= 1e-9 * abs(self.scale))


def default_window(lambdas):
    """Exclude the lowest 10% of computed modes."""
    lam = np.asarray(lambdas)
    return float(lam[int(0.1 * lam.size)]), float(lam[-1])


def weyl_fit(spectrum, mode="counting", weight=None, grid=None, window=None, n_points=200,
             functionals=None):
    """Power-law fits of cumulative spectral quantities.

    ``counting``: N(L) ~ L^{d/2}, constant compared with omega_d |Omega| / (2 pi)^d.
    ``boundary``: S(L) ~ L^{1 + d/2}.
    ``pairing``: int Q_L w ~ A L^{(d+1)/2} + B L^{d/2}; A estimates A_Omega int w
    and B estimates B_Omega int H w.
    """
    lam = spectrum.lambdas
    d = spectrum.domain.dimension
    lo, hi = default_window(lam) if window is None else (float(window[0]), float(window[1]))
    if hi > lam[-1]:
        raise SpectrumTooShort(f"fit window reaches {hi} but spectrum stops at {lam[-1]:.6g}")
    Ls = np.geomspace(lo, hi, n_points)

    if mode == "counting":
        y = np.searchsorted(lam, Ls, side="left").astype(float)
        fit = rate_fit(Ls, y)
        coef, se = two_term_regression(Ls, y, d / 2.0, (d - 1) / 2.0)
        ref = unit_ball_volume(d) * spectrum.domain.volume / (2 * np.pi) ** d
        return WeylFit(mode, fit, d / 2.0, (lo, hi), float(coef[0]), float(ref), float(coef[1]),
                       float(se[0]), float(se[1]), float(ref))

    if grid is None:
        grid = default_grid(spectrum.domain)
    if mode == "boundary":
        E = _energies(functionals if functionals is not None else spectrum, grid)
        y = cumulative_below(lam, E, Ls)
        fit = rate_fit(Ls, y)
        coef, se = two_term_regression(Ls, y, 1.0 + d / 2.0, (1.0 + d) / 2.0)
        return WeylFit(mode, fit, 1.0 + d / 2.0, (lo, hi), float(coef[0]), float("nan"),
                       float(coef[1]), float(se[0]), float(se[1]), float(coef[0]))

    if mode == "pairing":
        if weight is None:
            raise InvalidParameter("pairing fit needs a weight")
        funcs = functionals if functionals is not None else mode_functionals(spectrum, grid, weight)
        y = cumulative_below(lam, funcs.E_w, Ls)
        yabs = cumulative_below(lam, funcs.E_abs_w, Ls)
        coef, se = two_term_regression(Ls, y, (d + 1) / 2.0, d / 2.0)
        ref, _ = two_term_regression(Ls, yabs, (d + 1) / 2.0, d / 2.0)
        nz = y != 0
        fit = rate_fit(Ls[nz], y[nz]) if np.count_nonzero(nz) >= 5 else RateFit(
            float("nan"), float("nan"), float("nan"), 0)
        return WeylFit(mode, fit, (d + 1) / 2.0, (lo, hi), float(coef[0]), float("nan"),
                       float(coef[1]), float(se[0]), float(se[1]), float(ref[0]))

    raise InvalidParameter(f"unknown weyl_fit mode {mode!r}")


def random_orthogonal(dim, rng):
    """Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix)."""
    Z = rng.standard_normal((dim, dim))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def basis_mixing_check(spectrum, eigenspace_id, seed, grid=None, weight=None, mix=None):
    """Largest relative change of packet statistics under an eigenspace remix.

    The eigenspace's signed traces are mixed by a random orthogonal matrix
    (or ``mix`` if given). Compared before and after: the summed eigenspace
    density, the packet energy, and the packet-summed E(w) and correlation
    average for ``weight`` (if given), relative to ||w||_inf.
    """
    group = spectrum.eigenspace_index[eigenspace_id]
    if group.size < 2:
        raise InvalidParameter(f"eigenspace {eigenspace_id} has dimension {group.size}")
    grid = default_grid(spectrum.domain) if grid is None else grid
    T = spectrum.traces(grid, group)
    Q = random_orthogonal(group.size, np.random.default_rng(seed)) if mix is None else np.asarray(mix)
    T_mixed = Q @ T
    rho, rho_mixed = T ** 2, T_mixed ** 2
    dens, dens_mixed = rho.sum(axis=0), rho_mixed.sum(axis=0)
    devs = [np.max(np.abs(dens_mixed - dens)) / np.max(dens)]
    q = grid.quad_weights
    E, E_mixed = rho @ q, rho_mixed @ q
    devs.append(abs(E_mixed.sum() - E.sum()) / E.sum())
    if weight is not None:
        qw = q * weight.samples
        Ew, Ew_mixed = rho @ qw, rho_mixed @ qw
        devs.append(abs(Ew_mixed.sum() - Ew.sum()) / (weight.sup_norm * E.sum()))
        devs.append(abs(Ew_mixed.sum() / E_mixed.sum() - Ew.sum() / E.sum()) / weight.sup_norm)
    return float(max(devs))
