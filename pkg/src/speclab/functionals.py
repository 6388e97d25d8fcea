"""Boundary energies, weighted energies, correlations and cumulative sums.

All quantities are quadratures over a :class:`~speclab.geometry.BoundaryGrid`
of the flux density rho = |d_n u|^2 against boundary functions.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateWeight,
    GridMismatch,
    MeanNotZero,
    MomentLevelError,
    NegativeDensity,
    SpectrumTooShort,
)

MOMENT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Weight:
    """Boundary weight samples with certified vanishing moments.

    ``level`` is 0 (no moment condition), 1 (int w = 0) or 2 (additionally
    int H w = 0), certified against ``MOMENT_TOL`` relative to
    ||w||_inf |dOmega| (times max|H| for the curvature moment).
    """

    samples: np.ndarray
    mu0: float
    mu1: float
    level: int
    sup_norm: float
    name: str = ""
    n_nodes: int = field(default=0, repr=False)


def moments(samples, grid):
    samples = np.asarray(samples, dtype=float)
    return grid.integrate(samples), grid.integrate(grid.curvature_H * samples)


def certified_level(samples, grid, tol=MOMENT_TOL):
    mu0, mu1 = moments(samples, grid)
    scale = np.max(np.abs(samples)) * grid.measure
    if abs(mu0) > tol * scale:
        return 0
    if abs(mu1) > tol * scale * np.max(np.abs(grid.curvature_H)):
        return 1
    return 2


def make_weight(samples, grid, level=None, name=""):
    """Wrap samples as a :class:`Weight`, certifying its moment level.

    With ``level`` given, raises :class:`MomentLevelError` unless the samples
    satisfy at least that level; the stored level is then exactly ``level``.
    """
    samples = np.array(samples, dtype=float).ravel()
    if samples.size != grid.n_nodes:
        raise GridMismatch(f"{samples.size} weight samples for a grid of {grid.n_nodes} nodes")
    mu0, mu1 = moments(samples, grid)
    got = certified_level(samples, grid)
    if level is None:
        level = got
    elif got < level:
        raise MomentLevelError(
            f"weight {name!r} claims level {level} but moments are "
            f"int w = {mu0:.3e}, int H w = {mu1:.3e}"
        )
    samples.setflags(write=False)
    return Weight(samples, mu0, mu1, int(level), float(np.max(np.abs(samples))), name, grid.n_nodes)


def moment_project(raw, grid, target_level, name=""):
    """Project raw samples onto the complement of span{1} or span{1, H}.

    Orthogonality is in the boundary measure; H enters through H - H_bar so
    nearly constant curvature does not spoil conditioning. A direction whose
    norm vanishes (H constant on the disk or ball) is skipped.
    """
    if target_level not in (1, 2):
        raise ValueError("target_level must be 1 or 2")
    raw = np.asarray(raw, dtype=float).ravel()
    if raw.size != grid.n_nodes:
        raise GridMismatch(f"{raw.size} samples for a grid of {grid.n_nodes} nodes")
    q = grid.quad_weights
    basis = [np.full(raw.size, 1.0 / np.sqrt(grid.measure))]
    if target_level == 2:
        h = grid.curvature_H - grid.H_bar
        hn = np.sqrt(np.dot(q, h * h))
        if hn > 1e-12 * max(abs(grid.H_bar), 1.0) * np.sqrt(grid.measure):
            basis.append(h / hn)
    w = raw.copy()
    for _ in range(2):
        for e in basis:
            w -= np.dot(q, w * e) * e
    ref = max(np.max(np.abs(raw)), np.finfo(float).tiny)
    if np.max(np.abs(w)) <= 1e-12 * ref:
        raise DegenerateWeight(f"weight {name!r} lies in the projected-out span")
    return make_weight(w, grid, level=target_level, name=name)


def _check_weight(weight, grid):
    if weight.samples.size != grid.n_nodes:
        raise GridMismatch(f"weight sampled on {weight.samples.size} nodes, grid has {grid.n_nodes}")


def boundary_energy(rho, grid):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise NegativeDensity("flux density has negative samples")
    return grid.integrate(rho)


def weighted_energy(rho, weight, grid):
    """(E(w), E^abs(w)) = quadratures of rho * w and rho * |w|."""
    _check_weight(weight, grid)
    rho = np.asarray(rho, dtype=float)
    return grid.integrate(rho * weight.samples), grid.integrate(rho * np.abs(weight.samples))


def correlation(rho, weight, grid):
    """Boundary correlation coefficient E(w) / E; defined for zero-mean weights only."""
    if weight.level < 1:
        raise MeanNotZero(f"weight {weight.name!r} has int w = {weight.mu0:.3e}")
    ew, _ = weighted_energy(rho, weight, grid)
    return ew / boundary_energy(rho, grid)


def rellich_residual(rho, lam, grid):
    """|int g rho dsigma - 2 lam| / (2 lam)."""
    return abs(grid.integrate(grid.support_g * np.asarray(rho, dtype=float)) - 2.0 * lam) / (2.0 * lam)


@dataclass(frozen=True)
class FunctionalReport:
    k: int
    E_k: float
    E_k_w: float
    E_k_abs_w: float
    C_k_w: float


@dataclass(frozen=True, eq=False)
class ModeFunctionals:
    """Per-mode functionals for a whole spectrum and one weight (arrays over k)."""

    k: np.ndarray
    lam: np.ndarray
    E: np.ndarray
    E_w: np.ndarray
    E_abs_w: np.ndarray
    C_w: np.ndarray
    rellich: np.ndarray
    weight: Weight

    def report(self, k):
        i = k - 1
        return FunctionalReport(int(self.k[i]), float(self.E[i]), float(self.E_w[i]),
                                float(self.E_abs_w[i]), float(self.C_w[i]))


def mode_functionals(spectrum, grid, weight):
    """All per-mode functionals in one pass over the boundary quadrature."""
    spectrum.check_grid(grid)
    _check_weight(weight, grid)
    vecs = np.vstack([np.ones(grid.n_nodes), grid.support_g, weight.samples, np.abs(weight.samples)])
    ints = spectrum.modal_integrals(grid, vecs)
    E, gE, Ew, Eabs = ints.T
    lam = spectrum.lambdas
    C = Ew / E if weight.level >= 1 else np.full(E.size, np.nan)
    return ModeFunctionals(np.arange(1, lam.size + 1), lam, E, Ew, Eabs, C,
                           np.abs(gE - 2 * lam) / (2 * lam), weight)


def cumulative_below(lambdas, values, Lambdas):
    """sum_{lambda_j < Lambda} values_j for each Lambda (sequential reduction)."""
    csum = np.concatenate([[0.0], np.cumsum(values)])
    return csum[np.searchsorted(lambdas, np.asarray(Lambdas, dtype=float), side="left")]


def _check_reach(spectrum, Lambda):
    if Lambda > spectrum.lambdas[-1]:
        raise SpectrumTooShort(f"Lambda={Lambda} exceeds the largest computed eigenvalue "
                               f"{spectrum.lambdas[-1]:.6g}")


def q_lambda_pairing(spectrum, Lambda, weight, grid):
    """Discretized pairing int Q_Lambda w dsigma = sum_{lam_j < Lambda} E_j(w)."""
    _check_reach(spectrum, Lambda)
    _check_weight(weight, grid)
    n = int(np.searchsorted(spectrum.lambdas, Lambda, side="left"))
    if n == 0:
        return 0.0
    ints = spectrum.modal_integrals(grid, weight.samples[None, :], idx=np.arange(n))
    return float(np.sum(ints[:, 0]))


def s_lambda(spectrum, Lambda, grid=None):
    """Integrated boundary energy S(Lambda) = sum_{lam_j < Lambda} E_j."""
    _check_reach(spectrum, Lambda)
    n = int(np.searchsorted(spectrum.lambdas, Lambda, side="left"))
    if n == 0:
        return 0.0
    if grid is None:
        from .geometry import build_grid

        grid = build_grid(spectrum.domain, (64, 128) if spectrum.domain.kind == "ball" else 1024)
    ints = spectrum.modal_integrals(grid, np.ones((1, grid.n_nodes)), idx=np.arange(n))
    return float(np.sum(ints[:, 0]))


__all__ = [
    "FunctionalReport",
    "ModeFunctionals",
    "Weight",
    "boundary_energy",
    "certified_level",
    "correlation",
    "cumulative_below",
    "make_weight",
    "mode_functionals",
    "moment_project",
    "q_lambda_pairing",
    "rellich_residual",
    "s_lambda",
    "weighted_energy",
]
