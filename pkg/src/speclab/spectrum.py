"""Mode and Spectrum containers shared by the analytic and collocation paths."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatch, InvalidParameter, SpectrumTooShort


@dataclass(frozen=True)
class Mode:
    """One Dirichlet eigenpair, represented through its boundary trace.

    ``family`` is ("disk", m, n, parity), ("ball", l, n, q) or
    ("mps", symmetry_class, n, cluster_size). ``trace_coeff`` is the trace
    amplitude A; for analytic modes |d_n u| = |A * angular factor|.
    """

    k: int
    lam: float
    family: tuple
    trace_coeff: float

    @property
    def kind(self):
        return self.family[0]


def same_geometry(a, b):
    """True when two domains have the same shape (base points may differ)."""
    return a.kind == b.kind and a.params == b.params


class Spectrum:
    """Sorted collection of modes with eigenspace bookkeeping.

    Subclasses implement :meth:`traces`; everything else (densities,
    quadratures against boundary functions) is derived from it.
    """

    cluster_rtol = 1e-12

    def __init__(self, domain, modes):
        self.domain = domain
        self.modes = tuple(modes)
        self.lambdas = np.array([m.lam for m in self.modes])
        self.lambdas.setflags(write=False)
        if self.lambdas.size and np.any(np.diff(self.lambdas) < 0):
            raise InvalidParameter("modes must be sorted by eigenvalue")
        self.eigenspace_index = self._group()

    def _group(self):
        groups, start = [], 0
        lam = self.lambdas
        for i in range(1, lam.size + 1):
            if i == lam.size or lam[i] - lam[i - 1] > self.cluster_rtol * lam[i]:
                groups.append(np.arange(start, i))
                start = i
        return tuple(groups)

    @property
    def K(self):
        return len(self.modes)

    def __len__(self):
        return len(self.modes)

    def mode(self, k):
        """Mode with 1-based index k."""
        if not 1 <= k <= self.K:
            raise SpectrumTooShort(f"mode {k} requested but only {self.K} computed")
        return self.modes[k - 1]

    def eigenspace_of(self, k):
        """0-based positions of the eigenspace containing 1-based mode k."""
        pos = k - 1
        for group in self.eigenspace_index:
            if group[0] <= pos <= group[-1]:
                return group
        raise SpectrumTooShort(f"mode {k} outside the computed spectrum")

    def check_grid(self, grid):
        if not same_geometry(self.domain, grid.domain):
            raise DomainMismatch(
                f"spectrum on {self.domain.kind}{dict(self.domain.params)} "
                f"but grid on {grid.domain.kind}{dict(grid.domain.params)}"
            )

    def _positions(self, idx):
        if idx is None:
            return np.arange(self.K)
        return np.asarray(idx, dtype=np.int64)

    def traces(self, grid, idx=None):
        """Signed normal-derivative traces, shape (len(idx), n_nodes)."""
        raise NotImplementedError

    def rho_matrix(self, grid, idx=None):
        return self.traces(grid, idx) ** 2

    def modal_integrals(self, grid, vecs, idx=None):
        """out[j, v] = int rho_{idx[j]} * vecs[v] dsigma over the grid."""
        self.check_grid(grid)
        vecs = np.atleast_2d(np.asarray(vecs, dtype=float))
        rho = self.rho_matrix(grid, idx)
        return (rho * grid.quad_weights) @ vecs.T

    def truncated(self, K):
        raise NotImplementedError
