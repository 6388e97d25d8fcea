"""Exact Dirichlet spectra of the disk and the ball.

Disk modes are J_m(sqrt(lam) r) cos(m theta) / sin(m theta) with
lam = (j_{m,n}/R)^2; ball modes are j_l(sqrt(lam) r) Y_lq with
lam = (j_{l+1/2,n}/R)^2. Traces are stored symbolically (amplitude plus
angular labels) and evaluated on demand, normalized so that the Rellich
identity with a centered base point gives E_k = 2 lam_k / R.
"""

import numpy as np

from . import geometry, kernels
from .errors import DomainMismatch
from .special import ZeroTable, legendre_table
from .spectrum import Mode, Spectrum

_PARITY = {"cos": 0, "sin": 1}


def disk_amplitude(lam, R, m):
    """Trace amplitude A with A^2 = 2 lam / (pi R^2), halved in the radial (m = 0) case."""
    return np.sqrt(2.0 * lam / (np.pi * R * R) / (2.0 if m == 0 else 1.0))


def ball_amplitude(lam, R):
    return np.sqrt(2.0 * lam / R ** 3)


def _required_count(K):
    return int(1.05 * K) + 16


class DiskSpectrum(Spectrum):
    def __init__(self, domain, modes):
        super().__init__(domain, modes)
        self._m = np.array([md.family[1] for md in self.modes], dtype=np.int64)
        self._parity = np.array([_PARITY[md.family[3]] for md in self.modes], dtype=np.int64)
        self._amp = np.array([md.trace_coeff for md in self.modes])

    def _group(self):
        groups, start = [], 0
        for i in range(1, len(self.modes) + 1):
            if i == len(self.modes) or self.modes[i].family[1:3] != self.modes[i - 1].family[1:3]:
                groups.append(np.arange(start, i))
                start = i
        return tuple(groups)

    def traces(self, grid, idx=None):
        self.check_grid(grid)
        pos = self._positions(idx)
        arg = np.outer(self._m[pos], grid.params)
        trig = np.where(self._parity[pos, None] == 0, np.cos(arg), np.sin(arg))
        return self._amp[pos, None] * trig

    def modal_integrals(self, grid, vecs, idx=None):
        self.check_grid(grid)
        pos = self._positions(idx)
        vecs = np.atleast_2d(np.asarray(vecs, dtype=float)) * grid.quad_weights
        return kernels.trig_mode_integrals(
            self._m[pos], self._parity[pos], self._amp[pos] ** 2, grid.params, vecs
        )

    def truncated(self, K):
        return DiskSpectrum(self.domain, self.modes[:K])


class BallSpectrum(Spectrum):
    def __init__(self, domain, modes):
        super().__init__(domain, modes)
        self._l = np.array([md.family[1] for md in self.modes], dtype=np.int64)
        self._q = np.array([md.family[3] for md in self.modes], dtype=np.int64)
        self._amp = np.array([md.trace_coeff for md in self.modes])

    def _group(self):
        groups, start = [], 0
        for i in range(1, len(self.modes) + 1):
            if i == len(self.modes) or self.modes[i].family[1:3] != self.modes[i - 1].family[1:3]:
                groups.append(np.arange(start, i))
                start = i
        return tuple(groups)

    def _factors(self, grid, pos):
        """Latitude and longitude factors of A * Y_lq, each per mode."""
        n_lat, n_lon = grid.shape
        polar = grid.params[::n_lon, 0]
        azim = grid.params[:n_lon, 1]
        ls, qs = self._l[pos], self._q[pos]
        lmax = int(ls.max()) if ls.size else 0
        P = legendre_table(lmax, np.cos(polar))
        aq = np.abs(qs)
        lat = P[ls, aq] * (self._amp[pos] / np.where(qs == 0, np.sqrt(2 * np.pi), np.sqrt(np.pi)))[:, None]
        arg = np.outer(aq, azim)
        lon = np.where(qs[:, None] >= 0, np.cos(arg), np.sin(arg))
        return lat, lon

    def traces(self, grid, idx=None):
        self.check_grid(grid)
        pos = self._positions(idx)
        lat, lon = self._factors(grid, pos)
        return (lat[:, :, None] * lon[:, None, :]).reshape(pos.size, -1)

    def modal_integrals(self, grid, vecs, idx=None):
        self.check_grid(grid)
        pos = self._positions(idx)
        lat, lon = self._factors(grid, pos)
        vecs = np.atleast_2d(np.asarray(vecs, dtype=float)) * grid.quad_weights
        lat2, lon2 = lat ** 2, lon ** 2
        out = np.empty((pos.size, vecs.shape[0]))
        for v, vec in enumerate(vecs):
            out[:, v] = np.einsum("ki,ij,kj->k", lat2, vec.reshape(grid.shape), lon2)
        return out

    def truncated(self, K):
        return BallSpectrum(self.domain, self.modes[:K])


def disk_spectrum(R=1.0, K=100, x0=None):
    """First K Dirichlet modes of the disk of radius R, sorted by (lam, m, cos < sin)."""
    dom = geometry.disk(R, x0)
    need = _required_count(K)
    # two-term Weyl count R^2 L/4 - R sqrt(L)/2 = need, solved for sqrt(L) * R
    bound = 1.0 + np.sqrt(1.0 + 4.0 * need)
    table = ZeroTable(half=False)
    while True:
        family = table.family_below(bound)
        count = sum((1 if m == 0 else 2) * z.size for m, z in family.items())
        if count >= K:
            break
        bound *= 1.15
    entries = []
    for m, zeros in family.items():
        for n, z in enumerate(zeros, start=1):
            lam = (z / R) ** 2
            for parity in (("cos",) if m == 0 else ("cos", "sin")):
                entries.append((lam, m, _PARITY[parity], n, parity))
    entries.sort(key=lambda e: e[:3])
    modes = [
        Mode(k, lam, ("disk", m, n, parity), float(disk_amplitude(lam, R, m)))
        for k, (lam, m, _, n, parity) in enumerate(entries[:K], start=1)
    ]
    return DiskSpectrum(dom, modes)


def ball_spectrum(R=1.0, K=100, x0=None):
    """First K Dirichlet modes of the ball of radius R, sorted by (lam, l, q)."""
    dom = geometry.ball(R, x0)
    need = _required_count(K)
    # leading Weyl term (4/3 pi) L^(3/2) / (6 pi^2) = need, in units of sqrt(L) * R
    bound = (need * 4.5 * np.pi) ** (1.0 / 3.0) + 2.0
    table = ZeroTable(half=True)
    while True:
        family = table.family_below(bound)
        count = sum((2 * ell + 1) * z.size for ell, z in family.items())
        if count >= K:
            break
        bound *= 1.15
    entries = []
    for ell, zeros in family.items():
        for n, z in enumerate(zeros, start=1):
            lam = (z / R) ** 2
            for q in range(-ell, ell + 1):
                entries.append((lam, ell, q, n))
    entries.sort(key=lambda e: e[:3])
    amp = ball_amplitude
    modes = [
        Mode(k, lam, ("ball", ell, n, q), float(amp(lam, R)))
        for k, (lam, ell, q, n) in enumerate(entries[:K], start=1)
    ]
    return BallSpectrum(dom, modes)


def trace_at(mode, grid):
    """Signed normal-derivative trace of one analytic mode at the grid nodes."""
    kind = mode.kind
    if grid.domain.kind != kind:
        raise DomainMismatch(f"{kind} mode evaluated on a {grid.domain.kind} grid")
    R = grid.domain.param("R")
    if kind == "disk":
        _, m, _, parity = mode.family
        expected = disk_amplitude(mode.lam, R, m)
    else:
        expected = ball_amplitude(mode.lam, R)
    if abs(mode.trace_coeff - expected) > 1e-10 * expected:
        raise DomainMismatch(f"mode amplitude does not match a {kind} of radius {R}")
    spec_cls = DiskSpectrum if kind == "disk" else BallSpectrum
    return spec_cls(grid.domain, [mode]).traces(grid)[0]


def rho_at(mode, grid):
    """Boundary flux density |d_n u|^2 of one mode at the grid nodes."""
    if hasattr(mode, "coeffs"):
        from .mps import extract_trace

        return extract_trace(mode, grid)
    return trace_at(mode, grid) ** 2
