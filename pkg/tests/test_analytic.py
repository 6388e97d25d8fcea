import mpmath
import numpy as np
import pytest
from scipy.special import jn_zeros

from speclab import analytic, geometry
from speclab.errors import DomainMismatch, SpectrumTooShort


def _disk_oracle(K):
    lams = []
    for m in range(0, 60):
        for z in jn_zeros(m, 40):
            lams += [z * z] * (1 if m == 0 else 2)
    return np.sort(lams)[:K]


def test_disk_eigenvalues_match_scipy_zeros():
    spec = analytic.disk_spectrum(1.0, 600)
    assert np.max(np.abs(spec.lambdas - _disk_oracle(600)) / spec.lambdas) < 1e-13


def test_disk_radius_scaling():
    a = analytic.disk_spectrum(1.0, 50).lambdas
    b = analytic.disk_spectrum(2.0, 50).lambdas
    assert np.allclose(b, a / 4, rtol=1e-14)


def test_disk_first_modes_and_ties():
    spec = analytic.disk_spectrum(1.0, 6)
    fams = [m.family for m in spec.modes]
    assert fams[0] == ("disk", 0, 1, "cos")
    assert fams[1] == ("disk", 1, 1, "cos") and fams[2] == ("disk", 1, 1, "sin")
    assert [len(g) for g in spec.eigenspace_index] == [1, 2, 2, 1]
    assert spec.mode(1).k == 1
    with pytest.raises(SpectrumTooShort):
        spec.mode(7)


def test_ball_eigenvalues_match_mpmath_zeros():
    spec = analytic.ball_spectrum(1.0, 200)
    lams = []
    for ell in range(0, 12):
        for n in range(1, 8):
            z = float(mpmath.besseljzero(ell + 0.5, n))
            lams += [z * z] * (2 * ell + 1)
    assert np.max(np.abs(spec.lambdas - np.sort(lams)[:200]) / spec.lambdas) < 1e-13


def test_ball_multiplicities_and_q_order():
    spec = analytic.ball_spectrum(1.0, 40)
    sizes = {}
    for g in spec.eigenspace_index:
        ell = spec.modes[g[0]].family[1]
        sizes.setdefault(ell, len(g))
        qs = [spec.modes[i].family[3] for i in g]
        if len(g) == 2 * ell + 1:
            assert qs == list(range(-ell, ell + 1))
    for ell, n in sizes.items():
        if ell <= 2:
            assert n == 2 * ell + 1


def test_disk_energy_is_two_lambda_over_R(disk_grid):
    spec = analytic.disk_spectrum(1.0, 300)
    rho = spec.rho_matrix(disk_grid)
    E = rho @ disk_grid.quad_weights
    assert np.max(np.abs(E - 2 * spec.lambdas) / (2 * spec.lambdas)) < 1e-12


def test_disk_rellich_with_shifted_base_point():
    dom = geometry.disk(1.0, x0=(0.3, -0.2))
    spec = analytic.disk_spectrum(1.0, 200, x0=dom.x0)
    g = geometry.build_grid(dom, 2048)
    rho = spec.rho_matrix(g)
    lhs = rho @ (g.quad_weights * g.support_g)
    assert np.max(np.abs(lhs - 2 * spec.lambdas) / (2 * spec.lambdas)) < 1e-11


def test_ball_addition_theorem(ball_grid):
    spec = analytic.ball_spectrum(1.0, 300)
    T = spec.traces(ball_grid)
    for g in spec.eigenspace_index:
        ell = spec.modes[g[0]].family[1]
        if len(g) != 2 * ell + 1:
            continue
        lam = spec.lambdas[g[0]]
        # sum_q |Y_lq|^2 = (2l + 1)/(4 pi); amplitude squared 2 lam
        dens = np.sum(T[g] ** 2, axis=0)
        assert np.allclose(dens, 2 * lam * (2 * ell + 1) / (4 * np.pi), rtol=1e-11)


def test_ball_energy_and_modal_integrals(ball_grid):
    spec = analytic.ball_spectrum(1.0, 400)
    rho = spec.rho_matrix(ball_grid)
    vecs = np.vstack([np.ones(ball_grid.n_nodes), ball_grid.nodes[:, 2] ** 2])
    direct = (rho * ball_grid.quad_weights) @ vecs.T
    fast = spec.modal_integrals(ball_grid, vecs)
    assert np.max(np.abs(direct - fast)) < 1e-9 * np.max(np.abs(direct))
    assert np.allclose(fast[:, 0], 2 * spec.lambdas, rtol=1e-12)


def test_disk_modal_integrals_match_dense(disk_grid, rng):
    spec = analytic.disk_spectrum(1.0, 200)
    vecs = rng.standard_normal((2, disk_grid.n_nodes))
    direct = (spec.rho_matrix(disk_grid) * disk_grid.quad_weights) @ vecs.T
    assert np.max(np.abs(spec.modal_integrals(disk_grid, vecs) - direct)) < 1e-9


def test_trace_at_and_domain_checks():
    spec = analytic.disk_spectrum(1.0, 10)
    g1 = geometry.build_grid(geometry.disk(1.0), 256)
    g2 = geometry.build_grid(geometry.disk(2.0), 256)
    tr = analytic.trace_at(spec.mode(2), g1)
    assert np.allclose(tr, spec.traces(g1, [1])[0])
    assert np.allclose(analytic.rho_at(spec.mode(2), g1), tr ** 2)
    with pytest.raises(DomainMismatch):
        analytic.trace_at(spec.mode(2), g2)
    with pytest.raises(DomainMismatch):
        spec.traces(geometry.build_grid(geometry.ball(1.0), (8, 16)))


def test_truncation_preserves_modes():
    spec = analytic.ball_spectrum(1.0, 50)
    t = spec.truncated(20)
    assert t.K == 20 and t.modes == spec.modes[:20]
