import numpy as np
import pytest
from scipy.integrate import quad

from ballwalk.errors import InvalidParameterError, RegionError, ResolutionError
from ballwalk.geometry import TWO_PI, FlatTorus, RevolutionTorus
from ballwalk.specfun import gamma_d
from ballwalk.spectral import (
    assemble_operator,
    eigen_decompose,
    resolvent_gap_torus,
    sphere_spectrum_zonal,
    supnorm_growth,
    torus_spectrum_exact,
    weyl_count_torus,
    weyl_phase_volume,
)


@pytest.fixture(scope="module")
def flat():
    return FlatTorus([TWO_PI])


@pytest.fixture(scope="module")
def rev_ops():
    m = RevolutionTorus(2.0, 1.0)
    K = assemble_operator(m, 0.3, "ball", resolution=256)
    M = assemble_operator(m, 0.3, "metropolis", resolution=256)
    return m, K, M


def test_flat_assembly_matches_symbol(flat):
    # band-limited circulant reproduces gamma_1(h^2 k^2) to machine level
    h = 0.3
    K = assemble_operator(flat, h, "ball", resolution=256)
    rep = eigen_decompose(K)
    k = np.fft.fftfreq(256, 1.0 / 256)
    exact = np.sort(gamma_d(1, h**2 * k**2))[::-1]
    assert np.max(np.abs(rep.mu - exact)) < 1e-12


def test_flat_assembly_vs_direct_quadrature(flat):
    # dual route: adaptive quadrature of the sharp indicator against the
    # trigonometric cardinal basis reproduces the assembled entries
    h, n = 0.3, 256
    K = assemble_operator(flat, h, "ball", resolution=n)
    grid = np.arange(n) * (TWO_PI / n)

    def card(x):
        x = np.mod(x + np.pi, TWO_PI) - np.pi
        if abs(np.sin(0.5 * x)) < 1e-14:
            return 1.0
        return np.sin(0.5 * n * x) / (n * np.tan(0.5 * x))

    for i, j in ((0, 0), (0, 2), (7, 11), (200, 190)):
        val, _ = quad(lambda y: card(y - grid[j]), grid[i] - h, grid[i] + h,
                      limit=400)
        assert K.matrix[i, j] == pytest.approx(val / (2 * h), abs=1e-12)


def test_flat_resolution_guard(flat):
    with pytest.raises(ResolutionError):
        assemble_operator(flat, 0.05, "ball", resolution=64)


def test_exact_spectrum_report(flat):
    rep = torus_spectrum_exact(flat, 0.1, count=9)
    assert rep.mu[0] == 1.0
    assert rep.mu[1] == pytest.approx(np.sin(0.1) / 0.1, abs=1e-15)
    assert rep.tau[1] == pytest.approx(1.0 / 6, abs=1e-3)
    assert rep.weyl_count(0.0) == 1


def test_sphere_zonal_small_h_rate():
    # tau_l -> l(l+1)/8 with O(h^2) error
    for l in (1, 2):
        lam = l * (l + 1.0)
        rep = sphere_spectrum_zonal(0.02, l_max=4)
        mu_l = np.sort(np.unique(rep.mu))[::-1][l]
        assert (1.0 - mu_l) / 0.02**2 == pytest.approx(lam / 8.0, rel=1e-3)


def test_rev_blocks_structure(rev_ops):
    m, K, M = rev_ops
    assert [b.label for b in K.blocks] == [0, 1, 2, 3, 4]
    for b in K.blocks + M.blocks:
        assert b.asym_defect < 1e-4
    # constant function is exactly invariant: mu_0 = 1 in the m=0 block
    rep = eigen_decompose(K)
    assert rep.mu[0] == pytest.approx(1.0, abs=1e-9)
    repM = eigen_decompose(M)
    assert repM.mu[0] == pytest.approx(1.0, abs=1e-9)
    # Metropolis atom is O(h^3)-small, nonnegative up to quadrature error
    assert np.all(M.blocks[0].atom >= -1e-4)
    assert np.max(M.blocks[0].atom) < 1e-3


def test_rev_tau_matches_reference(rev_ops):
    m, K, _ = rev_ops
    rep = eigen_decompose(K)
    assert rep.tau[1] == pytest.approx(rep.lam_ref[1] / 8.0, abs=2e-4)
    assert rep.lam_ref[1] == pytest.approx(0.249368, abs=1e-5)


def test_weyl_count_matches_eigensolve(flat):
    h = 0.3
    K = assemble_operator(flat, h, "ball", resolution=256)
    rep = eigen_decompose(K)
    for tau in (1.0, 4.0, 9.0):
        assert rep.weyl_count(tau) == weyl_count_torus(flat, h, tau)


def test_weyl_phase_volume_tracks_count(flat):
    h = 0.1
    for tau in (4.0, 16.0, 64.0):
        n = weyl_count_torus(flat, h, tau)
        pv = weyl_phase_volume(flat, h, tau)
        assert abs(n - pv) <= 1.0  # d=1: remainder is O(1)
    with pytest.raises(InvalidParameterError):
        weyl_phase_volume(flat, h, 1e6)


def test_resolvent_region_errors(flat):
    with pytest.raises(RegionError):
        resolvent_gap_torus(flat, 0.1, 1.2 + 0j)  # within eps of lambda=1
    with pytest.raises(RegionError):
        resolvent_gap_torus(flat, 0.1, 80.0 + 1j)  # inside the cone


def test_resolvent_h2_scaling(flat):
    g = [resolvent_gap_torus(flat, h, -1.0 + 0j) for h in (0.2, 0.1)]
    assert g[0] / g[1] == pytest.approx(4.0, abs=0.5)


def test_supnorm_growth_flat(flat):
    K = assemble_operator(flat, 0.3, "ball", resolution=256)
    rep = eigen_decompose(K, want_vectors=True)
    # flat modes have constant sup/L2 ratio: exponent ~ 0
    assert abs(supnorm_growth(rep, tau_min=0.5)) < 0.05
