import numpy as np
import pytest
from scipy import stats

from ballwalk.errors import InjectivityRadiusError, InvalidParameterError
from ballwalk.geometry import (
    TWO_PI,
    FlatTorus,
    RevolutionTorus,
    Sphere2,
    make_manifold,
)
from ballwalk.rng import substream

# independently derived reference: Sturm-Liouville m=1 ground state of the
# (R, r) = (2, 1) torus, Richardson-extrapolated over grid doublings
LAMBDA1_REV = 0.249368057


# ---------------------------------------------------------------------------
# flat torus


def test_flat_wraparound_distance():
    m = FlatTorus([1.0, 2.0])
    d = m.distance(np.array([0.05, 0.1]), np.array([0.95, 1.9]))
    assert d == pytest.approx(np.hypot(0.1, 0.2), abs=1e-14)


def test_flat_exp_log_roundtrip():
    m = FlatTorus([TWO_PI, TWO_PI])
    rng = substream(1, 1)
    x = rng.random((50, 2)) * TWO_PI
    v = (rng.random((50, 2)) - 0.5) * 2.0
    y = m.exp_map(x, v)
    assert np.allclose(m.log_map(x, y), v, atol=1e-12)
    assert np.allclose(m.distance(x, y), np.hypot(v[:, 0], v[:, 1]), atol=1e-12)


def test_flat_ball_volume_disc():
    m = FlatTorus([TWO_PI, TWO_PI])
    vol = m.ball_volume(np.zeros((1, 2)), 0.1)
    assert vol[0] == pytest.approx(np.pi * 0.01, rel=1e-14)


def test_flat_radial_law_ks():
    # d=2 sampler: P(rho <= t h) = t^2
    m = FlatTorus([TWO_PI, TWO_PI])
    rng = substream(2, 0)
    x = np.zeros((100000, 2)) + 1.0
    y = m.sample_ball(rng, x, 0.3)
    rho = m.distance(x, y) / 0.3
    stat = stats.kstest(rho, lambda t: t**2)
    assert stat.pvalue > 1e-3


def test_flat_spectrum_and_eigenfunctions():
    m = FlatTorus([TWO_PI])
    lams = m.reference_eigenvalues(7)
    assert np.allclose(lams, [0, 1, 1, 4, 4, 9, 9])
    # orthonormality on a quadrature grid
    xs = (np.arange(4096) * (TWO_PI / 4096))[:, None]
    w = TWO_PI / 4096
    f1 = m.eigenfunction(1)(xs)
    f2 = m.eigenfunction(2)(xs)
    assert np.sum(f1 * f1) * w == pytest.approx(1.0, abs=1e-10)
    assert np.sum(f1 * f2) * w == pytest.approx(0.0, abs=1e-10)


def test_flat_radius_guard():
    m = FlatTorus([1.0])
    with pytest.raises(InjectivityRadiusError):
        m.check_radius(0.6)


# ---------------------------------------------------------------------------
# sphere


def test_sphere_distance_and_exp():
    m = Sphere2()
    n = np.array([0.0, 0.0, 1.0])
    s = np.array([0.0, 0.0, -1.0])
    assert m.distance(n, s) == pytest.approx(np.pi, abs=1e-12)
    rng = substream(3, 0)
    x = rng.standard_normal((200, 3))
    x /= np.linalg.norm(x, axis=-1, keepdims=True)
    v = rng.standard_normal((200, 3))
    v -= np.sum(v * x, axis=-1, keepdims=True) * x
    v *= (0.5 / np.linalg.norm(v, axis=-1, keepdims=True))
    y = m.exp_map(x, v)
    assert np.allclose(m.distance(x, y), 0.5, atol=1e-12)
    assert np.allclose(m.log_map(x, y), v, atol=1e-10)


def test_sphere_cap_volume_and_sampler():
    m = Sphere2()
    h = 0.4
    assert m.ball_volume(np.array([[0.0, 0.0, 1.0]]), h)[0] == pytest.approx(
        TWO_PI * (1 - np.cos(h)), rel=1e-14)
    rng = substream(4, 0)
    x = np.tile(np.array([0.0, 0.0, 1.0]), (100000, 1))
    y = m.sample_ball(rng, x, h)
    # cos(polar angle) uniform on [cos h, 1]
    c = y[:, 2]
    stat = stats.kstest((1.0 - c) / (1.0 - np.cos(h)), "uniform")
    assert stat.pvalue > 1e-3
    assert np.max(m.distance(x, y)) <= h + 1e-12


def test_sphere_spectrum_and_addition_theorem():
    m = Sphere2()
    spec = m.reference_spectrum(4)
    assert spec[0] == (0.0, 1)
    assert spec[1] == (2.0, 3)
    # sum of |Y_1m|^2 over the l=1 shell is constant 3/(4 pi)
    rng = substream(5, 0)
    x = rng.standard_normal((20, 3))
    x /= np.linalg.norm(x, axis=-1, keepdims=True)
    total = sum(m.eigenfunction(k)(x) ** 2 for k in (1, 2, 3))
    assert np.allclose(total, 3.0 / (4 * np.pi), atol=1e-10)


# ---------------------------------------------------------------------------
# revolution torus


@pytest.fixture(scope="module")
def rev():
    return RevolutionTorus(2.0, 1.0)


def test_rev_metric_and_curvature(rev):
    assert rev.volume == pytest.approx(4 * np.pi**2 * 2.0, rel=1e-14)
    assert rev.gauss_curvature(0.0) == pytest.approx(1.0 / 3.0)
    assert rev.gauss_curvature(np.pi) == pytest.approx(-1.0)
    assert rev.scalar_curvature(np.array([0.0, 0.3])) == pytest.approx(2.0 / 3.0)


def test_rev_exp_distance_consistency(rev):
    rng = substream(6, 0)
    x = np.stack([rng.random(100) * TWO_PI, rng.random(100) * TWO_PI], axis=-1)
    s = 0.05 + 0.25 * rng.random(100)
    alpha = rng.random(100) * TWO_PI
    v = rev.tangent_polar_vector(x, s, alpha)
    y = rev.exp_map(x, v)
    d = rev.distance(x, y)
    # midpoint-rule distance carries a documented O(s^3) bound
    assert np.all(np.abs(d - s) <= rev.distance_bound(s) + 1e-9)


def test_rev_distance_shooting_oracle(rev):
    # oracle route: dense polyline length along the numerically integrated
    # geodesic equals the requested arc length
    x = np.array([1.0, 2.0])
    s = 0.3
    v = rev.tangent_polar_vector(x, s, 1.1)
    fracs = np.linspace(0.0, 1.0, 201)[1:]
    th, ph, _ = rev._flow(np.array([x[0]]), np.array([x[1]]),
                          np.array([v[0]]), np.array([v[1]]),
                          length=1.0, n_steps=64, record_at=fracs)
    pts = np.stack([th[:, 0], ph[:, 0]], axis=-1)
    seg = np.vstack([x[None], pts])
    length = float(np.sum(rev._segment_length(
        seg[:-1, 0], seg[:-1, 1], seg[1:, 0], seg[1:, 1])))
    assert length == pytest.approx(s, abs=5e-6)


def test_rev_ball_volume_curvature_expansion(rev):
    hs = np.linspace(0.05, 0.15, 5)
    for th in (0.0, 2.0):
        vols = np.array([float(rev.ball_volume(np.array([[th, 0.0]]), h)[0])
                         for h in hs])
        y = vols / (np.pi * hs**2) - 1.0
        c = np.sum(y * hs**2) / np.sum(hs**4)
        assert c == pytest.approx(-rev.gauss_curvature(th) / 12.0, rel=0.05)


def test_rev_sampler_modes_agree(rev):
    rng = substream(7, 0)
    x = np.tile([2.5, 0.0], (40000, 1))
    h = 0.25
    y_ode = rev.sample_ball(rng, x, h, mode="ode")
    y_tay = rev.sample_ball(rng, x, h, mode="taylor", n_steps=4)
    assert np.max(rev.distance(x, y_ode)) <= h + rev.distance_bound(h)
    # the two modes draw from the same law up to O(h^3) density bias:
    # compare theta-marginal histograms with a chi-square
    bins = np.linspace(2.5 - h, 2.5 + h, 9)
    c1, _ = np.histogram(y_ode[:, 0], bins)
    c2, _ = np.histogram(y_tay[:, 0], bins)
    stat = stats.chisquare(c1, c2 * c1.sum() / c2.sum()).pvalue
    assert stat > 1e-4


def test_rev_sturm_liouville_reference(rev):
    lam, _, _ = rev.sturm_liouville_modes(1, 2, 1024)
    assert lam[0] == pytest.approx(LAMBDA1_REV, abs=2e-7)
    # grid doubling moves the value by well under the acceptance tolerances
    lam2, _, _ = rev.sturm_liouville_modes(1, 2, 2048)
    assert abs(lam[0] - lam2[0]) < 1e-6
    spec = rev.reference_spectrum(6)
    assert spec[0][0] == pytest.approx(0.0, abs=1e-10)
    assert spec[1][1] == 2  # lambda_1 doubly degenerate


def test_rev_eigenfunction_orthonormality(rev):
    n = 256
    th = np.arange(n) * (TWO_PI / n)
    ph = np.arange(n) * (TWO_PI / n)
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    pts = np.stack([TH, PH], axis=-1)
    w = rev.r * rev.w(TH) * (TWO_PI / n) ** 2
    f0 = rev.eigenfunction(0)(pts)
    f1 = rev.eigenfunction(1)(pts)
    assert np.sum(f0 * f0 * w) == pytest.approx(1.0, abs=1e-6)
    assert np.sum(f1 * f1 * w) == pytest.approx(1.0, abs=1e-4)
    assert np.sum(f0 * f1 * w) == pytest.approx(0.0, abs=1e-8)


def test_make_manifold_factory():
    assert make_manifold({"manifold": "flat_torus", "d": 2}).dim == 2
    assert make_manifold({"manifold": "sphere2"}).name == "sphere2"
    m = make_manifold({"manifold": "revolution_torus", "R": 3.0, "r": 1.0})
    assert m.R == 3.0
    with pytest.raises(InvalidParameterError):
        make_manifold({"manifold": "klein_bottle"})
