import numpy as np
import pytest

from ballwalk.errors import InvalidParameterError
from ballwalk.geometry import TWO_PI, FlatTorus, RevolutionTorus, Sphere2
from ballwalk.kernels import (
    BallVolumeTable,
    WalkConfig,
    ball_volume_function,
    holding_probability,
    kernel_density,
    metropolis_step,
    stationary_density,
    step,
)
from ballwalk.rng import substream


@pytest.fixture(scope="module")
def rev():
    return RevolutionTorus(2.0, 1.0)


def test_walk_config_validation():
    with pytest.raises(InvalidParameterError):
        WalkConfig(h=-0.1)
    with pytest.raises(InvalidParameterError):
        WalkConfig(h=0.1, kind="gibbs")


def test_volume_table_accuracy(rev):
    table = BallVolumeTable(rev, 0.3)
    assert table.max_rel_error < 1e-8
    th = np.array([0.3, 2.2, 5.0])
    direct = rev.ball_volume(np.stack([th, np.zeros(3)], axis=-1), 0.3)
    assert np.allclose(table(th), direct, rtol=1e-7)


def test_volume_function_constant_on_homogeneous():
    m = FlatTorus([TWO_PI, TWO_PI])
    f = ball_volume_function(m, 0.2)
    x = np.array([[0.1, 0.2], [3.0, 4.0]])
    assert np.allclose(f(x), np.pi * 0.04)
    s = Sphere2()
    fs = ball_volume_function(s, 0.2)
    assert np.allclose(fs(np.array([[0.0, 0.0, 1.0]])), TWO_PI * (1 - np.cos(0.2)))


def test_metropolis_never_holds_on_homogeneous():
    m = FlatTorus([TWO_PI])
    cfg = WalkConfig(h=0.2, kind="metropolis")
    out = metropolis_step(m, cfg, np.zeros((100, 1)), substream(0, 0))
    assert not out.held.any()


def test_metropolis_hold_realizes_atom(rev):
    # empirical hold rate at a fixed point vs quadrature m_h, 3 sigma
    h = 0.35
    x = np.tile([2.2, 0.0], (60000, 1))
    cfg = WalkConfig(h=h, kind="metropolis", sampler_mode="taylor", sampler_steps=4)
    out = metropolis_step(rev, cfg, x, substream(11, 0))
    mh = float(holding_probability(rev, h, np.array([2.2, 0.0])))
    phat = out.held.mean()
    sigma = np.sqrt(mh * (1 - mh) / len(x))
    assert abs(phat - mh) <= 3 * sigma + 1e-6
    # held chains stay put, moved chains stay inside the ball
    assert np.all(out.next[out.held] == x[out.held])
    assert np.max(rev.distance(x, out.next)) <= h + rev.distance_bound(h)


def test_kernel_density_symmetry(rev):
    rng = substream(12, 0)
    h = 0.25
    x = np.stack([rng.random(10000) * TWO_PI, rng.random(10000) * TWO_PI], axis=-1)
    y = rev.sample_ball(rng, x, h, mode="taylor", n_steps=4)
    kxy = kernel_density(rev, h, x, y, "metropolis")
    kyx = kernel_density(rev, h, y, x, "metropolis")
    assert np.max(np.abs(kxy - kyx)) <= 1e-12
    # ball-walk density is 1/|B(x)| inside, 0 outside (the sampler bounds
    # arc length by h, but the midpoint distance can exceed h by its O(h^3)
    # error, so compare on the strictly-inside set)
    kb = kernel_density(rev, h, x, y, "ball")
    vol = ball_volume_function(rev, h)(x)
    inside = rev.distance(x, y) <= h
    assert np.allclose(kb[inside], 1.0 / vol[inside], rtol=1e-7)
    assert np.all(kb[~inside] == 0.0)


def test_holding_probability_zero_on_homogeneous():
    m = FlatTorus([TWO_PI, TWO_PI])
    assert np.all(holding_probability(m, 0.2, np.zeros((3, 2))) == 0)


def test_holding_probability_scales_h3(rev):
    hs = np.array([0.1, 0.2])
    x = np.array([3.9, 0.0])  # near the sup of m_h
    vals = np.array([float(holding_probability(rev, h, x)) for h in hs])
    slope = np.log(vals[1] / vals[0]) / np.log(2.0)
    assert slope == pytest.approx(3.0, abs=0.3)


def test_stationary_density_normalization(rev):
    for kind in ("uniform", "nu_h"):
        dens = stationary_density(rev, 0.3, kind)
        n = 256
        th = np.arange(n) * (TWO_PI / n)
        pts = np.stack([th, np.zeros(n)], axis=-1)
        mass = np.sum(dens(pts) * rev.r * rev.w(th)) * (TWO_PI / n) * TWO_PI
        assert mass == pytest.approx(1.0, abs=1e-8)


def test_step_dispatch():
    m = FlatTorus([TWO_PI])
    x = np.zeros((10, 1))
    for kind in ("ball", "metropolis"):
        out = step(m, WalkConfig(h=0.3, kind=kind), x, substream(1, 2))
        assert np.max(m.distance(x, out.next)) <= 0.3
