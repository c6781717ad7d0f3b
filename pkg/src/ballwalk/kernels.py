"""Ball-walk and Metropolis kernels: steppers, densities, holding probability.

The ball walk moves to a uniform point of the geodesic ball B(x, h); its
stationary measure weights points by ball volume.  The Metropolis
correction accepts a proposal y with probability min(|B(x,h)|/|B(y,h)|, 1)
and otherwise holds, which makes the uniform (Riemannian) measure
stationary.  On the homogeneous manifolds (flat torus, round sphere) the
two kernels coincide and the holding probability vanishes.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidParameterError, ToleranceNotMetError
from .geometry import TWO_PI, FlatTorus, Manifold, RevolutionTorus, Sphere2
from .specfun import unit_ball_volume


@dataclass
class WalkConfig:
    h: float
    seed: int = 0
    kind: str = "ball"  # "ball" | "metropolis"
    sampler_mode: str = "ode"  # RevolutionTorus sampler: "ode" | "taylor"
    sampler_steps: int = 8  # RK4 steps per geodesic shot (RevolutionTorus)
    use_volume_table: bool = True

    def __post_init__(self):
        if self.h <= 0:
            raise InvalidParameterError("h must be positive")
        if self.kind not in ("ball", "metropolis"):
            raise InvalidParameterError(f"unknown kernel kind {self.kind!r}")


@dataclass
class StepOutcome:
    next: np.ndarray
    held: np.ndarray
    proposal: np.ndarray


class BallVolumeTable:
    """Periodic cubic-spline table of theta -> |B((theta, .), h)|.

    Built from direct Jacobi-field evaluations on a uniform grid and
    validated against off-grid direct values; the validated maximum
    relative error is stored on the instance.
    """

    def __init__(self, m: RevolutionTorus, h: float, n_grid: int = 256,
                 validate: bool = True, tol: float = 1e-8):
        self.h = h
        th = np.arange(n_grid + 1) * (TWO_PI / n_grid)
        pts = np.stack([th, np.zeros_like(th)], axis=-1)
        vals = m.ball_volume(pts, h)
        vals[-1] = vals[0]
        self.spline = CubicSpline(th, vals, bc_type="periodic")
        self.max_rel_error = None
        if validate:
            mid = th[:-1] + 0.5 * (TWO_PI / n_grid)
            sub = mid[:: max(1, n_grid // 32)]
            direct = m.ball_volume(np.stack([sub, np.zeros_like(sub)], axis=-1), h)
            rel = np.max(np.abs(self.spline(sub) - direct) / direct)
            self.max_rel_error = float(rel)
            if rel > tol:
                raise ToleranceNotMetError(
                    f"ball-volume table error {rel:.2e} above {tol:.0e}", achieved=rel)

    def __call__(self, theta):
        return self.spline(np.mod(theta, TWO_PI))


def ball_volume_function(m: Manifold, h: float, use_table: bool = True,
                         _cache={}):
    """Callable point -> |B(x, h)|; constant on homogeneous manifolds.

    RevolutionTorus values come from a cached validated spline table unless
    use_table=False, in which case every call integrates the Jacobi field.
    """
    if isinstance(m, (FlatTorus, Sphere2)):
        def const(x, m=m, h=h):
            return m.ball_volume(x, h)
        return const
    if not use_table:
        return lambda x: m.ball_volume(x, h)
    key = (id(m), round(h, 14))
    if key not in _cache:
        _cache[key] = BallVolumeTable(m, h)
    table = _cache[key]
    return lambda x: table(np.asarray(x, float)[..., 0])


def ball_walk_step(m: Manifold, cfg: WalkConfig, x, stream) -> StepOutcome:
    """One ball-walk step: jump to a uniform point of B(x, h); never holds."""
    kwargs = ({"mode": cfg.sampler_mode, "n_steps": cfg.sampler_steps}
              if isinstance(m, RevolutionTorus) else {})
    y = m.sample_ball(stream, x, cfg.h, **kwargs)
    held = np.zeros(np.asarray(y, float).shape[:-1], dtype=bool)
    return StepOutcome(next=y, held=held, proposal=y)


def metropolis_step(m: Manifold, cfg: WalkConfig, x, stream) -> StepOutcome:
    """Propose uniformly in B(x, h), accept with min(|B(x)|/|B(y)|, 1).

    A rejected proposal holds (next = x), which realizes the atom of the
    Metropolis kernel; a held step still counts as one step of the chain.
    """
    kwargs = ({"mode": cfg.sampler_mode, "n_steps": cfg.sampler_steps}
              if isinstance(m, RevolutionTorus) else {})
    y = m.sample_ball(stream, x, cfg.h, **kwargs)
    if isinstance(m, (FlatTorus, Sphere2)):
        # |B| constant: acceptance probability is identically 1
        held = np.zeros(np.asarray(y, float).shape[:-1], dtype=bool)
        return StepOutcome(next=y, held=held, proposal=y)
    volfn = ball_volume_function(m, cfg.h, cfg.use_volume_table)
    ratio = volfn(x) / volfn(y)
    held = stream.random(size=np.asarray(ratio, float).shape) >= np.minimum(ratio, 1.0)
    x_b = np.broadcast_to(np.asarray(x, float), np.asarray(y, float).shape)
    nxt = np.where(held[..., None], x_b, y)
    return StepOutcome(next=nxt, held=held, proposal=y)


def step(m: Manifold, cfg: WalkConfig, x, stream) -> StepOutcome:
    if cfg.kind == "metropolis":
        return metropolis_step(m, cfg, x, stream)
    return ball_walk_step(m, cfg, x, stream)


def holding_probability(m: Manifold, h: float, x, n_alpha: int = 128,
                        n_radial: int = 32, use_table: bool = True):
    """m_h(x) = 1 - int_B min(|B(x,h)|/|B(y,h)|, 1)/|B(x,h)| d_g y.

    Evaluated by tangent-polar quadrature with the Jacobi-field area
    element: Gauss-Legendre in the radius, periodic trapezoid in the
    angle.  Zero on homogeneous manifolds.
    """
    m.check_radius(h)
    x = np.asarray(x, float)
    if isinstance(m, (FlatTorus, Sphere2)):
        return np.zeros(x.shape[:-1])
    theta0 = np.atleast_1d(x[..., 0]).ravel()
    volfn = ball_volume_function(m, h, use_table)

    nodes, weights = np.polynomial.legendre.leggauss(n_radial)
    fr = np.sort(0.5 * (nodes + 1.0))
    wts = 0.5 * weights[np.argsort(0.5 * (nodes + 1.0))]
    _, tha, _, Ja = m._radial_data(theta0, h, n_alpha=n_alpha, fracs=fr)
    Bx = volfn(np.stack([theta0, np.zeros_like(theta0)], axis=-1))
    By = volfn(np.stack([tha, np.zeros_like(tha)], axis=-1))
    integrand = np.minimum(1.0 / Bx[None, :, None], 1.0 / By) * Ja
    radial = h * np.tensordot(wts, integrand, axes=(0, 0))  # (centers, alpha)
    absorbed = radial.mean(axis=-1) * TWO_PI
    out = 1.0 - absorbed
    return out.reshape(np.atleast_1d(x[..., 0]).shape)


def kernel_density(m: Manifold, h: float, x, y, kind: str = "ball"):
    """Continuous-part transition density with respect to d_g y.

    Ball walk: 1_{d(x,y)<=h} / |B(x,h)|.  Metropolis: the symmetric form
    1_{d(x,y)<=h} min(1/|B(x,h)|, 1/|B(y,h)|).
    """
    m.check_radius(h)
    d = m.distance(x, y)
    inside = d <= h
    volfn = ball_volume_function(m, h)
    if kind == "ball":
        return np.where(inside, 1.0 / volfn(x), 0.0)
    if kind == "metropolis":
        return np.where(inside, np.minimum(1.0 / volfn(x), 1.0 / volfn(y)), 0.0)
    raise InvalidParameterError(f"unknown kernel kind {kind!r}")


@dataclass
class StationaryDensity:
    """Density evaluator with respect to d_g x, with normalizer Z."""

    kind: str  # "nu_h" | "uniform"
    h: Optional[float]
    Z: float
    _eval: object = field(repr=False, default=None)

    def __call__(self, x):
        return self._eval(x)


def stationary_density(m: Manifold, h: Optional[float], kind: str) -> StationaryDensity:
    """Stationary measure of the chosen kernel.

    kind="nu_h": d nu_h = |B(x,h)| / (Z_h c_d h^d) d_g x (ball walk);
    kind="uniform": d mu = d_g x / Vol(M) (Metropolis target).
    """
    if kind == "uniform":
        return StationaryDensity("uniform", None, m.volume,
                                 lambda x, v=m.volume: np.full(np.asarray(x, float).shape[:-1], 1.0 / v))
    if kind != "nu_h":
        raise InvalidParameterError(f"unknown stationary kind {kind!r}")
    m.check_radius(h)
    cd_hd = unit_ball_volume(m.dim) * h**m.dim
    if isinstance(m, (FlatTorus, Sphere2)):
        bv = float(m.ball_volume(np.zeros((1, 3 if isinstance(m, Sphere2) else m.dim))
                                 if isinstance(m, Sphere2) else np.zeros((1, m.dim)), h)[0])
        Z = m.volume * bv / cd_hd
        return StationaryDensity("nu_h", h, Z,
                                 lambda x, v=m.volume: np.full(np.asarray(x, float).shape[:-1], 1.0 / v))
    # revolution torus: Z_h = int |B|/(c_d h^d) d_g x, by theta quadrature
    volfn = ball_volume_function(m, h)
    n = 512
    th = np.arange(n) * (TWO_PI / n)
    b = volfn(np.stack([th, np.zeros_like(th)], axis=-1))
    Z = float(np.sum(b / cd_hd * m.r * m.w(th)) * (TWO_PI / n) * TWO_PI)

    def dens(x, volfn=volfn, Z=Z, cd_hd=cd_hd):
        return volfn(np.asarray(x, float)) / (Z * cd_hd)

    return StationaryDensity("nu_h", h, Z, dens)
