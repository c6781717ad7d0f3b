"""Brownian-limit diagnostics: heat kernels, CLT error, path statistics.

The walk is read on the diffusive clock: n(t, h) = floor((d+2) t / h^2)
steps correspond to Brownian time t for the generator Delta_g / 2.  Heat
kernels are spectral sums over the reference Laplace eigenpairs of each
manifold, truncated when the remaining terms are below machine noise.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import InsufficientDataError, InvalidParameterError
from .geometry import TWO_PI, FlatTorus, Manifold, RevolutionTorus, Sphere2
from .kernels import WalkConfig
from .montecarlo import run_chain
from .specfun import gamma_d

_T_MIN = 0.05  # below this the truncated spectral sums lose accuracy
_TAIL = 1e-14


def n_steps(t: float, h: float, d: int) -> int:
    """Walk steps matching Brownian time t: floor((d+2) t / h^2)."""
    if t < 0 or h <= 0:
        raise InvalidParameterError("need t >= 0 and h > 0")
    # tiny relative slack so exact ratios survive floating-point division
    return int(np.floor((d + 2) * t / h**2 * (1.0 + 1e-12)))


def step_time(h: float, d: int) -> float:
    """Brownian time advanced by one step of the walk."""
    return h**2 / (d + 2)


def heat_kernel(m: Manifold, t: float, x, y):
    """p_t(x, y) of e^{t Delta_g / 2}, by spectral sum.

    Supported for t >= 0.05, where a few hundred terms reach 1e-14
    truncation on every supported manifold.
    """
    if t < _T_MIN:
        raise InvalidParameterError(f"heat kernel trusted for t >= {_T_MIN}")
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if isinstance(m, FlatTorus):
        # product of 1-D theta sums over image frequencies
        diff = np.asarray(m.log_map(x, y), float)
        out = np.ones(diff.shape[:-1])
        for a in range(m.dim):
            L = m.lengths[a]
            kmax = int(np.ceil(np.sqrt(2.0 * np.log(1.0 / _TAIL) / t) * L / TWO_PI)) + 1
            k = np.arange(1, kmax + 1)
            om = TWO_PI * k / L
            terms = np.exp(-0.5 * t * om**2)
            s = (1.0 + 2.0 * np.sum(
                terms[(None,) * diff[..., a].ndim] *
                np.cos(om * diff[..., a][..., None]), axis=-1)) / L
            out = out * s
        return out
    if isinstance(m, Sphere2):
        cosd = np.clip(np.sum(x * y, axis=-1), -1.0, 1.0)
        lmax = 1
        while (2 * lmax + 1) * np.exp(-0.5 * t * lmax * (lmax + 1)) > _TAIL:
            lmax += 1
        out = np.zeros(np.asarray(cosd).shape)
        for l in range(lmax + 1):
            out = out + (2 * l + 1) / (4.0 * np.pi) * np.exp(
                -0.5 * t * l * (l + 1)) * special.eval_legendre(l, cosd)
        return out
    if isinstance(m, RevolutionTorus):
        return _heat_kernel_revolution(m, t, x, y)
    raise InvalidParameterError(f"unsupported manifold {m.name}")


def _heat_kernel_revolution(m: RevolutionTorus, t: float, x, y, n_theta=512):
    """Sturm-Liouville eigenpair sum for the revolution torus.

    For azimuthal mode mm with L^2(d_g)-normalized radial profile f, the
    cos/sin parity pair contributes f(th_x) f(th_y) cos(mm (phi_x - phi_y)).
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    lam_cap = 2.0 * np.log(1.0 / _TAIL) / t
    dt = TWO_PI / n_theta
    out = np.zeros(np.broadcast_shapes(x[..., 0].shape, y[..., 0].shape))
    mm = 0
    while mm == 0 or mm**2 / (m.R + m.r) ** 2 <= lam_cap:
        lam, vec, th = m.sturm_liouville_modes(mm, n_theta // 2, n_theta)
        keep = np.nonzero(lam <= lam_cap)[0]
        if len(keep) == 0:
            break
        w = m.w(th)
        th_ext = np.append(th, TWO_PI)
        angfac = TWO_PI if mm == 0 else np.pi
        dphi = x[..., 1] - y[..., 1]
        for j in keep:
            f = vec[:, j] / np.sqrt(w)
            f = f / np.sqrt(np.sum(f**2 * m.r * w) * dt * angfac)
            f_ext = np.append(f, f[0])
            fx = np.interp(np.mod(x[..., 0], TWO_PI), th_ext, f_ext)
            fy = np.interp(np.mod(y[..., 0], TWO_PI), th_ext, f_ext)
            term = np.exp(-0.5 * t * lam[j]) * fx * fy
            if mm:
                term = term * np.cos(mm * dphi)
            out = out + term
        mm += 1
    return out


def clt_error(h: float, t: float = 1.0, lam: float = 1.0, d: int = 1) -> float:
    """|gamma_d(h^2 lam)^{n(t,h)} - e^{-t lam / 2}| for one Fourier mode."""
    n = n_steps(t, h, d)
    return float(abs(gamma_d(d, h**2 * lam) ** n - np.exp(-0.5 * t * lam)))


@dataclass
class FddReport:
    times: tuple
    statistic: float
    p_value: float
    dof: int
    counts: np.ndarray
    expected: np.ndarray
    n_paths: int


def _circle_cells(L: float, n_cells: int):
    edges = np.linspace(0.0, L, n_cells + 1)
    return edges


def fdd_compare(m: FlatTorus, cfg: WalkConfig, x0, times=(0.25, 0.5),
                n_paths: int = 100000, n_cells: int = 4,
                n_quad: int = 32, stream=None) -> FddReport:
    """Chi-square of walk positions at two times against heat-kernel cells.

    The joint law (X_{t1}, X_{t2}) is binned on an n_cells x n_cells
    product partition of the circle; expected masses come from tensor
    Gauss-Legendre quadrature of p_{t1}(x0, u) p_{t2-t1}(u, v).
    """
    if not isinstance(m, FlatTorus) or m.dim != 1:
        raise InvalidParameterError("fdd comparison implemented on flat tori, d=1")
    t1, t2 = times
    if not (0 < t1 < t2):
        raise InvalidParameterError("need 0 < t1 < t2")
    d = m.dim
    k1, k2 = n_steps(t1, cfg.h, d), n_steps(t2, cfg.h, d)
    trace = run_chain(m, cfg, np.asarray(x0, float), k2, stream=stream,
                      record_steps=[k1], n_chains=n_paths)
    p1 = trace.positions[np.searchsorted(trace.steps, k1)][:, 0]
    p2 = trace.positions[-1][:, 0]

    L = m.lengths[0]
    edges = _circle_cells(L, n_cells)
    i1 = np.minimum((p1 / L * n_cells).astype(int), n_cells - 1)
    i2 = np.minimum((p2 / L * n_cells).astype(int), n_cells - 1)
    counts = np.bincount(i1 * n_cells + i2, minlength=n_cells * n_cells).astype(float)

    # expected joint masses at the *walk's* realized times k h^2/(d+2)
    s1 = k1 * step_time(cfg.h, d)
    s2 = k2 * step_time(cfg.h, d)
    gl_x, gl_w = np.polynomial.legendre.leggauss(n_quad)
    expected = np.empty((n_cells, n_cells))
    x0v = np.asarray(x0, float).reshape(1)
    for a in range(n_cells):
        ua = 0.5 * (edges[a] + edges[a + 1]) + 0.5 * (edges[a + 1] - edges[a]) * gl_x
        wa = 0.5 * (edges[a + 1] - edges[a]) * gl_w
        pa = heat_kernel(m, s1, x0v, ua[:, None])
        for b in range(n_cells):
            vb = 0.5 * (edges[b] + edges[b + 1]) + 0.5 * (edges[b + 1] - edges[b]) * gl_x
            wb = 0.5 * (edges[b + 1] - edges[b]) * gl_w
            pab = heat_kernel(m, s2 - s1, ua[:, None, None], vb[None, :, None])
            expected[a, b] = np.sum(wa[:, None] * wb[None, :] * pa[:, None] * pab)
    expected = expected.ravel() / expected.sum() * n_paths
    stat, p = stats.chisquare(counts, expected)
    return FddReport(times=(s1, s2), statistic=float(stat), p_value=float(p),
                     dof=len(counts) - 1, counts=counts, expected=expected,
                     n_paths=n_paths)


@dataclass
class ModulusReport:
    eps: float
    delta: float
    t_max: float
    prob: float
    n_paths: int


def modulus_statistic(m: Manifold, cfg: WalkConfig, x0, eps: float,
                      delta: float, t_max: float, n_paths: int = 5000,
                      stream=None) -> ModulusReport:
    """P(exists j < l, (l-j) h^2 <= (d+2) delta, d(X_j, X_l) > eps) up to time t_max.

    Estimated with a sliding window over full recorded paths; a direct
    tightness diagnostic for the path modulus of continuity.
    """
    d = m.dim
    n = n_steps(t_max, cfg.h, d)
    win = max(1, n_steps(delta, cfg.h, d))
    trace = run_chain(m, cfg, np.asarray(x0, float), n, stream=stream,
                      record_steps=range(n + 1), n_chains=n_paths)
    pos = trace.positions  # (n+1, n_paths, dim)
    bad = np.zeros(pos.shape[1], dtype=bool)
    for lag in range(1, win + 1):
        dd = m.distance(pos[:-lag], pos[lag:])
        bad |= np.any(dd > eps, axis=0)
    return ModulusReport(eps=eps, delta=delta, t_max=t_max,
                         prob=float(np.mean(bad)), n_paths=n_paths)
