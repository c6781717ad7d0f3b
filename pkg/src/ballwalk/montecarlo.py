"""Chain simulation, total-variation mixing curves, excursion statistics.

Two routes to the TV distance: exact matrix powers of the discretized
kernel (flat torus, d=1), and empirical cell-count lower bounds from
ensembles of independent chains (any manifold).  Both produce TVCurve
objects consumed by the same fitting code.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .errors import FitFailedError, InsufficientDataError, InvalidParameterError
from .geometry import TWO_PI, FlatTorus, Manifold, RevolutionTorus
from .kernels import WalkConfig, step
from .rng import substream
from .spectral import assemble_operator


@dataclass
class ChainTrace:
    """Recorded states of an ensemble of independent chains."""

    steps: np.ndarray  # recorded step indices
    positions: np.ndarray  # (n_recorded, n_chains, dim)
    held_fraction: float
    cfg: WalkConfig


def run_chain(m: Manifold, cfg: WalkConfig, x0, n_steps: int,
              stream=None, record_steps=None, n_chains: int = 1) -> ChainTrace:
    """Advance n_chains independent walkers n_steps steps, vectorized.

    record_steps: iterable of step indices to store (0 and n_steps are
    always included); default stores only the endpoint states.
    """
    if n_steps < 0:
        raise InvalidParameterError("n_steps must be nonnegative")
    if stream is None:
        stream = substream(cfg.seed, 0)
    x0 = np.asarray(x0, float)
    if x0.ndim == 1:
        x = np.broadcast_to(x0, (n_chains, x0.shape[0])).copy()
    else:
        x = x0.copy()
        n_chains = x.shape[0]
    extra = [] if record_steps is None else list(record_steps)
    record = sorted(set([0, n_steps]) | set(int(s) for s in extra))
    if record[0] < 0 or record[-1] > n_steps:
        raise InvalidParameterError("record_steps outside [0, n_steps]")
    out = np.empty((len(record), n_chains, x.shape[-1]))
    ri = 0
    if record[0] == 0:
        out[0] = x
        ri = 1
    held_total = 0.0
    for k in range(1, n_steps + 1):
        res = step(m, cfg, x, stream)
        x = np.asarray(res.next, float)
        held_total += float(np.sum(res.held))
        if ri < len(record) and k == record[ri]:
            out[ri] = x
            ri += 1
    frac = held_total / (n_steps * n_chains) if n_steps else 0.0
    return ChainTrace(steps=np.array(record), positions=out,
                      held_fraction=frac, cfg=cfg)


@dataclass
class TVCurve:
    steps: np.ndarray
    tv: np.ndarray
    h: float
    kind: str
    method: str  # "exact" | "empirical"
    half_width: Optional[np.ndarray] = None
    n_chains: Optional[int] = None


def tv_exact_curve(m: FlatTorus, cfg: WalkConfig, x0, n_max: int,
                   resolution: Optional[int] = None, stride: int = 1) -> TVCurve:
    """TV distance to uniform from exact powers of the discretized kernel.

    Supported on the d=1 flat torus, where the band-limited circulant is
    the exact operator on grid distributions; the initial distribution is
    the point mass at the grid node nearest x0.
    """
    if not isinstance(m, FlatTorus) or m.dim != 1:
        raise InvalidParameterError("exact TV powers implemented on flat tori, d=1")
    if resolution is None:
        resolution = max(512, 2 * int(np.ceil(4 * m.lengths[0] / cfg.h)))
    K = assemble_operator(m, cfg.h, cfg.kind, resolution)
    A = K.matrix  # symmetric row-stochastic
    n = A.shape[0]
    i0 = int(np.round(float(np.asarray(x0, float).ravel()[0]) / m.lengths[0] * n)) % n
    p = np.zeros(n)
    p[i0] = 1.0
    steps, tvs = [], []
    for k in range(n_max + 1):
        if k % stride == 0 or k == n_max:
            steps.append(k)
            tvs.append(0.5 * np.sum(np.abs(p - 1.0 / n)))
        if k < n_max:
            p = p @ A
    return TVCurve(np.array(steps), np.array(tvs), cfg.h, cfg.kind, "exact")


def revolution_cells(m: RevolutionTorus, n_theta: int = 8, n_phi: int = 8):
    """Uniform (theta, phi) product partition with exact uniform masses."""
    th_edges = np.linspace(0.0, TWO_PI, n_theta + 1)
    # mass of a theta band is proportional to int (R + r cos) = R dth + r dsin
    band = (m.R * np.diff(th_edges) + m.r * np.diff(np.sin(th_edges)))
    masses = np.outer(band / band.sum(), np.full(n_phi, 1.0 / n_phi)).ravel()

    def classify(x):
        x = np.asarray(x, float)
        it = np.minimum((x[..., 0] / TWO_PI * n_theta).astype(int), n_theta - 1)
        ip = np.minimum((np.mod(x[..., 1], TWO_PI) / TWO_PI * n_phi).astype(int),
                        n_phi - 1)
        return it * n_phi + ip

    return masses, classify


def tv_empirical(m: Manifold, cfg: WalkConfig, x0, checkpoints, n_chains: int,
                 masses, classify, stream=None) -> TVCurve:
    """Partition lower bound on the TV distance from an ensemble of chains.

    tv(n) >= 1/2 sum_c |p_hat_c(n) - pi_c|; the half-width column holds a
    1-sigma binomial error bar for the summed statistic.
    """
    checkpoints = np.asarray(sorted(int(c) for c in checkpoints))
    trace = run_chain(m, cfg, x0, int(checkpoints[-1]), stream=stream,
                      record_steps=checkpoints, n_chains=n_chains)
    masses = np.asarray(masses, float)
    tvs, hws = [], []
    for ck in checkpoints:
        pos = trace.positions[np.searchsorted(trace.steps, ck)]
        counts = np.bincount(classify(pos), minlength=len(masses))
        phat = counts / n_chains
        tvs.append(0.5 * np.sum(np.abs(phat - masses)))
        hws.append(0.5 * np.sqrt(np.sum(phat * (1.0 - phat)) / n_chains))
    return TVCurve(checkpoints, np.array(tvs), cfg.h, cfg.kind, "empirical",
                   half_width=np.array(hws), n_chains=n_chains)


@dataclass
class MixingReport:
    rate: float  # fitted decay rate per unit n h^2
    intercept: float
    r_squared: float
    window: tuple
    n_points: int
    lower_bound_ok: Optional[bool] = None
    lower_bound_margin: Optional[float] = None


def fit_mixing_rate(curve: TVCurve, tv_lo: float, tv_hi: float,
                    gamma_prime: Optional[float] = None) -> MixingReport:
    """Fit log tv against n h^2 on the window tv in [tv_lo, tv_hi].

    With gamma_prime given, also checks the spectral lower bound
    2 tv(n) >= exp(-gamma_prime n h^2) over the same window.
    """
    mask = (curve.tv >= tv_lo) & (curve.tv <= tv_hi) & (curve.steps > 0)
    if np.sum(mask) < 4:
        raise InsufficientDataError(
            f"only {int(np.sum(mask))} TV points inside [{tv_lo}, {tv_hi}]")
    x = curve.steps[mask] * curve.h**2
    y = np.log(curve.tv[mask])
    res = stats.linregress(x, y)
    if not np.isfinite(res.slope) or res.slope >= 0:
        raise FitFailedError(f"nonnegative or invalid TV slope {res.slope}")
    report = MixingReport(rate=-res.slope, intercept=res.intercept,
                          r_squared=res.rvalue**2,
                          window=(tv_lo, tv_hi), n_points=int(np.sum(mask)))
    if gamma_prime is not None:
        margin = np.min(np.log(2.0 * curve.tv[mask]) + gamma_prime * x)
        report.lower_bound_ok = bool(margin >= 0.0)
        report.lower_bound_margin = float(margin)
    return report


@dataclass
class ExcursionReport:
    eps: np.ndarray
    delta: float
    n_steps: int
    prob: np.ndarray
    upper95: np.ndarray  # Clopper-Pearson upper bounds
    hits: np.ndarray
    n_chains: int

    def fit_exponent(self, min_hits: int = 5):
        """Slope, R^2 of log prob against eps^2/delta (positive-count points)."""
        mask = self.hits >= min_hits
        if np.sum(mask) < 3:
            raise InsufficientDataError("fewer than 3 excursion levels with hits")
        x = self.eps[mask] ** 2 / self.delta
        y = np.log(self.prob[mask])
        res = stats.linregress(x, y)
        return float(res.slope), float(res.rvalue**2)


def excursion_probability(m: Manifold, cfg: WalkConfig, x0, eps_values,
                          delta: float, n_chains: int,
                          stream=None) -> ExcursionReport:
    """P(max_{k <= n} d_g(X_k, x0) > eps) with n = floor(delta / h^2).

    All levels are evaluated on the same ensemble by tracking the running
    maximum distance from the start point.
    """
    n = int(np.floor(delta / cfg.h**2 * (1.0 + 1e-12)))
    if n < 1:
        raise InvalidParameterError("delta/h^2 below one step")
    if stream is None:
        stream = substream(cfg.seed, 0)
    x0 = np.asarray(x0, float)
    x = np.broadcast_to(x0, (n_chains, x0.shape[-1])).copy()
    dmax = np.zeros(n_chains)
    for _ in range(n):
        x = np.asarray(step(m, cfg, x, stream).next, float)
        dmax = np.maximum(dmax, m.distance(x, x0))
    eps_values = np.asarray(eps_values, float)
    hits = np.array([int(np.sum(dmax > e)) for e in eps_values])
    prob = hits / n_chains
    # exact binomial (Clopper-Pearson) upper bounds, informative when
    # an excursion level records zero hits
    upper = stats.beta.ppf(0.95, hits + 1, n_chains - hits)
    return ExcursionReport(eps=eps_values, delta=delta, n_steps=n, prob=prob,
                           upper95=np.asarray(upper), hits=hits,
                           n_chains=n_chains)
