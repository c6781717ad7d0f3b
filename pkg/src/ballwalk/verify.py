"""The acceptance suite: eleven numbered checks with pinned tolerances.

Each check returns a CheckResult with the measured quantities; the same
functions back the `ballwalk verify` subcommand and the acceptance test
module.  Expensive discretized operators are shared through a per-run
context cache.  The full suite is CPU-heavy (roughly 20-25 minutes,
dominated by the empirical mixing ensemble and the h=0.05 revolution
torus assembly).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import brownian as br
from . import montecarlo as mc
from .geometry import TWO_PI, FlatTorus, RevolutionTorus, Sphere2
from .kernels import WalkConfig, holding_probability, kernel_density
from .rng import substream
from .specfun import gamma_d, gamma_prime_at_zero, gamma_quadrature_oracle
from .spectral import (
    assemble_operator,
    eigen_decompose,
    resolvent_gap_torus,
    sphere_spectrum_zonal,
    weyl_count_torus,
    weyl_phase_volume,
)

# resolution schedule for revolution-torus operator assembly
_REV_RES = {0.2: 256, 0.1: 504, 0.05: 1024}
_LAMBDA1_REV = None  # filled lazily from the Sturm-Liouville reference


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    tolerance: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.number:2d} {self.name} ({self.seconds:.1f}s)"


def _rev_operator(ctx, kind, h):
    key = ("rev", kind, h)
    if key not in ctx:
        m = ctx.setdefault("rev_manifold", RevolutionTorus(2.0, 1.0))
        ctx[key] = assemble_operator(m, h, kind, resolution=_REV_RES[h])
    return ctx[key]


def _lambda1_rev(ctx):
    m = ctx.setdefault("rev_manifold", RevolutionTorus(2.0, 1.0))
    key = "rev_lambda1"
    if key not in ctx:
        lam, _, _ = m.sturm_liouville_modes(1, 1, 1024)
        ctx[key] = float(lam[0])
    return ctx[key]


def check_gamma_expansion(seed, ctx):
    """1: d gamma_d / ds at 0 vs -1/(2(d+2)); closed form vs quadrature."""
    deriv_err = 0.0
    oracle_err = 0.0
    s0 = 1e-8
    for d in (1, 2, 3):
        num = (gamma_d(d, s0) - 1.0) / s0
        deriv_err = max(deriv_err, abs(num - gamma_prime_at_zero(d)))
        for s in np.logspace(-6, 4, 21):
            oracle_err = max(oracle_err, abs(gamma_d(d, s) - gamma_quadrature_oracle(d, s)))
    return (deriv_err <= 1e-6 and oracle_err <= 1e-8,
            {"derivative_error": deriv_err, "oracle_error": oracle_err},
            "derivative 1e-6; oracle 1e-8")


def check_flat_torus_exactness(seed, ctx):
    """2: grid operator (d=1, L=2pi, N=512, h=0.1) vs mu_k = gamma_1(h^2 k^2)."""
    m = FlatTorus([TWO_PI])
    h = 0.1
    rep = eigen_decompose(assemble_operator(m, h, "ball", resolution=512))
    ks = np.arange(0, 11)
    exact = np.sort(np.repeat(gamma_d(1, h**2 * ks**2), [1] + [2] * 10))[::-1]
    err = float(np.max(np.abs(rep.mu[:21] - exact)))
    return err <= 1e-6, {"max_abs_error": err}, "1e-6 on k <= 10"


def check_eigenvalue_rate(seed, ctx):
    """3: h-halving ratios of |tau_k - lambda_k/(2(d+2))|."""
    measured = {}
    ok = True
    # flat torus d=1, exact symbol route
    for k in (1, 2, 3):
        gaps = [abs((1.0 - gamma_d(1, h**2 * k**2)) / h**2 - k**2 / 6.0)
                for h in (0.1, 0.05, 0.025)]
        for i, r in enumerate(np.array(gaps[:-1]) / gaps[1:]):
            measured[f"flat_k{k}_ratio{i}"] = float(r)
            ok &= 3.0 <= r <= 5.0
    # sphere, zonal quadrature eigenvalues
    for l in (1, 2, 3):
        lam = l * (l + 1.0)
        gaps = []
        for h in (0.1, 0.05, 0.025):
            rep = sphere_spectrum_zonal(h, l_max=4)
            mu_l = np.sort(np.unique(rep.mu))[::-1][l]
            gaps.append(abs((1.0 - mu_l) / h**2 - lam / 8.0))
        for i, r in enumerate(np.array(gaps[:-1]) / gaps[1:]):
            measured[f"sphere_l{l}_ratio{i}"] = float(r)
            ok &= 3.0 <= r <= 5.0
    # revolution torus Metropolis: O(h) claim, ratio window [1.6, 2.6]
    gaps = []
    for h in (0.1, 0.05):
        rep = eigen_decompose(_rev_operator(ctx, "metropolis", h))
        gaps.append(float(rep.gap[1]))
    r = gaps[0] / gaps[1]
    measured["rev_metropolis_ratio"] = float(r)
    measured["rev_gap_h0.1"] = gaps[0]
    measured["rev_gap_h0.05"] = gaps[1]
    ok &= 1.6 <= r <= 2.6
    return ok, measured, "flat/sphere ratios in [3,5]; revolution Metropolis in [1.6,2.6]"


def check_weyl_law(seed, ctx):
    """4: fitted Weyl constant stable within 50% across h on flat tori."""
    measured = {}
    ok = True
    taus = np.arange(1, 65)
    for d in (1, 2):
        m = FlatTorus([TWO_PI] * d)
        C = {}
        for h in (0.1, 0.05):
            vals = [abs(weyl_count_torus(m, h, t) - weyl_phase_volume(m, h, t))
                    / (1.0 + t) ** ((d - 1) / 2.0) for t in taus]
            C[h] = float(max(vals))
        rel = abs(C[0.05] - C[0.1]) / C[0.1]
        measured[f"d{d}_C_h0.1"] = C[0.1]
        measured[f"d{d}_C_h0.05"] = C[0.05]
        measured[f"d{d}_rel_change"] = rel
        ok &= rel <= 0.5
    return ok, measured, "relative change of fitted C <= 0.5"


def check_resolvent_gap(seed, ctx):
    """5: sup-over-modes resolvent difference, h-halving ratio in [3,5]."""
    m = FlatTorus([TWO_PI])
    measured = {}
    ok = True
    for z in (-1.0 + 0j, -0.25 + 0j, 0.5 + 0j, 2.5 + 0j, 0.5 + 2j):
        # eps=0.2 keeps every fixed test point admissible (z=-0.25 sits
        # 0.25 away from lambda_0 = 0)
        g = [resolvent_gap_torus(m, h, z, eps=0.2) for h in (0.2, 0.1, 0.05)]
        for i, r in enumerate(np.array(g[:-1]) / g[1:]):
            measured[f"z{z}_ratio{i}"] = float(r)
            ok &= 3.0 <= r <= 5.0
    return ok, measured, "ratios in [3,5]"


def _fit_h2_coefficient(vols, hs):
    y = vols / (np.pi * hs**2) - 1.0
    return float(np.sum(y * hs**2) / np.sum(hs**4))


def check_curvature_expansion(seed, ctx):
    """6: h^2 coefficient of |B(x,h)| / (pi h^2): -1/12 on S^2, -K/12 on the
    revolution torus (gamma_2'(0) S / 3 with S = 2K)."""
    measured = {}
    ms = Sphere2()
    hs = np.linspace(0.02, 0.1, 5)
    vols = np.array([float(ms.ball_volume(np.array([[0.0, 0.0, 1.0]]), h)[0])
                     for h in hs])
    c = _fit_h2_coefficient(vols, hs)
    rel_s = abs(c + 1.0 / 12) * 12
    measured["sphere_coefficient"] = c
    measured["sphere_rel_error"] = rel_s
    ok = rel_s <= 0.05

    mr = ctx.setdefault("rev_manifold", RevolutionTorus(2.0, 1.0))
    hs = np.linspace(0.05, 0.15, 5)
    for th in (0.0, 0.8, 1.6, 2.4, np.pi):
        vols = np.array([float(mr.ball_volume(np.array([[th, 0.0]]), h)[0])
                         for h in hs])
        c = _fit_h2_coefficient(vols, hs)
        target = gamma_prime_at_zero(2) * 2.0 * mr.gauss_curvature(th) / 3.0
        rel = abs(c - target) / max(abs(target), 1e-3)
        measured[f"rev_theta{th:.1f}_rel"] = float(rel)
        ok &= rel <= 0.10
    return ok, measured, "sphere 5%; revolution torus 10%"


def check_metropolis_structure(seed, ctx):
    """7: kernel symmetry to 1e-12; sup m_h ~ h^3; ||T-M||_2 ~ h^3."""
    m = ctx.setdefault("rev_manifold", RevolutionTorus(2.0, 1.0))
    h = 0.2
    rng = substream(seed, 701)
    x = np.stack([rng.random(10000) * TWO_PI, rng.random(10000) * TWO_PI], axis=-1)
    y = m.sample_ball(rng, x, h, mode="taylor", n_steps=4)
    sym = float(np.max(np.abs(kernel_density(m, h, x, y, "metropolis")
                              - kernel_density(m, h, y, x, "metropolis"))))
    ok = sym <= 1e-12

    th = np.linspace(0.0, TWO_PI, 65)[:-1]
    pts = np.stack([th, np.zeros_like(th)], axis=-1)
    hs = np.array([0.05, 0.1, 0.2])
    sups = np.array([float(np.max(holding_probability(m, hh, pts))) for hh in hs])
    slope = float(np.polyfit(np.log(hs), np.log(sups), 1)[0])
    ok &= 2.7 <= slope <= 3.3

    norms = {}
    for hh in (0.2, 0.1):
        KT = _rev_operator(ctx, "ball", hh)
        KM = _rev_operator(ctx, "metropolis", hh)
        V = np.sqrt(np.asarray(KT.weights, float))
        best = 0.0
        for bT, bM in zip(KT.blocks, KM.blocks):
            rawT = bT.matrix / np.sqrt(bT.stat)[:, None] * np.sqrt(bT.stat)[None, :]
            rawM = bM.matrix / np.sqrt(bM.stat)[:, None] * np.sqrt(bM.stat)[None, :]
            best = max(best, float(np.linalg.norm(
                V[:, None] * (rawT - rawM) / V[None, :], 2)))
        norms[hh] = best
    expo = float(np.log2(norms[0.2] / norms[0.1]))
    ok &= 2.7 <= expo <= 3.3
    return ok, {"symmetry_defect": sym, "mh_slope": slope,
                "tm_norm_exponent": expo}, \
        "symmetry 1e-12; slopes 3 +/- 0.3"


def check_tv_mixing(seed, ctx):
    """8: exact TV rate vs 1/6 on the flat torus; empirical rate vs
    lambda_1/8 on the revolution torus Metropolis chain."""
    m = FlatTorus([TWO_PI])
    h = 0.05
    cfg = WalkConfig(h=h, seed=seed)
    curve = mc.tv_exact_curve(m, cfg, [0.0], n_max=40000, stride=100)
    tau1 = (1.0 - gamma_d(1, h**2)) / h**2
    rep = mc.fit_mixing_rate(curve, 1e-6, 0.5, gamma_prime=tau1)
    rel_exact = abs(rep.rate - 1.0 / 6) * 6
    ok = rel_exact <= 0.10 and rep.lower_bound_ok

    mr = ctx.setdefault("rev_manifold", RevolutionTorus(2.0, 1.0))
    lam1 = _lambda1_rev(ctx)
    cfg2 = WalkConfig(h=0.1, seed=seed, kind="metropolis",
                      sampler_mode="taylor", sampler_steps=2)
    masses, classify = mc.revolution_cells(mr, 8, 8)
    cps = np.linspace(800, 8800, 11).astype(int)
    curve2 = mc.tv_empirical(mr, cfg2, np.array([0.0, 0.0]), cps, 100000,
                             masses, classify, stream=substream(seed, 801))
    rep2 = mc.fit_mixing_rate(curve2, 0.08, 0.6)
    rel_emp = abs(rep2.rate - lam1 / 8.0) / (lam1 / 8.0)
    ok &= rel_emp <= 0.25
    return ok, {"exact_rate": rep.rate, "exact_rel_error": rel_exact,
                "lower_bound_margin": rep.lower_bound_margin,
                "empirical_rate": rep2.rate, "empirical_rel_error": rel_emp,
                "lambda1": lam1}, "exact 10%; empirical 25%; lower bound"


def check_clt(seed, ctx):
    """9: |gamma^n - e^{-t lambda/2}| decreasing in h; <= 1e-3 at h=0.01."""
    hs = (0.1, 0.05, 0.025, 0.01)
    errs = np.array([br.clt_error(h, 1.0, 1.0, 1) for h in hs])
    ok = bool(np.all(np.diff(errs) < 0)) and errs[-1] <= 1e-3
    errs_s = []
    for h in hs:
        rep = sphere_spectrum_zonal(h, l_max=2)
        mu1 = float(np.sort(np.unique(rep.mu))[::-1][1])
        n = br.n_steps(0.5, h, 2)
        errs_s.append(abs(mu1**n - np.exp(-0.5 * 0.5 * 2.0)))
    errs_s = np.array(errs_s)
    ok &= bool(np.all(np.diff(errs_s) < 0))
    return ok, {"torus_errors": errs.tolist(), "sphere_errors": errs_s.tolist()}, \
        "monotone decrease; torus <= 1e-3 at h=0.01"


def check_fdd(seed, ctx):
    """10: chi-square of (X_0.25, X_0.5) against heat-kernel cell masses."""
    m = FlatTorus([TWO_PI])
    # The finite-h bias term of the chi-square statistic is N * D(h) with
    # D ~ h^4 (D(0.1) ~ 5e-6): at 1e5 paths it sits far below the dof
    # noise floor and the h-comparison would be a coin flip, so the
    # h=0.1 / h=0.025 discrepancy comparison uses 1e7 paths (bias ~ +51
    # vs noise sd ~ 15) while the goodness-of-fit clause keeps 1e5.
    n_for = {0.1: 10**7, 0.05: 10**5, 0.025: 10**7}
    reps = {h: br.fdd_compare(m, WalkConfig(h=h, seed=seed), [0.0], (0.25, 0.5),
                              n_paths=n_for[h], stream=substream(seed, 1000 + i))
            for i, h in enumerate((0.1, 0.05, 0.025))}
    ok = reps[0.05].p_value >= 1e-3 and reps[0.025].statistic <= reps[0.1].statistic
    return ok, {f"h{h}_stat": r.statistic for h, r in reps.items()} | \
        {"h0.05_p": reps[0.05].p_value}, "p >= 1e-3 at h=0.05; monotone statistic"


def check_excursion(seed, ctx):
    """11: log excursion probability linear in eps^2/delta over a decade."""
    m = FlatTorus([TWO_PI])
    cfg = WalkConfig(h=0.05, seed=seed)
    delta = 0.05
    xgrid = 0.5 * 10 ** np.linspace(0.0, 1.0, 8)
    eps = np.sqrt(xgrid * delta)
    rep = mc.excursion_probability(m, cfg, [0.0], eps, delta, n_chains=1000000,
                                   stream=substream(seed, 1100))
    slope, r2 = rep.fit_exponent(min_hits=5)
    used = rep.hits >= 5
    span = (rep.eps[used].max() / rep.eps[used].min()) ** 2
    ok = slope < 0 and r2 >= 0.95 and span >= 10.0 * (1.0 - 1e-9)
    return ok, {"slope": slope, "r_squared": r2, "decade_span": span,
                "probs": rep.prob.tolist()}, "R^2 >= 0.95 over a decade; slope < 0"


CHECKS = [
    (1, "gamma-expansion", check_gamma_expansion),
    (2, "flat-torus-exactness", check_flat_torus_exactness),
    (3, "eigenvalue-rate", check_eigenvalue_rate),
    (4, "weyl-law", check_weyl_law),
    (5, "resolvent-gap", check_resolvent_gap),
    (6, "curvature-expansion", check_curvature_expansion),
    (7, "metropolis-structure", check_metropolis_structure),
    (8, "tv-mixing", check_tv_mixing),
    (9, "clt", check_clt),
    (10, "brownian-fdd", check_fdd),
    (11, "large-deviation", check_excursion),
]


def run_check(number: int, seed: int = 0, ctx=None) -> CheckResult:
    ctx = {} if ctx is None else ctx
    num, name, fn = next(c for c in CHECKS if c[0] == number)
    t0 = time.time()
    passed, measured, tol = fn(seed, ctx)
    return CheckResult(number=num, name=name, passed=bool(passed),
                       measured=measured, tolerance=tol,
                       seconds=time.time() - t0)


def run_all(seed: int = 0, report=None) -> list:
    """Run every acceptance check once, sharing heavy intermediates."""
    ctx = {}
    results = []
    for num, name, fn in CHECKS:
        res = run_check(num, seed, ctx)
        results.append(res)
        if report is not None:
            report(res.line())
    return results
