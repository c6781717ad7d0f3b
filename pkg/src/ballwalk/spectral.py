"""Discretized kernel operators and their spectra.

Three assembly routes, in increasing generality:

* flat torus (d=1): the kernel is a convolution, so the operator is a
  circulant matrix whose symbol is gamma_1; assembled through the
  band-limited (trigonometric-interpolation) quadrature, which reproduces
  the Fourier-multiplier eigenvalues to machine precision.
* sphere: rotation invariance diagonalizes the ball average over spherical
  harmonics; the zonal eigenvalues are 1-D Legendre quadratures.
* revolution torus: one dense block per azimuthal Fourier mode m,
  assembled by tangent-polar quadrature of the sharp-indicator kernel
  against periodic cardinal functions in theta.  The Metropolis holding
  atom enters as an exact diagonal addition.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .errors import (
    InsufficientDataError,
    InvalidParameterError,
    RegionError,
    ResolutionError,
)
from .geometry import TWO_PI, FlatTorus, Manifold, RevolutionTorus, Sphere2
from .kernels import ball_volume_function, holding_probability
from .specfun import gamma_d, gamma_sup_bound, phi_h, super_level_set, unit_ball_volume


@dataclass
class Block:
    """One symmetric block of a kernel operator."""

    label: object  # azimuthal mode m, or None
    matrix: Optional[np.ndarray] = None  # dense symmetric, atom included
    eigenvalues: Optional[np.ndarray] = None  # for analytic-diagonal blocks
    mult: int = 1  # eigenvalue multiplicity carried by this block
    mults: Optional[np.ndarray] = None  # per-eigenvalue multiplicities
    atom: Optional[np.ndarray] = None  # holding probabilities on the grid
    lam_ref: Optional[np.ndarray] = None  # matching reference Laplace eigenvalues
    stat: Optional[np.ndarray] = None  # symmetrizing (stationary) node weights
    asym_defect: float = 0.0


@dataclass
class KernelOperator:
    manifold: Manifold
    h: float
    kind: str  # "ball" | "metropolis"
    basis: str  # "fourier-exact" | "zonal-exact" | "azimuthal-block"
    blocks: list = field(default_factory=list)
    nodes: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    @property
    def matrix(self):
        """Single-block dense matrix, when there is exactly one block."""
        if len(self.blocks) == 1 and self.blocks[0].matrix is not None:
            return self.blocks[0].matrix
        raise InvalidParameterError("operator has no single dense matrix")


@dataclass
class SpectrumReport:
    """Sorted eigenvalues with rescaled rates and reference spectrum.

    mu is sorted descending with multiplicity expanded; tau = (1-mu)/h^2;
    lam_ref holds the matching reference Laplace eigenvalues (ascending,
    multiplicity expanded); gap = |tau - lam_ref/(2(d+2))|.
    """

    manifold: str
    d: int
    h: float
    kind: str
    mu: np.ndarray
    tau: np.ndarray
    lam_ref: np.ndarray
    gap: np.ndarray
    supnorm: Optional[np.ndarray] = None
    floor: float = None  # most negative eigenvalue seen

    def weyl_count(self, tau: float, delta: float = 0.1) -> int:
        """Number of eigenvalues in [1 - tau h^2, 1], with multiplicity."""
        if tau < 0 or tau > (1.0 - delta) / self.h**2:
            raise InvalidParameterError(
                f"tau={tau} outside [0, (1-delta)/h^2]")
        return int(np.sum(self.mu >= 1.0 - tau * self.h**2 - 1e-12))


def _make_report(manifold, d, h, kind, mu, lam_ref, supnorm=None, floor=None):
    mu = np.asarray(mu, float)
    order = np.argsort(-mu, kind="stable")
    mu = mu[order]
    if supnorm is not None:
        supnorm = np.asarray(supnorm, float)[order]
    lam = np.sort(np.asarray(lam_ref, float))
    n = min(len(mu), len(lam))
    tau = (1.0 - mu) / h**2
    gap = np.abs(tau[:n] - lam[:n] / (2.0 * (d + 2)))
    return SpectrumReport(
        manifold=manifold, d=d, h=h, kind=kind, mu=mu, tau=tau,
        lam_ref=lam[:n], gap=gap, supnorm=supnorm,
        floor=float(mu.min()) if floor is None else floor)


# ---------------------------------------------------------------------------
# analytic routes


def torus_spectrum_exact(m: FlatTorus, h: float, count: int = 64) -> SpectrumReport:
    """Exact ball-walk spectrum on the flat torus: mu = gamma_d(h^2 lambda)."""
    m.check_radius(h)
    lam = m.reference_eigenvalues(count)
    mu = gamma_d(m.dim, h**2 * lam)
    # flat Fourier modes have constant sup/L2 ratio
    sup = np.where(lam > 0, np.sqrt(2.0), 1.0)
    return _make_report(m.name, m.dim, h, "ball", mu, lam, supnorm=sup)


def sphere_spectrum_zonal(h: float, l_max: int = 64, n_quad: int = 128) -> SpectrumReport:
    """Ball-walk eigenvalues on S^2: mu_l = (2 pi/|B(h)|) int_0^h P_l(cos s) sin s ds."""
    if h <= 0 or h > np.pi / 2:
        raise InvalidParameterError("need 0 < h <= pi/2 for the zonal quadrature")
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    s = 0.5 * h * (nodes + 1.0)
    w = 0.5 * h * weights
    ball = TWO_PI * (1.0 - np.cos(h))
    ls = np.arange(l_max + 1)
    pl = np.stack([special.eval_legendre(l, np.cos(s)) for l in ls])
    mu_l = TWO_PI * (pl * np.sin(s)[None, :] * w[None, :]).sum(axis=1) / ball
    mu = np.repeat(mu_l, 2 * ls + 1)
    lam = np.repeat(ls * (ls + 1.0), 2 * ls + 1)
    # zonal sup-norm ratio sqrt((2l+1)) relative to the constant; the
    # largest ratio within each shell (attained by the zonal harmonic)
    sup = np.repeat(np.sqrt(2.0 * ls + 1.0), 2 * ls + 1)
    return _make_report("sphere2", 2, h, "ball", mu, lam, supnorm=sup)


# ---------------------------------------------------------------------------
# grid assembly


def _cardinal(x, n):
    """Periodic cardinal function for an even-n uniform grid on [0, 2pi)."""
    x = np.asarray(x, float)
    half = 0.5 * x
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sin(n * half) / (n * np.tan(half))
    return np.where(np.abs(np.sin(half)) < 1e-14, 1.0, out)


def _assemble_flat_torus(m: FlatTorus, h: float, kind: str, n: int) -> KernelOperator:
    if m.dim != 1:
        raise ResolutionError("grid assembly supported for d=1 tori; use "
                              "torus_spectrum_exact for higher-dimensional flat tori")
    L = m.lengths[0]
    if L / n > h / 8:
        raise ResolutionError(f"need N >= {int(np.ceil(8 * L / h))} grid points for h={h}")
    # circulant row through the band-limited quadrature: the symbol is
    # gamma_1 evaluated at the grid frequencies
    k = np.fft.fftfreq(n, d=1.0 / n)
    omega2 = (TWO_PI * k / L) ** 2
    symbol = gamma_d(1, h**2 * omega2)
    row = np.fft.ifft(symbol).real
    idx = np.arange(n)
    A = row[(idx[None, :] - idx[:, None]) % n]
    A = 0.5 * (A + A.T)
    nodes = (idx * (L / n))[:, None]
    weights = np.full(n, L / n)
    block = Block(label=None, matrix=A, mult=1, atom=np.zeros(n), stat=weights)
    return KernelOperator(m, h, kind, "fourier-exact", [block], nodes, weights)


def _assemble_revolution_torus(m: RevolutionTorus, h: float, kind: str, n_theta: int,
                               modes=range(5), n_alpha: int = 128,
                               n_radial: int = 32) -> KernelOperator:
    """Azimuthal-block assembly by tangent-polar quadrature.

    For each grid center the geodesic fan (theta, phi, J) is integrated
    once; each block m then contracts the fan against the periodic
    cardinal basis in theta and the factor cos(m phi).
    """
    m.check_radius(h)
    if TWO_PI / n_theta > h / (8 * m.r) and n_theta < 4096:
        # cardinal quadrature needs the eigenfunctions resolved, not the
        # indicator; h/(8r) is a conservative sufficient rule
        raise ResolutionError(
            f"need n_theta >= {int(np.ceil(16 * np.pi * m.r / h))} for h={h}")
    th_grid = np.arange(n_theta) * (TWO_PI / n_theta)
    nodes_gl, wts_gl = np.polynomial.legendre.leggauss(n_radial)
    fr = 0.5 * (nodes_gl + 1.0)
    order = np.argsort(fr)
    fr, wr = fr[order], (0.5 * wts_gl)[order]

    _, tha, pha, Ja = m._radial_data(th_grid, h, n_alpha=n_alpha, fracs=fr)
    # quadrature weight of each fan node, area element included
    Wq = h * wr[:, None, None] * (TWO_PI / n_alpha) * Ja  # (rad, center, alpha)

    volfn = ball_volume_function(m, h)
    Bx = volfn(np.stack([th_grid, np.zeros_like(th_grid)], axis=-1))
    if kind == "metropolis":
        By = volfn(np.stack([tha, np.zeros_like(tha)], axis=-1))
        dens = np.minimum(1.0 / Bx[None, :, None], 1.0 / By)
    else:
        dens = np.broadcast_to((1.0 / Bx)[None, :, None], Wq.shape)
    F = Wq * dens  # kernel mass carried by each fan node

    mlist = list(modes)
    cosm = np.stack([np.cos(mm * pha) for mm in mlist])  # (nm, rad, center, alpha)
    vol_w = m.r * m.w(th_grid) * (TWO_PI / n_theta) * TWO_PI
    atom = (1.0 - F.sum(axis=(0, 2))) if kind == "metropolis" else np.zeros(n_theta)

    # stationary weights for the symmetrizing conjugation
    stat = vol_w * (Bx if kind == "ball" else 1.0)
    sq = np.sqrt(stat)

    mats = [np.empty((n_theta, n_theta)) for _ in mlist]
    for i in range(n_theta):
        C = _cardinal(tha[:, i, :].ravel()[:, None] - th_grid[None, :], n_theta)
        fan = (F[:, i, :][None] * cosm[:, :, i, :]).reshape(len(mlist), -1)
        rows = fan @ C  # (nm, n_theta)
        for b, mm in enumerate(mlist):
            mats[b][i] = rows[b]

    blocks = []
    for b, mm in enumerate(mlist):
        S = sq[:, None] * mats[b] / sq[None, :]
        defect = float(np.max(np.abs(S - S.T)))
        S = 0.5 * (S + S.T)
        if kind == "metropolis":
            S[np.arange(n_theta), np.arange(n_theta)] += atom
        lam_ref, _, _ = m.sturm_liouville_modes(mm, n_theta // 2, max(512, n_theta))
        blocks.append(Block(label=mm, matrix=S, mult=(1 if mm == 0 else 2),
                            atom=atom if kind == "metropolis" else np.zeros(n_theta),
                            lam_ref=lam_ref, stat=stat, asym_defect=defect))
    return KernelOperator(m, h, kind, "azimuthal-block", blocks,
                          th_grid[:, None], vol_w)


def assemble_operator(m: Manifold, h: float, kind: str = "ball",
                      resolution: int = 512, **kw) -> KernelOperator:
    """Discretize T_h or M_h as dense symmetric matrix blocks."""
    m.check_radius(h)
    if kind not in ("ball", "metropolis"):
        raise InvalidParameterError(f"unknown kernel kind {kind!r}")
    if isinstance(m, FlatTorus):
        return _assemble_flat_torus(m, h, kind, resolution)
    if isinstance(m, Sphere2):
        rep = sphere_spectrum_zonal(h, l_max=resolution)
        block = Block(label=None, eigenvalues=rep.mu, mults=np.ones(len(rep.mu), int))
        return KernelOperator(m, h, kind, "zonal-exact", [block])
    if isinstance(m, RevolutionTorus):
        return _assemble_revolution_torus(m, h, kind, resolution, **kw)
    raise InvalidParameterError(f"unsupported manifold {m.name}")


def eigen_decompose(K: KernelOperator, want_vectors: bool = False) -> SpectrumReport:
    """Full symmetric eigensolve of every block, merged into one report.

    Dense blocks use the LAPACK symmetric eigensolver; eigenvalues are
    invariant under the symmetrizing similarity, so they are spectra of
    the original Markov operator.
    """
    m = K.manifold
    mus, lams, sups = [], [], []
    for blk in K.blocks:
        if blk.matrix is not None:
            if blk.matrix.shape[0] > 4096:
                raise InvalidParameterError("block dimension above 4096")
            if want_vectors:
                mu, vec = np.linalg.eigh(blk.matrix)
            else:
                mu = np.linalg.eigvalsh(blk.matrix)
                vec = None
            lam_ref = blk.lam_ref
            for rep in range(blk.mult):
                mus.append(mu)
                if lam_ref is not None:
                    lams.append(lam_ref[:len(mu)])
            if vec is not None:
                # sup norm on the grid over weighted L2 norm; the
                # symmetrizing conjugation is undone so the ratio refers
                # to actual eigenfunction values
                stat = np.asarray(blk.stat, float)
                f = vec / np.sqrt(stat)[:, None]
                l2 = np.sqrt(np.sum(f**2 * stat[:, None] / stat.sum(), axis=0))
                sn = np.max(np.abs(f), axis=0) / l2
                for rep in range(blk.mult):
                    sups.append(sn)
        else:
            mus.append(blk.eigenvalues)
    mu = np.concatenate(mus)
    if lams:
        lam = np.concatenate(lams)
    else:
        lam = m.reference_eigenvalues(len(mu))
    sup = np.concatenate(sups) if sups else None
    return _make_report(m.name, m.dim, K.h, K.kind, mu, lam, supnorm=sup)


# ---------------------------------------------------------------------------
# Weyl counting


def weyl_count_torus(m: FlatTorus, h: float, tau: float, delta: float = 0.1) -> int:
    """Exact count of ball-walk eigenvalues in [1 - tau h^2, 1] on a flat
    torus, by lattice enumeration over the super-level set of gamma_d."""
    if tau < 0 or tau > (1.0 - delta) / h**2:
        raise InvalidParameterError("tau outside [0, (1-delta)/h^2]")
    if tau == 0:
        return 1
    sls = super_level_set(m.dim, 1.0 - tau * h**2)
    s_hi = max(hi for _, hi in sls.intervals)
    kmax = [int(np.ceil(np.sqrt(s_hi) / h * L / TWO_PI)) for L in m.lengths]
    grids = np.meshgrid(*[np.arange(-k, k + 1) for k in kmax], indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=-1)
    lam = np.sum((TWO_PI * ks / m.lengths) ** 2, axis=-1)
    return int(np.sum(sls.contains(h**2 * lam)))


def weyl_phase_volume(m: Manifold, h: float, tau: float, delta: float = 0.1) -> float:
    """(2 pi h)^{-d} vol{(x, xi) : gamma_d(|xi|_x^2) in [1 - tau h^2, 1]}.

    The xi-integral reduces to c_d sum over super-level intervals of
    (s_+^{d/2} - s_-^{d/2}), uniformly in x on the supported manifolds.
    """
    if tau < 0 or tau > (1.0 - delta) / h**2:
        raise InvalidParameterError("tau outside [0, (1-delta)/h^2]")
    if tau == 0:
        return 0.0
    d = m.dim
    sls = super_level_set(d, 1.0 - tau * h**2)
    shell = sum(hi ** (d / 2.0) - lo ** (d / 2.0) for lo, hi in sls.intervals)
    return m.volume * unit_ball_volume(d) * shell / (TWO_PI * h) ** d


# ---------------------------------------------------------------------------
# resolvent comparison on the flat torus


def resolvent_gap_torus(m: FlatTorus, h: float, z: complex,
                        eps: float = 0.5, A: float = 50.0,
                        lam_cut_factor: float = 32.0) -> float:
    """sup_j |1/(z - Phi_h(h^2 lambda_j)) - 1/(z - lambda_j)| on the flat
    torus, plus a tail bound for modes beyond the enumeration cutoff.

    z must avoid the eps-neighborhood of spec(-Laplace) and the cone
    {Re z >= A, |Im z| <= eps Re z}.
    """
    m.check_radius(h)
    d = m.dim
    lam_cut = lam_cut_factor / h**2
    lam = m.reference_eigenvalues(8192)
    while lam[-1] < lam_cut:
        lam = m.reference_eigenvalues(4 * len(lam))
    # region check against the enumerated spectrum (spacing on these tori
    # is bounded, so the finite check is conclusive for dist <= eps)
    if np.min(np.abs(z - lam)) <= eps:
        raise RegionError(f"z={z} within {eps} of spec(-Laplace)")
    if z.real >= A and abs(z.imag) <= eps * z.real:
        raise RegionError(f"z={z} inside the excluded cone (A={A}, eps={eps})")

    lam_in = lam[lam <= lam_cut]
    ph = phi_h(d, h, h**2 * lam_in)
    diff = np.abs(1.0 / (z - ph) - 1.0 / (z - lam_in))
    sup = float(np.max(diff))
    # tail: Phi stays above Phi_min for s >= h^2 lam_cut, lambda > lam_cut
    gam_tail = gamma_sup_bound(d, h**2 * lam_cut)
    phi_min = 2.0 * (d + 2) * (1.0 - gam_tail) / h**2
    tail = 0.0
    if phi_min > z.real:
        tail += 1.0 / (phi_min - z.real)
    if lam_cut > z.real:
        tail += 1.0 / (lam_cut - z.real)
    return sup + tail


# ---------------------------------------------------------------------------
# eigenvector sup-norm growth


def supnorm_growth(report: SpectrumReport, tau_min: float = 0.5) -> float:
    """Fitted exponent of ||e_k||_inf against (1 + tau_k).

    Uses eigenpairs with tau >= tau_min (the constant mode carries no
    information).  Raises when fewer than 10 usable pairs exist.
    """
    if report.supnorm is None:
        raise InsufficientDataError("report carries no eigenvector sup-norms")
    mask = report.tau[:len(report.supnorm)] >= tau_min
    x = np.log1p(report.tau[:len(report.supnorm)][mask])
    y = np.log(report.supnorm[mask])
    if len(x) < 10:
        raise InsufficientDataError("fewer than 10 usable eigenpairs")
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)
