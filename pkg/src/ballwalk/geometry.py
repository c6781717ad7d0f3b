"""Concrete compact surfaces and curves for the ball walk.

Three manifolds are supported: flat tori of dimension 1..3, the unit
2-sphere, and the embedded torus of revolution.  Each exposes distance,
exponential map, geodesic-ball volume and uniform ball sampling, scalar
curvature, and a reference Laplace spectrum.  Points are plain numpy
arrays with the coordinate axis last; every operation accepts batches.

Coordinate conventions:
  FlatTorus        angles x_i in [0, L_i)
  Sphere2          unit vectors in R^3
  RevolutionTorus  (theta, phi): theta the minor angle, phi the azimuth;
                   metric ds^2 = r^2 dtheta^2 + (R + r cos theta)^2 dphi^2
"""

import numpy as np
from scipy import special

from .errors import (
    DistanceOutOfRangeError,
    IndexOutOfRangeError,
    InjectivityRadiusError,
    InvalidParameterError,
    SamplerInternalError,
)
from .specfun import unit_ball_volume

TWO_PI = 2.0 * np.pi


def _wrap(delta, period):
    """Wrap coordinate differences into (-period/2, period/2]."""
    return delta - period * np.round(delta / period)


class Manifold:
    """Common interface; see module docstring for coordinate conventions."""

    name = "manifold"
    dim = None
    volume = None
    h_max = None

    def check_radius(self, h):
        if h <= 0:
            raise InvalidParameterError(f"radius must be positive, got {h}")
        if h > self.h_max:
            raise InjectivityRadiusError(
                f"h={h} exceeds trusted injectivity bound {self.h_max} on {self.name}")

    def metric_norm(self, x, v):
        raise NotImplementedError

    def reference_eigenvalues(self, count):
        """First `count` eigenvalues of -Laplace_g repeated by multiplicity."""
        out = []
        for lam, mult in self.reference_spectrum(count):
            out.extend([lam] * mult)
            if len(out) >= count:
                break
        return np.array(out[:count])


# ---------------------------------------------------------------------------
# flat torus


class FlatTorus(Manifold):
    """Product of circles R/(L_i Z) with the Euclidean metric."""

    name = "flat_torus"

    def __init__(self, lengths):
        lengths = np.atleast_1d(np.asarray(lengths, dtype=float))
        if np.any(lengths <= 0):
            raise InvalidParameterError("side lengths must be positive")
        self.lengths = lengths
        self.dim = len(lengths)
        self.volume = float(np.prod(lengths))
        self.h_max = float(lengths.min() / 2.0)

    def wrap_point(self, x):
        return np.mod(x, self.lengths)

    def distance(self, x, y):
        d = _wrap(np.asarray(y, float) - np.asarray(x, float), self.lengths)
        return np.sqrt(np.sum(d * d, axis=-1))

    def log_map(self, x, y):
        return _wrap(np.asarray(y, float) - np.asarray(x, float), self.lengths)

    def exp_map(self, x, v):
        return self.wrap_point(np.asarray(x, float) + np.asarray(v, float))

    def metric_norm(self, x, v):
        v = np.asarray(v, float)
        return np.sqrt(np.sum(v * v, axis=-1))

    def ball_volume(self, x, h):
        self.check_radius(h)
        shape = np.asarray(x, float).shape[:-1]
        return np.full(shape, unit_ball_volume(self.dim) * h**self.dim)

    def scalar_curvature(self, x):
        return np.zeros(np.asarray(x, float).shape[:-1])

    def sample_ball(self, rng, x, h):
        """Uniform point of the Euclidean h-ball around each row of x."""
        self.check_radius(h)
        x = np.asarray(x, float)
        shape = x.shape[:-1]
        if self.dim == 1:
            u = rng.uniform(-h, h, size=shape + (1,))
            return self.wrap_point(x + u)
        g = rng.standard_normal(size=shape + (self.dim,))
        g /= np.linalg.norm(g, axis=-1, keepdims=True)
        rad = h * rng.random(size=shape + (1,)) ** (1.0 / self.dim)
        return self.wrap_point(x + g * rad)

    # spectrum -------------------------------------------------------------

    def _modes(self, count):
        """Mode vectors k in Z^d sorted by lambda = sum (2 pi k_i / L_i)^2."""
        kmax = 1
        while True:
            rng_k = np.arange(-kmax, kmax + 1)
            grids = np.meshgrid(*([rng_k] * self.dim), indexing="ij")
            ks = np.stack([g.ravel() for g in grids], axis=-1)
            lams = np.sum((TWO_PI * ks / self.lengths) ** 2, axis=-1)
            order = np.argsort(lams, kind="stable")
            # complete only below the boundary of the searched box
            lam_edge = (TWO_PI * kmax / self.lengths.max()) ** 2
            inside = lams[order] < lam_edge
            if inside.sum() >= count:
                keep = order[inside][:count]
                return ks[keep], lams[keep]
            kmax *= 2

    def reference_spectrum(self, count):
        _, lams = self._modes(4 * count + 8)
        out = []
        for lam in lams:
            if out and abs(lam - out[-1][0]) < 1e-9:
                out[-1] = (out[-1][0], out[-1][1] + 1)
            else:
                out.append((float(lam), 1))
            if sum(m for _, m in out) >= count:
                break
        return out

    def eigenfunction(self, k):
        """k-th element of a real Fourier eigenbasis, ordered by eigenvalue.

        Mode vectors are paired as (cos, sin); the constant mode is index 0.
        Normalized in L^2(d_g x).
        """
        funcs = self._eigenbasis(k + 1)
        if k >= len(funcs):
            raise IndexOutOfRangeError(f"eigenfunction index {k} not available")
        return funcs[k]

    def _eigenbasis(self, count):
        ks, _ = self._modes(2 * count + 8)
        vol = self.volume
        funcs = []
        seen = set()
        for kvec in ks:
            key = tuple(kvec)
            negkey = tuple(-kvec)
            if key in seen or negkey in seen:
                continue
            seen.add(key)
            freq = TWO_PI * kvec / self.lengths
            if np.all(kvec == 0):
                funcs.append(lambda x, _v=vol: np.full(np.asarray(x, float).shape[:-1], 1.0 / np.sqrt(_v)))
            else:
                def cosf(x, f=freq, _v=vol):
                    return np.sqrt(2.0 / _v) * np.cos(np.sum(np.asarray(x, float) * f, axis=-1))

                def sinf(x, f=freq, _v=vol):
                    return np.sqrt(2.0 / _v) * np.sin(np.sum(np.asarray(x, float) * f, axis=-1))

                funcs.extend([cosf, sinf])
            if len(funcs) >= count:
                break
        return funcs[:count]


# ---------------------------------------------------------------------------
# unit sphere


class Sphere2(Manifold):
    """Unit 2-sphere embedded in R^3."""

    name = "sphere2"
    dim = 2

    def __init__(self):
        self.volume = 4.0 * np.pi
        self.h_max = np.pi

    def distance(self, x, y):
        dot = np.clip(np.sum(np.asarray(x, float) * np.asarray(y, float), axis=-1), -1.0, 1.0)
        return np.arccos(dot)

    def exp_map(self, x, v):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        nv = np.linalg.norm(v, axis=-1, keepdims=True)
        small = nv < 1e-300
        nv_safe = np.where(small, 1.0, nv)
        y = np.cos(nv) * x + np.sin(nv) * (v / nv_safe)
        y = np.where(small, x, y)
        return y / np.linalg.norm(y, axis=-1, keepdims=True)

    def log_map(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        d = self.distance(x, y)[..., None]
        perp = y - np.sum(x * y, axis=-1, keepdims=True) * x
        n = np.linalg.norm(perp, axis=-1, keepdims=True)
        return np.where(n < 1e-300, 0.0, d * perp / np.where(n < 1e-300, 1.0, n))

    def metric_norm(self, x, v):
        v = np.asarray(v, float)
        return np.sqrt(np.sum(v * v, axis=-1))

    def ball_volume(self, x, h):
        self.check_radius(h)
        shape = np.asarray(x, float).shape[:-1]
        return np.full(shape, TWO_PI * (1.0 - np.cos(h)))

    def scalar_curvature(self, x):
        return np.full(np.asarray(x, float).shape[:-1], 2.0)

    def _frame(self, x):
        """Two tangent unit vectors orthogonal to x (batched)."""
        x = np.asarray(x, float)
        ref = np.zeros_like(x)
        # pick the axis least aligned with x
        idx = np.argmin(np.abs(x), axis=-1)
        np.put_along_axis(ref, idx[..., None], 1.0, axis=-1)
        e1 = ref - np.sum(ref * x, axis=-1, keepdims=True) * x
        e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
        e2 = np.cross(x, e1)
        return e1, e2

    def sample_ball(self, rng, x, h):
        """Exact cap sampling: cos(polar angle) uniform on [cos h, 1]."""
        self.check_radius(h)
        x = np.asarray(x, float)
        shape = x.shape[:-1]
        ct = rng.uniform(np.cos(h), 1.0, size=shape + (1,))
        st = np.sqrt(np.clip(1.0 - ct * ct, 0.0, None))
        psi = rng.uniform(0.0, TWO_PI, size=shape + (1,))
        e1, e2 = self._frame(x)
        y = ct * x + st * (np.cos(psi) * e1 + np.sin(psi) * e2)
        return y / np.linalg.norm(y, axis=-1, keepdims=True)

    def reference_spectrum(self, count):
        out = []
        total = 0
        l = 0
        while total < count:
            out.append((float(l * (l + 1)), 2 * l + 1))
            total += 2 * l + 1
            l += 1
        return out

    @staticmethod
    def index_to_lm(k):
        """Flat eigenfunction index -> (l, m) with m in -l..l (real basis)."""
        l = 0
        while (l + 1) ** 2 <= k:
            l += 1
        return l, k - l * l - l

    def eigenfunction(self, k):
        """Real spherical harmonic Y_{l,m}; zonal for m=0."""
        if k < 0:
            raise IndexOutOfRangeError("index must be nonnegative")
        l, m = self.index_to_lm(k)

        def ylm(x, l=l, m=m):
            x = np.asarray(x, float)
            ct = np.clip(x[..., 2], -1.0, 1.0)
            phi = np.arctan2(x[..., 1], x[..., 0])
            am = abs(m)
            norm = np.sqrt((2 * l + 1) / (4.0 * np.pi)
                           * special.gamma(l - am + 1) / special.gamma(l + am + 1))
            p = special.lpmv(am, l, ct)
            if m == 0:
                return norm * p
            if m > 0:
                return np.sqrt(2.0) * norm * p * np.cos(m * phi)
            return np.sqrt(2.0) * norm * p * np.sin(am * phi)

        return ylm


# ---------------------------------------------------------------------------
# torus of revolution


class RevolutionTorus(Manifold):
    """Embedded torus with major radius R and minor radius r (R > r > 0).

    Gauss curvature K(theta) = cos(theta) / (r (R + r cos theta)); the
    scalar curvature is 2K.
    """

    name = "revolution_torus"
    dim = 2

    def __init__(self, R, r):
        if not (R > r > 0):
            raise InvalidParameterError(f"need R > r > 0, got R={R}, r={r}")
        self.R = float(R)
        self.r = float(r)
        self.volume = 4.0 * np.pi**2 * R * r
        self.h_max = r * min(1.0, (R - r) / R)
        # Jacobi-field envelope constant: K >= -1/(r(R-r)) everywhere
        self.kappa = 1.0 / np.sqrt(r * (R - r))

    def w(self, theta):
        return self.R + self.r * np.cos(theta)

    def wrap_point(self, x):
        return np.mod(np.asarray(x, float), TWO_PI)

    def gauss_curvature(self, theta):
        return np.cos(theta) / (self.r * self.w(theta))

    def scalar_curvature(self, x):
        x = np.asarray(x, float)
        return 2.0 * self.gauss_curvature(x[..., 0])

    def metric_norm(self, x, v):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        return np.sqrt((self.r * v[..., 0]) ** 2 + (self.w(x[..., 0]) * v[..., 1]) ** 2)

    # geodesic flow --------------------------------------------------------

    def _geo_rhs(self, th, p, q, J, Jp):
        """RHS of the geodesic + Jacobi system in (theta, phi) coordinates."""
        w = self.w(th)
        sin = np.sin(th)
        dp = -(w * sin / self.r) * q * q
        dq = (2.0 * self.r * sin / w) * p * q
        dJp = -self.gauss_curvature(th) * J
        return dp, dq, dJp

    def _flow(self, th, ph, p, q, length, n_steps, record_at=None):
        """Integrate the geodesic + unit Jacobi field for affine time `length`.

        State is batched; `length` may be an array broadcasting with the
        state.  Classical RK4 with fixed step.  If `record_at` (sorted
        fractions of `length` in (0,1]) is given, returns arrays of shape
        (len(record_at),) + state.shape for theta, phi, J; otherwise the
        final (theta, phi, p, q, J, Jp).
        """
        th = np.array(th, dtype=float)
        ph = np.array(ph, dtype=float)
        p = np.array(p, dtype=float)
        q = np.array(q, dtype=float)
        J = np.zeros_like(th)
        Jp = np.ones_like(th)

        if record_at is None:
            fracs = np.array([1.0])
        else:
            fracs = np.asarray(record_at, float)
        rec_t = [np.zeros((len(fracs),) + th.shape) for _ in range(3)]

        prev = 0.0
        for i, frac in enumerate(fracs):
            seg = frac - prev
            prev = frac
            if seg > 0:
                m = max(1, int(np.ceil(n_steps * seg)))
                dt = np.asarray(length, float) * seg / m
                for _ in range(m):
                    th, ph, p, q, J, Jp = self._rk4_step(th, ph, p, q, J, Jp, dt)
            rec_t[0][i] = th
            rec_t[1][i] = ph
            rec_t[2][i] = J
        if record_at is None:
            return th, ph, p, q, J, Jp
        return rec_t[0], rec_t[1], rec_t[2]

    def _rk4_step(self, th, ph, p, q, J, Jp, dt):
        def rhs(state):
            th_, ph_, p_, q_, J_, Jp_ = state
            dp, dq, dJp = self._geo_rhs(th_, p_, q_, J_, Jp_)
            return (p_, q_, dp, dq, Jp_, dJp)

        y = (th, ph, p, q, J, Jp)
        k1 = rhs(y)
        k2 = rhs(tuple(a + 0.5 * dt * b for a, b in zip(y, k1)))
        k3 = rhs(tuple(a + 0.5 * dt * b for a, b in zip(y, k2)))
        k4 = rhs(tuple(a + dt * b for a, b in zip(y, k3)))
        return tuple(a + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
                     for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))

    def exp_map(self, x, v, n_steps=32):
        """Endpoint of the geodesic with initial velocity v (coordinate components)."""
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        speed = self.metric_norm(x, v)
        if np.any(speed > self.h_max * 2.0 + 1e-12):
            raise InjectivityRadiusError("|v| exceeds the trusted radius")
        th, ph, _, _, _, _ = self._flow(
            np.broadcast_to(x[..., 0], speed.shape), np.broadcast_to(x[..., 1], speed.shape),
            np.broadcast_to(v[..., 0], speed.shape), np.broadcast_to(v[..., 1], speed.shape),
            length=1.0, n_steps=n_steps)
        return self.wrap_point(np.stack([th, ph], axis=-1))

    def tangent_polar_vector(self, x, s, alpha):
        """Velocity of length s at angle alpha in the orthonormal frame
        (d_theta / r, d_phi / w)."""
        x = np.asarray(x, float)
        vth = s * np.cos(alpha) / self.r
        vph = s * np.sin(alpha) / self.w(x[..., 0])
        return np.stack([vth, vph], axis=-1)

    # distance -------------------------------------------------------------

    def _segment_length(self, th0, ph0, th1, ph1):
        dth = _wrap(th1 - th0, TWO_PI)
        dph = _wrap(ph1 - ph0, TWO_PI)
        wm = self.w(th0 + 0.5 * dth)
        return np.sqrt((self.r * dth) ** 2 + (wm * dph) ** 2)

    def distance(self, x, y, check_range=False):
        """Midpoint-metric length with one geodesic subdivision; error O(d^3).

        Trusted only for nearby points; with check_range=True raises
        DistanceOutOfRangeError when any pair exceeds 2*h_max.
        """
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        th0, ph0 = x[..., 0], x[..., 1]
        dth = _wrap(y[..., 0] - th0, TWO_PI)
        dph = _wrap(y[..., 1] - ph0, TWO_PI)
        thm, phm = th0 + 0.5 * dth, ph0 + 0.5 * dph
        d = (self._segment_length(th0, ph0, thm, phm)
             + self._segment_length(thm, phm, th0 + dth, ph0 + dph))
        if check_range and np.any(d > 2.0 * self.h_max):
            raise DistanceOutOfRangeError(
                "distance approximation not trusted beyond 2*h_max")
        return d

    def distance_bound(self, d):
        """Crude bound on the subdivided midpoint-rule error, O(d^3)."""
        scale = 1.0 / (self.r * (self.R - self.r))
        return 0.5 * scale * np.asarray(d, float) ** 3

    # ball volume and sampling --------------------------------------------

    def _radial_data(self, theta0, h, n_alpha=64, fracs=None, n_steps=32):
        """Geodesic fan around centers (theta0, 0).

        Returns alpha grid and (theta, phi, J) arrays of shape
        (len(fracs), len(theta0), n_alpha) recorded at radii fracs*h.
        """
        theta0 = np.atleast_1d(np.asarray(theta0, float))
        alpha = np.arange(n_alpha) * (TWO_PI / n_alpha)
        th = np.broadcast_to(theta0[:, None], (len(theta0), n_alpha))
        ph = np.zeros_like(th)
        p = np.cos(alpha)[None, :] / self.r * np.ones_like(th)
        q = np.sin(alpha)[None, :] / self.w(th)
        fr = np.asarray([1.0] if fracs is None else fracs, float)
        tha, pha, Ja = self._flow(th, ph, p, q, length=h, n_steps=n_steps, record_at=fr)
        return alpha, tha, pha, Ja

    def ball_volume(self, x, h, n_alpha=64, n_steps=32):
        """Riemannian area of B(x, h) by polar integration of the Jacobi field.

        The radial integral int_0^h J ds is carried along with the flow via
        Gauss-Legendre nodes; the angular integral is a periodic trapezoid
        rule (spectrally accurate).  Relative accuracy well below 1e-6 for
        h <= h_max.
        """
        self.check_radius(h)
        x = np.asarray(x, float)
        theta0 = np.atleast_1d(x[..., 0]).ravel()
        nodes, weights = np.polynomial.legendre.leggauss(24)
        fr = 0.5 * (nodes + 1.0)
        order = np.argsort(fr)
        fr, wts = fr[order], (0.5 * weights)[order]
        _, _, _, Ja = self._radial_data(theta0, h, n_alpha=n_alpha, fracs=fr, n_steps=n_steps)
        radial = h * np.tensordot(wts, Ja, axes=(0, 0))  # (centers, n_alpha)
        vol = radial.mean(axis=-1) * TWO_PI
        return vol.reshape(np.atleast_1d(x[..., 0]).shape)

    def jacobi_taylor(self, theta0, s):
        """Cubic expansion J ~ s - K(x) s^3 / 6; relative error O(s^3)."""
        return s - self.gauss_curvature(theta0) * s**3 / 6.0

    def sample_ball(self, rng, x, h, mode="ode", max_rounds=200, n_steps=8):
        """Uniform sample of B(x, h) via tangent-polar rejection.

        The (s, alpha) density is J(s, alpha)/|B|; proposals are uniform on
        [0,h] x [0,2pi) and accepted with probability J/J_sup against the
        comparison envelope J_sup = sinh(kappa h)/kappa, valid since the
        Gauss curvature is bounded below by -kappa^2.

        mode="ode" evaluates J with the Jacobi flow (exact up to RK4 error);
        mode="taylor" uses the cubic expansion, biasing the radial density
        by O(h^3) -- acceptable for long-chain statistics, not for sampler
        verification tests.
        """
        self.check_radius(h)
        x = np.asarray(x, float)
        shape = x.shape[:-1]
        theta0 = np.broadcast_to(x[..., 0], shape).ravel()
        phi0 = np.broadcast_to(x[..., 1], shape).ravel()
        n = theta0.size

        J_sup = np.sinh(self.kappa * h) / self.kappa

        if mode == "taylor":
            # rejection on the cubic density first, one flow at the end
            s_acc = np.empty(n)
            a_acc = np.empty(n)
            todo = np.arange(n)
            for _ in range(max_rounds):
                s = h * rng.random(todo.size)
                alpha = rng.uniform(0.0, TWO_PI, todo.size)
                J = self.jacobi_taylor(theta0[todo], s)
                acc = rng.random(todo.size) * J_sup < J
                sel = todo[acc]
                s_acc[sel] = s[acc]
                a_acc[sel] = alpha[acc]
                todo = todo[~acc]
                if todo.size == 0:
                    break
            else:
                raise SamplerInternalError("rejection loop exceeded its bound")
            p = np.cos(a_acc) / self.r
            q = np.sin(a_acc) / self.w(theta0)
            out_th, out_ph, _, _, _, _ = self._flow(
                theta0, phi0, p, q, length=s_acc, n_steps=n_steps)
        else:
            out_th = np.empty(n)
            out_ph = np.empty(n)
            todo = np.arange(n)
            for _ in range(max_rounds):
                s = h * rng.random(todo.size)
                alpha = rng.uniform(0.0, TWO_PI, todo.size)
                p = np.cos(alpha) / self.r
                q = np.sin(alpha) / self.w(theta0[todo])
                th, ph, _, _, J, _ = self._flow(
                    theta0[todo], phi0[todo], p, q, length=s, n_steps=n_steps)
                if np.any(J > J_sup * (1.0 + 1e-9)):
                    raise SamplerInternalError("Jacobi envelope violated; geometry bug")
                acc = rng.random(todo.size) * J_sup < J
                sel = todo[acc]
                out_th[sel] = th[acc]
                out_ph[sel] = ph[acc]
                todo = todo[~acc]
                if todo.size == 0:
                    break
            else:
                raise SamplerInternalError("rejection loop exceeded its bound")
        y = np.stack([out_th, out_ph], axis=-1).reshape(shape + (2,))
        return self.wrap_point(y)

    # reference spectrum ---------------------------------------------------

    def _mode_matrix(self, m, n_theta=512):
        """Symmetrized finite-difference Sturm-Liouville matrix for azimuthal
        mode m: -(1/(r w)) d/dtheta((w/r) f') + m^2/w^2 f = lambda f."""
        dt = TWO_PI / n_theta
        th = np.arange(n_theta) * dt
        w = self.w(th)
        w_half = self.w(th + 0.5 * dt)  # w at i+1/2
        coef = w_half / (self.r**2 * dt**2)
        # symmetric form: conjugate by sqrt(w)
        sw = np.sqrt(w)
        A = np.zeros((n_theta, n_theta))
        idx = np.arange(n_theta)
        up = (idx + 1) % n_theta
        A[idx, idx] += (coef + np.roll(coef, 1)) / w
        A[idx, up] -= coef / np.sqrt(w * w[up])
        A[up, idx] -= coef / np.sqrt(w[up] * w)
        A[idx, idx] += m**2 / w**2
        return A, th

    def sturm_liouville_modes(self, m, count, n_theta=512):
        """Lowest eigenpairs for azimuthal mode m; eigenvectors are the
        symmetrized grid functions u = sqrt(w) f."""
        A, th = self._mode_matrix(m, n_theta)
        lam, vec = np.linalg.eigh(A)
        return lam[:count], vec[:, :count], th

    def reference_spectrum(self, count, n_theta=512):
        entries = []
        m = 0
        while True:
            lam, _, _ = self.sturm_liouville_modes(m, count, n_theta)
            mult = 1 if m == 0 else 2
            entries.extend((float(l), mult) for l in lam[:count])
            # the m-block floor is min(m^2/w^2); once it clears the current
            # count-th level, larger m cannot contribute
            floor = m**2 / (self.R + self.r) ** 2
            flat = sorted(entries)
            total, cutoff = 0, np.inf
            for l, mu in flat:
                total += mu
                if total >= count:
                    cutoff = l
                    break
            if floor > cutoff and total >= count:
                break
            m += 1
            if m > 200:
                raise InvalidParameterError("count too large for spectrum enumeration")
        flat = sorted(entries)
        out, total = [], 0
        for l, mu in flat:
            out.append((l, mu))
            total += mu
            if total >= count:
                break
        return out

    def eigenfunction(self, k, n_theta=512):
        """Grid-based eigenfunction; ordering matches reference_spectrum.

        Each Sturm-Liouville profile f_j(theta) for azimuthal mode m yields
        cos(m phi) f and sin(m phi) f (one function for m=0).  Evaluation
        interpolates the profile linearly on the theta grid.
        """
        spec = self.reference_spectrum(k + 1, n_theta)
        # rebuild the (m, j, parity) list in spectral order
        entries = []
        m = 0
        count = k + 2
        while m**2 / (self.R + self.r) ** 2 <= max(l for l, _ in spec) + 1e-9 or m == 0:
            lam, vec, th = self.sturm_liouville_modes(m, count, n_theta)
            for j in range(len(lam)):
                if m == 0:
                    entries.append((lam[j], m, j, 0))
                else:
                    entries.append((lam[j], m, j, 0))
                    entries.append((lam[j], m, j, 1))
            m += 1
        entries.sort(key=lambda e: (e[0], e[1], e[3]))
        if k >= len(entries):
            raise IndexOutOfRangeError(f"eigenfunction index {k} not available")
        lam, m, j, parity = entries[k]
        _, vec, th = self.sturm_liouville_modes(m, j + 1, n_theta)
        w = self.w(th)
        f = vec[:, j] / np.sqrt(w)  # undo symmetrization
        # L^2(d_g x) normalization: int f^2 r w dtheta * (2pi or pi)
        dt = TWO_PI / n_theta
        angfac = TWO_PI if m == 0 else np.pi
        f = f / np.sqrt(np.sum(f**2 * self.r * w) * dt * angfac)
        th_ext = np.append(th, TWO_PI)
        f_ext = np.append(f, f[0])

        def efun(x, m=m, parity=parity, th_ext=th_ext, f_ext=f_ext):
            x = np.asarray(x, float)
            prof = np.interp(np.mod(x[..., 0], TWO_PI), th_ext, f_ext)
            if m == 0:
                return prof
            ang = np.cos(m * x[..., 1]) if parity == 0 else np.sin(m * x[..., 1])
            return prof * ang

        return efun


# ---------------------------------------------------------------------------


def make_manifold(spec: dict) -> Manifold:
    """Build a manifold from config keys.

    spec["manifold"] in {"flat_torus", "sphere2", "revolution_torus"} with
    parameters "lengths" (or "d" for unit-2pi sides), "R", "r".
    """
    kind = spec.get("manifold")
    if kind == "flat_torus":
        if "lengths" in spec:
            return FlatTorus(spec["lengths"])
        d = int(spec.get("d", 1))
        return FlatTorus([TWO_PI] * d)
    if kind == "sphere2":
        return Sphere2()
    if kind == "revolution_torus":
        return RevolutionTorus(float(spec.get("R", 2.0)), float(spec.get("r", 1.0)))
    raise InvalidParameterError(f"unknown manifold {kind!r}")
