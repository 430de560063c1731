"""Finsler norm algebra: evaluation, gradients, polar duality, Wulff-ball volume.

A gauge here is an even, convex, positively 1-homogeneous function F > 0 away
from 0, with anisotropy bounds a|x| <= F(x) <= b|x|.  Four families are
supported; each has a known computation path for its polar
F°(x) = sup_{xi != 0} <x, xi>/F(xi), so duality never requires black-box
global optimization.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedDimension, ZeroVector

EPS_MACH = float(np.finfo(float).eps)
FD_STEP = EPS_MACH ** (1.0 / 3.0)

# directions used for the (a, b) anisotropy estimate, per construction contract
ANISOTROPY_DIRECTIONS = 4096
KAPPA_PANELS_2D = 4096
KAPPA_PANELS_3D = (720, 360)


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise ValueError(f"expected last axis {dim}, got shape {x.shape}")
    return x


def circle_directions(count, offset=0.0):
    theta = offset + 2.0 * np.pi * np.arange(count) / count
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def fibonacci_sphere(count):
    """Roughly equidistributed directions on S^2."""
    i = np.arange(count) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / count)
    theta = np.pi * (1.0 + math.sqrt(5.0)) * i
    return np.stack(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)],
        axis=-1,
    )


class FinslerNorm:
    """One gauge from the supported families.

    Use the module constructors (euclidean, weighted_p_norm, quadratic_form,
    sampled_support) rather than instantiating directly.  Instances are
    immutable; every method is pure and vectorized over leading axes.
    """

    def __init__(self, family, dim, p=None, weights=None, a_matrix=None,
                 support_values=None, _skip_bounds=False):
        self.family = family
        self.dim = int(dim)
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        self.p = p
        self.weights = None if weights is None else np.asarray(weights, dtype=float)
        self.a_matrix = None if a_matrix is None else np.asarray(a_matrix, dtype=float)
        self.support_values = (
            None if support_values is None else np.asarray(support_values, dtype=float)
        )
        self._polar = None
        self._kappa = None

        if family == "p_norm":
            if p is None or p < 1:
                raise ValueError("p_norm requires p >= 1")
            if self.weights is None:
                self.weights = np.ones(self.dim)
            if self.weights.shape != (self.dim,) or np.any(self.weights <= 0):
                raise ValueError("p_norm weights must be positive, length dim")
        elif family == "quadratic_form":
            A = self.a_matrix
            if A is None or A.shape != (self.dim, self.dim):
                raise ValueError("quadratic_form requires a dim x dim matrix")
            if not np.allclose(A, A.T):
                raise ValueError("quadratic_form matrix must be symmetric")
            if np.any(np.linalg.eigvalsh(A) <= 0):
                raise ValueError("quadratic_form matrix must be positive definite")
        elif family == "sampled":
            if self.dim != 2:
                raise UnsupportedDimension("sampled_support is 2D only")
            v = self.support_values
            if v is None or v.ndim != 1 or v.size < 8 or np.any(v <= 0):
                raise ValueError("sampled_support needs >= 8 positive samples")
            # enforce evenness: average antipodal samples (grid length must be even)
            if v.size % 2:
                raise ValueError("sampled_support grid length must be even")
            half = v.size // 2
            sym = 0.5 * (v + np.roll(v, half))
            self.support_values = sym
        elif family != "euclidean":
            raise ValueError(f"unknown family {family!r}")

        # p in {1, inf} lack Hess(F^2) > 0; geometry ops fine, PDE solves rejected
        self.pde_supported = not (family == "p_norm" and (p == 1 or math.isinf(p)))

        if _skip_bounds:
            self.anisotropy_bounds = (math.nan, math.nan)
        else:
            self.anisotropy_bounds = self._estimate_bounds()

    # -- evaluation -----------------------------------------------------------

    def __call__(self, xi):
        """F(xi); vectorized over leading axes of xi with shape (..., dim)."""
        xi = _as_points(xi, self.dim)
        if self.family == "euclidean":
            return np.linalg.norm(xi, axis=-1)
        if self.family == "p_norm":
            if math.isinf(self.p):
                return np.max(self.weights * np.abs(xi), axis=-1)
            if self.p == 1:
                return np.sum(self.weights * np.abs(xi), axis=-1)
            return np.sum(self.weights * np.abs(xi) ** self.p, axis=-1) ** (1.0 / self.p)
        if self.family == "quadratic_form":
            return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", xi, self.a_matrix, xi), 0.0))
        # sampled: F(xi) = |xi| * s(theta), s periodic-linear in the angle
        r = np.linalg.norm(xi, axis=-1)
        theta = np.arctan2(xi[..., 1], xi[..., 0])
        return r * self._interp_support(theta)

    def _interp_support(self, theta):
        v = self.support_values
        m = v.size
        t = np.mod(theta, 2.0 * np.pi) * (m / (2.0 * np.pi))
        i0 = np.floor(t).astype(int) % m
        frac = t - np.floor(t)
        return v[i0] * (1.0 - frac) + v[(i0 + 1) % m] * frac

    def grad(self, xi):
        """grad F at xi != 0 (analytic where the family permits, else central FD)."""
        xi = _as_points(xi, self.dim)
        r = np.linalg.norm(xi, axis=-1)
        if np.any(r == 0.0):
            raise ZeroVector("grad_F undefined at the origin")
        if self.family == "euclidean":
            return xi / r[..., None]
        if self.family == "p_norm":
            w = self.weights
            if math.isinf(self.p):
                # gradient a.e.: along the maximizing coordinate
                k = np.argmax(w * np.abs(xi), axis=-1)
                g = np.zeros_like(xi)
                np.put_along_axis(
                    g, k[..., None],
                    (w[k] * np.sign(np.take_along_axis(xi, k[..., None], -1)[..., 0]))[..., None],
                    -1,
                )
                return g
            if self.p == 1:
                return w * np.sign(xi)
            F = self(xi)
            return w * np.abs(xi) ** (self.p - 1) * np.sign(xi) / F[..., None] ** (self.p - 1)
        if self.family == "quadratic_form":
            return xi @ self.a_matrix / self(xi)[..., None]
        return self._fd_grad(self, xi)

    @staticmethod
    def _fd_grad(func, xi):
        h = FD_STEP * np.maximum(1.0, np.linalg.norm(xi, axis=-1))[..., None]
        g = np.empty_like(xi)
        for k in range(xi.shape[-1]):
            e = np.zeros(xi.shape[-1])
            e[k] = 1.0
            g[..., k] = (func(xi + h * e) - func(xi - h * e)) / (2.0 * h[..., 0])
        return g

    # -- duality --------------------------------------------------------------

    def polar(self, x):
        """F°(x) = sup <x, xi>/F(xi); closed form except for sampled gauges."""
        return self.polar_norm()(_as_points(x, self.dim))

    def polar_grad(self, x):
        return self.polar_norm().grad(x)

    def polar_norm(self):
        """The dual gauge as a first-class FinslerNorm (cached)."""
        if self._polar is not None:
            return self._polar
        if self.family == "euclidean":
            polar = self
        elif self.family == "p_norm":
            w = self.weights
            if math.isinf(self.p):
                polar = FinslerNorm("p_norm", self.dim, p=1, weights=1.0 / w)
            elif self.p == 1:
                polar = FinslerNorm("p_norm", self.dim, p=math.inf, weights=1.0 / w)
            else:
                q = self.p / (self.p - 1.0)
                polar = FinslerNorm("p_norm", self.dim, p=q, weights=w ** (1.0 - q))
        elif self.family == "quadratic_form":
            polar = FinslerNorm("quadratic_form", self.dim,
                                a_matrix=np.linalg.inv(self.a_matrix))
        else:
            polar = FinslerNorm("sampled", 2, support_values=self._sampled_polar_values())
        polar._polar = self
        self._polar = polar
        return polar

    def _sampled_polar_values(self):
        """Tabulate F° on the direction grid: grid max of <x,d>/F(d), golden refined.

        Both x and d are unit vectors, so <x(a), d(b)> = cos(a - b).
        """
        m = self.support_values.size
        theta_x = 2.0 * np.pi * np.arange(m) / m

        def ratio(td):
            d = np.stack([np.cos(td), np.sin(td)], axis=-1)
            return np.cos(theta_x - td) / self(d)

        theta_d = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
        Fd = self(np.stack([np.cos(theta_d), np.sin(theta_d)], axis=-1))
        coarse = np.cos(theta_x[:, None] - theta_d[None, :]) / Fd[None, :]
        best = np.argmax(coarse, axis=1)
        span = 2.0 * np.pi / 4096
        lo = theta_d[best] - span
        hi = theta_d[best] + span
        gr = (math.sqrt(5.0) - 1.0) / 2.0
        for _ in range(48):
            d1 = hi - gr * (hi - lo)
            d2 = lo + gr * (hi - lo)
            take2 = ratio(d2) >= ratio(d1)
            lo = np.where(take2, d1, lo)
            hi = np.where(take2, hi, d2)
        return ratio(0.5 * (lo + hi))

    # -- geometry -------------------------------------------------------------

    def _estimate_bounds(self):
        if self.dim == 2:
            dirs = circle_directions(ANISOTROPY_DIRECTIONS)
            vals = self(dirs)
            theta = 2.0 * np.pi * np.arange(ANISOTROPY_DIRECTIONS) / ANISOTROPY_DIRECTIONS
            a = self._refine_extreme(theta[np.argmin(vals)], minimize=True)
            b = self._refine_extreme(theta[np.argmax(vals)], minimize=False)
            return (a, b)
        if self.dim == 3:
            vals = self(fibonacci_sphere(ANISOTROPY_DIRECTIONS))
            # pad by the covering-error bound of the direction net
            pad = 4.0 * (4.0 * np.pi / ANISOTROPY_DIRECTIONS)
            return (float(vals.min()) * (1.0 - pad), float(vals.max()) * (1.0 + pad))
        dirs = np.random.default_rng(0).standard_normal((ANISOTROPY_DIRECTIONS, self.dim))
        dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
        vals = self(dirs)
        return (float(vals.min()) * 0.95, float(vals.max()) * 1.05)

    def _refine_extreme(self, theta0, minimize):
        span = 2.0 * np.pi / ANISOTROPY_DIRECTIONS
        lo, hi = theta0 - span, theta0 + span
        gr = (math.sqrt(5.0) - 1.0) / 2.0
        sign = 1.0 if minimize else -1.0

        def f(t):
            return sign * float(self(np.array([math.cos(t), math.sin(t)])))

        for _ in range(60):
            d1 = hi - gr * (hi - lo)
            d2 = lo + gr * (hi - lo)
            if f(d1) < f(d2):
                hi = d2
            else:
                lo = d1
        return sign * f(0.5 * (lo + hi))

    def power_flux(self, g, n):
        """F^{n-1}(g) * F_xi(g) with the removable zero at g = 0 filled in.

        Valid for n >= 2: the product extends continuously by 0.  Used by the
        discrete operator assembly, where gradient fields legitimately vanish.
        """
        g = _as_points(g, self.dim)
        r2 = np.sum(g * g, axis=-1)
        safe = np.where(r2 > 0.0, 1.0, np.nan)
        gs = g * safe[..., None]
        with np.errstate(invalid="ignore"):
            flux = self(gs)[..., None] ** (n - 1) * self.grad_nonzero(gs)
        return np.where(r2[..., None] > 0.0, np.nan_to_num(flux), 0.0)

    def grad_nonzero(self, xi):
        """grad without the zero check; caller guarantees nonzero rows."""
        if self.family == "euclidean":
            r = np.linalg.norm(xi, axis=-1)
            return xi / r[..., None]
        return FinslerNorm.grad(self, xi)

    def __repr__(self):
        if self.family == "p_norm":
            tag = f"p_norm(p={self.p}, w={self.weights})"
        elif self.family == "quadratic_form":
            tag = f"quadratic_form({self.a_matrix.tolist()})"
        elif self.family == "sampled":
            tag = f"sampled({self.support_values.size} dirs)"
        else:
            tag = f"euclidean(dim={self.dim})"
        return f"FinslerNorm<{tag}>"


class _Regularized:
    """sqrt(F^2 + eps^2 |xi|^2): smooth uniformly convex stand-in for solver internals."""

    def __init__(self, norm, eps=1e-8):
        self.base = norm
        self.eps = eps
        self.dim = norm.dim

    def __call__(self, xi):
        f = self.base(xi)
        r = np.linalg.norm(np.asarray(xi, dtype=float), axis=-1)
        return np.sqrt(f * f + (self.eps * r) ** 2)

    def power_flux(self, g, n):
        g = _as_points(g, self.dim)
        r2 = np.sum(g * g, axis=-1)
        mask = r2 > 0.0
        safe = np.where(mask, 1.0, np.nan)
        gs = g * safe[..., None]
        with np.errstate(invalid="ignore"):
            f = self.base(gs)
            fe = np.sqrt(f * f + self.eps ** 2 * r2)
            # grad F_eps = (F gradF + eps^2 xi) / F_eps
            gf = (f[..., None] * self.base.grad_nonzero(gs) + self.eps ** 2 * gs) / fe[..., None]
            flux = fe[..., None] ** (n - 1) * gf
        return np.where(mask[..., None], np.nan_to_num(flux), 0.0)


# -- constructors --------------------------------------------------------------


def euclidean(dim=2):
    return FinslerNorm("euclidean", dim)


def weighted_p_norm(p, weights):
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    return FinslerNorm("p_norm", weights.size, p=p, weights=weights)


def quadratic_form(a_matrix):
    a_matrix = np.asarray(a_matrix, dtype=float)
    return FinslerNorm("quadratic_form", a_matrix.shape[0], a_matrix=a_matrix)


def sampled_support(values):
    """Gauge tabulated on an even, uniform angle grid over [0, 2pi)."""
    return FinslerNorm("sampled", 2, support_values=values)


@dataclass(frozen=True)
class WulffBall:
    """Anisotropic ball {x : F°(x - center) <= radius}."""

    norm: FinslerNorm
    radius: float
    center: np.ndarray = None

    def __post_init__(self):
        c = np.zeros(self.norm.dim) if self.center is None else np.asarray(self.center, float)
        object.__setattr__(self, "center", c)
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def kappa_n(self):
        return kappa_n(self.norm)

    def contains(self, x):
        return self.norm.polar(np.asarray(x, float) - self.center) <= self.radius

    def measure(self):
        return self.kappa_n * self.radius ** self.norm.dim


# -- Wulff volume and the sharp constant ---------------------------------------


def _simpson_weights(panels, width):
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (width / panels / 3.0)


def kappa_n(norm):
    """Lebesgue measure of the unit Wulff ball {F° <= 1} (n in {2, 3})."""
    if norm._kappa is not None:
        return norm._kappa
    polar = norm.polar_norm()
    if norm.dim == 2:
        panels = KAPPA_PANELS_2D
        theta = np.linspace(0.0, 2.0 * np.pi, panels + 1)
        rho = 1.0 / polar(np.stack([np.cos(theta), np.sin(theta)], axis=-1))
        val = 0.5 * float(np.dot(_simpson_weights(panels, 2.0 * np.pi), rho ** 2))
    elif norm.dim == 3:
        pt, pp = KAPPA_PANELS_3D
        theta = np.linspace(0.0, 2.0 * np.pi, pt + 1)
        phi = np.linspace(0.0, np.pi, pp + 1)
        T, P = np.meshgrid(theta, phi, indexing="ij")
        dirs = np.stack(
            [np.sin(P) * np.cos(T), np.sin(P) * np.sin(T), np.cos(P)], axis=-1
        )
        rho = 1.0 / polar(dirs.reshape(-1, 3)).reshape(T.shape)
        wt = _simpson_weights(pt, 2.0 * np.pi)
        wp = _simpson_weights(pp, np.pi)
        val = float(wt @ ((rho ** 3 / 3.0) * np.sin(P)) @ wp)
    else:
        raise UnsupportedDimension(f"kappa_n supports n in {{2, 3}}, got {norm.dim}")
    norm._kappa = val
    return val


def lambda_n(norm):
    """Sharp exponential-growth constant n^{n/(n-1)} kappa_n^{1/(n-1)}."""
    n = norm.dim
    return n ** (n / (n - 1.0)) * kappa_n(norm) ** (1.0 / (n - 1.0))


# -- Lemma-style duality verification ------------------------------------------


@dataclass
class DualityReport:
    """Max violation per duality identity over the sampled points."""

    samples: int
    violations: dict = field(default_factory=dict)

    @property
    def max_violation(self):
        return max(self.violations.values())

    def __str__(self):
        lines = [f"duality check over {self.samples} samples:"]
        for k in sorted(self.violations):
            lines.append(f"  ({k}) max violation {self.violations[k]:.3e}")
        return "\n".join(lines)


def duality_check(norm, samples, seed=0, force_fd=False):
    """Verify the six gauge/polar identities on random points.

    (i)   |F(x)-F(y)| <= F(x+y) <= F(x)+F(y)
    (ii)  gradient-norm bounds from the anisotropy constants
    (iii) <x, grad F(x)> = F(x) and the polar counterpart
    (iv)  F(grad F°(x)) = 1,  F°(grad F(x)) = 1
    (v)   F°(x) F_xi(grad F°(x)) = x
    (vi)  F_xi(t xi) = sgn(t) F_xi(xi)

    force_fd replaces analytic gradients with central differences (the
    degraded-tolerance path used by families without closed-form gradients).
    """
    if samples < 1:
        raise ValueError("samples >= 1 required")
    rng = np.random.default_rng(seed)
    n = norm.dim
    x = rng.standard_normal((samples, n))
    y = rng.standard_normal((samples, n))
    x /= np.linalg.norm(x, axis=-1, keepdims=True)
    y /= np.linalg.norm(y, axis=-1, keepdims=True)
    x *= rng.uniform(0.5, 2.0, (samples, 1))
    y *= rng.uniform(0.5, 2.0, (samples, 1))

    polar = norm.polar_norm()
    a, b = norm.anisotropy_bounds
    rep = DualityReport(samples=samples)

    def gradient(f, pts):
        return FinslerNorm._fd_grad(f, pts) if force_fd else f.grad(pts)

    Fx, Fy, Fxy = norm(x), norm(y), norm(x + y)
    rep.violations["i"] = float(
        max(np.max(np.abs(Fx - Fy) - Fxy), np.max(Fxy - Fx - Fy), 0.0)
    )

    gF = gradient(norm, x)
    gP = gradient(polar, x)
    ng, np_ = np.linalg.norm(gF, axis=-1), np.linalg.norm(gP, axis=-1)
    rep.violations["ii"] = float(
        max(
            np.max(a - ng), np.max(ng - b),
            np.max(1.0 / b - np_), np.max(np_ - 1.0 / a),
            0.0,
        )
    )

    rep.violations["iii"] = float(
        max(
            np.max(np.abs(np.sum(x * gF, axis=-1) - Fx)),
            np.max(np.abs(np.sum(x * gP, axis=-1) - polar(x))),
        )
    )

    rep.violations["iv"] = float(
        max(np.max(np.abs(norm(gP) - 1.0)), np.max(np.abs(polar(gF) - 1.0)))
    )

    inv = polar(x)[..., None] * gradient(norm, gP)
    rep.violations["v"] = float(np.max(np.abs(inv - x)))

    t = rng.uniform(0.2, 2.0, (samples, 1)) * rng.choice([-1.0, 1.0], (samples, 1))
    rep.violations["vi"] = float(np.max(np.abs(gradient(norm, t * x) - np.sign(t) * gF)))
    return rep
