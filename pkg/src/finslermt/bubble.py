"""The Wulff-radial limit profile and its verification.

w(r) = -((n-1)/lambda_n) log(1 + kappa_n^{1/(n-1)} r^{n/(n-1)})  solves
-(1/r^{n-1}) (r^{n-1} |w'|^{n-2} w')' = exp(n/(n-1) lambda_n w)  with unit
total mass  n kappa_n int exp(...) r^{n-1} dr = 1.  The radial operator is
the reduction of -Q_n to functions of r = F°(x): the gauge identities make
F(grad w) = |w'| and F^{n-1} F_xi(grad w) = |w'|^{n-2} w' x / r.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .grid import GridFunction
from .norms import kappa_n, lambda_n


@dataclass
class RadialFunction:
    """Field sampled on an increasing radius grid in the Wulff variable r = F°(x - x0)."""

    radii: np.ndarray
    values: np.ndarray
    norm: object

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.radii.ndim != 1 or self.radii.size < 3:
            raise ValueError("need at least 3 radius samples")
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    def __call__(self, r):
        return np.interp(r, self.radii, self.values)

    def to_grid(self, grid, center=None):
        """Sample w(F°(x - center)) on the cell centers of `grid`."""
        c = np.zeros(grid.dim) if center is None else np.asarray(center, dtype=float)
        rho = self.norm.polar(grid.points() - c)
        return GridFunction(self(rho), grid.h, grid.origin, grid.mask)


def default_radii(r_max=1e4, count=20_000):
    return np.concatenate([[0.0], np.geomspace(1e-6, r_max, count)])


def bubble(norm, radii=None):
    """The explicit limit profile with w(0) = 0 = max w."""
    n = norm.dim
    lam = lambda_n(norm)
    kap = kappa_n(norm) ** (1.0 / (n - 1.0))
    r = default_radii() if radii is None else np.asarray(radii, dtype=float)
    w = -((n - 1.0) / lam) * np.log1p(kap * r ** (n / (n - 1.0)))
    return RadialFunction(r, w, norm)


def bubble_rhs(w_vals, norm):
    """exp(n/(n-1) lambda_n w)."""
    n = norm.dim
    return np.exp(n / (n - 1.0) * lambda_n(norm) * np.asarray(w_vals))


def bubble_residual(w):
    """Max abs residual of the radial PDE at interior grid points.

    Conservative differencing: flux r^{n-1}|w'|^{n-2} w' at midpoints, then a
    centered divided difference for the divergence.
    """
    n = w.norm.dim
    r, v = w.radii, w.values
    rm = 0.5 * (r[1:] + r[:-1])
    s = np.diff(v) / np.diff(r)
    flux = rm ** (n - 1) * np.abs(s) ** (n - 2) * s
    ri = r[1:-1]
    div = np.diff(flux) / np.diff(rm)
    lhs = -div / ri ** (n - 1)
    rhs = bubble_rhs(v[1:-1], w.norm)
    res = lhs - rhs
    return float(np.max(np.abs(res))), ri, res


def bubble_mass(w, r_max=None):
    """n kappa_n int_0^R exp(...) r^{n-1} dr by adaptive quadrature, plus the tail.

    The tail beyond R has the closed form 1 - (T/(1+T))^{n-1} with
    T = kappa^{1/(n-1)} R^{n/(n-1)}.
    """
    n = w.norm.dim
    kap = kappa_n(w.norm)
    R = w.radii[-1] if r_max is None else float(r_max)

    def integrand(r):
        return bubble_rhs(w(r), w.norm) * r ** (n - 1)

    total = 0.0
    cuts = [0.0] + [c for c in (0.1, 1.0, 10.0, 100.0) if c < R] + [R]
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, _ = integrate.quad(integrand, a, b, limit=200)
        total += val
    total *= n * kap
    T = kap ** (1.0 / (n - 1.0)) * R ** (n / (n - 1.0))
    tail = 1.0 - (T / (1.0 + T)) ** (n - 1.0)
    return total + tail


def partial_mass(w, r):
    """Mass of the profile over the Wulff ball of radius r (exact closed form)."""
    n = w.norm.dim
    kap = kappa_n(w.norm)
    T = kap ** (1.0 / (n - 1.0)) * float(r) ** (n / (n - 1.0))
    return (T / (1.0 + T)) ** (n - 1.0)
