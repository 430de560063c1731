"""Wulff-radial reduction: 1D energies, norms, functional values, eigensolver.

On a Wulff ball of the driving norm every object in the blow-up families is a
function of rho = F°(x), so volume integrals reduce to
int f(rho) n kappa_n rho^{n-1} drho and the Dirichlet energy to
n kappa_n int |v'|^n rho^{n-1} drho (gauge identities).  These reductions
resolve logarithmic cores at any scale a 2D mesh cannot afford.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence
from .norms import kappa_n


@dataclass
class RadialGrid:
    """Uniform grid on [0, R] with Dirichlet condition at rho = R."""

    R: float
    count: int
    norm: object

    def __post_init__(self):
        self.rho = np.linspace(0.0, self.R, self.count)
        self.drho = self.rho[1] - self.rho[0]
        n = self.norm.dim
        self.kappa = kappa_n(self.norm)
        # exact volume weights: cell i owns [rho_i - d/2, rho_i + d/2] ∩ [0, R]
        lo = np.clip(self.rho - 0.5 * self.drho, 0.0, self.R)
        hi = np.clip(self.rho + 0.5 * self.drho, 0.0, self.R)
        self.vol_weights = self.kappa * (hi ** n - lo ** n)
        # segment weights for the energy: integral of n kappa rho^{n-1}
        self.seg_weights = self.kappa * (self.rho[1:] ** n - self.rho[:-1] ** n)

    @property
    def dim(self):
        return self.norm.dim

    def domain_measure(self):
        return self.kappa * self.R ** self.dim

    def volume_integral(self, f_vals):
        return float(np.sum(f_vals * self.vol_weights))

    def lp_norm(self, v, p=None):
        p = self.dim if p is None else p
        return self.volume_integral(np.abs(v) ** p) ** (1.0 / p)

    def energy(self, v, power=None):
        """n kappa int |v'|^power rho^{n-1} drho with v(R) = 0 enforced."""
        p = self.dim if power is None else power
        vv = np.array(v, dtype=float)
        vv[-1] = 0.0
        s = np.diff(vv) / self.drho
        return float(np.sum(np.abs(s) ** p * self.seg_weights))

    def grad_lp_norm(self, v, p=None):
        p = self.dim if p is None else p
        return self.energy(v, power=p) ** (1.0 / p)

    def functional_J(self, v, lam, alpha=0.0, cap=700.0):
        n = self.dim
        B = (1.0 + alpha * self.lp_norm(v) ** n) ** (1.0 / (n - 1.0))
        Z = np.minimum(lam * B * np.abs(v) ** (n / (n - 1.0)), cap)
        return self.volume_integral(np.exp(Z)), int(np.sum(Z >= cap))

    # -- radial solves -----------------------------------------------------------

    def _true_gradient(self, v, fv, eps=1e-9):
        """Partials of  E/n - int f v  wrt node values (Dirichlet node zeroed)."""
        n = self.dim
        vv = np.array(v, dtype=float)
        vv[-1] = 0.0
        s = np.diff(vv) / self.drho
        flux = s if n == 2 else (s * s + eps * eps) ** ((n - 2) / 2.0) * s
        dE = np.zeros_like(vv)
        w = self.seg_weights * flux / self.drho
        dE[:-1] -= w
        dE[1:] += w
        g = dE - fv * self.vol_weights
        g[-1] = 0.0
        return g

    def pde_residual(self, v, fv):
        """Per-volume residual -Q_n^rad v - f (the convergence criterion).

        Volumes are floored at one full shell (kappa drho^n) so the tiny
        origin cell does not amplify float rounding into the norm.
        """
        g = self._true_gradient(v, fv)
        floor = self.kappa * self.drho ** self.dim
        r = g / np.maximum(self.vol_weights, floor)
        r[-1] = 0.0
        return r

    def solve(self, fv, v0=None, tol=1e-9, max_iter=100_000):
        """Jacobi-preconditioned NCG with a gradient-only line search."""
        n = self.dim
        v = np.zeros(self.count) if v0 is None else np.array(v0, dtype=float)
        v[-1] = 0.0
        f_inf = float(np.max(np.abs(fv)))
        target = tol * (1.0 + f_inf)
        # diagonal of the (linearized) stiffness plus a volume floor
        diag = np.zeros(self.count)
        wseg = self.seg_weights / self.drho ** 2
        diag[:-1] += wseg
        diag[1:] += wseg
        diag = np.maximum(diag, 1e-300)

        vol_floor = np.maximum(self.vol_weights, self.kappa * self.drho ** n)

        def slope_fields(vv):
            g = self._true_gradient(vv, fv)
            return g, g / diag

        g, z = slope_fields(v)
        d = -z
        gz = float(np.sum(g * z))
        step = 1.0
        for it in range(max_iter):
            res = float(np.max(np.abs(g / vol_floor)))
            if res <= target:
                return v, it
            dphi0 = float(np.sum(g * d))
            if dphi0 >= 0:
                d = -z
                dphi0 = -gz
            s_lo, dphi_lo, s = 0.0, dphi0, step
            g_s, z_s = slope_fields(v + s * d)
            dphi = float(np.sum(g_s * d))
            if n == 2:
                # quadratic energy: one secant step is exact; recompute the
                # gradient at the accepted point (interpolating it drifts on
                # warm starts whose slopes sit near the rounding floor)
                denom = dphi0 - dphi
                s_star = s * dphi0 / denom if denom < 0 else s
                if not np.isfinite(s_star) or s_star <= 0 or s_star > 1e8 * s:
                    s_star = s
                v = v + s_star * d
                g_star, z_star = slope_fields(v)
                gz_new = float(np.sum(g_star * z_star))
                beta = max(0.0, float(np.sum(z_star * (g_star - g))) / gz) if gz > 0 else 0.0
                d = -z_star + beta * d
                g, z, gz = g_star, z_star, gz_new
                step = max(s_star, 1e-12)
                continue
            k = 0
            while dphi < 0 and k < 60:
                s_lo, dphi_lo = s, dphi
                s *= 2.0
                g_s, z_s = slope_fields(v + s * d)
                dphi = float(np.sum(g_s * d))
                k += 1
            s_hi, dphi_hi = s, dphi
            for _ in range(16):
                if abs(dphi) <= 0.05 * abs(dphi0):
                    break
                den = dphi_hi - dphi_lo
                s_mid = s_lo - dphi_lo * (s_hi - s_lo) / den if den > 0 else 0.5 * (s_lo + s_hi)
                if not (s_lo < s_mid < s_hi):
                    s_mid = 0.5 * (s_lo + s_hi)
                g_s, z_s = slope_fields(v + s_mid * d)
                dphi = float(np.sum(g_s * d))
                if dphi < 0:
                    s_lo, dphi_lo = s_mid, dphi
                else:
                    s_hi, dphi_hi = s_mid, dphi
                s = s_mid
            v = v + s * d
            gz_new = float(np.sum(g_s * z_s))
            beta = max(0.0, float(np.sum(z_s * (g_s - g))) / gz) if gz > 0 else 0.0
            d = -z_s + beta * d
            g, z, gz = g_s, z_s, gz_new
            step = max(s, 1e-12)
        raise NonConvergence("radial solve stalled", iterations=max_iter,
                             residual=float(np.max(np.abs(g))))

    def first_eigenpair(self, tol=1e-9, max_outer=300, inner_tol=1e-8):
        """Radial first eigenpair of the n-Finsler-Laplacian on the Wulff ball."""
        n = self.dim
        v = 1.0 - self.rho / self.R
        v = v / self.lp_norm(v)
        lam = self.energy(v)
        for it in range(max_outer):
            rhs = lam * np.abs(v) ** (n - 1)
            v_new, _ = self.solve(rhs, v0=v, tol=inner_tol)
            v_new = np.abs(v_new)
            v_new /= self.lp_norm(v_new)
            lam_new = self.energy(v_new)
            done = abs(lam_new - lam) <= tol * lam_new
            v, lam = v_new, lam_new
            if done:
                return lam, v, it + 1
        raise NonConvergence("radial eigen iteration stalled", iterations=max_outer)
