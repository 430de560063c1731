"""Discrete n-Finsler-Laplacian machinery.

The operator is never assembled as a divergence stencil: everything flows
through the discrete energy  E(u) = h^n sum F^n(D+ u)  built from forward
differences of the zero-extended field, so the energy, its gradient (the
operator), and the solver are consistent by construction.  For the Euclidean
norm at n = 2 the scheme reduces to the classical 5-point Laplacian.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateNorm, NonConvergence, FitUnstable
from .grid import GridFunction
from .norms import _Regularized, kappa_n

SOLVER_EPS = 1e-8          # gauge regularization inside solves
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 50_000


def forward_gradient(u):
    """Forward-difference gradient of the zero-extended field.

    Anchored at the corners of the padded lattice: shape (*(s+1), dim).
    """
    v = np.where(u.mask, u.values, 0.0)
    up = np.pad(v, 1)
    comps = []
    for k in range(u.dim):
        d = np.diff(up, axis=k)
        sl = tuple(slice(None, -1) if ax != k else slice(None) for ax in range(u.dim))
        comps.append(d[sl] / u.h)
    return np.stack(comps, axis=-1)


def w0_gradient_energy(u, norm, power=None):
    """h^n * sum F^power(D+ u) of the zero-extended field (the W0 form).

    This is the energy whose gradient defines the discrete operator; all
    solves, eigen iterations, and constraint normalizations use it so that
    Euler identities hold exactly at the discrete level.
    """
    n = u.dim if power is None else power
    g = forward_gradient(u)
    vals = norm(g.reshape(-1, u.dim)) ** n
    return float(vals.sum()) * u.cell_measure


def grad_lp_norm(u, norm, p=None):
    """||F(grad u)||_{L^p} in the W0 sense; p defaults to the dimension."""
    p = u.dim if p is None else p
    return w0_gradient_energy(u, norm, power=p) ** (1.0 / p)


def cell_gradient(u):
    """Per-cell gradient: forward difference, falling back to backward at the
    mask boundary (never reaching across the Dirichlet wall)."""
    v = np.where(u.mask, u.values, 0.0)
    g = np.zeros(u.shape + (u.dim,))
    for k in range(u.dim):
        pad = [(0, 0)] * u.dim
        pad[k] = (1, 1)
        vp = np.pad(v, pad)
        mp = np.pad(u.mask, pad)

        def along(s):
            return tuple(s if ax == k else slice(None) for ax in range(u.dim))

        cur, nxt, prv = along(slice(1, -1)), along(slice(2, None)), along(slice(0, -2))
        d_fwd = (vp[nxt] - vp[cur]) / u.h
        d_bwd = (vp[cur] - vp[prv]) / u.h
        g[..., k] = np.where(mp[nxt], d_fwd, np.where(mp[prv], d_bwd, 0.0))
    return np.where(u.mask[..., None], g, 0.0)


def dirichlet_energy(u, norm, power=None):
    """Measured anisotropic energy  sum_cells F^n(grad_h u) h^n.

    One-sided differences at the mask boundary: the field's own variation is
    integrated, without the zero-extension wall jump (a non-W0 field like
    u = x_1 on the unit square reports energy 1).
    """
    n = u.dim if power is None else power
    g = cell_gradient(u)
    vals = norm(g.reshape(-1, u.dim)).reshape(u.shape)
    return float(np.sum(vals[u.mask] ** n)) * u.cell_measure


def _flux_divergence_gradient(u, gauge, n):
    """Per-cell gradient of  (1/n) h^n sum F^n(D+ u), divided by cell measure.

    This is the discrete realization of -Q_n u.
    """
    g = forward_gradient(u)
    P = gauge.power_flux(g, n)
    acc = np.zeros(tuple(s + 2 for s in u.shape))
    anchors = tuple(slice(0, s + 1) for s in u.shape)
    for k in range(u.dim):
        plus = tuple(
            slice(1, s + 2) if ax == k else slice(0, s + 1) for ax, s in enumerate(u.shape)
        )
        acc[plus] += P[..., k]
        acc[anchors] -= P[..., k]
    core = tuple(slice(1, -1) for _ in range(u.dim))
    res = acc[core] / u.h
    return np.where(u.mask, res, 0.0)


def qn_residual(u, f=None, alpha=0.0, norm=None):
    """Residual field of -Q_n u - f - alpha u|u|^{n-2} (gradient of the energy)."""
    if norm is None:
        raise TypeError("norm is required")
    if not norm.pde_supported:
        raise DegenerateNorm(f"{norm} is flagged unusable for PDE solves")
    n = u.dim
    res = _flux_divergence_gradient(u, norm, n)
    if f is not None:
        res = res - np.where(u.mask, f.values, 0.0)
    if alpha != 0.0:
        res = res - alpha * np.abs(u.values) ** (n - 2) * u.values * u.mask
    return u.with_values(res)


# -- convex solves ----------------------------------------------------------------


@dataclass
class SolveInfo:
    iterations: int
    residual: float
    energy: float


def dirichlet_solve(domain, f, norm, u0=None, tol=DEFAULT_TOL,
                    max_iter=DEFAULT_MAX_ITER, sink=None):
    """Minimize the strictly convex  int F^n(grad u)/n - int f u  on the mask.

    Nonlinear conjugate gradient (Polak-Ribiere+).  The line search brackets
    the directional derivative and refines it by secant steps with an Armijo
    backtracking safeguard; for quadratic energies (n = 2 with a quadratic
    gauge) the first secant step is exact and is taken directly.  Terminates
    when the per-cell energy gradient (the PDE residual) satisfies
    ||res||_inf < tol * (1 + ||f||_inf).  Returns (GridFunction, SolveInfo).
    `sink` receives CSV telemetry rows (iteration, energy, grad norm).
    """
    if not norm.pde_supported:
        raise DegenerateNorm(f"{norm} is flagged unusable for PDE solves")
    n = domain.dim
    mask = domain.mask
    hn = domain.cell_measure
    gauge = _Regularized(norm, SOLVER_EPS)
    fv = np.where(mask, f.values, 0.0) if f is not None else np.zeros(domain.shape)
    f_inf = float(np.max(np.abs(fv))) if fv.size else 0.0
    target = tol * (1.0 + f_inf)

    u = np.where(mask, u0.values, 0.0) if u0 is not None else np.zeros(domain.shape)
    work = GridFunction(u, domain.h, domain.origin, mask)
    quadratic = n == 2 and norm.family in ("euclidean", "quadratic_form")

    def objective(vals):
        w = work.with_values(vals)
        g = forward_gradient(w)
        e = float(np.sum(gauge(g.reshape(-1, n)) ** n)) * hn / n
        return e - float(np.sum(fv * vals * mask)) * hn

    def residual(vals):
        w = work.with_values(vals)
        return np.where(mask, _flux_divergence_gradient(w, gauge, n) - fv, 0.0)

    def line_search(u, g, d, dphi0, step_hint):
        """Return (s, residual at u + s d).

        Purely gradient-based backtracking/bracketing on phi'(s) = <res, d>:
        near the minimizer the energy decrease per step drops below the
        float64 resolution of the objective long before the gradient loses
        information, so function-value tests (Armijo/Wolfe) would stall.
        For convex energies the slope bracket is a sound acceptance rule.
        """
        s = step_hint
        g_s = residual(u + s * d)
        dphi = float(np.sum(g_s * d))
        if quadratic:
            # phi' is affine in s: one secant step is the exact minimizer
            s_star = s * dphi0 / (dphi0 - dphi) if dphi != dphi0 else s
            g_star = g + (s_star / s) * (g_s - g)
            return s_star, g_star
        s_lo, dphi_lo = 0.0, dphi0
        expansions = 0
        while dphi < 0.0 and expansions < 60:
            s_lo, dphi_lo = s, dphi
            s *= 2.0
            g_s = residual(u + s * d)
            dphi = float(np.sum(g_s * d))
            expansions += 1
        s_hi, dphi_hi = s, dphi
        best_s, best_g = s, g_s
        for _ in range(16):
            if abs(dphi) <= 0.05 * abs(dphi0):
                break
            denom = dphi_hi - dphi_lo
            s_mid = s_lo - dphi_lo * (s_hi - s_lo) / denom if denom > 0 else 0.5 * (s_lo + s_hi)
            if not (s_lo < s_mid < s_hi):
                s_mid = 0.5 * (s_lo + s_hi)
            g_s = residual(u + s_mid * d)
            dphi = float(np.sum(g_s * d))
            best_s, best_g = s_mid, g_s
            if dphi < 0.0:
                s_lo, dphi_lo = s_mid, dphi
            else:
                s_hi, dphi_hi = s_mid, dphi
        return best_s, best_g

    g = residual(u)
    res_inf = float(np.max(np.abs(g)))
    d = -g
    gg = float(np.sum(g * g))
    step = 1.0
    it = 0
    if sink is not None:
        sink.write("iteration,energy,grad_norm\n")

    while res_inf > target:
        if it >= max_iter:
            raise NonConvergence(
                f"dirichlet_solve: {res_inf:.3e} > {target:.3e} after {max_iter} iterations",
                iterations=it, residual=res_inf,
            )
        dphi0 = float(np.sum(g * d))
        if dphi0 >= 0.0:  # stale direction, restart on steepest descent
            d = -g
            dphi0 = -gg
        s, g_new = line_search(u, g, d, dphi0, step)
        u = u + s * d
        if g_new is None:
            g_new = residual(u)
        gg_new = float(np.sum(g_new * g_new))
        beta = max(0.0, float(np.sum(g_new * (g_new - g))) / gg) if gg > 0 else 0.0
        if abs(float(np.sum(g_new * g))) > 0.5 * gg_new:  # Powell restart
            beta = 0.0
        d = -g_new + beta * d
        g, gg = g_new, gg_new
        res_inf = float(np.max(np.abs(g)))
        step = max(s, 1e-9)
        it += 1
        if sink is not None and (it % 50 == 0 or res_inf <= target):
            sink.write(f"{it},{objective(u)!r},{res_inf!r}\n")

    out = work.with_values(u)
    return out, SolveInfo(iterations=it, residual=res_inf, energy=objective(u))


# -- first eigenpair ---------------------------------------------------------------


@dataclass
class EigenPair:
    lambda1: float
    eigenfunction: GridFunction
    iterations: int
    history: list = field(default_factory=list)


def rayleigh_quotient(u, norm):
    n = u.dim
    return w0_gradient_energy(u, norm) / u.lp_norm(n) ** n


def _initial_guess(domain):
    # distance-to-boundary surrogate of the first Laplacian eigenfunction
    dist = ndimage.distance_transform_edt(domain.mask)
    return domain.with_values(dist.astype(float))


def first_eigenpair(domain, norm, tol=1e-8, max_outer=200, inner_tol=DEFAULT_TOL,
                    sink=None):
    """Smallest Rayleigh quotient of ||F(grad u)||_n^n / ||u||_n^n by inverse iteration.

    Each step solves -Q_n v = lambda_k u_k^{n-1}, renormalizes ||v||_n = 1, and
    updates lambda from the Dirichlet energy; the eigenpair is the fixed point.
    """
    if not domain.mask.any():
        raise ValueError("empty domain mask")
    n = domain.dim
    u = _initial_guess(domain)
    u = u.with_values(u.values / u.lp_norm(n))
    lam = w0_gradient_energy(u, norm)
    history = [lam]
    for it in range(1, max_outer + 1):
        rhs = u.with_values(lam * np.abs(u.values) ** (n - 1))
        v, _ = dirichlet_solve(domain, rhs, norm, u0=u, tol=inner_tol)
        vals = v.values
        if vals[domain.mask].min() < 0:
            vals = np.abs(vals)  # sign flip: restart from |u|
        v = domain.with_values(vals)
        v = v.with_values(v.values / v.lp_norm(n))
        lam_new = w0_gradient_energy(v, norm)
        history.append(lam_new)
        done = abs(lam_new - lam) < tol * abs(lam_new)
        u, lam = v, lam_new
        if sink is not None:
            sink.write(f"{it},{lam!r}\n")
        if done:
            return EigenPair(lam, u, it, history)
    raise NonConvergence("first_eigenpair: inverse iteration stalled",
                         iterations=max_outer, residual=abs(history[-1] - history[-2]))


# -- Green function -----------------------------------------------------------------


@dataclass
class GreenResult:
    G: GridFunction
    C_G: float
    gamma: float
    fit_rms: float
    log_coeff: float
    x0: np.ndarray
    iterations: int

    def upper_bound_constant(self, norm, domain_measure):
        """|Omega| + kappa_n exp(lambda_n C_G + H_{n-1})."""
        from .norms import lambda_n
        n = self.G.dim
        H = sum(1.0 / k for k in range(1, n))
        return domain_measure + kappa_n(norm) * np.exp(lambda_n(norm) * self.C_G + H)


def mollified_dirac(domain, norm, x0, radius=None):
    """Hat source of the given Wulff radius (default 2h) with unit discrete mass."""
    r = 2.0 * domain.h if radius is None else radius
    rho = norm.polar(domain.points() - np.asarray(x0, dtype=float))
    w = np.maximum(0.0, 1.0 - rho / r) * domain.mask
    total = w.sum() * domain.cell_measure
    if total <= 0:
        raise ValueError("mollified dirac has empty support on the mask")
    return domain.with_values(w / total)


def green_function(domain, norm, alpha=0.0, x0=None, fit_window=(4.0, 8.0),
                   tol=1e-7, max_fixed_point=60):
    """Solve -Q_n G = delta_h + alpha G^{n-1}, then fit the log expansion.

    Fits  G + (n kappa_n)^{-1/(n-1)} log F°(x - x0) ~ C_G  on the annulus
    fit_window * h, and the slope gamma of G against the log profile.
    """
    n = domain.dim
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    delta = mollified_dirac(domain, norm, x0)
    G, info = dirichlet_solve(domain, delta, norm)
    iters = 1
    if alpha != 0.0:
        for iters in range(2, max_fixed_point + 2):
            rhs = domain.with_values(
                delta.values + alpha * np.maximum(G.values, 0.0) ** (n - 1)
            )
            G_new, info = dirichlet_solve(domain, rhs, norm, u0=G)
            change = float(np.max(np.abs(G_new.values - G.values)))
            G = G_new
            if change < tol * max(1.0, G.max_abs()):
                break
        else:
            raise NonConvergence("green_function: source fixed point stalled "
                                 "(alpha too close to lambda_1?)",
                                 iterations=max_fixed_point, residual=change)

    c_n = (n * kappa_n(norm)) ** (-1.0 / (n - 1.0))
    rho = norm.polar(domain.points() - x0)
    ring = domain.mask & (rho >= fit_window[0] * domain.h) & (rho <= fit_window[1] * domain.h)
    if ring.sum() < 8:
        raise FitUnstable("annulus contains too few cells")
    y = G.values[ring] + c_n * np.log(rho[ring])
    C_G = float(np.mean(y))
    fit_rms = float(np.sqrt(np.mean((y - C_G) ** 2)))
    X = -c_n * np.log(rho[ring])
    Xc = X - X.mean()
    gamma = float(np.dot(Xc, G.values[ring]) / np.dot(Xc, Xc))
    if fit_rms > 0.2 * max(abs(C_G), c_n):
        raise FitUnstable(
            f"annulus regression rms {fit_rms:.3e} exceeds 20% of the fit scale"
        )
    return GreenResult(G, C_G, gamma, fit_rms, c_n, x0, iters)
