"""The perturbed exponential functional, subcritical maximization, and
stationarity diagnostics.

J(u) = int exp(lam (1 + alpha ||u||_n^n)^{1/(n-1)} |u|^{n/(n-1)}) dx on the
constraint set ||F(grad u)||_{L^n} = 1.  The constraint is enforced by exact
rescaling (the set is a scaling-orbit section), maximization is projected
gradient ascent from three starts followed by a monotone Euler-Lagrange
fixed-point polish.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import FinslermtError, NonConvergence
from .norms import lambda_n
from .pde import dirichlet_solve, grad_lp_norm, qn_residual

EXP_CAP = 700.0  # just under the float64 overflow threshold for exp


class Saturation(FinslermtError, RuntimeError):
    """Exponent cap reached during maximization (mesh too coarse for this gap)."""


@dataclass
class MTConfig:
    """Functional parameters: exponent coefficient, L^n strength, gap."""

    lam: float
    alpha: float = 0.0
    epsilon_sub: float = 0.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass
class MTReport:
    J_value: float
    constraint_residual: float
    alpha_eps: float
    beta_eps: float
    gamma_eps: float
    lambda_eps: float
    M_eps: float
    x_eps: np.ndarray
    r_eps: float
    el_residual_rel: float
    saturated_cells: int = 0
    mesh_too_coarse: bool = False
    start_label: str = ""
    ascent_iterations: int = 0
    polish_iterations: int = 0


def _exponent_field(u, cfg, norm):
    n = u.dim
    B = (1.0 + cfg.alpha * u.lp_norm(n) ** n) ** (1.0 / (n - 1.0))
    Z = cfg.lam * B * np.abs(u.values) ** (n / (n - 1.0))
    return Z, B


def evaluate_J(u, cfg, norm):
    """Cell-sum value of the functional (exponent capped at 700)."""
    J, _ = evaluate_J_detailed(u, cfg, norm)
    return J


def evaluate_J_detailed(u, cfg, norm):
    Z, _ = _exponent_field(u, cfg, norm)
    saturated = int(np.sum((Z > EXP_CAP) & u.mask))
    vals = np.exp(np.minimum(Z, EXP_CAP))
    return float(np.sum(vals[u.mask])) * u.cell_measure, saturated


def _J_gradient(u, cfg, norm):
    """Exact gradient of the (capped) discrete J with respect to cell values."""
    n = u.dim
    hn = u.cell_measure
    un = u.lp_norm(n) ** n
    B = (1.0 + cfg.alpha * un) ** (1.0 / (n - 1.0))
    a = np.abs(u.values)
    Z = cfg.lam * B * a ** (n / (n - 1.0))
    e = np.exp(np.minimum(Z, EXP_CAP)) * u.mask
    g = e * cfg.lam * B * (n / (n - 1.0)) * a ** (1.0 / (n - 1.0)) * np.sign(u.values)
    if cfg.alpha != 0.0:
        S = float(np.sum(e * a ** (n / (n - 1.0)))) * hn
        dB = (
            cfg.alpha * n / (n - 1.0)
            * (1.0 + cfg.alpha * un) ** ((2.0 - n) / (n - 1.0))
            * a ** (n - 1.0) * np.sign(u.values) * hn
        )
        g = g + cfg.lam * S * dB / hn
    return g * hn


def project_constraint(u, norm):
    """Rescale onto ||F(grad u)||_{L^n} = 1 (exact under 1-homogeneity)."""
    nrm = grad_lp_norm(u, norm)
    if nrm == 0.0:
        raise ValueError("cannot project the zero function")
    return u.with_values(u.values / nrm)


def el_parameters(u, cfg, norm):
    """(alpha_eps, beta_eps, gamma_eps, lambda_eps) from the current iterate."""
    n = u.dim
    un = u.lp_norm(n) ** n
    alpha_eps = cfg.lam * (1.0 + cfg.alpha * un) ** (1.0 / (n - 1.0))
    beta_eps = (1.0 + cfg.alpha * un) / (1.0 + 2.0 * cfg.alpha * un)
    gamma_eps = cfg.alpha / (1.0 + 2.0 * cfg.alpha * un)
    a = np.abs(u.values) * u.mask
    lam_eps = float(
        np.sum(a ** (n / (n - 1.0)) * np.exp(np.minimum(alpha_eps * a ** (n / (n - 1.0)), EXP_CAP)))
    ) * u.cell_measure
    return alpha_eps, beta_eps, gamma_eps, lam_eps


def el_source(u, cfg, norm):
    """Right-hand side  beta/lambda_eps u^{1/(n-1)} exp(alpha_eps u^{n/(n-1)})  as a field."""
    n = u.dim
    alpha_eps, beta_eps, gamma_eps, lam_eps = el_parameters(u, cfg, norm)
    a = np.abs(u.values) * u.mask
    f = beta_eps / lam_eps * a ** (1.0 / (n - 1.0)) * np.exp(
        np.minimum(alpha_eps * a ** (n / (n - 1.0)), EXP_CAP)
    )
    return u.with_values(f), (alpha_eps, beta_eps, gamma_eps, lam_eps)


def el_verify(u, cfg, norm):
    """Stationarity report: parameters and the relative operator residual."""
    n = u.dim
    f, (alpha_eps, beta_eps, gamma_eps, lam_eps) = el_source(u, cfg, norm)
    res = qn_residual(u, f=f, alpha=gamma_eps, norm=norm)
    source_inf = max(
        float(np.max(np.abs(f.values))),
        gamma_eps * u.max_abs() ** (n - 1),
        1e-300,
    )
    rel = float(np.max(np.abs(res.values))) / source_inf
    J, saturated = evaluate_J_detailed(u, cfg, norm)
    M, x_eps, r_eps, coarse = concentration_scales(u, cfg, norm)
    return MTReport(
        J_value=J,
        constraint_residual=abs(grad_lp_norm(u, norm) - 1.0),
        alpha_eps=alpha_eps,
        beta_eps=beta_eps,
        gamma_eps=gamma_eps,
        lambda_eps=lam_eps,
        M_eps=M,
        x_eps=x_eps,
        r_eps=r_eps,
        el_residual_rel=rel,
        saturated_cells=saturated,
        mesh_too_coarse=coarse,
    )


def concentration_scales(u, cfg, norm):
    """(M_eps, x_eps, r_eps, mesh_too_coarse) from the blow-up radius formula."""
    n = u.dim
    alpha_eps, beta_eps, _, lam_eps = el_parameters(u, cfg, norm)
    M = u.max_abs()
    x_eps, _ = u.argmax_point()
    if M == 0.0:
        return 0.0, x_eps, math.inf, False
    expo = -alpha_eps * M ** (n / (n - 1.0))
    rn = lam_eps / beta_eps * M ** (-n / (n - 1.0)) * math.exp(max(expo, -EXP_CAP))
    r_eps = rn ** (1.0 / n)
    return M, x_eps, r_eps, bool(r_eps < 2.0 * u.h)


# -- maximization -------------------------------------------------------------------


def _start_profiles(domain, norm, eigenfunction=None, seed=0):
    """Wulff cone, eigenfunction, truncated-log profile (each on the mask)."""
    dist = ndimage.distance_transform_edt(domain.mask) * domain.h
    center = domain.origin + domain.h * np.asarray(
        np.unravel_index(int(np.argmax(dist)), domain.shape), dtype=float
    )
    R = float(dist.max())
    rho = norm.polar(domain.points() - center)
    rho_scale = R * norm.polar_norm().anisotropy_bounds[0]
    starts = []
    cone = np.maximum(0.0, 1.0 - rho / max(rho_scale, 4 * domain.h))
    starts.append(("wulff_cone", domain.with_values(cone)))
    if eigenfunction is not None:
        starts.append(("eigenfunction", domain.with_values(np.abs(eigenfunction.values))))
    r0 = 4.0 * domain.h
    logprof = np.clip(
        np.log(np.maximum(rho_scale, 2 * r0) / np.maximum(rho, r0))
        / math.log(max(rho_scale, 2 * r0) / r0),
        0.0, 1.0,
    )
    starts.append(("truncated_log", domain.with_values(logprof)))
    return starts


def maximize_subcritical(cfg, norm, domain, eigenfunction=None, seed=0,
                         max_ascent=400, max_polish=60, el_tol=1e-5,
                         ascent_tol=1e-12, raise_on_saturation=True):
    """Maximize J over the unit-energy constraint set (multi-start).

    Phase A: projected gradient ascent with backtracking (Armijo 1e-4, initial
    step 1).  Phase B: Euler-Lagrange fixed-point polish, accepted only while
    J does not decrease.  Returns (maximizer, MTReport) of the best start.
    """
    lam_crit = lambda_n(norm)
    if cfg.lam >= lam_crit and cfg.epsilon_sub <= 0:
        raise ValueError("subcritical maximization needs lam < lambda_n")
    best = None
    for label, raw in _start_profiles(domain, norm, eigenfunction, seed):
        u = project_constraint(raw, norm)
        u, n_asc = _ascent(u, cfg, norm, max_ascent, ascent_tol)
        u, n_pol = _el_polish(u, cfg, norm, domain, max_polish, el_tol)
        J, saturated = evaluate_J_detailed(u, cfg, norm)
        if saturated and raise_on_saturation:
            raise Saturation(
                f"{saturated} cells hit the exponent cap (epsilon_sub too small for h)"
            )
        if best is None or J > best[1]:
            best = (u, J, label, n_asc, n_pol)
    u, J, label, n_asc, n_pol = best
    report = el_verify(u, cfg, norm)
    report.start_label = label
    report.ascent_iterations = n_asc
    report.polish_iterations = n_pol
    return u, report


def _ascent(u, cfg, norm, max_iter, tol):
    J = evaluate_J(u, cfg, norm)
    step = 1.0
    it = 0
    while it < max_iter:
        g = _J_gradient(u, cfg, norm)
        # project out the constraint-normal component so the rescaling
        # projection does not cancel the Armijo gain
        w = qn_residual(u, norm=norm).values * u.cell_measure
        ww = float(np.sum(w * w))
        if ww > 0.0:
            g = g - (float(np.sum(g * w)) / ww) * w
        slope = float(np.sum(g * g))
        if slope == 0.0:
            break
        s = step
        accepted = False
        for _ in range(40):
            trial = u.with_values(np.maximum(u.values + s * g, 0.0))
            if trial.max_abs() == 0.0:
                s *= 0.5
                continue
            trial = project_constraint(trial, norm)
            J_trial = evaluate_J(trial, cfg, norm)
            if J_trial >= J + 1e-4 * s * slope:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        gain = J_trial - J
        u, J = trial, J_trial
        step = min(max(s * 2.0, 1e-6), 1e6)
        it += 1
        if gain <= tol * max(abs(J), 1.0):
            break
    return u, it


def _el_polish(u, cfg, norm, domain, max_iter, el_tol):
    """Fixed point u <- project(solve(-Q_n v = EL source)), monotone in J."""
    J = evaluate_J(u, cfg, norm)
    it = 0
    for it in range(1, max_iter + 1):
        f, params = el_source(u, cfg, norm)
        gamma_eps = params[2]
        if gamma_eps != 0.0:
            n = u.dim
            f = f.with_values(f.values + gamma_eps * np.abs(u.values) ** (n - 1))
        try:
            v, _ = dirichlet_solve(domain, f, norm, u0=u, tol=1e-10, max_iter=20_000)
        except NonConvergence:
            break
        v = project_constraint(v.with_values(np.abs(v.values)), norm)
        J_v = evaluate_J(v, cfg, norm)
        if J_v < J - 1e-12 * max(abs(J), 1.0):
            # overshoot: try a damped move before giving up
            damped = project_constraint(
                u.with_values(0.5 * (u.values + v.values)), norm
            )
            J_d = evaluate_J(damped, cfg, norm)
            if J_d < J - 1e-12 * max(abs(J), 1.0):
                break
            v, J_v = damped, J_d
        moved = float(np.max(np.abs(v.values - u.values)))
        u, J = v, J_v
        rep_rel = _quick_el_residual(u, cfg, norm)
        if rep_rel < el_tol or moved < 1e-14 * max(u.max_abs(), 1.0):
            break
    return u, it


def _quick_el_residual(u, cfg, norm):
    f, params = el_source(u, cfg, norm)
    res = qn_residual(u, f=f, alpha=params[2], norm=norm)
    scale = max(float(np.max(np.abs(f.values))), 1e-300)
    return float(np.max(np.abs(res.values))) / scale


# -- concentration diagnostics -------------------------------------------------------


@dataclass
class ConcentrationReport:
    M_eps: float
    x_eps: np.ndarray
    r_eps: float
    mesh_too_coarse: bool
    bubble_deviation: float = math.nan
    green_deviation: float = math.nan
    profile_radii: np.ndarray = field(default=None, repr=False)
    profile_values: np.ndarray = field(default=None, repr=False)
    bubble_values: np.ndarray = field(default=None, repr=False)


def concentration_diagnostics(u, cfg, norm, R=2.0, green=None, green_exclusion=0.2):
    """Rescaled-profile comparison against the limit bubble, and (optionally)
    the Green-function comparison away from the concentration point."""
    from .bubble import bubble

    n = u.dim
    M, x_eps, r_eps, coarse = concentration_scales(u, cfg, norm)
    rep = ConcentrationReport(M, x_eps, r_eps, coarse)
    if M == 0.0 or not np.isfinite(r_eps):
        return rep

    thetas = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    radii = np.linspace(0.0, R, 65)
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)
    wulff_dirs = dirs / norm.polar(dirs)[:, None]  # points with F° = 1
    pts = x_eps + r_eps * radii[:, None, None] * wulff_dirs[None, :, :]
    samples = u.sample(pts.reshape(-1, n)).reshape(len(radii), len(thetas))
    w_eps = M ** (1.0 / (n - 1.0)) * (samples - M)
    w_lim = bubble(norm, np.linspace(0.0, R, 4097))
    rep.profile_radii = radii
    rep.profile_values = w_eps.mean(axis=1)
    rep.bubble_values = w_lim(radii)
    rep.bubble_deviation = float(np.max(np.abs(w_eps - w_lim(radii)[:, None])))

    if green is not None:
        rho = norm.polar(u.points() - x_eps)
        away = u.mask & (rho >= green_exclusion)
        if away.any():
            scaled = M ** (1.0 / (n - 1.0)) * u.values
            rep.green_deviation = float(np.max(np.abs(scaled - green.G.values)[away]))
    return rep
