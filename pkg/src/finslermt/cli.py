"""Experiment driver: config-file subcommands with reproducible artifacts.

Usage:  finslermt <subcommand> --config cfg.toml [--out DIR] [--seed N]

Each run writes its artifacts (CSV/JSON/GFN) plus a manifest with a checksum
per file.  All randomness flows from the single seed; identical seeds give
byte-identical CSV output.  Exit codes: 0 success, 1 config error,
2 numerical failure (diagnostics in failure.json).
"""

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import FinslermtError
from .grid import disk_domain, polygon_domain, save_csv, save_gfn, square_domain, wulff_domain
from .norms import duality_check, euclidean, kappa_n, lambda_n, quadratic_form, sampled_support, weighted_p_norm
from .functional import MTConfig, maximize_subcritical
from .families import (
    MoserSchedule,
    RadialGluedFamily,
    RadialMoserFamily,
    bound_sandwich,
    divergence_demo,
    harmonic_identities,
)
from .bubble import bubble, bubble_mass, bubble_residual
from .pde import dirichlet_solve, first_eigenpair, green_function
from .symmetrize import convex_symmetrize, coarea_check, isoperimetric_ratio


class ConfigError(Exception):
    pass


def fmt(x):
    return f"{float(x):.17g}"


def build_norm(cfg):
    spec = cfg.get("norm", {"family": "euclidean", "dim": 2})
    family = spec.get("family", "euclidean")
    if family == "euclidean":
        return euclidean(int(spec.get("dim", 2)))
    if family == "p_norm":
        p = spec.get("p")
        if p is None:
            raise ConfigError("p_norm requires 'p'")
        p = math.inf if p == "inf" else float(p)
        return weighted_p_norm(p, spec.get("weights", [1.0] * int(spec.get("dim", 2))))
    if family == "quadratic_form":
        return quadratic_form(np.asarray(spec["matrix"], dtype=float))
    if family == "sampled":
        return sampled_support(np.asarray(spec["support_values"], dtype=float))
    raise ConfigError(f"unknown norm family {family!r}")


def build_domain(cfg, norm):
    spec = cfg.get("domain", {"kind": "disk", "scale": 1.0})
    h = float(cfg.get("mesh", {}).get("h", 1 / 64))
    if h <= 0:
        raise ConfigError("mesh.h must be positive")
    kind = spec.get("kind", "disk")
    scale = float(spec.get("scale", 1.0))
    center = spec.get("center", [0.0, 0.0])
    if kind == "disk":
        return disk_domain(scale, h, center=center)
    if kind == "square":
        return square_domain(scale, h, center=center)
    if kind == "wulff":
        return wulff_domain(norm, scale, h)
    if kind == "polygon":
        return polygon_domain(np.asarray(spec["vertices"], dtype=float) * scale, h)
    raise ConfigError(f"unknown domain kind {kind!r}")


class Run:
    """Output directory, manifest bookkeeping, deterministic sinks."""

    def __init__(self, outdir, config, seed):
        self.dir = Path(outdir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.seed = seed
        self.artifacts = {}
        self.t0 = time.time()

    def path(self, name):
        return self.dir / name

    def write_text(self, name, text):
        p = self.path(name)
        p.write_text(text)
        self.artifacts[name] = hashlib.sha256(p.read_bytes()).hexdigest()

    def write_json(self, name, obj):
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def write_csv(self, name, header, rows):
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(fmt(x) if isinstance(x, (int, float, np.floating)) else str(x)
                                  for x in row))
        self.write_text(name, "\n".join(lines) + "\n")

    def write_grid(self, name, u):
        save_gfn(u, self.path(name))
        self.artifacts[name] = hashlib.sha256(self.path(name).read_bytes()).hexdigest()

    def finish(self, subcommand):
        manifest = {
            "subcommand": subcommand,
            "version": __version__,
            "seed": self.seed,
            "wall_time_s": time.time() - self.t0,
            "config": self.config,
            "artifacts": self.artifacts,
        }
        p = self.path("manifest.json")
        p.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


# -- subcommands -----------------------------------------------------------------------


def cmd_identities(cfg, run, norm):
    n_max = int(cfg.get("identities", {}).get("n_max", 12))
    rep = harmonic_identities(n_max)
    run.write_text("identities.txt", str(rep) + "\n")
    run.write_json("identities.json", {"n_max": n_max, "all_exact": rep.all_exact})
    return 0 if rep.all_exact else 2


def cmd_kappa(cfg, run, norm):
    run.write_json("kappa.json", {
        "kappa": kappa_n(norm),
        "lambda_n": lambda_n(norm),
        "dim": norm.dim,
        "anisotropy_bounds": list(norm.anisotropy_bounds),
    })
    return 0


def cmd_norm_check(cfg, run, norm):
    samples = int(cfg.get("norm_check", {}).get("samples", 1000))
    rep = duality_check(norm, samples, seed=run.seed)
    run.write_json("duality.json", {"samples": samples, "violations": rep.violations,
                                    "max_violation": rep.max_violation})
    return 0


def _test_field(domain, rng):
    pts = domain.points()
    c = rng.uniform(-0.2, 0.2, domain.dim)
    width = rng.uniform(0.05, 0.15)
    vals = np.exp(-np.sum((pts - c) ** 2, axis=-1) / width)
    return domain.with_values(vals)


def cmd_symmetrize(cfg, run, norm):
    rng = np.random.default_rng(run.seed)
    domain = build_domain(cfg, norm)
    u = _test_field(domain, rng)
    star = convex_symmetrize(u, norm)
    run.write_grid("input.gfn", u)
    run.write_grid("symmetrized.gfn", star)
    save_csv(star, run.path("symmetrized.csv"))
    run.artifacts["symmetrized.csv"] = hashlib.sha256(
        run.path("symmetrized.csv").read_bytes()).hexdigest()
    rep = coarea_check(u, norm, levels=int(cfg.get("symmetrize", {}).get("levels", 128)))
    run.write_json("symmetrize.json", {
        "l1_before": u.lp_norm(1), "l1_after": star.lp_norm(1),
        "ln_before": u.lp_norm(u.dim), "ln_after": star.lp_norm(u.dim),
        "coarea_lhs": rep.gradient_integral, "coarea_rhs": rep.perimeter_integral,
        "coarea_rel_discrepancy": rep.rel_discrepancy,
    })
    return 0


def cmd_isoperimetric(cfg, run, norm):
    rng = np.random.default_rng(run.seed)
    domain = build_domain(cfg, norm)
    rows = []
    rho = norm.polar(domain.points())
    radius = 0.45 * float(np.max(rho[domain.mask]))
    cone = domain.with_values(1.0 - rho / radius)
    rows.append(("wulff_ball", isoperimetric_ratio(cone, 0.0, norm)))
    shapes = int(cfg.get("isoperimetric", {}).get("shapes", 8))
    pts = domain.points()
    for k in range(shapes):
        field = np.zeros(domain.shape)
        for _ in range(rng.integers(1, 4)):
            c = rng.uniform(-0.3, 0.3, 2)
            w = rng.uniform(0.01, 0.06)
            field += np.exp(-np.sum((pts - c) ** 2, -1) / w)
        blob = domain.with_values(field)
        rows.append((f"blob_{k}", isoperimetric_ratio(blob, 0.5, norm)))
    run.write_csv("isoperimetric.csv", ["shape", "ratio"], rows)
    return 0


def cmd_eigen(cfg, run, norm):
    domain = build_domain(cfg, norm)
    tol = float(cfg.get("eigen", {}).get("tol", 1e-8))
    pair = first_eigenpair(domain, norm, tol=tol)
    run.write_grid("eigenfunction.gfn", pair.eigenfunction)
    run.write_json("eigen.json", {"lambda1": pair.lambda1, "iterations": pair.iterations,
                                  "history": pair.history})
    return 0


def cmd_solve(cfg, run, norm):
    domain = build_domain(cfg, norm)
    f_const = float(cfg.get("solve", {}).get("f", 1.0))
    f = domain.with_values(np.full(domain.shape, f_const))
    with open(run.path("telemetry.csv"), "w") as sink:
        u, info = dirichlet_solve(domain, f, norm, sink=sink)
    run.artifacts["telemetry.csv"] = hashlib.sha256(
        run.path("telemetry.csv").read_bytes()).hexdigest()
    run.write_grid("solution.gfn", u)
    run.write_json("solve.json", {"iterations": info.iterations, "residual": info.residual,
                                  "energy": info.energy, "max": u.max_abs()})
    return 0


def cmd_bubble(cfg, run, norm):
    spec = cfg.get("bubble", {})
    r_max = float(spec.get("r_max", 1e4))
    w = bubble(norm)
    mass = bubble_mass(w, r_max=r_max)
    grid = np.linspace(0.1, 10.0, int(spec.get("points", 10_000)))
    res, _, _ = bubble_residual(bubble(norm, grid))
    run.write_json("bubble.json", {"mass": mass, "max_residual": res, "r_max": r_max})
    run.write_csv("bubble_profile.csv", ["r", "w"],
                  list(zip(np.linspace(0, 10, 401), bubble(norm, np.linspace(0, 10, 401)).values)))
    return 0


def cmd_green(cfg, run, norm):
    domain = build_domain(cfg, norm)
    alpha = float(cfg.get("green", {}).get("alpha", 0.0))
    res = green_function(domain, norm, alpha=alpha)
    run.write_grid("green.gfn", res.G)
    run.write_json("green.json", {
        "C_G": res.C_G, "gamma": res.gamma, "fit_rms": res.fit_rms,
        "log_coeff": res.log_coeff, "alpha": alpha,
        "upper_bound": res.upper_bound_constant(norm, domain.domain_measure()),
    })
    return 0


def cmd_maximize(cfg, run, norm):
    spec = cfg.get("maximize", {})
    domain = build_domain(cfg, norm)
    alpha = float(spec.get("alpha", 0.0))
    lam_crit = lambda_n(norm)
    fractions = spec.get("epsilon_sub_fractions", [0.5, 0.2, 0.1])
    eigen = first_eigenpair(domain, norm, tol=1e-7)
    rows = []
    for k, frac in enumerate(fractions):
        eps_sub = float(frac) * lam_crit
        mt = MTConfig(lam=lam_crit - eps_sub, alpha=alpha, epsilon_sub=eps_sub)
        u, rep = maximize_subcritical(mt, norm, domain,
                                      eigenfunction=eigen.eigenfunction, seed=run.seed)
        rows.append((eps_sub, rep.J_value, rep.M_eps, rep.r_eps, rep.el_residual_rel))
        run.write_json(f"report_{k}.json", {
            "epsilon_sub": eps_sub, "lam": mt.lam, "alpha": alpha,
            "J": rep.J_value, "constraint_residual": rep.constraint_residual,
            "alpha_eps": rep.alpha_eps, "beta_eps": rep.beta_eps,
            "gamma_eps": rep.gamma_eps, "lambda_eps": rep.lambda_eps,
            "M_eps": rep.M_eps, "x_eps": list(map(float, rep.x_eps)),
            "r_eps": rep.r_eps, "el_residual_rel": rep.el_residual_rel,
            "mesh_too_coarse": rep.mesh_too_coarse, "start": rep.start_label,
        })
    run.write_csv("ladder.csv", ["epsilon_sub", "J", "M_eps", "r_eps", "el_residual"], rows)
    return 0


def cmd_moser(cfg, run, norm):
    spec = cfg.get("moser", {})
    scale = float(cfg.get("domain", {}).get("scale", 1.0))
    schedule = MoserSchedule(coeff=float(spec.get("t_coeff", 1.0)),
                             exponent=spec.get("t_exponent"))
    fam = RadialMoserFamily(norm, scale, schedule=schedule)
    alpha = spec.get("alpha", "lambda1")
    alpha = fam.lambda1 if alpha == "lambda1" else float(alpha)
    epsilons = [float(e) for e in spec.get("epsilons", [1e-2, 1e-3, 1e-4])]
    tab = divergence_demo(alpha, epsilons, fam)
    tab0 = divergence_demo(0.0, epsilons, fam)
    rows = [
        (r.epsilon, r.t_eps, r.delta, r.J, r0.J,
         fam.member(r.epsilon).core_value / r.energy ** (1.0 / norm.dim),
         int(r.saturated), r.energy, r.un_norm)
        for r, r0 in zip(tab.rows, tab0.rows)
    ]
    run.write_csv("moser_ladder.csv",
                  ["epsilon", "t_eps", "delta", "J_alpha", "J_alpha0", "M",
                   "saturated", "energy", "ln_norm_pow"], rows)
    run.write_json("moser.json", {
        "alpha": alpha, "lambda1": fam.lambda1,
        "ratio": tab.ratio, "growth_slope": tab.growth_slope,
        "growth_correlation": tab.growth_correlation,
        "ratio_alpha0": tab0.ratio,
    })
    return 0


def cmd_glued(cfg, run, norm):
    spec = cfg.get("glued", {})
    scale = float(cfg.get("domain", {}).get("scale", 1.0))
    c_g = spec.get("c_g", 0.0)
    if c_g == "fit":
        domain = build_domain(cfg, norm)
        c_g = green_function(domain, norm).C_G
    fam = RadialGluedFamily(norm, R_dom=scale, C_G=float(c_g))
    epsilons = [float(e) for e in spec.get("epsilons", [1e-2, 1e-3, 1e-4])]
    rep = bound_sandwich(norm, fam, epsilons, alpha=float(spec.get("alpha", 0.0)))
    rows = []
    for eps in epsilons:
        cst = fam.constants(eps)
        e_pre, _, _ = fam.energy(cst)
        J = dict(rep.rows)[eps]
        rows.append((eps, J, cst.C, cst.b_exact, cst.jump, e_pre))
    run.write_csv("glued_ladder.csv",
                  ["epsilon", "J", "C", "b_exact", "interface_jump", "pre_energy"], rows)
    run.write_json("glued.json", {
        "upper_bound": rep.upper_bound, "C_G": float(c_g),
        "max_J": rep.max_J, "exceeds": rep.exceeds,
    })
    return 0


COMMANDS = {
    "identities": cmd_identities,
    "kappa": cmd_kappa,
    "norm-check": cmd_norm_check,
    "symmetrize": cmd_symmetrize,
    "isoperimetric": cmd_isoperimetric,
    "eigen": cmd_eigen,
    "solve": cmd_solve,
    "bubble": cmd_bubble,
    "green": cmd_green,
    "maximize": cmd_maximize,
    "moser": cmd_moser,
    "glued": cmd_glued,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="finslermt", description=__doc__)
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        with open(args.config, "rb") as fh:
            cfg = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    outdir = args.out or cfg.get("out", "runs/" + args.subcommand)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    run = Run(outdir, cfg, seed)
    try:
        norm = build_norm(cfg)
        code = COMMANDS[args.subcommand](cfg, run, norm)
    except (ConfigError, KeyError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FinslermtError as exc:
        run.write_json("failure.json", {"error": type(exc).__name__, "message": str(exc)})
        run.finish(args.subcommand)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    run.finish(args.subcommand)
    return code


if __name__ == "__main__":
    sys.exit(main())
