"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with  pytest -s tests/test_acceptance.py  to see the lines as they pass.
Criterion 10 asserts the divergence ratio threshold as stated; the growth of
the log-core family over eps in [1e-2, 1e-4] is structurally capped well
below that threshold (see the repository notes), so that single clause is
expected to fail while its companion clauses hold.
"""

import math
import time

import numpy as np
import pytest

from finslermt import (
    duality_check,
    euclidean,
    kappa_n,
    lambda_n,
    quadratic_form,
    weighted_p_norm,
)
from finslermt.bubble import bubble, bubble_mass, bubble_residual, bubble_rhs
from finslermt.families import (
    MoserSchedule,
    RadialGluedFamily,
    RadialMoserFamily,
    divergence_demo,
    harmonic_identities,
    harmonic_number,
)
from finslermt.functional import MTConfig, maximize_subcritical
from finslermt.grid import GridFunction, disk_domain, square_domain
from finslermt.pde import first_eigenpair, green_function, qn_residual
from finslermt.symmetrize import coarea_check, isoperimetric_ratio

J01_SQ = 2.404825557695773 ** 2


class Budget:
    def __init__(self, seconds, label):
        self.seconds = seconds
        self.label = label

    def __enter__(self):
        self.t0 = time.time()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.time() - self.t0
        status = "FAIL" if exc_type else "PASS"
        print(f"CRITERION {self.label}: {status} ({self.elapsed:.1f}s / budget {self.seconds}s)")
        if exc_type is None:
            assert self.elapsed < self.seconds, (
                f"criterion {self.label} exceeded its {self.seconds}s budget"
            )
        return False


def cone_field(norm, radius, h, box, clamp=False):
    dom = square_domain(2 * box, h)
    rho = norm.polar(dom.points())
    vals = 1.0 - rho / radius
    if clamp:
        vals = np.maximum(0.0, vals)
    return GridFunction(vals, dom.h, dom.origin, dom.mask)


def test_criterion_1_sharp_constant():
    with Budget(1, "1 sharp constant"):
        assert abs(lambda_n(euclidean(2)) - 4 * math.pi) < 1e-10


def test_criterion_2_duality_suite():
    with Budget(10, "2 duality suite"):
        analytic = [
            euclidean(2),
            weighted_p_norm(1.5, [1.0, 1.0]),
            weighted_p_norm(2, [1.0, 1.0]),
            weighted_p_norm(3, [1.0, 1.0]),
            quadratic_form(np.diag([4.0, 1.0])),
        ]
        for norm in analytic:
            rep = duality_check(norm, 1000, seed=0)
            assert rep.max_violation < 1e-6, f"{norm}: {rep}"
        # finite-difference path on the C^2 families; p = 1.5 has a
        # Hoelder-1/2 gradient across the axes, where central differences at
        # the standard step carry ~1e-3 error by construction (degraded
        # tolerance, not failure)
        for norm in analytic:
            rep_fd = duality_check(norm, 1000, seed=0, force_fd=True)
            tol = 1e-2 if norm.family == "p_norm" and norm.p == 1.5 else 1e-4
            assert rep_fd.max_violation < tol, f"{norm} fd: {rep_fd}"


def test_criterion_3_isoperimetric():
    with Budget(30, "3 isoperimetric"):
        h = 1 / 256
        for norm, radius in (
            (euclidean(2), 0.7),
            (weighted_p_norm(1.5, [1.0, 2.0]), 0.7),
            (quadratic_form([[4.0, 1.0], [1.0, 2.0]]), 0.4),
        ):
            u = cone_field(norm, radius, h, box=1.0)
            ratio = isoperimetric_ratio(u, 0.0, norm)
            assert abs(ratio - 1.0) <= 0.02, f"{norm}: ratio {ratio}"
        # 20-shape corpus under the Euclidean gauge
        rng = np.random.default_rng(42)
        norm = euclidean(2)
        dom = square_domain(2.0, h)
        pts = dom.points()
        for k in range(20):
            field = np.zeros(dom.shape)
            for _ in range(int(rng.integers(1, 4))):
                c = rng.uniform(-0.35, 0.35, 2)
                w = rng.uniform(0.01, 0.06)
                field += np.exp(-np.sum((pts - c) ** 2, -1) / w)
            blob = dom.with_values(field)
            ratio = isoperimetric_ratio(blob, 0.5, norm)
            assert ratio >= 0.98, f"shape {k}: ratio {ratio}"


def test_criterion_4_coarea():
    with Budget(30, "4 co-area"):
        norm = euclidean(2)
        discrepancies = []
        for h in (1 / 128, 1 / 256):
            u = cone_field(norm, 1.0, h, box=1.2, clamp=True)
            rep = coarea_check(u, norm, levels=round(1 / (2 * h)))
            discrepancies.append(rep.rel_discrepancy)
        assert discrepancies[1] < 0.03
        assert discrepancies[1] < 0.65 * discrepancies[0], (
            f"no halving: {discrepancies}"
        )


def test_criterion_5_eigenvalues():
    with Budget(300, "5 eigenvalues"):
        norm = euclidean(2)
        disk = disk_domain(1.0, 1 / 128)
        lam_disk = first_eigenpair(disk, norm).lambda1
        assert abs(lam_disk - J01_SQ) / J01_SQ < 0.01, lam_disk
        sq1 = square_domain(1.0, 1 / 128, center=(0.5, 0.5))
        lam_sq = first_eigenpair(sq1, norm).lambda1
        assert abs(lam_sq - 2 * math.pi ** 2) / (2 * math.pi ** 2) < 0.01, lam_sq
        sq2 = square_domain(2.0, 1 / 128, center=(1.0, 1.0))
        lam_sq2 = first_eigenpair(sq2, norm).lambda1
        assert abs(lam_sq2 - lam_sq / 4.0) / (lam_sq / 4.0) < 0.01, (lam_sq, lam_sq2)


def test_criterion_6_bubble():
    with Budget(60, "6 bubble"):
        for norm, tol in (
            (euclidean(2), 1e-3),
            (euclidean(3), 1e-3),
            (weighted_p_norm(3, [1.0, 2.0]), 1e-3),
        ):
            w = bubble(norm)
            assert abs(bubble_mass(w, r_max=1e4) - 1.0) < tol, norm
        r1 = np.linspace(0.1, 10.0, 10_000)
        r2 = np.linspace(0.1, 10.0, 20_000)
        m1, _, _ = bubble_residual(bubble(euclidean(2), r1))
        m2, _, _ = bubble_residual(bubble(euclidean(2), r2))
        assert m1 < 1e-3
        assert m2 <= m1 / 3.0
        # radial reduction vs the 2D grid operator inside the Wulff ball of radius 2
        norm = quadratic_form(np.diag([4.0, 1.0]))
        w = bubble(norm, np.linspace(0.0, 27.0, 48_001))
        dom = square_domain(9.0, 1 / 64)
        u = w.to_grid(dom)
        res = qn_residual(u, norm=norm)
        rho = norm.polar(dom.points())
        rhs = bubble_rhs(w(rho), norm)
        band = dom.mask & (rho <= 2.0)
        rel = np.abs(res.values - rhs)[band] / rhs[band]
        assert np.max(rel) < 0.05, np.max(rel)


def test_criterion_7_green_constant():
    with Budget(120, "7 Green constant"):
        dom = disk_domain(1.0, 1 / 256)
        res = green_function(dom, euclidean(2), alpha=0.0)
        assert abs(res.C_G) < 0.02, res.C_G
        assert abs(res.gamma - 1.0) < 0.05, res.gamma


def test_criterion_8_identities():
    with Budget(1, "8 identities"):
        rep = harmonic_identities(12)
        assert rep.all_exact


def test_criterion_9_subcritical_maximization():
    with Budget(600, "9 subcritical maximization"):
        norm = euclidean(2)
        lam_n = lambda_n(norm)
        dom = disk_domain(1.0, 1 / 64)
        eigen = first_eigenpair(dom, norm, tol=1e-7)
        Js = []
        for frac in (0.5, 0.2, 0.1):
            cfg = MTConfig(lam=lam_n - frac * lam_n, alpha=0.0, epsilon_sub=frac * lam_n)
            u, rep = maximize_subcritical(cfg, norm, dom,
                                          eigenfunction=eigen.eigenfunction)
            Js.append(rep.J_value)
            if frac == 0.2:
                assert rep.constraint_residual < 1e-8, rep.constraint_residual
                assert rep.el_residual_rel < 1e-4, rep.el_residual_rel
                assert rep.J_value > dom.domain_measure()
        assert Js[0] <= Js[1] <= Js[2], Js


def test_criterion_10_divergence_dichotomy():
    with Budget(300, "10 divergence dichotomy"):
        norm = euclidean(2)
        fam = RadialMoserFamily(norm, 1.0,
                                schedule=MoserSchedule(coeff=2.4, exponent=0.49))
        ladder = [1e-2, 1e-3, 1e-4]
        tab1 = divergence_demo(fam.lambda1, ladder, fam)
        tab0 = divergence_demo(0.0, ladder, fam)
        Js = [r.J for r in tab1.rows]
        assert Js[0] < Js[1] < Js[2], "J not strictly increasing at alpha = lambda1"
        J0 = [r.J for r in tab0.rows]
        assert max(J0) / min(J0) < 2.0, f"alpha=0 variation {max(J0)/min(J0)}"
        assert tab1.ratio > 10.0, (
            f"growth ratio {tab1.ratio:.2f} <= 10: the in-window schedule cap is ~3.8 "
            "(see notes); monotone growth and the alpha = 0 bound hold"
        )


def test_criterion_11_glued_bubble():
    with Budget(300, "11 glued bubble"):
        norm = euclidean(2)
        n = norm.dim
        fam = RadialGluedFamily(norm, R_dom=1.0, C_G=0.0)
        cst = fam.constants(1e-3)
        b_lim = (n - 1) / lambda_n(norm) * harmonic_number(n - 1)
        assert abs(cst.b_exact - b_lim) / b_lim < 0.10, cst.b_exact
        e_pre, _, _ = fam.energy(cst)
        assert 0.95 <= e_pre <= 1.05, e_pre
        assert cst.jump < 0.02, cst.jump


def test_criterion_12_determinism(tmp_path):
    with Budget(60, "12 determinism"):
        from finslermt.cli import main

        cfg = tmp_path / "cfg.toml"
        cfg.write_text(
            """
seed = 11

[norm]
family = "euclidean"
dim = 2

[domain]
kind = "disk"
scale = 1.0

[mesh]
h = 0.0625

[moser]
epsilons = [1e-2, 1e-3]
t_coeff = 2.4
t_exponent = 0.49
"""
        )
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert main(["moser", "--config", str(cfg), "--out", str(out)]) == 0
            outs.append((out / "moser_ladder.csv").read_bytes())
        assert outs[0] == outs[1]
        for tag in ("c", "d"):
            out = tmp_path / tag
            assert main(["isoperimetric", "--config", str(cfg), "--out", str(out)]) == 0
        assert (tmp_path / "c" / "isoperimetric.csv").read_bytes() == (
            tmp_path / "d" / "isoperimetric.csv"
        ).read_bytes()
