"""Decreasing rearrangement, convex symmetrization, and anisotropic perimeter.

The perimeter of a superlevel set {u > t} is extracted by marching squares on
the cell-center lattice with linear interpolation along edges; the gauge F is
applied to the unit Euclidean outward normal of each interface segment.  Sets
are therefore always described through a resolvable level-set field, never as
raw binary indicators.
"""

from dataclasses import dataclass

import numpy as np

from .grid import GridFunction, grid_over_box
from .norms import kappa_n


class StepFunction:
    """Right-continuous step function of the measure parameter t."""

    def __init__(self, sorted_desc, cell_measure):
        self.values = np.asarray(sorted_desc, dtype=float)
        self.cell_measure = float(cell_measure)
        self.total_measure = self.values.size * self.cell_measure

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.floor(t / self.cell_measure).astype(int)
        out = np.where(
            (idx >= 0) & (idx < self.values.size),
            self.values[np.clip(idx, 0, self.values.size - 1)],
            0.0,
        )
        return out if out.ndim else float(out)

    def integral(self):
        return float(self.values.sum()) * self.cell_measure


def decreasing_rearrangement(u):
    """u*(t) = sup{s >= 0 : |{|u| > s}| > t} as a StepFunction."""
    vals = np.sort(np.abs(u.values[u.mask]))[::-1]
    return StepFunction(vals, u.cell_measure)


def convex_symmetrize(u, norm, pad=2):
    """Wulff-radial rearrangement u*(kappa_n F°(x)^n) on a fresh origin-centered grid."""
    ustar = decreasing_rearrangement(u)
    n = u.dim
    kap = kappa_n(norm)
    measure = u.domain_measure()
    r_star = (measure / kap) ** (1.0 / n)
    a_pol = norm.polar_norm().anisotropy_bounds[0]
    ext = r_star / a_pol
    g = grid_over_box([-ext - pad * u.h] * n, [ext + pad * u.h] * n, u.h)
    rho = norm.polar(g.points())
    vals = ustar(kap * rho ** n)
    return GridFunction(vals, u.h, g.origin, rho <= r_star)


# -- marching squares -----------------------------------------------------------

# per-case interface edges: 0 bottom, 1 right, 2 top, 3 left (edge of the dual
# cell whose corners are cell centers v00 v10 v11 v01)
_CASE_EDGES = {
    1: [(0, 3)], 2: [(0, 1)], 4: [(1, 2)], 8: [(2, 3)],
    3: [(3, 1)], 6: [(0, 2)], 12: [(1, 3)], 9: [(0, 2)],
    7: [(2, 3)], 11: [(1, 2)], 13: [(0, 1)], 14: [(0, 3)],
}
_SADDLE = {5: ((0, 1), (2, 3)), 10: ((0, 3), (1, 2))}
_SADDLE_FLIP = {5: ((0, 3), (1, 2)), 10: ((0, 1), (2, 3))}


def marching_squares(u, level):
    """Interface segments of {u > level}: (segments, lengths, outward unit normals).

    segments has shape (S, 2, 2) in physical coordinates.  Normals point from
    {u > level} toward {u <= level}.
    """
    v = u.values
    v00 = v[:-1, :-1]
    v10 = v[1:, :-1]
    v11 = v[1:, 1:]
    v01 = v[:-1, 1:]
    code = (
        (v00 > level).astype(np.int8)
        + 2 * (v10 > level).astype(np.int8)
        + 4 * (v11 > level).astype(np.int8)
        + 8 * (v01 > level).astype(np.int8)
    )

    def crossing(a, b, axis):
        # point on the edge a->b where the bilinear hits `level`; local coords
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (level - a) / (b - a)
        return np.clip(np.nan_to_num(s, nan=0.5), 0.0, 1.0)

    sb = crossing(v00, v10, 0)
    sr = crossing(v10, v11, 1)
    st = crossing(v01, v11, 0)
    sl = crossing(v00, v01, 1)

    ii, jj = np.meshgrid(
        np.arange(v.shape[0] - 1), np.arange(v.shape[1] - 1), indexing="ij"
    )
    # physical coordinates of the 4 edge crossings per dual cell
    x0, y0 = u.origin[0] + u.h * ii, u.origin[1] + u.h * jj
    pts = np.stack(
        [
            np.stack([x0 + u.h * sb, y0], axis=-1),            # bottom
            np.stack([x0 + u.h, y0 + u.h * sr], axis=-1),      # right
            np.stack([x0 + u.h * st, y0 + u.h], axis=-1),      # top
            np.stack([x0, y0 + u.h * sl], axis=-1),            # left
        ],
        axis=0,
    )

    seg_a, seg_b = [], []
    for c, pairs in _CASE_EDGES.items():
        hit = code == c
        if not hit.any():
            continue
        for (ea, eb) in pairs:
            seg_a.append(pts[ea][hit])
            seg_b.append(pts[eb][hit])
    for c in (5, 10):
        hit = code == c
        if not hit.any():
            continue
        center_in = 0.25 * (v00 + v10 + v11 + v01) > level
        for flip in (False, True):
            sel = hit & (center_in if not flip else ~center_in)
            if not sel.any():
                continue
            table = _SADDLE[c] if not flip else _SADDLE_FLIP[c]
            for (ea, eb) in table:
                seg_a.append(pts[ea][sel])
                seg_b.append(pts[eb][sel])

    if not seg_a:
        return (np.zeros((0, 2, 2)), np.zeros(0), np.zeros((0, 2)))
    A = np.concatenate(seg_a)
    B = np.concatenate(seg_b)
    segs = np.stack([A, B], axis=1)
    d = B - A
    lengths = np.linalg.norm(d, axis=-1)

    # normal = rotated tangent, oriented down the bilinear gradient at midpoints
    mids = 0.5 * (A + B)
    grad = _sample_gradient(u, mids)
    nrm = np.stack([d[:, 1], -d[:, 0]], axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        nrm = nrm / np.linalg.norm(nrm, axis=-1, keepdims=True)
    flip = np.sum(nrm * grad, axis=-1) > 0.0
    nrm[flip] *= -1.0
    keep = lengths > 1e-14 * u.h
    return segs[keep], lengths[keep], np.nan_to_num(nrm[keep])


def _sample_gradient(u, pts):
    eps = 0.5 * u.h
    gx = (u.sample(pts + [eps, 0.0]) - u.sample(pts - [eps, 0.0])) / (2 * eps)
    gy = (u.sample(pts + [0.0, eps]) - u.sample(pts - [0.0, eps])) / (2 * eps)
    return np.stack([gx, gy], axis=-1)


@dataclass
class PerimeterResult:
    value: float
    empty: bool

    def __float__(self):
        return self.value


@dataclass
class LevelSetStats:
    """Threshold, superlevel measure, and anisotropic perimeter of {u > t}."""

    threshold: float
    measure: float
    perimeter: float
    empty: bool = False


def level_set_stats(u, thresholds, norm):
    """LevelSetStats per threshold; the measure is nonincreasing in t."""
    out = []
    for t in np.atleast_1d(np.asarray(thresholds, dtype=float)):
        per = anisotropic_perimeter(u, float(t), norm)
        out.append(LevelSetStats(float(t), superlevel_measure(u, float(t)),
                                 per.value, per.empty))
    return out


def anisotropic_perimeter(u, level, norm):
    """P_F({u > level}) = sum of F(nu) * segment length over the interface."""
    if u.dim != 2:
        raise NotImplementedError("perimeter extraction is 2D only")
    if not np.any(u.values[u.mask] > level):
        return PerimeterResult(0.0, True)
    _, lengths, normals = marching_squares(u, level)
    if lengths.size == 0:
        return PerimeterResult(0.0, True)
    return PerimeterResult(float(np.sum(norm(normals) * lengths)), False)


def superlevel_measure(u, level):
    return float(np.sum(u.values[u.mask] > level)) * u.cell_measure


def isoperimetric_ratio(u, level, norm):
    """P_F(E) / (n kappa_n^{1/n} |E|^{1-1/n}); equals 1 exactly on Wulff balls."""
    n = u.dim
    mu = superlevel_measure(u, level)
    if mu <= 0 or mu >= u.domain_measure() + u.cell_measure:
        raise ValueError("level set must be a proper nonempty subset")
    per = anisotropic_perimeter(u, level, norm)
    kap = kappa_n(norm)
    return per.value / (n * kap ** (1.0 / n) * mu ** (1.0 - 1.0 / n))


# -- co-area --------------------------------------------------------------------


def gradient_centered(u):
    """Centered-difference gradient of the zero-extended field, shape (*shape, dim)."""
    v = np.where(u.mask, u.values, 0.0)
    padded = np.pad(v, 1, mode="constant")
    comps = []
    for k in range(u.dim):
        up = np.roll(padded, -1, axis=k)
        dn = np.roll(padded, 1, axis=k)
        core = tuple(slice(1, -1) for _ in range(u.dim))
        comps.append(((up - dn) / (2.0 * u.h))[core])
    return np.stack(comps, axis=-1)


@dataclass
class CoareaReport:
    gradient_integral: float
    perimeter_integral: float

    @property
    def rel_discrepancy(self):
        scale = max(abs(self.gradient_integral), abs(self.perimeter_integral), 1e-300)
        return abs(self.gradient_integral - self.perimeter_integral) / scale


def coarea_check(u, norm, levels=128):
    """Compare the total anisotropic variation with the layer-cake of perimeters."""
    if np.any(u.values[u.mask] < 0):
        raise ValueError("coarea_check expects u >= 0")
    g = gradient_centered(u)
    lhs = float(np.sum(norm(g.reshape(-1, u.dim)).reshape(u.shape)[u.mask])) * u.cell_measure
    umax = u.max_abs()
    if umax == 0.0:
        return CoareaReport(lhs, 0.0)
    ts = np.linspace(0.0, umax, levels)
    per = np.array([anisotropic_perimeter(u, t, norm).value for t in ts])
    rhs = float(np.trapezoid(per, ts))
    return CoareaReport(lhs, rhs)
