"""Uniform Cartesian grid fields with a Dirichlet mask, domain builders, and IO.

Cell i (multi-index) has its center at origin + i*h.  Grids are always built
so that the lattice contains the coordinate origin exactly; for polygonal
domains this puts the Dirichlet wall on lattice points, which keeps the
boundary error of the zero-extension at O(h^2) instead of O(h).
"""

import io
import struct

import numpy as np
from scipy import ndimage

GFN_MAGIC = b"GFN1"


class GridFunction:
    """Real field on a uniform grid, zero outside the domain mask."""

    def __init__(self, values, h, origin, mask):
        values = np.asarray(values, dtype=float)
        mask = np.asarray(mask, dtype=bool)
        if values.shape != mask.shape:
            raise ValueError("values and mask shapes differ")
        self.values = np.where(mask, values, 0.0)
        self.h = float(h)
        self.origin = np.asarray(origin, dtype=float)
        self.mask = mask

    @property
    def dim(self):
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    def axes(self):
        return [self.origin[k] + self.h * np.arange(s) for k, s in enumerate(self.shape)]

    def points(self):
        """Cell-center coordinates, shape (*shape, dim)."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(grids, axis=-1)

    @property
    def cell_measure(self):
        return self.h ** self.dim

    def domain_measure(self):
        return float(self.mask.sum()) * self.cell_measure

    def integral(self):
        return float(self.values[self.mask].sum()) * self.cell_measure

    def lp_norm(self, p):
        return float(np.sum(np.abs(self.values[self.mask]) ** p) * self.cell_measure) ** (1.0 / p)

    def max_abs(self):
        v = self.values[self.mask]
        return float(np.max(np.abs(v))) if v.size else 0.0

    def with_values(self, values):
        return GridFunction(values, self.h, self.origin, self.mask)

    def zeros_like(self):
        return GridFunction(np.zeros(self.shape), self.h, self.origin, self.mask)

    def sample(self, pts):
        """Multilinear interpolation of the zero-extended field at pts (..., dim)."""
        pts = np.asarray(pts, dtype=float)
        idx = (pts - self.origin) / self.h
        coords = [idx[..., k].ravel() for k in range(self.dim)]
        out = ndimage.map_coordinates(self.values, coords, order=1, mode="constant", cval=0.0)
        return out.reshape(pts.shape[:-1])

    def argmax_point(self):
        flat = np.where(self.mask, self.values, -np.inf)
        ij = np.unravel_index(int(np.argmax(flat)), self.shape)
        return self.origin + self.h * np.asarray(ij, dtype=float), ij


def _lattice_axis(lo, hi, h):
    """Lattice multiples of h covering [lo, hi] inclusive (0 is on the lattice)."""
    i0 = int(np.floor(lo / h + 1e-12))
    i1 = int(np.ceil(hi / h - 1e-12))
    return i0, i1


def grid_over_box(lo, hi, h):
    """Empty-masked GridFunction whose lattice covers the box [lo, hi]^dim."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    starts, shape = [], []
    for k in range(lo.size):
        i0, i1 = _lattice_axis(lo[k], hi[k], h)
        starts.append(i0 * h)
        shape.append(i1 - i0 + 1)
    vals = np.zeros(tuple(shape))
    return GridFunction(vals, h, np.array(starts), np.ones(tuple(shape), dtype=bool))


def disk_domain(radius, h, center=(0.0, 0.0), pad=2):
    center = np.asarray(center, dtype=float)
    g = grid_over_box(center - radius - pad * h, center + radius + pad * h, h)
    r = np.linalg.norm(g.points() - center, axis=-1)
    return GridFunction(g.values, h, g.origin, r < radius)


def wulff_domain(norm, radius, h, center=None, pad=2):
    center = np.zeros(norm.dim) if center is None else np.asarray(center, dtype=float)
    # F°(x) >= a_polar |x|, so the ball fits in a box of half-width radius/a_polar
    a_pol = norm.polar_norm().anisotropy_bounds[0]
    ext = radius / a_pol
    g = grid_over_box(center - ext - pad * h, center + ext + pad * h, h)
    rho = norm.polar(g.points() - center)
    return GridFunction(g.values, h, g.origin, rho < radius)


def rectangle_domain(lo, hi, h, pad=2):
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    g = grid_over_box(lo - pad * h, hi + pad * h, h)
    pts = g.points()
    mask = np.ones(g.shape, dtype=bool)
    for k in range(lo.size):
        mask &= (pts[..., k] > lo[k] + 1e-12 * h) & (pts[..., k] < hi[k] - 1e-12 * h)
    return GridFunction(g.values, h, g.origin, mask)


def square_domain(side, h, center=(0.0, 0.0), pad=2):
    c = np.asarray(center, dtype=float)
    return rectangle_domain(c - side / 2.0, c + side / 2.0, h, pad=pad)


def polygon_domain(vertices, h, pad=2):
    """Mask of cell centers strictly inside a simple polygon (ray casting)."""
    v = np.asarray(vertices, dtype=float)
    g = grid_over_box(v.min(axis=0) - pad * h, v.max(axis=0) + pad * h, h)
    pts = g.points()
    x, y = pts[..., 0], pts[..., 1]
    inside = np.zeros(x.shape, dtype=bool)
    m = v.shape[0]
    for i in range(m):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % m]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    return GridFunction(g.values, h, g.origin, inside)


# -- import / export -----------------------------------------------------------


def save_csv(u, path):
    """Header 'nx,ny,h,ox,oy' (2D) then row-major values; mask encoded as NaN outside."""
    vals = np.where(u.mask, u.values, np.nan)
    with open(path, "w", newline="") as fh:
        dims = ",".join(str(s) for s in u.shape)
        orig = ",".join(repr(float(o)) for o in u.origin)
        fh.write(f"{dims},{u.h!r},{orig}\n")
        flat = vals.reshape(-1)
        for i in range(0, flat.size, u.shape[-1]):
            fh.write(",".join(repr(float(x)) for x in flat[i:i + u.shape[-1]]) + "\n")


def load_csv(path):
    with open(path) as fh:
        head = fh.readline().strip().split(",")
        text = fh.read()
    ndim = (len(head) - 1) // 2
    shape = tuple(int(s) for s in head[:ndim])
    h = float(head[ndim])
    origin = np.array([float(s) for s in head[ndim + 1:]])
    flat = np.loadtxt(io.StringIO(text), delimiter=",").reshape(-1)
    vals = flat.reshape(shape)
    mask = ~np.isnan(vals)
    return GridFunction(np.nan_to_num(vals), h, origin, mask)


def save_gfn(u, path):
    """Compact binary layout: magic GFN1, little-endian, float64 row-major values."""
    with open(path, "wb") as fh:
        fh.write(GFN_MAGIC)
        fh.write(struct.pack("<I", u.dim))
        fh.write(struct.pack(f"<{u.dim}I", *u.shape))
        fh.write(struct.pack("<d", u.h))
        fh.write(struct.pack(f"<{u.dim}d", *u.origin))
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(u.mask, dtype=np.uint8).tobytes())


def load_gfn(path):
    with open(path, "rb") as fh:
        if fh.read(4) != GFN_MAGIC:
            raise ValueError("not a GFN1 file")
        (ndim,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
        (h,) = struct.unpack("<d", fh.read(8))
        origin = np.array(struct.unpack(f"<{ndim}d", fh.read(8 * ndim)))
        count = int(np.prod(shape))
        vals = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape)
        mask = np.frombuffer(fh.read(count), dtype=np.uint8).reshape(shape).astype(bool)
    return GridFunction(vals.copy(), h, origin, mask)
