"""Compactly supported probability measures on the real line.

A measure is stored as a uniform grid of cell-averaged density values plus a
finite list of atoms.  Standard families are built from their distribution
functions so that every cell carries its exact mass, including the cells that
straddle a support endpoint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

MASS_TOL = 1e-12

_GAUSS16_NODES, _GAUSS16_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class GridConfig:
    """Resolution and window inflation used when discretizing a measure.

    ``padding`` is the factor by which the grid window exceeds the support
    of the measure (centered), so quadrature never clips mass.
    """

    n_cells: int = 2048
    padding: float = 1.25

    def __post_init__(self):
        if not isinstance(self.n_cells, int) or self.n_cells < 2:
            raise ParameterError(f"n_cells must be an integer >= 2, got {self.n_cells}")
        if not math.isfinite(self.padding) or self.padding < 1.0:
            raise ParameterError(f"padding must be >= 1, got {self.padding}")


DEFAULT_GRID = GridConfig()


@dataclass(frozen=True)
class Measure:
    """Probability measure: cell-averaged grid density plus point atoms.

    Parameters
    ----------
    grid_lo, grid_hi : float
        Window endpoints; cells are uniform on ``[grid_lo, grid_hi]``.
    density : ndarray
        Nonnegative cell-averaged values, one per cell.
    atoms : tuple of (location, weight)
        Point masses; weights in (0, 1], locations inside the window.
    meta : dict
        Diagnostic values (total mass, inversion quality, ...).  Not part
        of equality or serialization.
    """

    grid_lo: float
    grid_hi: float
    density: np.ndarray
    atoms: tuple[tuple[float, float], ...] = ()
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        dens = np.ascontiguousarray(np.asarray(self.density, dtype=float))
        if dens.ndim != 1 or dens.size < 2:
            raise ParameterError("density must be a 1-d array with at least 2 cells")
        if not (math.isfinite(self.grid_lo) and math.isfinite(self.grid_hi)):
            raise ParameterError("grid endpoints must be finite")
        if not self.grid_hi > self.grid_lo:
            raise ParameterError("grid_hi must exceed grid_lo")
        if not np.all(np.isfinite(dens)):
            raise ParameterError("density values must be finite")
        if np.any(dens < 0):
            if np.min(dens) < -1e-14:
                raise ParameterError("density values must be nonnegative")
            dens = np.clip(dens, 0.0, None)
        dens.flags.writeable = False
        object.__setattr__(self, "density", dens)
        atoms = tuple(sorted((float(a), float(w)) for a, w in self.atoms))
        for loc, w in atoms:
            if not (self.grid_lo <= loc <= self.grid_hi):
                raise ParameterError(f"atom at {loc} outside window")
            if not (0.0 < w <= 1.0):
                raise ParameterError(f"atom weight {w} outside (0, 1]")
        object.__setattr__(self, "atoms", atoms)
        total = self.density_mass + self.atom_mass
        if abs(total - 1.0) > MASS_TOL:
            raise ParameterError(f"total mass {total} differs from 1 by > {MASS_TOL}")

    # -- geometry of the grid -------------------------------------------------

    @property
    def n_cells(self) -> int:
        return self.density.size

    @property
    def cell_width(self) -> float:
        return (self.grid_hi - self.grid_lo) / self.n_cells

    def edges(self) -> np.ndarray:
        return np.linspace(self.grid_lo, self.grid_hi, self.n_cells + 1)

    def midpoints(self) -> np.ndarray:
        h = self.cell_width
        return self.grid_lo + h * (np.arange(self.n_cells) + 0.5)

    # -- masses ---------------------------------------------------------------

    @property
    def density_mass(self) -> float:
        return float(np.sum(self.density) * self.cell_width)

    @property
    def atom_mass(self) -> float:
        return float(sum(w for _, w in self.atoms))

    def support(self) -> tuple[float, float]:
        """Smallest interval carrying all the mass."""
        edges = self.edges()
        nz = np.nonzero(self.density > 0)[0]
        los, his = [], []
        if nz.size:
            los.append(edges[nz[0]])
            his.append(edges[nz[-1] + 1])
        if self.atoms:
            los.append(min(a for a, _ in self.atoms))
            his.append(max(a for a, _ in self.atoms))
        return min(los), max(his)

    def is_point_mass(self, tol: float = 1e-9) -> bool:
        return (
            len(self.atoms) == 1
            and self.atoms[0][1] >= 1.0 - tol
            and self.density_mass <= tol
        )

    # -- distribution function and inverse ------------------------------------

    def _segments(self):
        """Monotone pieces of the CDF: cells (split at interior atoms) and jumps.

        Returns (x0, x1, mass, is_atom) arrays with zero-mass pieces removed.
        """
        edges = self.edges()
        h = self.cell_width
        x0 = [edges[:-1]]
        x1 = [edges[1:]]
        mass = [self.density * h]
        kind = [np.zeros(self.n_cells, dtype=bool)]
        for loc, w in self.atoms:
            x0.append([loc])
            x1.append([loc])
            mass.append([w])
            kind.append([True])
        x0 = np.concatenate(x0)
        x1 = np.concatenate(x1)
        mass = np.concatenate(mass)
        kind = np.concatenate(kind)
        order = np.lexsort((kind, x0))
        x0, x1, mass, kind = x0[order], x1[order], mass[order], kind[order]
        keep = mass > 0
        return x0[keep], x1[keep], mass[keep], kind[keep]

    def cdf(self, x) -> np.ndarray:
        """Right-continuous distribution function, vectorized."""
        x = np.asarray(x, dtype=float)
        edges = self.edges()
        h = self.cell_width
        cum = np.concatenate([[0.0], np.cumsum(self.density) * h])
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, self.n_cells - 1)
        frac = np.clip((x - edges[idx]) / h, 0.0, 1.0)
        out = np.where(x < edges[0], 0.0, cum[idx] + frac * self.density[idx] * h)
        out = np.where(x >= edges[-1], cum[-1], out)
        for loc, w in self.atoms:
            out = out + w * (x >= loc)
        return out

    def quantile(self, q) -> np.ndarray:
        """Generalized inverse of the CDF, vectorized over ``q`` in [0, 1]."""
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)):
            raise ParameterError("quantile levels must lie in [0, 1]")
        x0, x1, mass, is_atom = self._segments()
        cum = np.cumsum(mass)
        cum[-1] = max(cum[-1], 1.0)  # guard rounding at q = 1
        idx = np.clip(np.searchsorted(cum, q, side="left"), 0, mass.size - 1)
        before = cum[idx] - mass[idx]
        frac = np.clip((q - before) / mass[idx], 0.0, 1.0)
        out = np.where(is_atom[idx], x0[idx], x0[idx] + frac * (x1[idx] - x0[idx]))
        return out

    def mean(self) -> float:
        return moment(self, 1)

    def variance(self) -> float:
        m1 = moment(self, 1)
        return moment(self, 2) - m1 * m1

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "grid_lo": self.grid_lo,
            "grid_hi": self.grid_hi,
            "density": [float(v) for v in self.density],
            "atoms": [[loc, w] for loc, w in self.atoms],
        }

    @classmethod
    def from_json(cls, data: dict | str) -> "Measure":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            grid_lo=float(data["grid_lo"]),
            grid_hi=float(data["grid_hi"]),
            density=np.asarray(data["density"], dtype=float),
            atoms=tuple((float(a), float(w)) for a, w in data.get("atoms", ())),
        )


# -- construction helpers ------------------------------------------------------


def _window(support_lo: float, support_hi: float, padding: float) -> tuple[float, float]:
    center = 0.5 * (support_lo + support_hi)
    half = 0.5 * (support_hi - support_lo) * padding
    if half <= 0:
        half = max(0.5 * padding, abs(center) * 1e-9)
    return center - half, center + half


def snapped_window(support_lo: float, support_hi: float, grid: GridConfig):
    """Window inflated by ~padding with support endpoints on cell edges.

    Snapping keeps densities with jumps or edge singularities exactly
    cell-aligned, so no cell straddles a support endpoint.
    Returns (lo, hi, pad_cells); the support spans cells
    [pad_cells, n_cells - pad_cells).
    """
    width = support_hi - support_lo
    if width <= 0:
        raise ParameterError("support width must be positive")
    n_interior = max(2, round(grid.n_cells / grid.padding))
    pad = (grid.n_cells - n_interior) // 2
    n_interior = grid.n_cells - 2 * pad
    h = width / n_interior
    return support_lo - pad * h, support_hi + pad * h, pad


def _from_cdf(cdf, support, grid: GridConfig, atoms=()) -> Measure:
    """Cell masses from exact CDF differences; mass is conserved by design."""
    lo, hi, _ = snapped_window(support[0], support[1], grid)
    edges = np.linspace(lo, hi, grid.n_cells + 1)
    vals = cdf(np.clip(edges, support[0], support[1]))
    dens = np.diff(vals) / ((hi - lo) / grid.n_cells)
    dens = np.clip(dens, 0.0, None)
    total_atoms = sum(w for _, w in atoms)
    target = 1.0 - total_atoms
    got = np.sum(dens) * (hi - lo) / grid.n_cells
    if got > 0:
        dens = dens * (target / got)
    return Measure(lo, hi, dens, tuple(atoms))


def semicircle(variance: float, grid: GridConfig | None = None) -> Measure:
    """Semicircular law with the given variance, supported on [-2s, 2s]."""
    grid = grid or DEFAULT_GRID
    if not (math.isfinite(variance) and variance > 0):
        raise ParameterError(f"variance must be positive, got {variance}")
    s = math.sqrt(variance)
    r = 2.0 * s

    def cdf(x):
        u = np.clip(x / r, -1.0, 1.0)
        return 0.5 + (u * np.sqrt(1.0 - u * u) + np.arcsin(u)) / math.pi

    return _from_cdf(cdf, (-r, r), grid)


def arcsine(radius: float, grid: GridConfig | None = None) -> Measure:
    """Arcsine law with density 1 / (pi * sqrt(r^2 - x^2)) on (-r, r)."""
    grid = grid or DEFAULT_GRID
    if not (math.isfinite(radius) and radius > 0):
        raise ParameterError(f"radius must be positive, got {radius}")

    def cdf(x):
        u = np.clip(x / radius, -1.0, 1.0)
        return 0.5 + np.arcsin(u) / math.pi

    return _from_cdf(cdf, (-radius, radius), grid)


def uniform(lo: float, hi: float, grid: GridConfig | None = None) -> Measure:
    """Uniform law on [lo, hi]."""
    grid = grid or DEFAULT_GRID
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ParameterError(f"need lo < hi, got [{lo}, {hi}]")

    def cdf(x):
        return np.clip((x - lo) / (hi - lo), 0.0, 1.0)

    return _from_cdf(cdf, (lo, hi), grid)


def bernoulli(p: float, a: float, b: float, grid: GridConfig | None = None) -> Measure:
    """Two-point law: mass p at a, mass 1 - p at b."""
    grid = grid or DEFAULT_GRID
    if not (0.0 < p < 1.0):
        raise ParameterError(f"p must lie in (0, 1), got {p}")
    if not (math.isfinite(a) and math.isfinite(b)) or a == b:
        raise ParameterError("atom locations must be finite and distinct")
    lo, hi = _window(min(a, b), max(a, b), grid.padding)
    dens = np.zeros(grid.n_cells)
    return Measure(lo, hi, dens, ((a, p), (b, 1.0 - p)))


def point_mass(location: float, grid: GridConfig | None = None) -> Measure:
    """Unit mass at a single point."""
    grid = grid or DEFAULT_GRID
    if not math.isfinite(location):
        raise ParameterError("location must be finite")
    lo, hi = _window(location - 0.5, location + 0.5, grid.padding)
    return Measure(lo, hi, np.zeros(grid.n_cells), ((location, 1.0),))


def free_poisson(rate: float, grid: GridConfig | None = None) -> Measure:
    """Free Poisson law with the given rate (jump size 1).

    For rate >= 1 the law is absolutely continuous on
    [(1 - sqrt(rate))^2, (1 + sqrt(rate))^2]; below 1 an atom of weight
    1 - rate sits at the origin.  Cell masses come from fixed-order Gauss
    panels, then a single renormalization pins the continuous mass.
    """
    grid = grid or DEFAULT_GRID
    if not (math.isfinite(rate) and rate > 0):
        raise ParameterError(f"rate must be positive, got {rate}")
    sq = math.sqrt(rate)
    a, b = (1.0 - sq) ** 2, (1.0 + sq) ** 2
    atoms = ((0.0, 1.0 - rate),) if rate < 1.0 else ()
    support_lo = 0.0 if rate < 1.0 else a
    lo, hi, _ = snapped_window(support_lo, b, grid)
    edges = np.linspace(lo, hi, grid.n_cells + 1)
    h = (hi - lo) / grid.n_cells
    mids = 0.5 * (edges[:-1] + edges[1:])
    x = mids[:, None] + 0.5 * h * _GAUSS16_NODES[None, :]

    def dens_fn(t):
        inside = (t > a) & (t < b)
        t_safe = np.where(inside, t, 0.5 * (a + b))
        val = np.sqrt(np.clip((b - t_safe) * (t_safe - a), 0.0, None)) / (
            2.0 * math.pi * t_safe
        )
        return np.where(inside, val, 0.0)

    cell_mass = 0.5 * h * np.sum(dens_fn(x) * _GAUSS16_WEIGHTS[None, :], axis=1)
    target = min(rate, 1.0)
    cell_mass *= target / np.sum(cell_mass)
    return Measure(lo, hi, cell_mass / h, atoms)


_FAMILIES = {
    "semicircle": (semicircle, 1),
    "bernoulli": (bernoulli, 3),
    "arcsine": (arcsine, 1),
    "uniform": (uniform, 2),
    "free_poisson": (free_poisson, 1),
}


def standard_family(name: str, params, grid: GridConfig | None = None) -> Measure:
    """Build one of the named standard laws from a parameter list."""
    try:
        fn, arity = _FAMILIES[name]
    except KeyError:
        raise ParameterError(
            f"unknown family {name!r}; expected one of {sorted(_FAMILIES)}"
        ) from None
    params = list(params)
    if len(params) != arity:
        raise ParameterError(f"family {name!r} takes {arity} parameter(s)")
    return fn(*params, grid=grid)


# -- operations -----------------------------------------------------------------


def moment(mu: Measure, p: int) -> float:
    """p-th raw moment by cell-midpoint quadrature plus exact atom terms."""
    if not isinstance(p, int) or p < 0 or p > 16:
        raise ParameterError(f"moment order must be an integer in [0, 16], got {p}")
    mids = mu.midpoints()
    val = float(np.dot(mu.density, mids**p) * mu.cell_width)
    val += sum(w * loc**p for loc, w in mu.atoms)
    return val


def affine_pushforward(mu: Measure, a: float, b: float) -> Measure:
    """Law of a*X + b.  Grid cells map one-to-one, so masses are exact."""
    if not (math.isfinite(a) and math.isfinite(b)) or a == 0:
        raise ParameterError("need finite a != 0 and finite b")
    lo, hi = a * mu.grid_lo + b, a * mu.grid_hi + b
    dens = mu.density / abs(a)
    if a < 0:
        lo, hi = hi, lo
        dens = dens[::-1]
    atoms = tuple((a * loc + b, w) for loc, w in mu.atoms)
    return Measure(lo, hi, dens, atoms)


def mix(measures, weights, grid: GridConfig | None = None) -> Measure:
    """Convex mixture, rebinned onto a common window via CDF differences."""
    grid = grid or DEFAULT_GRID
    measures = list(measures)
    weights = [float(w) for w in weights]
    if len(measures) != len(weights) or not measures:
        raise ParameterError("need equally many measures and weights")
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
        raise ParameterError("weights must be nonnegative and sum to 1")
    los, his = zip(*(m.support() for m in measures))
    lo, hi, _ = snapped_window(min(los), max(his), grid)
    edges = np.linspace(lo, hi, grid.n_cells + 1)
    h = (hi - lo) / grid.n_cells
    atom_pool: dict[float, float] = {}
    cont = np.zeros(grid.n_cells)
    for m, w in zip(measures, weights):
        if w == 0:
            continue
        cont_cdf = m.cdf(edges) - sum(
            aw * (edges >= loc) for loc, aw in m.atoms
        ) if m.atoms else m.cdf(edges)
        cont += w * np.diff(cont_cdf)
        for loc, aw in m.atoms:
            atom_pool[loc] = atom_pool.get(loc, 0.0) + w * aw
    atoms = tuple((loc, aw) for loc, aw in sorted(atom_pool.items()) if aw > 0)
    total_atoms = sum(aw for _, aw in atoms)
    got = np.sum(cont)
    if got > 0:
        cont *= (1.0 - total_atoms) / got
    return Measure(lo, hi, cont / h, atoms)


def sample(mu: Measure, count: int, seed: int) -> np.ndarray:
    """Inverse-CDF sampling; deterministic for a given seed."""
    if not isinstance(count, int) or count < 1:
        raise ParameterError(f"count must be a positive integer, got {count}")
    rng = np.random.default_rng(seed)
    return mu.quantile(rng.random(count))


def l1_distance(mu: Measure, nu: Measure) -> float:
    """L1 distance between the continuous parts plus atom mass mismatch."""
    if (
        mu.grid_lo == nu.grid_lo
        and mu.grid_hi == nu.grid_hi
        and mu.n_cells == nu.n_cells
    ):
        d = float(np.sum(np.abs(mu.density - nu.density)) * mu.cell_width)
        locs = sorted({loc for loc, _ in mu.atoms} | {loc for loc, _ in nu.atoms})
        wa, wb = dict(mu.atoms), dict(nu.atoms)
        return d + sum(abs(wa.get(loc, 0.0) - wb.get(loc, 0.0)) for loc in locs)
    edges = np.unique(np.concatenate([mu.edges(), nu.edges()]))

    def dens_on(m: Measure, mids):
        out = np.zeros(mids.size)
        inside = (mids > m.grid_lo) & (mids < m.grid_hi)
        idx = np.clip(
            ((mids[inside] - m.grid_lo) / m.cell_width).astype(int), 0, m.n_cells - 1
        )
        out[inside] = m.density[idx]
        return out

    mids = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    d = float(np.sum(np.abs(dens_on(mu, mids) - dens_on(nu, mids)) * widths))
    locs = sorted({loc for loc, _ in mu.atoms} | {loc for loc, _ in nu.atoms})
    wa = dict(mu.atoms)
    wb = dict(nu.atoms)
    d += sum(abs(wa.get(loc, 0.0) - wb.get(loc, 0.0)) for loc in locs)
    return d


def kolmogorov_distance(mu: Measure, nu: Measure) -> float:
    """Sup distance between CDFs, evaluated at all breakpoints and left limits."""
    pts = np.unique(
        np.concatenate(
            [
                mu.edges(),
                nu.edges(),
                np.array([loc for loc, _ in mu.atoms + nu.atoms], dtype=float),
            ]
        )
    )
    right = np.abs(mu.cdf(pts) - nu.cdf(pts))
    eps = 1e-12 * max(1.0, np.max(np.abs(pts)))
    left = np.abs(mu.cdf(pts - eps) - nu.cdf(pts - eps))
    return float(max(np.max(right), np.max(left)))


def ks_statistic(samples: np.ndarray, mu: Measure) -> float:
    """Kolmogorov statistic of an empirical sample against ``mu``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    f = mu.cdf(x)
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - f), np.max(f - (grid - 1.0 / n))))
