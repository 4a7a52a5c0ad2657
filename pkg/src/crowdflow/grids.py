"""Sparse piecewise-constant measures on a hypercube lattice and atomic measures.

A grid cell with integer index i = (i_1, ..., i_d) is the half-open box
prod_l [(i_l - 1/2) h, (i_l + 1/2) h); the cells partition R^d. Occupied
cells are kept lexicographically sorted so every reduction has a fixed,
reproducible summation order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

MASS_TOL = 1e-10
WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice of half-open hypercube cells of edge ``cell_width``."""

    dim: int
    cell_width: float

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        if not (self.cell_width > 0 and math.isfinite(self.cell_width)):
            raise ValueError(f"cell_width must be positive, got {self.cell_width!r}")

    @property
    def cell_volume(self) -> float:
        return self.cell_width ** self.dim


def cell_of(spec: GridSpec, x) -> tuple:
    """Index of the unique cell containing x (boundary points go up)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dim,):
        raise ValueError(f"point has shape {x.shape}, expected ({spec.dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("point must be finite")
    return tuple(int(v) for v in np.floor(x / spec.cell_width + 0.5))


def cell_center(spec: GridSpec, i) -> np.ndarray:
    """Center i*h of cell i."""
    return np.asarray(i, dtype=float) * spec.cell_width


class GridMeasure:
    """Finitely supported piecewise-constant density on a :class:`GridSpec`.

    ``indices`` is an (m, d) int array of occupied cells, lexicographically
    sorted; ``rho`` the matching densities (mass per cell is rho * h^d).
    Absent cells have density zero.
    """

    __slots__ = ("spec", "indices", "rho")

    def __init__(self, spec: GridSpec, indices, rho):
        indices = np.asarray(indices, dtype=np.int64).reshape(-1, spec.dim)
        rho = np.asarray(rho, dtype=float).reshape(-1)
        if indices.shape[0] != rho.shape[0]:
            raise ValueError("indices and rho must have the same length")
        if not np.all(np.isfinite(rho)):
            raise ValueError("densities must be finite")
        if np.any(rho < 0):
            raise ValueError("densities must be nonnegative")
        keep = rho > 0
        indices, rho = indices[keep], rho[keep]
        if indices.shape[0]:
            order = np.lexsort(indices.T[::-1])
            indices, rho = indices[order], rho[order]
            # coalesce duplicate cells
            dup = np.any(indices[1:] != indices[:-1], axis=1)
            if not np.all(dup):
                starts = np.concatenate(([0], np.nonzero(dup)[0] + 1))
                rho = np.add.reduceat(rho, starts)
                indices = indices[starts]
        self.spec = spec
        self.indices = indices
        self.rho = rho
        self.indices.setflags(write=False)
        self.rho.setflags(write=False)

    @classmethod
    def from_dict(cls, spec: GridSpec, density: dict) -> "GridMeasure":
        idx = list(density.keys())
        rho = [density[i] for i in idx]
        return cls(spec, np.asarray(idx, dtype=np.int64).reshape(-1, spec.dim), rho)

    @property
    def density(self) -> dict:
        return {tuple(int(v) for v in i): float(r) for i, r in zip(self.indices, self.rho)}

    def density_at(self, i) -> float:
        row = np.asarray(i, dtype=np.int64)
        hit = np.nonzero(np.all(self.indices == row, axis=1))[0]
        return float(self.rho[hit[0]]) if hit.size else 0.0

    @property
    def occupied(self) -> int:
        return int(self.indices.shape[0])

    def centers(self) -> np.ndarray:
        return self.indices * self.spec.cell_width

    def cell_masses(self) -> np.ndarray:
        return self.rho * self.spec.cell_volume

    def validate_probability(self, tol: float = MASS_TOL) -> None:
        mass = total_mass(self)
        if abs(mass - 1.0) > tol:
            raise ValueError(f"total mass {mass!r} differs from 1 by more than {tol}")


class AtomicMeasure:
    """Weighted sum of Dirac masses; weights are positive and sum to one."""

    __slots__ = ("positions", "weights")

    def __init__(self, positions, weights=None):
        positions = np.asarray(positions, dtype=float)
        if positions.ndim == 1:
            positions = positions[:, None]
        if positions.ndim != 2 or positions.shape[0] == 0:
            raise ValueError("positions must be a nonempty (n, d) array")
        if not np.all(np.isfinite(positions)):
            raise ValueError("positions must be finite")
        n = positions.shape[0]
        if weights is None:
            weights = np.full(n, 1.0 / n)
        else:
            weights = np.asarray(weights, dtype=float).reshape(-1)
        if weights.shape[0] != n:
            raise ValueError("positions and weights must have the same length")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and nonnegative")
        keep = weights > 0
        positions, weights = positions[keep], weights[keep]
        if positions.shape[0] == 0:
            raise ValueError("measure has no positive-weight atoms")
        if abs(float(np.sum(weights)) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {float(np.sum(weights))!r}, expected 1")
        self.positions = positions
        self.weights = weights
        self.positions.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.positions.shape[1])

    @property
    def n_atoms(self) -> int:
        return int(self.positions.shape[0])

    def translated(self, shift) -> "AtomicMeasure":
        return AtomicMeasure(self.positions + np.asarray(shift, dtype=float), self.weights)

    def to_json(self) -> str:
        atoms = [{"x": [float(v) for v in p], "w": float(w)}
                 for p, w in zip(self.positions, self.weights)]
        return json.dumps(atoms)

    @classmethod
    def from_json(cls, text: str) -> "AtomicMeasure":
        atoms = json.loads(text)
        return cls([a["x"] for a in atoms], [a["w"] for a in atoms])


@dataclass
class GridTrajectory:
    """Time-indexed grid measures at t_n = n*dt, plus per-step diagnostics."""

    spec: GridSpec
    dt: float
    frames: list
    reports: list = field(default_factory=list)

    def __post_init__(self):
        if not self.frames:
            raise ValueError("trajectory needs at least one frame")
        if not (self.dt > 0):
            raise ValueError("dt must be positive")

    @property
    def duration(self) -> float:
        return (len(self.frames) - 1) * self.dt


def project_atomic(mu_bar: AtomicMeasure, spec: GridSpec) -> GridMeasure:
    """Cell-average projection: rho_i = (atomic mass of cell i) / h^d."""
    if mu_bar.dim != spec.dim:
        raise ValueError(f"measure dim {mu_bar.dim} != grid dim {spec.dim}")
    idx = np.floor(mu_bar.positions / spec.cell_width + 0.5).astype(np.int64)
    return GridMeasure(spec, idx, mu_bar.weights / spec.cell_volume)


def total_mass(lam: GridMeasure) -> float:
    """h^d * sum of densities, summed in sorted-index order."""
    return float(np.sum(lam.cell_masses()))


def moment(measure, p: int) -> float:
    """p-th absolute moment; cell-center quadrature for grid measures."""
    if p not in (1, 2):
        raise ValueError(f"unsupported moment order {p!r}")
    if isinstance(measure, AtomicMeasure):
        r = np.linalg.norm(measure.positions, axis=1)
        return float(np.dot(measure.weights, r ** p))
    if isinstance(measure, GridMeasure):
        r = np.linalg.norm(measure.centers(), axis=1)
        return float(np.dot(measure.cell_masses(), r ** p))
    raise TypeError(f"unsupported measure type {type(measure)!r}")


def atomize(lam: GridMeasure) -> AtomicMeasure:
    """One atom per occupied cell, at the cell center, weight h^d * rho."""
    return AtomicMeasure(lam.centers(), lam.cell_masses())


def interpolate(a: GridMeasure, b: GridMeasure, theta: float) -> GridMeasure:
    """Convex combination (1-theta) a + theta b of densities cell by cell."""
    if a.spec != b.spec:
        raise ValueError("measures live on different grids")
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"theta must be in [0, 1], got {theta!r}")
    if theta == 0.0:
        return a
    if theta == 1.0:
        return b
    idx = np.concatenate([a.indices, b.indices])
    rho = np.concatenate([(1.0 - theta) * a.rho, theta * b.rho])
    return GridMeasure(a.spec, idx, rho)


def write_density_csv(lam: GridMeasure, path, validate: bool = True) -> None:
    """Snapshot CSV: index_*, center_*, rho; one row per occupied cell."""
    if validate:
        lam.validate_probability()
    d = lam.spec.dim
    header = [f"index_{l}" for l in range(d)] + [f"center_{l}" for l in range(d)] + ["rho"]
    centers = lam.centers()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, c, r in zip(lam.indices, centers, lam.rho):
            w.writerow([*(int(v) for v in i), *(repr(float(v)) for v in c), repr(float(r))])


def read_density_csv(spec: GridSpec, path) -> GridMeasure:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    d = spec.dim
    idx = [[int(row[f"index_{l}"]) for l in range(d)] for row in rows]
    rho = [float(row["rho"]) for row in rows]
    return GridMeasure(spec, np.asarray(idx, dtype=np.int64).reshape(-1, d), rho)
