"""Regular-grid fields on boxes: the discrete substrate of the package.

Node fields carry (r_i + 1) values per axis (``zero`` and ``free``
boundary tags) or r_i values with wraparound (``periodic``).  Cell fields
carry one value per cell and arise from gradients, coefficient sampling
and y-averages.  Quadrature is the midpoint rule on cell centers; node
fields are reduced to cell centers by corner averaging, which is exact
for multilinear functions, so the rule integrates affine data exactly.

Gradients are forward differences mapped to cell centers (edge-averaged
in 2-d).  That choice makes the change-of-variables identities used by
the unfolding operator and the cell problems exact finite-sum
rearrangements on lattice-aligned grids.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError

NODE_BCS = ("zero", "periodic", "free")


@dataclass(frozen=True)
class Box:
    """An axis-aligned box (product of open intervals) in dimension 1 or 2."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in np.atleast_1d(self.lower))
        up = tuple(float(x) for x in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if len(lo) != len(up) or len(lo) not in (1, 2):
            raise DomainError("boxes are supported in dimensions 1 and 2")
        if not all(u > l for l, u in zip(lo, up)):
            raise DomainError("box needs lower < upper componentwise")

    @property
    def dim(self):
        return len(self.lower)

    @property
    def side_lengths(self):
        return tuple(u - l for l, u in zip(self.lower, self.upper))

    @property
    def volume(self):
        return float(np.prod(self.side_lengths))

    def to_json(self):
        return {"lower": list(self.lower), "upper": list(self.upper)}


def unit_box(dim):
    return Box((0.0,) * dim, (1.0,) * dim)


@dataclass(frozen=True)
class Grid:
    """A uniform grid of cells over a box."""

    box: Box
    resolution: tuple

    def __post_init__(self):
        res = tuple(int(r) for r in np.atleast_1d(self.resolution))
        object.__setattr__(self, "resolution", res)
        if len(res) != self.box.dim:
            raise DomainError("resolution must give one entry per axis")
        if any(r < 2 for r in res):
            raise DomainError("need at least 2 cells per axis")

    @property
    def dim(self):
        return self.box.dim

    @property
    def spacing(self):
        return tuple(s / r for s, r in zip(self.box.side_lengths, self.resolution))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def node_axes(self, bc):
        """Node coordinates per axis for the given boundary tag."""
        axes = []
        for l, h, r in zip(self.box.lower, self.spacing, self.resolution):
            n = r if bc == "periodic" else r + 1
            axes.append(l + h * np.arange(n))
        return axes

    def center_axes(self):
        return [l + h * (np.arange(r) + 0.5)
                for l, h, r in zip(self.box.lower, self.spacing, self.resolution)]

    def cell_centers(self):
        """Array of shape (*resolution, dim) with cell-center coordinates."""
        mesh = np.meshgrid(*self.center_axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def to_json(self):
        return {"box": self.box.to_json(), "resolution": list(self.resolution)}


class GridField:
    """Values of a scalar/vector/matrix function on a grid.

    ``centering`` is ``"node"`` or ``"cell"``; node fields carry a
    boundary tag ``bc`` in ``("zero", "periodic", "free")``.  The value
    array has one leading axis per grid axis followed by the component
    shape: () for scalars, (d,) for vectors, (d, N) for gradients.
    """

    def __init__(self, grid: Grid, values, bc="free", centering="node"):
        self.grid = grid
        self.centering = centering
        self.bc = None if centering == "cell" else bc
        values = np.asarray(values, dtype=float)
        if centering == "node":
            if bc not in NODE_BCS:
                raise DomainError(f"unknown boundary tag {bc!r}")
            expect = tuple(r if bc == "periodic" else r + 1 for r in grid.resolution)
        elif centering == "cell":
            expect = grid.resolution
        else:
            raise DomainError(f"unknown centering {centering!r}")
        if values.shape[: grid.dim] != expect:
            raise DataError(f"value array shape {values.shape} does not match "
                            f"{centering} layout {expect}")
        if not np.all(np.isfinite(values)):
            raise DataError("field values must be finite")
        if centering == "node" and bc == "zero":
            for ax in range(grid.dim):
                first = np.take(values, 0, axis=ax)
                last = np.take(values, -1, axis=ax)
                if np.any(first != 0.0) or np.any(last != 0.0):
                    raise DataError("zero-boundary fields must vanish on boundary nodes")
        self.values = values

    # -- shape helpers ------------------------------------------------------

    @property
    def component_shape(self):
        return self.values.shape[self.grid.dim:]

    @property
    def num_components(self):
        return int(np.prod(self.component_shape, dtype=int)) if self.component_shape else 1

    def with_values(self, values):
        return GridField(self.grid, values, bc=self.bc or "free", centering=self.centering)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        if np.isscalar(other):
            return self.with_values(self.values * other)
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def _binary(self, other, op):
        if not isinstance(other, GridField):
            raise DataError("field arithmetic needs two fields or a field and a scalar")
        if other.grid != self.grid or other.centering != self.centering:
            raise DataError("field arithmetic needs matching grids and centering")
        bc = self.bc if self.bc == other.bc else "free"
        return GridField(self.grid, op(self.values, other.values),
                         bc=bc or "free", centering=self.centering)

    # -- quadrature ---------------------------------------------------------

    def cell_values(self):
        """Values at cell centers; corner averages for node fields."""
        if self.centering == "cell":
            return self.values
        v = self.values
        if self.bc == "periodic":
            for ax in range(self.grid.dim):
                v = 0.5 * (v + np.roll(v, -1, axis=ax))
        else:
            for ax in range(self.grid.dim):
                lo = np.take(v, range(0, v.shape[ax] - 1), axis=ax)
                hi = np.take(v, range(1, v.shape[ax]), axis=ax)
                v = 0.5 * (lo + hi)
        return v

    def magnitudes(self):
        """Euclidean (Frobenius) magnitude of the cell values."""
        cv = self.cell_values()
        if not self.component_shape:
            return np.abs(cv)
        flat = cv.reshape(cv.shape[: self.grid.dim] + (-1,))
        return np.sqrt(np.sum(flat * flat, axis=-1))

    def quadrature_samples(self):
        return self.magnitudes().ravel(), self.grid.cell_volume

    # -- dumps ---------------------------------------------------------------

    def dump_values(self, path, fmt="csv"):
        """Write the raw value array, row-major by axis then component.

        ``fmt="csv"`` writes one value per line with full round-trip
        precision; ``fmt="bin"`` writes flat float64 binary.  The grid and
        layout metadata belong in the run manifest, not in the dump.
        """
        flat = np.ascontiguousarray(self.values, dtype=float).ravel()
        if fmt == "csv":
            with open(path, "w") as fh:
                fh.write("value\n")
                for x in flat:
                    fh.write(f"{x:.17g}\n")
        elif fmt == "bin":
            flat.tofile(path)
        else:
            raise DomainError(f"unknown dump format {fmt!r}")


def sample(fn, grid: Grid, bc="free"):
    """Sample a pointwise map on the grid nodes.

    ``fn`` receives one coordinate array per axis (broadcastable) and
    returns values of shape (..., ) or (..., d).
    """
    axes = grid.node_axes(bc)
    mesh = np.meshgrid(*axes, indexing="ij")
    values = np.asarray(fn(*mesh), dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataError("sampled function produced non-finite values")
    return GridField(grid, values, bc=bc, centering="node")


def sample_cells(fn, grid: Grid):
    """Sample a pointwise map at the cell centers."""
    mesh = np.meshgrid(*grid.center_axes(), indexing="ij")
    values = np.asarray(fn(*mesh), dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataError("sampled function produced non-finite values")
    return GridField(grid, values, centering="cell")


def gradient(u: GridField):
    """Cell-centered gradient of a node field by forward differences.

    In 2-d the two forward differences sharing a cell edge are averaged,
    which is exact for multilinear node data.  Output components have
    shape (d, N) (scalars give (1, N)).  Periodic fields wrap.
    """
    if u.centering != "node":
        raise DomainError("gradient expects a node field")
    grid = u.grid
    if any(r < 2 for r in grid.resolution):
        raise DomainError("gradient needs at least 2 cells per axis")
    v = u.values
    if not u.component_shape:
        v = v[..., None]
    d = v.shape[-1]
    N = grid.dim
    out = np.empty(tuple(grid.resolution) + (d, N), dtype=float)
    for ax in range(N):
        h = grid.spacing[ax]
        if u.bc == "periodic":
            diff = (np.roll(v, -1, axis=ax) - v) / h
        else:
            lo = np.take(v, range(0, v.shape[ax] - 1), axis=ax)
            hi = np.take(v, range(1, v.shape[ax]), axis=ax)
            diff = (hi - lo) / h
        # reduce the remaining node axes to cell centers
        for other in range(N):
            if other == ax:
                continue
            if u.bc == "periodic":
                diff = 0.5 * (diff + np.roll(diff, -1, axis=other))
            else:
                a = np.take(diff, range(0, diff.shape[other] - 1), axis=other)
                b = np.take(diff, range(1, diff.shape[other]), axis=other)
                diff = 0.5 * (a + b)
        out[..., :, ax] = diff
    return GridField(grid, out, centering="cell")


def integrate(u: GridField):
    """Midpoint-rule integral over the box; exact on cellwise constants.

    Scalar fields give a float; fields with components give one integral
    per component.
    """
    cv = u.cell_values()
    spatial = tuple(range(u.grid.dim))
    total = np.sum(cv, axis=spatial) * u.grid.cell_volume
    if np.ndim(total) == 0:
        return float(total)
    return total


def masked_integral(u: GridField, cell_mask):
    """Integral restricted to the cells flagged by a boolean mask."""
    cv = u.cell_values()
    mask = np.asarray(cell_mask, dtype=bool)
    if mask.shape != tuple(u.grid.resolution):
        raise DataError("cell mask shape must match the grid resolution")
    if u.component_shape:
        mask = mask.reshape(mask.shape + (1,) * len(u.component_shape))
    total = np.sum(np.where(mask, cv, 0.0)) * u.grid.cell_volume
    return float(total)


def corner_indices(dim):
    """The 2**dim corner offsets of a cell, as index tuples."""
    return list(itertools.product((0, 1), repeat=dim))
