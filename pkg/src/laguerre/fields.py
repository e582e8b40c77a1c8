"""Rectangular grids, sampled fields, finite-difference stencils and CSV I/O.

Arrays are indexed ``[i, j]`` with ``i`` along x and ``j`` along y.  Nodes
where a stencil is undefined hold NaN.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Grid:
    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid needs at least 3 nodes per direction")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("grid ranges must be increasing")

    @classmethod
    def square(cls, n: int, lo: float = -1.0, hi: float = 1.0) -> "Grid":
        return cls(lo, hi, lo, hi, n, n)

    @classmethod
    def parse(cls, spec: str) -> "Grid":
        """Parse ``x0:x1:y0:y1:n`` or ``x0:x1:y0:y1:nx:ny``."""
        parts = [p for p in spec.split(":")]
        if len(parts) not in (5, 6):
            raise ValueError(f"bad grid spec {spec!r}")
        x0, x1, y0, y1 = map(float, parts[:4])
        nx = int(parts[4])
        ny = int(parts[5]) if len(parts) == 6 else nx
        return cls(x0, x1, y0, y1, nx, ny)

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linspace(self.x0, self.x1, self.nx), np.linspace(self.y0, self.y1, self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        xs, ys = self.axes()
        return np.meshgrid(xs, ys, indexing="ij")

    def shrink(self, margin: int) -> "Grid":
        """The subgrid obtained by dropping ``margin`` nodes on every side."""
        return Grid(
            self.x0 + margin * self.hx,
            self.x1 - margin * self.hx,
            self.y0 + margin * self.hy,
            self.y1 - margin * self.hy,
            self.nx - 2 * margin,
            self.ny - 2 * margin,
        )

    def refine(self) -> "Grid":
        """Halve both spacings."""
        return Grid(self.x0, self.x1, self.y0, self.y1, 2 * self.nx - 1, 2 * self.ny - 1)


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")

    def max_abs(self) -> float:
        """Max |value| over defined (non-NaN) nodes."""
        return nanmax_abs(self.values)

    def to_csv(self, path) -> None:
        write_field_csv(path, self)

    @classmethod
    def from_csv(cls, path) -> "ScalarField":
        return read_field_csv(path)


def nanmax_abs(a) -> float:
    a = np.asarray(a, dtype=float)
    finite = a[np.isfinite(a)]
    return float(np.max(np.abs(finite))) if finite.size else float("nan")


def strip(a: np.ndarray, margin: int) -> np.ndarray:
    """Drop ``margin`` nodes on every side of the two leading axes."""
    if margin == 0:
        return a
    return a[margin:-margin, margin:-margin]


def pad(a: np.ndarray, margin: int) -> np.ndarray:
    """Inverse of :func:`strip`, filling with NaN."""
    if margin == 0:
        return a
    width = [(margin, margin), (margin, margin)] + [(0, 0)] * (a.ndim - 2)
    return np.pad(a.astype(float), width, constant_values=np.nan)


# Stencils return arrays on the interior (shape reduced by 2 per axis).


def d_x(a, hx):
    return (a[2:, 1:-1] - a[:-2, 1:-1]) / (2 * hx)


def d_y(a, hy):
    return (a[1:-1, 2:] - a[1:-1, :-2]) / (2 * hy)


def d_xx(a, hx):
    return (a[2:, 1:-1] - 2 * a[1:-1, 1:-1] + a[:-2, 1:-1]) / hx**2


def d_yy(a, hy):
    return (a[1:-1, 2:] - 2 * a[1:-1, 1:-1] + a[1:-1, :-2]) / hy**2


def d_xy(a, hx, hy):
    return (a[2:, 2:] - a[2:, :-2] - a[:-2, 2:] + a[:-2, :-2]) / (4 * hx * hy)


def laplacian(a, hx, hy):
    """Five-point Laplacian on the interior."""
    return d_xx(a, hx) + d_yy(a, hy)


# -- CSV -------------------------------------------------------------------------
#
# Header ``nx,ny,x0,x1,y0,y1`` followed by one line per grid row (constant y,
# increasing y), each line holding the nx values along x.


def write_field_csv(path, field: ScalarField) -> None:
    g = field.grid
    lines = [f"{g.nx},{g.ny},{g.x0!r},{g.x1!r},{g.y0!r},{g.y1!r}"]
    for j in range(g.ny):
        lines.append(",".join(repr(float(v)) for v in field.values[:, j]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_field_csv(path) -> ScalarField:
    rows = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    head = rows[0].split(",")
    if len(head) != 6:
        raise ValueError(f"{path}: header must be nx,ny,x0,x1,y0,y1")
    nx, ny = int(head[0]), int(head[1])
    x0, x1, y0, y1 = map(float, head[2:])
    body = np.array([[float(v) for v in ln.split(",")] for ln in rows[1:]])
    if body.shape != (ny, nx):
        raise ValueError(f"{path}: expected {ny} rows of {nx} values, got {body.shape}")
    return ScalarField(Grid(x0, x1, y0, y1, nx, ny), body.T.copy())
