"""Uniform 1-d grid, trapezoid quadrature, and discrete convolution."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .kernels import Kernel


class ZeroMass(ValueError):
    """Center of mass requested for a field whose mass is numerically zero."""


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Equispaced nodes x_0 = a < x_1 < ... < x_n = b with n = n_cells."""

    a: float
    b: float
    n_cells: int

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ValueError("need a < b")
        if self.n_cells < 2:
            raise ValueError("need at least two cells")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(self.a, self.b, self.n_nodes)
        x.flags.writeable = False
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights (endpoints carry half weight)."""
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        w.flags.writeable = False
        return w

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)


@dataclass(frozen=True, eq=False)
class DensityField:
    """Nonnegative grid function with cached integrals."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"expected {self.grid.n_nodes} node values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("density values must be finite")
        if vals.min() < 0.0:
            raise ValueError(f"density values must be nonnegative, min is {vals.min()}")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @cached_property
    def mass(self) -> float:
        return float(self.grid.weights @ self.values)

    @cached_property
    def center_of_mass(self) -> float:
        """First moment of the field (not divided by the mass)."""
        if abs(self.mass) < 1e-14:
            raise ZeroMass("center of mass of an (almost) empty field")
        return float((self.grid.weights * self.grid.nodes) @ self.values)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.weights @ self.values**2))


def quadrature(f: DensityField | np.ndarray, grid: Grid1D | None = None) -> float:
    """Trapezoid approximation of the integral of f over its grid."""
    if isinstance(f, DensityField):
        return f.mass
    if grid is None:
        raise TypeError("quadrature of a bare array needs the grid")
    return float(grid.weights @ np.asarray(f, dtype=float))


def center_of_mass(rho: DensityField) -> float:
    """First moment of the field; raises ZeroMass for an empty field."""
    return rho.center_of_mass


def kernel_samples(kernel: Kernel, grid: Grid1D) -> np.ndarray:
    """Kernel values at every node offset, mirrored so evenness is exact.

    Entry n_cells + d holds G(d * h) for d in [-n_cells, n_cells]; sampling
    offsets as exact multiples of h makes the discrete convolution commute
    exactly with whole-node translations.
    """
    half = kernel.eval(np.arange(grid.n_nodes) * grid.h)
    return np.concatenate([half[:0:-1], half])


def convolve_samples(g_full: np.ndarray, weighted_values: np.ndarray) -> np.ndarray:
    """Direct discrete convolution of quadrature-weighted values."""
    n = weighted_values.shape[0]
    return np.convolve(weighted_values, g_full)[n - 1 : 2 * n - 1]


def convolve(kernel: Kernel, rho: DensityField) -> np.ndarray:
    """(G * rho) at the grid nodes via trapezoid-weighted summation.

    The kernel is truncated to the computational window; the domain should
    be wide enough that the kernel tail beyond it is negligible.
    """
    g_full = kernel_samples(kernel, rho.grid)
    return convolve_samples(g_full, rho.grid.weights * rho.values)


def support_mask(values: np.ndarray, rel_threshold: float = 1e-8) -> np.ndarray:
    """Nodes carrying more than rel_threshold of the peak value."""
    vals = np.asarray(values, dtype=float)
    peak = vals.max()
    if peak <= 0.0:
        return np.zeros(vals.shape, dtype=bool)
    return vals > rel_threshold * peak


def uniform_bump(grid: Grid1D, lo: float, hi: float, normalize: bool = True) -> DensityField:
    """Plateau of height 1/(hi - lo) on [lo, hi].

    Nodes landing exactly on the plateau edges get half the height, which
    makes the trapezoid mass of an aligned plateau exact. With normalize
    the values are rescaled so the discrete mass is exactly one.
    """
    if not (grid.a <= lo < hi <= grid.b):
        raise ValueError("plateau must sit inside the grid")
    x = grid.nodes
    height = 1.0 / (hi - lo)
    edge_tol = 1e-12 * grid.h
    vals = np.where((x > lo + edge_tol) & (x < hi - edge_tol), height, 0.0)
    for edge in (lo, hi):
        on_edge = np.abs(x - edge) <= edge_tol
        vals[on_edge] = 0.5 * height
    if normalize:
        vals /= quadrature(vals, grid)
    return DensityField(grid, vals)


def gaussian_bump(grid: Grid1D, mu: float, sigma: float, normalize: bool = True) -> DensityField:
    """Sampled normal density, rescaled to exact unit discrete mass."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = grid.nodes
    vals = np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * np.sqrt(2.0 * np.pi))
    if normalize:
        vals /= quadrature(vals, grid)
    return DensityField(grid, vals)


def save_field_csv(rho: DensityField, path) -> None:
    """Write the field as `x,rho` rows with 17 significant digits."""
    lines = ["x,rho"]
    lines.extend(
        f"{x:.17g},{v:.17g}" for x, v in zip(rho.grid.nodes, rho.values)
    )
    Path(path).write_text("\n".join(lines) + "\n")


def load_field_csv(path) -> DensityField:
    """Read a field written by :func:`save_field_csv`."""
    raw = Path(path).read_text().strip().splitlines()
    if raw and raw[0].lower().startswith("x"):
        raw = raw[1:]
    pairs = np.array([[float(c) for c in line.split(",")] for line in raw])
    if len(pairs) < 3:
        raise ValueError("need at least three rows")
    x, vals = pairs[:, 0], pairs[:, 1]
    steps = np.diff(x)
    h = steps.mean()
    if h <= 0 or np.abs(steps - h).max() > 1e-9 * abs(h):
        raise ValueError("nodes must be uniformly spaced and increasing")
    grid = Grid1D(float(x[0]), float(x[-1]), len(x) - 1)
    return DensityField(grid, vals)
