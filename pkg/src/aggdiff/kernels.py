"""Radial interaction kernels: evaluation, derivatives, normalization."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class NonDifferentiable(ValueError):
    """Kernel derivative requested at a point where the profile has a kink."""


@dataclass(frozen=True, eq=False)
class Kernel:
    """Even, nonnegative, radially strictly decreasing interaction kernel.

    ``profile`` selects the radial shape:

    * ``"gaussian"``: normal density of width ``sigma`` (unit analytic mass),
    * ``"laplace"``: two-sided exponential density with decay length
      ``scale`` (unit analytic mass, kink at the origin),
    * ``"custom"``: tabulated radial samples, linearly interpolated and
      treated as zero beyond the last radius.

    ``l1_mass`` is the analytic integral of the raw profile over the whole
    line; evaluation divides by it when ``normalized`` is set, so a
    normalized kernel integrates to one. ``smooth`` records whether the
    profile is twice continuously differentiable at the origin; curvature
    checks at zero are skipped for kernels without it.
    """

    profile: str
    l1_mass: float
    normalized: bool = True
    smooth: bool = True
    sigma: float = 1.0
    scale: float = 1.0
    table_r: np.ndarray | None = None
    table_g: np.ndarray | None = None

    @property
    def amplitude(self) -> float:
        """Divisor applied on evaluation (l1_mass when normalized)."""
        return self.l1_mass if self.normalized else 1.0

    @property
    def effective_mass(self) -> float:
        """Integral of the kernel as evaluated."""
        return 1.0 if self.normalized else self.l1_mass

    def eval(self, x: float | np.ndarray) -> float | np.ndarray:
        """Kernel value G(x); even in x and nonnegative."""
        r = np.abs(np.asarray(x, dtype=float))
        if self.profile == "gaussian":
            vals = np.exp(-0.5 * (r / self.sigma) ** 2) / (self.sigma * _SQRT_2PI)
        elif self.profile == "laplace":
            vals = np.exp(-r / self.scale) / (2.0 * self.scale)
        elif self.profile == "custom":
            vals = np.interp(r, self.table_r, self.table_g, right=0.0)
        else:
            raise ValueError(f"unknown kernel profile {self.profile!r}")
        vals = vals / self.amplitude
        return float(vals) if vals.ndim == 0 else vals

    def derivative(self, x: float | np.ndarray) -> float | np.ndarray:
        """Pointwise dG/dx; odd in x and nonpositive for x > 0.

        Raises :class:`NonDifferentiable` when a profile with a kink at the
        origin is queried exactly at x = 0 (the caller must one-side).
        """
        xs = np.asarray(x, dtype=float)
        r = np.abs(xs)
        if self.profile == "gaussian":
            gauss = np.exp(-0.5 * (r / self.sigma) ** 2) / (self.sigma * _SQRT_2PI)
            vals = -xs / self.sigma**2 * gauss
        elif self.profile == "laplace":
            if np.any(r == 0.0):
                raise NonDifferentiable(
                    "the exponential profile has a kink at 0; evaluate one-sided"
                )
            vals = -np.sign(xs) * np.exp(-r / self.scale) / (2.0 * self.scale**2)
        elif self.profile == "custom":
            if np.any(r == 0.0):
                raise NonDifferentiable(
                    "tabulated profiles are not differentiable at 0"
                )
            seg = np.clip(
                np.searchsorted(self.table_r, r, side="right") - 1,
                0,
                len(self.table_r) - 2,
            )
            slope = (self.table_g[seg + 1] - self.table_g[seg]) / (
                self.table_r[seg + 1] - self.table_r[seg]
            )
            vals = np.where(r >= self.table_r[-1], 0.0, np.sign(xs) * slope)
        else:
            raise ValueError(f"unknown kernel profile {self.profile!r}")
        vals = vals / self.amplitude
        return float(vals) if vals.ndim == 0 else vals

    def derivative_bound(self) -> float:
        """Upper bound on sup|G'| for the kernel as evaluated."""
        if self.profile == "gaussian":
            peak = math.exp(-0.5) / (self.sigma**2 * _SQRT_2PI)
        elif self.profile == "laplace":
            peak = 1.0 / (2.0 * self.scale**2)
        else:
            slopes = np.diff(self.table_g) / np.diff(self.table_r)
            peak = float(np.abs(slopes).max())
        return peak / self.amplitude


def gaussian_kernel(sigma: float = 1.0) -> Kernel:
    """Normal-density profile; unit analytic mass for any width."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return Kernel(profile="gaussian", l1_mass=1.0, smooth=True, sigma=float(sigma))


def laplace_kernel(scale: float = 1.0) -> Kernel:
    """Two-sided exponential density; unit analytic mass, kink at the origin."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return Kernel(profile="laplace", l1_mass=1.0, smooth=False, scale=float(scale))


def tabulated_kernel(r: np.ndarray, g: np.ndarray, normalize: bool = False) -> Kernel:
    """Kernel from radial samples (r_i, g_i), linearly interpolated.

    The radii must start at 0 and increase strictly; the values must be
    nonnegative and strictly decreasing, otherwise the samples are rejected.
    Mass is the trapezoid integral of the two-sided extension.
    """
    r = np.ascontiguousarray(r, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    if r.ndim != 1 or r.shape != g.shape or len(r) < 2:
        raise ValueError("need matching 1-d arrays with at least two samples")
    if r[0] != 0.0:
        raise ValueError("radial samples must start at r = 0")
    if not np.all(np.diff(r) > 0):
        raise ValueError("radii must be strictly increasing")
    if not np.all(g >= 0):
        raise ValueError("profile values must be nonnegative")
    if not np.all(np.diff(g) < 0):
        raise ValueError("profile must be strictly decreasing in the radius")
    l1 = 2.0 * float(np.trapz(g, r))
    if l1 <= 0:
        raise ValueError("profile has no mass")
    r.flags.writeable = False
    g.flags.writeable = False
    return Kernel(
        profile="custom",
        l1_mass=l1,
        normalized=normalize,
        smooth=False,
        table_r=r,
        table_g=g,
    )


def normalize(kernel: Kernel, epsilon: float) -> tuple[Kernel, float]:
    """Rescale to unit mass and return the matching diffusivity.

    (G, eps) and (G / m, eps / m) with m the kernel mass generate the same
    dynamics up to a time rescaling, so thresholds are always stated for
    the normalized pair. Kernels that already evaluate with unit mass are
    returned unchanged together with the original epsilon.
    """
    if kernel.l1_mass <= 0:
        raise ValueError("kernel mass must be positive")
    if kernel.normalized or kernel.l1_mass == 1.0:
        return replace(kernel, normalized=True), float(epsilon)
    return replace(kernel, normalized=True), float(epsilon) / kernel.l1_mass


def kernel_from_config(cfg: dict) -> Kernel:
    """Build a kernel from its JSON configuration block."""
    kind = cfg.get("type", "gaussian")
    if kind == "gaussian":
        kernel = gaussian_kernel(float(cfg.get("sigma", 1.0)))
    elif kind == "laplace":
        kernel = laplace_kernel(float(cfg.get("scale", 1.0)))
    elif kind == "custom":
        path = cfg["samples_path"]
        data = np.loadtxt(path, delimiter=",", skiprows=_csv_header_rows(path))
        kernel = tabulated_kernel(data[:, 0], data[:, 1])
    else:
        raise ValueError(f"unknown kernel type {kind!r}")
    if not cfg.get("normalize", True):
        kernel = replace(kernel, normalized=False)
    return kernel


def kernel_to_config(kernel: Kernel) -> dict:
    """Inverse of :func:`kernel_from_config` for analytic profiles."""
    cfg: dict = {"type": kernel.profile, "normalize": kernel.normalized}
    if kernel.profile == "gaussian":
        cfg["sigma"] = kernel.sigma
    elif kernel.profile == "laplace":
        cfg["scale"] = kernel.scale
    else:
        raise ValueError("tabulated kernels are configured via samples_path")
    return cfg


def _csv_header_rows(path) -> int:
    with open(path) as handle:
        first = handle.readline().split(",")[0].strip()
    try:
        float(first)
    except ValueError:
        return 1
    return 0
