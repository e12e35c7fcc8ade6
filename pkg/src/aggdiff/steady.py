"""Steady states via a positive-operator eigenvalue problem.

A symmetric steady profile supported on [-L, L] solves, on its support,

    eps * rho(x) = int_{-L}^{L} G(x - y) rho(y) dy + C.

Differentiating and folding the symmetry of rho and G onto [0, L] turns the
negated slope u = -rho' into an eigenfunction of the integral operator with
kernel G(x - y) - G(x + y), which is pointwise nonnegative for x, y >= 0
because the radial profile decreases. That operator maps nonnegative
functions to functions that are positive away from 0, so its leading
eigenvalue eps(L) is simple, the associated eigenfunction can be taken
nonnegative, and the reconstructed profile

    rho(x) = alpha * int_x^L u(y) dy,   alpha = 1 / (2 int_0^L int_x^L u)

is the unique unit-mass symmetric steady state with half support L.
eps(L) increases strictly from 0 toward the kernel mass as L grows, which
makes "given eps, find L" solvable by bisection.

Discretization is trapezoid collocation on m + 1 equispaced nodes spanning
[0, L]. The iteration runs on the symmetrized matrix
S = sqrt(w) H sqrt(w), which has the same spectrum as the collocation
matrix H diag(w) and keeps the power method's Rayleigh quotient
quadratically convergent.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import DensityField, Grid1D, quadrature
from .kernels import Kernel


class NoConvergence(RuntimeError):
    """Eigensolver or bisection failed to reach its tolerance."""


class ZeroEigenfunction(ValueError):
    """Profile reconstruction from a numerically zero slope function."""


class EpsilonOutOfRange(ValueError):
    """No steady state exists for the requested diffusivity."""


@dataclass(frozen=True, eq=False)
class HalfSupportProblem:
    """Eigenvalue problem for the steady profile with half support L.

    ``m`` is the number of cells on [0, L], so the collocation uses m + 1
    nodes including both endpoints. The kernel must evaluate with unit
    mass, since the existence threshold is stated in those units.
    """

    L: float
    m: int
    kernel: Kernel

    def __post_init__(self) -> None:
        if self.L <= 0:
            raise ValueError("half support length must be positive")
        if self.m < 8:
            raise ValueError("need at least 8 cells on the half support")
        if abs(self.kernel.effective_mass - 1.0) > 1e-12:
            raise ValueError("kernel must be normalized to unit mass")

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(0.0, self.L, self.m + 1)
        x.flags.writeable = False
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.m + 1, self.L / self.m)
        w[0] = w[-1] = 0.5 * self.L / self.m
        w.flags.writeable = False
        return w


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Converged leading eigenpair and the reconstructed steady profile."""

    L: float
    epsilon: float
    u: np.ndarray
    rho: DensityField
    alpha: float
    iterations: int
    residual: float
    lambda2: float


def slope_operator_matrix(p: HalfSupportProblem) -> np.ndarray:
    """Collocation matrix of the operator acting on the negated slope.

    Row i discretizes int_0^L [G(x_i - y) - G(x_i + y)] u(y) dy with
    trapezoid weights. The difference of mirrored kernel evaluations is
    exactly zero in row 0 and pointwise nonnegative elsewhere.
    """
    x = p.nodes
    diff = p.kernel.eval(x[:, None] - x[None, :])
    summ = p.kernel.eval(x[:, None] + x[None, :])
    return (diff - summ) * p.weights[None, :]


def apply_slope_operator(p: HalfSupportProblem, u: np.ndarray) -> np.ndarray:
    """Apply the slope operator to node values of u."""
    return slope_operator_matrix(p) @ np.asarray(u, dtype=float)


def profile_operator_matrix(p: HalfSupportProblem) -> np.ndarray:
    """Collocation matrix of the operator acting on the profile itself.

    Row i discretizes the gauged even folding
    int_0^L [G(x_i - y) + G(x_i + y) - G(L - y) - G(L + y)] rho(y) dy,
    whose bracket vanishes identically at x_i = L.
    """
    x = p.nodes
    bracket = (
        p.kernel.eval(x[:, None] - x[None, :])
        + p.kernel.eval(x[:, None] + x[None, :])
        - p.kernel.eval(p.L - x[None, :])
        - p.kernel.eval(p.L + x[None, :])
    )
    return bracket * p.weights[None, :]


def apply_profile_operator(p: HalfSupportProblem, rho_half: np.ndarray) -> np.ndarray:
    """Apply the gauged even-folding operator to half-profile values."""
    return profile_operator_matrix(p) @ np.asarray(rho_half, dtype=float)


def default_start(p: HalfSupportProblem) -> np.ndarray:
    """Parabolic seed x (L - x) / L^2: nonnegative with positive slope at 0."""
    x = p.nodes
    return x * (p.L - x) / p.L**2


def _power_iteration(
    s_matrix: np.ndarray,
    v0: np.ndarray,
    sqrt_w: np.ndarray,
    tol_residual: float,
    tol_rayleigh: float,
    max_iter: int,
) -> tuple[float, np.ndarray, int, float]:
    """Power iteration with a Rayleigh-quotient and residual based stop.

    Returns (lam, v, iterations, residual) with v unit in the Euclidean
    norm of the symmetrized coordinates and the residual measured in the
    node coordinates as max|lam u - A u| / max u.
    """
    v = v0 / np.linalg.norm(v0)
    lam_prev = np.inf
    for it in range(1, max_iter + 1):
        sv = s_matrix @ v
        lam = float(v @ sv)
        norm_sv = float(np.linalg.norm(sv))
        if norm_sv == 0.0:
            return 0.0, v, it, 0.0
        # residual in node coordinates: u = v / sqrt(w), A u = S v / sqrt(w)
        node_resid = np.abs(lam * v - sv) / sqrt_w
        u_max = float(np.max(np.abs(v) / sqrt_w))
        residual = float(node_resid.max() / u_max)
        if (
            abs(lam - lam_prev) <= tol_rayleigh * max(abs(lam), 1e-300)
            and residual <= tol_residual
        ):
            return lam, v, it, residual
        v = sv / norm_sv
        lam_prev = lam
    raise NoConvergence(
        f"power iteration did not reach residual {tol_residual:g} "
        f"within {max_iter} iterations (last residual {residual:g})"
    )


def leading_eigenpair(
    p: HalfSupportProblem,
    u0: np.ndarray | None = None,
    tol_residual: float = 1e-10,
    tol_rayleigh: float = 1e-13,
    max_iter: int = 100_000,
    compute_second: bool = True,
) -> EigenResult:
    """Leading eigenvalue eps(L), slope eigenfunction, and steady profile.

    The start iterate (default the parabolic seed) must be nonnegative with
    positive slope at 0 so the iteration converges to the positive leading
    mode rather than a sign-changing one. Convergence requires both a
    relative Rayleigh-quotient change below ``tol_rayleigh`` and a node
    residual below ``tol_residual``. When ``compute_second`` is set, one
    deflation step estimates the second eigenvalue modulus, and a gap that
    fails to be strictly positive is reported as :class:`NoConvergence`
    (it signals a degenerate discretization).
    """
    sqrt_w = np.sqrt(p.weights)
    h_matrix = slope_operator_matrix(p) / p.weights[None, :]
    s_matrix = sqrt_w[:, None] * h_matrix * sqrt_w[None, :]
    start = default_start(p) if u0 is None else np.asarray(u0, dtype=float)
    if start.shape != p.nodes.shape:
        raise ValueError("start iterate must live on the problem nodes")
    lam, v, iterations, residual = _power_iteration(
        s_matrix, start * sqrt_w, sqrt_w, tol_residual, tol_rayleigh, max_iter
    )
    if lam <= 0:
        raise NoConvergence(f"leading eigenvalue came out nonpositive ({lam:g})")
    if float(v.sum()) < 0.0:
        v = -v
    u = v / sqrt_w
    u = u / u.max()

    lambda2 = 0.0
    if compute_second:
        lambda2 = _second_eigenvalue_modulus(s_matrix, v, lam, p, sqrt_w, max_iter)
        if lambda2 >= lam:
            raise NoConvergence(
                f"leading eigenvalue is not simple at this resolution "
                f"(eps={lam:g}, |lambda2|={lambda2:g})"
            )

    rho, alpha = reconstruct_rho(p, u)
    return EigenResult(
        L=p.L,
        epsilon=lam,
        u=u,
        rho=rho,
        alpha=alpha,
        iterations=iterations,
        residual=residual,
        lambda2=lambda2,
    )


def _second_eigenvalue_modulus(
    s_matrix: np.ndarray,
    v1: np.ndarray,
    lam1: float,
    p: HalfSupportProblem,
    sqrt_w: np.ndarray,
    max_iter: int,
) -> float:
    """Modulus of the second eigenvalue from one deflation step."""
    deflated = s_matrix - lam1 * np.outer(v1, v1)
    x = p.nodes
    seed = x * (p.L - x) * (0.5 * p.L - x) * sqrt_w
    seed = seed - (seed @ v1) * v1
    norm = np.linalg.norm(seed)
    if norm == 0.0:
        return 0.0
    v = seed / norm
    lam = 0.0
    for _ in range(min(max_iter, 50_000)):
        dv = deflated @ v
        ndv = float(np.linalg.norm(dv))
        if ndv <= 1e-300:
            return 0.0
        lam_new = float(v @ dv)
        v = dv / ndv
        if abs(abs(lam_new) - abs(lam)) <= 1e-10 * max(abs(lam_new), 1e-300):
            return abs(lam_new)
        lam = lam_new
    return abs(lam)


def reconstruct_rho(
    p: HalfSupportProblem, u: np.ndarray
) -> tuple[DensityField, float]:
    """Steady profile from the slope eigenfunction.

    Integrates u from L down to each node (so the half profile vanishes at
    L and decreases monotonically), mirrors it about 0, and scales by
    alpha = 1 / (2 int_0^L int_x^L u) so the full profile has exactly unit
    trapezoid mass.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != p.nodes.shape:
        raise ValueError("slope values must live on the problem nodes")
    if not np.all(np.isfinite(u)) or u.max() < 1e-14:
        raise ZeroEigenfunction("slope eigenfunction is numerically zero")
    h = p.L / p.m
    cell = 0.5 * h * (u[:-1] + u[1:])
    tail = np.concatenate([np.cumsum(cell[::-1])[::-1], [0.0]])
    denominator = 2.0 * float(p.weights @ tail)
    if denominator <= 0.0:
        raise ZeroEigenfunction("slope eigenfunction has no mass to integrate")
    alpha = 1.0 / denominator
    half = alpha * tail
    full_values = np.concatenate([half[:0:-1], half])
    full_grid = Grid1D(-p.L, p.L, 2 * p.m)
    return DensityField(full_grid, full_values), alpha


def epsilon_curve(
    kernel: Kernel, L_values: np.ndarray, m: int, threads: int = 1
) -> list[tuple[float, float, float]]:
    """(L, eps(L), |lambda2|) along increasing half-support lengths.

    Each length is solved independently from the cold-start seed, so the
    output does not depend on evaluation order or thread count.
    """
    L_values = np.asarray(L_values, dtype=float)
    if L_values.ndim != 1 or len(L_values) == 0:
        raise ValueError("need a 1-d array of lengths")
    if np.any(L_values <= 0) or np.any(np.diff(L_values) <= 0):
        raise ValueError("lengths must be positive and strictly increasing")

    def solve(L: float) -> tuple[float, float, float]:
        try:
            res = leading_eigenpair(HalfSupportProblem(L=float(L), m=m, kernel=kernel))
        except NoConvergence as err:
            raise NoConvergence(f"at L={L:g}: {err}") from err
        return float(L), res.epsilon, res.lambda2

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(solve, L_values))
    return [solve(L) for L in L_values]


def solve_for_epsilon(
    kernel: Kernel,
    epsilon: float,
    m: int,
    tol: float = 1e-8,
    max_bisect: int = 200,
) -> EigenResult:
    """Steady state with a prescribed diffusivity, by bisection on eps(L).

    Valid for 0 < eps < 1 (unit kernel mass): at or above the kernel mass
    no steady state exists, and strict monotonicity of eps(L) makes the
    inversion well posed. The bracket starts as [0.01, 1] and is grown
    geometrically until it straddles the target. Warm starts reuse the
    previous eigenfunction, which does not change converged values.
    """
    if not 0.0 < epsilon < 1.0:
        raise EpsilonOutOfRange(
            f"no steady state for eps={epsilon:g}: steady states exist exactly "
            "for diffusivities strictly between 0 and the kernel mass (1 after "
            "normalization)"
        )

    warm: dict[str, np.ndarray | None] = {"u": None, "nodes": None}

    def eps_at(L: float) -> tuple[float, EigenResult]:
        p = HalfSupportProblem(L=L, m=m, kernel=kernel)
        u0 = None
        if warm["u"] is not None:
            u0 = np.interp(p.nodes, warm["nodes"] * (L / warm["nodes"][-1]), warm["u"])
        res = leading_eigenpair(p, u0=u0, compute_second=False)
        warm["u"], warm["nodes"] = res.u, p.nodes
        return res.epsilon, res

    lo, hi = 0.01, 1.0
    eps_lo, _ = eps_at(lo)
    while eps_lo > epsilon:
        lo /= 4.0
        if lo < 1e-4:
            raise NoConvergence(f"eps={epsilon:g} is below the resolvable range")
        eps_lo, _ = eps_at(lo)
    eps_hi, res_hi = eps_at(hi)
    while eps_hi <= epsilon:
        hi *= 2.0
        if hi > 1024.0:
            raise NoConvergence(
                f"eps={epsilon:g} is too close to the kernel mass to invert "
                "at this resolution"
            )
        eps_hi, res_hi = eps_at(hi)

    best = res_hi
    for _ in range(max_bisect):
        if abs(best.epsilon - epsilon) <= tol:
            break
        mid = 0.5 * (lo + hi)
        eps_mid, res_mid = eps_at(mid)
        best = res_mid
        if eps_mid < epsilon:
            lo = mid
        else:
            hi = mid
    else:
        raise NoConvergence(
            f"bisection on the support length stalled (eps error "
            f"{abs(best.epsilon - epsilon):g} > {tol:g})"
        )
    # rerun the accepted length once more for the second-eigenvalue gap
    final = leading_eigenpair(
        HalfSupportProblem(L=best.L, m=m, kernel=kernel), u0=best.u
    )
    return final


def richardson_ratio(
    kernel: Kernel, L: float, m_values: tuple[int, int, int] = (200, 400, 800)
) -> float:
    """(eps_m1 - eps_m2) / (eps_m2 - eps_m3) across a grid refinement.

    For a second-order discretization with nested steps the ratio
    approaches (h1^2 - h2^2) / (h2^2 - h3^2), which is 4 for halving.
    """
    eps = [
        leading_eigenpair(
            HalfSupportProblem(L=L, m=m, kernel=kernel), compute_second=False
        ).epsilon
        for m in m_values
    ]
    return (eps[0] - eps[1]) / (eps[1] - eps[2])
