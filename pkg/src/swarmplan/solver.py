"""Alternating-minimization solver for one agent's planning problem.

Each iteration performs five block updates on the relaxed problem

    min 0.5 z'Qz + q'z - lam'z + rho/2 ||A z - b(angles, mags)||^2
                                + rho/2 ||G z - h + s||^2   s.t.  C z = e

S1  trajectory coefficients ``z`` via an equality-constrained QP solve,
S2  closed-form angle updates (projection onto the constraint ellipsoids),
S3  closed-form clipped magnitude updates (standard or barrier bounds),
S4  nonnegative slack update for the bound rows,
S5  multiplier update.

The penalty grows geometrically per iteration up to a cap, and the loop exits
once the combined constraint residual drops below the threshold.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .bernstein import sample_trajectory
from .polar import PolarVars, _project_scaled
from .problem import PlanningProblem, build_b

_DEGENERATE_DEN = 1e-12

MODES = ("standard", "bf")


@dataclass(frozen=True)
class SolverConfig:
    """Iteration limits and penalty schedule.

    Once the combined residual drops below ``threshold`` the iterate counts
    as converged, but the loop keeps polishing until the residual has sat at
    ``residual_floor`` for ``settle_passes`` iterations (or ``polish_budget``
    extra iterations as a backstop).  The residual measures exactly how far
    the sampled trajectory is from its clipped polar projection, so stopping
    hard at the threshold would leave residual-sized constraint slop in the
    returned trajectory; a few floor iterations also wash out the artifacts
    of the zero-initialized magnitudes in otherwise unconstrained solves.
    Polishing is deliberately short: once the residual is at the floor,
    further iterations slowly trade optimality for standoff margin.
    """

    maxiter: int = 2000
    threshold: float = 0.01
    rho_base: float = 1.3
    rho_cap: float = 5e5
    kkt_epsilon: float = 1e-9
    polish_budget: int = 64
    settle_passes: int = 5
    residual_floor: float = 1e-8

    def __post_init__(self):
        if self.maxiter < 1:
            raise ValueError(f"maxiter must be >= 1, got {self.maxiter}")
        if self.threshold <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.polish_budget < 0:
            raise ValueError(f"polish_budget must be >= 0, got {self.polish_budget}")
        if self.settle_passes < 1:
            raise ValueError(f"settle_passes must be >= 1, got {self.settle_passes}")

    def rho_at(self, iteration: int) -> float:
        return min(self.rho_base**iteration, self.rho_cap)


@dataclass
class SolverState:
    """Mutable iterate carried across the S1..S5 updates."""

    zeta1: np.ndarray
    polar: PolarVars
    lam: np.ndarray
    slack: np.ndarray
    rho: float = 1.0
    iter: int = 0
    eq_residual: float = np.inf
    ineq_residual: float = np.inf

    @classmethod
    def cold(cls, problem: PlanningProblem, config: SolverConfig | None = None) -> "SolverState":
        config = config or SolverConfig()
        return cls(
            zeta1=np.zeros(problem.n_coeffs),
            polar=PolarVars.zeros(problem.n_rows),
            lam=np.zeros(problem.n_coeffs),
            slack=np.zeros(problem.h.size),
            rho=config.rho_at(0),
            iter=0,
        )

    def copy(self) -> "SolverState":
        return SolverState(
            zeta1=self.zeta1.copy(),
            polar=self.polar.copy(),
            lam=self.lam.copy(),
            slack=self.slack.copy(),
            rho=self.rho,
            iter=self.iter,
            eq_residual=self.eq_residual,
            ineq_residual=self.ineq_residual,
        )


@dataclass
class SolveDiagnostics:
    iterations: int
    eq_residual: float
    ineq_residual: float
    converged: bool
    wall_time_us: float
    kkt_regularized: bool = False
    state: SolverState | None = field(default=None, repr=False)

    @property
    def residual(self) -> float:
        return self.eq_residual + self.ineq_residual

    def record(self) -> dict:
        """Flat export record for benchmark logs."""
        return {
            "iterations": self.iterations,
            "eq_residual": self.eq_residual,
            "ineq_residual": self.ineq_residual,
            "residual": self.residual,
            "converged": self.converged,
            "wall_time_us": self.wall_time_us,
        }


def _kkt_factors(problem: PlanningProblem, rho: float, epsilon: float) -> tuple:
    """Cached factorization pieces of the reduced S1 system for one ``rho``.

    Returns ``(cho, A_hat, v, regularized)`` where ``cho`` factors the reduced
    Hessian ``Z' A_hat Z`` and ``v = Z' A_hat z_particular``.  A factorization
    failure regularizes the ``A_hat`` block by ``epsilon`` on the diagonal.
    """
    cached = problem._kkt_cache.get(rho)
    if cached is not None:
        return cached
    Z, ZT = problem.null_basis, problem.null_basis_T
    A_hat = problem.Q + rho * problem.gram
    regularized = False
    try:
        cho = cho_factor(ZT @ A_hat @ Z, lower=True, check_finite=False)
    except LinAlgError:
        regularized = True
        A_hat = A_hat + epsilon * np.eye(problem.n_coeffs)
        cho = cho_factor(ZT @ A_hat @ Z, lower=True, check_finite=False)
    v = ZT @ (A_hat @ problem.zeta_particular)
    entry = (cho, A_hat, v, regularized)
    problem._kkt_cache[rho] = entry
    return entry


def step_s1(
    problem: PlanningProblem,
    state: SolverState,
    b: np.ndarray | None = None,
    with_dual: bool = True,
    epsilon: float = 1e-9,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Coefficient update: minimize the penalized objective subject to ``C z = e``.

    The equality block is eliminated exactly through the precomputed
    particular solution and null-space basis, so ``C z = e`` holds to machine
    precision; the optional second return value is the equality dual vector.
    """
    if b is None:
        b = build_b(problem, state.polar)
    rho = state.rho
    rhs = -problem.q + state.lam + rho * (problem.AT @ b) + rho * (problem.GT @ (problem.h - state.slack))
    cho, A_hat, v, _ = _kkt_factors(problem, rho, epsilon)
    y = cho_solve(cho, problem.null_basis_T @ rhs - v, check_finite=False)
    zeta = problem.zeta_particular + problem.null_basis @ y
    if not with_dual:
        return zeta, None
    mu = problem.dual_pinv @ (rhs - A_hat @ zeta)
    return zeta, mu


def _sampled(problem: PlanningProblem, zeta1: np.ndarray):
    pos, vel, acc = sample_trajectory(problem.basis, zeta1)
    return pos, vel, acc, problem.stack_samples(pos, vel, acc)


def step_s2(
    problem: PlanningProblem,
    state: SolverState,
    samples: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Angle update: independently project every constraint row's difference."""
    if samples is None:
        *_, samples = _sampled(problem, state.zeta1)
    u = (samples - problem.centers) / problem.scales
    return _project_scaled(u)


def step_s3(
    problem: PlanningProblem,
    state: SolverState,
    mode: str = "standard",
    samples: np.ndarray | None = None,
    omega_rows: np.ndarray | None = None,
) -> np.ndarray:
    """Magnitude update: per-row quadratic vertex clipped into the feasible interval.

    In ``bf`` mode the collision lower bounds follow the barrier rule from the
    previous iterate's magnitudes (anchored at the measured state for step 0)
    instead of the constant boundary value 1.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if samples is None:
        *_, samples = _sampled(problem, state.zeta1)
    if omega_rows is None:
        sb = np.sin(state.polar.beta)
        omega_rows = np.stack(
            [np.cos(state.polar.alpha) * sb, np.sin(state.polar.alpha) * sb, np.cos(state.polar.beta)], axis=1
        )
    diff = samples - problem.centers
    scaled_dir = problem.scales * omega_rows
    num = np.einsum("ij,ij->i", diff, scaled_dir)
    den = np.einsum("ij,ij->i", scaled_dir, scaled_dir)
    lo = problem.lo_base
    if mode == "bf" and problem.M:
        gamma = problem.config.gamma
        d_prev = state.polar.d[problem.col_rows].reshape(problem.M, problem.K)
        shifted = np.empty_like(d_prev)
        shifted[:, 0] = problem.anchors
        shifted[:, 1:] = d_prev[:, :-1]
        lo = lo.copy()
        lo[problem.col_rows] = (1.0 + (1.0 - gamma) * (shifted - 1.0)).ravel()
    safe = den > _DEGENERATE_DEN
    vertex = np.where(safe, num / np.where(safe, den, 1.0), lo)
    return np.clip(vertex, lo, problem.hi_bounds)


def step_s4(problem: PlanningProblem, state: SolverState, gz: np.ndarray | None = None) -> np.ndarray:
    """Slack update: the nonnegative minimizer of the bound-violation penalty."""
    if gz is None:
        gz = problem.G @ state.zeta1
    return np.maximum(0.0, problem.h - gz)


def step_s5(
    problem: PlanningProblem,
    state: SolverState,
    r_eq: np.ndarray | None = None,
    viol: np.ndarray | None = None,
) -> np.ndarray:
    """Multiplier update from the current equality and bound residuals."""
    if r_eq is None:
        r_eq = problem.A @ state.zeta1 - build_b(problem, state.polar)
    if viol is None:
        viol = problem.G @ state.zeta1 - problem.h + state.slack
    half_rho = 0.5 * state.rho
    return state.lam - half_rho * (problem.AT @ r_eq) - half_rho * (problem.GT @ viol)


def solve(
    problem: PlanningProblem,
    warm_start: SolverState | None = None,
    config: SolverConfig | None = None,
    mode: str = "standard",
) -> tuple[np.ndarray, SolveDiagnostics]:
    """Run the alternating updates until the residual threshold or iteration cap.

    Cold starts zero the polar variables, multipliers, and slacks.  A warm
    start copies the supplied state, including its penalty schedule position.
    Returns the lowest-residual iterate and diagnostics carrying the final
    state for warm-start reuse.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    config = config or SolverConfig()
    state = warm_start.copy() if warm_start is not None else SolverState.cold(problem, config)
    state.rho = config.rho_at(state.iter)

    t0 = time.perf_counter()
    b = build_b(problem, state.polar)
    best_zeta = state.zeta1
    best_residual = np.inf
    converged = False
    regularized = False
    local_iter = 0
    polish_iters = 0
    floor_hits = 0

    while local_iter < config.maxiter:
        zeta, _ = step_s1(problem, state, b=b, with_dual=False, epsilon=config.kkt_epsilon)
        regularized = regularized or problem._kkt_cache[state.rho][3]
        state.zeta1 = zeta
        pos, vel, acc, samples = _sampled(problem, zeta)

        alpha, beta = step_s2(problem, state, samples=samples)
        state.polar.alpha = alpha
        state.polar.beta = beta
        sb = np.sin(beta)
        omega_rows = np.stack([np.cos(alpha) * sb, np.sin(alpha) * sb, np.cos(beta)], axis=1)
        state.polar.d = step_s3(problem, state, mode, samples=samples, omega_rows=omega_rows)

        pos_axis = pos.T.ravel()
        gz = np.concatenate([pos_axis, -pos_axis])
        state.slack = step_s4(problem, state, gz=gz)

        b = build_b(problem, state.polar, _omega_rows=omega_rows)
        r_eq = samples.T.ravel() - b
        viol = np.maximum(gz - problem.h, 0.0)
        state.lam = step_s5(problem, state, r_eq=r_eq, viol=viol)

        state.eq_residual = float(np.linalg.norm(r_eq))
        state.ineq_residual = float(np.linalg.norm(viol))
        state.iter += 1
        state.rho = config.rho_at(state.iter)
        local_iter += 1

        residual = state.eq_residual + state.ineq_residual
        if residual < best_residual:
            best_residual = residual
            best_zeta = zeta
        if converged:
            polish_iters += 1
        if residual < config.threshold:
            converged = True
        if residual < config.residual_floor:
            floor_hits += 1
        if converged and (floor_hits >= config.settle_passes or polish_iters >= config.polish_budget):
            break

    wall_us = (time.perf_counter() - t0) * 1e6
    diagnostics = SolveDiagnostics(
        iterations=local_iter,
        eq_residual=state.eq_residual,
        ineq_residual=state.ineq_residual,
        converged=converged,
        wall_time_us=wall_us,
        kkt_regularized=regularized,
        state=state,
    )
    return best_zeta, diagnostics
