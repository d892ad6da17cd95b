"""Independent reference implementations used to cross-check the library.

Everything here deliberately avoids the library's own closed forms: the
angle oracle is a grid search with local refinement, the magnitude oracle a
ternary search, the equality-QP oracle a dense bordered-KKT factorization,
and the basis-derivative oracle a finite difference of directly evaluated
basis functions.
"""

import numpy as np
import scipy.linalg
from scipy.special import comb

# Trig tables for the coarse grid are instance-independent.
_ALPHA_GRID = np.linspace(-np.pi, np.pi, 2000)
_BETA_GRID = np.linspace(0.0, np.pi, 1000)
_COS_A, _SIN_A = np.cos(_ALPHA_GRID), np.sin(_ALPHA_GRID)
_SIN_B, _COS_B = np.sin(_BETA_GRID), np.cos(_BETA_GRID)


def projection_objective(diff, d, shape, alpha, beta):
    """Scaled per-row residual the angle update minimizes."""
    u = np.asarray(diff, float) / shape.as_array
    wx = np.cos(alpha) * np.sin(beta)
    wy = np.sin(alpha) * np.sin(beta)
    wz = np.cos(beta)
    return (u[0] - d * wx) ** 2 + (u[1] - d * wy) ** 2 + (u[2] - d * wz) ** 2


def _grid_min(u, d, cos_a, sin_a, sin_b, cos_b, alphas, betas):
    """Exact minimum of the projection objective over the full alpha x beta grid.

    The objective is norm2 - 2 d [c1(alpha) sin(beta) + uz cos(beta)] + d^2
    with sin(beta) >= 0 on [0, pi], so for every beta the best alpha is the
    one maximizing c1; the 2-D grid minimum therefore factors into two 1-D
    scans (identical result to evaluating all grid points, verified by
    test_grid_search_separable_scan_matches_dense_grid).
    """
    c1 = u[0] * cos_a + u[1] * sin_a
    i = int(np.argmax(c1))
    inner = c1[i] * sin_b + u[2] * cos_b
    j = int(np.argmax(inner))
    norm2 = float(u @ u)
    return alphas[i], betas[j], norm2 - 2.0 * d * float(inner[j]) + d * d


def grid_search_angles(diff, d, shape):
    """Globally minimize the projection objective on a 2000x1000 grid, then refine."""
    u = np.asarray(diff, float) / shape.as_array
    a0, b0, _ = _grid_min(u, d, _COS_A, _SIN_A, _SIN_B, _COS_B, _ALPHA_GRID, _BETA_GRID)
    da = _ALPHA_GRID[1] - _ALPHA_GRID[0]
    db = _BETA_GRID[1] - _BETA_GRID[0]
    alphas = np.linspace(a0 - 2 * da, a0 + 2 * da, 400)
    betas = np.clip(np.linspace(b0 - 2 * db, b0 + 2 * db, 400), 0.0, np.pi)
    return _grid_min(u, d, np.cos(alphas), np.sin(alphas), np.sin(betas), np.cos(betas), alphas, betas)


def dense_grid_min(diff, d, shape, alphas, betas):
    """Brute-force evaluation of every grid point (parity check for _grid_min)."""
    u = np.asarray(diff, float) / shape.as_array
    c1 = u[0] * np.cos(alphas) + u[1] * np.sin(alphas)
    inner = np.outer(c1, np.sin(betas)) + u[2] * np.cos(betas)
    objective = float(u @ u) - 2.0 * d * inner + d * d
    return float(objective.min())


def magnitude_objective(diff, alpha, beta, shape, d):
    """Unscaled per-row quadratic the magnitude update minimizes."""
    axes = shape.as_array
    wx = np.cos(alpha) * np.sin(beta)
    wy = np.sin(alpha) * np.sin(beta)
    wz = np.cos(beta)
    r = np.asarray(diff, float) - d * axes * np.array([wx, wy, wz])
    return float(r @ r)


def ternary_search_magnitude(diff, alpha, beta, shape, lo, hi, span=50.0, iters=120):
    """Minimize the magnitude quadratic over [lo, hi] by ternary search.

    Plain ternary search bottoms out near sqrt(machine eps); since the
    objective is an exact quadratic, a final three-point parabolic fit
    (objective samples only) recovers the interior vertex to full precision,
    and the result is clipped back into the interval for boundary optima.
    """
    a = lo
    b = hi if np.isfinite(hi) else lo + span
    for _ in range(iters):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if magnitude_objective(diff, alpha, beta, shape, m1) <= magnitude_objective(diff, alpha, beta, shape, m2):
            b = m2
        else:
            a = m1
    c, h = 0.5 * (a + b), 1e-3
    f_minus = magnitude_objective(diff, alpha, beta, shape, c - h)
    f_mid = magnitude_objective(diff, alpha, beta, shape, c)
    f_plus = magnitude_objective(diff, alpha, beta, shape, c + h)
    curvature = f_minus - 2.0 * f_mid + f_plus
    if curvature > 0:
        c = c + 0.5 * h * (f_minus - f_plus) / curvature
    return float(np.clip(c, lo, hi))


def dense_kkt_qp(Q, q, C, e):
    """Solve min 0.5 z'Qz + q'z s.t. C z = e via one dense bordered factorization."""
    n, m = Q.shape[0], C.shape[0]
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = Q
    kkt[:n, n:] = C.T
    kkt[n:, :n] = C
    rhs = np.concatenate([-q, e])
    sol = scipy.linalg.solve(kkt, rhs)
    return sol[:n]


def bernstein_value(n, m, tau):
    """Direct evaluation of one basis function (binomial via scipy)."""
    return comb(n, m, exact=True) * tau**m * (1.0 - tau) ** (n - m)


def finite_difference_derivative(n, m, tau, T, h=1e-6):
    """Central difference of the basis function in real time (duration T).

    The basis functions are polynomials, so evaluating slightly outside
    [0, 1] at the endpoints is exact.
    """
    dtau = h / T
    return (bernstein_value(n, m, tau + dtau) - bernstein_value(n, m, tau - dtau)) / (2.0 * h)


def brute_force_collisions(positions, obstacles, coll_axes):
    """Direct double-loop declared-collision evaluation."""
    positions = np.atleast_2d(positions)
    out = []
    for i in range(len(positions)):
        for j in range(i + 1, len(positions)):
            if np.sum(((positions[i] - positions[j]) / coll_axes) ** 2) < 1.0:
                out.append((f"agent{i}", f"agent{j}"))
    for k, (center, axes) in enumerate(obstacles):
        for i in range(len(positions)):
            if np.sum(((positions[i] - center) / axes) ** 2) < 1.0:
                out.append((f"agent{i}", f"obstacle{k}"))
    return out
