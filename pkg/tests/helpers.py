"""Shared factories and oracles for the test suite."""

import numpy as np


def brute_force_objective_d2(A, lam, penalize_diagonal, grid_points=17, cycles=100):
    """Minimum objective for a 2x2 problem by dense grid plus 1-D refinement.

    Independent of the solver under test: evaluates the objective directly
    and refines each of the 3 free parameters with bounded scalar searches,
    relying on convexity of every coordinate slice.
    """
    from scipy.optimize import minimize_scalar

    a00, a01, a11 = A[0, 0], A[0, 1], A[1, 1]

    def objective(k11, k12, k22):
        det = k11 * k22 - k12 * k12
        if k11 <= 0.0 or k22 <= 0.0 or det <= 0.0:
            return np.inf
        value = k11 * a00 + k22 * a11 + 2.0 * k12 * a01 - np.log(det)
        value += lam * 2.0 * abs(k12)
        if penalize_diagonal:
            value += lam * (k11 + k22)
        return value

    diag_grid = np.geomspace(0.02, 50.0, grid_points)
    best, best_val = (1.0, 0.0, 1.0), objective(1.0, 0.0, 1.0)
    for k11 in diag_grid:
        for k22 in diag_grid:
            bound = 0.999 * np.sqrt(k11 * k22)
            for k12 in np.linspace(-bound, bound, grid_points):
                value = objective(k11, k12, k22)
                if value < best_val:
                    best_val, best = value, (k11, k12, k22)

    k11, k12, k22 = best
    for _ in range(cycles):
        lo = k12 * k12 / k22 + 1e-12
        k11 = minimize_scalar(
            lambda x: objective(x, k12, k22),
            bounds=(lo, lo + 100.0), method="bounded", options={"xatol": 1e-13},
        ).x
        bound = np.sqrt(k11 * k22) - 1e-12
        k12 = minimize_scalar(
            lambda x: objective(k11, x, k22),
            bounds=(-bound, bound), method="bounded", options={"xatol": 1e-13},
        ).x
        lo = k12 * k12 / k11 + 1e-12
        k22 = minimize_scalar(
            lambda x: objective(k11, k12, x),
            bounds=(lo, lo + 100.0), method="bounded", options={"xatol": 1e-13},
        ).x
    return objective(k11, k12, k22)


def random_covariance(rng, d, n=None):
    """Covariance of a random Gaussian sample; strictly PD when n > d."""
    n = n if n is not None else 10 * d
    X = rng.standard_normal((n, d))
    centered = X - X.mean(axis=0)
    A = centered.T @ centered / n
    return (A + A.T) / 2.0


def random_correlated_data(rng, n, d, strength=0.5):
    """Sample rows with a dense correlation structure."""
    base = np.full((d, d), strength)
    np.fill_diagonal(base, 1.0)
    factor = np.linalg.cholesky(base)
    return rng.standard_normal((n, d)) @ factor.T


def random_edge_pairs(rng, d, prob=0.3):
    pairs = set()
    for i in range(d):
        for j in range(i + 1, d):
            if rng.random() < prob:
                pairs.add((i, j))
    return pairs
