"""Internal engine for weighted stationarity systems on the simplex.

Solves for an interior probability vector r with

    sum_i w_i * dD(P_i || r)/dr  +  T' beta  =  C * 1
    sum(r) = 1
    T r = m                      (optional moment block)

by damped Newton in log coordinates (r = exp(u) keeps iterates strictly
positive).  C and beta are unknowns of the square KKT system.  When the
unconstrained solve stalls, a multiplicative-update descent pass polishes
the iterate and Newton is retried once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DivergenceSpec, NumericConfig
from .divergences import eval_mass, grad_second_mass, grad_second_jacobian

_STEP_CAP = 4.0  # max |delta u| per Newton step, guards exp() overflow


@dataclass
class StationaryResult:
    r: np.ndarray
    multiplier: float
    beta: np.ndarray
    stationarity_residual: float
    constraint_residual: float
    iterations: int
    converged: bool


def _weighted_grad(spec, points, weights, r):
    rows = grad_second_mass(spec, points, np.broadcast_to(r, points.shape))
    return weights @ rows


def _weighted_jacobian(spec, points, weights, r):
    if spec.family == "renyi":
        a = float(spec.alpha)
        rows = grad_second_mass(spec, points, np.broadcast_to(r, points.shape))
        G = weights @ rows
        jac = np.diag(-a * G / r)
        jac += (1.0 - a) * (rows * weights[:, None]).T @ rows
        return jac
    jac = np.zeros((r.size, r.size))
    for w, p in zip(weights, points):
        jac += w * grad_second_jacobian(spec, p, r)
    return jac


def _objective(spec, points, weights, r):
    return float(weights @ eval_mass(spec, points, np.broadcast_to(r, points.shape)))


def _kkt_residual(spec, points, weights, r, C, beta, T, m):
    G = _weighted_grad(spec, points, weights, r)
    stat = G + (T.T @ beta if T is not None else 0.0) - C
    out = [stat, np.array([r.sum() - 1.0])]
    if T is not None:
        out.append(T @ r - m)
    return np.concatenate(out), G


def _newton(spec, points, weights, cfg, T, m, r0):
    n = r0.size
    K = 0 if T is None else T.shape[0]
    u = np.log(r0)
    beta = np.zeros(K)
    r = np.exp(u)
    G = _weighted_grad(spec, points, weights, r)
    C = float(r @ (G + (T.T @ beta if T is not None else 0.0)))

    # Aim an order below the reported tolerance so the exact renormalization
    # at the end cannot push residuals back over it.
    target = max(0.1 * cfg.solver_tol, 5e-15)
    F, G = _kkt_residual(spec, points, weights, r, C, beta, T, m)
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        if np.max(np.abs(F)) <= target:
            return r, C, beta, iterations - 1, True

        jac = np.zeros((n + 1 + K, n + 1 + K))
        JG = _weighted_jacobian(spec, points, weights, r)
        jac[:n, :n] = JG * r[None, :]
        jac[:n, n] = -1.0
        jac[n, :n] = r
        if K:
            jac[:n, n + 1:] = T.T
            jac[n + 1:, :n] = T * r[None, :]

        try:
            delta = np.linalg.solve(jac, -F)
        except np.linalg.LinAlgError:
            jac[np.diag_indices_from(jac)] += 1e-12
            delta = np.linalg.solve(jac, -F)

        du, dC, dbeta = delta[:n], delta[n], delta[n + 1:]
        cap = np.max(np.abs(du))
        if cap > _STEP_CAP:
            delta *= _STEP_CAP / cap
            du, dC, dbeta = delta[:n], delta[n], delta[n + 1:]

        norm0 = np.linalg.norm(F)
        s = 1.0
        while True:
            u_new = u + s * du
            C_new = C + s * dC
            beta_new = beta + s * dbeta
            r_new = np.exp(u_new)
            F_new, G = _kkt_residual(spec, points, weights, r_new, C_new, beta_new, T, m)
            if np.linalg.norm(F_new) <= (1.0 - 1e-4 * s) * norm0 or s < 1e-10:
                break
            s *= 0.5
        if s < 1e-10:
            return r, C, beta, iterations, False
        u, C, beta, r, F = u_new, C_new, beta_new, r_new, F_new

    return r, C, beta, iterations, False


def _mirror_polish(spec, points, weights, r, cfg, steps=400):
    # Multiplicative updates with adaptive step; descends the weighted
    # divergence objective while staying on the simplex.
    best = r
    best_val = _objective(spec, points, weights, r)
    eta = 0.5
    for _ in range(steps):
        g = _weighted_grad(spec, points, weights, best)
        g = g - best @ g
        trial = best * np.exp(-eta * np.clip(g, -50.0, 50.0))
        trial = np.maximum(trial, 10.0 * cfg.interior_floor)
        trial /= trial.sum()
        val = _objective(spec, points, weights, trial)
        if val < best_val:
            best, best_val = trial, val
            eta = min(eta * 1.5, 10.0)
        else:
            eta *= 0.5
            if eta < 1e-12:
                break
    return best


def solve_weighted_stationarity(
    spec: DivergenceSpec,
    points: np.ndarray,
    weights: np.ndarray,
    cfg: NumericConfig,
    T: Optional[np.ndarray] = None,
    m: Optional[np.ndarray] = None,
    r0: Optional[np.ndarray] = None,
) -> StationaryResult:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if r0 is None:
        r0 = weights @ points
    r0 = np.maximum(np.asarray(r0, dtype=float), 10.0 * cfg.interior_floor)

    def finalize(r, beta, iters):
        # Renormalize exactly, then report residuals with the multiplier
        # taken as the mass-weighted mean of the stationarity field.
        r = r / r.sum()
        G = _weighted_grad(spec, points, weights, r)
        field = G + (T.T @ beta if T is not None else 0.0)
        C = float(r @ field)
        stat = float(np.max(np.abs(field - C)))
        con = abs(r.sum() - 1.0)
        if T is not None:
            con = max(con, float(np.max(np.abs(T @ r - m))))
        converged = stat <= cfg.solver_tol and con <= cfg.solver_tol
        return StationaryResult(r, C, beta, stat, con, iters, converged)

    r, C, beta, iters, _ = _newton(spec, points, weights, cfg, T, m, r0)
    result = finalize(r, beta, iters)
    if not result.converged and T is None:
        polished = _mirror_polish(spec, points, weights, r, cfg)
        r, C, beta, extra, _ = _newton(spec, points, weights, cfg, T, m, polished)
        result = finalize(r, beta, iters + extra)
    return result
