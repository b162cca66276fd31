"""Small optimization routines shared by the estimators.

Includes Euclidean simplex projection, a projected subgradient method with
best-iterate tracking, and a limited-memory quasi-Newton method (two-loop
recursion, Armijo backtracking) for the smooth objectives.  All routines are
deterministic given their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "project_simplex",
    "simplex_lsq",
    "OptResult",
    "subgradient_min",
    "lbfgs_min",
    "projected_gradient_min",
]


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=np.float64)
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, n + 1) > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def simplex_lsq(rows: np.ndarray, v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Minimize ||rows.T @ eta - v|| over the probability simplex.

    Active-set method: repeatedly solve the equality-constrained problem on
    the passive support via its KKT system, stepping back to the boundary
    when a coefficient would go negative, until the KKT multipliers certify
    optimality.  Exact up to linear-algebra precision; the BB projected
    gradient stalls on the degenerate instances this sees.
    """
    rows = np.asarray(rows, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    m = rows.shape[0]
    if m == 1:
        return np.ones(1)
    eta = np.zeros(m)
    eta[int(np.argmin(((rows - v) ** 2).sum(axis=1)))] = 1.0
    passive = eta > 0
    for _ in range(4 * m):
        idx = np.flatnonzero(passive)
        sub = rows[idx]
        p = idx.size
        kkt = np.zeros((p + 1, p + 1))
        kkt[:p, :p] = sub @ sub.T
        kkt[:p, p] = 1.0
        kkt[p, :p] = 1.0
        rhs = np.concatenate([sub @ v, [1.0]])
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        cand = np.zeros(m)
        cand[idx] = sol[:p]
        if np.any(cand[idx] < -tol):
            # step toward the candidate until the first coefficient hits zero
            neg = idx[cand[idx] < 0]
            alphas = eta[neg] / (eta[neg] - cand[neg])
            alpha = float(alphas.min())
            eta = eta + alpha * (cand - eta)
            eta[eta < tol] = 0.0
            passive = eta > 0
            continue
        eta = cand
        grad = rows @ (rows[passive].T @ eta[passive] - v)
        mu = -grad[passive].mean() if passive.any() else 0.0
        outside = ~passive
        if not outside.any() or np.all(grad[outside] + mu >= -1e-10 * max(1.0, np.abs(grad).max())):
            break
        j = int(np.flatnonzero(outside)[np.argmin(grad[outside] + mu)])
        passive[j] = True
    return eta


@dataclass
class OptResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool
    grad_norm: float = float("nan")


def subgradient_min(
    fun,
    subgrad,
    x0,
    project=None,
    step_c: float = 1.0,
    max_iters: int = 1000,
    tol: float = 1e-9,
    window: int = 25,
) -> OptResult:
    """Projected subgradient descent with step c/sqrt(t), tracking the best iterate.

    Converged when the relative change of the best objective over ``window``
    iterations drops below ``tol``.
    """
    x = np.array(x0, dtype=np.float64)
    if project is not None:
        x = project(x)
    best_x = x.copy()
    best_val = fun(x)
    window_ref = best_val
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        g = subgrad(x)
        x = x - (step_c / np.sqrt(it)) * g
        if project is not None:
            x = project(x)
        val = fun(x)
        if val < best_val:
            best_val = val
            best_x = x.copy()
        if it % window == 0:
            denom = max(1.0, abs(window_ref))
            if (window_ref - best_val) / denom < tol:
                converged = True
                break
            window_ref = best_val
    return OptResult(best_x, best_val, it, converged)


def lbfgs_min(
    value_and_grad,
    x0,
    max_iters: int = 500,
    gtol: float = 1e-8,
    tol: float = 1e-12,
    history: int = 10,
    armijo_c: float = 1e-4,
) -> OptResult:
    """Limited-memory BFGS with two-loop recursion and Armijo backtracking."""
    x = np.array(x0, dtype=np.float64)
    f, g = value_and_grad(x)
    s_hist, y_hist, rho_hist = [], [], []
    flat = 0
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        gnorm = np.linalg.norm(g)
        if gnorm <= gtol:
            converged = True
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if y_hist:
            gamma = (s_hist[-1] @ y_hist[-1]) / (y_hist[-1] @ y_hist[-1])
            q *= gamma
        for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        d = -q
        slope = g @ d
        if slope >= 0:  # not a descent direction; fall back to steepest descent
            d = -g
            slope = -(gnorm ** 2)
        step = 1.0
        stalled = False
        while True:
            x_new = x + step * d
            f_new, g_new = value_and_grad(x_new)
            if f_new <= f + armijo_c * step * slope:
                break
            step *= 0.5
            if step < 1e-16:  # no descent at machine precision
                x_new, f_new, g_new = x, f, g
                stalled = True
                break
        if stalled:
            converged = True
            x, f, g = x_new, f_new, g_new
            break
        s = x_new - x
        y = g_new - g
        if s @ y > 1e-12 * max(1.0, np.linalg.norm(s) * np.linalg.norm(y)):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / (s @ y))
            if len(s_hist) > history:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)
        if tol > 0 and abs(f - f_new) / max(1.0, abs(f)) < tol:
            flat += 1
            if flat >= 5:
                x, f, g = x_new, f_new, g_new
                converged = True
                break
        else:
            flat = 0
        x, f, g = x_new, f_new, g_new
    return OptResult(x, f, it, converged, grad_norm=float(np.linalg.norm(g)))


def projected_gradient_min(
    value_and_grad,
    x0,
    project,
    max_iters: int = 2000,
    gtol: float = 1e-8,
    tol: float = 1e-12,
    armijo_c: float = 1e-4,
    memory: int = 10,
) -> OptResult:
    """Projected gradient descent with nonmonotone Armijo backtracking.

    Uses a Barzilai-Borwein initial step checked against the worst of the
    last ``memory`` objective values.  Converged when the projected gradient
    step is small or the objective stops improving for ``memory`` iterations.
    """
    x = project(np.array(x0, dtype=np.float64))
    f, g = value_and_grad(x)
    step = 1.0
    x_prev, g_prev = None, None
    recent = [f]
    best = f
    stalled = 0
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        pg = x - project(x - g)
        if np.linalg.norm(pg) <= gtol:
            converged = True
            break
        if x_prev is not None:
            s = x - x_prev
            y = g - g_prev
            sy = s @ y
            if sy > 1e-16:
                step = (s @ s) / sy
            step = min(max(step, 1e-10), 1e10)
        f_ref = max(recent)
        t = step
        while True:
            x_new = project(x - t * g)
            f_new, g_new = value_and_grad(x_new)
            d = x_new - x
            if f_new <= f_ref + armijo_c * (g @ d) or np.linalg.norm(d) < 1e-16:
                break
            t *= 0.5
            if t < 1e-16:
                x_new, f_new, g_new = x, f, g
                break
        if best - f_new > tol * (1.0 + abs(best)):
            best = f_new
            stalled = 0
        else:
            stalled += 1
        x_prev, g_prev = x, g
        x, f, g = x_new, f_new, g_new
        recent.append(f)
        if len(recent) > memory:
            recent.pop(0)
        if stalled >= 5 * memory:
            converged = True
            break
    return OptResult(x, f, it, converged, grad_norm=float(np.linalg.norm(g)))
