"""Limited-memory quasi-Newton descent with Armijo backtracking.

Deterministic and dependency-free: identical inputs produce identical
iterates, which the reproducibility contract of the solver commands
relies on.  Non-finite trial energies shrink the step; a non-finite
start is reported to the caller, who decides whether to discard the
restart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    converged: bool
    n_evals: int


def minimize_lbfgs(fun_grad, x0, max_iters=5000, grad_tol=1e-8, memory=10,
                   armijo=1e-4, backtrack=0.5, max_linesearch=40):
    """Minimize f given ``fun_grad(x) -> (f, grad)``.

    Convergence is declared at ||grad||_inf <= grad_tol * (1 + |f|) *
    sqrt(n): the tolerance scales with the objective and with the problem
    size, since the attainable gradient floor grows with the number of
    unknowns feeding each energy evaluation.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun_grad(x)
    n_evals = 1
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise SolverError("non-finite energy at the start point")
    size_scale = max(1.0, float(np.sqrt(x.size)))

    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []

    def gnorm(grad):
        return float(np.max(np.abs(grad))) if grad.size else 0.0

    def tol_at(fval):
        return grad_tol * (1.0 + abs(fval)) * size_scale

    it = 0
    while it < max_iters:
        gn = gnorm(g)
        if gn <= tol_at(f):
            return MinimizeResult(x, f, gn, it, True, n_evals)

        p = _two_loop_direction(g, s_hist, y_hist, rho_hist)
        slope = float(np.dot(g, p))
        if not np.isfinite(slope) or slope >= 0:
            p = -g
            slope = -float(np.dot(g, g))

        step = 1.0 if s_hist else min(1.0, 1.0 / max(gn, 1e-30))
        accepted = False
        for _ in range(max_linesearch):
            x_new = x + step * p
            f_new, g_new = fun_grad(x_new)
            n_evals += 1
            if np.isfinite(f_new) and f_new <= f + armijo * step * slope:
                accepted = True
                break
            step *= backtrack
        if not accepted:
            if np.array_equal(p, -g):
                # no decrease along steepest descent: numerically stationary
                return MinimizeResult(x, f, gn, it, gn <= tol_at(f), n_evals)
            s_hist.clear()
            y_hist.clear()
            rho_hist.clear()
            it += 1
            continue

        if np.all(np.isfinite(g_new)):
            s = x_new - x
            y = g_new - g
            sy = float(np.dot(s, y))
            if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
                s_hist.append(s)
                y_hist.append(y)
                rho_hist.append(1.0 / sy)
                if len(s_hist) > memory:
                    s_hist.pop(0)
                    y_hist.pop(0)
                    rho_hist.pop(0)
        else:
            s_hist.clear()
            y_hist.clear()
            rho_hist.clear()
        x, f, g = x_new, f_new, g_new
        it += 1

    return MinimizeResult(x, f, gnorm(g), it, gnorm(g) <= tol_at(f), n_evals)


def _two_loop_direction(g, s_hist, y_hist, rho_hist):
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * float(np.dot(s, q))
        alphas.append(a)
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        gamma = float(np.dot(s, y)) / max(float(np.dot(y, y)), 1e-300)
        q *= gamma
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * float(np.dot(y, q))
        q += (a - b) * s
    return -q
