"""BFGS minimization with Armijo backtracking.

Small and dependency-free on purpose: the training problems here are
low-dimensional, need bit-reproducible trajectories across platforms, and
occasionally see hinge kinks from the directional penalty, where we want
the well-defined behavior "line search fails, stop where we are" rather
than a solver-specific fallback.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    n_iter: int
    converged: bool
    history: tuple[float, ...]  # accepted objective values, strictly decreasing


def minimize_bfgs(
    fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0,
    grad_tol: float = 1e-6,
    max_iters: int = 500,
    armijo_c1: float = 1e-4,
    backtrack_factor: float = 0.5,
    max_backtracks: int = 60,
) -> MinimizeResult:
    """Minimize fun_grad, which returns (value, gradient) at a point.

    Convergence is declared on the gradient's infinity norm. Every
    accepted step satisfies the Armijo condition, so the recorded history
    never increases.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fun_grad(x)
    f = float(f)
    g = np.asarray(g, dtype=np.float64)
    history = [f]
    n = x.shape[0]
    H = np.eye(n)
    n_iter = 0
    # overflow in the linear algebra is tolerated, not warned about: a
    # non-finite value fails the Armijo guard, and objectives that raise
    # on non-finite losses surface their own error from the probe
    with np.errstate(over="ignore", invalid="ignore"):
        for n_iter in range(1, max_iters + 1):
            if float(np.max(np.abs(g))) < grad_tol:
                n_iter -= 1
                break
            p = -H @ g
            gp = float(g @ p)
            if gp >= 0.0:
                # curvature information went bad; restart from steepest descent
                H = np.eye(n)
                p = -g
                gp = float(g @ p)
                if gp >= 0.0:
                    break
            alpha = 1.0
            accepted = False
            for _ in range(max_backtracks):
                x_new = x + alpha * p
                f_new, g_new = fun_grad(x_new)
                f_new = float(f_new)
                if np.isfinite(f_new) and f_new <= f + armijo_c1 * alpha * gp:
                    accepted = True
                    break
                alpha *= backtrack_factor
            if not accepted:
                # a kink or the floating-point floor; no descent step exists here
                break
            g_new = np.asarray(g_new, dtype=np.float64)
            step = x_new - x
            y_vec = g_new - g
            sy = float(step @ y_vec)
            if sy > 1e-10 * float(np.linalg.norm(step)) * float(np.linalg.norm(y_vec)):
                rho = 1.0 / sy
                Hy = H @ y_vec
                H = (
                    H
                    - rho * (np.outer(step, Hy) + np.outer(Hy, step))
                    + rho * (1.0 + rho * float(y_vec @ Hy)) * np.outer(step, step)
                )
            x, f, g = x_new, f_new, g_new
            history.append(f)
    converged = float(np.max(np.abs(g))) < grad_tol
    return MinimizeResult(
        x=x,
        fun=f,
        grad=g,
        n_iter=n_iter,
        converged=converged,
        history=tuple(history),
    )
