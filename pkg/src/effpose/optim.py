"""Least-squares and simplex solvers used by calibration and pose solving.

Both solvers are deterministic: identical inputs and configuration
produce identical iteration traces. Callbacks must be pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NonFiniteObjectiveError(ValueError):
    """Objective or residual evaluated to a non-finite value at the start."""


@dataclass(frozen=True)
class OptResult:
    solution: np.ndarray
    final_objective: float
    iterations: int
    converged: bool
    message: str = ""


@dataclass(frozen=True)
class LMConfig:
    """Damped Gauss-Newton settings.

    The damping schedule multiplies lambda by ``damping_up`` on a
    rejected step and divides by ``damping_down`` on an accepted one.
    """

    max_iterations: int = 200
    residual_tolerance: float = 1e-12
    step_tolerance: float = 1e-12
    initial_damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 10.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("residual_tolerance", "step_tolerance", "initial_damping",
                     "damping_up", "damping_down"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class NMConfig:
    """Nelder-Mead settings with the standard coefficient set (1, 2, 0.5, 0.5)."""

    max_iterations: int = 2000
    simplex_tolerance: float = 1e-10
    initial_step: np.ndarray | float = 0.1
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.simplex_tolerance <= 0:
            raise ValueError("simplex_tolerance must be positive")
        if self.reflection <= 0:
            raise ValueError("reflection must be > 0")
        if self.expansion <= 1:
            raise ValueError("expansion must be > 1")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction must be in (0, 1)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must be in (0, 1)")


def finite_difference_jacobian(residual_fn, x: np.ndarray, r0: np.ndarray) -> np.ndarray:
    """Forward-difference Jacobian with per-coordinate step max(1e-7, 1e-7*|x_i|)."""
    n = x.size
    J = np.empty((r0.size, n))
    for i in range(n):
        h = max(1e-7, 1e-7 * abs(x[i]))
        xp = x.copy()
        xp[i] += h
        J[:, i] = (np.asarray(residual_fn(xp), dtype=float) - r0) / h
    return J


def levenberg_marquardt(residual_fn, x0, cfg: LMConfig = LMConfig(),
                        jacobian_fn=None) -> OptResult:
    """Minimize ``sum(residual_fn(x)**2)`` from ``x0``.

    The returned solution never has a larger sum of squares than the
    starting point; ``converged`` means the step norm, gradient norm or
    cost reduction fell under the configured tolerances.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(residual_fn(x), dtype=float)
    if not np.all(np.isfinite(r)):
        raise NonFiniteObjectiveError("residual is non-finite at the initial point")
    if r.size < x.size:
        raise ValueError(f"need residual count >= parameter count ({r.size} < {x.size})")
    cost = float(r @ r)
    lam = cfg.initial_damping

    for it in range(1, cfg.max_iterations + 1):
        J = (np.asarray(jacobian_fn(x), dtype=float) if jacobian_fn is not None
             else finite_difference_jacobian(residual_fn, x, r))
        g = J.T @ r
        if np.linalg.norm(g, np.inf) < cfg.residual_tolerance:
            return OptResult(x, cost, it, True, "gradient below tolerance")
        JtJ = J.T @ J
        diag = np.diag(JtJ).copy()
        diag[diag < 1e-12] = 1e-12

        # Try steps with increasing damping until one reduces the cost.
        accepted = False
        last_step_norm = np.inf
        while True:
            A = JtJ + lam * np.diag(diag)
            try:
                step = np.linalg.solve(A, -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                last_step_norm = float(np.linalg.norm(step))
                x_new = x + step
                r_new = np.asarray(residual_fn(x_new), dtype=float)
                cost_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
                if cost_new < cost:
                    reduction = cost - cost_new
                    x, r, cost = x_new, r_new, cost_new
                    lam = max(lam / cfg.damping_down, 1e-14)
                    accepted = True
                    if last_step_norm < cfg.step_tolerance or reduction < cfg.residual_tolerance:
                        return OptResult(x, cost, it, True, "step below tolerance")
                    break
            lam *= cfg.damping_up
            if lam > 1e14:
                break
        if not accepted:
            # Damping maxed out without improvement: numerically stationary.
            converged = last_step_norm < cfg.step_tolerance
            return OptResult(x, cost, it, converged, "no descending step found")

    return OptResult(x, cost, cfg.max_iterations, False, "iteration cap reached")


def nelder_mead(objective, x0, cfg: NMConfig = NMConfig()) -> OptResult:
    """Downhill-simplex minimization from ``x0``.

    The initial simplex is ``x0`` plus one vertex per parameter offset
    by ``initial_step``. Converged means both the simplex diameter and
    the objective spread fell under ``simplex_tolerance``.
    """
    x0 = np.asarray(x0, dtype=float).copy()
    n = x0.size
    steps = np.broadcast_to(np.asarray(cfg.initial_step, dtype=float), (n,)).copy()
    if np.any(steps == 0):
        raise ValueError("initial_step entries must be nonzero")

    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        simplex[i + 1, i] += steps[i]
    fvals = np.array([float(objective(v)) for v in simplex])
    if not np.all(np.isfinite(fvals)):
        raise NonFiniteObjectiveError("objective is non-finite on the initial simplex")

    rho, chi, gam, sig = cfg.reflection, cfg.expansion, cfg.contraction, cfg.shrink

    for it in range(1, cfg.max_iterations + 1):
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]

        diameter = float(np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1)))
        spread = float(fvals[-1] - fvals[0])
        if diameter < cfg.simplex_tolerance and spread < cfg.simplex_tolerance:
            return OptResult(simplex[0], fvals[0], it, True, "simplex collapsed")

        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + rho * (centroid - simplex[-1])
        fr = float(objective(xr))

        if fr < fvals[0]:
            xe = centroid + rho * chi * (centroid - simplex[-1])
            fe = float(objective(xe))
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                # Outside contraction.
                xc = centroid + gam * rho * (centroid - simplex[-1])
                fc = float(objective(xc))
                better, fbetter = (xc, fc) if fc <= fr else (None, None)
            else:
                # Inside contraction.
                xc = centroid - gam * (centroid - simplex[-1])
                fc = float(objective(xc))
                better, fbetter = (xc, fc) if fc < fvals[-1] else (None, None)
            if better is not None:
                simplex[-1], fvals[-1] = better, fbetter
            else:
                # Shrink every vertex toward the best one.
                for i in range(1, n + 1):
                    simplex[i] = simplex[0] + sig * (simplex[i] - simplex[0])
                    fvals[i] = float(objective(simplex[i]))

    order = np.argsort(fvals, kind="stable")
    return OptResult(simplex[order[0]], fvals[order[0]], cfg.max_iterations, False,
                     "iteration cap reached")
