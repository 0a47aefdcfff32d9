"""Budgeted Nelder-Mead simplex search."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    n_evals: int
    n_iterations: int
    n_nonfinite: int
    reason: str
    trace: list = field(default_factory=list)  # (evaluations so far, best f) per iteration


class _Budget(Exception):
    pass


def coefficients(dim: int, adaptive: bool = False):
    """``(reflect, expand, contract, shrink)``; the adaptive set scales with dimension."""
    if not adaptive:
        return REFLECT, EXPAND, CONTRACT, SHRINK
    return 1.0, 1.0 + 2.0 / dim, 0.75 - 0.5 / dim, 1.0 - 1.0 / dim


def nelder_mead(objective, x0, budget: int, scale=0.1, collapse_tol=1e-12,
                adaptive: bool = False) -> NelderMeadResult:
    """Minimise ``objective`` from ``x0`` with at most ``budget`` calls.

    ``scale`` is the initial simplex step, a scalar or one value per axis.
    Non-finite objective values are treated as ``+inf``.  The search stops
    when the budget is spent or every vertex lies within ``collapse_tol``
    (relative to ``max(1, |x_best|)``) of the best vertex.  ``adaptive``
    switches to dimension-dependent coefficients, which keep the simplex
    from degenerating in high dimension.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    dim = x0.size
    reflect, expand, contract, shrink = coefficients(dim, adaptive)
    if budget < dim + 2:
        raise ContractError(f"budget {budget} is below dim + 2 = {dim + 2}")
    steps = np.broadcast_to(np.asarray(scale, dtype=float), (dim,))
    state = {"evals": 0, "nonfinite": 0, "best": (np.inf, x0.copy())}

    def f(x):
        if state["evals"] >= budget:
            raise _Budget
        state["evals"] += 1
        value = float(objective(x))
        if not np.isfinite(value):
            state["nonfinite"] += 1
            value = np.inf
        if value < state["best"][0]:
            state["best"] = (value, np.array(x, copy=True))
        return value

    simplex = np.vstack([x0] + [x0 + steps[i] * np.eye(dim)[i] for i in range(dim)])
    values = np.full(dim + 1, np.inf)
    trace = []
    iterations = 0
    reason = "budget"
    try:
        for i in range(dim + 1):
            values[i] = f(simplex[i])
        while True:
            order = np.argsort(values, kind="stable")
            simplex, values = simplex[order], values[order]
            trace.append((state["evals"], float(values[0])))
            spread = np.max(np.abs(simplex[1:] - simplex[0]))
            if spread <= collapse_tol * max(1.0, np.max(np.abs(simplex[0]))):
                reason = "collapse"
                break
            iterations += 1
            centroid = simplex[:-1].mean(axis=0)
            worst = simplex[-1]
            xr = centroid + reflect * (centroid - worst)
            fr = f(xr)
            if fr < values[0]:
                xe = centroid + expand * (xr - centroid)
                fe = f(xe)
                if fe < fr:
                    simplex[-1], values[-1] = xe, fe
                else:
                    simplex[-1], values[-1] = xr, fr
                continue
            if fr < values[-2]:
                simplex[-1], values[-1] = xr, fr
                continue
            if fr < values[-1]:
                xc = centroid + contract * (xr - centroid)
                fc = f(xc)
                if fc <= fr:
                    simplex[-1], values[-1] = xc, fc
                    continue
            else:
                xc = centroid + contract * (worst - centroid)
                fc = f(xc)
                if fc < values[-1]:
                    simplex[-1], values[-1] = xc, fc
                    continue
            for j in range(1, dim + 1):
                xs = simplex[0] + shrink * (simplex[j] - simplex[0])
                simplex[j], values[j] = xs, f(xs)
    except _Budget:
        pass
    f_best, x_best = state["best"]
    if not trace or trace[-1] != (state["evals"], f_best):
        trace.append((state["evals"], f_best))
    return NelderMeadResult(x=x_best, fun=f_best, n_evals=state["evals"],
                            n_iterations=iterations, n_nonfinite=state["nonfinite"],
                            reason=reason, trace=trace)
