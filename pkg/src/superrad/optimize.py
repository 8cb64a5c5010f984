"""Tune the switch time and slice widths for the strongest burst.

The J_1-zero prescription is optimal only as ``gamma -> 0``. Here a
bounded Nelder-Mead simplex searches the switch time ``t_p`` and the
slice fractions, seeded at the finite-gamma domain prescription.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from superrad.cascade import PulseMetrics, SliceStack, cascade_numeric, pulse_metrics
from superrad.domains import domain_boundaries
from superrad.errors import DomainError, SuperradError
from superrad.propagation import TimeGrid
from superrad.specfun import j1_zero

SAMPLES_PER_RATE = 128
MAX_SLICES = 8


@dataclass
class OptimizationResult:
    best_stack: SliceStack
    best_metrics: PulseMetrics
    evaluations: int
    converged: bool
    baseline_stack: SliceStack
    baseline_gain: float


def prescribed_stack(n_slices: int, b_total: float, gamma: float, iterations: int = 4) -> SliceStack:
    """Slices cut at the coherence zeros, with ``t_p`` chosen so that the
    ``n_slices``-th zero lands on the rear face."""
    t_p = (j1_zero(n_slices) / 2.0) ** 2 / b_total
    dec = None
    for _ in range(iterations):
        dec = domain_boundaries(1.2 * b_total, gamma, t_p)
        if len(dec) < n_slices:
            break
        t_p = dec.boundaries_bt[n_slices - 1] / b_total
    if dec is None or len(dec) < n_slices:
        return SliceStack.from_bt(np.diff([0.0] + [(j1_zero(k) / 2) ** 2 for k in range(1, n_slices + 1)]),
                                  t_p, gamma)
    cuts = np.concatenate([[0.0], dec.boundaries_bt[: n_slices - 1] / t_p, [b_total]])
    return SliceStack(tuple(np.diff(cuts)), t_p, gamma)


def burst_gain(stack: SliceStack, spacing: float) -> PulseMetrics:
    """Burst metrics of a stack on a grid of step ``<= spacing`` with ``t_p``
    on a node, reaching one ``1/b_1`` past the switch."""
    n_before = max(2, math.ceil(stack.t_p / spacing))
    dt = stack.t_p / n_before
    n_after = max(2, math.ceil(1.0 / (stack.slice_b[0] * dt)))
    grid = TimeGrid(0.0, (n_before + n_after) * dt, n_before + n_after + 1)
    out = cascade_numeric(stack, grid=grid)
    return pulse_metrics(out, t_from=stack.t_p)


def _nelder_mead(func, x0, steps, lower, upper, budget, xatol=1e-6, fatol=1e-9, include=()):
    """Minimize ``func`` inside a box; at most ``budget`` evaluations.

    Returns ``(x_best, f_best, n_eval, converged)``. Points outside the box
    are clipped onto it. Extra points in ``include`` replace the worst
    initial vertices when they are better.
    """
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    n = len(x0)
    count = 0
    best = [None, math.inf]

    def f(x):
        nonlocal count
        x = np.clip(x, lower, upper)
        count += 1
        val = func(x)
        if val < best[1]:
            best[0], best[1] = x.copy(), val
        return x, val

    simplex = [np.asarray(x0, float)]
    for i in range(n):
        v = simplex[0].copy()
        v[i] += steps[i]
        if v[i] > upper[i]:
            v[i] = simplex[0][i] - steps[i]
        simplex.append(v)
    pts, vals = [], []
    for v in simplex:
        if count >= budget:
            break
        x, fx = f(v)
        pts.append(x)
        vals.append(fx)
    for v in include:
        if count >= budget:
            break
        x, fx = f(np.asarray(v, float))
        worst = int(np.argmax(vals))
        if fx < vals[worst]:
            pts[worst], vals[worst] = x, fx
    if len(pts) < n + 1:
        return best[0], best[1], count, False

    converged = False
    while count < budget:
        order = np.argsort(vals)
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        spread = max(np.max(np.abs(p - pts[0])) for p in pts[1:])
        if spread <= xatol and vals[-1] - vals[0] <= fatol:
            converged = True
            break
        centroid = np.mean(pts[:-1], axis=0)
        xr, fr = f(centroid + (centroid - pts[-1]))
        if fr < vals[0]:
            if count >= budget:
                pts[-1], vals[-1] = xr, fr
                break
            xe, fe = f(centroid + 2.0 * (centroid - pts[-1]))
            pts[-1], vals[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
        else:
            if count >= budget:
                break
            if fr < vals[-1]:
                xc, fc = f(centroid + 0.5 * (xr - centroid))
                accept = fc <= fr
            else:
                xc, fc = f(centroid + 0.5 * (pts[-1] - centroid))
                accept = fc < vals[-1]
            if accept:
                pts[-1], vals[-1] = xc, fc
            else:
                for i in range(1, len(pts)):
                    if count >= budget:
                        break
                    pts[i], vals[i] = f(pts[0] + 0.5 * (pts[i] - pts[0]))
    return best[0], best[1], count, converged


def optimize_stack(n_slices: int, b_total: float, gamma: float, budget: int = 200,
                   start_tp: float | None = None, include_baseline: bool = True) -> OptimizationResult:
    """Maximize the burst intensity over ``t_p`` and the interior cuts.

    The total rate ``b_total`` is held fixed. Variables are ``b_total * t_p``
    and the first ``n_slices - 1`` slice fractions, each kept positive by
    box bounds; the last slice takes what is left. ``start_tp`` moves the
    initial simplex away from the prescription (the prescription is still
    evaluated and kept as a fallback when ``include_baseline`` is true).
    """
    if not 1 <= n_slices <= MAX_SLICES:
        raise DomainError(f"n_slices must be in [1, {MAX_SLICES}]")
    if budget < 50:
        raise DomainError("budget must be at least 50")
    if not b_total > 0 or not gamma >= 0:
        raise DomainError("b_total must be positive and gamma >= 0")

    baseline = prescribed_stack(n_slices, b_total, gamma)
    spacing = 1.0 / (SAMPLES_PER_RATE * baseline.slice_b[0])
    base_x = np.concatenate([[b_total * baseline.t_p], np.asarray(baseline.slice_b[:-1]) / b_total])
    x0 = base_x.copy()
    if start_tp is not None:
        x0[0] = b_total * start_tp
    lower = np.concatenate([[0.25 * base_x[0]], np.full(n_slices - 1, 1e-3)])
    upper = np.concatenate([[4.0 * base_x[0]], np.full(n_slices - 1, 1.0)])
    steps = np.concatenate([[0.05 * base_x[0]], 0.1 * base_x[1:]])

    def to_stack(x):
        fractions = list(x[1:])
        last = 1.0 - math.fsum(fractions)
        if last <= 1e-3:
            return None
        return SliceStack(tuple(b_total * np.array(fractions + [last])), x[0] / b_total, gamma)

    cache: dict[tuple, float] = {}

    def objective(x):
        key = tuple(np.round(x, 15))
        if key in cache:
            return cache[key]
        stack = to_stack(x)
        if stack is None:
            val = 0.0
        else:
            try:
                val = -burst_gain(stack, spacing).peak_intensity_gain
            except SuperradError:
                val = 0.0
        cache[key] = val
        return val

    include = [base_x] if include_baseline and start_tp is not None else []
    x_best, f_best, n_eval, converged = _nelder_mead(objective, x0, steps, lower, upper, budget,
                                                     include=include)
    baseline_metrics = burst_gain(baseline, spacing)
    best_stack = to_stack(x_best)
    best_metrics = burst_gain(best_stack, spacing)
    if include_baseline and baseline_metrics.peak_intensity_gain > best_metrics.peak_intensity_gain:
        best_stack, best_metrics = baseline, baseline_metrics
    return OptimizationResult(best_stack, best_metrics, n_eval, converged,
                              baseline, baseline_metrics.peak_intensity_gain)
