"""Coherence domains along the absorber at the switching time.

At a fixed time ``t_p`` the step-driven coherence changes sign along the
depth coordinate (cumulative ``b``). The zeros split the sample into
domains of opposite phase; cutting the absorber there gives the slice
stack used by :mod:`superrad.cascade`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from superrad.cascade import SliceStack
from superrad.errors import DomainError
from superrad.propagation import coherence_depth, step_response_depth

#: Initial sign-scan nodes per 10 units of ``b t_p``.
SCAN_NODES_PER_10 = 512
BISECTION_TOL = 1e-10


@dataclass
class SpatialProfile:
    """Field and normalized coherence versus depth at one instant.

    ``depth`` is cumulative ``b``; ``field`` is in units of the input
    amplitude and ``im_coherence`` in units of amplitude x ``t_p``.
    """

    depth: np.ndarray
    field: np.ndarray
    im_coherence: np.ndarray
    t_p: float

    @property
    def depth_bt(self) -> np.ndarray:
        return self.depth * self.t_p


@dataclass
class DomainDecomposition:
    """Coherence zeros (in units of ``b t_p``) and the widths between them."""

    boundaries_bt: np.ndarray
    slice_bt: np.ndarray
    t_p: float

    def __len__(self) -> int:
        return len(self.boundaries_bt)


def _check(b_l: float, gamma: float, t_p: float) -> None:
    if not b_l > 0:
        raise DomainError("b_l must be positive")
    if not t_p > 0:
        raise DomainError("t_p must be positive")
    if not gamma >= 0:
        raise DomainError("gamma must be >= 0")


def spatial_profiles(b_l: float, gamma: float, t_p: float, n_depth: int = 512) -> SpatialProfile:
    """Sample the step-driven field and coherence on ``n_depth`` depth nodes."""
    _check(b_l, gamma, t_p)
    if n_depth < 64:
        raise DomainError("n_depth must be at least 64")
    depth = np.linspace(0.0, b_l, n_depth)
    field = step_response_depth(depth, gamma, t_p)
    coherence = coherence_depth(depth, gamma, t_p) / t_p
    return SpatialProfile(depth, field, coherence, t_p)


def _bisect(func, lo: float, hi: float, f_lo: float, tol: float) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = func(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def domain_boundaries(b_l: float, gamma: float, t_p: float) -> DomainDecomposition:
    """Zeros of Im sigma_eg(depth, t_p) on ``(0, b_l]`` in units of ``b t_p``.

    Sign scan on the exact series followed by bisection. A scan interval
    whose interior midpoint also changes sign is refined by doubling.
    """
    _check(b_l, gamma, t_p)
    bt_max = b_l * t_p

    def coh(bt):
        return float(coherence_depth(np.array([bt / t_p]), gamma, t_p)[0])

    n_nodes = max(64, math.ceil(SCAN_NODES_PER_10 * bt_max / 10.0))
    while True:
        nodes = np.linspace(0.0, bt_max, n_nodes + 1)
        vals = coherence_depth(nodes / t_p, gamma, t_p)
        # the front face has positive coherence; ignore an exact zero at 0
        signs = np.sign(vals[1:])
        mids = 0.5 * (nodes[1:-1] + nodes[2:])
        mid_vals = coherence_depth(mids / t_p, gamma, t_p)
        lo_s, hi_s = signs[:-1], signs[1:]
        ambiguous = (lo_s == hi_s) & (np.sign(mid_vals) != lo_s) & (lo_s != 0)
        if not np.any(ambiguous) or n_nodes > 1 << 20:
            break
        n_nodes *= 2

    roots = []
    for i in range(1, len(nodes) - 1):
        v_lo, v_hi = vals[i], vals[i + 1]
        if v_lo == 0.0:
            roots.append(nodes[i])
        elif v_lo * v_hi < 0:
            roots.append(_bisect(coh, nodes[i], nodes[i + 1], v_lo, BISECTION_TOL))
    if vals[-1] == 0.0:
        roots.append(nodes[-1])
    boundaries = np.array(roots)
    widths = np.diff(np.concatenate([[0.0], boundaries])) if len(roots) else np.array([])
    return DomainDecomposition(boundaries, widths, t_p)


def slice_stack_from_domains(dec: DomainDecomposition, b_l: float, gamma: float = 0.0,
                             rel_tol: float = 1e-9) -> SliceStack:
    """Cut the absorber at the domain boundaries.

    If ``b_l`` reaches past the last boundary, the leftover becomes a final
    slice and the stack is flagged ``incomplete``.
    """
    if len(dec) == 0:
        raise DomainError("decomposition has no boundaries")
    slice_b = list(np.asarray(dec.slice_bt, dtype=float) / dec.t_p)
    last = dec.boundaries_bt[-1] / dec.t_p
    incomplete = False
    if b_l - last > rel_tol * b_l:
        slice_b.append(b_l - last)
        incomplete = True
    return SliceStack(tuple(slice_b), dec.t_p, gamma, incomplete=incomplete)
