"""Weak-field propagation through a single resonant absorber.

All quantities are dimensionless. Depth is carried as the cumulative
superradiant rate ``b``; the field is in units of the input amplitude and
the (imaginary part of the) coherence in units of amplitude x time.

Three independent routes give the step response:

* :func:`step_response_series` -- the fast Bessel series,
* :func:`step_response_quadrature` -- adaptive quadrature of the integral
  representations,
* :func:`propagate_mb` -- direct marching of the atom-field equations.

Arbitrary causal inputs go through :func:`convolve_response`; compactly
supported rectangles can also go through the frequency domain with
:func:`spectral_rectangle_response`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, signal, special

from superrad import _product
from superrad.errors import (
    ConvergenceError,
    DomainError,
    NumericalError,
    ResolutionError,
)
from superrad.specfun import JN_SCALED_CROSSOVER, jn_scaled, poisson_tail

SERIES_MAX_TERMS = 400
QUAD_ABS_TOL = 1e-10


@dataclass(frozen=True)
class AbsorberSpec:
    """Superradiant rate ``b`` and coherence decay rate ``gamma``.

    ``gamma = 0`` is accepted as the lossless limit.
    """

    b: float
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b >= 0):
            raise DomainError(f"b must be finite and >= 0, got {self.b!r}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise DomainError(f"gamma must be finite and >= 0, got {self.gamma!r}")

    @property
    def steady_state(self) -> float:
        """Resonant Beer-Lambert transmission ``exp(-b/gamma)``."""
        if self.b == 0:
            return 1.0
        if self.gamma == 0:
            return 0.0
        return math.exp(-self.b / self.gamma)


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_samples: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise DomainError("t_end must exceed t_start")
        if self.n_samples < 2:
            raise DomainError("a grid needs at least two samples")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / (self.n_samples - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_samples)

    def index_of(self, t: float) -> int:
        """Nearest node to ``t``."""
        idx = int(round((t - self.t_start) / self.dt))
        return min(max(idx, 0), self.n_samples - 1)

    @classmethod
    def with_node_at(cls, t_node: float, t_end: float, per_unit: float, t_start: float = 0.0):
        """Grid from ``t_start`` with ``t_node`` exactly on a node.

        ``per_unit`` is the minimum number of samples per unit time.
        """
        if not t_start < t_node <= t_end:
            raise DomainError("t_node must lie inside (t_start, t_end]")
        n_before = max(1, math.ceil((t_node - t_start) * per_unit))
        dt = (t_node - t_start) / n_before
        n_after = math.ceil((t_end - t_node) / dt - 1e-9)
        n = n_before + n_after + 1
        return cls(t_start, t_start + (n - 1) * dt, n)


@dataclass
class Waveform:
    """Real field samples on a uniform grid, in units of the input amplitude.

    The signal is causal: zero before ``t_start`` and jumping to
    ``amplitude[0]`` there. Further discontinuities are listed in
    ``jumps`` as ``{node index: jump size}``; at a jump node the sample
    holds the right-hand limit.
    """

    grid: TimeGrid
    amplitude: np.ndarray
    jumps: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        if self.amplitude.shape != (self.grid.n_samples,):
            raise DomainError("amplitude length must match the grid")
        if not np.all(np.isfinite(self.amplitude)):
            raise DomainError("waveform samples must be finite")
        self.jumps = {int(k): float(v) for k, v in self.jumps.items() if k != 0 and v != 0.0}

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def intensity(self) -> np.ndarray:
        return self.amplitude**2

    def all_jumps(self) -> dict:
        """Jumps including the leading edge at node 0."""
        out = {0: float(self.amplitude[0])} if self.amplitude[0] != 0 else {}
        out.update(self.jumps)
        return out

    def left_limit(self, idx: int) -> float:
        if idx == 0:
            return 0.0
        return float(self.amplitude[idx] - self.jumps.get(idx, 0.0))

    @classmethod
    def step(cls, grid: TimeGrid, height: float = 1.0) -> "Waveform":
        return cls(grid, np.full(grid.n_samples, float(height)))

    @classmethod
    def rectangle(cls, grid: TimeGrid, duration: float, height: float = 1.0) -> "Waveform":
        """Pulse of ``height`` on ``[t_start, t_start + duration)``.

        The trailing edge is snapped to the nearest node.
        """
        idx = grid.index_of(grid.t_start + duration)
        amp = np.full(grid.n_samples, float(height))
        amp[idx:] = 0.0
        jumps = {idx: -float(height)} if 0 < idx < grid.n_samples else {}
        return cls(grid, amp, jumps)


@dataclass
class CoherenceSeries:
    """Im sigma_eg history at one depth (units of amplitude x time)."""

    grid: TimeGrid
    im_sigma: np.ndarray
    depth_b: float = 0.0

    def __post_init__(self):
        self.im_sigma = np.asarray(self.im_sigma, dtype=float)
        if self.im_sigma.shape != (self.grid.n_samples,):
            raise DomainError("coherence length must match the grid")


def _as_times(t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or not np.all(np.isfinite(t_arr)):
        raise DomainError("times must be finite and >= 0")
    return t_arr


def _scalar_or_array(values, like):
    return float(values) if np.ndim(like) == 0 else values


def greens_kernel_smooth(spec: AbsorberSpec, t):
    """Smooth part of the absorber's impulse response.

    ``exp(-gamma t) sqrt(b/t) J_1(2 sqrt(b t)) = b exp(-gamma t) j_1(b t)``,
    which tends to ``b`` at ``t = 0``. The full response is
    ``delta(t)`` minus this kernel.
    """
    t_arr = _as_times(t)
    if spec.b == 0:
        return _scalar_or_array(np.zeros_like(t_arr), t)
    out = spec.b * np.exp(-spec.gamma * t_arr) * jn_scaled(1, spec.b * t_arr)
    return _scalar_or_array(out, t)


def _one_minus_j0(u: np.ndarray) -> np.ndarray:
    # 1 - J0(2 sqrt u), exact-ish for small u where the direct form cancels
    out = np.empty_like(u)
    small = u < JN_SCALED_CROSSOVER
    us = u[small]
    out[small] = us * (1.0 - us / 4.0 * (1.0 - us / 9.0))
    out[~small] = 1.0 - special.j0(2.0 * np.sqrt(u[~small]))
    return out


def _series_order(x: float, gt_max: float, tol: float) -> int:
    """Index of the last series term needed.

    The remainder after term ``n`` is bounded by ``T_{n+1}(x) T_n(gt)``
    since ``|j_n| <= 1/n!``; we stop once that bound has sat below ``tol``
    for three consecutive ``n``. The bound grows with both arguments, so
    the largest ``x`` and ``gt`` of a batch cover every point in it.
    """
    tx = poisson_tail(SERIES_MAX_TERMS + 1, x)
    tg = poisson_tail(SERIES_MAX_TERMS, gt_max)
    bound = tx[1:] * tg
    run = 0
    for n in range(SERIES_MAX_TERMS + 1):
        run = run + 1 if bound[n] < tol else 0
        if run == 3:
            return n
    raise ConvergenceError(
        f"series did not converge within {SERIES_MAX_TERMS} terms",
        bound=float(bound[-1]),
    )


def _tail_table(x: np.ndarray, n_max: int) -> np.ndarray:
    uniq, inverse = np.unique(x, return_inverse=True)
    table = np.stack([poisson_tail(n_max, float(xu)) for xu in uniq], axis=1)
    return table[:, inverse]


def _bessel_orders(n_max: int, z: np.ndarray) -> np.ndarray:
    """``J_n(z)`` for ``n = 1..n_max`` as an ``(n_max, len(z))`` array.

    Forward recurrence from J_0, J_1 where it is stable (``z > n_max``),
    ``jv`` elsewhere.
    """
    out = np.empty((n_max, len(z)))
    fwd = z > n_max
    if np.any(fwd):
        zf = z[fwd]
        prev, cur = special.j0(zf), special.j1(zf)
        out[0, fwd] = cur
        for k in range(1, n_max):
            prev, cur = cur, (2.0 * k / zf) * cur - prev
            out[k, fwd] = cur
    if not np.all(fwd):
        out[:, ~fwd] = special.jv(np.arange(1, n_max + 1)[:, None], z[~fwd][None, :])
    return out


def _series_sum(b: np.ndarray, g: float, t: np.ndarray, tx: np.ndarray) -> np.ndarray:
    """``sum_{n>=1} (g t)^n T_n(b/g) j_n(b t)`` pointwise over flat arrays.

    ``tx[n, i]`` holds ``T_n(b_i/g)``; its row count fixes the last term.
    """
    n_terms = tx.shape[0] - 1
    total = np.zeros_like(t)
    if n_terms < 1:
        return total
    u = b * t
    n = np.arange(1, n_terms + 1)
    big = u >= JN_SCALED_CROSSOVER
    if np.any(big):
        # (g t)^n j_n(bt) = (g sqrt(t/b))^n J_n(2 sqrt(bt))
        log_ratio = math.log(g) + 0.5 * (np.log(t[big]) - np.log(b[big]))
        jn = _bessel_orders(n_terms, 2.0 * np.sqrt(u[big]))
        scale = np.exp(n[:, None] * log_ratio[None, :])
        total[big] = np.sum(tx[1:, big] * scale * jn, axis=0)
    small = (~big) & (t > 0)
    if np.any(small):
        ts, us = t[small], u[small]
        acc = np.zeros_like(ts)
        for k in n:
            acc += tx[k, small] * (g * ts) ** k * jn_scaled(int(k), us)
        total[small] = acc
    return total


def _series_field(b: np.ndarray, g: float, t: np.ndarray, tol: float) -> np.ndarray:
    out = np.ones_like(t)
    live = b > 0
    if not np.any(live):
        return out
    bl, tl = b[live], t[live]
    if g == 0:
        out[live] = special.j0(2.0 * np.sqrt(bl * tl))
        return out
    x = bl / g

    def field(n_last):
        tx = _tail_table(x, n_last)
        body = tx[0] * special.j0(2.0 * np.sqrt(bl * tl)) + _series_sum(bl, g, tl, tx)
        return np.exp(-x) + np.exp(-g * tl) * body

    out[live] = _with_partial(field, float(x.max()), g * float(tl.max()), tol)
    return out


def _series_coherence(b: np.ndarray, g: float, t: np.ndarray, tol: float) -> np.ndarray:
    if g == 0:
        return t * jn_scaled(1, b * t)
    out = -np.expm1(-g * t) / g
    live = b > 0
    if not np.any(live):
        return out
    bl, tl = b[live], t[live]
    x = bl / g
    gt_max = g * float(tl.max())
    u = bl * tl
    j0 = special.j0(2.0 * np.sqrt(u))
    # 1 - e^{-gt} J0 = (1 - J0) - J0 expm1(-gt)
    rest = _one_minus_j0(u) - j0 * np.expm1(-g * tl)

    def coherence(n_last):
        tx = _tail_table(x, n_last)
        return (np.exp(-g * tl) * _series_sum(bl, g, tl, tx) + np.exp(-x) * rest) / g

    out[live] = _with_partial(coherence, float(x.max()), gt_max, tol * g / max(1.0, gt_max))
    return out


def _with_partial(evaluate, x_max: float, gt_max: float, tol: float) -> np.ndarray:
    """``evaluate(n_last)`` at the truncation order for ``tol``; on failure
    the error carries the sum over all permitted terms."""
    try:
        n_last = _series_order(x_max, gt_max, tol)
    except ConvergenceError as exc:
        partial = evaluate(SERIES_MAX_TERMS)
        raise ConvergenceError(str(exc), partial_sum=partial, bound=exc.bound) from None
    return evaluate(n_last)


def _check_tol(tol: float) -> None:
    if not 0 < tol < 1e-3:
        raise DomainError("tol must lie in (0, 1e-3)")


def step_response_series(spec: AbsorberSpec, t, tol: float = 1e-13):
    """Transmitted field for a unit step switched on at ``t = 0``.

    Evaluates ``exp(-b/g) + exp(-g t) [T_0 J_0(2 sqrt(bt)) + sum_n f_n j_n]``
    with ``f_n = (g t)^n T_n(b/g)``. Accepts scalar or array ``t``.
    """
    _check_tol(tol)
    t_arr = _as_times(t)
    flat = np.atleast_1d(t_arr).ravel()
    out = _series_field(np.full_like(flat, spec.b), spec.gamma, flat, tol)
    return _scalar_or_array(out.reshape(t_arr.shape), t)


def coherence_step(spec: AbsorberSpec, t, tol: float = 1e-13):
    """Im sigma_eg for a unit step input, in units of amplitude x time.

    ``(1/g) {exp(-g t) sum_n f_n j_n + exp(-b/g) [1 - exp(-g t) J_0]}``;
    exactly ``t j_1(b t)`` when ``gamma = 0``.
    """
    _check_tol(tol)
    t_arr = _as_times(t)
    flat = np.atleast_1d(t_arr).ravel()
    out = _series_coherence(np.full_like(flat, spec.b), spec.gamma, flat, tol)
    return _scalar_or_array(out.reshape(t_arr.shape), t)


def _depth_args(b_values, gamma, t):
    b_arr = np.atleast_1d(np.asarray(b_values, dtype=float)).ravel()
    if np.any(b_arr < 0) or not np.all(np.isfinite(b_arr)):
        raise DomainError("depth values must be finite and >= 0")
    if not (math.isfinite(gamma) and gamma >= 0):
        raise DomainError("gamma must be finite and >= 0")
    t = float(t)
    if t < 0 or not math.isfinite(t):
        raise DomainError("t must be finite and >= 0")
    return b_arr, np.full_like(b_arr, t)


def step_response_depth(b_values, gamma: float, t: float, tol: float = 1e-13) -> np.ndarray:
    """Step response at fixed ``t`` for an array of depths (cumulative ``b``)."""
    _check_tol(tol)
    b_arr, t_arr = _depth_args(b_values, gamma, t)
    return _series_field(b_arr, float(gamma), t_arr, tol)


def coherence_depth(b_values, gamma: float, t: float, tol: float = 1e-13) -> np.ndarray:
    """Im sigma_eg at fixed ``t`` for an array of depths (cumulative ``b``)."""
    _check_tol(tol)
    b_arr, t_arr = _depth_args(b_values, gamma, t)
    return _series_coherence(b_arr, float(gamma), t_arr, tol)


def _quarter_period_edges(b: float, t: float) -> np.ndarray:
    # phase 2 sqrt(b tau) advances pi/2 per panel
    if b == 0 or t == 0:
        return np.array([0.0, t])
    phase_end = 2.0 * math.sqrt(b * t)
    n = max(1, math.ceil(phase_end / (0.5 * math.pi)))
    phases = np.linspace(0.0, phase_end, n + 1)
    edges = phases**2 / (4.0 * b)
    edges[-1] = t
    return edges


def _panel_quad(func, edges) -> tuple[float, float]:
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(func, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
        total += val
        err += e
    if err > QUAD_ABS_TOL:
        raise NumericalError(f"quadrature error estimate {err:.2e} exceeds {QUAD_ABS_TOL:g}")
    return total, err


def _j0_sqrt(b: float, tau: float) -> float:
    return float(special.j0(2.0 * math.sqrt(b * tau)))


def _j1_scaled_scalar(u: float) -> float:
    if u < JN_SCALED_CROSSOVER:
        return 0.5 - u / 12.0 + u * u / 144.0
    r = math.sqrt(u)
    return float(special.j1(2.0 * r)) / r


def _decayed_j0_integral(spec: AbsorberSpec, t: float) -> float:
    b, g = spec.b, spec.gamma
    val, _ = _panel_quad(lambda tau: math.exp(-g * tau) * _j0_sqrt(b, tau), _quarter_period_edges(b, t))
    return val


def step_response_quadrature(spec: AbsorberSpec, t: float, form: str = "j0") -> float:
    """Step response by adaptive Gauss-Kronrod quadrature.

    ``form="j0"``: ``exp(-g t) J_0 + g int_0^t exp(-g tau) J_0 dtau``.
    ``form="j1"``: ``1 - int_0^t b exp(-g tau) j_1(b tau) dtau``.
    Panels are split every quarter period of the Bessel phase.
    """
    t = float(t)
    if t < 0 or not math.isfinite(t):
        raise DomainError("t must be finite and >= 0")
    b, g = spec.b, spec.gamma
    if b == 0:
        return 1.0
    if form == "j0":
        head = math.exp(-g * t) * _j0_sqrt(b, t)
        if g == 0:
            return head
        return head + g * _decayed_j0_integral(spec, t)
    if form == "j1":
        val, _ = _panel_quad(
            lambda tau: b * math.exp(-g * tau) * _j1_scaled_scalar(b * tau),
            _quarter_period_edges(b, t),
        )
        return 1.0 - val
    raise DomainError(f"unknown quadrature form {form!r}")


def coherence_quadrature(spec: AbsorberSpec, t: float) -> float:
    """Im sigma_eg for a step input as ``int_0^t exp(-g tau) J_0 dtau``."""
    t = float(t)
    if t < 0 or not math.isfinite(t):
        raise DomainError("t must be finite and >= 0")
    return _decayed_j0_integral(spec, t)


def _check_kernel_resolution(spec: AbsorberSpec, dt: float) -> None:
    k0 = spec.b
    k1 = float(greens_kernel_smooth(spec, dt))
    if abs(k1 - k0) > 0.1 * abs(k0):
        raise ResolutionError(
            f"grid step {dt:g} too coarse for b={spec.b:g}, gamma={spec.gamma:g}; "
            "kernel changes by more than 10% over one sample"
        )


def convolve_response(wave: Waveform, spec: AbsorberSpec, tol: float = 1e-13, breaks=()) -> Waveform:
    """Output of the absorber for a causal input ``wave``.

    ``out(t) = in(t) - int_0^t in(t - tau) K(tau) dtau`` with ``K`` the
    smooth Green's kernel. Jumps are carried analytically by the step
    response; the continuous remainder is product-integrated with cubic
    stencils that never straddle a jump node or any node in ``breaks``
    (use it for kinks).
    """
    if spec.b == 0:
        return Waveform(wave.grid, wave.amplitude.copy(), dict(wave.jumps))
    grid = wave.grid
    dt = grid.dt
    _check_kernel_resolution(spec, dt)
    rel_t = grid.times - grid.t_start
    jumps = wave.all_jumps()
    remainder = wave.amplitude.copy()
    out = np.zeros(grid.n_samples)
    resp = step_response_series(spec, rel_t, tol)
    for idx, size in jumps.items():
        remainder[idx:] -= size
        out[idx:] += size * resp[: grid.n_samples - idx]
    if np.any(remainder != 0.0):
        moments = _product.panel_moments(lambda tau: greens_kernel_smooth(spec, tau), dt, grid.n_samples - 1)
        conv = _product.convolve_sampled(remainder, moments, breaks=[*jumps, *breaks])
        out += remainder - conv
    return Waveform(grid, out, dict(wave.jumps))


def propagate_mb(wave: Waveform, spec: AbsorberSpec, n_z: int):
    """March the atom-field equations through depth ``b`` in ``n_z`` steps.

    With ``sigma = i s`` the equations read ``ds/dt = -gamma s + Omega`` and
    ``dOmega/db = -s``. Both are discretized with the trapezoidal rule,
    which leaves one implicit linear recursion per depth step; it is
    solved exactly as an IIR filter. The input must start at its leading
    edge (coherence zero at ``t_start``).

    Returns ``(output, coherences)`` where ``coherences`` holds one
    :class:`CoherenceSeries` per depth node, front face first.
    """
    if n_z < 8:
        raise DomainError("n_z must be at least 8")
    grid = wave.grid
    dt = grid.dt
    if spec.gamma * dt > 0.1 or spec.b * dt > 0.1:
        raise ResolutionError("Maxwell-Bloch marching needs gamma*dt <= 0.1 and b*dt <= 0.1")
    a = (1.0 - 0.5 * spec.gamma * dt) / (1.0 + 0.5 * spec.gamma * dt)
    c = 0.5 * dt / (1.0 + 0.5 * spec.gamma * dt)
    db = spec.b / n_z
    beta = 0.5 * db

    def coherence(omega):
        # s_j = a s_{j-1} + c (omega_j + omega_{j-1}), s_0 = 0
        zi = np.array([-c * omega[0]])
        return signal.lfilter([c, c], [1.0, -a], omega, zi=zi)[0]

    omega = wave.amplitude.copy()
    s = coherence(omega)
    depths = [CoherenceSeries(grid, s, 0.0)]
    den = [1.0 + beta * c, -(a - beta * c)]
    for k in range(1, n_z + 1):
        rhs = omega - beta * s
        zi = np.array([-c * rhs[0]])
        s = signal.lfilter([c, c], den, rhs, zi=zi)[0]
        omega = rhs - beta * s
        depths.append(CoherenceSeries(grid, s, k * db))
    return Waveform(grid, omega, dict(wave.jumps)), depths


def transfer_function(nu, spec: AbsorberSpec):
    """Complex gain ``exp(-i b / (nu + i gamma))`` at angular frequency ``nu``."""
    nu_arr = np.asarray(nu, dtype=float)
    out = np.exp(-1j * spec.b / (nu_arr + 1j * spec.gamma))
    return complex(out) if out.ndim == 0 else out


def _kernel_power_step(spec: AbsorberSpec, m: int, t: np.ndarray) -> np.ndarray:
    # Time-domain step response of the m-th term of the expansion of H in
    # powers of X = -i b/(nu + i gamma): (-b/g)^m / m! * P(m, g t).
    if m == 0:
        return (t >= 0).astype(float)
    out = np.zeros_like(t)
    pos = t > 0
    x = spec.b / spec.gamma
    out[pos] = (-x) ** m / math.factorial(m) * special.gammainc(m, spec.gamma * t[pos])
    return out


def spectral_rectangle_response(spec: AbsorberSpec, duration: float, t, n_subtract: int = 3,
                                nu_max: float | None = None):
    """Output for a unit rectangle ``[0, duration)`` by Fourier synthesis.

    ``out(t) = (1/pi) Re int_0^inf F(nu) H(nu) exp(-i nu t) dnu`` with
    ``F`` the rectangle's transform. The first ``n_subtract + 1`` terms of
    the expansion of ``H`` in ``X = -i b/(nu + i gamma)`` are inverted in
    closed form; the remainder decays like ``nu**-(n_subtract + 2)`` and is
    integrated numerically with Gauss-Legendre panels.
    """
    if duration <= 0:
        raise DomainError("duration must be positive")
    if spec.gamma <= 0:
        raise DomainError("the spectral route needs gamma > 0")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    b, g = spec.b, spec.gamma
    analytic = np.zeros_like(t_arr)
    for m in range(n_subtract + 1):
        analytic += _kernel_power_step(spec, m, t_arr) - _kernel_power_step(spec, m, t_arr - duration)
    if b == 0:
        return analytic if np.ndim(t) else float(analytic[0])

    if nu_max is None:
        nu_max = 200.0 * max(b, g)
    t_scale = max(float(np.max(np.abs(t_arr))), float(np.max(np.abs(t_arr - duration))), 1.0 / max(b, g))
    fine_end = min(40.0 * g, nu_max)
    fine = np.linspace(0.0, fine_end, 801)
    coarse_width = min(0.25 * math.pi / t_scale, 0.05 * max(b, g))
    n_coarse = max(1, math.ceil((nu_max - fine_end) / coarse_width))
    coarse = np.linspace(fine_end, nu_max, n_coarse + 1)
    edges = np.concatenate([fine, coarse[1:]])
    y, w = _product._gauss_unit(12)
    widths = np.diff(edges)
    nu = (edges[:-1, None] + widths[:, None] * y[None, :]).ravel()
    weights = (widths[:, None] * w[None, :]).ravel()

    xx = -1j * b / (nu + 1j * g)
    partial = np.zeros_like(xx)
    term = np.ones_like(xx)
    for m in range(n_subtract + 1):
        if m:
            term = term * xx / m
        partial = partial + term
    remainder = np.exp(xx) - partial
    with np.errstate(invalid="ignore", divide="ignore"):
        f_rect = np.where(nu > 0, np.expm1(1j * nu * duration) / (1j * nu), duration)
    spec_vals = f_rect * remainder * weights
    phase = np.exp(-1j * np.outer(t_arr, nu))
    numeric = (phase @ spec_vals).real / math.pi
    out = analytic + numeric
    return out if np.ndim(t) else float(out[0])
