"""Command-line entry point.

Every command writes its data files plus a ``manifest.json`` holding the
resolved parameters, so any output can be regenerated from its manifest.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from superrad import __version__
from superrad.cascade import (
    SliceStack,
    cascade_numeric,
    one_slice_output,
    peak_amplitude_at_tp,
    pulse_metrics,
    three_slice_output,
    two_slice_output,
)
from superrad.domains import domain_boundaries, spatial_profiles
from superrad.errors import DomainError, NumericalError, OutOfRangeError, ResolutionError, SuperradError
from superrad.optimize import optimize_stack
from superrad.propagation import (
    AbsorberSpec,
    TimeGrid,
    Waveform,
    convolve_response,
    propagate_mb,
    spectral_rectangle_response,
    step_response_quadrature,
    step_response_series,
)

log = logging.getLogger("superrad")

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

DEFAULT_SLICES_BT = (3.67, 8.63, 13.57)
FIGURE_GAMMAS = {2: (0.003, 0.3), 3: (0.01, 0.1), 4: (0.01, 0.1)}
PEAK_TABLE_GAMMA_TP = (1e-4, 1e-2, 1e-1)
METHODS = ("series", "quadrature", "mb", "spectral")
# closed form ("series") or slice-by-slice convolution ("numeric") for cascades
COMMAND_METHODS = {"step": METHODS, "figure": ("series", "numeric"), "cascade": ("series", "numeric")}


class UsageError(SuperradError):
    pass


@dataclass
class RunConfig:
    command: str
    b: float | None = None
    gamma: float | None = None
    tp: float | None = None
    tmax: float | None = None
    samples: int | None = None
    method: str | None = None
    slices: tuple | None = None
    out: Path = Path("superrad_out")
    format: str = "csv"
    reference_rate: str = "b1"
    extra: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        d = {k: getattr(self, k) for k in
             ("command", "b", "gamma", "tp", "tmax", "samples", "method", "slices", "format",
              "reference_rate")}
        d["slices"] = list(self.slices) if self.slices is not None else None
        d.update(self.extra)
        return d


def max_threads() -> int:
    raw = os.environ.get("SUPERRAD_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError(f"SUPERRAD_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(path_stem: Path, columns, rows, fmt: str) -> Path:
    """Write ``rows`` (sequence of equal-length sequences) as csv or json."""
    if fmt == "csv":
        path = path_stem.with_suffix(".csv")
        lines = [",".join(columns)]
        lines += [",".join(v if isinstance(v, str) else _fmt(v) for v in row) for row in rows]
        _atomic_write(path, "\n".join(lines) + "\n")
    else:
        path = path_stem.with_suffix(".json")
        data = {c: [v if isinstance(v, str) else float(_fmt(v)) for v in col]
                for c, col in zip(columns, zip(*rows))} if rows else {c: [] for c in columns}
        _atomic_write(path, json.dumps({"columns": list(columns), "data": data}, indent=1) + "\n")
    return path


def read_table(path: Path) -> dict:
    """Inverse of :func:`write_table`; numeric columns come back as arrays."""
    path = Path(path)
    if path.suffix == ".json":
        payload = json.loads(path.read_text())
        return {c: _maybe_numeric(payload["data"][c]) for c in payload["columns"]}
    lines = path.read_text().splitlines()
    columns = lines[0].split(",")
    cells = [line.split(",") for line in lines[1:]]
    return {c: _maybe_numeric([row[i] for row in cells]) for i, c in enumerate(columns)}


def _maybe_numeric(values):
    try:
        return np.array([float(v) for v in values])
    except (TypeError, ValueError):
        return list(values)


def write_waveform(path_stem: Path, wave: Waveform, fmt: str, time_scale: float = 1.0) -> Path:
    rows = zip(wave.times * time_scale, wave.amplitude, wave.intensity)
    return write_table(path_stem, ("t", "amplitude", "intensity"), list(rows), fmt)


def write_manifest(cfg: RunConfig, files, summary: dict | None = None) -> Path:
    payload = {
        "command": cfg.command,
        "parameters": cfg.resolved(),
        "version": __version__,
        "files": sorted(str(Path(f).name) for f in files),
    }
    if summary:
        payload["summary"] = summary
    path = cfg.out / "manifest.json"
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n")
    return path


def _cascade_wave(stack: SliceStack, grid: TimeGrid, method: str, flips: bool = True) -> Waveform:
    if method == "numeric" or not flips or stack.n_slices > 3:
        return cascade_numeric(stack, grid=grid, flips=flips)
    if stack.n_slices == 1:
        return one_slice_output(stack.slice_b[0], stack.gamma, stack.t_p, grid)
    if stack.n_slices == 2:
        return two_slice_output(stack, grid)
    return three_slice_output(stack, grid)


def _figure_stack(n: int, cfg: RunConfig, gamma_rel: float) -> tuple[SliceStack, float]:
    """Stack for figure ``n`` and the reference rate used as the time unit.

    ``gamma_rel`` is in units of the reference rate (``b_1`` or ``b_l``).
    """
    slices_bt = cfg.slices if cfg.slices is not None else DEFAULT_SLICES_BT[: max(1, n - 1)]
    tp = cfg.tp if cfg.tp is not None else 1.0
    ref_bt = slices_bt[0] if cfg.reference_rate == "b1" else float(np.sum(slices_bt))
    b_ref = ref_bt / tp
    return SliceStack.from_bt(slices_bt, tp, gamma_rel * b_ref), b_ref


def cmd_figure(cfg: RunConfig) -> int:
    n = cfg.extra["figure"]
    files = []
    summary = {}
    if n == 1:
        bl_tp = cfg.b if cfg.b is not None else 30.0
        gamma_tp = cfg.gamma if cfg.gamma is not None else 1e-4
        n_depth = cfg.samples or 1024
        prof = spatial_profiles(bl_tp, gamma_tp, 1.0, n_depth)
        dec = domain_boundaries(bl_tp, gamma_tp, 1.0)
        # both curves scaled to unit maximum; the field already peaks at 1 on the front face
        coh = prof.im_coherence / np.max(np.abs(prof.im_coherence))
        files.append(write_table(cfg.out / "figure1_profile", ("depth_bt", "field", "im_coherence"),
                                 list(zip(prof.depth_bt, prof.field, coh)), cfg.format))
        files.append(write_table(cfg.out / "figure1_boundaries", ("boundary_bt", "slice_bt"),
                                 list(zip(dec.boundaries_bt, dec.slice_bt)), cfg.format))
        cfg.b, cfg.gamma, cfg.tp, cfg.samples = bl_tp, gamma_tp, 1.0, n_depth
        summary["boundaries_bt"] = [float(_fmt(x)) for x in dec.boundaries_bt]
        write_manifest(cfg, files, summary)
        return 0
    if n not in FIGURE_GAMMAS:
        raise UsageError(f"figure must be 1..4, got {n}")
    gammas = (cfg.gamma,) if cfg.gamma is not None else FIGURE_GAMMAS[n]

    def one(gamma_rel):
        stack, time_scale = _figure_stack(n, cfg, gamma_rel)
        tmax = (cfg.tmax / time_scale) if cfg.tmax is not None else 2.0 * stack.t_p
        per_unit = max(128.0 * stack.slice_b[0], (cfg.samples or 0) / tmax)
        grid = TimeGrid.with_node_at(stack.t_p, tmax, per_unit)
        wave = _cascade_wave(stack, grid, cfg.method or "series")
        return gamma_rel, stack, time_scale, wave

    with ThreadPoolExecutor(max_workers=min(max_threads(), len(gammas))) as pool:
        results = list(pool.map(one, gammas))
    for gamma_rel, stack, time_scale, wave in results:
        stem = cfg.out / f"figure{n}_gamma{_fmt(gamma_rel).replace('.', 'p')}"
        files.append(write_waveform(stem, wave, cfg.format, time_scale))
        m = pulse_metrics(wave, t_from=stack.t_p)
        summary[f"gamma={_fmt(gamma_rel)}"] = {
            "peak_amplitude": m.peak_amplitude,
            "peak_intensity_gain": m.peak_intensity_gain,
            "t_peak": m.t_peak * time_scale,
            "width": m.width * time_scale,
        }
    cfg.extra["gammas"] = list(gammas)
    write_manifest(cfg, files, summary)
    return 0


def cmd_peak_table(cfg: RunConfig) -> int:
    columns = ["n_slices", "boundaries_bt"]
    for g in PEAK_TABLE_GAMMA_TP:
        columns += [f"amplitude_gtp{_fmt(g)}", f"gain_gtp{_fmt(g)}"]
    rows = []
    for n in (1, 2, 3):
        bts = DEFAULT_SLICES_BT[:n]
        row = [float(n), ";".join(_fmt(x) for x in np.cumsum(bts))]
        for g in PEAK_TABLE_GAMMA_TP:
            amp = peak_amplitude_at_tp(SliceStack.from_bt(bts, 1.0, g))
            row += [amp, amp * amp]
        rows.append(row)
    path = write_table(cfg.out / "peak_table", columns, rows, cfg.format)
    write_manifest(cfg, [path])
    return 0


def cmd_domains(cfg: RunConfig) -> int:
    tp = cfg.tp if cfg.tp is not None else 1.0
    b_l = cfg.b if cfg.b is not None else 30.0 / tp
    gamma = cfg.gamma if cfg.gamma is not None else 1e-4 / tp
    dec = domain_boundaries(b_l, gamma, tp)
    prof = spatial_profiles(b_l, gamma, tp, cfg.samples or 1024)
    files = [
        write_table(cfg.out / "domains_boundaries", ("boundary_bt", "slice_bt"),
                    list(zip(dec.boundaries_bt, dec.slice_bt)), cfg.format),
        write_table(cfg.out / "domains_profile", ("depth_bt", "field", "im_coherence"),
                    list(zip(prof.depth_bt, prof.field, prof.im_coherence)), cfg.format),
    ]
    cfg.extra.update(b=b_l, gamma=gamma, tp=tp)
    write_manifest(cfg, files, {"boundaries_bt": [float(_fmt(x)) for x in dec.boundaries_bt]})
    print(" ".join(_fmt(x) for x in dec.boundaries_bt))
    return 0


def cmd_cascade(cfg: RunConfig) -> int:
    tp = cfg.tp if cfg.tp is not None else 1.0
    slices_bt = cfg.slices or DEFAULT_SLICES_BT
    gamma = cfg.gamma if cfg.gamma is not None else 1e-4 / tp
    stack = SliceStack.from_bt(slices_bt, tp, gamma)
    tmax = cfg.tmax if cfg.tmax is not None else 2.0 * tp
    per_unit = max(128.0 * stack.slice_b[0], (cfg.samples or 0) / tmax)
    grid = TimeGrid.with_node_at(tp, tmax, per_unit)
    flips = not cfg.extra.get("no_flips", False)
    method = cfg.method or "series"
    wave = _cascade_wave(stack, grid, method, flips)
    files = [write_waveform(cfg.out / "cascade", wave, cfg.format)]
    if not flips:
        ref = step_response_series(AbsorberSpec(stack.b_total, gamma), grid.times)
        single = Waveform(grid, ref)
        files.append(write_waveform(cfg.out / "single_absorber", single, cfg.format))
    m = pulse_metrics(wave, t_from=tp)
    cfg.extra.update(tp=tp, gamma=gamma, flips=flips)
    write_manifest(cfg, files, {"peak_amplitude": m.peak_amplitude,
                                "peak_intensity_gain": m.peak_intensity_gain})
    return 0


def cmd_step(cfg: RunConfig) -> int:
    b = cfg.b if cfg.b is not None else 1.0
    gamma = cfg.gamma if cfg.gamma is not None else 0.1
    tmax = cfg.tmax if cfg.tmax is not None else 30.0 / max(b, 1e-12)
    n = cfg.samples or 3001
    method = cfg.method or "series"
    if method not in METHODS:
        raise UsageError(f"--method must be one of {METHODS}")
    spec = AbsorberSpec(b, gamma)
    grid = TimeGrid(0.0, tmax, n)
    t = grid.times
    if method == "series":
        amp = step_response_series(spec, t)
    elif method == "quadrature":
        amp = np.array([step_response_quadrature(spec, x) for x in t])
    elif method == "mb":
        amp = propagate_mb(Waveform.step(grid), spec, cfg.extra.get("n_z", 256))[0].amplitude
    else:
        # a rectangle longer than the window is a step inside it
        amp = spectral_rectangle_response(spec, 2.0 * tmax, t)
    path = write_waveform(cfg.out / f"step_{method}", Waveform(grid, amp), cfg.format)
    cfg.extra.update(b=b, gamma=gamma, tmax=tmax, samples=n, method=method)
    write_manifest(cfg, [path])
    return 0


def cmd_optimize(cfg: RunConfig) -> int:
    n = int(cfg.extra.get("n_slices", 3))
    b_total = cfg.b if cfg.b is not None else float(np.sum(DEFAULT_SLICES_BT[:n]))
    gamma = cfg.gamma if cfg.gamma is not None else 0.01 * DEFAULT_SLICES_BT[0]
    budget = int(cfg.extra.get("budget", 200))
    res = optimize_stack(n, b_total, gamma, budget)
    best = res.best_stack
    rows = [[float(k + 1), b, b * best.t_p] for k, b in enumerate(best.slice_b)]
    files = [write_table(cfg.out / "optimized_stack", ("slice", "b", "b_tp"), rows, cfg.format)]
    summary = {
        "t_p": best.t_p,
        "peak_intensity_gain": res.best_metrics.peak_intensity_gain,
        "baseline_gain": res.baseline_gain,
        "evaluations": res.evaluations,
        "converged": res.converged,
    }
    cfg.extra.update(b=b_total, gamma=gamma, n_slices=n, budget=budget)
    write_manifest(cfg, files, summary)
    return 0


def band_limited_input(grid: TimeGrid, seed: int = 0, n_modes: int = 6, omega_max: float = 2.0) -> Waveform:
    """Random sum of low-frequency cosines, switched on at ``t_start``."""
    rng = np.random.default_rng(seed)
    t = grid.times - grid.t_start
    amp = np.zeros_like(t)
    for _ in range(n_modes):
        amp += rng.normal() * np.cos(rng.uniform(0, omega_max) * t + rng.uniform(0, 2 * np.pi))
    return Waveform(grid, amp)


def composition_residuals(b1: float, b2: float, gamma: float, tmax: float, samples: int,
                          seed: int = 0) -> dict:
    grid = TimeGrid(0.0, tmax, samples)
    out = {}
    for name, wave in (("step", Waveform.step(grid)), ("random", band_limited_input(grid, seed))):
        chained = convolve_response(convolve_response(wave, AbsorberSpec(b1, gamma)), AbsorberSpec(b2, gamma))
        single = convolve_response(wave, AbsorberSpec(b1 + b2, gamma))
        out[name] = float(np.max(np.abs(chained.amplitude - single.amplitude)))
    return out


def cmd_compose_check(cfg: RunConfig) -> int:
    b1, b2 = cfg.slices if cfg.slices else (1.0, 1.5)
    gamma = cfg.gamma if cfg.gamma is not None else 0.1
    tmax = cfg.tmax if cfg.tmax is not None else 30.0
    samples = cfg.samples or int(64 * (b1 + b2) * tmax) + 1
    seed = int(cfg.extra.get("seed", 0))
    res = composition_residuals(b1, b2, gamma, tmax, samples, seed)
    path = write_table(cfg.out / "compose_check", ("input", "max_residual"),
                       [[k, v] for k, v in res.items()], cfg.format)
    cfg.extra.update(b1=b1, b2=b2, gamma=gamma, tmax=tmax, samples=samples, seed=seed)
    write_manifest(cfg, [path], res)
    print(f"max residual: step {res['step']:.3e}, random {res['random']:.3e}")
    return 0


COMMANDS = {
    "figure": cmd_figure,
    "peak-table": cmd_peak_table,
    "domains": cmd_domains,
    "cascade": cmd_cascade,
    "step": cmd_step,
    "optimize": cmd_optimize,
    "compose-check": cmd_compose_check,
}


def _slices(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"--slices expects comma-separated numbers, got {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("--slices values must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--b", type=float, help="superradiant rate (total or single absorber)")
    common.add_argument("--gamma", type=float, help="coherence decay rate, in units of the reference rate")
    common.add_argument("--tp", type=float, help="phase-switch time")
    common.add_argument("--tmax", type=float, help="end of the time window")
    common.add_argument("--samples", type=int, help="number of samples (time or depth)")
    common.add_argument("--method", help=f"step: {'|'.join(METHODS)}; figure, cascade: series|numeric")
    common.add_argument("--slices", type=_slices, help="comma-separated b*t_p slice widths")
    common.add_argument("--out", type=Path, default=Path("superrad_out"), help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--reference-rate", choices=("b1", "bl"), default=None,
                        help="rate that sets the time unit and scales --gamma in figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="superrad",
        description="Step-pulse propagation, coherence domains and superradiant bursts from sliced absorbers.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    fig = sub.add_parser("figure", parents=[common], help="data behind figures 1-4")
    fig.add_argument("figure", type=int, choices=(1, 2, 3, 4))
    sub.add_parser("peak-table", parents=[common], help="burst peaks for 1-3 slices")
    sub.add_parser("domains", parents=[common], help="coherence domain boundaries")
    casc = sub.add_parser("cascade", parents=[common], help="output of a slice cascade")
    casc.add_argument("--no-flips", action="store_true", help="leave the phase shifters off")
    step = sub.add_parser("step", parents=[common], help="single-absorber step response")
    step.add_argument("--n-z", type=int, default=256, help="depth steps for --method mb")
    opt = sub.add_parser("optimize", parents=[common], help="tune t_p and slice widths")
    opt.add_argument("--n-slices", type=int, default=3)
    opt.add_argument("--budget", type=int, default=200)
    comp = sub.add_parser("compose-check", parents=[common], help="chained vs single absorber residual")
    comp.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    extra = {}
    for key in ("figure", "no_flips", "n_z", "n_slices", "budget", "seed"):
        if hasattr(args, key):
            extra[key] = getattr(args, key)
    if args.method is not None:
        allowed = COMMAND_METHODS.get(args.command, ())
        if args.method not in allowed:
            raise UsageError(f"--method {args.method!r} is not valid for {args.command}"
                             + (f"; choose from {', '.join(allowed)}" if allowed else ""))
    for name in ("b", "tp", "tmax"):
        val = getattr(args, name)
        if val is not None and not val > 0:
            raise UsageError(f"--{name} must be positive")
    if args.gamma is not None and args.gamma < 0:
        raise UsageError("--gamma must be >= 0")
    if args.samples is not None and args.samples < 2:
        raise UsageError("--samples must be at least 2")
    return RunConfig(
        command=args.command, b=args.b, gamma=args.gamma, tp=args.tp, tmax=args.tmax,
        samples=args.samples, method=args.method, slices=args.slices, out=args.out,
        format=args.format, reference_rate=args.reference_rate or "b1", extra=extra,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, DomainError, OutOfRangeError, ResolutionError) as exc:
        print(f"superrad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"superrad: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
