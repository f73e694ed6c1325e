"""Command-line front end.

    fsscomp {spectra,fidelity-sweep,hardware-plan,equivalence,reshape} --config run.ini [--out DIR]

The config file is INI style (``key = value`` under ``[section]`` headers);
see README.md for the schema. All numeric output is CSV with 12 significant
digits and LF line endings, so identical configs give byte-identical files.

Exit codes: 0 success, 1 physics check failed, 2 bad config, 3 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .compensation import apply_shift, optimal_shift_for_qdot, separability_residual
from .errors import FSSCompError, ParameterError
from .hardware import DEFAULT_CATALOG, DEFAULT_MAX_CELLS, PockelsCell, plan_cells, residual_fidelity
from .reshape import three_step
from .spectra import (
    DEFAULT_N,
    DEFAULT_SPAN_GAMMAS,
    FrequencyGrid,
    QDotParams,
    SpectralAmplitude,
    eval_phi,
    lorentzian_amplitude,
    marginal,
    normalize,
)
from .state import TwoPhotonState, concurrence, fidelity_phi_plus, reduce_polarization, state_fidelity
from .timedomain import PhaseRamp, ramp_compensate

log = logging.getLogger("fsscomp")

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_CONFIG = 2
EXIT_IO = 3

EQUIVALENCE_TOL = 1e-6
MAX_TABLE_POINTS = 128  # per axis, for the 2-D magnitude tables
N_WINDOWS = 20


class ConfigError(FSSCompError):
    """Missing or invalid configuration entry."""


class CheckFailed(FSSCompError):
    """A physics check run by a command did not pass."""


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    steps: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class SpectrumSpec:
    kind: str
    path: str = "H"
    center1: float = 0.0  # rad/ns, relative to the grid centers
    center2: float = 0.0
    width1: float = 1.0
    width2: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    qdot: QDotParams
    span_gammas: float = DEFAULT_SPAN_GAMMAS
    n: int = DEFAULT_N
    cells: tuple[PockelsCell, ...] = DEFAULT_CATALOG
    window: float = 5.0
    max_cells: int = DEFAULT_MAX_CELLS
    windows: tuple[float, ...] | None = None
    sweep: SweepSpec | None = None
    reshape_a: SpectrumSpec | None = None
    reshape_b: SpectrumSpec | None = None
    out_dir: Path = Path("out")
    plots: bool = False

    def grid(self, params: QDotParams | None = None) -> FrequencyGrid:
        return FrequencyGrid.default(params or self.qdot, self.span_gammas, self.n)


# ---------------------------------------------------------------- config


def _get(cp: configparser.ConfigParser, section: str, key: str, conv: Callable = float, default=None):
    name = f"{section}.{key}"
    if not cp.has_option(section, key):
        if default is None:
            raise ConfigError(f"missing required key '{name}'")
        return default
    raw = cp.get(section, key)
    try:
        value = conv(raw)
    except ValueError as exc:
        raise ConfigError(f"invalid value for '{name}': {raw!r}") from exc
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"'{name}' must be finite, got {raw!r}")
    return value


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "yes", "true", "on"):
        return True
    if lowered in ("0", "no", "false", "off"):
        return False
    raise ValueError(raw)


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(x) for x in raw.replace(",", " ").split())


def _spectrum_spec(cp, section: str) -> SpectrumSpec:
    if not cp.has_section(section):
        raise ConfigError(f"missing required section '[{section}]'")
    kind = _get(cp, section, "kind", str)
    if kind == "cascade":
        path = _get(cp, section, "path", str, "H")
        if path not in ("H", "V"):
            raise ConfigError(f"'{section}.path' must be H or V, got {path!r}")
        return SpectrumSpec("cascade", path=path)
    if kind == "lorentzian":
        spec = SpectrumSpec(
            "lorentzian",
            center1=_get(cp, section, "center1", float, 0.0),
            center2=_get(cp, section, "center2", float, 0.0),
            width1=_get(cp, section, "width1"),
            width2=_get(cp, section, "width2"),
        )
        for key in ("width1", "width2"):
            if not getattr(spec, key) > 0:
                raise ConfigError(f"'{section}.{key}' must be positive")
        return spec
    raise ConfigError(f"'{section}.kind' must be 'lorentzian' or 'cascade', got {kind!r}")


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Parse and validate a run config. Raises ConfigError naming the offending key."""
    overrides = overrides or {}
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (S, Gamma)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    if not cp.has_section("qdot"):
        raise ConfigError("missing required section '[qdot]' (keys 'qdot.S', 'qdot.Gamma')")
    S = _get(cp, "qdot", "S")
    Gamma = _get(cp, "qdot", "Gamma")
    if not Gamma > 0:
        raise ConfigError(f"'qdot.Gamma' must be positive, got {Gamma}")
    typical = QDotParams.typical(S, Gamma)
    try:
        qdot = QDotParams(
            omega0=_get(cp, "qdot", "omega0", float, typical.omega0),
            omegaH2=_get(cp, "qdot", "omegaH2", float, typical.omegaH2),
            S=S,
            Gamma=Gamma,
        )
    except ParameterError as exc:
        raise ConfigError(f"invalid [qdot] section: {exc}") from exc

    span = overrides.get("span_gammas") or _get(cp, "grid", "span_gammas", float, DEFAULT_SPAN_GAMMAS)
    n = overrides.get("n") or _get(cp, "grid", "n", int, DEFAULT_N)
    if not span > 0:
        raise ConfigError(f"'grid.span_gammas' must be positive, got {span}")
    if n < 16 or n & (n - 1):
        raise ConfigError(f"'grid.n' must be a power of two >= 16, got {n}")

    cells = []
    if _get(cp, "hardware", "include_default_cell", _bool, True):
        cells.extend(DEFAULT_CATALOG)
    for section in cp.sections():
        if not section.startswith("cell."):
            continue
        try:
            cells.append(
                PockelsCell(
                    alpha=_get(cp, section, "alpha"),
                    max_slew=_get(cp, section, "max_slew"),
                    max_voltage=_get(cp, section, "max_voltage"),
                    name=section[len("cell."):],
                )
            )
        except ParameterError as exc:
            raise ConfigError(f"invalid [{section}]: {exc}") from exc
    window = _get(cp, "hardware", "window", float, 5.0)
    if not window > 0:
        raise ConfigError(f"'hardware.window' must be positive, got {window}")
    max_cells = _get(cp, "hardware", "max_cells", int, DEFAULT_MAX_CELLS)
    if max_cells < 1:
        raise ConfigError(f"'hardware.max_cells' must be at least 1, got {max_cells}")
    windows = None
    if cp.has_option("hardware", "windows"):
        windows = _get(cp, "hardware", "windows", _float_list)
        if not windows or any(w < 0 or not math.isfinite(w) for w in windows):
            raise ConfigError("'hardware.windows' must be a list of non-negative numbers")

    sweep = None
    if cp.has_section("sweep"):
        parameter = _get(cp, "sweep", "parameter", str)
        if parameter not in ("S", "Gamma"):
            raise ConfigError(f"'sweep.parameter' must be S or Gamma, got {parameter!r}")
        sweep = SweepSpec(
            parameter,
            _get(cp, "sweep", "start"),
            _get(cp, "sweep", "stop"),
            _get(cp, "sweep", "steps", int),
        )
        if sweep.steps < 2:
            raise ConfigError(f"'sweep.steps' must be at least 2, got {sweep.steps}")
        if parameter == "Gamma" and min(sweep.start, sweep.stop) <= 0:
            raise ConfigError("'sweep.start' and 'sweep.stop' must be positive when sweeping Gamma")

    reshape_a = _spectrum_spec(cp, "reshape.a") if cp.has_section("reshape.a") else None
    reshape_b = _spectrum_spec(cp, "reshape.b") if cp.has_section("reshape.b") else None

    out_dir = overrides.get("out") or _get(cp, "output", "directory", str, "out")
    return RunConfig(
        qdot=qdot,
        span_gammas=span,
        n=n,
        cells=tuple(cells),
        window=window,
        max_cells=max_cells,
        windows=windows,
        sweep=sweep,
        reshape_a=reshape_a,
        reshape_b=reshape_b,
        out_dir=Path(out_dir),
        plots=bool(overrides.get("plots", False)),
    )


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return "0" if v == 0 else f"{v:.12g}"  # no "-0"
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_svg(path: Path, x, series: dict, xlabel: str, ylabel: str) -> Path:
    """Minimal line chart; deterministic text output."""
    width, height, pad = 640, 400, 50
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    x0, x1 = float(x.min()), float(x.max())
    allv = np.concatenate(list(ys.values()))
    y0, y1 = float(allv.min()), float(allv.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="15" y="{height / 2}" transform="rotate(-90 15 {height / 2})" '
        f'text-anchor="middle">{ylabel}</text>',
        f'<text x="{pad}" y="{height - pad + 15}">{x0:.4g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 15}" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{pad - 5}" y="{height - pad}" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{pad - 5}" y="{pad + 5}" text-anchor="end">{y1:.4g}</text>',
    ]
    for i, (name, y) in enumerate(ys.items()):
        color = colors[i % len(colors)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" points="{pts}"/>')
        out.append(f'<text x="{width - pad - 5}" y="{pad + 20 * (i + 1)}" text-anchor="end" '
                   f'fill="{color}">{name}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    return path


# ---------------------------------------------------------------- commands


def cmd_spectra(cfg: RunConfig) -> list[Path]:
    params = cfg.qdot
    grid = cfg.grid()
    files = []
    marg = {}
    for path in ("H", "V"):
        phi = normalize(eval_phi(path, grid, params))
        p1, p2 = marginal(phi, 1), marginal(phi, 2)
        marg[path] = (p1, p2)
        files.append(write_csv(
            cfg.out_dir / f"marginal_{path}.csv",
            ("omega1", "density1", "omega2", "density2"),
            zip(grid.axis1, p1, grid.axis2, p2),
        ))
        files.append(_magnitude_table(cfg, phi, f"magnitude_{path}.csv"))
    if cfg.plots:
        for k in (1, 2):
            ax = grid.offsets(k, grid.center1 if k == 1 else grid.center2)
            keep = np.abs(ax) <= 10 * params.Gamma + abs(params.split_rate)
            files.append(write_svg(
                cfg.out_dir / f"marginal_photon{k}.svg",
                ax[keep],
                {p: marg[p][k - 1][keep] for p in ("H", "V")},
                f"omega{k} - omegaH{k} (rad/ns)",
                "density",
            ))
    return files


def _magnitude_table(cfg: RunConfig, phi: SpectralAmplitude, name: str) -> Path:
    """|phi| on a sub-sampled box around the line centers (long format)."""
    grid = phi.grid
    G = cfg.qdot.Gamma
    half = 8 * G + abs(cfg.qdot.split_rate)
    idx = []
    for k in (1, 2):
        d = grid.offsets(k, grid.center1 if k == 1 else grid.center2)
        sel = np.flatnonzero(np.abs(d) <= half)
        stride = max(1, -(-sel.size // MAX_TABLE_POINTS))
        idx.append(sel[::stride])
    mag = np.abs(phi.values[np.ix_(idx[0], idx[1])])
    rows = (
        (grid.axis1[i], grid.axis2[j], mag[a, b])
        for a, i in enumerate(idx[0])
        for b, j in enumerate(idx[1])
    )
    return write_csv(cfg.out_dir / name, ("omega1", "omega2", "abs_phi"), rows)


def _sweep_point(cfg: RunConfig, params: QDotParams) -> tuple[float, float, float, float]:
    state = TwoPhotonState.cascade(params, cfg.grid(params))
    rho = reduce_polarization(state)
    fid, conc = fidelity_phi_plus(rho), concurrence(rho)
    comp = apply_shift(state, optimal_shift_for_qdot(params))
    comp_fid = fidelity_phi_plus(reduce_polarization(comp))
    return fid, conc, comp_fid, separability_residual(comp).residual


def cmd_fidelity_sweep(cfg: RunConfig) -> list[Path]:
    if cfg.sweep is None:
        raise ConfigError("missing required section '[sweep]' (keys 'sweep.parameter', 'sweep.start', "
                          "'sweep.stop', 'sweep.steps')")
    sw = cfg.sweep
    rows = []
    for value in sw.values():
        params = replace(cfg.qdot, **{sw.parameter: float(value)})
        rows.append((float(value), *_sweep_point(cfg, params)))
        log.info("%s = %.6g: uncompensated fidelity %.6f", sw.parameter, value, rows[-1][1])
    name = f"fidelity_sweep_{sw.parameter}"
    files = [write_csv(
        cfg.out_dir / f"{name}.csv",
        ("parameter", "uncompensated_fidelity", "uncompensated_concurrence", "compensated_fidelity", "residual"),
        rows,
    )]
    if cfg.plots:
        arr = np.array(rows)
        files.append(write_svg(
            cfg.out_dir / f"{name}.svg", arr[:, 0],
            {"uncompensated": arr[:, 1], "compensated": arr[:, 3]},
            sw.parameter, "fidelity to Phi+",
        ))
    return files


def cmd_hardware_plan(cfg: RunConfig) -> list[Path]:
    if not cfg.cells:
        raise ConfigError("empty cell catalog: add a [cell.NAME] section or set 'hardware.include_default_cell'")
    S, G = cfg.qdot.S, cfg.qdot.Gamma
    rows = []
    for cell in cfg.cells:
        plan = plan_cells(S, cell, cfg.window, cfg.max_cells)
        rows.append((
            cell.name, cell.alpha, cell.max_slew, cell.max_voltage, cell.placeholder_limits,
            S, plan.window, plan.required_slew, plan.n_cells, plan.per_cell_slew,
            plan.peak_voltage, plan.achieved_rate, plan.feasible, plan.binding or "",
        ))
        if not plan.feasible:
            log.warning("cell %s infeasible: %s binds", cell.name, plan.binding)
    files = [write_csv(
        cfg.out_dir / "hardware_plan.csv",
        ("cell", "alpha", "max_slew", "max_voltage", "placeholder_limits", "S", "window",
         "required_slew", "n_cells", "per_cell_slew", "peak_voltage", "achieved_rate",
         "feasible", "binding"),
        rows,
    )]
    windows = cfg.windows if cfg.windows is not None else tuple(np.linspace(0, 10 / G, N_WINDOWS))
    curve = [(w, residual_fidelity(S, G, w)) for w in windows]
    files.append(write_csv(cfg.out_dir / "residual_fidelity.csv", ("window", "residual_fidelity"), curve))
    if cfg.plots:
        arr = np.array(curve)
        files.append(write_svg(cfg.out_dir / "residual_fidelity.svg", arr[:, 0],
                               {"fidelity": arr[:, 1]}, "window (ns)", "fidelity to Phi+"))
    return files


def cmd_equivalence(cfg: RunConfig) -> list[Path]:
    params = cfg.qdot
    state = TwoPhotonState.cascade(params, cfg.grid())
    shifted = apply_shift(state, optimal_shift_for_qdot(params))
    ramped = ramp_compensate(state, PhaseRamp.canonical(params))
    del state
    fid = state_fidelity(shifted, ramped)
    ok = fid >= 1 - EQUIVALENCE_TOL
    files = [write_csv(
        cfg.out_dir / "equivalence.csv",
        ("quantity", "value"),
        [
            ("S", params.S),
            ("Gamma", params.Gamma),
            ("fidelity_shift_vs_ramp", fid),
            ("infidelity", 1 - fid),
            ("threshold", EQUIVALENCE_TOL),
            ("shift_fidelity_phi_plus", fidelity_phi_plus(reduce_polarization(shifted))),
            ("ramp_fidelity_phi_plus", fidelity_phi_plus(reduce_polarization(ramped))),
            ("pass", ok),
        ],
    )]
    if not ok:
        raise CheckFailed(f"shift and ramp compensation differ: fidelity {fid:.12g} < 1 - {EQUIVALENCE_TOL:g}")
    return files


def _build_spectrum(spec: SpectrumSpec, grid: FrequencyGrid, params: QDotParams) -> SpectralAmplitude:
    if spec.kind == "cascade":
        return normalize(eval_phi(spec.path, grid, params))
    return lorentzian_amplitude(
        grid, grid.center1 + spec.center1, grid.center2 + spec.center2, spec.width1, spec.width2
    )


def cmd_reshape(cfg: RunConfig) -> list[Path]:
    if cfg.reshape_a is None or cfg.reshape_b is None:
        missing = "reshape.a" if cfg.reshape_a is None else "reshape.b"
        raise ConfigError(f"missing required section '[{missing}]' (key '{missing}.kind')")
    grid = cfg.grid()
    a = _build_spectrum(cfg.reshape_a, grid, cfg.qdot)
    b = _build_spectrum(cfg.reshape_b, grid, cfg.qdot)
    _, rep = three_step(a, b)
    steps = [(name, True if i == 0 else rep.applied[i - 1], o)
             for i, (name, o) in enumerate(zip(rep.STEP_NAMES, rep.overlaps))]
    files = [
        write_csv(cfg.out_dir / "reshape_steps.csv", ("step", "applied", "abs_overlap"), steps),
        write_csv(
            cfg.out_dir / "reshape_summary.csv",
            ("quantity", "value"),
            [
                ("shift_delta1", rep.shift.delta1),
                ("shift_delta2", rep.shift.delta2),
                ("warp_norm_error", rep.warp_norm_error),
                ("warp_regularized", rep.warps.regularized),
                ("phase_separability", rep.phases.separability),
                ("final_overlap_re", rep.final_overlap.real),
                ("final_overlap_im", rep.final_overlap.imag),
                ("boundary_mass", rep.boundary_mass),
                ("notes", "; ".join(rep.notes)),
            ],
        ),
        write_csv(
            cfg.out_dir / "reshape_warp.csv",
            ("omega1", "warp1", "omega2", "warp2"),
            zip(grid.axis1, rep.warps.warp1.image, grid.axis2, rep.warps.warp2.image),
        ),
        write_csv(
            cfg.out_dir / "reshape_phase.csv",
            ("omega1", "phase1", "omega2", "phase2"),
            zip(grid.axis1, rep.phases.phase1, grid.axis2, rep.phases.phase2),
        ),
    ]
    return files


COMMANDS = {
    "spectra": cmd_spectra,
    "fidelity-sweep": cmd_fidelity_sweep,
    "hardware-plan": cmd_hardware_plan,
    "equivalence": cmd_equivalence,
    "reshape": cmd_reshape,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI run configuration")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--plots", action="store_true", help="also write SVG line plots")
    common.add_argument("--grid-n", type=int, help="grid points per axis (power of two)")
    common.add_argument("--grid-span-gammas", type=float, help="grid span in units of Gamma")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="fsscomp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).splitlines()[0])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    warnings.formatwarning = lambda msg, cat, *_a, **_k: f"{cat.__name__}: {msg}"
    overrides = {"out": args.out, "n": args.grid_n, "span_gammas": args.grid_span_gammas,
                 "plots": args.plots}
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        files = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except FSSCompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
