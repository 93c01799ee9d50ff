"""Figure data, rendered plots, and the run summary.

Every figure is emitted twice: a plot-ready CSV (one file per panel) and a
rendered PNG next to it. The summary table collects offline wall times and
final reduction errors; timing ratios are reported, never asserted, since
they are hardware-dependent.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ConfigError
from .integrators import integrate
from .matio import read_matrix, read_metadata, write_matrix_csv
from .rom import error_series, simulate_rom
from .svd import truncated_svd

__all__ = ["build_report", "write_series_csv", "render_lines"]

_METHOD_ORDER = ("greedy", "cotangent", "csvd", "sdeim", "pod")


def write_series_csv(path, header, columns):
    """CSV with one named column per array."""
    columns = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def render_lines(path, x, curves, xlabel, ylabel, logy=False, title=None):
    """Render one panel: ``curves`` maps label -> y array."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, y in curves.items():
        ax.plot(x, y, label=label, linewidth=1.2)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if curves:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _available_methods(out):
    basis_dir = out / "basis"
    return [m for m in _METHOD_ORDER if (basis_dir / f"{m}.smrb").exists()]


def build_report(config, out, convergence=False):
    from .cli import _read_snapshots, _rom_for  # late import, shared artifact layout

    out = Path(out)
    report_dir = out / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    model = config.build_model()
    omega = np.asarray(config.test_parameter, dtype=float)
    methods = _available_methods(out)
    if not methods:
        raise ConfigError(f"no basis artifacts under {out / 'basis'}; run build-basis first")

    grid = config.grid
    fom = integrate(
        model,
        model.initial_state(model.parameter(omega)),
        grid,
        omega=omega,
        newton=config.newton(),
        store_every=config.store_every,
    )

    roms, series, trajectories = {}, {}, {}
    for method in methods:
        rom = _rom_for(config, model, out, method)
        traj = simulate_rom(
            rom, grid, omega, newton=config.newton(), store_every=config.store_every,
            substeps="auto",
        )
        roms[method] = rom
        trajectories[method] = rom.basis_matrix @ traj.states
        series[method] = error_series(fom, rom, traj, omega=omega)

    _solution_panels(config, model, report_dir, fom, trajectories)
    _error_panels(report_dir, fom, series)
    _singular_value_panel(out, report_dir)
    if convergence:
        _convergence_panel(config, model, out, report_dir, fom, omega)
    _summary(out, report_dir, series)


def _solution_panels(config, model, report_dir, fom, trajectories):
    n = model.n
    x = model.grid.x
    wanted = (0.0, 1.0, 2.0) if config.kind == "wave" else (0.0, 10.0, 20.0)
    times = [t for t in wanted if t <= fom.times[-1] + 1e-12]
    if len(times) < 3:
        times = [0.0, fom.times[-1] / 2.0, fom.times[-1]]
    for t_want in times:
        j = int(np.argmin(np.abs(fom.times - t_want)))
        label = f"t{fom.times[j]:g}".replace(".", "p")

        def profile(states):
            if config.kind == "wave":
                return states[:n, j]
            return np.sqrt(states[:n, j] ** 2 + states[n:, j] ** 2)

        header = ["x", "full"] + list(trajectories)
        columns = [x, profile(fom.states)] + [profile(states) for states in trajectories.values()]
        write_series_csv(report_dir / f"solution_{label}.csv", header, columns)
        curves = {name: col for name, col in zip(header[1:], columns[1:])}
        ylabel = "q" if config.kind == "wave" else "|u|"
        render_lines(report_dir / f"solution_{label}.png", x, curves, "x", ylabel,
                     title=f"t = {fom.times[j]:g}")


def _error_panels(report_dir, fom, series):
    times = fom.times
    l2_header = ["t"] + list(series)
    l2_cols = [times] + [es.l2 for es in series.values()]
    write_series_csv(report_dir / "l2_error.csv", l2_header, l2_cols)
    render_lines(
        report_dir / "l2_error.png",
        times,
        {name: np.maximum(es.l2, 1e-18) for name, es in series.items()},
        "t",
        "L2 error",
        logy=True,
    )

    h_header = ["t", "full"] + list(series)
    first = next(iter(series.values()))
    h_cols = [times, first.hamiltonian_full] + [es.hamiltonian_reduced for es in series.values()]
    write_series_csv(report_dir / "hamiltonian.csv", h_header, h_cols)
    render_lines(
        report_dir / "hamiltonian.png",
        times,
        {name: col for name, col in zip(h_header[1:], h_cols[1:])},
        "t",
        "H",
    )


def _singular_value_panel(out, report_dir):
    snap_path = out / "snapshots" / "states.smrb"
    if not snap_path.exists():
        return
    states = read_matrix(snap_path)
    k = min(states.shape)
    sigma = truncated_svd(states, min(k, 200)).singular_values
    index = np.arange(1, sigma.size + 1)
    write_series_csv(report_dir / "singular_values.csv", ["index", "sigma"], [index, sigma])
    render_lines(
        report_dir / "singular_values.png",
        index,
        {"states": np.maximum(sigma, 1e-18)},
        "index",
        "singular value",
        logy=True,
    )


def _convergence_panel(config, model, out, report_dir, fom, omega):
    from .cli import _read_paired_basis
    from .rom import assemble_symplectic_rom

    basis = _read_paired_basis(out, "greedy")
    ks, errors = [], []
    for pairs in range(1, basis.k + 1):
        rom = assemble_symplectic_rom(model, basis.truncated(pairs))
        traj = simulate_rom(
            rom, config.grid, omega, newton=config.newton(),
            store_every=config.store_every, substeps="auto",
        )
        es = error_series(fom, rom, traj, omega=omega)
        ks.append(pairs)
        errors.append(float(es.l2.max()))
    write_series_csv(report_dir / "greedy_convergence.csv", ["k", "max_l2_error"], [ks, errors])
    render_lines(
        report_dir / "greedy_convergence.png",
        np.asarray(ks, dtype=float),
        {"greedy": np.maximum(np.asarray(errors), 1e-18)},
        "basis pairs",
        "max L2 error",
        logy=True,
    )


def _summary(out, report_dir, series):
    lines = ["run summary", "===========", ""]
    timings = {}
    snap_meta = out / "snapshots" / "meta.json"
    if snap_meta.exists():
        timings["snapshots"] = read_metadata(snap_meta).get("wall_time_s")
    for meta_path in sorted((out / "basis").glob("*.json")):
        record = read_metadata(meta_path)
        timings[f"basis:{meta_path.stem}"] = record.get("wall_time_s")
    lines.append("offline wall times (s):")
    for name, value in timings.items():
        if value is not None:
            lines.append(f"  {name:<18} {value:10.3f}")
    greedy_time = timings.get("basis:greedy")
    svd_side = [
        timings.get(f"basis:{m}") for m in ("cotangent", "csvd", "pod")
        if timings.get(f"basis:{m}") is not None
    ]
    if greedy_time is not None and svd_side and timings.get("snapshots") is not None:
        # SVD-based methods additionally need the full snapshot sweep.
        svd_total = max(svd_side) + timings["snapshots"]
        lines.append(f"  greedy/svd-based offline ratio: {greedy_time / svd_total:.3f}")
    lines.append("")
    lines.append("final errors at the test parameter:")
    for name, es in series.items():
        lines.append(
            f"  {name:<10} l2 {es.l2[-1]:12.6e}   deltaH(0) {es.delta_h[0]:12.6e}"
            f"   max|deltaH - deltaH(0)| {np.abs(es.delta_h - es.delta_h[0]).max():12.6e}"
        )
    (report_dir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
