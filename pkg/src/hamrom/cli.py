"""Config-driven experiment pipeline.

Five subcommands cover the offline/online stages end to end::

    hamrom snapshots   --preset wave-desk        # integrate the full model
    hamrom build-basis --preset wave-desk        # reduced basis + report
    hamrom build-deim  --preset nls-desk         # hyper-reduction operator
    hamrom simulate    --preset wave-desk        # FOM/ROM runs + error CSV
    hamrom report      --preset wave-desk        # figure data, plots, summary

Artifacts land under the config's output directory (override with --out).
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import time
from pathlib import Path

import numpy as np

from . import reporting
from .basis import (
    GreedyConfig,
    SnapshotSet,
    collect_snapshots,
    complex_svd_basis,
    cotangent_lift_basis,
    greedy_symplectic_basis,
    pod_basis,
)
from .config import ExperimentConfig, load_config, preset_names
from .deim import build_hamiltonian_operator, build_interpolation_operator, sdeim_basis
from .errors import ConfigError, HamromError, NumericalError
from .integrators import integrate
from .matio import read_matrix, write_matrix, write_matrix_csv, write_metadata
from .rom import assemble_pod_rom, assemble_symplectic_rom, error_series, simulate_rom
from .svd import truncated_svd
from .symplectic import SymplecticBasis

BASIS_METHODS = ("pod", "cotangent", "csvd", "greedy")


def _out_dir(config, args):
    out = Path(args.out) if args.out else Path(config.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    config = load_config(source=args.config, preset=args.preset)
    if args.jobs:
        config.jobs = args.jobs
    if args.fresh_snapshots:
        config.fresh_snapshots = True
    np.random.seed(config.seed)
    return config


def _write_snapshots(out, snaps):
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    write_matrix(snap_dir / "states.smrb", snaps.states)
    if snaps.nonlinear is not None:
        write_matrix(snap_dir / "nonlinear.smrb", snaps.nonlinear)
    provenance = np.column_stack([snaps.times, snaps.parameters])
    write_matrix_csv(snap_dir / "provenance.csv", provenance)
    return snap_dir


def _read_snapshots(out, config):
    snap_dir = out / "snapshots"
    if not (snap_dir / "states.smrb").exists():
        raise ConfigError(f"no snapshots under {snap_dir}; run the snapshots stage first")
    states = read_matrix(snap_dir / "states.smrb")
    provenance = read_matrix(snap_dir / "provenance.csv")
    nonlinear = None
    if (snap_dir / "nonlinear.smrb").exists():
        nonlinear = read_matrix(snap_dir / "nonlinear.smrb")
    return SnapshotSet(
        states=states,
        times=provenance[:, 0],
        parameters=provenance[:, 1:],
        nonlinear=nonlinear,
    )


def cmd_snapshots(args):
    config = _load(args)
    out = _out_dir(config, args)
    model = config.build_model()
    started = time.perf_counter()
    snaps = collect_snapshots(
        model,
        config.parameter_grid(),
        grid=config.grid,
        scheme=config.scheme,
        newton=config.newton(),
        store_every=config.store_every,
        jobs=config.jobs,
    )
    elapsed = time.perf_counter() - started
    snap_dir = _write_snapshots(out, snaps)
    write_metadata(
        snap_dir / "meta.json",
        {
            "model": config.kind,
            "columns": int(snaps.count),
            "dt": config.dt,
            "store_every": config.store_every,
            "wall_time_s": elapsed,
        },
    )
    print(f"wrote {snaps.count} snapshot columns to {snap_dir}")
    return 0


def _basis_path(out, method):
    return out / "basis" / f"{method}.smrb"


def _write_basis(out, method, matrix, meta):
    basis_dir = out / "basis"
    basis_dir.mkdir(exist_ok=True)
    write_matrix(basis_dir / f"{method}.smrb", matrix)
    write_metadata(basis_dir / f"{method}.json", meta)


def _read_paired_basis(out, method):
    path = _basis_path(out, method)
    if not path.exists():
        raise ConfigError(f"basis artifact {path} missing; run build-basis first")
    return SymplecticBasis.from_pair_block(read_matrix(path))


def cmd_build_basis(args):
    config = _load(args)
    out = _out_dir(config, args)
    model = config.build_model()
    method = args.method or config.method
    if method not in BASIS_METHODS:
        raise ConfigError(f"unknown basis method {method!r}; choose from {BASIS_METHODS}")
    started = time.perf_counter()
    config_hash = hashlib.sha256(config.to_ini().encode()).hexdigest()[:16]
    meta = {"model": config.kind, "method": method, "config_hash": config_hash}
    if method == "greedy":
        greedy_cfg = GreedyConfig(
            delta=config.delta,
            parameter_grid=config.parameter_grid(),
            max_pairs=config.max_pairs,
            indicator=config.indicator,
            grid=config.grid,
            newton=config.newton(),
            store_every=config.store_every,
            fresh_snapshots=config.fresh_snapshots,
        )
        basis, report = greedy_symplectic_basis(model, greedy_cfg)
        matrix = basis.assembled
        meta.update(
            pairs=basis.k,
            termination=report.termination,
            symplecticity=basis.symplecticity_residual(),
            orthonormality=basis.orthonormality_residual(),
        )
        rows = [
            [float(i), *map(float, omega), ind, sigma]
            for i, omega, ind, sigma in report.rows()
        ]
        (out / "basis").mkdir(exist_ok=True)
        with open(out / "basis" / "greedy_report.csv", "w", encoding="ascii") as fh:
            fh.write("iteration," + ",".join(f"omega{j}" for j in range(model.parameter_dim)))
            fh.write(",indicator,sigma\n")
            for row in rows:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
        if not (out / "snapshots" / "states.smrb").exists():
            # The greedy cache doubles as a snapshot set when the full
            # parameter sweep was skipped.
            _write_snapshots(out, report.snapshots)
    else:
        snaps = _read_snapshots(out, config)
        if method == "pod":
            matrix = pod_basis(snaps, config.pod_columns)
            meta.update(columns=config.pod_columns)
        elif method == "cotangent":
            basis = cotangent_lift_basis(snaps, config.max_pairs)
            matrix = basis.assembled
            meta.update(
                pairs=basis.k,
                symplecticity=basis.symplecticity_residual(),
                orthonormality=basis.orthonormality_residual(),
            )
        else:
            basis = complex_svd_basis(snaps, config.max_pairs)
            matrix = basis.assembled
            meta.update(
                pairs=basis.k,
                symplecticity=basis.symplecticity_residual(),
                orthonormality=basis.orthonormality_residual(),
            )
    meta["wall_time_s"] = time.perf_counter() - started
    _write_basis(out, method, matrix, meta)
    print(f"wrote {method} basis ({matrix.shape[0]}x{matrix.shape[1]}) to {_basis_path(out, method)}")
    return 0


def cmd_build_deim(args):
    config = _load(args)
    out = _out_dir(config, args)
    model = config.build_model()
    if model.nonlinear_grad is None:
        raise ConfigError(f"model {config.kind!r} has no nonlinear term to interpolate")
    snaps = _read_snapshots(out, config)
    if snaps.nonlinear is None or snaps.nonlinear.size == 0:
        raise ConfigError("snapshot set carries no nonlinear evaluations")
    basis = _read_paired_basis(out, args.basis_method or "greedy")
    deim_dir = out / "deim"
    deim_dir.mkdir(exist_ok=True)
    started = time.perf_counter()

    if args.flavor == "sdeim":
        enlarged = sdeim_basis(
            basis, snaps, delta=config.sdeim_delta, max_pairs=config.sdeim_max_pairs
        )
        op = build_hamiltonian_operator(model, enlarged, snaps, sites=config.sites)
        _write_basis(
            out,
            "sdeim",
            enlarged.assembled,
            {
                "model": config.kind,
                "method": "sdeim",
                "pairs": enlarged.k,
                "symplecticity": enlarged.symplecticity_residual(),
                "orthonormality": enlarged.orthonormality_residual(),
            },
        )
    else:
        nonlinear_basis = truncated_svd(snaps.nonlinear, config.deim_columns).left_vectors
        op = build_interpolation_operator(nonlinear_basis, basis, paired=True, n=model.n)

    write_matrix(deim_dir / f"{args.flavor}_basis.smrb", op.basis_matrix)
    write_matrix(deim_dir / f"{args.flavor}_projector.smrb", op.projector)
    with open(deim_dir / f"{args.flavor}_indices.csv", "w", encoding="ascii") as fh:
        fh.write("index\n")
        for idx in op.indices:
            fh.write(f"{int(idx)}\n")
    closure = sorted(
        {int(i) for i in op.indices}
        | {int(i + model.n if i < model.n else i - model.n) for i in op.indices}
    )
    write_metadata(
        deim_dir / f"{args.flavor}_meta.json",
        {
            "flavor": args.flavor,
            "mode": op.mode,
            "samples": int(op.m),
            "paired": bool(op.paired),
            "pairing_closed": closure == sorted(int(i) for i in op.indices),
            "condition": op.condition,
            "wall_time_s": time.perf_counter() - started,
        },
    )
    print(f"wrote {args.flavor} operator ({op.m} samples) to {deim_dir}")
    return 0


def _rom_for(config, model, out, method):
    if method == "pod":
        path = _basis_path(out, "pod")
        if not path.exists():
            raise ConfigError(f"basis artifact {path} missing; run build-basis first")
        return assemble_pod_rom(model, read_matrix(path))
    basis = _read_paired_basis(out, method)
    op = None
    if model.nonlinear_grad is not None:
        if method == "sdeim":
            op = build_hamiltonian_operator(model, basis, _read_snapshots(out, config),
                                            sites=config.sites)
        else:
            deim_meta = out / "deim" / "deim_meta.json"
            if deim_meta.exists():
                U = read_matrix(out / "deim" / "deim_basis.smrb")
                op = build_interpolation_operator(U, basis, paired=True, n=model.n)
    return assemble_symplectic_rom(model, basis, deim=op)


def cmd_simulate(args):
    config = _load(args)
    out = _out_dir(config, args)
    model = config.build_model()
    omega = np.asarray(args.omega if args.omega else config.test_parameter, dtype=float)
    sim_dir = out / "simulate"
    sim_dir.mkdir(exist_ok=True)

    fom = integrate(
        model,
        model.initial_state(model.parameter(omega)),
        config.grid,
        omega=omega,
        newton=config.newton(),
        variant=config.variant,
        store_every=config.store_every,
    )
    write_matrix(sim_dir / "fom.smrb", fom.states)
    write_metadata(
        sim_dir / "fom.json",
        {"omega": [float(v) for v in omega], "dt": config.dt, "model": config.kind},
    )

    methods = args.methods or [m for m in ("greedy", "cotangent", "csvd", "sdeim", "pod")
                               if _basis_path(out, m).exists()]
    for method in methods:
        rom = _rom_for(config, model, out, method)
        traj = simulate_rom(
            rom,
            config.grid,
            omega,
            newton=config.newton(),
            variant=config.variant,
            store_every=config.store_every,
            substeps="auto",
        )
        series = error_series(fom, rom, traj, omega=omega)
        write_matrix(sim_dir / f"rom_{method}.smrb", traj.states)
        with open(sim_dir / f"errors_{method}.csv", "w", encoding="ascii") as fh:
            fh.write("t,l2,H_full,H_rom,deltaH\n")
            for row in series.rows():
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")
        print(f"{method}: final l2 {series.l2[-1]:.6e}, deltaH(0) {series.delta_h[0]:.6e}")
    return 0


def cmd_report(args):
    config = _load(args)
    out = _out_dir(config, args)
    reporting.build_report(config, out, convergence=args.convergence)
    print(f"report written to {out / 'report'}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hamrom",
        description="Structure-preserving reduced-order modeling experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to an experiment INI file")
        p.add_argument("--preset", choices=preset_names(), help="bundled configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--jobs", type=int, help="worker threads for parameter sweeps")
        p.add_argument(
            "--fresh-snapshots",
            action="store_true",
            help="greedy candidates come only from the newest trajectory",
        )

    p = sub.add_parser("snapshots", help="integrate the full model over the parameter grid")
    common(p)
    p.set_defaults(func=cmd_snapshots)

    p = sub.add_parser("build-basis", help="construct a reduced basis")
    common(p)
    p.add_argument("--method", choices=BASIS_METHODS, help="override the configured method")
    p.set_defaults(func=cmd_build_basis)

    p = sub.add_parser("build-deim", help="construct a hyper-reduction operator")
    common(p)
    p.add_argument("--flavor", choices=("deim", "sdeim"), default="sdeim")
    p.add_argument("--basis-method", help="paired basis artifact to start from")
    p.set_defaults(func=cmd_build_deim)

    p = sub.add_parser("simulate", help="run full and reduced models at a test parameter")
    common(p)
    p.add_argument("--omega", type=float, nargs="+", help="test parameter override")
    p.add_argument("--methods", nargs="+", help="reduced models to simulate")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="emit figure data, plots, and the summary table")
    common(p)
    p.add_argument("--convergence", action="store_true",
                   help="include the per-iteration reduced-error study (slow)")
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    except HamromError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
