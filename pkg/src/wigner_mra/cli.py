"""Command line front end: ``wigner-mra {evolve,gdr,analyze,selftest}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import math
import platform
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, apply_overrides, parse_config
from .connection import BandOverlapError, InadmissibleOrderError
from .diagnostics import REPORT_COLUMNS, cat_state, coherent_state, compare, ground_state, report
from .fileio import read_field_csv, write_field_csv, write_manifest, write_pgm, write_table_csv
from .gdr import (
    NumericalError,
    SolverError,
    StabilityError,
    assemble_dispersion_system,
    cutoff_level,
    evolve,
    solve_system,
)
from .moyal import CoefficientField, PhaseSpaceGrid, add_decoherence, assemble_moyal, poly_potential
from .scales import decompose, energy_table, slow_fast_split

__all__ = ["main", "run", "build_operator", "build_initial", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC", "EXIT_IO"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("wigner_mra")


def build_operator(cfg: RunConfig, grid: PhaseSpaceGrid):
    op = assemble_moyal(poly_potential(cfg.potential), grid, cfg.moyal_cut, (cfg.family_q, cfg.family_p))
    return add_decoherence(op, cfg.decoherence, cfg.family_p) if cfg.decoherence > 0 else op


def build_initial(cfg: RunConfig, grid: PhaseSpaceGrid) -> CoefficientField:
    if cfg.initial == "ground":
        return ground_state(grid, cfg.state_omega)
    if cfg.initial == "cat":
        return cat_state(grid, cfg.cat_separation, cfg.state_omega, cfg.state_q)
    return coherent_state(grid, cfg.state_q, cfg.state_p, cfg.state_omega)


def _versions() -> dict:
    import matplotlib
    import mpmath
    import scipy

    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "mpmath": mpmath.__version__,
        "wigner_mra": __version__,
    }


class _Emitter:
    """Collects every written file for the manifest."""

    def __init__(self, out: Path, cfg: RunConfig):
        self.out = out
        self.cfg = cfg
        self.files: list[Path] = []
        out.mkdir(parents=True, exist_ok=True)

    def add(self, path: Path) -> Path:
        self.files.append(path)
        return path

    def snapshot(self, f: CoefficientField, tag: str):
        self.add(write_field_csv(f, self.out / f"{tag}.csv"))
        self.add(write_pgm(f, self.out / f"{tag}.pgm", self.cfg.pgm_clip or None))

    def diagnostics(self, fields_, potential, family, name="diagnostics"):
        rows = [report(f, potential, family).row() for f in fields_]
        self.add(write_table_csv(self.out / f"{name}.csv", REPORT_COLUMNS, rows))
        if self.cfg.figures:
            from .plotting import plot_diagnostics

            self.add(plot_diagnostics(REPORT_COLUMNS, rows, self.out / f"{name}.png"))
        return rows

    def scales(self, f: CoefficientField, family):
        rows = energy_table(decompose(f, family), f.grid.cell)
        self.add(write_table_csv(self.out / "scales.csv", ("level", "energy", "fraction"), rows))
        if self.cfg.figures:
            from .plotting import plot_field, plot_scales

            self.add(plot_scales(rows, self.out / "scales.png"))
            self.add(plot_field(f, self.out / "field_final.png"))
        return rows

    def finish(self, extra: dict):
        payload = {"config": self.cfg.as_dict(), "versions": _versions(), **extra}
        write_manifest(self.out, payload, self.files)


def _summary(lines):
    for key, value in lines:
        print(f"{key},{value}")


def _run_evolve(cfg: RunConfig, em: _Emitter) -> dict:
    grid = cfg.grid
    potential = poly_potential(cfg.potential)
    op = build_operator(cfg, grid)
    initial = build_initial(cfg, grid)
    traj = evolve(op, initial, cfg.t_end, cfg.dt, cfg.integrator, cfg.stride, cfg.safety)
    for k, f in enumerate(traj.fields):
        em.snapshot(f, f"snapshot_{k:04d}")
    rows = em.diagnostics(traj.fields, potential, cfg.family_q)
    em.scales(traj.final, cfg.family_q)
    split = slow_fast_split(traj.final, cfg.family_q, cfg.n_slow)
    extra = {"effective_dt": traj.dt, "snapshots": len(traj), "fast_fraction": split.fast_fraction}
    if cfg.cutoff:
        extra["cutoff"] = _run_cutoff(cfg, em)
    final = dict(zip(REPORT_COLUMNS, rows[-1]))
    _summary(
        [("effective_dt", repr(traj.dt)), ("snapshots", len(traj))]
        + [(k, repr(v)) for k, v in final.items()]
        + [("fast_fraction", repr(split.fast_fraction))]
    )
    return extra


def _run_cutoff(cfg: RunConfig, em: _Emitter) -> dict:
    def solve(N):
        J = int(round(math.log2(N)))
        g = PhaseSpaceGrid(cfg.q0, cfg.lq, cfg.p0, cfg.lp, J, J, cfg.hbar, cfg.mass)
        op = build_operator(cfg, g)
        return evolve(op, build_initial(cfg, g), cfg.t_end, cfg.dt, safety=cfg.safety, stride=10**9).final

    res = cutoff_level(solve, cfg.eps, cfg.ladder_max, cfg.ladder_min)
    rows = [(str(n), d) for n, d in sorted(res.differences.items())]
    em.add(write_table_csv(em.out / "cutoff.csv", ("N", "difference"), rows))
    _summary([("cutoff_level", res.level), ("cutoff_converged", res.converged)])
    return {"level": res.level, "converged": res.converged}


def _run_gdr(cfg: RunConfig, em: _Emitter) -> dict:
    grid = cfg.gdr_grid
    potential = poly_potential(cfg.potential)
    op = build_operator(cfg, grid)
    initial = build_initial(cfg, grid)
    T = cfg.window_length
    system = assemble_dispersion_system(op, (0.0, T), cfg.gdr_nt, cfg.family_t, initial, cfg.gdr_weight)
    solve_system(system, cfg.gdr_tol, cfg.gdr_max_iter)
    end = system.field_at(T)
    traj = evolve(op, initial, T, cfg.dt, cfg.integrator, 10**9, cfg.safety)
    gap = compare(end, traj.final)
    em.snapshot(initial, "gdr_start")
    em.snapshot(end, "gdr_end")
    em.snapshot(traj.final, "mol_end")
    em.diagnostics([initial, end], potential, cfg.family_q)
    em.scales(end, cfg.family_q)
    _summary(
        [
            ("unknowns", system.unknown_count),
            ("iterations", system.iterations),
            ("residual", repr(system.residual_norm)),
            ("gdr_vs_mol", repr(gap)),
            ("effective_dt", repr(traj.dt)),
        ]
    )
    return {
        "unknowns": system.unknown_count,
        "residual": system.residual_norm,
        "gdr_vs_mol": gap,
        "effective_dt": traj.dt,
        "window": T,
    }


def _run_analyze(cfg: RunConfig, em: _Emitter, snapshot: str) -> dict:
    f = read_field_csv(snapshot, hbar=cfg.hbar, mass=cfg.mass)
    potential = poly_potential(cfg.potential)
    rows = em.diagnostics([f], potential, cfg.family_q)
    em.scales(f, cfg.family_q)
    em.add(write_pgm(f, em.out / "analyzed.pgm", cfg.pgm_clip or None))
    _summary([(k, repr(v)) for k, v in zip(REPORT_COLUMNS, rows[0])])
    return {"snapshot": str(snapshot)}


def _run_selftest(cfg: RunConfig, em: _Emitter) -> dict:
    from .selftest import run_selftest

    results = run_selftest(cfg.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'},{name},{detail}")
    rows = [(name, "pass" if ok else "fail", detail) for name, ok, detail in results]
    em.add(write_table_csv(em.out / "selftest.csv", ("property", "status", "detail"), rows))
    failed = [r for r in results if not r[1]]
    if failed:
        raise NumericalError(f"{len(failed)} self-test properties failed")
    return {"selftest": len(results)}


def run(cfg: RunConfig, out, snapshot: str | None = None) -> int:
    """Execute one subcommand and write its outputs under ``out``."""
    try:
        em = _Emitter(Path(out), cfg)
        if cfg.subcommand == "evolve":
            extra = _run_evolve(cfg, em)
        elif cfg.subcommand == "gdr":
            extra = _run_gdr(cfg, em)
        elif cfg.subcommand == "analyze":
            if snapshot is None:
                raise ConfigError("analyze needs a snapshot CSV path")
            extra = _run_analyze(cfg, em, snapshot)
        else:
            extra = _run_selftest(cfg, em)
        em.finish({"subcommand": cfg.subcommand, **extra})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StabilityError as exc:
        print(f"numerical error [gdr.stability]: {exc}; suggested dt = {exc.suggested_dt:.6g}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NumericalError, SolverError) as exc:
        print(f"numerical error [gdr]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InadmissibleOrderError, BandOverlapError) as exc:
        print(f"numerical error [connection]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wigner-mra", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=("evolve", "gdr", "analyze", "selftest"))
    ap.add_argument("snapshot", nargs="?", help="snapshot CSV (analyze only)")
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--out", default="out", help="output directory (default: out)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--quiet", action="store_true", help="suppress progress lines on stderr")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text, args.config or "config")
        cfg = apply_overrides(replace(cfg, subcommand=args.subcommand), args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, args.out, args.snapshot)


if __name__ == "__main__":
    sys.exit(main())
