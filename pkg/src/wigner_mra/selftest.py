"""Fast invariant suite behind ``wigner-mra selftest``."""
from __future__ import annotations

import tempfile
from math import factorial
from pathlib import Path

import numpy as np

from .connection import connection_coefficients, derivative_matrix, derivative_stencil
from .diagnostics import coherent_state, compare, harmonic_potential, oracle_harmonic, purity
from .fileio import read_field_csv, write_field_csv
from .gdr import evolve
from .moyal import CoefficientField, PhaseSpaceGrid, assemble_moyal, poly_potential
from .scales import FockStateList, fock_norm, slow_fast_split
from .transform import best_basis, fwt_2d, fwt_forward_1d, fwt_inverse_1d, fwt_inverse_2d

__all__ = ["run_selftest"]


def _check(name, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed property, reported rather than raised
        return name, False, f"{type(exc).__name__}: {exc}"
    return name, bool(ok), detail


def run_selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(seed)
    results = []

    def reconstruction():
        worst = 0.0
        for fam in ("haar", "daubechies-2", "daubechies-4", "daubechies-6", "daubechies-8"):
            x = rng.standard_normal(256)
            dec = fwt_forward_1d(x, fam)
            worst = max(worst, np.linalg.norm(fwt_inverse_1d(dec, fam) - x) / np.linalg.norm(x))
            worst = max(worst, abs(dec.total_energy - x @ x) / (x @ x))
        return worst <= 1e-10, f"max relative error {worst:.2e}"

    def reconstruction_2d():
        x = rng.standard_normal((64, 32))
        dec = fwt_2d(x, "daubechies-6")
        err = np.linalg.norm(fwt_inverse_2d(dec, "daubechies-6") - x) / np.linalg.norm(x)
        return err <= 1e-10, f"relative error {err:.2e}"

    def moments():
        worst = 0.0
        for d in (1, 2, 3):
            shifts, vals = derivative_stencil("daubechies-6", d)
            worst = max(worst, abs(np.sum(shifts.astype(float) ** d * vals) - (-1) ** d * factorial(d)))
        g01 = connection_coefficients("daubechies-6", 0, 1)
        worst = max(worst, abs(g01.coefficients.sum()))
        return worst <= 1e-8, f"max moment residual {worst:.2e}"

    def parity():
        worst = 0.0
        for d in (1, 2, 3):
            D = derivative_matrix("daubechies-6", d, 6).dense()
            worst = max(worst, np.max(np.abs(D.T - (-1) ** d * D)))
        return worst == 0.0, f"max asymmetry {worst:.1e}"

    def truncation():
        g = PhaseSpaceGrid(Jq=5, Jp=5)
        U = poly_potential([0, 0, -1, 0, 0.1])
        W = rng.standard_normal(g.shape)
        a = assemble_moyal(U, g, 1).apply_array(W)
        b = assemble_moyal(U, g, 5).apply_array(W)
        err = np.max(np.abs(a - b)) / np.max(np.abs(a))
        return err <= 1e-12, f"L=1 vs L=5 {err:.1e}"

    def harmonic():
        g = PhaseSpaceGrid(Jq=6, Jp=6)
        op = assemble_moyal(harmonic_potential(), g, 1)
        W0 = coherent_state(g, 1.0, 0.0)
        T = np.pi / 2
        tr = evolve(op, W0, T, T / 128, stride=1000)
        err = compare(tr.final, oracle_harmonic(1.0, 0.0, 1.0, T, g))
        drift = abs(tr.final.normalization() - W0.normalization())
        return err <= 1e-3 and drift <= 1e-6, f"oracle error {err:.2e}, drift {drift:.1e}"

    def split():
        g = PhaseSpaceGrid(Jq=6, Jp=6)
        f = CoefficientField(g, rng.standard_normal(g.shape))
        s = slow_fast_split(f, "daubechies-6", 3)
        e_tot = np.sum(f.data**2) * g.cell
        add = abs(s.total_energy - e_tot) / e_tot
        return s.reconstruction_error <= 1e-10 and add <= 1e-10, f"reconstruction {s.reconstruction_error:.1e}, energy {add:.1e}"

    def fock():
        g = PhaseSpaceGrid(Jq=5, Jp=5)
        a = CoefficientField(g, rng.standard_normal(g.shape))
        b = CoefficientField(g, rng.standard_normal(g.shape))
        n_ab = fock_norm(FockStateList(0.5, [a, b]))
        parts = 0.25 + fock_norm(FockStateList(0, [a])) ** 2 + fock_norm(FockStateList(0, [b])) ** 2
        err = abs(n_ab**2 - parts) / parts
        return err <= 1e-12, f"additivity {err:.1e}"

    def packets():
        x = rng.standard_normal(64)
        pb = best_basis(x, "daubechies-4", 3)
        return pb.entropy <= pb.root_entropy + 1e-12, f"entropy {pb.entropy:.4f} vs root {pb.root_entropy:.4f}"

    def csv_roundtrip():
        g = PhaseSpaceGrid(Jq=5, Jp=5)
        f = CoefficientField(g, rng.standard_normal(g.shape))
        with tempfile.TemporaryDirectory() as tmp:
            path = write_field_csv(f, Path(tmp) / "f.csv")
            back = read_field_csv(path, g)
        return np.array_equal(back.data, f.data), "bit-exact" if np.array_equal(back.data, f.data) else "mismatch"

    def ground_purity():
        g = PhaseSpaceGrid()
        p = purity(coherent_state(g, 0.0, 0.0))
        return abs(p - 1) <= 1e-4, f"purity {p:.8f}"

    for name, fn in [
        ("transform_reconstruction_parseval", reconstruction),
        ("transform_2d_reconstruction", reconstruction_2d),
        ("connection_moment_rules", moments),
        ("derivative_parity", parity),
        ("moyal_truncation_exactness", truncation),
        ("harmonic_oracle_quarter_period", harmonic),
        ("slow_fast_split", split),
        ("fock_norm_additivity", fock),
        ("best_basis_entropy", packets),
        ("field_csv_roundtrip", csv_roundtrip),
        ("ground_state_purity", ground_purity),
    ]:
        results.append(_check(name, fn))
    return results
