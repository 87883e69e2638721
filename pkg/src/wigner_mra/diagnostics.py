"""Wigner-function observables and closed-form reference states."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .moyal import CoefficientField, GridMismatchError, PhaseSpaceGrid, Potential
from .wavelets import DEFAULT_FAMILY, make_family

__all__ = [
    "DiagnosticsReport",
    "REPORT_COLUMNS",
    "report",
    "purity",
    "negativity_volume",
    "mass_radius",
    "boundary_mass",
    "coherent_state",
    "ground_state",
    "cat_state",
    "oracle_harmonic",
    "harmonic_potential",
    "compare",
]

REPORT_COLUMNS = (
    "time",
    "normalization",
    "purity",
    "negativity_volume",
    "energy",
    "boundary_mass",
    "radius95",
)


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    time: float
    normalization: float
    purity: float
    negativity_volume: float
    energy: float
    boundary_mass: float
    radius95: float
    position_marginal: np.ndarray
    momentum_marginal: np.ndarray

    def row(self) -> tuple[float, ...]:
        d = asdict(self)
        return tuple(float(d[c]) for c in REPORT_COLUMNS)

    @property
    def is_entangled_pattern(self) -> bool:
        return self.negativity_volume > 0.05

    @property
    def is_decoherent_pattern(self) -> bool:
        return self.negativity_volume <= 1e-3


def purity(field: CoefficientField) -> float:
    """2 pi hbar times the integral of W^2."""
    g = field.grid
    return float(2 * np.pi * g.hbar * np.sum(field.data**2) * g.cell)


def negativity_volume(field: CoefficientField) -> float:
    return float(np.sum(np.maximum(-field.data, 0.0)) * field.grid.cell)


def boundary_mass(field: CoefficientField, width: int) -> float:
    """Integral of |W| over cells within ``width`` cells of the periodic seam."""
    absw = np.abs(field.data)
    nq, np_ = absw.shape
    mask = np.zeros(absw.shape, dtype=bool)
    w_q, w_p = min(width, nq // 2), min(width, np_ // 2)
    mask[:w_q, :] = mask[-w_q:, :] = True
    mask[:, :w_p] = mask[:, -w_p:] = True
    return float(np.sum(absw[mask]) * field.grid.cell)


def mass_radius(field: CoefficientField, fraction: float = 0.95) -> float:
    """Smallest phase-space radius about the centroid holding ``fraction`` of the |W| mass."""
    Q, Pm = field.grid.mesh()
    absw = np.abs(field.data)
    total = absw.sum()
    if total == 0:
        return 0.0
    qc = float(np.sum(Q * absw) / total)
    pc = float(np.sum(Pm * absw) / total)
    r = np.hypot(Q - qc, Pm - pc).ravel()
    order = np.argsort(r, kind="stable")
    cum = np.cumsum(absw.ravel()[order])
    k = int(np.searchsorted(cum, fraction * total))
    return float(r[order][min(k, r.size - 1)])


def report(field: CoefficientField, potential: Potential, family=DEFAULT_FAMILY) -> DiagnosticsReport:
    g = field.grid
    W = field.data
    Q, Pm = g.mesh()
    K = make_family(family).K
    hamiltonian = Pm**2 / (2 * g.mass) + potential(Q)
    return DiagnosticsReport(
        time=float(field.time),
        normalization=float(np.sum(W) * g.cell),
        purity=purity(field),
        negativity_volume=negativity_volume(field),
        energy=float(np.sum(hamiltonian * W) * g.cell),
        boundary_mass=boundary_mass(field, 4 * (2 * K - 1)),
        radius95=mass_radius(field),
        position_marginal=W.sum(axis=1) * g.dp,
        momentum_marginal=W.sum(axis=0) * g.dq,
    )


# ------------------------------------------------------------ closed forms


def harmonic_potential(mass: float = 1.0, omega: float = 1.0) -> Potential:
    return Potential((0.0, 0.0, 0.5 * mass * omega**2))


def coherent_state(grid: PhaseSpaceGrid, qc: float, pc: float, omega: float = 1.0, time: float = 0.0) -> CoefficientField:
    """Gaussian Wigner function of a coherent state with oscillator width ``omega``."""
    m, hb = grid.mass, grid.hbar
    data = grid.sample(lambda q, p: np.exp(-(m * omega * (q - qc) ** 2 + (p - pc) ** 2 / (m * omega)) / hb) / (np.pi * hb))
    return CoefficientField(grid, data, time)


def ground_state(grid: PhaseSpaceGrid, omega: float = 1.0) -> CoefficientField:
    return coherent_state(grid, 0.0, 0.0, omega)


def cat_state(grid: PhaseSpaceGrid, separation: float, omega: float = 1.0, qc: float = 0.0) -> CoefficientField:
    """Even superposition of coherent states at ``qc -+ separation`` (zero momentum)."""
    m, hb, a = grid.mass, grid.hbar, separation
    mw = m * omega

    def w(q, p):
        x = q - qc
        g1 = np.exp(-(mw * (x - a) ** 2 + p**2 / mw) / hb)
        g2 = np.exp(-(mw * (x + a) ** 2 + p**2 / mw) / hb)
        fringe = 2 * np.exp(-(mw * x**2 + p**2 / mw) / hb) * np.cos(2 * a * p / hb)
        return (g1 + g2 + fringe) / (np.pi * hb * 2 * (1 + np.exp(-mw * a**2 / hb)))

    return CoefficientField(grid, grid.sample(w))


def oracle_harmonic(q0: float, p0: float, omega: float, t: float, grid: PhaseSpaceGrid) -> CoefficientField:
    """Exact harmonic evolution of a coherent state: rigid rotation of its centre."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    m = grid.mass
    c, s = np.cos(omega * t), np.sin(omega * t)
    qc = q0 * c + p0 / (m * omega) * s
    pc = p0 * c - m * omega * q0 * s
    return coherent_state(grid, qc, pc, omega, time=t)


def compare(a: CoefficientField, b: CoefficientField) -> float:
    """Relative L2 distance ||a - b|| / max(||a||, ||b||); 0 when both vanish."""
    if a.grid != b.grid:
        raise GridMismatchError("cannot compare fields on different grids")
    scale = max(np.linalg.norm(a.data), np.linalg.norm(b.data))
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(a.data - b.data) / scale)
