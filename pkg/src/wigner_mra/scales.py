"""Slow/fast scale splitting, per-level energies and the Fock-like norm."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .moyal import CoefficientField, GridMismatchError, PhaseSpaceGrid
from .transform import (
    MultiresolutionDecomposition,
    TransformError,
    fwt_2d,
    fwt_forward_1d,
    fwt_inverse_1d,
    fwt_inverse_2d,
)
from .wavelets import DEFAULT_FAMILY, make_family

__all__ = [
    "FastPart",
    "ScaleDecomposition",
    "TwoParticleField",
    "FockStateList",
    "decompose",
    "slow_fast_split",
    "energy_table",
    "fock_norm",
    "fock_difference",
    "restrict",
    "timeseries_split",
]


@dataclass(frozen=True, eq=False)
class FastPart:
    level: int
    frequency: float  # scale label 2^level, not a literal frequency
    component: CoefficientField
    energy: float


@dataclass(frozen=True, eq=False)
class ScaleDecomposition:
    slow_part: CoefficientField
    fast_parts: list[FastPart]
    reconstruction_error: float
    slow_energy: float
    N_slow: int

    @property
    def total_energy(self) -> float:
        return self.slow_energy + sum(f.energy for f in self.fast_parts)

    @property
    def fast_fraction(self) -> float:
        tot = self.total_energy
        return sum(f.energy for f in self.fast_parts) / tot if tot > 0 else 0.0

    def reconstruct(self) -> CoefficientField:
        data = self.slow_part.data.copy()
        for f in self.fast_parts:
            data += f.component.data
        return self.slow_part.with_data(data)


def decompose(field_: CoefficientField, family=DEFAULT_FAMILY, coarse_level: int = 0) -> MultiresolutionDecomposition:
    """2-D transform of a coefficient field; energies are plain coefficient sums of squares."""
    return fwt_2d(field_.data, family, coarse_level)


def _zeros_like(block):
    if isinstance(block, tuple):
        return tuple(np.zeros_like(b) for b in block)
    return np.zeros_like(block)


def slow_fast_split(
    field_: CoefficientField, family=DEFAULT_FAMILY, N_slow: int = 4, coarse_level: int = 0
) -> ScaleDecomposition:
    """Keep V_c and D_j (j < N_slow) in the slow part; every other D_j is its own fast part.

    Energies are quadrature integrals of W^2 (coefficient energy times the cell area).
    """
    fam = make_family(family)
    dec = decompose(field_, fam, coarse_level)
    if not dec.coarse_level <= N_slow < dec.finest_level:
        raise TransformError(f"N_slow = {N_slow} must satisfy {dec.coarse_level} <= N_slow < {dec.finest_level}")
    cell = field_.grid.cell
    zeros = {j: _zeros_like(b) for j, b in dec.detail_blocks.items()}
    slow_details = {j: (b if j < N_slow else zeros[j]) for j, b in dec.detail_blocks.items()}
    slow = field_.with_data(fwt_inverse_2d(dec.copy_with(details=slow_details), fam))
    slow_energy = (dec.coarse_energy + sum(dec.energy_per_level[j] for j in range(dec.coarse_level, N_slow))) * cell
    fast = []
    zero_coarse = np.zeros_like(dec.coarse_block)
    for j in range(N_slow, dec.finest_level):
        only = dict(zeros)
        only[j] = dec.detail_blocks[j]
        comp = fwt_inverse_2d(dec.copy_with(coarse=zero_coarse, details=only), fam)
        fast.append(FastPart(j, float(2**j), field_.with_data(comp), dec.energy_per_level[j] * cell))
    total = slow.data + sum((f.component.data for f in fast), np.zeros(field_.grid.shape))
    scale = np.linalg.norm(field_.data)
    err = float(np.linalg.norm(total - field_.data) / scale) if scale > 0 else float(np.linalg.norm(total))
    return ScaleDecomposition(slow, fast, err, float(slow_energy), N_slow)


def energy_table(dec: MultiresolutionDecomposition, cell: float = 1.0) -> list[tuple[str, float, float]]:
    """Rows (level, energy, fraction); the coarse block is labelled ``coarse``."""
    total = dec.total_energy
    rows = [("coarse", dec.coarse_energy * cell, dec.coarse_energy / total if total > 0 else 0.0)]
    for j in sorted(dec.energy_per_level):
        e = dec.energy_per_level[j]
        rows.append((str(j), e * cell, e / total if total > 0 else 0.0))
    return rows


def timeseries_split(series, family=DEFAULT_FAMILY, N_slow: int = 2) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """1-D slow/fast split of a sampled time series (length a power of two)."""
    fam = make_family(family)
    dec = fwt_forward_1d(series, fam)
    if not dec.coarse_level <= N_slow < dec.finest_level:
        raise TransformError(f"N_slow = {N_slow} must satisfy 0 <= N_slow < {dec.finest_level}")
    zeros = {j: np.zeros_like(b) for j, b in dec.detail_blocks.items()}
    slow = fwt_inverse_1d(dec.copy_with(details={j: (b if j < N_slow else zeros[j]) for j, b in dec.detail_blocks.items()}), fam)
    fast = {}
    for j in range(N_slow, dec.finest_level):
        only = dict(zeros)
        only[j] = dec.detail_blocks[j]
        fast[j] = fwt_inverse_1d(dec.copy_with(coarse=np.zeros_like(dec.coarse_block), details=only), fam)
    return slow, fast


# ------------------------------------------------------------- Fock norm


@dataclass(eq=False)
class TwoParticleField:
    """Static two-particle Wigner data W(q1, p1, q2, p2) on a product of identical grids."""

    grid: PhaseSpaceGrid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.grid.shape * 2:
            raise GridMismatchError(f"two-particle data shape {self.data.shape} does not match {self.grid.shape * 2}")

    @property
    def cell(self) -> float:
        return self.grid.cell**2


@dataclass(eq=False)
class FockStateList:
    """Truncated state list (W0, W1, W2, ...); ``weights`` override the default cell measure."""

    w0: float = 0.0
    states: list = field(default_factory=list)
    weights: list | None = None

    def __post_init__(self):
        for s in self.states:
            if not isinstance(s, (CoefficientField, TwoParticleField)):
                raise TypeError(f"unsupported component type {type(s).__name__}")
        if self.weights is not None and len(self.weights) != len(self.states):
            raise ValueError("one weight per component is required")

    def measure(self, i: int) -> float:
        if self.weights is not None:
            return float(self.weights[i])
        s = self.states[i]
        return s.cell if isinstance(s, TwoParticleField) else s.grid.cell

    def scaled(self, factor: float) -> "FockStateList":
        states = [type(s)(s.grid, factor * s.data) for s in self.states]
        return FockStateList(factor * self.w0, states, self.weights)

    def __sub__(self, other: "FockStateList") -> "FockStateList":
        return _combine(self, other, -1.0)

    def __add__(self, other: "FockStateList") -> "FockStateList":
        return _combine(self, other, 1.0)


def _combine(a: FockStateList, b: FockStateList, sign: float) -> FockStateList:
    if len(a.states) != len(b.states):
        raise GridMismatchError("state lists have different lengths")
    out = []
    for x, y in zip(a.states, b.states):
        if type(x) is not type(y) or x.grid != y.grid:
            raise GridMismatchError("components live on different grids")
        out.append(type(x)(x.grid, x.data + sign * y.data))
    return FockStateList(a.w0 + sign * b.w0, out, a.weights)


def fock_norm(states: FockStateList) -> float:
    """sqrt(W0^2 + sum_i mu_i ||W_i||^2)."""
    total = float(states.w0) ** 2
    for i, s in enumerate(states.states):
        total += states.measure(i) * float(np.sum(s.data**2))
    return float(np.sqrt(total))


def restrict(field_: CoefficientField, grid: PhaseSpaceGrid) -> CoefficientField:
    """Injection of a fine-grid field onto a coarser dyadic grid over the same box."""
    g = field_.grid
    same_box = (g.q0, g.Lq, g.p0, g.Lp, g.hbar, g.mass) == (grid.q0, grid.Lq, grid.p0, grid.Lp, grid.hbar, grid.mass)
    if not same_box or grid.Jq > g.Jq or grid.Jp > g.Jp:
        raise GridMismatchError("restriction needs a coarser dyadic grid over the same box")
    sq, sp_ = 2 ** (g.Jq - grid.Jq), 2 ** (g.Jp - grid.Jp)
    return CoefficientField(grid, field_.data[::sq, ::sp_], field_.time)


def _as_list(x) -> FockStateList:
    return x if isinstance(x, FockStateList) else FockStateList(0.0, [x])


def fock_difference(fine, coarse) -> float:
    """||fine - coarse|| after restricting one-particle components of ``fine`` to ``coarse`` grids."""
    a, b = _as_list(fine), _as_list(coarse)
    if len(a.states) != len(b.states):
        raise GridMismatchError("state lists have different lengths")
    states = []
    for x, y in zip(a.states, b.states):
        if isinstance(x, CoefficientField) and x.grid != y.grid:
            x = restrict(x, y.grid)
        states.append(x)
    return fock_norm(_combine(FockStateList(a.w0, states, b.weights), b, -1.0))
