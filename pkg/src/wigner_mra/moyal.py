"""Truncated Wigner-Moyal right-hand side on a periodic phase-space grid.

The field array ``W[iq, ip]`` holds finest-level scaling coefficients, one
per grid point (one-point quadrature), so coefficient functions such as
``p / m`` or ``U'(q)`` act as diagonal multiplications. q-actions apply
along axis 0 and p-actions along axis 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import ceil, factorial

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import polynomial as P

from .connection import DerivativeMatrix, derivative_matrix
from .wavelets import DEFAULT_FAMILY, WaveletFamily, make_family

__all__ = [
    "GridMismatchError",
    "PhaseSpaceGrid",
    "Potential",
    "CoefficientField",
    "Multiply",
    "Derivative",
    "MoyalTerm",
    "MoyalOperator",
    "poly_potential",
    "moyal_coefficient",
    "assemble_moyal",
    "add_decoherence",
    "apply",
]


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseSpaceGrid:
    q0: float = -8.0
    Lq: float = 16.0
    p0: float = -8.0
    Lp: float = 16.0
    Jq: int = 8
    Jp: int = 8
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.Lq <= 0 or self.Lp <= 0:
            raise ValueError(f"periods must be positive, got Lq={self.Lq}, Lp={self.Lp}")
        if self.Nq < 32 or self.Np < 32:
            raise ValueError(f"grid needs at least 32 points per axis, got {self.Nq}x{self.Np}")
        if self.hbar <= 0 or self.mass <= 0:
            raise ValueError("hbar and mass must be positive")

    @property
    def Nq(self) -> int:
        return 2**self.Jq

    @property
    def Np(self) -> int:
        return 2**self.Jp

    @property
    def shape(self) -> tuple[int, int]:
        return self.Nq, self.Np

    @property
    def dq(self) -> float:
        return self.Lq / self.Nq

    @property
    def dp(self) -> float:
        return self.Lp / self.Np

    @property
    def cell(self) -> float:
        return self.dq * self.dp

    @property
    def q(self) -> np.ndarray:
        return self.q0 + self.dq * np.arange(self.Nq)

    @property
    def p(self) -> np.ndarray:
        return self.p0 + self.dp * np.arange(self.Np)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q, self.p, indexing="ij")

    def sample(self, fn) -> np.ndarray:
        Q, Pm = self.mesh()
        return np.asarray(fn(Q, Pm), dtype=float)


@dataclass(frozen=True)
class Potential:
    """U(q) = sum_r coeffs[r] q^r with exact derivatives."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(float(x) for x in c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.coeffs != (0.0,) else 0

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    def derivative(self, order: int = 1) -> "Potential":
        if order < 0:
            raise ValueError("derivative order must be nonnegative")
        if order == 0:
            return self
        if order > self.degree:
            return Potential((0.0,))
        return Potential(tuple(P.polyder(np.array(self.coeffs), order)))

    def __call__(self, q):
        return P.polyval(np.asarray(q, dtype=float), np.array(self.coeffs))


def poly_potential(coeffs) -> Potential:
    """Build a polynomial potential from ``[u0, u1, ...]`` or the string ``"u0,u1,..."``."""
    if isinstance(coeffs, str):
        coeffs = [float(x) for x in coeffs.split(",") if x.strip()]
    coeffs = list(coeffs)
    if not coeffs:
        raise ValueError("potential needs at least one coefficient")
    return Potential(tuple(float(c) for c in coeffs))


@dataclass(eq=False)
class CoefficientField:
    grid: PhaseSpaceGrid
    data: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.grid.shape:
            raise GridMismatchError(f"data shape {self.data.shape} does not match grid {self.grid.shape}")

    def normalization(self) -> float:
        return float(np.sum(self.data) * self.grid.cell)

    def with_data(self, data, time: float | None = None) -> "CoefficientField":
        return CoefficientField(self.grid, data, self.time if time is None else time)

    def __add__(self, other: "CoefficientField") -> "CoefficientField":
        _require_grid(self.grid, other.grid)
        return self.with_data(self.data + other.data)

    def __mul__(self, scalar: float) -> "CoefficientField":
        return self.with_data(scalar * self.data)

    __rmul__ = __mul__


def _require_grid(a: PhaseSpaceGrid, b: PhaseSpaceGrid):
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


# ------------------------------------------------------------------ actions


@dataclass(frozen=True, eq=False)
class Multiply:
    values: np.ndarray

    def signature(self):
        return ("mul", tuple(np.asarray(self.values).tolist()))

    def matrix(self) -> sp.csr_matrix:
        return sp.diags(self.values, format="csr")

    def norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def along(self, W: np.ndarray, axis: int) -> np.ndarray:
        return W * (self.values[:, None] if axis == 0 else self.values[None, :])


@dataclass(frozen=True, eq=False)
class Derivative:
    op: DerivativeMatrix

    def signature(self):
        return ("der", self.op.family.name, self.op.d, self.op.level, self.op.domain_length)

    def matrix(self) -> sp.csr_matrix:
        return self.op.matrix

    def norm(self) -> float:
        return self.op.symbol_max()

    def along(self, W: np.ndarray, axis: int) -> np.ndarray:
        if axis == 0:
            return self.op.matrix @ W
        return (self.op.matrix @ W.T).T


@dataclass(frozen=True, eq=False)
class MoyalTerm:
    coefficient: float
    q_action: Multiply | Derivative
    p_action: Multiply | Derivative
    label: str = ""

    def signature(self):
        return (self.coefficient, self.q_action.signature(), self.p_action.signature())

    def apply(self, W: np.ndarray) -> np.ndarray:
        return self.coefficient * self.q_action.along(self.p_action.along(W, 1), 0)


@dataclass(frozen=True, eq=False)
class MoyalOperator:
    terms: tuple[MoyalTerm, ...]
    grid: PhaseSpaceGrid
    truncation: int
    decoherence_D: float = 0.0
    decoherence_op: Derivative | None = field(default=None)

    def signature(self):
        return tuple(t.signature() for t in self.terms), self.decoherence_D

    def apply_array(self, W: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid.shape)
        for term in self.terms:
            out += term.apply(W)
        if self.decoherence_D != 0:
            out += self.decoherence_D * self.decoherence_op.along(W, 1)
        return out

    def apply(self, field_: CoefficientField) -> CoefficientField:
        _require_grid(self.grid, field_.grid)
        return field_.with_data(self.apply_array(field_.data))

    def __call__(self, field_: CoefficientField) -> CoefficientField:
        return self.apply(field_)

    def scaled(self, factor: float) -> "MoyalOperator":
        """Operator multiplied by a scalar (factor -1 reverses time)."""
        terms = tuple(replace(t, coefficient=factor * t.coefficient) for t in self.terms)
        return replace(self, terms=terms, decoherence_D=factor * self.decoherence_D)

    def to_sparse(self) -> sp.csr_matrix:
        """Matrix on row-major flattened fields, index ``iq * Np + ip``."""
        n = self.grid.Nq * self.grid.Np
        out = sp.csr_matrix((n, n))
        for t in self.terms:
            out = out + t.coefficient * sp.kron(t.q_action.matrix(), t.p_action.matrix(), format="csr")
        if self.decoherence_D != 0:
            eye = sp.identity(self.grid.Nq, format="csr")
            out = out + self.decoherence_D * sp.kron(eye, self.decoherence_op.matrix(), format="csr")
        return out.tocsr()

    def norm_bound(self) -> float:
        """Upper bound on the spectral norm (triangle inequality over terms)."""
        bound = sum(abs(t.coefficient) * t.q_action.norm() * t.p_action.norm() for t in self.terms)
        if self.decoherence_D != 0:
            bound += abs(self.decoherence_D) * self.decoherence_op.norm()
        return float(bound)


def moyal_coefficient(ell: int, hbar: float) -> float:
    """(-1)^l (hbar/2)^(2l) / (2l+1)!"""
    return (-1) ** ell * (hbar / 2.0) ** (2 * ell) / factorial(2 * ell + 1)


def _families(family) -> tuple[WaveletFamily, WaveletFamily]:
    if isinstance(family, (tuple, list)):
        return make_family(family[0]), make_family(family[1])
    f = make_family(family)
    return f, f


def assemble_moyal(
    potential: Potential,
    grid: PhaseSpaceGrid,
    L: int = 1,
    family: str | WaveletFamily | tuple = DEFAULT_FAMILY,
) -> MoyalOperator:
    """-(p/m) dW/dq + sum_{l<=L} c_l U^(2l+1)(q) d^(2l+1)W/dp^(2l+1); vanishing terms are omitted."""
    if L < 0:
        raise ValueError(f"Moyal cut must be nonnegative, got {L}")
    fam_q, fam_p = _families(family)
    Dq = derivative_matrix(fam_q, 1, grid.Jq, grid.Lq)
    terms = [MoyalTerm(-1.0 / grid.mass, Derivative(Dq), Multiply(grid.p), "advection")]
    for ell in range(L + 1):
        order = 2 * ell + 1
        dU = potential.derivative(order)
        if dU.is_zero:
            continue
        Dp = derivative_matrix(fam_p, order, grid.Jp, grid.Lp)
        terms.append(
            MoyalTerm(moyal_coefficient(ell, grid.hbar), Multiply(dU(grid.q)), Derivative(Dp), f"potential l={ell}")
        )
    expected = 1 + min(L + 1, ceil(potential.degree / 2))
    assert len(terms) == expected, (len(terms), expected)
    return MoyalOperator(tuple(terms), grid, L)


def add_decoherence(op: MoyalOperator, D: float, family: str | WaveletFamily | None = None) -> MoyalOperator:
    """Attach the momentum-diffusion term D d^2W/dp^2."""
    if D < 0 or not np.isfinite(D):
        raise ValueError(f"decoherence strength must be a nonnegative number, got {D}")
    if D == 0:
        return replace(op, decoherence_D=0.0, decoherence_op=None)
    if family is None:
        p_terms = [t.p_action for t in op.terms if isinstance(t.p_action, Derivative)]
        fam = p_terms[0].op.family if p_terms else make_family(DEFAULT_FAMILY)
    else:
        fam = make_family(family)
    D2 = derivative_matrix(fam, 2, op.grid.Jp, op.grid.Lp)
    return replace(op, decoherence_D=float(D), decoherence_op=Derivative(D2))


def apply(op: MoyalOperator, field_: CoefficientField) -> CoefficientField:
    return op.apply(field_)
