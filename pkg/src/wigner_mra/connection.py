"""Connection coefficients and periodic Galerkin derivative matrices.

Convention: ``Gamma^{a,b}_k = \\int phi^(a)(x - k) phi^(b)(x) dx``. With it the
Galerkin matrix of d/dx^d on V_0 is ``D[k, l] = Gamma^(d)_{k-l}`` where
``Gamma^(d) = (-1)^a Gamma^{a,b}`` for any split ``a + b = d``, and the
moment rule reads ``sum_k k^d Gamma^(d)_k = (-1)^d d!``.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
import scipy.sparse as sp

from .wavelets import WaveletFamily, integer_values, make_family

__all__ = [
    "InadmissibleOrderError",
    "DegenerateEigenspaceError",
    "BandOverlapError",
    "ConnectionTable",
    "DerivativeMatrix",
    "connection_coefficients",
    "derivative_stencil",
    "derivative_matrix",
    "circulant",
    "halfline_integrals",
    "window_integrals",
]


class InadmissibleOrderError(ValueError):
    pass


class DegenerateEigenspaceError(RuntimeError):
    pass


class BandOverlapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConnectionTable:
    family: WaveletFamily
    a: int
    b: int
    shifts: np.ndarray
    coefficients: np.ndarray
    refinement_residual: float

    @property
    def values(self) -> dict[int, float]:
        return dict(zip(self.shifts.tolist(), self.coefficients.tolist()))

    def moment(self, power: int) -> float:
        return float(np.sum(self.shifts.astype(float) ** power * self.coefficients))

    def to_csv(self) -> str:
        lines = ["shift,value"]
        lines += [f"{k},{v:.17g}" for k, v in zip(self.shifts.tolist(), self.coefficients.tolist())]
        return "\n".join(lines) + "\n"


def _refinement_operator(family: WaveletFamily) -> tuple[np.ndarray, np.ndarray]:
    """T with Gamma_k = 2^(a+b) sum_n T[k, n] Gamma_n over shifts |k| <= 2K-2."""
    h = family.h
    B = 2 * family.K - 2
    shifts = np.arange(-B, B + 1)
    T = np.zeros((shifts.size, shifts.size))
    for r, k in enumerate(shifts):
        for c, n in enumerate(shifts):
            # n = 2k + l - m, summed over filter taps l
            for l in range(h.size):
                m = 2 * k + l - n
                if 0 <= m < h.size:
                    T[r, c] += h[l] * h[m]
    return shifts, T


_cache: dict[tuple[str, int, int], ConnectionTable] = {}
_cache_lock = threading.Lock()


def _check_admissible(family: WaveletFamily, a: int, b: int):
    if a < 0 or b < 0:
        raise InadmissibleOrderError(f"derivative orders must be nonnegative, got ({a}, {b})")
    top = max(a, b)
    if top > 0 and not family.admits(top):
        raise InadmissibleOrderError(
            f"{family.name}: derivative order {top} needs Sobolev smoothness above {top}, "
            f"family estimate is {family.sobolev_estimate}"
        )
    if a + b >= family.K and a + b > 0:
        raise InadmissibleOrderError(
            f"{family.name}: total order {a + b} exceeds polynomial reproduction degree {family.K - 1}"
        )


def connection_coefficients(family: WaveletFamily | str, a: int, b: int) -> ConnectionTable:
    """Solve the refinement eigenproblem for Gamma^{a,b}, normalised by the moment rule."""
    family = make_family(family)
    _check_admissible(family, a, b)
    key = (family.name, a, b)
    with _cache_lock:
        cached = _cache.get(key)
    if cached is not None:
        return cached

    d = a + b
    shifts, T = _refinement_operator(family)
    lam = 2.0 ** (-d)
    M = T - lam * np.eye(T.shape[0])
    sv = np.linalg.svd(M, compute_uv=False)
    scale = max(sv[0], 1.0)
    if sv.size > 1 and sv[-2] < 1e-10 * scale:
        raise DegenerateEigenspaceError(
            f"{family.name} ({a},{b}): eigenvalue {lam} of the refinement operator is not simple"
        )
    # homogeneous equations plus the moment normalisation, least squares
    moment_row = shifts.astype(float) ** d
    A = np.vstack([M, moment_row])
    rhs = np.zeros(A.shape[0])
    rhs[-1] = (-1) ** b * factorial(d)
    gamma, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    # integration by parts gives Gamma^{a,b}_{-k} = (-1)^(a+b) Gamma^{a,b}_k; impose it exactly
    gamma = 0.5 * (gamma + (-1) ** d * gamma[::-1])
    residual = float(np.max(np.abs(M @ gamma)))
    table = ConnectionTable(family, a, b, shifts, gamma, residual)
    table.coefficients.setflags(write=False)
    with _cache_lock:
        _cache.setdefault(key, table)
        return _cache[key]


def split_order(d: int) -> tuple[int, int]:
    return d // 2, d - d // 2


def derivative_stencil(family: WaveletFamily | str, d: int) -> tuple[np.ndarray, np.ndarray]:
    """(shifts, values) of the order-d Galerkin stencil on unit spacing."""
    family = make_family(family)
    if d == 0:
        return np.array([0]), np.array([1.0])
    a, b = split_order(d)
    table = connection_coefficients(family, a, b)
    return table.shifts, (-1) ** a * table.coefficients


def circulant(shifts, values, n: int) -> sp.csr_matrix:
    """Periodic matrix with ``M[k, (k - m) mod n] = value_m``."""
    shifts = np.asarray(shifts)
    values = np.asarray(values, dtype=float)
    rows = np.repeat(np.arange(n), shifts.size)
    cols = (rows - np.tile(shifts, n)) % n
    data = np.tile(values, n)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


@dataclass(frozen=True, eq=False)
class DerivativeMatrix:
    family: WaveletFamily
    d: int
    level: int
    domain_length: float
    shifts: np.ndarray
    stencil: np.ndarray
    matrix: sp.csr_matrix

    @property
    def N(self) -> int:
        return 2**self.level

    def apply(self, x, axis: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.matrix @ x
        if axis == 0:
            return self.matrix @ x
        return (self.matrix @ x.T).T

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def symbol_max(self) -> float:
        """Largest modulus of the circulant's eigenvalues."""
        col = np.zeros(self.N)
        col[self.shifts % self.N] = self.stencil * (self.N / self.domain_length) ** self.d
        return float(np.max(np.abs(np.fft.fft(col))))


def derivative_matrix(family: WaveletFamily | str, d: int, level: int, length: float = 1.0) -> DerivativeMatrix:
    """Circulant Galerkin matrix of d/dx^d on a periodic grid of 2^level points over ``length``."""
    family = make_family(family)
    N = 2**level
    width = 2 * family.K - 1
    if N < 2 * width:
        raise BandOverlapError(f"{family.name}: N = {N} is below 2(2K-1) = {2 * width}; the stencil would wrap onto itself")
    if length <= 0:
        raise ValueError(f"domain length must be positive, got {length}")
    shifts, stencil = derivative_stencil(family, d)
    scaled = stencil * (N / length) ** d
    mat = circulant(shifts, scaled, N)
    return DerivativeMatrix(family, d, level, float(length), shifts, stencil, mat)


# ------------------------------------------------ truncated (window) integrals


@lru_cache(maxsize=None)
def _halfline_tables(family: WaveletFamily) -> tuple[dict, dict]:
    # Unknowns: P^b[k, i] = int_0^inf phi(x-k) phi^(b)(x-i) dx on boundary pairs,
    # plus partial moments Q_k = int_0^inf phi(x-k), R_k = int_0^inf x phi(x-k).
    # The two-scale relations alone leave a null space (the boundary term of
    # integration by parts), so exact identities are appended:
    #   P1[k,i] + P1[i,k] = -phi(-k) phi(-i)
    #   sum_i P0[k,i] = Q_k,  sum_i (i + m1) P0[k,i] = R_k
    #   sum_i P1[k,i] = 0,    sum_i (i + m1) P1[k,i] = Q_k
    h = family.h
    B = 2 * family.K - 2
    m1 = float(np.dot(np.arange(h.size), h) / np.sqrt(2))
    phi_int = integer_values(family)

    def phi_at(x: int) -> float:
        return float(phi_int[x]) if 0 <= x < phi_int.size else 0.0

    full = {b: connection_coefficients(family, 0, b).values for b in (0, 1)}
    pairs = [(k, i) for k in range(-B, B) for i in range(-B, B) if min(k, i) <= -1 and abs(k - i) <= B]
    unknowns = [("P", b, k, i) for b in (0, 1) for (k, i) in pairs]
    unknowns += [("Q", k) for k in range(-B, 0)] + [("R", k) for k in range(-B, 0)]
    col = {u: n for n, u in enumerate(unknowns)}

    def P(b, k, i):
        """(column or None, constant) for P^b[k, i]."""
        if min(k, i) < -B or abs(k - i) > B:
            return None, 0.0
        if k >= 0 and i >= 0:
            return None, full[b][k - i]
        return col[("P", b, k, i)], 0.0

    def Q(k):
        if k >= 0:
            return None, 1.0
        if k < -B:
            return None, 0.0
        return col[("Q", k)], 0.0

    def R(k):
        if k >= 0:
            return None, k + m1
        if k < -B:
            return None, 0.0
        return col[("R", k)], 0.0

    rows, rhs = [], []

    def add(terms, const=0.0):
        # sum coef * item = const, items are (column or None, constant) pairs
        row = np.zeros(len(unknowns))
        c = const
        for coef, (j, v) in terms:
            if j is None:
                c -= coef * v
            else:
                row[j] += coef
        rows.append(row)
        rhs.append(c)

    for b in (0, 1):
        for (k, i) in pairs:
            terms = [(1.0, P(b, k, i))]
            for l in range(h.size):
                for m in range(h.size):
                    terms.append((-(2.0**b) * h[l] * h[m], P(b, 2 * k + l, 2 * i + m)))
            add(terms)
    for k in range(-B, 0):
        add([(1.0, Q(k))] + [(-h[l] / np.sqrt(2), Q(2 * k + l)) for l in range(h.size)])
        add([(1.0, R(k))] + [(-h[l] / 2 ** 1.5, R(2 * k + l)) for l in range(h.size)])
    for (k, i) in pairs:
        add([(1.0, P(1, k, i)), (1.0, P(1, i, k))], -phi_at(-k) * phi_at(-i))
        add([(1.0, P(0, k, i)), (-1.0, P(0, i, k))])
    for k in range(-B, B):
        span = range(k - B, k + B + 1)
        add([(1.0, P(0, k, i)) for i in span] + [(-1.0, Q(k))])
        add([(i + m1, P(0, k, i)) for i in span] + [(-1.0, R(k))])
        add([(1.0, P(1, k, i)) for i in span])
        add([(i + m1, P(1, k, i)) for i in span] + [(-1.0, Q(k))])

    A = np.array(rows)
    y = np.array(rhs)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        raise DegenerateEigenspaceError(f"{family.name}: half-line integral system is rank deficient")
    x, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(A @ x - y)))
    if resid > 1e-10:
        raise DegenerateEigenspaceError(f"{family.name}: half-line identities inconsistent (residual {resid:.3g})")
    out = ({}, {})
    for (kind, *key), v in zip(unknowns, x):
        if kind == "P":
            b, k, i = key
            out[b][(k, i)] = float(v)
    return out


def halfline_integrals(family: WaveletFamily | str, b: int) -> dict[tuple[int, int], float]:
    """``P[k, i] = \\int_0^inf phi(x - k) phi^(b)(x - i) dx`` for the boundary pairs.

    Only pairs with ``min(k, i) <= -1`` inside the band are returned; pairs
    with both indices nonnegative equal full-line connection coefficients
    and pairs reaching below ``-(2K-2)`` vanish.
    """
    family = make_family(family)
    if b not in (0, 1):
        raise ValueError("only b in (0, 1) is needed on the time axis")
    _check_admissible(family, 0, 1)
    return dict(_halfline_tables(family)[b])


def _pair_integral(P: dict, full: dict, B: int, k: int, i: int) -> float:
    if abs(k - i) > B or min(k, i) < -B:
        return 0.0
    if k >= 0 and i >= 0:
        return full[k - i]
    return P[(k, i)]


def window_integrals(family: WaveletFamily | str, n_cells: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gram and derivative matrices of the translates restricted to ``[0, n_cells]``.

    Basis functions are ``phi(x - i)`` for ``i = -(2K-2) .. n_cells-1``.
    Returns ``(indices, gram, deriv)`` with ``gram[r, c] = \\int_0^n A_r A_c``
    and ``deriv[r, c] = \\int_0^n A_r A_c'``.
    """
    family = make_family(family)
    B = 2 * family.K - 2
    idx = np.arange(-B, n_cells)
    out = []
    for b in (0, 1):
        P = halfline_integrals(family, b)
        full = connection_coefficients(family, 0, b).values
        M = np.zeros((idx.size, idx.size))
        for r, k in enumerate(idx):
            for c, i in enumerate(idx):
                if abs(k - i) > B:
                    continue
                M[r, c] = _pair_integral(P, full, B, k, i) - _pair_integral(P, full, B, k - n_cells, i - n_cells)
        out.append(M)
    return idx, out[0], out[1]


def point_values(family: WaveletFamily | str, indices, x: int) -> np.ndarray:
    """phi(x - i) at integer x for each translate index i."""
    family = make_family(family)
    vals = integer_values(family)
    pos = x - np.asarray(indices)
    ok = (pos >= 0) & (pos < vals.size)
    out = np.zeros(pos.size)
    out[ok] = vals[pos[ok]]
    return out
