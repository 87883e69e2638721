"""Compactly supported orthonormal wavelet families and cascade tables.

Filters follow the minimum-phase Daubechies convention with the scaling
function supported on ``[0, 2K-1]``; ``daubechies-2`` starts
``0.48296, 0.83652, ...``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

__all__ = [
    "WaveletFamily",
    "DyadicFunctionTable",
    "UnknownFamilyError",
    "EigenvectorError",
    "make_family",
    "cascade_table",
    "integer_values",
    "SOBOLEV_EXPONENTS",
    "DEFAULT_FAMILY",
]

DEFAULT_FAMILY = "daubechies-6"

# L2-Sobolev exponents of the Daubechies scaling functions, truncated
# downwards to two decimals (Villemoes 1992; Daubechies, "Ten Lectures on
# Wavelets", 1992, ch. 7). Haar lies in H^s for s < 1/2.
SOBOLEV_EXPONENTS = {
    1: 0.50,
    2: 1.00,
    3: 1.41,
    4: 1.77,
    5: 2.09,
    6: 2.38,
    7: 2.65,
    8: 2.91,
    9: 3.16,
    10: 3.40,
}

_NAME_RE = re.compile(r"^(?:daubechies|db)-?(\d+)$")


class UnknownFamilyError(ValueError):
    """Raised for wavelet identifiers outside the supported set."""


class EigenvectorError(RuntimeError):
    """Raised when a refinement eigenproblem has no unique solution."""


@dataclass(frozen=True)
class WaveletFamily:
    name: str
    K: int
    lowpass: tuple[float, ...]
    highpass: tuple[float, ...]
    sobolev_estimate: float

    @property
    def length(self) -> int:
        return 2 * self.K

    @property
    def h(self) -> np.ndarray:
        return np.array(self.lowpass)

    @property
    def g(self) -> np.ndarray:
        return np.array(self.highpass)

    def admits(self, order: int) -> bool:
        """True if derivatives of this order are square integrable."""
        return order < self.sobolev_estimate

    def __str__(self) -> str:
        return self.name


def _daubechies_taps(K: int) -> list[float]:
    # Spectral factorization of the Daubechies half-band polynomial in
    # 50-digit arithmetic; roots inside the unit circle give minimum phase.
    with mpmath.workdps(50):
        # P(y) = sum_k C(K-1+k, k) y^k with y = (2 - z - 1/z) / 4
        py = [mpmath.binomial(K - 1 + k, k) for k in range(K)]
        # z^(K-1) P(y(z)) as a polynomial in z
        poly = [mpmath.mpf(0)] * (2 * K - 1)
        for k, c in enumerate(py):
            # ((2 - z - 1/z)/4)^k * z^(K-1) = z^(K-1-k) (-(z-1)^2 / 4)^k
            term = [mpmath.mpf(1)]
            for _ in range(k):
                term = np.convolve(term, [mpmath.mpf(-1) / 4, mpmath.mpf(1) / 2, mpmath.mpf(-1) / 4]).tolist()
            offset = K - 1 - k
            for i, t in enumerate(term):
                poly[offset + i] += c * t
        if K > 1:
            roots = mpmath.polyroots(poly[::-1], maxsteps=500, extraprec=200)
            inside = [r for r in roots if abs(r) < 1]
        else:
            inside = []
        coeffs = [mpmath.mpc(1)]
        for r in inside:
            coeffs = _polymul(coeffs, [mpmath.mpc(1), -r])
        for _ in range(K):
            coeffs = _polymul(coeffs, [mpmath.mpc(1), mpmath.mpc(1)])
        real = [mpmath.re(c) for c in coeffs]
        scale = mpmath.sqrt(2) / mpmath.fsum(real)
        return [float(c * scale) for c in real]


def _polymul(a, b):
    out = [mpmath.mpc(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _parse_name(name: str) -> int:
    key = name.strip().lower()
    if key == "haar":
        return 1
    m = _NAME_RE.match(key)
    if m is None:
        raise UnknownFamilyError(f"unknown wavelet family {name!r}; expected haar or daubechies-K, K=2..10")
    K = int(m.group(1))
    if not 2 <= K <= 10:
        raise UnknownFamilyError(f"unknown wavelet family {name!r}; daubechies-K is supported for K=2..10")
    return K


@lru_cache(maxsize=None)
def _family_for_order(K: int) -> WaveletFamily:
    h = _daubechies_taps(K) if K > 1 else [1 / np.sqrt(2), 1 / np.sqrt(2)]
    n = len(h)
    g = [(-1) ** k * h[n - 1 - k] for k in range(n)]
    name = "haar" if K == 1 else f"daubechies-{K}"
    return WaveletFamily(name, K, tuple(h), tuple(g), SOBOLEV_EXPONENTS[K])


def make_family(name: str | WaveletFamily) -> WaveletFamily:
    """Return the wavelet family for an identifier such as ``"daubechies-6"``."""
    if isinstance(name, WaveletFamily):
        return name
    return _family_for_order(_parse_name(name))


@dataclass(frozen=True, eq=False)
class DyadicFunctionTable:
    family: WaveletFamily
    J: int
    phi_values: np.ndarray
    psi_values: np.ndarray

    @property
    def support(self) -> tuple[int, int]:
        return 0, 2 * self.family.K - 1

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.phi_values.size) / 2.0 ** self.J

    def refinement_residual(self) -> float:
        """Max |phi(x) - sqrt2 sum_k h_k phi(2x-k)| over tabulated points."""
        h = self.family.h
        n = self.phi_values.size
        step = 2 ** self.J
        m = np.arange(n)
        rhs = np.zeros(n)
        # phi(2x - k) at x = m / 2^J lives at index 2m - k 2^J of the same table
        for k, hk in enumerate(h):
            idx = 2 * m - k * step
            ok = (idx >= 0) & (idx < n)
            rhs[ok] += np.sqrt(2) * hk * self.phi_values[idx[ok]]
        return float(np.max(np.abs(self.phi_values - rhs)))


@lru_cache(maxsize=None)
def integer_values(family: WaveletFamily) -> np.ndarray:
    """phi at the integers 0..2K-1, normalised so the values sum to one."""
    K = family.K
    if K == 1:
        return np.array([1.0, 0.0])
    h = family.h
    n = 2 * K - 2
    # interior integers 1..2K-2; phi vanishes at both support ends
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            k = 2 * (i + 1) - (j + 1)
            if 0 <= k < 2 * K:
                A[i, j] = np.sqrt(2) * h[k]
    vals, vecs = np.linalg.eig(A)
    close = np.abs(vals - 1.0) < 1e-10
    if close.sum() != 1:
        raise EigenvectorError(
            f"{family.name}: eigenvalue-1 eigenspace of the refinement matrix has dimension {int(close.sum())}"
        )
    v = np.real(vecs[:, np.argmax(close)])
    v = v / v.sum()
    out = np.zeros(2 * K)
    out[1:-1] = v
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def cascade_table(family: WaveletFamily | str, J: int) -> DyadicFunctionTable:
    """Tabulate phi and psi at the points m / 2^J of ``[0, 2K-1]``."""
    family = make_family(family)
    if not 1 <= J <= 14:
        raise ValueError(f"cascade depth J must lie in 1..14, got {J}")
    h = family.h
    g = family.g
    K = family.K
    width = 2 * K - 1
    phi = np.array(integer_values(family), dtype=float)
    for r in range(1, J + 1):
        n_new = width * 2 ** r + 1
        new = np.zeros(n_new)
        new[::2] = phi
        odd = np.arange(1, n_new, 2)
        acc = np.zeros(odd.size)
        # 2x - k at x = m/2^r sits at index m - k 2^(r-1) of the depth r-1 table
        for k, hk in enumerate(h):
            idx = odd - k * 2 ** (r - 1)
            ok = (idx >= 0) & (idx < phi.size)
            acc[ok] += np.sqrt(2) * hk * phi[idx[ok]]
        new[1::2] = acc
        phi = new
    # psi(x) = sqrt2 sum g_k phi(2x - k): 2x - k at x = m/2^J has index 2m - k 2^J at depth J
    n = phi.size
    m = np.arange(n)
    psi = np.zeros(n)
    for k, gk in enumerate(g):
        idx = 2 * m - k * 2 ** J
        ok = (idx >= 0) & (idx < n)
        psi[ok] += np.sqrt(2) * gk * phi[idx[ok]]
    phi.setflags(write=False)
    psi.setflags(write=False)
    return DyadicFunctionTable(family, J, phi, psi)
