"""Periodic fast wavelet transforms, wavelet packets and operator compression."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import log2

import numpy as np
import scipy.sparse as sp

from .wavelets import WaveletFamily, make_family

__all__ = [
    "TransformError",
    "MultiresolutionDecomposition",
    "PacketBasis",
    "CompressedOperator",
    "analysis_step",
    "synthesis_step",
    "fwt_forward_1d",
    "fwt_inverse_1d",
    "fwt_2d",
    "fwt_inverse_2d",
    "packet_tree",
    "packet_inverse",
    "shannon_cost",
    "best_basis",
    "wavelet_basis_nodes",
    "wavelet_matrix",
    "wavelet_operator",
    "compress_operator",
    "NonstandardOperator",
    "nonstandard_form",
]

ORIENTATIONS = ("horizontal", "vertical", "diagonal")


class TransformError(ValueError):
    pass


def _log2_exact(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise TransformError(f"length {n} is not a power of two")
    return int(log2(n))


def analysis_step(x: np.ndarray, family: WaveletFamily, axis: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """One periodized analysis step along ``axis``: returns (lowpass, highpass)."""
    x = np.moveaxis(np.asarray(x, dtype=float), axis, -1)
    n = x.shape[-1]
    if n % 2:
        raise TransformError(f"cannot halve odd length {n}")
    half = np.arange(n // 2)
    a = np.zeros(x.shape[:-1] + (n // 2,))
    d = np.zeros_like(a)
    for l, (hl, gl) in enumerate(zip(family.lowpass, family.highpass)):
        xs = x[..., (2 * half + l) % n]
        a += hl * xs
        d += gl * xs
    return np.moveaxis(a, -1, axis), np.moveaxis(d, -1, axis)


def synthesis_step(a: np.ndarray, d: np.ndarray, family: WaveletFamily, axis: int = -1) -> np.ndarray:
    """Inverse of :func:`analysis_step`."""
    a = np.moveaxis(np.asarray(a, dtype=float), axis, -1)
    d = np.moveaxis(np.asarray(d, dtype=float), axis, -1)
    n = 2 * a.shape[-1]
    half = np.arange(n // 2)
    x = np.zeros(a.shape[:-1] + (n,))
    for l, (hl, gl) in enumerate(zip(family.lowpass, family.highpass)):
        # (2k + l) mod n is injective in k, so plain fancy-index accumulation is safe
        idx = (2 * half + l) % n
        x[..., idx] += hl * a + gl * d
    return np.moveaxis(x, -1, axis)


@dataclass(eq=False)
class MultiresolutionDecomposition:
    """Coefficients of the split V_J = V_c + D_c + ... + D_{J-1}.

    In two dimensions each detail level holds the three orientation
    sub-bands in (horizontal, vertical, diagonal) order: horizontal is
    lowpass along axis 0 and highpass along axis 1, vertical the reverse.
    """

    family: str
    coarse_level: int
    finest_level: int
    coarse_block: np.ndarray
    detail_blocks: dict[int, np.ndarray | tuple[np.ndarray, np.ndarray, np.ndarray]]
    shape: tuple[int, ...]
    energy_per_level: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.energy_per_level:
            self.energy_per_level = {j: _energy(b) for j, b in self.detail_blocks.items()}

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def coarse_energy(self) -> float:
        return float(np.sum(self.coarse_block**2))

    @property
    def total_energy(self) -> float:
        return self.coarse_energy + sum(self.energy_per_level.values())

    def coefficient_count(self) -> int:
        n = self.coarse_block.size
        for b in self.detail_blocks.values():
            n += sum(x.size for x in b) if isinstance(b, tuple) else b.size
        return n

    def to_vector(self) -> np.ndarray:
        """1-D coefficients in Mallat order [V_c, D_c, D_c+1, ..., D_J-1]."""
        if self.ndim != 1:
            raise TransformError("to_vector is defined for 1-D decompositions")
        parts = [self.coarse_block] + [self.detail_blocks[j] for j in sorted(self.detail_blocks)]
        return np.concatenate(parts)

    def to_array(self) -> np.ndarray:
        """Pack coefficients into the input shape using the nested-square layout."""
        if self.ndim == 1:
            return self.to_vector()
        out = np.zeros(self.shape)
        cq, cp = self.coarse_block.shape
        out[:cq, :cp] = self.coarse_block
        for j in sorted(self.detail_blocks):
            hz, vt, dg = self.detail_blocks[j]
            nq, np_ = hz.shape
            out[:nq, np_:2 * np_] = hz
            out[nq:2 * nq, :np_] = vt
            out[nq:2 * nq, np_:2 * np_] = dg
        return out

    def copy_with(self, coarse=None, details=None) -> "MultiresolutionDecomposition":
        return MultiresolutionDecomposition(
            self.family,
            self.coarse_level,
            self.finest_level,
            self.coarse_block if coarse is None else coarse,
            self.detail_blocks if details is None else details,
            self.shape,
        )


def _energy(block) -> float:
    if isinstance(block, tuple):
        return float(sum(np.sum(b**2) for b in block))
    return float(np.sum(block**2))


def fwt_forward_1d(samples, family: WaveletFamily | str, coarse_level: int = 0) -> MultiresolutionDecomposition:
    """Periodic pyramid transform of ``2^J`` samples down to level ``coarse_level``."""
    family = make_family(family)
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise TransformError("fwt_forward_1d expects a 1-D array")
    J = _log2_exact(x.size)
    c = int(coarse_level)
    if not 0 <= c < J:
        raise TransformError(f"coarse level {c} must satisfy 0 <= c < J = {J}")
    details = {}
    a = x
    for j in range(J - 1, c - 1, -1):
        a, d = analysis_step(a, family)
        details[j] = d
    return MultiresolutionDecomposition(family.name, c, J, a, dict(sorted(details.items())), x.shape)


def _check_structure(dec: MultiresolutionDecomposition, family: WaveletFamily, ndim: int):
    if dec.family != family.name:
        raise TransformError(f"decomposition built with {dec.family}, not {family.name}")
    if dec.ndim != ndim:
        raise TransformError(f"expected a {ndim}-D decomposition, got {dec.ndim}-D")
    expected = set(range(dec.coarse_level, dec.finest_level))
    if set(dec.detail_blocks) != expected:
        raise TransformError(f"detail levels {sorted(dec.detail_blocks)} do not match {sorted(expected)}")


def fwt_inverse_1d(dec: MultiresolutionDecomposition, family: WaveletFamily | str) -> np.ndarray:
    family = make_family(family)
    _check_structure(dec, family, 1)
    a = np.asarray(dec.coarse_block, dtype=float)
    for j in range(dec.coarse_level, dec.finest_level):
        d = np.asarray(dec.detail_blocks[j], dtype=float)
        if d.shape != a.shape or a.size != 2**j:
            raise TransformError(f"level {j} block has size {d.size}, expected {2**j}")
        a = synthesis_step(a, d, family)
    return a


def fwt_2d(field_, family: WaveletFamily | str, coarse_level: int = 0) -> MultiresolutionDecomposition:
    """Separable periodic 2-D pyramid (axis 1 then axis 0 at every level).

    For rectangular inputs the level index follows the shorter axis:
    ``finest_level = min(Jq, Jp)`` and the coarse block has shape
    ``(Nq, Np) / 2^(J - c)``.
    """
    family = make_family(family)
    x = np.asarray(field_, dtype=float)
    if x.ndim != 2:
        raise TransformError("fwt_2d expects a 2-D array")
    Jq, Jp = _log2_exact(x.shape[0]), _log2_exact(x.shape[1])
    J = min(Jq, Jp)
    c = int(coarse_level)
    if not 0 <= c < J:
        raise TransformError(f"coarse level {c} must satisfy 0 <= c < J = {J}")
    details = {}
    a = x
    for j in range(J - 1, c - 1, -1):
        lo, hi = analysis_step(a, family, axis=1)
        ll, vt_lh = analysis_step(lo, family, axis=0)
        hl, hh = analysis_step(hi, family, axis=0)
        # horizontal: low along q, high along p; vertical: high along q, low along p
        details[j] = (hl, vt_lh, hh)
        a = ll
    return MultiresolutionDecomposition(family.name, c, J, a, dict(sorted(details.items())), x.shape)


def fwt_inverse_2d(dec: MultiresolutionDecomposition, family: WaveletFamily | str) -> np.ndarray:
    family = make_family(family)
    _check_structure(dec, family, 2)
    a = np.asarray(dec.coarse_block, dtype=float)
    for j in range(dec.coarse_level, dec.finest_level):
        hz, vt, dg = (np.asarray(b, dtype=float) for b in dec.detail_blocks[j])
        if not (hz.shape == vt.shape == dg.shape == a.shape):
            raise TransformError(f"level {j} sub-band shapes do not match the coarse block {a.shape}")
        lo = synthesis_step(a, vt, family, axis=0)
        hi = synthesis_step(hz, dg, family, axis=0)
        a = synthesis_step(lo, hi, family, axis=1)
    if a.shape != dec.shape:
        raise TransformError(f"reconstructed shape {a.shape} differs from recorded {dec.shape}")
    return a


# ---------------------------------------------------------------- packets


def packet_tree(samples, family: WaveletFamily | str, max_depth: int) -> dict[tuple[int, int], np.ndarray]:
    """All packet coefficients down to ``max_depth``; children of (l, b) are (l+1, 2b) and (l+1, 2b+1)."""
    family = make_family(family)
    x = np.asarray(samples, dtype=float)
    J = _log2_exact(x.size)
    if not 0 <= max_depth <= J:
        raise TransformError(f"max_depth {max_depth} must lie in 0..{J}")
    tree = {(0, 0): x}
    for level in range(max_depth):
        for band in range(2**level):
            a, d = analysis_step(tree[(level, band)], family)
            tree[(level + 1, 2 * band)] = a
            tree[(level + 1, 2 * band + 1)] = d
    return tree


def packet_inverse(nodes: dict[tuple[int, int], np.ndarray], family: WaveletFamily | str) -> np.ndarray:
    """Reconstruct a signal from coefficients on a disjoint cover of the packet tree."""
    family = make_family(family)
    work = {k: np.asarray(v, dtype=float) for k, v in nodes.items()}
    while set(work) != {(0, 0)}:
        level = max(k[0] for k in work)
        if level == 0:
            raise TransformError("duplicate root entries")
        for band in sorted(b for (l, b) in work if l == level and b % 2 == 0):
            if (level, band + 1) not in work:
                raise TransformError(f"node ({level}, {band}) lacks its sibling; not a valid tiling")
            work[(level - 1, band // 2)] = synthesis_step(work.pop((level, band)), work.pop((level, band + 1)), family)
        if any(l == level for (l, _) in work):
            raise TransformError(f"unpaired highpass node at level {level}; not a valid tiling")
    return work[(0, 0)]


def shannon_cost(coeffs: np.ndarray, total_energy: float) -> float:
    """Additive entropy -sum p log p with p = c^2 / total_energy; 0 log 0 = 0."""
    if total_energy <= 0:
        return 0.0
    p = np.asarray(coeffs, dtype=float) ** 2 / total_energy
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


@dataclass(frozen=True)
class PacketBasis:
    tree_depth: int
    selected_nodes: frozenset
    entropy: float
    root_entropy: float
    node_costs: dict = field(repr=False, compare=False, default_factory=dict)

    def cost_of(self, nodes) -> float:
        return float(sum(self.node_costs[n] for n in nodes))


def wavelet_basis_nodes(depth: int) -> frozenset:
    """Nodes of the ordinary wavelet basis inside a packet tree of given depth."""
    nodes = {(l, 1) for l in range(1, depth + 1)}
    nodes.add((depth, 0))
    return frozenset(nodes) if depth > 0 else frozenset({(0, 0)})


def best_basis(samples, family: WaveletFamily | str, max_depth: int) -> PacketBasis:
    """Minimum Shannon-entropy tiling of the packet tree (bottom-up search).

    Ties keep the parent, so a node is split only when that strictly lowers
    the cost.
    """
    tree = packet_tree(samples, family, max_depth)
    energy = float(np.sum(np.asarray(samples, dtype=float) ** 2))
    costs = {node: shannon_cost(c, energy) for node, c in tree.items()}
    best = {}
    for level in range(max_depth, -1, -1):
        for band in range(2**level):
            own = costs[(level, band)]
            if level == max_depth:
                best[(level, band)] = (own, frozenset({(level, band)}))
                continue
            c0, s0 = best[(level + 1, 2 * band)]
            c1, s1 = best[(level + 1, 2 * band + 1)]
            if c0 + c1 < own:
                best[(level, band)] = (c0 + c1, s0 | s1)
            else:
                best[(level, band)] = (own, frozenset({(level, band)}))
    total, nodes = best[(0, 0)]
    return PacketBasis(max_depth, nodes, total, costs[(0, 0)], costs)


# ------------------------------------------------------------ compression


def wavelet_matrix(n: int, family: WaveletFamily | str, coarse_level: int = 0) -> np.ndarray:
    """Orthogonal matrix W whose rows are the periodized basis functions (Mallat order)."""
    family = make_family(family)
    eye = np.eye(n)
    return np.stack([fwt_forward_1d(e, family, coarse_level).to_vector() for e in eye], axis=1)


def wavelet_operator(dense, family: WaveletFamily | str, coarse_level: int = 0) -> np.ndarray:
    """Represent a matrix in the wavelet basis, W A W^T (columns, then rows)."""
    family = make_family(family)
    A = np.asarray(dense, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise TransformError("operator must be a square matrix")
    cols = np.stack([fwt_forward_1d(A[:, i], family, coarse_level).to_vector() for i in range(A.shape[1])], axis=1)
    return np.stack([fwt_forward_1d(cols[i], family, coarse_level).to_vector() for i in range(A.shape[0])], axis=0)


@dataclass(frozen=True, eq=False)
class CompressedOperator:
    threshold: float
    matrix: sp.csr_matrix
    original_dim: int

    @property
    def retained_entries(self) -> list[tuple[int, int, float]]:
        coo = self.matrix.tocoo()
        return sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    @property
    def sparsity(self) -> float:
        return self.matrix.nnz / float(self.original_dim**2)

    def matvec(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    def error_bound(self, x) -> float:
        """Guaranteed infinity-norm bound on the matvec error."""
        return self.threshold * self.original_dim * float(np.max(np.abs(x)))


def compress_operator(dense, threshold: float) -> CompressedOperator:
    """Drop every entry with magnitude <= threshold."""
    A = np.asarray(dense, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise TransformError("operator must be a square matrix")
    if threshold < 0 or np.isnan(threshold):
        raise TransformError(f"threshold must be nonnegative, got {threshold}")
    keep = np.abs(A) > threshold
    return CompressedOperator(float(threshold), sp.csr_matrix(np.where(keep, A, 0.0)), A.shape[0])


@dataclass(frozen=True, eq=False)
class NonstandardOperator:
    """Nonstandard form: per-level blocks A_j (d->d), B_j (s->d), G_j (d->s) and T_c (s->s).

    Obtained from the separable 2-D pyramid of the matrix (output index on
    axis 0, input index on axis 1); blocks may be thresholded sparse matrices.
    """

    family: str
    coarse_level: int
    finest_level: int
    coarse: sp.csr_matrix
    blocks: dict  # level -> (A_j, B_j, G_j)
    threshold: float = 0.0

    @property
    def dim(self) -> int:
        return 2**self.finest_level

    @property
    def nnz(self) -> int:
        return self.coarse.nnz + sum(m.nnz for blk in self.blocks.values() for m in blk)

    @property
    def sparsity(self) -> float:
        """Retained entries over dim^2 (the packed form has exactly dim^2 slots)."""
        return self.nnz / float(self.dim**2)

    def compress(self, threshold: float) -> "NonstandardOperator":
        if threshold < 0 or np.isnan(threshold):
            raise TransformError(f"threshold must be nonnegative, got {threshold}")

        def cut(m):
            m = m.tocsr(copy=True)
            m.data[np.abs(m.data) <= threshold] = 0.0
            m.eliminate_zeros()
            return m

        blocks = {j: tuple(cut(m) for m in blk) for j, blk in self.blocks.items()}
        return NonstandardOperator(self.family, self.coarse_level, self.finest_level, cut(self.coarse), blocks, float(threshold))

    def matvec(self, x) -> np.ndarray:
        family = make_family(self.family)
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise TransformError(f"vector length {x.shape} does not match operator dimension {self.dim}")
        s, avgs, dets = x, {}, {}
        for j in range(self.finest_level - 1, self.coarse_level - 1, -1):
            s, d = analysis_step(s, family)
            avgs[j], dets[j] = s, d
        out = self.coarse @ avgs[self.coarse_level]
        for j in range(self.coarse_level, self.finest_level):
            A, B, G = self.blocks[j]
            out = synthesis_step(out + G @ dets[j], A @ dets[j] + B @ avgs[j], family)
        return out


def nonstandard_form(dense, family: WaveletFamily | str, coarse_level: int = 0) -> NonstandardOperator:
    family = make_family(family)
    A = np.asarray(dense, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise TransformError("operator must be a square matrix")
    dec = fwt_2d(A, family, coarse_level)
    blocks = {}
    for j, (hz, vt, dg) in dec.detail_blocks.items():
        # hz: low on output, high on input (d -> s); vt: high on output, low on input (s -> d)
        blocks[j] = (sp.csr_matrix(dg), sp.csr_matrix(vt), sp.csr_matrix(hz))
    return NonstandardOperator(family.name, dec.coarse_level, dec.finest_level, sp.csr_matrix(dec.coarse_block), blocks)
