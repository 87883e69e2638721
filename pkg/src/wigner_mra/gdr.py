"""Algebraic reduction of the Wigner-Moyal evolution.

Two routes are provided and cross-checked:

* :func:`assemble_dispersion_system` / :func:`solve_system` -- space-time
  Galerkin equations on a time window.  Trial and test functions are
  tensor products of time translates ``phi((t - t0)/h - i)`` restricted to
  the window and the orthonormal spatial scaling functions, giving exactly
  ``d * N_t * N_q * N_p`` unknowns.
* :func:`evolve` -- method of lines with classical RK4.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from .connection import point_values, window_integrals
from .moyal import CoefficientField, Derivative, Multiply, MoyalOperator, PhaseSpaceGrid
from .scales import FockStateList, fock_difference
from .wavelets import WaveletFamily, cascade_table, make_family

__all__ = [
    "StabilityError",
    "NumericalError",
    "SolverError",
    "Trajectory",
    "DispersionSystem",
    "CutoffResult",
    "zero_operator",
    "stable_dt",
    "operator_norm",
    "evolve",
    "assemble_dispersion_system",
    "solve_system",
    "gdr_evolve",
    "cutoff_level",
]

log = logging.getLogger(__name__)

RK4_IMAG_LIMIT = 2 * np.sqrt(2)  # RK4 stability interval on the imaginary axis
RK4_DISSIPATIVE_RADIUS = 2.5  # conservative radius once a diffusive part is present
DEFAULT_TIME_FAMILY = "daubechies-5"


class StabilityError(ValueError):
    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class NumericalError(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class SolverError(RuntimeError):
    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


def zero_operator(grid: PhaseSpaceGrid) -> MoyalOperator:
    return MoyalOperator((), grid, 0)


# ------------------------------------------------------------ method of lines


@dataclass(eq=False)
class Trajectory:
    grid: PhaseSpaceGrid
    times: list[float] = field(default_factory=list)
    fields: list[CoefficientField] = field(default_factory=list)
    integrator_name: str = "rk4"
    dt: float = 0.0

    def append(self, f: CoefficientField):
        if f.grid != self.grid:
            raise ValueError("snapshot grid differs from trajectory grid")
        if self.times and f.time <= self.times[-1]:
            raise ValueError("snapshot times must increase strictly")
        self.times.append(float(f.time))
        self.fields.append(f)

    @property
    def final(self) -> CoefficientField:
        return self.fields[-1]

    def __len__(self) -> int:
        return len(self.fields)


def stable_dt(op: MoyalOperator, safety: float = 0.5) -> float:
    """Largest admissible RK4 step for this operator.

    Combines the advective limit ``safety * min(dq / max|p/m|, dp / max|U'|)``
    with a limit from the 2-norm of the assembled matrix, which also covers
    the dispersive and diffusive terms.  The closed-system matrix is
    skew-symmetric, so its spectrum lies on the imaginary axis inside
    ``||op||`` and the RK4 interval 2 sqrt(2) applies directly.
    """
    g = op.grid
    limits = [np.inf]
    for t in op.terms:
        if isinstance(t.q_action, Derivative) and t.q_action.op.d == 1 and isinstance(t.p_action, Multiply):
            vmax = abs(t.coefficient) * t.p_action.norm()
            if vmax > 0:
                limits.append(safety * g.dq / vmax)
        if isinstance(t.p_action, Derivative) and t.p_action.op.d == 1 and isinstance(t.q_action, Multiply):
            vmax = abs(t.coefficient) * t.q_action.norm()
            if vmax > 0:
                limits.append(safety * g.dp / vmax)
    rho = operator_norm(op)
    if rho > 0:
        radius = RK4_IMAG_LIMIT * (1 - 1e-6) if op.decoherence_D == 0 else RK4_DISSIPATIVE_RADIUS
        limits.append(radius / rho)
    return float(min(limits))


def operator_norm(op: MoyalOperator) -> float:
    """Spectral norm of the assembled operator matrix (Lanczos, fixed start vector)."""
    M = op.to_sparse()
    if M.nnz == 0:
        return 0.0
    v0 = np.random.default_rng(0).standard_normal(M.shape[0])
    return float(spl.svds(M, k=1, v0=v0, return_singular_vectors=False)[0])


def _rk4_step(op: MoyalOperator, W: np.ndarray, dt: float) -> np.ndarray:
    k1 = op.apply_array(W)
    k2 = op.apply_array(W + 0.5 * dt * k1)
    k3 = op.apply_array(W + 0.5 * dt * k2)
    k4 = op.apply_array(W + dt * k3)
    return W + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve(
    op: MoyalOperator,
    initial: CoefficientField,
    t_end: float,
    dt: float,
    method: str = "rk4",
    stride: int = 1,
    safety: float = 0.5,
    callback: Callable[[CoefficientField], None] | None = None,
) -> Trajectory:
    """Integrate dW/dt = op(W) from ``initial.time`` for a duration ``t_end``.

    The step is adjusted down so that an integer number of steps lands on
    ``t_end`` exactly; the effective value is stored in ``Trajectory.dt``.
    """
    if method != "rk4":
        raise ValueError(f"unknown integrator {method!r}; only 'rk4' is available")
    if op.grid != initial.grid:
        raise ValueError("operator and initial field live on different grids")
    if dt <= 0 or t_end < 0:
        raise ValueError("dt must be positive and t_end nonnegative")
    n_steps = max(1, int(np.ceil(t_end / dt - 1e-9)))
    dt_eff = t_end / n_steps if t_end > 0 else dt
    limit = stable_dt(op, safety)
    if dt_eff > limit * (1 + 1e-12):
        raise StabilityError(f"dt = {dt_eff:.6g} exceeds the stability limit {limit:.6g}", 0.99 * limit)
    traj = Trajectory(initial.grid, integrator_name=method, dt=dt_eff)
    traj.append(initial)
    if callback:
        callback(initial)
    if t_end == 0:
        return traj
    W = initial.data.copy()
    t0 = initial.time
    report_every = max(1, n_steps // 10)
    for step in range(1, n_steps + 1):
        W = _rk4_step(op, W, dt_eff)
        if not np.all(np.isfinite(W)):
            raise NumericalError(f"non-finite field after step {step}", step)
        if step % stride == 0 or step == n_steps:
            snap = CoefficientField(initial.grid, W.copy(), t0 + step * dt_eff)
            traj.append(snap)
            if callback:
                callback(snap)
        if step % report_every == 0:
            log.info("rk4 step %d/%d t=%.6g", step, n_steps, t0 + step * dt_eff)
    return traj


# ------------------------------------------------------ dispersion system


@dataclass(eq=False)
class DispersionSystem:
    """Galerkin space-time system ``A a = rhs`` with ``a`` of shape (N_t, N_q, N_p).

    Row block 0 carries the weighted initial-trace constraint in place of
    the first time test function; blocks 1..N_t-1 are the Galerkin
    equations against ``A_k(t) B(q) C(p)``.
    """

    N_t: int
    N_q: int
    N_p: int
    d: int
    system_matrix: spl.LinearOperator
    rhs: np.ndarray
    window: tuple[float, float] = (0.0, 1.0)
    grid: PhaseSpaceGrid | None = None
    family_t: WaveletFamily | None = None
    time_indices: np.ndarray | None = None
    n_cells: int = 0
    preconditioner_factory: Callable[[], spl.LinearOperator] | None = None
    solution: np.ndarray | None = None
    residual_norm: float = np.inf
    iterations: int = 0

    @property
    def unknown_count(self) -> int:
        return self.d * self.N_t * self.N_q * self.N_p

    @property
    def step(self) -> float:
        return (self.window[1] - self.window[0]) / self.n_cells

    def residual(self, a: np.ndarray) -> float:
        r = self.system_matrix.matvec(a.ravel()) - self.rhs
        return float(np.linalg.norm(r) / np.linalg.norm(self.rhs))

    def _basis_at(self, t: float) -> np.ndarray:
        tau = (t - self.window[0]) / self.step
        if abs(tau - round(tau)) < 1e-12:
            return point_values(self.family_t, self.time_indices, int(round(tau)))
        tab = cascade_table(self.family_t, 12)
        x = tau - self.time_indices
        return np.interp(x, tab.x, tab.phi_values, left=0.0, right=0.0)

    def field_at(self, t: float) -> CoefficientField:
        if self.solution is None:
            raise RuntimeError("system has not been solved")
        w = self._basis_at(t)
        data = np.tensordot(w, self.solution, axes=(0, 0))
        return CoefficientField(self.grid, data, t)

    def node_fields(self) -> list[CoefficientField]:
        """Solution at the window nodes t0 + m h, m = 0..n_cells."""
        t0 = self.window[0]
        return [self.field_at(t0 + m * self.step) for m in range(self.n_cells + 1)]


def assemble_dispersion_system(
    op: MoyalOperator,
    window: tuple[float, float],
    N_t: int,
    family_t: str | WaveletFamily = DEFAULT_TIME_FAMILY,
    initial: CoefficientField | None = None,
    weight: float = 1e3,
) -> DispersionSystem:
    if initial is None:
        raise ValueError("an initial field is required")
    t0, t1 = map(float, window)
    if not t1 > t0:
        raise ValueError(f"degenerate time window [{t0}, {t1}]")
    if N_t < 4 or N_t & (N_t - 1):
        raise ValueError(f"N_t must be a power of two >= 4, got {N_t}")
    fam = make_family(family_t)
    band = 2 * fam.K - 2
    n_cells = N_t - band
    if n_cells < 1:
        raise ValueError(f"N_t = {N_t} is too small for the {fam.name} band (needs > {band})")
    if op.grid != initial.grid:
        raise ValueError("operator and initial field live on different grids")
    grid = op.grid
    S = grid.Nq * grid.Np
    h = (t1 - t0) / n_cells
    idx, gram, deriv = window_integrals(fam, n_cells)
    start = point_values(fam, idx, 0)

    lhs_t = deriv.copy()
    lhs_t[0] = weight * start
    mass_t = h * gram
    mass_t[0] = 0.0
    M = op.to_sparse()
    lhs_sp = sp.csr_matrix(lhs_t)
    mass_sp = sp.csr_matrix(mass_t)

    def matvec(a):
        X = np.asarray(a).reshape(N_t, S)
        return (lhs_sp @ X - mass_sp @ (M @ X.T).T).ravel()

    A = spl.LinearOperator((N_t * S, N_t * S), matvec=matvec, dtype=float)
    rhs = np.zeros(N_t * S)
    rhs[:S] = weight * initial.data.ravel()

    def factory():
        return _tensor_preconditioner(lhs_t, mass_t, M)

    return DispersionSystem(
        N_t=N_t,
        N_q=grid.Nq,
        N_p=grid.Np,
        d=1,
        system_matrix=A,
        rhs=rhs,
        window=(t0, t1),
        grid=grid,
        family_t=fam,
        time_indices=idx,
        n_cells=n_cells,
        preconditioner_factory=factory,
    )


def _tensor_preconditioner(lhs_t: np.ndarray, mass_t: np.ndarray, M: sp.csr_matrix) -> spl.LinearOperator:
    # Solve lhs_t X - mass_t X M^T = R via a complex Schur form of
    # C = lhs_t^{-1} mass_t and back substitution over time modes;
    # each mode needs one sparse factorization of (I - T_jj M).
    Nt = lhs_t.shape[0]
    S = M.shape[0]
    lhs_lu = la.lu_factor(lhs_t)
    C = la.lu_solve(lhs_lu, mass_t)
    T, Z = la.schur(C.astype(complex), output="complex")
    eye = sp.identity(S, format="csc", dtype=complex)
    Mc = M.tocsc().astype(complex)
    factors: dict[int, tuple] = {}
    keys: list[complex] = []
    for j in range(Nt):
        lam = T[j, j]
        if abs(lam) < 1e-14:
            factors[j] = (None, False)
            continue
        hit = None
        for k, key in enumerate(keys):
            if abs(np.conj(key) - lam) <= 1e-12 * max(1.0, abs(lam)):
                hit = (k, True)
                break
            if abs(key - lam) <= 1e-12 * max(1.0, abs(lam)):
                hit = (k, False)
                break
        if hit is None:
            keys.append(lam)
            factors[j] = (spl.splu((eye - lam * Mc).tocsc()), False)
            factors[("key", len(keys) - 1)] = factors[j]
        else:
            lu, _ = factors[("key", hit[0])]
            factors[j] = (lu, hit[1])

    def solve(r):
        R = np.asarray(r).reshape(Nt, S)
        F = la.lu_solve(lhs_lu, R)
        H = Z.conj().T @ F
        Y = np.zeros((Nt, S), dtype=complex)
        for j in range(Nt - 1, -1, -1):
            coupling = T[j, j + 1 :] @ Y[j + 1 :] if j + 1 < Nt else np.zeros(S, dtype=complex)
            b = H[j] + M @ coupling
            lu, conj = factors[j]
            if lu is None:
                Y[j] = b
            elif conj:
                Y[j] = np.conj(lu.solve(np.conj(b)))
            else:
                Y[j] = lu.solve(b)
        return np.real(Z @ Y).ravel()

    return spl.LinearOperator((Nt * S, Nt * S), matvec=solve, dtype=float)


def solve_system(sys_: DispersionSystem, tol: float = 1e-10, max_iter: int = 50, restart: int = 20) -> DispersionSystem:
    """Restarted GMRES; uses the tensor preconditioner when the system provides one."""
    n = sys_.rhs.size
    M = sys_.preconditioner_factory() if sys_.preconditioner_factory else None
    history: list[float] = []
    x0 = np.zeros(n)
    # scipy's gmres misbehaves when matvec returns its input array, so always hand back a copy
    A = spl.LinearOperator((n, n), matvec=lambda v: np.array(sys_.system_matrix.matvec(v)), dtype=float)
    x, info = spl.gmres(
        A,
        sys_.rhs,
        x0=x0,
        rtol=tol,
        atol=0.0,
        restart=restart,
        maxiter=max_iter,
        M=M,
        callback=lambda pr: history.append(float(pr)),
        callback_type="pr_norm",
    )
    res = sys_.residual(x)
    sys_.iterations = len(history)
    if info != 0 and res > tol:
        raise SolverError(f"GMRES did not converge in {max_iter} restarts (residual {res:.3e})", res)
    sys_.solution = x.reshape(sys_.N_t, sys_.N_q, sys_.N_p)
    sys_.residual_norm = res
    log.info("gdr solve: %d iterations, residual %.3e", sys_.iterations, res)
    return sys_


def gdr_evolve(
    op: MoyalOperator,
    initial: CoefficientField,
    t_end: float,
    window_length: float,
    N_t: int = 64,
    family_t=DEFAULT_TIME_FAMILY,
    tol: float = 1e-10,
) -> tuple[Trajectory, list[float]]:
    """Sequential windows, each restarted from the previous window's end trace."""
    n_windows = max(1, int(np.ceil(t_end / window_length - 1e-9)))
    length = t_end / n_windows
    traj = Trajectory(initial.grid, integrator_name="gdr", dt=length)
    traj.append(initial)
    residuals = []
    current = initial
    for w in range(n_windows):
        t0 = initial.time + w * length
        system = assemble_dispersion_system(op, (t0, t0 + length), N_t, family_t, current)
        solve_system(system, tol=tol)
        residuals.append(system.residual_norm)
        current = system.field_at(t0 + length)
        traj.append(current)
    return traj, residuals


# ------------------------------------------------------------- cut-off


@dataclass(frozen=True)
class CutoffResult:
    level: int
    converged: bool
    differences: dict


def cutoff_level(
    solve_at_levels: Callable[[int], FockStateList | CoefficientField],
    eps: float,
    N_max: int,
    N_min: int = 32,
) -> CutoffResult:
    """Smallest ladder rung N with ||W^(next) - W^N|| <= eps in the Fock-like norm.

    The ladder is N_min, 2 N_min, ..., N_max; solutions are requested lazily.
    """
    ladder = []
    n = N_min
    while n <= N_max:
        ladder.append(n)
        n *= 2
    if len(ladder) < 2:
        raise ValueError(f"ladder {ladder} needs at least two rungs")
    cache: dict[int, object] = {}

    def get(N):
        if N not in cache:
            cache[N] = solve_at_levels(N)
        return cache[N]

    diffs = {}
    for coarse, fine in zip(ladder, ladder[1:]):
        diffs[coarse] = fock_difference(get(fine), get(coarse))
        log.info("cutoff ladder N=%d: ||W^%d - W^%d|| = %.3e", coarse, fine, coarse, diffs[coarse])
        if diffs[coarse] <= eps:
            return CutoffResult(coarse, True, diffs)
    return CutoffResult(ladder[-1], False, diffs)
