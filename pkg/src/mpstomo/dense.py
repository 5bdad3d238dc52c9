"""Exact statevector backend: brute-force oracle for small chains.

Holds the 2^N amplitude representation, matrix-free application of Pauli-sum
operators, a Krylov extremal eigensolver with residual certification, window
reductions, and the reference shrink operators used by the dense
singular-value-thresholding recursion.

Basis convention: site 1 is the most significant bit, so the basis index of
|b_1 b_2 ... b_N> is sum_j b_j 2^(N-j).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

from .pauli import (
    DENSE_GUARD,
    CoefficientVector,
    PauliAxis,
    PauliString,
    StringTable,
    Window,
    pattern_matrix,
)


class EigensolverError(RuntimeError):
    """Raised when the Krylov iteration fails to certify its residual in budget."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _check_guard(n_sites: int, what: str = "state"):
    if n_sites > DENSE_GUARD:
        raise ValueError(f"dense {what} with n_sites={n_sites} exceeds guard {DENSE_GUARD}")


@dataclass(frozen=True)
class DenseState:
    """Pure state as a complex amplitude vector of length 2^N."""

    n_sites: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_guard(self.n_sites)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 ** self.n_sites,):
            raise ValueError(f"expected {2 ** self.n_sites} amplitudes, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "DenseState":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        return DenseState(self.n_sites, self.amplitudes / n)


def basis_state(n_sites: int, index: int = 0) -> DenseState:
    amps = np.zeros(2 ** n_sites, dtype=complex)
    amps[index] = 1.0
    return DenseState(n_sites, amps)


def random_state(n_sites: int, seed: int = 0) -> DenseState:
    """Haar-ish random state: normalized complex Gaussian amplitudes."""
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(2 ** n_sites) + 1j * rng.standard_normal(2 ** n_sites)
    return DenseState(n_sites, amps / np.linalg.norm(amps))


def _apply_axis(amps: np.ndarray, n_sites: int, site: int, axis: PauliAxis) -> np.ndarray:
    view = amps.reshape(2 ** (site - 1), 2, 2 ** (n_sites - site))
    out = np.empty_like(view)
    if axis is PauliAxis.X:
        out[:, 0, :] = view[:, 1, :]
        out[:, 1, :] = view[:, 0, :]
    elif axis is PauliAxis.Y:
        out[:, 0, :] = -1j * view[:, 1, :]
        out[:, 1, :] = 1j * view[:, 0, :]
    elif axis is PauliAxis.Z:
        out[:, 0, :] = view[:, 0, :]
        out[:, 1, :] = -view[:, 1, :]
    else:
        return amps
    return out.reshape(amps.shape)


def apply_string(string: PauliString, state: DenseState) -> DenseState:
    """P|psi> without materializing the 2^N x 2^N matrix; norm is preserved."""
    if string.n_sites != state.n_sites:
        raise ValueError(f"string on {string.n_sites} sites, state on {state.n_sites}")
    amps = state.amplitudes
    for site, axis in string.support:
        amps = _apply_axis(amps, state.n_sites, site, axis)
    return DenseState(state.n_sites, amps)


def _window_terms(coeffs: CoefficientVector) -> list[tuple[int, np.ndarray]]:
    """Per-window local operators sum_k a_k (local P_k), skipping all-zero windows."""
    terms = []
    for start, (idx, mats) in coeffs.table.window_groups().items():
        if len(idx) == 0:
            continue
        local = np.tensordot(coeffs.values[idx], mats, axes=1)
        if np.any(local):
            terms.append((start, local))
    return terms


def _sum_matvec(coeffs: CoefficientVector) -> Callable[[np.ndarray], np.ndarray]:
    """Matrix-free action of sum_k a_k P_k, grouping strings by anchor window."""
    n = coeffs.table.n_sites
    w = coeffs.table.window_width
    terms = _window_terms(coeffs)
    c_id = coeffs.values[coeffs.table.identity_index]

    def matvec(x: np.ndarray) -> np.ndarray:
        out = c_id * x if c_id != 0.0 else np.zeros_like(x)
        for start, local in terms:
            view = x.reshape(2 ** (start - 1), 2 ** w, -1)
            out += np.einsum("ab,pbq->paq", local, view).reshape(x.shape)
        return out

    return matvec


def apply_sum(coeffs: CoefficientVector, state: DenseState) -> np.ndarray:
    """(sum_k a_k P_k)|psi> as an unnormalized amplitude vector."""
    if coeffs.n_sites != state.n_sites:
        raise ValueError("coefficient table and state chain lengths differ")
    return _sum_matvec(coeffs)(state.amplitudes)


def dense_of_coefficients(coeffs: CoefficientVector) -> np.ndarray:
    """Materialize sum_k a_k P_k as a dense 2^N x 2^N matrix (oracle use only)."""
    n = coeffs.table.n_sites
    _check_guard(n, "operator")
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    c_id = coeffs.values[coeffs.table.identity_index]
    if c_id != 0.0:
        out[np.diag_indices(dim)] = c_id
    w = coeffs.table.window_width
    for start, local in _window_terms(coeffs):
        pre = np.eye(2 ** (start - 1))
        post = np.eye(2 ** (n - start - w + 1))
        out += np.kron(np.kron(pre, local), post)
    return out


def expectations(state: DenseState, table: StringTable) -> np.ndarray:
    """<psi|P_k|psi> for every table string, via window reductions.

    Assumes a normalized state; the identity entry is returned as exactly 1.
    """
    if table.n_sites != state.n_sites:
        raise ValueError("table and state chain lengths differ")
    w = table.window_width
    vals = np.zeros(len(table))
    vals[table.identity_index] = 1.0
    for start, (idx, mats) in table.window_groups().items():
        if len(idx) == 0:
            continue
        view = state.amplitudes.reshape(2 ** (start - 1), 2 ** w, -1)
        rho = np.einsum("paq,pbq->ab", view, view.conj())
        raw = np.einsum("ab,kba->k", rho, mats)
        if np.max(np.abs(raw.imag), initial=0.0) > 1e-10:
            raise ArithmeticError("expectation of a Pauli string came out non-real")
        vals[idx] = raw.real
    return vals


class EigResult(NamedTuple):
    value: float
    state: DenseState
    degenerate: bool
    residual: float
    matvecs: int


def _lanczos_max(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    tol: float,
    v0: np.ndarray | None,
    max_matvecs: int,
    restart_dim: int = 120,
    seed: int = 0,
) -> tuple[float, np.ndarray, float, int]:
    """Largest-eigenvalue Lanczos with full reorthogonalization and restarts.

    Returns (value, vector, certified residual, matvecs used); raises
    EigensolverError when the budget runs out before ||Av - theta v|| <= tol.
    """
    rng = np.random.default_rng(seed)

    def random_vec() -> np.ndarray:
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return v / np.linalg.norm(v)

    if v0 is None:
        v = random_vec()
    else:
        nrm = np.linalg.norm(v0)
        v = v0 / nrm if nrm > 0 else random_vec()

    m_cap = min(dim, restart_dim)
    used = 0
    best_residual = np.inf
    while used < max_matvecs:
        V = np.empty((dim, m_cap), dtype=complex)
        alphas: list[float] = []
        betas: list[float] = []
        V[:, 0] = v
        j = 0
        while j < m_cap and used < max_matvecs:
            work = matvec(V[:, j])
            used += 1
            alpha = np.vdot(V[:, j], work)
            alphas.append(alpha.real)
            work -= alpha * V[:, j]
            if j > 0:
                work -= betas[-1] * V[:, j - 1]
            # full reorthogonalization, twice for numerical safety
            for _ in range(2):
                work -= V[:, : j + 1] @ (V[:, : j + 1].conj().T @ work)
            beta = np.linalg.norm(work)
            theta, s = _top_ritz(alphas, betas)
            est = abs(beta * s[-1])
            if est <= max(tol * 0.5, 1e-15) or beta <= 1e-14 or j == m_cap - 1:
                x = V[:, : j + 1] @ s
                x /= np.linalg.norm(x)
                resid = float(np.linalg.norm(matvec(x) - theta * x))
                used += 1
                best_residual = min(best_residual, resid)
                if resid <= tol:
                    return float(theta), x, resid, used
                if beta <= 1e-14:
                    # invariant subspace without convergence: bring in a fresh direction
                    fresh = random_vec()
                    for _ in range(2):
                        fresh -= V[:, : j + 1] @ (V[:, : j + 1].conj().T @ fresh)
                    nrm = np.linalg.norm(fresh)
                    if nrm < 1e-12:
                        return float(theta), x, resid, used  # space exhausted: exact
                    work = fresh * (1.0 / nrm)
                    beta = 0.0
                if j == m_cap - 1:
                    v = x  # restart from the best Ritz vector
                    break
            if beta > 1e-14:
                work = work / beta
            betas.append(float(beta))
            j += 1
            if j < m_cap:
                V[:, j] = work
        else:
            continue
    raise EigensolverError(
        f"extremal eigensolver failed to reach tol={tol:g} within {max_matvecs} matvecs "
        f"(best residual {best_residual:g})",
        best_residual,
    )


def _top_ritz(alphas: list[float], betas: list[float]) -> tuple[float, np.ndarray]:
    m = len(alphas)
    if m == 1:
        return alphas[0], np.ones(1)
    vals, vecs = scipy.linalg.eigh_tridiagonal(
        np.asarray(alphas), np.asarray(betas[: m - 1]), select="i", select_range=(m - 1, m - 1)
    )
    return float(vals[0]), vecs[:, 0]


def extremal_eigenstate(
    coeffs: CoefficientVector,
    which: str = "max",
    tol: float = 1e-10,
    v0: np.ndarray | None = None,
    max_matvecs: int | None = None,
) -> EigResult:
    """Extremal eigenpair of sum_k a_k P_k by matrix-free Krylov iteration.

    The returned pair is certified: ||sum_k a_k P_k |v> - value |v>|| <= tol.
    The all-zero operator returns (0, |0...0>) with the degenerate flag set.
    """
    if which not in ("max", "min"):
        raise ValueError(f"which must be 'max' or 'min', got {which!r}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = coeffs.table.n_sites
    _check_guard(n, "eigensolve")
    dim = 2 ** n
    if not np.any(coeffs.values):
        return EigResult(0.0, basis_state(n, 0), True, 0.0, 0)
    sign = 1.0 if which == "max" else -1.0
    base = _sum_matvec(coeffs)
    matvec = base if which == "max" else (lambda x: -base(x))
    budget = max_matvecs if max_matvecs is not None else max(10 * dim, 400)
    value, vec, resid, used = _lanczos_max(matvec, dim, tol, v0, budget)
    return EigResult(sign * value, DenseState(n, vec), False, resid, used)


@dataclass(frozen=True)
class DensityMatrix:
    """Reduced density matrix on a window: hermitian, unit trace."""

    dimension: int
    entries: np.ndarray

    def __post_init__(self):
        ent = np.asarray(self.entries, dtype=complex)
        if ent.shape != (self.dimension, self.dimension):
            raise ValueError(f"expected {self.dimension}x{self.dimension} matrix")
        if np.max(np.abs(ent - ent.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(ent))):
            raise ValueError("density matrix is not hermitian")
        if abs(np.trace(ent).real - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace {np.trace(ent).real} != 1")
        object.__setattr__(self, "entries", ent)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


def partial_trace(state: DenseState, keep: Window) -> DensityMatrix:
    """Reduction of |psi><psi| onto the window's sites."""
    n, w = state.n_sites, keep.width
    if keep.start < 1 or keep.stop > n:
        raise ValueError(f"window {keep} outside chain of {n} sites")
    view = state.amplitudes.reshape(2 ** (keep.start - 1), 2 ** w, -1)
    rho = np.einsum("paq,pbq->ab", view, view.conj())
    return DensityMatrix(2 ** w, rho)


def fidelity(s: DenseState, t: DenseState) -> float:
    """|<s|t>|^2."""
    if s.n_sites != t.n_sites:
        raise ValueError("states live on different chain lengths")
    return float(abs(np.vdot(s.amplitudes, t.amplitudes)) ** 2)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of rho - sigma."""
    if rho.dimension != sigma.dimension:
        raise ValueError("density matrices of different dimension")
    diff = rho.entries - sigma.entries
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def shrink_standard(matrix: np.ndarray, tau: float) -> np.ndarray:
    """Soft-threshold the singular values by tau, keeping the singular vectors."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("expected a square matrix")
    if matrix.shape[0] > 2 ** DENSE_GUARD:
        raise ValueError("matrix exceeds dense guard")
    u, s, vh = np.linalg.svd(matrix)
    return (u * np.maximum(s - tau, 0.0)) @ vh


class TopEig(NamedTuple):
    value: float
    vector: np.ndarray
    degenerate: bool


def shrink_top(matrix: np.ndarray) -> TopEig:
    """Algebraically largest eigenpair of a hermitian matrix.

    Ties break toward the lowest basis index; an (almost) zero matrix returns
    (0, e_1) with the degenerate flag set.
    """
    matrix = np.asarray(matrix, dtype=complex)
    scale = np.max(np.abs(matrix), initial=0.0)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("expected a square matrix")
    if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > 1e-10 * max(1.0, scale):
        raise ValueError("matrix is not hermitian")
    dim = matrix.shape[0]
    if scale == 0.0:
        e1 = np.zeros(dim, dtype=complex)
        e1[0] = 1.0
        return TopEig(0.0, e1, True)
    vals, vecs = np.linalg.eigh(matrix)
    top = int(np.argmax(vals))  # first occurrence wins exact ties
    degenerate = dim > 1 and vals[-2 if top == dim - 1 else -1] >= vals[top] - 1e-12 * max(1.0, abs(vals[top]))
    return TopEig(float(vals[top]), vecs[:, top], degenerate)


def svt_reference_loop(record, config, known_target: DenseState | None = None):
    """Dense-matrix cross-validation oracle for the coefficient-space recursion.

    Runs the identical update rule with the iterate operator materialized as a
    2^N x 2^N matrix and the rank-1 shrink taken from exact diagonalization.
    Returns the same result type as the coefficient-space reconstruction.
    """
    from . import svt  # deferred: svt imports this module for its dense backend

    table = record.table
    n = table.n_sites
    _check_guard(n, "reference loop")
    dim = 2 ** n
    measured = record.values
    op_meas = dense_of_coefficients(svt.measurement_operator(record))
    pauli_dense = [np.asarray(_string_dense(table, k)) for k in range(len(table))]

    coeffs0 = svt.initial_coefficients(record, config)
    y_mat = dense_of_coefficients(coeffs0)

    import time

    t0 = time.perf_counter()
    psi0 = svt.initial_dense_state(record, config, known_target)
    if np.any(coeffs0.values):
        top = shrink_top(y_mat)
        value, psi = top.value, DenseState(n, top.vector)
    else:
        value, psi = 0.0, psi0
    evals = expectations(psi, table)
    x = svt.l1_residual(record, evals)

    tracker = svt.RunTracker(record, config, known_target, backend_fidelity=_dense_fid_vs)
    tracker.observe(0, value, psi, evals, x)
    for step in range(1, config.n_max + 1):
        delta = svt.delta_value(config, step - 1, n, len(table))
        correction = measured / dim
        if value > 0.0:
            correction = correction - value * evals / dim
        update = np.zeros((dim, dim), dtype=complex)
        for k, c in enumerate(correction):
            if c != 0.0:
                update += c * pauli_dense[k]
        y_mat = y_mat + delta * update
        top = shrink_top(y_mat)
        value, psi = top.value, DenseState(n, top.vector)
        evals = expectations(psi, table)
        x = svt.l1_residual(record, evals)
        tracker.observe(step, value, psi, evals, x)
        if tracker.should_stop(x):
            break
    return tracker.result(elapsed_s=time.perf_counter() - t0)


def _dense_fid_vs(state: DenseState, target) -> float:
    if isinstance(target, DenseState):
        return fidelity(state, target)
    from .mps import dense_from_mps

    return fidelity(state, dense_from_mps(target))


def _string_dense(table: StringTable, k: int) -> np.ndarray:
    """Dense matrix of table entry k, embedded via its anchor window."""
    n, w = table.n_sites, table.window_width
    if k == table.identity_index:
        return np.eye(2 ** n, dtype=complex)
    start = int(table.anchors[k])
    local = pattern_matrix(table.patterns[k])
    return np.kron(np.kron(np.eye(2 ** (start - 1)), local), np.eye(2 ** (n - start - w + 1)))
