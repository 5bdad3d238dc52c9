"""Matrix-product-state backend: states, operators, and the variational extremal eigensolver.

Site tensors have shape (left_bond, 2, right_bond); operator tensors have
shape (left_bond, phys_out, phys_in, right_bond).  Site indices are 1-based
at the interfaces, matching the rest of the package; internally lists are
0-based.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.sparse.linalg

from .pauli import (
    DENSE_GUARD,
    CoefficientVector,
    PauliAxis,
    PauliString,
    StringTable,
    axis_matrix,
    pattern_matrix,
)
from .dense import DenseState

_SVD_FLOOR = 1e-15  # relative cutoff below which Schmidt coefficients count as zero


class MPS:
    """Tensor-train pure state on an open chain of qubits."""

    def __init__(self, tensors: list[np.ndarray], center: int | None = None):
        if not tensors:
            raise ValueError("MPS needs at least one site")
        tensors = [np.asarray(t, dtype=complex) for t in tensors]
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for j, t in enumerate(tensors):
            if t.ndim != 3 or t.shape[1] != 2:
                raise ValueError(f"site tensor {j + 1} must have shape (chi_l, 2, chi_r)")
            if j and tensors[j - 1].shape[2] != t.shape[0]:
                raise ValueError(f"bond mismatch between sites {j} and {j + 1}")
        if center is not None and not 1 <= center <= len(tensors):
            raise ValueError(f"center {center} outside chain")
        self.tensors = tensors
        self.center = center

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        """All N+1 bond dimensions, boundaries included."""
        return [self.tensors[0].shape[0]] + [t.shape[2] for t in self.tensors]

    def copy(self) -> "MPS":
        return MPS([t.copy() for t in self.tensors], self.center)

    def norm(self) -> float:
        return float(np.sqrt(abs(overlap(self, self))))


def product_state_mps(n_sites: int, bits: list[int] | None = None) -> MPS:
    """Computational product state |b_1 ... b_N> (all zeros by default)."""
    bits = bits if bits is not None else [0] * n_sites
    tensors = []
    for b in bits:
        t = np.zeros((1, 2, 1), dtype=complex)
        t[0, b, 0] = 1.0
        tensors.append(t)
    return MPS(tensors, center=1)


def random_mps(n_sites: int, chi: int, seed: int = 0) -> MPS:
    """Normalized random MPS with inner bonds capped at ``chi``."""
    rng = np.random.default_rng(seed)
    tensors = []
    left = 1
    for j in range(n_sites):
        right = 1 if j == n_sites - 1 else min(chi, 2 ** (j + 1), 2 ** (n_sites - j - 1))
        t = rng.standard_normal((left, 2, right)) + 1j * rng.standard_normal((left, 2, right))
        tensors.append(t)
        left = right
    out = canonicalize(MPS(tensors), 1)
    return normalize(out)


def normalize(m: MPS) -> MPS:
    out = m.copy()
    n = out.norm()
    if n == 0:
        raise ValueError("cannot normalize the zero MPS")
    out.tensors[0] = out.tensors[0] / n
    return out


def _qr_step_right(tensors: list[np.ndarray], j: int):
    """Left-orthonormalize site j (0-based), pushing the remainder right."""
    chi_l, d, chi_r = tensors[j].shape
    q, r = np.linalg.qr(tensors[j].reshape(chi_l * d, chi_r))
    tensors[j] = q.reshape(chi_l, d, q.shape[1])
    tensors[j + 1] = np.tensordot(r, tensors[j + 1], axes=([1], [0]))


def _qr_step_left(tensors: list[np.ndarray], j: int):
    """Right-orthonormalize site j (0-based), pushing the remainder left."""
    chi_l, d, chi_r = tensors[j].shape
    mat = tensors[j].reshape(chi_l, d * chi_r)
    q, r = np.linalg.qr(mat.conj().T)
    k = q.shape[1]
    tensors[j] = q.conj().T.reshape(k, d, chi_r)
    tensors[j - 1] = np.tensordot(tensors[j - 1], r.conj().T, axes=([2], [0]))


def canonicalize(m: MPS, center: int) -> MPS:
    """Mixed-canonical form about ``center`` (1-based); state unchanged."""
    if not 1 <= center <= m.n_sites:
        raise ValueError(f"center {center} outside chain of {m.n_sites} sites")
    tensors = [t.copy() for t in m.tensors]
    for j in range(center - 1):
        _qr_step_right(tensors, j)
    for j in range(m.n_sites - 1, center - 1, -1):
        _qr_step_left(tensors, j)
    return MPS(tensors, center=center)


def truncate(m: MPS, chi_max: int) -> MPS:
    """Cap every bond at ``chi_max`` by discarding the smallest Schmidt coefficients.

    The result is renormalized, right-canonical with center at site 1.
    """
    if chi_max < 1:
        raise ValueError("chi_max must be >= 1")
    work = canonicalize(m, m.n_sites)  # left-canonical: SVDs now expose Schmidt values
    tensors = work.tensors
    for j in range(m.n_sites - 1, 0, -1):
        chi_l, d, chi_r = tensors[j].shape
        u, s, vh = np.linalg.svd(tensors[j].reshape(chi_l, d * chi_r), full_matrices=False)
        keep = max(1, min(chi_max, int(np.sum(s > s[0] * _SVD_FLOOR)) if s[0] > 0 else 1))
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
        tensors[j] = vh.reshape(keep, d, chi_r)
        tensors[j - 1] = np.tensordot(tensors[j - 1], u * s, axes=([2], [0]))
    out = MPS(tensors, center=1)
    return normalize(out)


def overlap(m1: MPS, m2: MPS) -> complex:
    """<m1|m2> by transfer contraction."""
    if m1.n_sites != m2.n_sites:
        raise ValueError("MPS overlap needs equal chain lengths")
    env = np.ones((1, 1), dtype=complex)  # (bra bond, ket bond)
    for a, b in zip(m1.tensors, m2.tensors):
        env = np.tensordot(env, b, axes=([1], [0]))          # (bra, p, ket')
        env = np.tensordot(a.conj(), env, axes=([0, 1], [0, 1]))  # (bra', ket')
    return complex(env[0, 0])


def mps_expectation(m: MPS, string: PauliString) -> float:
    """<psi|P|psi> for a normalized MPS; cost linear in the chain length."""
    if string.n_sites != m.n_sites:
        raise ValueError("string and MPS chain lengths differ")
    env = np.ones((1, 1), dtype=complex)
    for j, t in enumerate(m.tensors, start=1):
        axis = string.axis_at(j)
        ket = t if axis is PauliAxis.I else np.einsum("ab,xbc->xac", axis_matrix(axis), t)
        env = np.tensordot(env, ket, axes=([1], [0]))
        env = np.tensordot(t.conj(), env, axes=([0, 1], [0, 1]))
    val = complex(env[0, 0])
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"Pauli expectation has imaginary residue {val.imag:g}")
    return float(val.real)


def _transfer_envs(m: MPS) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Plain (no-operator) left/right environments; left[s] covers sites < s."""
    n = m.n_sites
    left = [np.ones((1, 1), dtype=complex)]
    for t in m.tensors:
        env = np.tensordot(left[-1], t, axes=([1], [0]))
        left.append(np.tensordot(t.conj(), env, axes=([0, 1], [0, 1])))
    right = [np.ones((1, 1), dtype=complex)]
    for t in reversed(m.tensors):
        env = np.tensordot(t, right[-1], axes=([2], [1]))
        right.append(np.tensordot(env, t.conj(), axes=([1, 2], [1, 2])))
    right.reverse()  # right[s] covers sites > s-1, i.e. index by window end + 1
    return left, right


def expectations_table(m: MPS, table: StringTable) -> np.ndarray:
    """<psi|P_k|psi> for every table string via window reductions.

    Assumes a normalized state; the identity entry is returned as exactly 1.
    """
    if table.n_sites != m.n_sites:
        raise ValueError("table and MPS chain lengths differ")
    w = table.window_width
    left, right = _transfer_envs(m)
    vals = np.zeros(len(table))
    vals[table.identity_index] = 1.0
    for start, (idx, mats) in table.window_groups().items():
        if len(idx) == 0:
            continue
        block = m.tensors[start - 1]
        for j in range(start, start + w - 1):
            block = np.tensordot(block, m.tensors[j], axes=([block.ndim - 1], [0]))
        # block: (bond_l, p_1..p_w, bond_r)
        t = np.tensordot(left[start - 1], block, axes=([1], [0]))        # (bra_l, p..., ket_r)
        t = np.tensordot(t, right[start + w - 1], axes=([t.ndim - 1], [1]))  # (bra_l, p..., bra_r)
        rho = np.tensordot(block.conj(), t, axes=([0, block.ndim - 1], [0, t.ndim - 1]))
        rho = rho.reshape(2 ** w, 2 ** w)  # rho[p_bra, p_ket]
        raw = np.einsum("ab,kab->k", rho, mats)
        if np.max(np.abs(raw.imag), initial=0.0) > 1e-10:
            raise ArithmeticError("expectation of a Pauli string came out non-real")
        vals[idx] = raw.real
    return vals


class MPO:
    """Matrix-product operator; tensors shaped (left, phys_out, phys_in, right)."""

    def __init__(self, tensors: list[np.ndarray]):
        if not tensors:
            raise ValueError("MPO needs at least one site")
        tensors = [np.asarray(t, dtype=complex) for t in tensors]
        if tensors[0].shape[0] != 1 or tensors[-1].shape[3] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for j, t in enumerate(tensors):
            if t.ndim != 4 or t.shape[1] != 2 or t.shape[2] != 2:
                raise ValueError(f"operator tensor {j + 1} must have shape (D_l, 2, 2, D_r)")
            if j and tensors[j - 1].shape[3] != t.shape[0]:
                raise ValueError(f"bond mismatch between sites {j} and {j + 1}")
        self.tensors = tensors

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [self.tensors[0].shape[0]] + [t.shape[3] for t in self.tensors]

    def negated(self) -> "MPO":
        tensors = [t.copy() for t in self.tensors]
        tensors[0] = -tensors[0]
        return MPO(tensors)


_IDLE = ("idle",)
_DONE = ("done",)


def _remainder_after(string: PauliString, bond: int) -> tuple:
    """Open part of the string past ``bond`` as ((offset, axis letter), ...)."""
    return tuple((site - bond, axis.value) for site, axis in string.support if site > bond)


def mpo_compile(coeffs: CoefficientVector) -> MPO:
    """Compile a coefficient vector into an MPO.

    Each string contributes a finite-state path: idle until its first site,
    where the coefficient is deposited, then a channel keyed by the remaining
    (offset, axis) pattern until it completes.  Bond dimension is bounded by
    the number of distinct open patterns, which depends on the window width
    but not on the chain length (<= 5 for width-2 tables).
    """
    table = coeffs.table
    n = table.n_sites
    ident = np.eye(2, dtype=complex)

    # channels on each bond 0..n: idle first, open patterns sorted, done last
    pending: list[set] = [set() for _ in range(n + 1)]
    for string in table.strings:
        if string.is_identity:
            continue
        for bond in range(string.min_site, string.max_site):
            pending[bond].add(_remainder_after(string, bond))
    channels: list[list[tuple]] = []
    for bond in range(n + 1):
        if bond == 0:
            channels.append([_IDLE])
        elif bond == n:
            channels.append([_DONE])
        else:
            channels.append([_IDLE] + sorted(pending[bond]) + [_DONE])

    tensors = []
    for site in range(1, n + 1):
        lch = {c: i for i, c in enumerate(channels[site - 1])}
        rch = {c: i for i, c in enumerate(channels[site])}
        t = np.zeros((len(lch), 2, 2, len(rch)), dtype=complex)
        if _IDLE in lch and _IDLE in rch:
            t[lch[_IDLE], :, :, rch[_IDLE]] = ident
        if _DONE in lch and _DONE in rch:
            t[lch[_DONE], :, :, rch[_DONE]] = ident
        if site == 1 and _IDLE in lch and _DONE in rch:
            c_id = coeffs.values[table.identity_index]
            if c_id != 0.0:
                t[lch[_IDLE], :, :, rch[_DONE]] += c_id * ident
        # strings starting here: deposit the coefficient on the first operator
        for k, string in enumerate(table.strings):
            if string.is_identity or string.min_site != site:
                continue
            first_axis = string.support[0][1]
            op = coeffs.values[k] * axis_matrix(first_axis)
            rem = _remainder_after(string, site)
            target = _DONE if not rem else rem
            t[lch[_IDLE], :, :, rch[target]] += op
        # strings passing through: advance their open pattern
        for rem in sorted(pending[site - 1]):
            offset, letter = rem[0]
            if offset == 1:
                op = axis_matrix(PauliAxis(letter))
                nxt = tuple((o - 1, a) for o, a in rem[1:])
            else:
                op = ident
                nxt = tuple((o - 1, a) for o, a in rem)
            target = _DONE if not nxt else nxt
            t[lch[rem], :, :, rch[target]] += op
        tensors.append(t)
    return MPO(tensors)


def mpo_dense(op: MPO) -> np.ndarray:
    """Materialize an MPO as a 2^N x 2^N matrix (small chains only)."""
    n = op.n_sites
    if n > DENSE_GUARD:
        raise ValueError(f"n_sites={n} exceeds dense guard {DENSE_GUARD}")
    block = op.tensors[0]
    for t in op.tensors[1:]:
        block = np.tensordot(block, t, axes=([block.ndim - 1], [0]))
    block = block[0, ..., 0]  # (p1', p1, p2', p2, ...)
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return block.transpose(order).reshape(2 ** n, 2 ** n)


def mpo_expectation(m: MPS, op: MPO) -> float:
    """<psi|O|psi> / <psi|psi> by full transfer contraction."""
    env = np.ones((1, 1, 1), dtype=complex)  # (bra, mpo, ket)
    for t, w in zip(m.tensors, op.tensors):
        env = _env_push_right(env, t, w)
    val = complex(env[0, 0, 0])
    nrm = abs(overlap(m, m))
    return float(val.real / nrm)


def _env_push_right(env: np.ndarray, site: np.ndarray, w: np.ndarray) -> np.ndarray:
    t = np.tensordot(env, site, axes=([2], [0]))            # (bra, mpo, p, ket')
    t = np.tensordot(t, w, axes=([1, 2], [0, 2]))           # (bra, ket', p', mpo')
    t = np.tensordot(site.conj(), t, axes=([0, 1], [0, 2])) # (bra', ket', mpo')
    return t.transpose(0, 2, 1)


def _env_push_left(env: np.ndarray, site: np.ndarray, w: np.ndarray) -> np.ndarray:
    t = np.tensordot(site, env, axes=([2], [2]))            # (ket_l, p, bra, mpo)
    t = np.tensordot(w, t, axes=([3, 2], [3, 1]))           # (mpo_l, p', ket_l, bra)
    t = np.tensordot(t, site.conj(), axes=([3, 1], [0, 1])) # (mpo_l, ket_l, bra_l)
    return t.transpose(2, 0, 1)


class _LocalProblem:
    """Two-site effective eigenproblem in the mixed-canonical gauge."""

    def __init__(self, left: np.ndarray, w1: np.ndarray, w2: np.ndarray, right: np.ndarray):
        self.left, self.w1, self.w2, self.right = left, w1, w2, right
        self.shape4 = (left.shape[2], 2, 2, right.shape[2])
        self.dim = int(np.prod(self.shape4))

    def apply(self, theta: np.ndarray) -> np.ndarray:
        t = np.tensordot(self.left, theta, axes=([2], [0]))      # (bra, mpo, s1, s2, kr)
        t = np.tensordot(t, self.w1, axes=([1, 2], [0, 2]))      # (bra, s2, kr, s1', m)
        t = np.tensordot(t, self.w2, axes=([4, 1], [0, 2]))      # (bra, kr, s1', s2', mr)
        t = np.tensordot(t, self.right, axes=([1, 4], [2, 1]))   # (bra, s1', s2', bra_r)
        return t

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x.reshape(self.shape4)).reshape(-1)

    def solve_min(self, theta0: np.ndarray, tol: float) -> tuple[float, np.ndarray]:
        if self.dim <= 64:
            mat = np.tensordot(self.left, self.w1, axes=([1], [0]))        # (b,k, s1',s1, m)
            mat = np.tensordot(mat, self.w2, axes=([4], [0]))              # (b,k,s1',s1,s2',s2,mr)
            mat = np.tensordot(mat, self.right, axes=([6], [1]))           # (b,k,s1',s1,s2',s2,b',k')
            mat = mat.transpose(0, 2, 4, 6, 1, 3, 5, 7).reshape(self.dim, self.dim)
            vals, vecs = np.linalg.eigh(mat)
            return float(vals[0]), vecs[:, 0].reshape(self.shape4)
        operator = scipy.sparse.linalg.LinearOperator(
            (self.dim, self.dim), matvec=self.matvec, dtype=complex
        )
        v0 = theta0.reshape(-1)
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(operator, k=1, which="SA", v0=v0, tol=tol)
        except scipy.sparse.linalg.ArpackNoConvergence:
            vals, vecs = scipy.sparse.linalg.eigsh(
                operator, k=1, which="SA", v0=v0, tol=tol, ncv=min(self.dim, 60), maxiter=50 * self.dim
            )
        return float(vals[0]), vecs[:, 0].reshape(self.shape4)


class DmrgResult(NamedTuple):
    value: float
    state: MPS
    converged: bool
    sweep_values: list[float]
    discarded_weight: float


def dmrg_extremal(
    op: MPO,
    which: str = "max",
    chi_max: int = 32,
    sweeps: int = 2,
    init: MPS | None = None,
    local_tol: float = 1e-11,
    conv_tol: float = 1e-12,
) -> DmrgResult:
    """Variational extremal eigenpair by alternating two-site optimizations.

    Maximization runs as minimization of the negated operator.  The per-sweep
    Rayleigh quotient is checked to improve monotonically (up to truncation
    slack); a sweep that fails to improve beyond ``conv_tol`` sets the
    converged flag and stops early.
    """
    if which not in ("max", "min"):
        raise ValueError(f"which must be 'max' or 'min', got {which!r}")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    n = op.n_sites
    if init is None:
        init = random_mps(n, min(chi_max, 4), seed=0)
    if init.n_sites != n:
        raise ValueError("init MPS and operator chain lengths differ")
    sign = -1.0 if which == "max" else 1.0
    work = op.negated() if which == "max" else op

    psi = normalize(canonicalize(init, 1))
    tensors = psi.tensors
    left_envs = [np.ones((1, 1, 1), dtype=complex)] * (n + 1)
    right_envs = [np.ones((1, 1, 1), dtype=complex)] * (n + 2)
    for j in range(n, 1, -1):
        right_envs[j] = _env_push_left(right_envs[j + 1], tensors[j - 1], work.tensors[j - 1])

    def split(theta: np.ndarray, to_right: bool, j: int) -> float:
        """SVD split of the optimized two-site tensor at bond (j, j+1); returns discarded weight."""
        chi_l, _, _, chi_r = theta.shape
        mat = theta.reshape(chi_l * 2, 2 * chi_r)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        keep = max(1, min(chi_max, int(np.sum(s > s[0] * _SVD_FLOOR)) if s[0] > 0 else 1))
        discarded = float(np.sum(s[keep:] ** 2))
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
        s = s / np.linalg.norm(s)
        if to_right:
            tensors[j - 1] = u.reshape(chi_l, 2, keep)
            tensors[j] = (s[:, None] * vh).reshape(keep, 2, chi_r)
        else:
            tensors[j - 1] = (u * s).reshape(chi_l, 2, keep)
            tensors[j] = vh.reshape(keep, 2, chi_r)
        return discarded

    sweep_values: list[float] = []
    discarded_total = 0.0
    converged = False
    prev = None
    for _ in range(sweeps):
        sweep_discard = 0.0
        for j in range(1, n):  # left-to-right, center moves to j+1
            prob = _LocalProblem(left_envs[j], work.tensors[j - 1], work.tensors[j], right_envs[j + 2])
            theta0 = np.tensordot(tensors[j - 1], tensors[j], axes=([2], [0]))
            _, theta = prob.solve_min(theta0, local_tol)
            if not np.all(np.isfinite(theta)):
                raise ArithmeticError(f"local eigensolve produced NaN at bond ({j}, {j + 1})")
            sweep_discard += split(theta, to_right=True, j=j)
            left_envs[j + 1] = _env_push_right(left_envs[j], tensors[j - 1], work.tensors[j - 1])
        for j in range(n - 1, 0, -1):  # right-to-left, center moves to j
            prob = _LocalProblem(left_envs[j], work.tensors[j - 1], work.tensors[j], right_envs[j + 2])
            theta0 = np.tensordot(tensors[j - 1], tensors[j], axes=([2], [0]))
            _, theta = prob.solve_min(theta0, local_tol)
            if not np.all(np.isfinite(theta)):
                raise ArithmeticError(f"local eigensolve produced NaN at bond ({j}, {j + 1})")
            sweep_discard += split(theta, to_right=False, j=j)
            right_envs[j + 1] = _env_push_left(right_envs[j + 2], tensors[j], work.tensors[j])
        discarded_total += sweep_discard
        state = MPS([t.copy() for t in tensors], center=1)
        value = mpo_expectation(state, work)
        sweep_values.append(sign * value)
        if prev is not None:
            slack = 1e-12 * max(1.0, abs(prev)) + 100.0 * sweep_discard * max(1.0, abs(prev))
            if value > prev + slack:
                raise ArithmeticError(
                    f"sweep failed to improve the Rayleigh quotient: {sign * prev} -> {sign * value}"
                )
            if prev - value <= conv_tol * max(1.0, abs(prev)):
                converged = True
                prev = value
                break
        prev = value
    final = normalize(MPS([t.copy() for t in tensors], center=1))
    return DmrgResult(sign * prev, final, converged, sweep_values, discarded_total)


def w_state_mps(n_sites: int) -> MPS:
    """Single-excitation equal superposition as an exact bond-2 MPS."""
    if n_sites < 2:
        raise ValueError("need at least 2 sites")
    scale = 1.0 / np.sqrt(n_sites)
    first = np.zeros((1, 2, 2), dtype=complex)
    first[0, 0, 0] = scale  # no excitation yet
    first[0, 1, 1] = scale  # excitation placed here
    middle = np.zeros((2, 2, 2), dtype=complex)
    middle[0, 0, 0] = 1.0
    middle[0, 1, 1] = 1.0
    middle[1, 0, 1] = 1.0
    last = np.zeros((2, 2, 1), dtype=complex)
    last[0, 1, 0] = 1.0  # excitation lands on the final site
    last[1, 0, 0] = 1.0
    tensors = [first] + [middle.copy() for _ in range(n_sites - 2)] + [last]
    # the scale on the first tensor makes the state exactly normalized
    return MPS(tensors, center=None)


def mps_from_dense(state: DenseState, chi_max: int | None = None) -> MPS:
    """Sequential Schmidt factorization of a dense state."""
    n = state.n_sites
    tensors = []
    remainder = state.amplitudes.reshape(1, -1)
    left = 1
    for j in range(n - 1):
        mat = remainder.reshape(left * 2, -1)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        keep = int(np.sum(s > (s[0] * _SVD_FLOOR if s[0] > 0 else 0))) or 1
        if chi_max is not None:
            keep = min(keep, chi_max)
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
        tensors.append(u.reshape(left, 2, keep))
        remainder = s[:, None] * vh
        left = keep
    tensors.append(remainder.reshape(left, 2, 1))
    out = MPS(tensors, center=n)
    return normalize(out)


def dense_from_mps(m: MPS) -> DenseState:
    """Contract an MPS back to a dense amplitude vector (small chains only)."""
    n = m.n_sites
    if n > DENSE_GUARD:
        raise ValueError(f"n_sites={n} exceeds dense guard {DENSE_GUARD}")
    block = m.tensors[0]
    for t in m.tensors[1:]:
        block = np.tensordot(block, t, axes=([block.ndim - 1], [0]))
    return DenseState(n, block.reshape(-1))
