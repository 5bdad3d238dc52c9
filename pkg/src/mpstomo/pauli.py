"""Pauli strings on an open spin-1/2 chain and the dictionary of window-local observables.

Site indices are 1-based throughout.  A "window" is a contiguous block of
``window_width`` sites; the string table enumerates every Pauli product
supported inside at least one window, deduplicated, in a deterministic order
(windows left to right, axes cycled lexicographically I < X < Y < Z within
each window).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

DENSE_GUARD = 14  # largest chain we allow to materialize as a 2^N vector/matrix


class PauliAxis(Enum):
    """Single-site Pauli axis; I is the identity."""

    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"

    def __repr__(self):
        return self.value


_AXIS_ORDER = (PauliAxis.I, PauliAxis.X, PauliAxis.Y, PauliAxis.Z)

_AXIS_MATRICES = {
    PauliAxis.I: np.eye(2, dtype=complex),
    PauliAxis.X: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliAxis.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    PauliAxis.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}


def axis_matrix(axis: PauliAxis) -> np.ndarray:
    """2x2 matrix of a single axis (copy-safe, read-only view)."""
    return _AXIS_MATRICES[axis]


def _coerce_axis(value) -> PauliAxis:
    if isinstance(value, PauliAxis):
        return value
    return PauliAxis(str(value).upper())


@dataclass(frozen=True)
class PauliString:
    """Product of single-site Paulis; identity sites are implicit.

    ``support`` holds (site, axis) pairs sorted by site, axes never I.
    The empty support is the global identity.
    """

    n_sites: int
    support: tuple[tuple[int, PauliAxis], ...]

    @property
    def is_identity(self) -> bool:
        return not self.support

    @property
    def min_site(self) -> int | None:
        return self.support[0][0] if self.support else None

    @property
    def max_site(self) -> int | None:
        return self.support[-1][0] if self.support else None

    @property
    def span(self) -> int:
        """Width of the smallest contiguous block covering the support (0 for identity)."""
        if not self.support:
            return 0
        return self.max_site - self.min_site + 1

    def axis_at(self, site: int) -> PauliAxis:
        for s, axis in self.support:
            if s == site:
                return axis
        return PauliAxis.I

    def label(self) -> str:
        """Dense character label, e.g. 'IXZI' for X2 Z3 on four sites."""
        chars = ["I"] * self.n_sites
        for site, axis in self.support:
            chars[site - 1] = axis.value
        return "".join(chars)

    def __str__(self):
        return self.label()


def canonical_string(assignments: Mapping[int, PauliAxis | str], n_sites: int) -> PauliString:
    """Canonical PauliString from a site -> axis map; I entries are stripped.

    Raises ValueError for sites outside [1, n_sites].
    """
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    support = []
    for site, axis in assignments.items():
        site = int(site)
        if not 1 <= site <= n_sites:
            raise ValueError(f"site {site} outside chain [1, {n_sites}]")
        axis = _coerce_axis(axis)
        if axis is not PauliAxis.I:
            support.append((site, axis))
    support.sort(key=lambda pair: pair[0])
    return PauliString(n_sites=n_sites, support=tuple(support))


def string_from_label(label: str) -> PauliString:
    """Inverse of PauliString.label()."""
    assignments = {i + 1: ch for i, ch in enumerate(label)}
    return canonical_string(assignments, n_sites=len(label))


@dataclass(frozen=True)
class Window:
    """Contiguous block of ``width`` sites starting at ``start`` (1-based)."""

    start: int
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"window width must be >= 1, got {self.width}")
        if self.start < 1:
            raise ValueError(f"window start must be >= 1, got {self.start}")

    @property
    def sites(self) -> range:
        return range(self.start, self.start + self.width)

    @property
    def stop(self) -> int:
        """Last site in the window (inclusive)."""
        return self.start + self.width - 1


def chain_windows(n_sites: int, width: int) -> list[Window]:
    """All contiguous width-``width`` windows on an open chain of ``n_sites``."""
    if not 1 <= width <= n_sites:
        raise ValueError(f"need 1 <= width <= n_sites, got width={width}, n_sites={n_sites}")
    return [Window(start, width) for start in range(1, n_sites - width + 2)]


class StringTable:
    """Ordered, deduplicated dictionary of all window-supported Pauli strings.

    Each non-identity string is anchored at the leftmost window that contains
    its support; per-anchor groupings and the associated local matrices are
    precomputed because every backend (dense application, expectation
    evaluation, operator compilation) consumes them.
    """

    def __init__(self, n_sites: int, window_width: int, strings: Iterable[PauliString]):
        self.n_sites = n_sites
        self.window_width = window_width
        self.strings: tuple[PauliString, ...] = tuple(strings)
        self.index: dict[PauliString, int] = {s: k for k, s in enumerate(self.strings)}
        if len(self.index) != len(self.strings):
            raise ValueError("duplicate strings in table")
        identity = PauliString(n_sites, ())
        if identity not in self.index:
            raise ValueError("table must contain the identity string")
        self.identity_index = self.index[identity]

        # anchor window start per string (identity -> 0 sentinel) and the local
        # axis pattern of each string inside its anchor window
        w = window_width
        anchors = np.zeros(len(self.strings), dtype=np.int64)
        patterns: list[tuple[PauliAxis, ...]] = []
        for k, s in enumerate(self.strings):
            if s.is_identity:
                patterns.append((PauliAxis.I,) * w)
                continue
            if s.span > w:
                raise ValueError(f"string {s} does not fit in a width-{w} window")
            start = max(1, s.max_site - w + 1)
            if start > min(s.min_site, n_sites - w + 1):
                raise ValueError(f"string {s} has no containing window")
            anchors[k] = start
            patterns.append(tuple(s.axis_at(site) for site in range(start, start + w)))
        self.anchors = anchors
        self.patterns = patterns
        self._window_groups: dict[int, tuple[np.ndarray, np.ndarray]] | None = None

    def __len__(self):
        return len(self.strings)

    def __iter__(self):
        return iter(self.strings)

    def window_starts(self) -> list[int]:
        return [win.start for win in chain_windows(self.n_sites, self.window_width)]

    def window_groups(self) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        """Map window start -> (string indices anchored there, stacked local matrices).

        The stacked array has shape (n_anchored, 2^w, 2^w); entry j is the
        dense operator of string ``indices[j]`` on the window's sites.
        """
        if self._window_groups is None:
            groups: dict[int, tuple[np.ndarray, np.ndarray]] = {}
            for start in self.window_starts():
                idx = np.nonzero(self.anchors == start)[0]
                mats = np.stack([pattern_matrix(self.patterns[k]) for k in idx]) \
                    if len(idx) else np.zeros((0, 2 ** self.window_width, 2 ** self.window_width), dtype=complex)
                groups[start] = (idx, mats)
            self._window_groups = groups
        return self._window_groups

    def coefficients(self, values) -> "CoefficientVector":
        return CoefficientVector(self, np.asarray(values, dtype=float))


def enumerate_window_strings(n_sites: int, window_width: int) -> StringTable:
    """Union over all windows of the 4^w local Pauli products, deduplicated.

    Deterministic order: windows left to right; within a window, axes cycle
    lexicographically with I < X < Y < Z (rightmost site fastest).  The
    identity appears exactly once, at index 0.
    """
    windows = chain_windows(n_sites, window_width)
    seen: set[PauliString] = set()
    ordered: list[PauliString] = []
    for win in windows:
        for axes in itertools.product(_AXIS_ORDER, repeat=window_width):
            string = canonical_string(dict(zip(win.sites, axes)), n_sites)
            if string not in seen:
                seen.add(string)
                ordered.append(string)
    return StringTable(n_sites, window_width, ordered)


@lru_cache(maxsize=4096)
def _pattern_matrix_cached(pattern: tuple[PauliAxis, ...]) -> np.ndarray:
    mat = np.ones((1, 1), dtype=complex)
    for axis in pattern:
        mat = np.kron(mat, _AXIS_MATRICES[axis])
    mat.flags.writeable = False
    return mat


def pattern_matrix(pattern: tuple[PauliAxis, ...]) -> np.ndarray:
    """Kronecker product of the axes in ``pattern`` (2^len square matrix)."""
    return _pattern_matrix_cached(tuple(pattern))


def dense_of_string(string: PauliString) -> np.ndarray:
    """Full 2^N x 2^N matrix of a Pauli string (site 1 is the leftmost kron factor).

    Guarded at DENSE_GUARD sites.
    """
    if string.n_sites > DENSE_GUARD:
        raise ValueError(f"n_sites={string.n_sites} exceeds dense guard {DENSE_GUARD}")
    pattern = tuple(string.axis_at(site) for site in range(1, string.n_sites + 1))
    return pattern_matrix(pattern)


class CoefficientVector:
    """Real weights over a string table, representing the operator sum_k a_k P_k."""

    def __init__(self, table: StringTable, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != (len(table),):
            raise ValueError(f"expected {len(table)} coefficients, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("coefficients must be finite")
        self.table = table
        self.values = values

    def copy(self) -> "CoefficientVector":
        return CoefficientVector(self.table, self.values.copy())

    @property
    def n_sites(self) -> int:
        return self.table.n_sites

    def __len__(self):
        return len(self.values)


def zero_coefficients(table: StringTable) -> CoefficientVector:
    return CoefficientVector(table, np.zeros(len(table)))
