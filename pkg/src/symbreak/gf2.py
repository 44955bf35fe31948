"""Sparse binary linear algebra over GF(2).

``BinMatrix`` / ``BinVector`` keep a sparse adjacency view (sorted index
supports) that graph construction and message passing consume directly.
Elimination-style operations (rank, kernels, constrained solves) run on a
bit-packed uint64 representation internally, which is dense-ish but fast
for the matrix sizes quantum LDPC codes need (n up to a few thousand).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BinVector",
    "BinMatrix",
    "matvec",
    "rank",
    "kernel_basis",
    "solve_constrained",
    "Gf2Solver",
    "commutes",
    "read_alist",
    "write_alist",
]


_ZERO_VECTORS: dict[int, "BinVector"] = {}


@dataclass(frozen=True)
class BinVector:
    """Binary vector stored as a sorted, duplicate-free support list."""

    n: int
    support: tuple[int, ...]

    def __post_init__(self):
        supp = tuple(sorted(set(int(i) for i in self.support)))
        if supp and (supp[0] < 0 or supp[-1] >= self.n):
            raise ValueError(f"support index out of range for length {self.n}")
        object.__setattr__(self, "support", supp)

    @classmethod
    def zeros(cls, n: int) -> "BinVector":
        cached = _ZERO_VECTORS.get(n)
        if cached is None:
            cached = _ZERO_VECTORS[n] = cls(n, ())
        return cached

    @classmethod
    def from_dense(cls, bits) -> "BinVector":
        arr = np.asarray(bits)
        return cls(len(arr), tuple(int(i) for i in np.flatnonzero(arr % 2)))

    @classmethod
    def from_sorted(cls, n: int, support) -> "BinVector":
        """Trusted constructor: support must already be sorted, unique,
        and in range (e.g. np.flatnonzero output)."""
        if not len(support):
            return cls.zeros(n)
        v = object.__new__(cls)
        object.__setattr__(v, "n", n)
        object.__setattr__(v, "support", tuple(map(int, support)))
        return v

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.uint8)
        if self.support:
            out[list(self.support)] = 1
        return out

    @property
    def weight(self) -> int:
        return len(self.support)

    def __xor__(self, other: "BinVector") -> "BinVector":
        if self.n != other.n:
            raise ValueError("length mismatch in xor")
        return BinVector(self.n, tuple(set(self.support) ^ set(other.support)))

    def dot(self, other: "BinVector") -> int:
        """Inner product mod 2 (overlap parity)."""
        if self.n != other.n:
            raise ValueError("length mismatch in dot")
        return len(set(self.support) & set(other.support)) % 2

    def __bool__(self) -> bool:
        return bool(self.support)


class BinMatrix:
    """Sparse binary matrix with consistent row and column adjacency.

    ``row_support[r]`` is the sorted tuple of column indices with a 1 in
    row ``r``; ``col_support[c]`` the mirror view.  Instances are immutable
    after construction and safe to share across threads.
    """

    def __init__(self, rows: int, cols: int, row_support: Iterable[Iterable[int]]):
        self.rows = int(rows)
        self.cols = int(cols)
        rs = []
        cs: list[list[int]] = [[] for _ in range(self.cols)]
        row_list = list(row_support)
        if len(row_list) != self.rows:
            raise ValueError(f"expected {self.rows} rows, got {len(row_list)}")
        for r, support in enumerate(row_list):
            supp = tuple(sorted(set(int(c) for c in support)))
            if supp and (supp[0] < 0 or supp[-1] >= self.cols):
                raise ValueError(f"row {r} has column index out of range")
            rs.append(supp)
            for c in supp:
                cs[c].append(r)
        self.row_support: tuple[tuple[int, ...], ...] = tuple(rs)
        self.col_support: tuple[tuple[int, ...], ...] = tuple(tuple(c) for c in cs)
        self._packed: np.ndarray | None = None

    @classmethod
    def from_dense(cls, arr) -> "BinMatrix":
        a = np.asarray(arr) % 2
        if a.ndim != 2:
            raise ValueError("dense input must be 2-d")
        return cls(a.shape[0], a.shape[1], [np.flatnonzero(row) for row in a])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BinMatrix":
        return cls(rows, cols, [() for _ in range(rows)])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for r, supp in enumerate(self.row_support):
            if supp:
                out[r, list(supp)] = 1
        return out

    def transpose(self) -> "BinMatrix":
        return BinMatrix(self.cols, self.rows, self.col_support)

    def row(self, r: int) -> BinVector:
        return BinVector(self.cols, self.row_support[r])

    @property
    def nnz(self) -> int:
        return sum(len(s) for s in self.row_support)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BinMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.row_support == other.row_support
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.row_support))

    def __repr__(self):
        return f"BinMatrix({self.rows}x{self.cols}, nnz={self.nnz})"

    # Bit-packed view for elimination paths.  Cached; treated as read-only.
    def packed(self) -> np.ndarray:
        if self._packed is None:
            self._packed = _pack_rows(self.row_support, self.rows, self.cols)
        return self._packed


# ── bit-packed helpers ────────────────────────────────────────────────

def _n_words(cols: int) -> int:
    return max(1, (cols + 63) // 64)


def _pack_rows(row_support, rows: int, cols: int) -> np.ndarray:
    w = _n_words(cols)
    packed = np.zeros((rows, w), dtype=np.uint64)
    for r, supp in enumerate(row_support):
        for c in supp:
            packed[r, c >> 6] |= np.uint64(1) << np.uint64(c & 63)
    return packed


def _unpack_row(packed_row: np.ndarray, cols: int) -> tuple[int, ...]:
    bits = np.unpackbits(packed_row.view(np.uint8), bitorder="little")
    return tuple(int(i) for i in np.flatnonzero(bits[:cols]))


def _get_bit(packed: np.ndarray, rows_idx, col: int):
    word, bit = col >> 6, np.uint64(col & 63)
    return (packed[rows_idx, word] >> bit) & np.uint64(1)


def _rref(packed: np.ndarray, cols: int, col_order: Sequence[int] | None = None):
    """In-place reduced row echelon form over GF(2).

    Pivot columns are chosen greedily scanning ``col_order`` (default:
    natural order), always taking the lowest-index candidate row.  Returns
    (pivot_cols, pivot_rows), aligned pairwise.
    """
    m = packed.shape[0]
    order = range(cols) if col_order is None else col_order
    pivot_cols: list[int] = []
    pivot_rows: list[int] = []
    next_row = 0
    for col in order:
        if next_row >= m:
            break
        colbits = _get_bit(packed, slice(None), col)
        colbits[:next_row] = 0
        cand = np.flatnonzero(colbits)
        if cand.size == 0:
            continue
        piv = int(cand[0])
        if piv != next_row:
            packed[[next_row, piv]] = packed[[piv, next_row]]
        # Eliminate everywhere else in this column (full RREF).
        colbits = _get_bit(packed, slice(None), col)
        colbits[next_row] = 0
        hits = np.flatnonzero(colbits)
        if hits.size:
            packed[hits] ^= packed[next_row]
        pivot_cols.append(int(col))
        pivot_rows.append(next_row)
        next_row += 1
    return pivot_cols, pivot_rows


# ── public operations ─────────────────────────────────────────────────

def matvec(m: BinMatrix, v: BinVector) -> BinVector:
    """Matrix-vector product over GF(2): result bit r is the parity of
    the overlap between row r's support and v's support."""
    if m.cols != v.n:
        raise ValueError(f"dimension mismatch: matrix has {m.cols} cols, vector length {v.n}")
    acc = np.zeros(m.rows, dtype=np.uint8)
    for c in v.support:
        acc[list(m.col_support[c])] ^= 1
    return BinVector.from_dense(acc)


def rank(m: BinMatrix) -> int:
    """GF(2) rank via row elimination."""
    if m.rows == 0 or m.cols == 0:
        return 0
    work = m.packed().copy()
    pivot_cols, _ = _rref(work, m.cols)
    return len(pivot_cols)


def kernel_basis(m: BinMatrix) -> list[BinVector]:
    """Basis of the right null space: vectors v with matvec(m, v) = 0.

    Size is always cols - rank(m).  Basis vectors have a 1 on their free
    column and the matching back-substituted bits on pivot columns.
    """
    if m.cols == 0:
        return []
    work = m.packed().copy()
    pivot_cols, pivot_rows = _rref(work, m.cols)
    pivot_set = set(pivot_cols)
    basis = []
    for free in range(m.cols):
        if free in pivot_set:
            continue
        supp = [free]
        freebit = _get_bit(work, pivot_rows, free) if pivot_rows else np.array([], dtype=np.uint64)
        for pc, bit in zip(pivot_cols, freebit):
            if bit:
                supp.append(pc)
        basis.append(BinVector(m.cols, tuple(supp)))
    return basis


def solve_constrained(
    m: BinMatrix, s: BinVector, pivot_order: Sequence[int] | None = None
) -> BinVector | None:
    """Solve matvec(m, e) = s with all non-pivot columns forced to zero.

    Elimination picks pivot columns greedily in ``pivot_order`` (a
    permutation of all columns; natural order by default).  Returns None
    when s lies outside the column space.
    """
    if m.rows != s.n:
        raise ValueError("syndrome length must equal row count")
    if pivot_order is not None:
        if sorted(pivot_order) != list(range(m.cols)):
            raise ValueError("pivot_order must be a permutation of all columns")
    solver = Gf2Solver(m, pivot_order)
    return solver.solve(s)


class Gf2Solver:
    """Reusable constrained solver: one elimination, many right-hand sides.

    Precomputes T (row transform) with T @ m column-reduced in the given
    pivot order; each solve is then a cheap masked dot against T.
    """

    def __init__(self, m: BinMatrix, pivot_order: Sequence[int] | None = None):
        self.m = m
        rows, cols = m.rows, m.cols
        wm = _n_words(cols)
        wt = _n_words(max(rows, 1))
        # Augment [A | I] and reduce; right block accumulates the transform.
        work = np.zeros((rows, wm + wt), dtype=np.uint64)
        work[:, :wm] = m.packed()
        for r in range(rows):
            work[r, wm + (r >> 6)] |= np.uint64(1) << np.uint64(r & 63)
        self._aug = work
        self._wm = wm
        self.pivot_cols, self.pivot_rows = _rref_left_block(work, cols, pivot_order)

    def solve(self, s: BinVector) -> BinVector | None:
        """Greedy-pivot solution, or None if s is outside the column space."""
        if s.n != self.m.rows:
            raise ValueError("syndrome length must equal row count")
        sb = np.zeros(self._aug.shape[1] - self._wm, dtype=np.uint64)
        for i in s.support:
            sb[i >> 6] |= np.uint64(1) << np.uint64(i & 63)
        tr = self._aug[:, self._wm:]
        # Reduced rhs bit per row: parity of (T row & s).
        prods = np.bitwise_and(tr, sb[None, :])
        bits = _popcount_rows(prods) & 1
        nonpivot_rows = np.ones(self.m.rows, dtype=bool)
        if self.pivot_rows:
            nonpivot_rows[self.pivot_rows] = False
        if np.any(bits[nonpivot_rows]):
            return None
        supp = [pc for pc, pr in zip(self.pivot_cols, self.pivot_rows) if bits[pr]]
        return BinVector(self.m.cols, tuple(supp))

    def reduced_column(self, col: int) -> np.ndarray:
        """Bits of the reduced matrix in column ``col``, one per pivot row."""
        if not self.pivot_rows:
            return np.zeros(0, dtype=np.uint8)
        return np.asarray(
            _get_bit(self._aug[:, : self._wm], self.pivot_rows, col), dtype=np.uint8
        )

    def reduced_rhs_bits(self, s: BinVector) -> tuple[np.ndarray, bool]:
        """(bits on pivot rows, feasible flag) for right-hand side s."""
        sb = np.zeros(self._aug.shape[1] - self._wm, dtype=np.uint64)
        for i in s.support:
            sb[i >> 6] |= np.uint64(1) << np.uint64(i & 63)
        tr = self._aug[:, self._wm:]
        prods = np.bitwise_and(tr, sb[None, :])
        bits = _popcount_rows(prods) & 1
        nonpivot_rows = np.ones(self.m.rows, dtype=bool)
        if self.pivot_rows:
            nonpivot_rows[self.pivot_rows] = False
        feasible = not np.any(bits[nonpivot_rows])
        piv_bits = bits[self.pivot_rows] if self.pivot_rows else np.zeros(0, dtype=np.uint8)
        return piv_bits.astype(np.uint8), feasible


def _rref_left_block(work: np.ndarray, cols: int, col_order: Sequence[int] | None):
    """RREF restricted to pivots within the first ``cols`` bit-columns.

    Row operations act on the full augmented width.
    """
    m = work.shape[0]
    order = range(cols) if col_order is None else col_order
    pivot_cols: list[int] = []
    pivot_rows: list[int] = []
    next_row = 0
    for col in order:
        if next_row >= m:
            break
        colbits = _get_bit(work, slice(None), col)
        colbits[:next_row] = 0
        cand = np.flatnonzero(colbits)
        if cand.size == 0:
            continue
        piv = int(cand[0])
        if piv != next_row:
            work[[next_row, piv]] = work[[piv, next_row]]
        colbits = _get_bit(work, slice(None), col)
        colbits[next_row] = 0
        hits = np.flatnonzero(colbits)
        if hits.size:
            work[hits] ^= work[next_row]
        pivot_cols.append(int(col))
        pivot_rows.append(next_row)
        next_row += 1
    return pivot_cols, pivot_rows


_POPCOUNT_TABLE = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint64)


def _popcount_rows(words: np.ndarray) -> np.ndarray:
    """Per-row popcount of a 2-d uint64 array."""
    as_bytes = words.view(np.uint8).reshape(words.shape[0], -1)
    return _POPCOUNT_TABLE[as_bytes].sum(axis=1).astype(np.int64)


def commutes(a: BinMatrix, b: BinMatrix) -> bool:
    """True iff a @ b.T = 0 mod 2, i.e. every row pair overlaps evenly."""
    if a.cols != b.cols:
        raise ValueError("column count mismatch")
    for supp in a.row_support:
        hits: dict[int, int] = {}
        for c in supp:
            for r in b.col_support[c]:
                hits[r] = hits.get(r, 0) + 1
        if any(v % 2 for v in hits.values()):
            return False
    return True


# ── alist text format ─────────────────────────────────────────────────
#
# Layout (MacKay-style, zero-padded):
#   line 1: cols rows
#   line 2: max_col_degree max_row_degree
#   line 3: per-column degrees
#   line 4: per-row degrees
#   then one line per column (1-based row indices, 0-padded),
#   then one line per row (1-based column indices, 0-padded).

def write_alist(m: BinMatrix, path) -> None:
    col_degs = [len(s) for s in m.col_support]
    row_degs = [len(s) for s in m.row_support]
    max_col = max(col_degs, default=0)
    max_row = max(row_degs, default=0)
    lines = [
        f"{m.cols} {m.rows}",
        f"{max_col} {max_row}",
        " ".join(map(str, col_degs)),
        " ".join(map(str, row_degs)),
    ]
    for supp in m.col_support:
        entries = [str(r + 1) for r in supp] + ["0"] * (max_col - len(supp))
        lines.append(" ".join(entries))
    for supp in m.row_support:
        entries = [str(c + 1) for c in supp] + ["0"] * (max_row - len(supp))
        lines.append(" ".join(entries))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_alist(path) -> BinMatrix:
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(tokens)

    def take(k: int) -> list[int]:
        return [int(next(it)) for _ in range(k)]

    cols, rows = take(2)
    _max_col, _max_row = take(2)
    col_degs = take(cols)
    row_degs = take(rows)
    col_support = []
    for c in range(cols):
        # Padded files carry max_col entries per line; unpadded carry deg.
        entries = take(_max_col) if _max_col else []
        supp = [e - 1 for e in entries if e > 0]
        if len(supp) != col_degs[c]:
            raise ValueError(f"alist column {c}: degree mismatch")
        col_support.append(supp)
    row_support = []
    for r in range(rows):
        entries = take(_max_row) if _max_row else []
        supp = [e - 1 for e in entries if e > 0]
        if len(supp) != row_degs[r]:
            raise ValueError(f"alist row {r}: degree mismatch")
        row_support.append(supp)
    m = BinMatrix(rows, cols, row_support)
    if list(map(list, m.col_support)) != [sorted(s) for s in col_support]:
        raise ValueError("alist row/column adjacency inconsistent")
    return m
