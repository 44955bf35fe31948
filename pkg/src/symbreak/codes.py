"""CSS code constructors and validation.

Builds bivariate bicycle (BB), hypergraph product (HP), and generalized
bicycle (GB) codes, computes symplectically paired logical operator
bases, and loads named instances from a JSON registry bundled with the
package (overridable via the SYMBREAK_REGISTRY environment variable).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from symbreak import gf2
from symbreak.gf2 import BinMatrix, BinVector, kernel_basis, matvec, rank

__all__ = [
    "CssCode",
    "MonomialSum",
    "make_bb_code",
    "make_hp_code",
    "make_gb_code",
    "compute_logicals",
    "min_distance_exhaustive",
    "load_registry",
    "build_code",
    "registry_labels",
    "CodeConstructionError",
]

DISTANCE_ENUM_LIMIT = 24


class CodeConstructionError(ValueError):
    """Raised when a requested code violates a structural requirement."""


@dataclass(frozen=True)
class MonomialSum:
    """Sum of monomials x^i y^j over the group algebra of Z_l x Z_m.

    Exponents are reduced mod (l, m); duplicate terms are rejected since
    they would cancel over GF(2).
    """

    l: int
    m: int
    terms: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.l < 1 or self.m < 1:
            raise CodeConstructionError("cyclic orders must be positive")
        reduced = tuple((int(i) % self.l, int(j) % self.m) for i, j in self.terms)
        if len(set(reduced)) != len(reduced):
            raise CodeConstructionError("duplicate monomials cancel over GF(2)")
        object.__setattr__(self, "terms", reduced)

    @classmethod
    def univariate(cls, powers, l: int) -> "MonomialSum":
        return cls(l, 1, tuple((int(p), 0) for p in powers))

    def circulant_rows(self) -> list[tuple[int, ...]]:
        """Row supports of the l*m x l*m matrix sum of shift operators."""
        lm = self.l * self.m
        rows = []
        for g in range(lm):
            i, j = divmod(g, self.m)
            rows.append(
                tuple(sorted(((i + s) % self.l) * self.m + (j + t) % self.m for s, t in self.terms))
            )
        return rows


class CssCode:
    """A CSS code: X/Z parity matrices plus paired logical operators.

    Logical bases are computed lazily (first access) and cached; rank
    bookkeeping happens at construction so k is always available.
    """

    def __init__(
        self,
        hx: BinMatrix,
        hz: BinMatrix,
        label: str = "",
        claimed_distance: int | None = None,
        family: str = "custom",
        block_split: int | None = None,
        validate: bool = True,
    ):
        if hx.cols != hz.cols:
            raise CodeConstructionError("hx and hz must act on the same qubits")
        self.hx = hx
        self.hz = hz
        self.n = hx.cols
        self.label = label
        self.claimed_distance = claimed_distance
        self.family = family
        # For [A|B]-structured codes, index of the first right-block column.
        self.block_split = block_split
        if validate and not gf2.commutes(hz, hx):
            raise CodeConstructionError(f"{label or 'code'}: hz @ hx^T != 0")
        self.rank_hx = rank(hx)
        self.rank_hz = rank(hz)
        self.k = self.n - self.rank_hx - self.rank_hz
        self._logical_x: list[BinVector] | None = None
        self._logical_z: list[BinVector] | None = None

    @property
    def logical_x(self) -> list[BinVector]:
        self._ensure_logicals()
        return list(self._logical_x)

    @property
    def logical_z(self) -> list[BinVector]:
        self._ensure_logicals()
        return list(self._logical_z)

    def _ensure_logicals(self):
        if self._logical_x is None:
            lx, lz = compute_logicals(self.hx, self.hz)
            self._logical_x, self._logical_z = lx, lz

    def parity_matrix(self, error_type: str) -> BinMatrix:
        """Matrix whose checks detect the given error type."""
        return self.hz if error_type.upper() == "X" else self.hx

    def opposite_matrix(self, error_type: str) -> BinMatrix:
        """Matrix of same-type checks (the degeneracy source)."""
        return self.hx if error_type.upper() == "X" else self.hz

    def __repr__(self):
        d = self.claimed_distance
        return f"CssCode({self.label or 'unnamed'}: [[{self.n},{self.k}{',' + str(d) if d else ''}]])"


# ── constructors ──────────────────────────────────────────────────────

def make_bb_code(
    a: MonomialSum,
    b: MonomialSum,
    label: str = "",
    claimed_distance: int | None = None,
) -> CssCode:
    """Bivariate bicycle code: hx = [A | B], hz = [B^T | A^T].

    A and B are the l*m x l*m sums of commuting cyclic-shift operators
    given by the two monomial sums.  Each must have exactly three terms,
    yielding weight-6 checks and weight-3 qubit columns in each matrix.
    """
    if (a.l, a.m) != (b.l, b.m):
        raise CodeConstructionError("a and b must share cyclic orders (l, m)")
    if len(a.terms) != 3 or len(b.terms) != 3:
        raise CodeConstructionError("BB construction requires exactly 3 terms per polynomial")
    lm = a.l * a.m
    a_rows = a.circulant_rows()
    b_rows = b.circulant_rows()
    hx = BinMatrix(lm, 2 * lm, [ra + tuple(c + lm for c in rb) for ra, rb in zip(a_rows, b_rows)])
    # Transposed circulants: row g of M^T is column g of M, i.e. shifts negated.
    a_t = MonomialSum(a.l, a.m, tuple((-i % a.l, -j % a.m) for i, j in a.terms))
    b_t = MonomialSum(b.l, b.m, tuple((-i % b.l, -j % b.m) for i, j in b.terms))
    hz = BinMatrix(
        lm,
        2 * lm,
        [rb + tuple(c + lm for c in ra) for rb, ra in zip(b_t.circulant_rows(), a_t.circulant_rows())],
    )
    code = CssCode(hx, hz, label=label, claimed_distance=claimed_distance,
                   family="bb", block_split=lm)
    if code.k == 0:
        raise CodeConstructionError("trivial code: k = 0")
    code.bb_params = (a, b)
    return code


def make_hp_code(
    h1: BinMatrix,
    h2: BinMatrix,
    label: str = "",
    claimed_distance: int | None = None,
) -> CssCode:
    """Hypergraph product of two classical parity-check matrices.

    hx = [h1 (x) I | I (x) h2^T], hz = [I (x) h2 | h1^T (x) I]; the CSS
    commutation condition holds by construction.
    """
    m1, n1 = h1.rows, h1.cols
    m2, n2 = h2.rows, h2.cols
    n_left = n1 * n2
    hx_rows = []
    for r1 in range(m1):
        for c2 in range(n2):
            left = tuple(c1 * n2 + c2 for c1 in h1.row_support[r1])
            right = tuple(n_left + r1 * m2 + r2 for r2 in h2.col_support[c2])
            hx_rows.append(left + right)
    hz_rows = []
    for c1 in range(n1):
        for r2 in range(m2):
            left = tuple(c1 * n2 + c2 for c2 in h2.row_support[r2])
            right = tuple(n_left + r1 * m2 + r2 for r1 in h1.col_support[c1])
            hz_rows.append(left + right)
    hx = BinMatrix(m1 * n2, n_left + m1 * m2, hx_rows)
    hz = BinMatrix(n1 * m2, n_left + m1 * m2, hz_rows)
    return CssCode(hx, hz, label=label, claimed_distance=claimed_distance,
                   family="hp", block_split=n_left)


def make_gb_code(
    a: MonomialSum,
    b: MonomialSum,
    l: int,
    label: str = "",
    claimed_distance: int | None = None,
) -> CssCode:
    """Generalized bicycle code from two univariate circulants of order l."""
    for ms in (a, b):
        if ms.m != 1 or ms.l != l:
            raise CodeConstructionError("GB polynomials must be univariate of order l")
    a_rows = a.circulant_rows()
    b_rows = b.circulant_rows()
    hx = BinMatrix(l, 2 * l, [ra + tuple(c + l for c in rb) for ra, rb in zip(a_rows, b_rows)])
    a_t = MonomialSum(l, 1, tuple((-i % l, 0) for i, _ in a.terms))
    b_t = MonomialSum(l, 1, tuple((-i % l, 0) for i, _ in b.terms))
    hz = BinMatrix(
        l,
        2 * l,
        [rb + tuple(c + l for c in ra) for rb, ra in zip(b_t.circulant_rows(), a_t.circulant_rows())],
    )
    code = CssCode(hx, hz, label=label, claimed_distance=claimed_distance,
                   family="gb", block_split=l)
    if code.k == 0:
        raise CodeConstructionError("trivial code: k = 0")
    return code


# ── logical operators ─────────────────────────────────────────────────

class _Span:
    """Incremental GF(2) span with membership testing (packed rows)."""

    def __init__(self, n: int):
        self.n = n
        self.w = gf2._n_words(n)
        self.rows: list[np.ndarray] = []
        self.pivots: list[int] = []

    def _pack(self, v: BinVector) -> np.ndarray:
        row = np.zeros(self.w, dtype=np.uint64)
        for c in v.support:
            row[c >> 6] |= np.uint64(1) << np.uint64(c & 63)
        return row

    def _reduce(self, row: np.ndarray) -> np.ndarray:
        for piv, r in zip(self.pivots, self.rows):
            if (row[piv >> 6] >> np.uint64(piv & 63)) & np.uint64(1):
                row ^= r
        return row

    def add(self, v: BinVector) -> bool:
        """Insert v; returns True if it enlarged the span."""
        row = self._reduce(self._pack(v))
        if not row.any():
            return False
        word = int(np.flatnonzero(row)[0])
        bit = int(row[word]).bit_length() - 1
        self.pivots.append(word * 64 + bit)
        self.rows.append(row)
        return True

    def contains(self, v: BinVector) -> bool:
        return not self._reduce(self._pack(v)).any()


def compute_logicals(hx: BinMatrix, hz: BinMatrix) -> tuple[list[BinVector], list[BinVector]]:
    """Paired logical operator bases.

    X logicals live in kernel(hz) outside rowspace(hx); Z logicals in
    kernel(hx) outside rowspace(hz).  The returned bases satisfy the
    symplectic pairing logical_z[i] . logical_x[j] = delta_ij.
    """
    n = hx.cols
    k = n - rank(hx) - rank(hz)

    def coset_reps(kernel_of: BinMatrix, modulo: BinMatrix) -> list[BinVector]:
        span = _Span(n)
        for r in range(modulo.rows):
            span.add(modulo.row(r))
        reps = []
        for v in kernel_basis(kernel_of):
            if span.add(v):
                reps.append(v)
        return reps

    lx = coset_reps(hz, hx)
    lz = coset_reps(hx, hz)
    if len(lx) != k or len(lz) != k:
        raise CodeConstructionError("logical basis size mismatch with rank formula")
    if k == 0:
        return [], []
    pairing = np.array([[zi.dot(xj) for xj in lx] for zi in lz], dtype=np.uint8)
    inv = _gf2_inverse(pairing)
    new_lz = []
    for i in range(k):
        acc = BinVector.zeros(n)
        for j in range(k):
            if inv[i, j]:
                acc = acc ^ lz[j]
        new_lz.append(acc)
    return lx, new_lz


def _gf2_inverse(mat: np.ndarray) -> np.ndarray:
    """Inverse of a small dense GF(2) matrix via augmented elimination."""
    k = mat.shape[0]
    work = np.concatenate([mat.copy() % 2, np.eye(k, dtype=np.uint8)], axis=1)
    row = 0
    for col in range(k):
        piv = next((r for r in range(row, k) if work[r, col]), None)
        if piv is None:
            raise CodeConstructionError("symplectic pairing matrix is singular")
        if piv != row:
            work[[row, piv]] = work[[piv, row]]
        for r in range(k):
            if r != row and work[r, col]:
                work[r] ^= work[row]
        row += 1
    return work[:, k:]


def min_distance_exhaustive(code: CssCode, max_n: int = DISTANCE_ENUM_LIMIT) -> int:
    """Exact code distance by exhaustive enumeration of logical cosets.

    Only feasible for tiny codes; max_n is capped at 24.  Larger codes
    should rely on claimed_distance metadata instead.
    """
    if max_n > DISTANCE_ENUM_LIMIT:
        raise ValueError(f"max_n capped at {DISTANCE_ENUM_LIMIT}")
    if code.n > max_n:
        raise ValueError(
            f"n={code.n} exceeds max_n={max_n}; use claimed_distance for large codes"
        )
    if code.k == 0:
        raise ValueError("code has no logical operators")

    def side_min(kernel_of: BinMatrix, modulo: BinMatrix) -> int:
        basis = kernel_basis(kernel_of)
        dim = len(basis)
        if dim > 22:
            raise ValueError("kernel too large to enumerate")
        span = _Span(code.n)
        for r in range(modulo.rows):
            span.add(modulo.row(r))
        best = code.n + 1
        packed = [int(sum(1 << c for c in b.support)) for b in basis]
        cur = 0
        # Gray-code walk over all kernel combinations.
        for idx in range(1, 1 << dim):
            flip = (idx ^ (idx >> 1)) ^ ((idx - 1) ^ ((idx - 1) >> 1))
            cur ^= packed[flip.bit_length() - 1]
            w = cur.bit_count()
            if w < best:
                v = BinVector(code.n, tuple(i for i in range(code.n) if (cur >> i) & 1))
                if not span.contains(v):
                    best = w
        return best

    return min(side_min(code.hz, code.hx), side_min(code.hx, code.hz))


# ── registry ──────────────────────────────────────────────────────────

def _default_registry_path() -> Path:
    env = os.environ.get("SYMBREAK_REGISTRY")
    if env:
        return Path(env)
    return Path(resources.files("symbreak").joinpath("data/registry.json"))


def load_registry(path=None) -> dict:
    p = Path(path) if path is not None else _default_registry_path()
    with open(p) as fh:
        reg = json.load(fh)
    for label, entry in reg.items():
        entry["_base_dir"] = str(p.parent)
    return reg


def registry_labels(registry: dict | None = None) -> list[str]:
    reg = registry if registry is not None else load_registry()
    return sorted(reg.keys())


def build_code(label: str, registry: dict | None = None) -> CssCode:
    """Construct and validate a registry instance.

    Raises CodeConstructionError when the built code does not reproduce
    the registry's declared (n, k).
    """
    reg = registry if registry is not None else load_registry()
    if label not in reg:
        raise KeyError(f"unknown code label {label!r}; known: {', '.join(sorted(reg))}")
    entry = reg[label]
    family = entry["family"]
    claimed = entry.get("claimed_distance")
    if family == "bb":
        a = MonomialSum(entry["l"], entry["m"], tuple(map(tuple, entry["a_terms"])))
        b = MonomialSum(entry["l"], entry["m"], tuple(map(tuple, entry["b_terms"])))
        code = make_bb_code(a, b, label=label, claimed_distance=claimed)
    elif family == "gb":
        l = entry["l"]
        a = MonomialSum.univariate(entry["a_powers"], l)
        b = MonomialSum.univariate(entry["b_powers"], l)
        code = make_gb_code(a, b, l, label=label, claimed_distance=claimed)
    elif family == "hp":
        base = Path(entry["_base_dir"])
        h1 = gf2.read_alist(base / entry["h1_alist_path"])
        h2 = gf2.read_alist(base / entry["h2_alist_path"])
        code = make_hp_code(h1, h2, label=label, claimed_distance=claimed)
    else:
        raise CodeConstructionError(f"unknown code family {family!r}")
    if code.n != entry["n"] or code.k != entry["k"]:
        raise CodeConstructionError(
            f"{label}: built [[{code.n},{code.k}]] but registry declares "
            f"[[{entry['n']},{entry['k']}]]"
        )
    return code
