"""Ordered-statistics post-processing for failed BP rounds.

Keeps the reliable BP hard decisions and revises the least reliable
positions to match the syndrome: columns are eliminated in ascending
reliability |L(q)| (ties by qubit index), so the revision set -- the
pivot columns -- collects the least trusted qubits first.  Non-pivot
positions stay at their hard decisions; pivots are solved.

osd_cs additionally sweeps single and paired flips over the least
reliable non-pivot positions and keeps the candidate with the smallest
soft weight (sum of |L(q)| over positions that disagree with the BP
decision), replacing the osd0 answer only when strictly better.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from symbreak.gf2 import BinMatrix, BinVector, Gf2Solver, matvec

__all__ = ["OsdConfig", "OsdInfeasibleError", "osd_postprocess", "soft_weight"]


class OsdInfeasibleError(ValueError):
    """Syndrome outside the column space: impossible for real CSS error
    samples, so this signals a harness bug rather than a decode failure."""


@dataclass
class OsdConfig:
    mode: str = "osd0"          # osd0 | osd_cs
    sweep_depth: int = 60

    def __post_init__(self):
        if self.mode not in ("osd0", "osd_cs"):
            raise ValueError(f"unknown OSD mode {self.mode!r}")
        if self.sweep_depth < 1:
            raise ValueError("sweep_depth must be >= 1")


def soft_weight(estimate: np.ndarray, llrs: np.ndarray) -> float:
    """Sum of |L(q)| over positions whose bit disagrees with the LLR sign."""
    hard = llrs < 0
    return float(np.abs(llrs)[estimate.astype(bool) != hard].sum())


def osd_postprocess(
    h: BinMatrix,
    syndrome: BinVector,
    llrs,
    cfg: OsdConfig | None = None,
) -> BinVector:
    """Syndrome-consistent estimate built around the BP hard decisions.

    Always returns an estimate e with matvec(h, e) = syndrome; raises
    OsdInfeasibleError when no such e exists.
    """
    cfg = cfg or OsdConfig()
    llrs = np.asarray(llrs, dtype=np.float64)
    if h.cols != len(llrs):
        raise ValueError("llr length must equal column count")
    if h.rows != syndrome.n:
        raise ValueError("syndrome length must equal row count")

    hard = (llrs < 0).astype(np.uint8)
    hard_vec = BinVector.from_dense(hard)
    if matvec(h, hard_vec).support == syndrome.support:
        return hard_vec

    # Ascending reliability, ties broken by qubit index.
    order = np.lexsort((np.arange(h.cols), np.abs(llrs)))
    solver = Gf2Solver(h, pivot_order=order.tolist())
    pivot_cols = np.array(solver.pivot_cols, dtype=np.int64)
    pivot_set = set(solver.pivot_cols)

    # Non-pivot positions keep their hard decisions.
    e_t = hard.copy()
    if len(pivot_cols):
        e_t[pivot_cols] = 0
    target = syndrome ^ matvec(h, BinVector.from_dense(e_t))
    piv_bits, feasible = solver.reduced_rhs_bits(target)
    if not feasible:
        raise OsdInfeasibleError("syndrome lies outside the column space of h")

    def assemble(tbits: np.ndarray, pbits: np.ndarray) -> BinVector:
        out = tbits.copy()
        if len(pivot_cols):
            out[pivot_cols] = pbits
        return BinVector.from_dense(out)

    e0 = assemble(e_t, piv_bits)
    if cfg.mode == "osd0":
        return e0

    # Combination sweep over the least reliable non-pivot positions.
    sweep = [int(c) for c in order if int(c) not in pivot_set][: cfg.sweep_depth]
    if not sweep:
        return e0
    abs_l = np.abs(llrs)
    piv_abs = abs_l[pivot_cols] if len(pivot_cols) else np.zeros(0)
    hard_piv = hard[pivot_cols] if len(pivot_cols) else np.zeros(0, dtype=np.uint8)

    def pivot_cost(pbits: np.ndarray) -> float:
        return float(piv_abs[pbits != hard_piv].sum())

    best_vec = e0
    best_score = pivot_cost(piv_bits)

    cols = np.stack([solver.reduced_column(t) for t in sweep])  # (depth, n_piv)
    # Singles, then pairs, in deterministic sweep order.
    flip_sets: list[tuple[int, ...]] = [(i,) for i in range(len(sweep))]
    flip_sets += [(i, j) for i in range(len(sweep)) for j in range(i + 1, len(sweep))]
    for fs in flip_sets:
        pbits = piv_bits.copy()
        cost = 0.0
        for i in fs:
            pbits ^= cols[i]
            cost += abs_l[sweep[i]]
        score = cost + pivot_cost(pbits)
        if score < best_score - 1e-12:
            tbits = e_t.copy()
            for i in fs:
                tbits[sweep[i]] ^= 1
            best_vec = assemble(tbits, pbits)
            best_score = score
    return best_vec
