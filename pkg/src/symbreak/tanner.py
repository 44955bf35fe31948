"""Mutable bipartite decoding graph with check splitting.

A graph starts as one check node per parity-matrix row (carrying that
row's syndrome bit) and one variable node per column.  A split replaces
a live check by two children that partition its neighborhood and whose
syndrome bits XOR to the parent's.  Edges are never created or deleted:
each edge keeps a stable id and is reassigned from parent to child, so
the edge multiset over any original check's descendants always equals
the original neighborhood.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from symbreak.gf2 import BinMatrix, BinVector

__all__ = ["CheckNode", "TannerGraph", "CompiledGraph", "SplitError"]


class SplitError(ValueError):
    """Raised for invalid split requests (re-splits, bad partitions)."""


@dataclass
class CheckNode:
    id: int
    var_neighbors: tuple[int, ...]
    syndrome: int
    split_child: bool = False
    alive: bool = True
    # Original parity row this node descends from, and direct parent id.
    origin_row: int = -1
    parent: int = -1


@dataclass
class CompiledGraph:
    """Flat-array view of the live graph for message passing.

    Edges are grouped contiguously by live check (CSR layout); var_ptr /
    var_edge give, per variable, the indices of its edges within that
    layout.  edge_id maps a layout position back to the graph's stable
    edge id so message state can survive recompilation.
    """

    n_vars: int
    check_ids: np.ndarray      # live check id per compiled check
    check_ptr: np.ndarray      # int64, len = n_checks + 1
    edge_var: np.ndarray       # int32, variable of each edge slot
    edge_id: np.ndarray        # int64, stable edge id of each slot
    edge_check: np.ndarray     # int32, compiled check index of each slot
    syndrome: np.ndarray       # uint8 per compiled check
    var_ptr: np.ndarray        # int64, len = n_vars + 1
    var_edge: np.ndarray       # int64, edge slots grouped by variable
    ids_trivial: bool = False  # True when edge_id == arange(n_edges)

    @property
    def n_checks(self) -> int:
        return len(self.check_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edge_var)


class TannerGraph:
    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.checks: list[CheckNode] = []
        # Stable edge arrays: endpoint variable never changes, owning
        # check is rewritten by splits.
        self._edge_var: list[int] = []
        self._edge_check: list[int] = []
        self._check_edges: list[list[int]] = []   # edge ids per check
        self._n_original = 0
        self._compiled: CompiledGraph | None = None

    # ── construction ──────────────────────────────────────────────

    @classmethod
    def from_parity(cls, h: BinMatrix, syndrome: BinVector) -> "TannerGraph":
        """One check per row carrying that row's syndrome bit."""
        if h.rows != syndrome.n:
            raise ValueError(f"syndrome length {syndrome.n} != row count {h.rows}")
        g = cls(h.cols)
        sset = set(syndrome.support)
        for r, supp in enumerate(h.row_support):
            g._add_check(supp, int(r in sset), origin_row=r)
        g._n_original = len(g.checks)
        return g

    def _add_check(self, neighbors, syndrome_bit: int, origin_row: int = -1,
                   split_child: bool = False, parent: int = -1) -> int:
        cid = len(self.checks)
        neigh = tuple(sorted(set(int(v) for v in neighbors)))
        if neigh and (neigh[0] < 0 or neigh[-1] >= self.n_vars):
            raise ValueError("variable index out of range")
        self.checks.append(CheckNode(cid, neigh, int(syndrome_bit) & 1,
                                     split_child=split_child,
                                     origin_row=origin_row, parent=parent))
        edges = []
        for v in neigh:
            eid = len(self._edge_var)
            self._edge_var.append(v)
            self._edge_check.append(cid)
            edges.append(eid)
        self._check_edges.append(edges)
        return cid

    # ── views ─────────────────────────────────────────────────────

    @property
    def n_original_checks(self) -> int:
        return self._n_original

    def live_checks(self) -> list[CheckNode]:
        return [c for c in self.checks if c.alive]

    def live_check_count(self) -> int:
        return sum(1 for c in self.checks if c.alive)

    def var_adjacency(self, v: int) -> list[tuple[int, int]]:
        """(check id, edge id) pairs currently incident to variable v."""
        return [
            (self._edge_check[e], e)
            for e, var in enumerate(self._edge_var)
            if var == v and self.checks[self._edge_check[e]].alive
        ]

    def edges(self) -> list[tuple[int, int]]:
        """(check id, var id) for every live edge."""
        return [
            (c, v)
            for c, v in zip(self._edge_check, self._edge_var)
            if self.checks[c].alive
        ]

    # ── split operation ───────────────────────────────────────────

    def split_check(self, check: int, part1, s1: int) -> tuple[int, int]:
        """Replace a check by children (part1, s1) and (rest, s ^ s1).

        part1 must be a proper nonempty subset of the check's neighbors;
        split children cannot be split again.  Edge ids move from the
        parent to the owning child, conserving the edge multiset.
        """
        node = self.checks[check]
        if not node.alive:
            raise SplitError(f"check {check} is no longer live")
        if node.split_child:
            raise SplitError(f"check {check} is a split child and cannot be re-split")
        p1 = tuple(sorted(set(int(v) for v in part1)))
        neigh = set(node.var_neighbors)
        if not p1 or not set(p1) < neigh:
            raise SplitError("part1 must be a proper nonempty subset of the check's neighbors")
        p2 = tuple(sorted(neigh - set(p1)))
        s1 = int(s1) & 1
        origin = node.origin_row

        node.alive = False
        c1 = len(self.checks)
        c2 = c1 + 1
        self.checks.append(CheckNode(c1, p1, s1, split_child=True,
                                     origin_row=origin, parent=check))
        self.checks.append(CheckNode(c2, p2, node.syndrome ^ s1, split_child=True,
                                     origin_row=origin, parent=check))
        # Reassign the parent's edges to whichever child owns the endpoint.
        p1set = set(p1)
        e1, e2 = [], []
        for eid in self._check_edges[check]:
            if self._edge_var[eid] in p1set:
                self._edge_check[eid] = c1
                e1.append(eid)
            else:
                self._edge_check[eid] = c2
                e2.append(eid)
        self._check_edges[check] = []
        self._check_edges.append(e1)
        self._check_edges.append(e2)
        self._compiled = None
        return c1, c2

    def anticommutes(self, check: int, x_check_support) -> bool:
        """True iff the check's neighborhood overlaps the support oddly."""
        supp = set(int(v) for v in x_check_support)
        return len(set(self.checks[check].var_neighbors) & supp) % 2 == 1

    # ── syndrome residual ─────────────────────────────────────────

    def effective_syndrome_residual(self, estimate) -> tuple[int, np.ndarray]:
        """Per-live-check mismatch bits and their count d = |s - s_hat|.

        estimate may be a BinVector or a dense 0/1 array of length n_vars.
        """
        est = estimate.to_dense() if isinstance(estimate, BinVector) else np.asarray(estimate, dtype=np.uint8)
        if len(est) != self.n_vars:
            raise ValueError("estimate length mismatch")
        cg = self.compile()
        if cg.n_edges:
            parity = np.bitwise_xor.reduceat(est[cg.edge_var], cg.check_ptr[:-1])
            # reduceat on empty segments (degree-0 checks) copies the next
            # element; mask them to zero parity.
            empty = cg.check_ptr[:-1] == cg.check_ptr[1:]
            parity[empty] = 0
        else:
            parity = np.zeros(cg.n_checks, dtype=np.uint8)
        bits = parity ^ cg.syndrome
        return int(bits.sum()), bits

    # ── compiled view ─────────────────────────────────────────────

    def compile(self) -> CompiledGraph:
        if self._compiled is not None:
            return self._compiled
        live = [c for c in self.checks if c.alive]
        check_ids = np.array([c.id for c in live], dtype=np.int64)
        ptr = [0]
        edge_var: list[int] = []
        edge_id: list[int] = []
        for c in live:
            for eid in self._check_edges[c.id]:
                edge_var.append(self._edge_var[eid])
                edge_id.append(eid)
            ptr.append(len(edge_var))
        ev = np.array(edge_var, dtype=np.int32)
        order = np.argsort(ev, kind="stable") if len(ev) else np.zeros(0, dtype=np.int64)
        var_ptr = np.zeros(self.n_vars + 1, dtype=np.int64)
        if len(ev):
            counts = np.bincount(ev, minlength=self.n_vars)
            var_ptr[1:] = np.cumsum(counts)
        ptr_arr = np.array(ptr, dtype=np.int64)
        slot_check = np.repeat(
            np.arange(len(live), dtype=np.int32), np.diff(ptr_arr)
        ) if len(ev) else np.zeros(0, dtype=np.int32)
        self._compiled = CompiledGraph(
            n_vars=self.n_vars,
            check_ids=check_ids,
            check_ptr=ptr_arr,
            edge_var=ev,
            edge_id=np.array(edge_id, dtype=np.int64),
            edge_check=slot_check,
            syndrome=np.array([c.syndrome for c in live], dtype=np.uint8),
            var_ptr=var_ptr,
            var_edge=order.astype(np.int64),
        )
        return self._compiled

    # ── debug dump ────────────────────────────────────────────────

    def to_dot(self) -> str:
        """DOT-ish dump: checks as boxes, variables as circles."""
        lines = ["graph tanner {"]
        for c in self.live_checks():
            lines.append(f'  c{c.id} [shape=box, label="c{c.id} s={c.syndrome}"];')
        for v in range(self.n_vars):
            lines.append(f"  v{v} [shape=circle];")
        for c, v in self.edges():
            lines.append(f"  c{c} -- v{v};")
        lines.append("}")
        return "\n".join(lines)
