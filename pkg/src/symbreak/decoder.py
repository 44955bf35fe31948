"""Split-based BP decoder: BP rounds interleaved with targeted check splits.

The loop alternates three steps until the estimate reproduces the
syndrome or progress stalls:

1. run a short burst of BP iterations on the live graph;
2. terminate if the mismatch count d = |s - s_hat| hit zero, or if the
   stagnation counter K (incremented when d failed to drop, decremented
   otherwise) reached its threshold;
3. otherwise pick the same-type check with the lowest mean qubit
   reliability -- the likeliest degeneracy source -- choose an
   opposite-type check overlapping it evenly, and split that check in
   two so each child overlaps the culprit oddly, assigning the child
   syndromes by BP hard decisions or neighboring-syndrome evidence.

Splitting never removes nodes or edges, and split children are never
re-split, so the check count stays within twice the original.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from symbreak.bp import BpConfig, BpState, base_view, run_bp_arrays
from symbreak.codes import CssCode
from symbreak.gf2 import BinMatrix, BinVector, matvec
from symbreak.osd import OsdConfig, osd_postprocess
from symbreak.tanner import CompiledGraph, TannerGraph

__all__ = [
    "SymBreakConfig",
    "SplitRecord",
    "DecodeOutcome",
    "StagnationMonitor",
    "check_reliability",
    "live_check_reliability",
    "select_split_target",
    "plan_split_bp_guided",
    "plan_split_syndrome_guided",
    "plan_split_bb_layered",
    "bb_layer_split_valid",
    "decode",
]

logger = logging.getLogger(__name__)


@dataclass
class SymBreakConfig:
    m: int = 10                      # BP iterations per round
    k_max: int = 3                   # stagnation threshold
    max_splits: int = 50
    split_strategy: str = "auto"     # auto | bp_guided | syndrome_guided | bb_layered
    bp: BpConfig = field(default_factory=BpConfig)
    reset_messages_on_split: bool = True
    osd_rescue: bool = False         # ablation-only hybrid: OSD on the final LLRs

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.max_splits < 0:
            raise ValueError("max_splits must be >= 0")
        if self.split_strategy not in ("auto", "bp_guided", "syndrome_guided", "bb_layered"):
            raise ValueError(f"unknown split strategy {self.split_strategy!r}")


@dataclass
class SplitRecord:
    round: int
    gx_row: int          # opposite-type row whose degeneracy is targeted
    z_check: int         # live check id that was split
    part1: tuple[int, ...]
    s1: int
    d_before: int
    d_after: int


@dataclass
class DecodeOutcome:
    estimate: BinVector
    converged: bool
    bp_iterations_total: int
    splits: list[SplitRecord]
    wall_time: float
    stop_reason: str                 # syndrome_matched | k_threshold | split_budget
    d_trajectory: list[int] = field(default_factory=list)

    def to_trace(self) -> dict:
        """JSON-serializable split/progress trace."""
        return {
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "bp_iterations_total": self.bp_iterations_total,
            "wall_time": self.wall_time,
            "d_trajectory": self.d_trajectory,
            "estimate_support": list(self.estimate.support),
            "splits": [
                {
                    "round": s.round,
                    "gx_row": s.gx_row,
                    "z_check": s.z_check,
                    "part1": list(s.part1),
                    "s1": s.s1,
                    "d_before": s.d_before,
                    "d_after": s.d_after,
                }
                for s in self.splits
            ],
        }


class StagnationMonitor:
    """Tracks the mismatch count d across rounds with a bounded counter.

    K increments whenever d stayed equal or increased since the previous
    round and decrements (floored at zero) when d decreased; hitting
    k_max signals that further splits are unlikely to help.
    """

    def __init__(self, k_max: int):
        self.k_max = k_max
        self.k = 0
        self.prev_d: int | None = None

    def observe(self, d: int) -> str:
        """Feed this round's d; returns converged | stop | continue."""
        if d == 0:
            return "converged"
        if self.prev_d is not None:
            if d >= self.prev_d:
                self.k += 1
            elif self.k > 0:
                self.k -= 1
        self.prev_d = d
        if self.k >= self.k_max:
            return "stop"
        return "continue"


# ── reliability metrics ───────────────────────────────────────────────

def check_reliability(state: BpState, opposite_h: BinMatrix) -> np.ndarray:
    """Mean qubit reliability |L(q)| per row of the opposite parity matrix.

    Rows with empty support get +inf so they are never selected.
    """
    rel = np.abs(state.llr)
    out = np.empty(opposite_h.rows, dtype=np.float64)
    for r, supp in enumerate(opposite_h.row_support):
        out[r] = rel[list(supp)].mean() if supp else np.inf
    return out


def live_check_reliability(state: BpState, g: TannerGraph) -> dict[int, float]:
    """Mean qubit reliability per live check id."""
    rel = np.abs(state.llr)
    out = {}
    for c in g.live_checks():
        out[c.id] = float(rel[list(c.var_neighbors)].mean()) if c.var_neighbors else np.inf
    return out


def select_split_target(
    reliabilities: np.ndarray,
    g: TannerGraph,
    opposite_h: BinMatrix,
    state: BpState,
) -> tuple[int, int] | None:
    """Pick (opposite row, live check to split).

    Opposite rows are tried in ascending reliability (ties: lowest row);
    for each, eligible split targets are live non-child checks with an
    even overlap >= 2, the least reliable one winning (ties: lowest id).
    Returns None when every opposite row is exhausted.
    """
    cg = g.compile()
    live_rel: dict[int, float] | None = None
    for gx_row in np.lexsort((np.arange(len(reliabilities)), reliabilities)):
        supp = opposite_h.row_support[int(gx_row)]
        if not supp:
            continue
        # Count overlap with each live check via the compiled adjacency.
        slots = np.concatenate([
            cg.var_edge[cg.var_ptr[q]:cg.var_ptr[q + 1]] for q in supp
        ]) if supp else np.zeros(0, dtype=np.int64)
        if not len(slots):
            continue
        counts = np.bincount(cg.edge_check[slots], minlength=cg.n_checks)
        cand_idx = np.flatnonzero((counts >= 2) & (counts % 2 == 0))
        cand_ids = [
            int(cg.check_ids[i]) for i in cand_idx
            if not g.checks[int(cg.check_ids[i])].split_child
        ]
        if not cand_ids:
            continue
        if live_rel is None:
            live_rel = live_check_reliability(state, g)
        best = min(cand_ids, key=lambda cid: (live_rel[cid], cid))
        return int(gx_row), best
    return None


# ── split planning ────────────────────────────────────────────────────

def _overlap_partition(node_neighbors, gx_support, key) -> list[int]:
    """part1 with odd overlap against gx_support, filled to half degree.

    Takes k (k odd) or k-1 (k even) overlap qubits preferred by ``key``,
    then non-overlap qubits by the same preference until part1 reaches
    floor(deg / 2).  Overlap size 2k must be even and >= 2.
    """
    gx = set(gx_support)
    overlap = [q for q in node_neighbors if q in gx]
    if len(overlap) < 2 or len(overlap) % 2 != 0:
        raise ValueError(f"overlap must be even and >= 2, got {len(overlap)}")
    k = len(overlap) // 2
    take = k if k % 2 == 1 else k - 1
    part1 = sorted(overlap, key=key)[:take]
    rest = sorted((q for q in node_neighbors if q not in gx), key=key)
    target = len(node_neighbors) // 2
    part1 += rest[: max(0, target - take)]
    return part1


def plan_split_bp_guided(
    g: TannerGraph, z_check: int, gx_support, state: BpState
) -> tuple[set[int], int]:
    """Reliability-ranked partition; s1 from the hard decisions of part1.

    The most reliable overlap and filler qubits go to part1, whose
    syndrome is then trusted to the current BP estimates.
    """
    node = g.checks[z_check]
    rel = np.abs(state.llr)
    part1 = _overlap_partition(node.var_neighbors, gx_support, key=lambda q: (-rel[q], q))
    s1 = 0
    for q in part1:
        if state.llr[q] < 0:
            s1 ^= 1
    return set(part1), s1


def _side_checks_all_zero(g: TannerGraph, z_check: int, side) -> bool:
    """True iff every live check (other than z_check) touching the side
    carries syndrome 0."""
    side_set = set(side)
    for c in g.live_checks():
        if c.id == z_check:
            continue
        if c.syndrome and side_set & set(c.var_neighbors):
            return False
    return True


def plan_split_syndrome_guided(
    g: TannerGraph, z_check: int, gx_support, state: BpState | None = None
) -> tuple[set[int], int]:
    """Index-balanced partition; s1 = 0 for a side whose neighboring
    checks are all silent.

    If neither side is silent the plan falls back to the BP-guided
    approach (state required in that case).
    """
    node = g.checks[z_check]
    part1 = _overlap_partition(node.var_neighbors, gx_support, key=lambda q: q)
    part2 = [q for q in node.var_neighbors if q not in set(part1)]
    if _side_checks_all_zero(g, z_check, part1):
        return set(part1), 0
    if _side_checks_all_zero(g, z_check, part2):
        # Assign the silent side syndrome 0: s2 = 0, so s1 carries it all.
        return set(part1), node.syndrome
    if state is None:
        raise ValueError("both sides touch nonzero syndromes; BP state required for fallback")
    return plan_split_bp_guided(g, z_check, gx_support, state)


def plan_split_bb_layered(
    g: TannerGraph, z_check: int, code: CssCode, state: BpState | None = None
) -> tuple[set[int], int]:
    """Layer partition for BB codes: left-block qubits vs right-block.

    The check must have three neighbors in each column block.  s1 uses
    the silent-side rule, falling back to part1's BP hard decisions.
    """
    if code.family != "bb":
        raise ValueError("bb_layered split requires a BB code")
    boundary = code.block_split
    node = g.checks[z_check]
    left = [q for q in node.var_neighbors if q < boundary]
    right = [q for q in node.var_neighbors if q >= boundary]
    if len(left) != 3 or len(right) != 3:
        raise ValueError(
            f"check {z_check} has {len(left)}+{len(right)} block neighbors; expected 3+3"
        )
    if _side_checks_all_zero(g, z_check, left):
        return set(left), 0
    if _side_checks_all_zero(g, z_check, right):
        return set(left), node.syndrome
    if state is None:
        raise ValueError("both sides touch nonzero syndromes; BP state required for fallback")
    s1 = 0
    for q in left:
        if state.llr[q] < 0:
            s1 ^= 1
    return set(left), s1


def bb_layer_split_valid(code: CssCode) -> bool:
    """No 4-cycles inside either column-block layer (girth >= 6 there).

    Checks that no two parity rows (of either type) share two or more
    qubits within the same block.  This is exactly the condition for a
    block-layer split to overlap every adjacent opposite-type check
    oddly, and is cached on the code object.
    """
    cached = getattr(code, "_bb_layering_valid", None)
    if cached is not None:
        return cached
    ok = True
    if code.family != "bb":
        ok = False
    else:
        boundary = code.block_split
        rows = [("x", i, s) for i, s in enumerate(code.hx.row_support)]
        rows += [("z", i, s) for i, s in enumerate(code.hz.row_support)]
        for lo, hi in ((0, boundary), (boundary, code.n)):
            seen: dict[tuple, int] = {}
            incident: dict[int, list] = {}
            for key_t, key_i, supp in rows:
                for q in supp:
                    if lo <= q < hi:
                        incident.setdefault(q, []).append((key_t, key_i))
            for q, checks in incident.items():
                for a in range(len(checks)):
                    for b in range(a + 1, len(checks)):
                        pair = (checks[a], checks[b])
                        if pair in seen:
                            ok = False
                            break
                        seen[pair] = q
                    if not ok:
                        break
                if not ok:
                    break
            if not ok:
                break
    code._bb_layering_valid = ok
    return ok


def _resolve_strategy(code: CssCode, cfg: SymBreakConfig) -> str:
    strategy = cfg.split_strategy
    if strategy == "auto":
        strategy = "bb_layered" if code.family == "bb" else "syndrome_guided"
        if strategy == "bb_layered" and not bb_layer_split_valid(code):
            logger.warning(
                "%s: block layers contain 4-cycles; using syndrome_guided splits",
                code.label,
            )
            strategy = "syndrome_guided"
    elif strategy == "bb_layered":
        if code.family != "bb":
            raise ValueError("bb_layered strategy requires a BB code")
        if not bb_layer_split_valid(code):
            logger.warning(
                "%s: block layers contain 4-cycles; downgrading to syndrome_guided",
                code.label,
            )
            strategy = "syndrome_guided"
    return strategy


# ── the decoder ───────────────────────────────────────────────────────

def _cached_base_view(code: CssCode, error_type: str) -> CompiledGraph:
    views = getattr(code, "_base_views", None)
    if views is None:
        views = {}
        code._base_views = views
    key = error_type.upper()
    if key not in views:
        views[key] = base_view(code.parity_matrix(key))
    return views[key]


def _residual_count(view: CompiledGraph, syndrome_bits: np.ndarray, est: np.ndarray) -> int:
    if view.n_edges:
        parity = np.bitwise_xor.reduceat(est[view.edge_var], view.check_ptr[:-1])
        parity[view.check_ptr[:-1] == view.check_ptr[1:]] = 0
    else:
        parity = np.zeros(view.n_checks, dtype=np.uint8)
    return int((parity ^ syndrome_bits).sum())


def decode(
    code: CssCode,
    syndrome: BinVector,
    cfg: SymBreakConfig | None = None,
    error_type: str = "X",
) -> DecodeOutcome:
    """Decode one syndrome with BP rounds interleaved with check splits.

    For X errors the graph is built from hz and split targets come from
    hx rows (and symmetrically for Z errors).  Every stop path reports
    a best-so-far estimate; converged outcomes are re-verified against
    the original, unsplit parity matrix.

    The common no-split path runs on a cached compiled view of the
    parity matrix; the mutable graph is only materialized once a split
    is actually needed.
    """
    cfg = cfg or SymBreakConfig()
    h = code.parity_matrix(error_type)
    opposite = code.opposite_matrix(error_type)
    if syndrome.n != h.rows:
        raise ValueError(f"syndrome length {syndrome.n} != check count {h.rows}")
    if cfg.bp.prior_llr is None:
        raise ValueError("cfg.bp.prior_llr must be set")
    # Strategy resolution is memoized per (cfg, code) and validates the
    # configuration up front (bb_layered demands a BB code).
    strategy_cache = getattr(cfg, "_strategy_cache", None)
    if strategy_cache is None or strategy_cache[0] is not code:
        cfg._strategy_cache = (code, _resolve_strategy(code, cfg))
    strategy = cfg._strategy_cache[1]

    t0 = time.perf_counter()
    if not syndrome.support:
        # Zero syndrome: the all-zero estimate is BP's fixed point.
        return DecodeOutcome(
            estimate=BinVector.zeros(code.n), converged=True,
            bp_iterations_total=0, splits=[],
            wall_time=time.perf_counter() - t0,
            stop_reason="syndrome_matched", d_trajectory=[0],
        )

    round_cfg = getattr(cfg, "_round_cfg", None)
    if round_cfg is None or round_cfg.prior_llr is not cfg.bp.prior_llr:
        round_cfg = BpConfig(
            max_iters=cfg.m,
            schedule=cfg.bp.schedule,
            variant=cfg.bp.variant,
            min_sum_scale=cfg.bp.min_sum_scale,
            llr_clip=cfg.bp.llr_clip,
            prior_llr=cfg.bp.prior_llr,
            stop_on_match=True,
        )
        cfg._round_cfg = round_cfg

    view = _cached_base_view(code, error_type)
    synd_bits = syndrome.to_dense()

    # Round 1 on the static view; the split machinery only materializes
    # when BP actually fails to converge.
    state, est, bp_converged = run_bp_arrays(view, synd_bits, round_cfg)
    if bp_converged:
        return DecodeOutcome(
            estimate=BinVector.from_sorted(code.n, np.flatnonzero(est)),
            converged=True, bp_iterations_total=state.iteration, splits=[],
            wall_time=time.perf_counter() - t0,
            stop_reason="syndrome_matched", d_trajectory=[0],
        )

    g: TannerGraph | None = None
    monitor = StagnationMonitor(cfg.k_max)
    total_iters = state.iteration
    splits: list[SplitRecord] = []
    d = _residual_count(view, synd_bits, est)
    d_trajectory: list[int] = [d]
    best_d = d
    best_est = est.copy()
    monitor.observe(d)  # d > 0 here, so this never signals convergence
    stop_reason = "split_budget"
    converged = False
    round_idx = 0

    while True:
        if monitor.k >= monitor.k_max:
            stop_reason = "k_threshold"
            break
        if len(splits) >= cfg.max_splits:
            stop_reason = "split_budget"
            break

        if g is None:
            # First split: materialize the mutable graph.  Its stable
            # edge ids coincide with the base view's slot order, so the
            # message state carries over unchanged.
            g = TannerGraph.from_parity(h, syndrome)
        reliabilities = check_reliability(state, opposite)
        target = select_split_target(reliabilities, g, opposite, state)
        if target is None:
            stop_reason = "split_budget"
            break
        gx_row, z_check = target
        gx_support = opposite.row_support[gx_row]
        if strategy == "bp_guided":
            part1, s1 = plan_split_bp_guided(g, z_check, gx_support, state)
        elif strategy == "syndrome_guided":
            part1, s1 = plan_split_syndrome_guided(g, z_check, gx_support, state)
        else:
            part1, s1 = plan_split_bb_layered(g, z_check, code, state)
        g.split_check(z_check, part1, s1)
        view = g.compile()
        synd_bits = view.syndrome
        d_after = _residual_count(view, synd_bits, est)
        splits.append(SplitRecord(
            round=round_idx, gx_row=gx_row, z_check=z_check,
            part1=tuple(sorted(part1)), s1=s1, d_before=d, d_after=d_after,
        ))
        if cfg.reset_messages_on_split:
            state = None
        round_idx += 1

        before = state.iteration if state is not None else 0
        state, est, bp_converged = run_bp_arrays(view, synd_bits, round_cfg, state)
        total_iters += state.iteration - before
        d = 0 if bp_converged else _residual_count(view, synd_bits, est)
        d_trajectory.append(d)
        if d < best_d:
            best_d = d
            best_est = est.copy()

        action = monitor.observe(d)
        if action == "converged":
            converged = True
            best_est = est
            stop_reason = "syndrome_matched"
            break

    estimate = BinVector.from_sorted(code.n, np.flatnonzero(best_est))
    if converged:
        # The kernel already verified the live system; the original one
        # needs re-checking only once splits have rewritten checks.
        if splits:
            check = matvec(h, estimate)
            if check.support != syndrome.support:
                raise RuntimeError("convergence certificate failed against the original system")
    elif cfg.osd_rescue and state is not None:
        estimate = osd_postprocess(h, syndrome, state.llr, OsdConfig("osd0"))
        converged = True
        stop_reason = "syndrome_matched"

    return DecodeOutcome(
        estimate=estimate,
        converged=converged,
        bp_iterations_total=total_iters,
        splits=splits,
        wall_time=time.perf_counter() - t0,
        stop_reason=stop_reason,
        d_trajectory=d_trajectory,
    )
