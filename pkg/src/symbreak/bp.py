"""Belief propagation on a (possibly split) Tanner graph.

Produces per-qubit posterior LLRs, hard decisions, and reliabilities.
Messages live on stable edge ids, so state survives graph recompilation
after check splits and can warm-start subsequent runs.

Sign conventions: a positive LLR means "probably no error"; hard
decisions are 1 exactly when L(q) < 0, so L(q) = 0 decodes to no error.

The array-level entry point ``run_bp_arrays`` drives the numba kernels
directly on a compiled view; ``run_bp`` wraps it for TannerGraph users.
Decoders that only need the unsplit graph can run on a cached
``base_view`` of the parity matrix without building a graph at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from symbreak import _kernels
from symbreak.gf2 import BinMatrix, BinVector
from symbreak.tanner import CompiledGraph, TannerGraph

__all__ = [
    "BpConfig",
    "BpState",
    "prior_from_error_rate",
    "run_bp",
    "run_bp_arrays",
    "base_view",
    "error_probabilities",
    "reliability",
]


def prior_from_error_rate(p: float) -> float:
    """Prior LLR log((1-p)/p) of a qubit with error probability p."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"error rate must lie strictly in (0, 1), got {p}")
    return math.log((1.0 - p) / p)


@dataclass
class BpConfig:
    max_iters: int = 100
    schedule: str = "flooding"            # flooding | serial
    variant: str = "product_sum"          # product_sum | min_sum
    min_sum_scale: float = 0.625
    llr_clip: float = 100.0
    prior_llr: np.ndarray | None = None   # per-qubit; required by run_bp
    stop_on_match: bool = True            # stop early once s_hat == s

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.llr_clip <= 0:
            raise ValueError("llr_clip must be positive")
        if self.schedule not in ("flooding", "serial"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.variant not in ("product_sum", "min_sum"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "min_sum" and not 0.0 < self.min_sum_scale <= 1.0:
            raise ValueError("min_sum scale must lie in (0, 1]")

    def with_priors(self, prior_llr) -> "BpConfig":
        return replace(self, prior_llr=np.asarray(prior_llr, dtype=np.float64))


@dataclass
class BpState:
    """Per-edge messages (stable edge-id indexed) and per-qubit LLRs."""

    var_to_check: np.ndarray
    check_to_var: np.ndarray
    llr: np.ndarray
    iteration: int = 0

    def copy(self) -> "BpState":
        return BpState(self.var_to_check.copy(), self.check_to_var.copy(),
                       self.llr.copy(), self.iteration)


def base_view(h: BinMatrix) -> CompiledGraph:
    """Compiled view of the unsplit parity matrix (zero syndrome).

    Edge slots follow row-major order, matching the stable edge ids a
    TannerGraph built from the same matrix would assign, so message
    arrays transfer 1:1 if splitting becomes necessary later.
    """
    ptr = [0]
    edge_var: list[int] = []
    for supp in h.row_support:
        edge_var.extend(supp)
        ptr.append(len(edge_var))
    ev = np.array(edge_var, dtype=np.int32)
    ptr_arr = np.array(ptr, dtype=np.int64)
    order = np.argsort(ev, kind="stable") if len(ev) else np.zeros(0, dtype=np.int64)
    var_ptr = np.zeros(h.cols + 1, dtype=np.int64)
    if len(ev):
        var_ptr[1:] = np.cumsum(np.bincount(ev, minlength=h.cols))
    slot_check = np.repeat(np.arange(h.rows, dtype=np.int32), np.diff(ptr_arr)) \
        if len(ev) else np.zeros(0, dtype=np.int32)
    return CompiledGraph(
        n_vars=h.cols,
        check_ids=np.arange(h.rows, dtype=np.int64),
        check_ptr=ptr_arr,
        edge_var=ev,
        edge_id=np.arange(len(ev), dtype=np.int64),
        edge_check=slot_check,
        syndrome=np.zeros(h.rows, dtype=np.uint8),
        var_ptr=var_ptr,
        var_edge=order.astype(np.int64),
        ids_trivial=True,
    )


def _fresh_messages(n_edges: int, edge_var_by_id: np.ndarray, prior: np.ndarray) -> BpState:
    v2c = prior[edge_var_by_id] if n_edges else np.zeros(0)
    return BpState(
        var_to_check=np.asarray(v2c, dtype=np.float64).copy(),
        check_to_var=np.zeros(n_edges, dtype=np.float64),
        llr=prior.astype(np.float64).copy(),
        iteration=0,
    )


def run_bp_arrays(
    view: CompiledGraph,
    syndrome_bits: np.ndarray,
    cfg: BpConfig,
    state: BpState | None = None,
) -> tuple[BpState, np.ndarray, bool]:
    """Kernel-level BP on a compiled view; returns (state, estimate bits,
    converged).  ``syndrome_bits`` overrides the view's stored syndromes.
    """
    prior = np.asarray(cfg.prior_llr, dtype=np.float64)
    if len(prior) != view.n_vars:
        raise ValueError(f"prior length {len(prior)} != n_vars {view.n_vars}")
    n_slots = view.n_edges
    trivial_ids = bool(view.ids_trivial)
    fresh = state is None
    if fresh:
        # Stable-id message store; slot order equals id order for a base
        # view but not necessarily after splits, hence the gather below.
        if trivial_ids:
            by_id = view.edge_var
        else:
            by_id = np.empty(n_slots, dtype=np.int32)
            by_id[view.edge_id] = view.edge_var
        state = _fresh_messages(n_slots, by_id, prior)
    if trivial_ids:
        v2c, c2v = state.var_to_check, state.check_to_var
    else:
        v2c = state.var_to_check[view.edge_id] if n_slots else np.zeros(0)
        c2v = state.check_to_var[view.edge_id] if n_slots else np.zeros(0)
    llr = state.llr if fresh else state.llr.copy()
    est = np.zeros(view.n_vars, dtype=np.uint8)
    kernel = _kernels.bp_flooding if cfg.schedule == "flooding" else _kernels.bp_serial
    variant = _kernels.PRODUCT_SUM if cfg.variant == "product_sum" else _kernels.MIN_SUM
    iters, converged = kernel(
        view.check_ptr, view.edge_var, view.var_ptr, view.var_edge,
        np.asarray(syndrome_bits, dtype=np.uint8),
        prior, v2c, c2v, llr, est,
        cfg.max_iters, cfg.llr_clip, variant, cfg.min_sum_scale,
        cfg.stop_on_match,
    )
    if n_slots and not trivial_ids:
        state.var_to_check[view.edge_id] = v2c
        state.check_to_var[view.edge_id] = c2v
    state.llr = llr
    state.iteration += int(iters)
    return state, est, bool(converged)


def run_bp(
    g: TannerGraph,
    cfg: BpConfig,
    state: BpState | None = None,
) -> tuple[BpState, BinVector, bool]:
    """Run up to cfg.max_iters message-passing iterations on a graph.

    Stops early (converged=True) once the hard decision reproduces every
    live check's syndrome.  Non-convergence is a normal outcome.  Pass a
    previous state to warm-start; by default messages start at priors.
    """
    if cfg.prior_llr is None:
        raise ValueError("BpConfig.prior_llr must be set (use with_priors)")
    cg = g.compile()
    state, est, converged = run_bp_arrays(cg, cg.syndrome, cfg, state)
    estimate = BinVector.from_sorted(g.n_vars, np.flatnonzero(est))
    return state, estimate, converged


def error_probabilities(state: BpState) -> np.ndarray:
    """Posterior error probability per qubit: p_q = 1 / (1 + exp(L(q)))."""
    return 1.0 / (1.0 + np.exp(state.llr))


def reliability(state: BpState, q: int | None = None):
    """Reliability |L(q)| of a qubit's estimate (all qubits if q is None)."""
    if q is None:
        return np.abs(state.llr)
    return float(abs(state.llr[q]))
