"""Numba kernels for belief-propagation message passing.

All kernels operate on the flat CSR-style arrays produced by
``TannerGraph.compile``: edges grouped contiguously by check, plus a
per-variable index into that layout.  Message arrays are edge-slot
aligned; callers handle any mapping to stable edge ids.

Leave-one-out check updates use prefix/suffix accumulation, so they are
exact (no division) and cost O(degree) per check.
"""

from __future__ import annotations

import numpy as np
from numba import njit

PRODUCT_SUM = 0
MIN_SUM = 1

# tanh saturates to +-1 in float64 near |x| ~ 38; keep atanh finite.
_TANH_CAP = 1.0 - 1e-14

_warmed = False


def warmup() -> None:
    """Force JIT compilation / cache load so first-shot timings are clean."""
    global _warmed
    if _warmed:
        return
    ptr = np.array([0, 2], dtype=np.int64)
    ev = np.array([0, 1], dtype=np.int32)
    vptr = np.array([0, 1, 2], dtype=np.int64)
    vedge = np.array([0, 1], dtype=np.int64)
    synd = np.array([1], dtype=np.uint8)
    prior = np.array([2.0, 2.0])
    for kernel in (bp_flooding, bp_serial):
        for variant in (PRODUCT_SUM, MIN_SUM):
            kernel(ptr, ev, vptr, vedge, synd, prior,
                   prior.copy(), np.zeros(2), prior.copy(),
                   np.zeros(2, dtype=np.uint8), 2, 50.0, variant, 0.625, True)
    _warmed = True


@njit(cache=True)
def _check_update(check_ptr, syndrome, v2c, c2v, clip, variant, ms_scale, scratch):
    n_checks = len(check_ptr) - 1
    for c in range(n_checks):
        lo, hi = check_ptr[c], check_ptr[c + 1]
        deg = hi - lo
        if deg == 0:
            continue
        if variant == PRODUCT_SUM:
            # prefix[i] = prod of tanh(v2c/2) over edges < i
            prefix = scratch[0]
            suffix = scratch[1]
            acc = 1.0
            for i in range(deg):
                prefix[i] = acc
                acc *= np.tanh(v2c[lo + i] * 0.5)
            acc = 1.0
            for i in range(deg - 1, -1, -1):
                suffix[i] = acc
                acc *= np.tanh(v2c[lo + i] * 0.5)
            for i in range(deg):
                loo = prefix[i] * suffix[i]
                if loo > _TANH_CAP:
                    loo = _TANH_CAP
                elif loo < -_TANH_CAP:
                    loo = -_TANH_CAP
                msg = 2.0 * np.arctanh(loo)
                if syndrome[c]:
                    msg = -msg
                if msg > clip:
                    msg = clip
                elif msg < -clip:
                    msg = -clip
                c2v[lo + i] = msg
        else:
            # scaled min-sum: sign product and two smallest magnitudes
            sign_all = 1.0
            min1 = np.inf
            min2 = np.inf
            argmin1 = -1
            for i in range(deg):
                v = v2c[lo + i]
                if v < 0.0:
                    sign_all = -sign_all
                av = abs(v)
                if av < min1:
                    min2 = min1
                    min1 = av
                    argmin1 = i
                elif av < min2:
                    min2 = av
            for i in range(deg):
                v = v2c[lo + i]
                mag = min2 if i == argmin1 else min1
                if mag == np.inf:
                    # degree-1 check: empty leave-one-out set, full certainty
                    mag = clip
                sign = sign_all if v >= 0.0 else -sign_all
                msg = ms_scale * sign * mag
                if syndrome[c]:
                    msg = -msg
                if msg > clip:
                    msg = clip
                elif msg < -clip:
                    msg = -clip
                c2v[lo + i] = msg


@njit(cache=True)
def _var_update(edge_var, var_ptr, var_edge, prior, c2v, v2c, llr, clip):
    n_vars = len(var_ptr) - 1
    for v in range(n_vars):
        total = prior[v]
        for j in range(var_ptr[v], var_ptr[v + 1]):
            total += c2v[var_edge[j]]
        if total > clip:
            total = clip
        elif total < -clip:
            total = -clip
        llr[v] = total
        for j in range(var_ptr[v], var_ptr[v + 1]):
            e = var_edge[j]
            msg = total - c2v[e]
            if msg > clip:
                msg = clip
            elif msg < -clip:
                msg = -clip
            v2c[e] = msg


@njit(cache=True)
def _residual_matches(check_ptr, edge_var, syndrome, est):
    n_checks = len(check_ptr) - 1
    for c in range(n_checks):
        parity = 0
        for i in range(check_ptr[c], check_ptr[c + 1]):
            parity ^= est[edge_var[i]]
        if parity != syndrome[c]:
            return False
    return True


@njit(cache=True)
def bp_flooding(check_ptr, edge_var, var_ptr, var_edge, syndrome, prior,
                v2c, c2v, llr, est, max_iters, clip, variant, ms_scale,
                stop_on_match):
    """Flooding-schedule BP.  Returns (iterations run, converged)."""
    max_deg = 0
    for c in range(len(check_ptr) - 1):
        d = check_ptr[c + 1] - check_ptr[c]
        if d > max_deg:
            max_deg = d
    scratch = np.empty((2, max(max_deg, 1)), dtype=np.float64)
    iters = 0
    converged = False
    for _ in range(max_iters):
        _check_update(check_ptr, syndrome, v2c, c2v, clip, variant, ms_scale, scratch)
        _var_update(edge_var, var_ptr, var_edge, prior, c2v, v2c, llr, clip)
        iters += 1
        for v in range(len(llr)):
            est[v] = 1 if llr[v] < 0.0 else 0
        if stop_on_match and _residual_matches(check_ptr, edge_var, syndrome, est):
            converged = True
            break
    return iters, converged


@njit(cache=True)
def bp_serial(check_ptr, edge_var, var_ptr, var_edge, syndrome, prior,
              v2c, c2v, llr, est, max_iters, clip, variant, ms_scale,
              stop_on_match):
    """Serial (check-sequential) BP; one sweep over all checks per iteration.

    Posteriors are updated in place after each check, which typically
    halves the iterations needed versus flooding.
    """
    max_deg = 0
    n_checks = len(check_ptr) - 1
    for c in range(n_checks):
        d = check_ptr[c + 1] - check_ptr[c]
        if d > max_deg:
            max_deg = d
    scratch = np.empty((2, max(max_deg, 1)), dtype=np.float64)
    for v in range(len(llr)):
        total = prior[v]
        for j in range(var_ptr[v], var_ptr[v + 1]):
            total += c2v[var_edge[j]]
        llr[v] = min(max(total, -clip), clip)
    iters = 0
    converged = False
    for _ in range(max_iters):
        for c in range(n_checks):
            lo, hi = check_ptr[c], check_ptr[c + 1]
            deg = hi - lo
            if deg == 0:
                continue
            for i in range(deg):
                e = lo + i
                msg = llr[edge_var[e]] - c2v[e]
                v2c[e] = min(max(msg, -clip), clip)
            if variant == PRODUCT_SUM:
                prefix = scratch[0]
                suffix = scratch[1]
                acc = 1.0
                for i in range(deg):
                    prefix[i] = acc
                    acc *= np.tanh(v2c[lo + i] * 0.5)
                acc = 1.0
                for i in range(deg - 1, -1, -1):
                    suffix[i] = acc
                    acc *= np.tanh(v2c[lo + i] * 0.5)
                for i in range(deg):
                    loo = prefix[i] * suffix[i]
                    if loo > _TANH_CAP:
                        loo = _TANH_CAP
                    elif loo < -_TANH_CAP:
                        loo = -_TANH_CAP
                    msg = 2.0 * np.arctanh(loo)
                    if syndrome[c]:
                        msg = -msg
                    msg = min(max(msg, -clip), clip)
                    e = lo + i
                    v = edge_var[e]
                    llr[v] = min(max(llr[v] + msg - c2v[e], -clip), clip)
                    c2v[e] = msg
            else:
                sign_all = 1.0
                min1 = np.inf
                min2 = np.inf
                argmin1 = -1
                for i in range(deg):
                    val = v2c[lo + i]
                    if val < 0.0:
                        sign_all = -sign_all
                    av = abs(val)
                    if av < min1:
                        min2 = min1
                        min1 = av
                        argmin1 = i
                    elif av < min2:
                        min2 = av
                for i in range(deg):
                    val = v2c[lo + i]
                    mag = min2 if i == argmin1 else min1
                    if mag == np.inf:
                        mag = clip
                    sign = sign_all if val >= 0.0 else -sign_all
                    msg = ms_scale * sign * mag
                    if syndrome[c]:
                        msg = -msg
                    msg = min(max(msg, -clip), clip)
                    e = lo + i
                    v = edge_var[e]
                    llr[v] = min(max(llr[v] + msg - c2v[e], -clip), clip)
                    c2v[e] = msg
        iters += 1
        for v in range(len(llr)):
            est[v] = 1 if llr[v] < 0.0 else 0
        if stop_on_match and _residual_matches(check_ptr, edge_var, syndrome, est):
            converged = True
            break
    return iters, converged
