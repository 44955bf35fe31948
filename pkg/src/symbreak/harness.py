"""Monte Carlo logical-error-rate estimation and decoder timing.

Each shot samples an error, computes the syndrome, decodes, classifies
the residual against the logical operators, and records the decoder's
wall time.  Shots are keyed to counter-based RNG streams, so results
are identical for any thread count or scheduling; timing statistics
aggregate only shots that actually decoded (nonzero syndrome).

All experiments here use code-capacity noise (see ``noise``); reported
error rates are not comparable to circuit-level numbers.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from symbreak.bp import BpConfig, base_view, prior_from_error_rate, run_bp_arrays
from symbreak.codes import CssCode, build_code
from symbreak.decoder import DecodeOutcome, SymBreakConfig, decode
from symbreak.gf2 import BinVector, matvec, solve_constrained
from symbreak.noise import NoiseModel, sample_error, sample_meas_flips, shot_rng
from symbreak.osd import OsdConfig, osd_postprocess

__all__ = [
    "ExperimentSpec",
    "LerResult",
    "wilson_interval",
    "is_logical_failure",
    "run_experiment",
    "sweep",
    "write_csv",
    "read_csv",
    "DECODER_NAMES",
    "MlOracle",
]

DECODER_NAMES = ("bp", "bp_osd0", "bp_osd_cs", "symbreak", "ml", "null")

CSV_COLUMNS = [
    "code", "decoder", "p", "shots", "failures", "ler",
    "ci_low", "ci_high", "mean_time_us", "p99_time_us",
    "stop_syndrome_matched", "stop_k_threshold", "stop_split_budget",
    "stop_iteration_limit", "stop_osd_rescue", "stop_other",
]

_STOP_KEYS = ("syndrome_matched", "k_threshold", "split_budget",
              "iteration_limit", "osd_rescue")


@dataclass
class ExperimentSpec:
    code: str
    noise: NoiseModel
    decoder: str = "symbreak"
    shots: int = 10000
    seed: int = 0
    decoder_params: dict = field(default_factory=dict)
    sides: str = "both"          # x | z | both
    timing: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.decoder not in DECODER_NAMES:
            raise ValueError(f"unknown decoder {self.decoder!r}; choose from {DECODER_NAMES}")
        if self.sides not in ("x", "z", "both"):
            raise ValueError("sides must be x, z, or both")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        return cls(
            code=d["code"],
            noise=NoiseModel.from_dict(d["noise"]),
            decoder=d.get("decoder", "symbreak"),
            shots=int(d.get("shots", 10000)),
            seed=int(d.get("seed", 0)),
            decoder_params=dict(d.get("decoder_params", {})),
            sides=d.get("sides", "both"),
            timing=bool(d.get("timing", True)),
            threads=int(d.get("threads", 1)),
        )


@dataclass
class LerResult:
    code: str
    decoder: str
    p: float
    shots: int
    failures: int
    ler: float
    ci_low: float
    ci_high: float
    mean_time: float             # seconds per decoded (nonzero) shot
    p99_time: float
    stop_reason_counts: dict[str, int] = field(default_factory=dict)

    @property
    def ci_half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0


def wilson_interval(failures: int, shots: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not 0 <= failures <= shots:
        raise ValueError("failures must lie in [0, shots]")
    phat = failures / shots
    z2 = z * z
    denom = 1.0 + z2 / shots
    center = (phat + z2 / (2 * shots)) / denom
    margin = (z / denom) * math.sqrt(phat * (1 - phat) / shots + z2 / (4 * shots * shots))
    return max(0.0, center - margin), min(1.0, center + margin)


def is_logical_failure(
    code: CssCode,
    e: BinVector,
    estimate: BinVector,
    error_type: str,
    converged: bool,
) -> bool:
    """Classify one decode: failure if non-converged, if the residual
    violates the checks, or if it acts as a logical operator.

    A residual inside the stabilizer rowspace (e.g. estimate differing
    from e by a same-type check) is a success.
    """
    if not converged:
        return True
    r = set(e.support) ^ set(estimate.support)
    if not r:
        return False
    h = code.parity_matrix(error_type)
    rv = BinVector(code.n, tuple(r))
    if matvec(h, rv).weight:
        return True
    logicals = code.logical_z if error_type.upper() == "X" else code.logical_x
    return any(len(r & set(op.support)) % 2 for op in logicals)


# ── decoder adapters ──────────────────────────────────────────────────
#
# Adapters are constructed once per experiment with the per-side priors
# baked in; per-shot calls take only (syndrome, error_type).

@dataclass
class _Decode:
    estimate: BinVector
    converged: bool
    stop_reason: str
    wall_time: float


def _zero_decode(n: int) -> _Decode:
    return _Decode(BinVector.zeros(n), True, "syndrome_matched", 0.0)


class _BpFamilyDecoder:
    """bp, bp_osd0, bp_osd_cs on the static (unsplit) graph."""

    def __init__(self, code: CssCode, name: str, params: dict, priors: dict):
        self.code = code
        self.osd_cfg = None
        if name == "bp_osd0":
            self.osd_cfg = OsdConfig("osd0")
        elif name == "bp_osd_cs":
            self.osd_cfg = OsdConfig("osd_cs", sweep_depth=int(params.get("sweep_depth", 60)))
        kwargs = {k: v for k, v in params.items()
                  if k in ("max_iters", "schedule", "variant", "min_sum_scale", "llr_clip")}
        self.cfgs = {t: BpConfig(**kwargs).with_priors(p) for t, p in priors.items()}
        self.views = {"X": base_view(code.hz), "Z": base_view(code.hx)}

    def __call__(self, syndrome: BinVector, error_type: str) -> _Decode:
        t0 = time.perf_counter()
        if not syndrome.support:
            return _zero_decode(self.code.n)
        t = error_type.upper()
        state, est, conv = run_bp_arrays(self.views[t], syndrome.to_dense(), self.cfgs[t])
        if conv:
            estimate = BinVector.from_sorted(self.code.n, np.flatnonzero(est))
            return _Decode(estimate, True, "syndrome_matched", time.perf_counter() - t0)
        if self.osd_cfg is None:
            estimate = BinVector.from_sorted(self.code.n, np.flatnonzero(est))
            return _Decode(estimate, False, "iteration_limit", time.perf_counter() - t0)
        h = self.code.parity_matrix(error_type)
        estimate = osd_postprocess(h, syndrome, state.llr, self.osd_cfg)
        return _Decode(estimate, True, "osd_rescue", time.perf_counter() - t0)


class _SymBreakDecoder:
    def __init__(self, code: CssCode, params: dict, priors: dict):
        self.code = code
        bp_kwargs = {k: v for k, v in params.items()
                     if k in ("schedule", "variant", "min_sum_scale", "llr_clip")}
        self.cfgs = {
            t: SymBreakConfig(
                m=int(params.get("m", 10)),
                k_max=int(params.get("k_max", 3)),
                max_splits=int(params.get("max_splits", 50)),
                split_strategy=params.get("split_strategy", "auto"),
                bp=BpConfig(**bp_kwargs).with_priors(p),
                reset_messages_on_split=bool(params.get("reset_messages_on_split", True)),
                osd_rescue=bool(params.get("osd_rescue", False)),
            )
            for t, p in priors.items()
        }
        # Round-1 configs and static views for the lean common path; the
        # full split machinery only runs when this first burst fails.
        self.round_cfgs = {
            t: BpConfig(max_iters=c.m, schedule=c.bp.schedule, variant=c.bp.variant,
                        min_sum_scale=c.bp.min_sum_scale, llr_clip=c.bp.llr_clip,
                        prior_llr=c.bp.prior_llr, stop_on_match=True)
            for t, c in self.cfgs.items()
        }
        self.views = {"X": base_view(code.hz), "Z": base_view(code.hx)}
        for t, c in self.cfgs.items():
            # keep decode() on the identical round config (shared memo)
            c._round_cfg = self.round_cfgs[t]

    def __call__(self, syndrome: BinVector, error_type: str) -> _Decode:
        t0 = time.perf_counter()
        if not syndrome.support:
            return _zero_decode(self.code.n)
        t = error_type.upper()
        _, est, conv = run_bp_arrays(self.views[t], syndrome.to_dense(), self.round_cfgs[t])
        if conv:
            estimate = BinVector.from_sorted(self.code.n, np.flatnonzero(est))
            return _Decode(estimate, True, "syndrome_matched", time.perf_counter() - t0)
        out: DecodeOutcome = decode(self.code, syndrome, self.cfgs[t], error_type)
        return _Decode(out.estimate, out.converged, out.stop_reason,
                       time.perf_counter() - t0)


class _NullDecoder:
    """Instant all-zero answer; used to measure harness bookkeeping."""

    def __init__(self, code: CssCode):
        self.n = code.n

    def __call__(self, syndrome: BinVector, error_type: str) -> _Decode:
        return _Decode(BinVector.zeros(self.n), not syndrome.support, "null", 0.0)


class MlOracle:
    """Exhaustive degenerate maximum-likelihood decoder for tiny codes.

    For each syndrome the full solution coset is enumerated, solutions
    are grouped by logical class, and the class with the largest total
    probability wins; a minimum-weight member of that class is returned.
    Feasible only for n <= 16 (enumeration is 2^(n - rank)).
    """

    def __init__(self, code: CssCode, params: dict | None = None):
        if code.n > 16:
            raise ValueError("ML oracle is limited to n <= 16")
        self.code = code
        self._tables: dict[tuple, tuple] = {}

    def _side_setup(self, error_type: str):
        from symbreak.gf2 import kernel_basis
        h = self.code.parity_matrix(error_type)
        logicals = (self.code.logical_z if error_type.upper() == "X"
                    else self.code.logical_x)
        kb = kernel_basis(h)
        packed_kernel = [sum(1 << c for c in v.support) for v in kb]
        packed_logs = [sum(1 << c for c in op.support) for op in logicals]
        return h, packed_kernel, packed_logs

    def _class_of(self, packed_e: int, packed_logs) -> tuple:
        return tuple((packed_e & L).bit_count() & 1 for L in packed_logs)

    def decode_side(self, syndrome: BinVector, error_type: str, q: float):
        """Returns (class label, best estimate BinVector)."""
        key = (error_type.upper(), round(q, 12), syndrome.support)
        if key in self._tables:
            return self._tables[key]
        h, kernel, logs = self._side_setup(error_type)
        e_p = solve_constrained(h, syndrome)
        if e_p is None:
            raise ValueError("syndrome outside column space")
        base = sum(1 << c for c in e_p.support)
        n = self.code.n
        logq = math.log(q) - math.log(1 - q) if 0 < q < 1 else -1e9
        scores: dict[tuple, float] = {}
        best_member: dict[tuple, int] = {}
        cur = base
        idx_count = 1 << len(kernel)
        for idx in range(idx_count):
            if idx:
                flip = (idx ^ (idx >> 1)) ^ ((idx - 1) ^ ((idx - 1) >> 1))
                cur ^= kernel[flip.bit_length() - 1]
            w = cur.bit_count()
            cls = self._class_of(cur, logs)
            # accumulate probability ~ exp(w * logq); stable via max trick
            p_term = math.exp(w * logq)
            scores[cls] = scores.get(cls, 0.0) + p_term
            if cls not in best_member or w < best_member[cls][0]:
                best_member[cls] = (w, cur)
        best_cls = max(sorted(scores), key=lambda c: scores[c])
        packed = best_member[best_cls][1]
        est = BinVector(n, tuple(i for i in range(n) if (packed >> i) & 1))
        result = (best_cls, est)
        self._tables[key] = result
        return result

    def set_priors(self, priors: dict) -> "MlOracle":
        self._q = {t: 1.0 / (1.0 + math.exp(p[0])) for t, p in priors.items()}
        return self

    def __call__(self, syndrome: BinVector, error_type: str) -> _Decode:
        t0 = time.perf_counter()
        _, est = self.decode_side(syndrome, error_type, self._q[error_type.upper()])
        return _Decode(est, True, "ml", time.perf_counter() - t0)


def _build_decoder(code: CssCode, name: str, params: dict, priors: dict):
    if name in ("bp", "bp_osd0", "bp_osd_cs"):
        return _BpFamilyDecoder(code, name, params, priors)
    if name == "symbreak":
        return _SymBreakDecoder(code, params, priors)
    if name == "ml":
        return MlOracle(code, params).set_priors(priors)
    if name == "null":
        return _NullDecoder(code)
    raise ValueError(f"unknown decoder {name!r}")


# ── experiment driver ─────────────────────────────────────────────────

_CODE_CACHE: dict[str, CssCode] = {}


def _cached_code(label: str) -> CssCode:
    if label not in _CODE_CACHE:
        code = build_code(label)
        code.logical_x  # warm the logical bases before any worker forks
        _CODE_CACHE[label] = code
    return _CODE_CACHE[label]


class _ShotKit:
    """Dense per-side helpers for the hot loop: syndrome bits via column
    gathers and logical-overlap parities, both O(weight * column)."""

    def __init__(self, code: CssCode, error_type: str):
        h = code.parity_matrix(error_type)
        self.h_dense = h.to_dense()
        logicals = code.logical_z if error_type.upper() == "X" else code.logical_x
        self.log_dense = (
            np.stack([op.to_dense() for op in logicals])
            if logicals else np.zeros((0, code.n), dtype=np.uint8)
        )
        self.n_checks = h.rows

    def syndrome(self, support) -> BinVector:
        if not len(support):
            return BinVector.zeros(self.n_checks)
        bits = self.h_dense[:, support].sum(axis=1) & 1
        return BinVector.from_sorted(self.n_checks, np.flatnonzero(bits))

    def residual_is_logical(self, residual_support: list[int]) -> bool:
        if not len(self.log_dense) or not len(residual_support):
            return False
        return bool((self.log_dense[:, residual_support].sum(axis=1) & 1).any())


def _sides_of(spec: ExperimentSpec):
    return {"x": ("X",), "z": ("Z",), "both": ("X", "Z")}[spec.sides]


def _prior_for(spec: ExperimentSpec, code: CssCode, error_type: str) -> np.ndarray:
    marginal = max(spec.noise.marginal(error_type), 1e-12)
    return np.full(code.n, prior_from_error_rate(marginal))


class _BlockSampler:
    """Deterministic per-shot errors and syndromes, amortized in blocks.

    Shot k's randomness comes from row k % B of the uniforms generated
    by Philox keyed (seed, k // B), so results never depend on worker
    chunking.  Draw layout per row: n data draws (2n for the independent
    models), then per-side measurement draws for phenomenological noise.
    Syndromes for the whole block are computed with one small matmul per
    side, which keeps the per-shot harness cost in the microseconds.
    """

    BLOCK = 256

    def __init__(self, model: NoiseModel, n: int, seed: int,
                 sides: tuple[str, ...], kits: dict):
        self.model = model
        self.n = n
        self.seed = seed
        self.sides = sides
        # One draw per qubit suffices for depolarizing (the uniform picks
        # the Pauli); the independent models need separate X/Z draws.
        self.data_width = n if model.kind == "depolarizing" else 2 * n
        self.meas_dims = (
            tuple(kits[t].n_checks for t in sides)
            if model.kind == "phenomenological" else ()
        )
        self.width = self.data_width + sum(self.meas_dims)
        # h^T as float32: exact for row sums up to 2^24, BLAS-friendly.
        self._ht = {t: kits[t].h_dense.T.astype(np.float32) for t in sides}
        self._block_idx = -1
        self._err: dict[str, np.ndarray] = {}
        self._synd: dict[str, np.ndarray] = {}
        self._meas: dict[str, np.ndarray] = {}

    def _build_block(self, b: int) -> None:
        rng = shot_rng(self.seed, b)
        u = rng.random((self.BLOCK, self.width))
        m = self.model
        if m.kind == "depolarizing":
            third = m.p / 3.0
            data = u[:, : self.n]
            err = {"X": (data < 2.0 * third), "Z": (data >= third) & (data < m.p)}
        elif m.kind == "independent_xz":
            err = {"X": u[:, : self.n] < m.px, "Z": u[:, self.n: 2 * self.n] < m.pz}
        else:
            err = {"X": u[:, : self.n] < m.p_data,
                   "Z": u[:, self.n: 2 * self.n] < m.p_data}
        self._err = {t: err[t] for t in ("X", "Z")}
        off = self.data_width
        for t, dim in zip(self.sides, self.meas_dims):
            self._meas[t] = u[:, off:off + dim] < m.p_meas
            off += dim
        for t in self.sides:
            bits = self._err[t].astype(np.float32) @ self._ht[t]
            synd = (bits.astype(np.int64) & 1).astype(bool)
            if t in self._meas:
                synd ^= self._meas[t]
            self._synd[t] = synd
        self._block_idx = b

    def shot(self, shot: int):
        """(x support, z support, per-side observed-syndrome supports)."""
        b, row = divmod(shot, self.BLOCK)
        if b != self._block_idx:
            self._build_block(b)
        ex = np.flatnonzero(self._err["X"][row])
        ez = np.flatnonzero(self._err["Z"][row])
        synd = {t: np.flatnonzero(self._synd[t][row]) for t in self.sides}
        return ex, ez, synd


def _run_shot_range(spec: ExperimentSpec, lo: int, hi: int) -> dict:
    code = _cached_code(spec.code)
    sides = _sides_of(spec)
    priors = {t: _prior_for(spec, code, t) for t in sides}
    dec = _build_decoder(code, spec.decoder, spec.decoder_params, priors)
    kits = {t: _ShotKit(code, t) for t in sides}
    meas_noise = spec.noise.kind == "phenomenological"
    sampler = _BlockSampler(spec.noise, code.n, spec.seed, sides, kits)
    failures = 0
    stop_counts: dict[str, int] = {}
    times: list[float] = []
    for shot in range(lo, hi):
        ex, ez, synd = sampler.shot(shot)
        shot_failed = False
        for t in sides:
            e_supp = ex if t == "X" else ez
            kit = kits[t]
            s = BinVector.from_sorted(kit.n_checks, synd[t])
            out = dec(s, t)
            stop_counts[out.stop_reason] = stop_counts.get(out.stop_reason, 0) + 1
            if spec.timing and s.support:
                times.append(out.wall_time)
            if not out.converged:
                shot_failed = True
            else:
                r = sorted(set(int(q) for q in e_supp) ^ set(out.estimate.support))
                if r:
                    # Converged estimates satisfy the observed syndrome, so
                    # the residual violates checks only under measurement
                    # noise; otherwise only a logical residual fails.
                    if meas_noise and (kit.h_dense[:, r].sum(axis=1) & 1).any():
                        shot_failed = True
                    elif kit.residual_is_logical(r):
                        shot_failed = True
        if shot_failed:
            failures += 1
    return {"failures": failures, "stop_counts": stop_counts, "times": times}


def run_experiment(spec: ExperimentSpec) -> LerResult:
    """Estimate the logical error rate of one (code, noise, decoder) triple.

    Fully deterministic for a fixed seed (timing aside): failure and
    stop-reason counts are reproducible across runs and thread counts.
    Timing statistics cover decoded (nonzero-syndrome) shots only.
    """
    from symbreak import _kernels

    _kernels.warmup()  # keep JIT load out of the first shot's timing
    code = _cached_code(spec.code)  # fail fast on bad labels / misconfiguration
    sides = _sides_of(spec)
    _build_decoder(code, spec.decoder, spec.decoder_params,
                   {t: _prior_for(spec, code, t) for t in sides})

    if spec.threads > 1:
        import multiprocessing as mp

        bounds = np.linspace(0, spec.shots, spec.threads + 1, dtype=int)
        chunks = [(spec, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with mp.get_context("fork").Pool(spec.threads) as pool:
            parts = pool.starmap(_run_shot_range, chunks)
    else:
        parts = [_run_shot_range(spec, 0, spec.shots)]

    failures = sum(p["failures"] for p in parts)
    stop_counts: dict[str, int] = {}
    times: list[float] = []
    for p in parts:
        times.extend(p["times"])
        for k, v in p["stop_counts"].items():
            stop_counts[k] = stop_counts.get(k, 0) + v
    lo, hi = wilson_interval(failures, spec.shots)
    times_arr = np.asarray(times)
    return LerResult(
        code=spec.code,
        decoder=spec.decoder,
        p=spec.noise.rate,
        shots=spec.shots,
        failures=failures,
        ler=failures / spec.shots,
        ci_low=lo,
        ci_high=hi,
        mean_time=float(times_arr.mean()) if len(times_arr) else 0.0,
        p99_time=float(np.percentile(times_arr, 99)) if len(times_arr) else 0.0,
        stop_reason_counts=stop_counts,
    )


def sweep(spec: ExperimentSpec, axis: str, values) -> list[LerResult]:
    """One run_experiment per axis value, common seed base.

    Axes: p (any decoder), max_iters (BP-family decoders), max_splits
    (symbreak only).
    """
    results = []
    for v in values:
        if axis == "p":
            s = ExperimentSpec(spec.code, spec.noise.with_rate(float(v)), spec.decoder,
                               spec.shots, spec.seed, dict(spec.decoder_params),
                               spec.sides, spec.timing, spec.threads)
        elif axis == "max_iters":
            if spec.decoder not in ("bp", "bp_osd0", "bp_osd_cs"):
                raise ValueError("max_iters axis applies to BP-family decoders")
            params = dict(spec.decoder_params, max_iters=int(v))
            s = ExperimentSpec(spec.code, spec.noise, spec.decoder, spec.shots,
                               spec.seed, params, spec.sides, spec.timing, spec.threads)
        elif axis == "max_splits":
            if spec.decoder != "symbreak":
                raise ValueError("max_splits axis applies to the symbreak decoder")
            params = dict(spec.decoder_params, max_splits=int(v))
            s = ExperimentSpec(spec.code, spec.noise, spec.decoder, spec.shots,
                               spec.seed, params, spec.sides, spec.timing, spec.threads)
        else:
            raise ValueError(f"unknown sweep axis {axis!r}")
        results.append(run_experiment(s))
    return results


# ── CSV io ────────────────────────────────────────────────────────────

def write_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in results:
            counts = [r.stop_reason_counts.get(k, 0) for k in _STOP_KEYS]
            other = sum(v for k, v in r.stop_reason_counts.items() if k not in _STOP_KEYS)
            w.writerow([
                r.code, r.decoder, repr(r.p), r.shots, r.failures, repr(r.ler),
                repr(r.ci_low), repr(r.ci_high),
                repr(r.mean_time * 1e6), repr(r.p99_time * 1e6),
                *counts, other,
            ])


def read_csv(path) -> list[LerResult]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            counts = {k: int(row[f"stop_{k}"]) for k in _STOP_KEYS
                      if row.get(f"stop_{k}", "")}
            counts = {k: v for k, v in counts.items() if v}
            if int(row.get("stop_other", 0) or 0):
                counts["other"] = int(row["stop_other"])
            out.append(LerResult(
                code=row["code"], decoder=row["decoder"], p=float(row["p"]),
                shots=int(row["shots"]), failures=int(row["failures"]),
                ler=float(row["ler"]), ci_low=float(row["ci_low"]),
                ci_high=float(row["ci_high"]),
                mean_time=float(row["mean_time_us"]) / 1e6,
                p99_time=float(row["p99_time_us"]) / 1e6,
                stop_reason_counts=counts,
            ))
    return out
