"""Error-model sampling for Monte Carlo experiments.

Code-capacity models only: depolarizing and independent X/Z data noise,
plus a phenomenological variant that adds classical measurement flips.
Streams are counter-based (Philox keyed by seed and shot index), so any
shot can be regenerated independently of ordering or thread scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from symbreak.gf2 import BinVector

__all__ = ["NoiseModel", "shot_rng", "sample_error", "sample_meas_flips"]


@dataclass(frozen=True)
class NoiseModel:
    kind: str                 # depolarizing | independent_xz | phenomenological
    p: float = 0.0            # depolarizing rate
    px: float = 0.0
    pz: float = 0.0
    p_data: float = 0.0
    p_meas: float = 0.0

    def __post_init__(self):
        if self.kind not in ("depolarizing", "independent_xz", "phenomenological"):
            raise ValueError(f"unknown noise model {self.kind!r}")
        for name in ("p", "px", "pz", "p_data", "p_meas"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")

    @classmethod
    def depolarizing(cls, p: float) -> "NoiseModel":
        return cls("depolarizing", p=p)

    @classmethod
    def independent_xz(cls, px: float, pz: float) -> "NoiseModel":
        return cls("independent_xz", px=px, pz=pz)

    @classmethod
    def phenomenological(cls, p_data: float, p_meas: float) -> "NoiseModel":
        return cls("phenomenological", p_data=p_data, p_meas=p_meas)

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        kind = d["model"]
        if kind == "depolarizing":
            return cls.depolarizing(d["p"])
        if kind == "independent_xz":
            return cls.independent_xz(d["px"], d["pz"])
        if kind == "phenomenological":
            return cls.phenomenological(d["p_data"], d.get("p_meas", 0.0))
        raise ValueError(f"unknown noise model {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "depolarizing":
            return {"model": "depolarizing", "p": self.p}
        if self.kind == "independent_xz":
            return {"model": "independent_xz", "px": self.px, "pz": self.pz}
        return {"model": "phenomenological", "p_data": self.p_data, "p_meas": self.p_meas}

    @property
    def rate(self) -> float:
        """Headline physical error rate (the sweep/reporting axis)."""
        if self.kind == "depolarizing":
            return self.p
        if self.kind == "independent_xz":
            return max(self.px, self.pz)
        return self.p_data

    def marginal(self, error_type: str) -> float:
        """Per-qubit flip probability of one error type (X or Z)."""
        if self.kind == "depolarizing":
            return 2.0 * self.p / 3.0     # X or Y, resp. Z or Y
        if self.kind == "independent_xz":
            return self.px if error_type.upper() == "X" else self.pz
        return self.p_data

    def with_rate(self, value: float) -> "NoiseModel":
        if self.kind == "depolarizing":
            return NoiseModel.depolarizing(value)
        if self.kind == "independent_xz":
            return NoiseModel.independent_xz(value, value)
        return NoiseModel.phenomenological(value, self.p_meas)


def shot_rng(seed: int, shot_index: int) -> np.random.Generator:
    """Independent, platform-stable stream for one shot (Philox keyed by
    seed and shot index)."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, shot_index & 0xFFFFFFFFFFFFFFFF],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_error(model: NoiseModel, n: int, rng: np.random.Generator) -> tuple[BinVector, BinVector]:
    """Draw one (X-part, Z-part) error pair on n qubits.

    Depolarizing applies X, Y, or Z with probability p/3 each (Y sets
    both parts); the other models flip the parts independently.
    """
    if model.kind == "depolarizing":
        u = rng.random(n)
        third = model.p / 3.0
        ex = u < 2.0 * third
        ez = (u >= third) & (u < model.p)
    elif model.kind == "independent_xz":
        ex = rng.random(n) < model.px
        ez = rng.random(n) < model.pz
    else:
        ex = rng.random(n) < model.p_data
        ez = rng.random(n) < model.p_data
    return (
        BinVector(n, tuple(int(i) for i in np.flatnonzero(ex))),
        BinVector(n, tuple(int(i) for i in np.flatnonzero(ez))),
    )


def sample_meas_flips(model: NoiseModel, n_checks: int, rng: np.random.Generator) -> BinVector:
    """Measurement-flip vector for one syndrome extraction.

    All-zero unless the model is phenomenological.
    """
    if model.kind != "phenomenological" or model.p_meas == 0.0:
        return BinVector.zeros(n_checks)
    flips = rng.random(n_checks) < model.p_meas
    return BinVector(n_checks, tuple(int(i) for i in np.flatnonzero(flips)))
