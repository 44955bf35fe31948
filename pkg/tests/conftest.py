from __future__ import annotations

import numpy as np
import pytest

from symbreak import _kernels
from symbreak.codes import CssCode, build_code, load_registry
from symbreak.gf2 import BinMatrix


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    _kernels.warmup()


@pytest.fixture(scope="session")
def registry():
    return load_registry()


@pytest.fixture(scope="session")
def bb72(registry):
    return build_code("bb_72_12_6", registry)


@pytest.fixture(scope="session")
def hp13(registry):
    return build_code("hp_13_1_3", registry)


@pytest.fixture(scope="session")
def steane():
    h = BinMatrix(3, 7, [(3, 4, 5, 6), (1, 2, 5, 6), (0, 2, 4, 6)])
    return CssCode(h, h, label="steane_7_1_3", claimed_distance=3)


@pytest.fixture(scope="session")
def c4_code():
    hx = BinMatrix(1, 4, [(0, 1, 2, 3)])
    hz = BinMatrix(2, 4, [(0, 1), (2, 3)])
    return CssCode(hx, hz, label="c4_4_1_2", claimed_distance=2)


@pytest.fixture(scope="session")
def gadget_code():
    """Two qubits, one Z-check and one X-check on both: the minimal
    degeneracy example (two single-qubit errors share the syndrome)."""
    return CssCode(BinMatrix(1, 2, [(0, 1)]), BinMatrix(1, 2, [(0, 1)]),
                   label="gadget_2q")


def dense_rng_matrix(rng: np.random.Generator, rows: int, cols: int, density: float) -> BinMatrix:
    return BinMatrix.from_dense((rng.random((rows, cols)) < density).astype(np.uint8))
