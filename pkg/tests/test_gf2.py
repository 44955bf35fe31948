import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symbreak.gf2 import (
    BinMatrix,
    BinVector,
    commutes,
    kernel_basis,
    matvec,
    rank,
    read_alist,
    solve_constrained,
    write_alist,
)


def dense_matvec(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (a @ v) % 2


@st.composite
def bin_matrices(draw, max_rows=12, max_cols=14):
    rows = draw(st.integers(1, max_rows))
    cols = draw(st.integers(1, max_cols))
    bits = draw(st.lists(st.integers(0, 1), min_size=rows * cols, max_size=rows * cols))
    return BinMatrix.from_dense(np.array(bits).reshape(rows, cols))


class TestMatvec:
    def test_zero_vector_maps_to_zero(self):
        m = BinMatrix(3, 5, [(0, 1), (2,), (3, 4)])
        assert matvec(m, BinVector.zeros(5)).weight == 0

    def test_single_qubit_error_on_bb_code_weight_three(self, bb72):
        # every qubit participates in three checks of each type
        for q in (0, 17, 71):
            s = matvec(bb72.hz, BinVector(72, (q,)))
            assert s.weight == 3

    def test_matches_dense_reference(self):
        rng = np.random.default_rng(7)
        a = (rng.random((20, 30)) < 0.3).astype(np.uint8)
        v = (rng.random(30) < 0.5).astype(np.uint8)
        got = matvec(BinMatrix.from_dense(a), BinVector.from_dense(v))
        assert np.array_equal(got.to_dense(), dense_matvec(a, v))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            matvec(BinMatrix(2, 3, [(0,), (1,)]), BinVector.zeros(4))

    @settings(max_examples=60, deadline=None)
    @given(bin_matrices(), st.data())
    def test_linearity(self, m, data):
        bits1 = data.draw(st.lists(st.integers(0, 1), min_size=m.cols, max_size=m.cols))
        bits2 = data.draw(st.lists(st.integers(0, 1), min_size=m.cols, max_size=m.cols))
        v1, v2 = BinVector.from_dense(bits1), BinVector.from_dense(bits2)
        assert matvec(m, v1 ^ v2).support == (matvec(m, v1) ^ matvec(m, v2)).support


class TestRank:
    def test_identity(self):
        assert rank(BinMatrix.from_dense(np.eye(5, dtype=int))) == 5

    def test_duplicate_rows(self):
        assert rank(BinMatrix(2, 6, [(0, 3), (0, 3)])) == 1

    def test_bb72_rank(self, bb72):
        # k = 72 - 2*30 = 12
        assert rank(bb72.hx) == 30
        assert rank(bb72.hz) == 30

    @settings(max_examples=60, deadline=None)
    @given(bin_matrices())
    def test_rank_equals_transpose_rank(self, m):
        assert rank(m) == rank(m.transpose())

    def test_bounds(self):
        m = BinMatrix(4, 3, [(0,), (1,), (0, 1), (2,)])
        assert 0 <= rank(m) <= 3


class TestKernel:
    def test_identity_has_trivial_kernel(self):
        assert kernel_basis(BinMatrix.from_dense(np.eye(4, dtype=int))) == []

    def test_parity_kernel(self):
        basis = kernel_basis(BinMatrix(1, 2, [(0, 1)]))
        assert len(basis) == 1 and basis[0].support == (0, 1)

    def test_bb72_kernel_size(self, bb72):
        assert len(kernel_basis(bb72.hz)) == 72 - 30

    @settings(max_examples=40, deadline=None)
    @given(bin_matrices())
    def test_kernel_vectors_annihilate_and_are_independent(self, m):
        basis = kernel_basis(m)
        assert len(basis) == m.cols - rank(m)
        for v in basis:
            assert matvec(m, v).weight == 0
        if basis:
            stacked = BinMatrix(len(basis), m.cols, [v.support for v in basis])
            assert rank(stacked) == len(basis)


class TestSolveConstrained:
    def test_homogeneous(self):
        m = BinMatrix(2, 4, [(0, 1), (1, 2, 3)])
        sol = solve_constrained(m, BinVector.zeros(2))
        assert sol is not None and sol.weight == 0

    def test_identity_solve(self):
        m = BinMatrix.from_dense(np.eye(5, dtype=int))
        s = BinVector(5, (0, 4))
        assert solve_constrained(m, s).support == (0, 4)

    def test_random_full_row_rank_system(self):
        rng = np.random.default_rng(12)
        while True:
            a = (rng.random((8, 16)) < 0.4).astype(np.uint8)
            m = BinMatrix.from_dense(a)
            if rank(m) == 8:
                break
        s = BinVector.from_dense((rng.random(8) < 0.5).astype(np.uint8))
        e = solve_constrained(m, s)
        assert e is not None
        assert matvec(m, e).support == s.support

    def test_infeasible_returns_none(self):
        m = BinMatrix(2, 2, [(0, 1), (0, 1)])
        assert solve_constrained(m, BinVector(2, (0,))) is None

    def test_pivot_order_must_be_permutation(self):
        m = BinMatrix(1, 3, [(0, 1, 2)])
        with pytest.raises(ValueError):
            solve_constrained(m, BinVector(1, ()), pivot_order=[0, 1])

    def test_nonpivot_columns_stay_zero(self):
        # rank-1 system over 3 columns: only the first pivot (in order) is used
        m = BinMatrix(1, 3, [(0, 1, 2)])
        sol = solve_constrained(m, BinVector(1, (0,)), pivot_order=[2, 0, 1])
        assert sol.support == (2,)


class TestCommutes:
    def test_css_pair(self, bb72):
        assert commutes(bb72.hz, bb72.hx)

    def test_counterexample(self):
        assert not commutes(BinMatrix(1, 2, [(0,)]), BinMatrix(1, 2, [(0, 1)]))


class TestAlist:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        m = BinMatrix.from_dense((rng.random((9, 13)) < 0.25).astype(np.uint8))
        path = tmp_path / "m.alist"
        write_alist(m, path)
        assert read_alist(path) == m

    def test_registry_alist_round_trip(self, tmp_path, hp13):
        path = tmp_path / "hz.alist"
        write_alist(hp13.hz, path)
        assert read_alist(path) == hp13.hz

    def test_format_header(self, tmp_path):
        m = BinMatrix(2, 3, [(0, 1), (2,)])
        path = tmp_path / "t.alist"
        write_alist(m, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "3 2"          # cols rows
        assert lines[1] == "1 2"          # max col/row degree
