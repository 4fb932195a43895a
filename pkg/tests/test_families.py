import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from vbscale import families as fam
from vbscale import gf2
from vbscale.stabilizer import Bipartition, ZCheckSystem, cmi_brute_force, cmi_rank_formula


class TestCheckerboard:
    def test_dense_packing_count(self):
        f = fam.build_checkerboard(25, 1.0)
        assert len(f.centers) == 125
        assert f.disjoint()

    def test_block_grid_count(self):
        # spacing 4 anchored at the middle: positions 4, 8, 12 on each axis
        f = fam.build_checkerboard(16, 0.5)
        assert len(f.centers) == 9
        assert f.disjoint()

    def test_single_block(self):
        assert len(fam.build_checkerboard(9, 0.0).centers) == 1

    def test_single_cross_row(self):
        f = fam.CheckerboardFamily(5, 0.0, ((2, 2),))
        d = fam.checkerboard_zsystem(f).m.to_dense()
        assert d.shape == (1, 25) and d.sum() == 5
        assert set(np.flatnonzero(d[0])) == {12, 13, 11, 17, 7}

    def test_cross_wraps_periodically(self):
        assert set(fam.cross((0, 0), 4)) == {(0, 0), (1, 0), (3, 0), (0, 1), (0, 3)}

    def test_too_small(self):
        with pytest.raises(ValueError):
            fam.build_checkerboard(2, 1.0)
        with pytest.raises(ValueError):
            fam.build_checkerboard(10, 1.5)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(3, 30), st.sampled_from([0.0, 0.3, 0.5, 0.7, 0.9, 1.0]))
    def test_disjoint_and_independent(self, l, gamma):
        f = fam.build_checkerboard(l, gamma)
        assert f.disjoint()
        sys = fam.checkerboard_zsystem(f)
        assert gf2.rank(sys.m) == len(f.centers)
        assert not sys.s.any()

    @pytest.mark.parametrize("gamma", [0.5, 0.7, 1.0])
    def test_count_tracks_power_law(self, gamma):
        for l in (10, 20, 30):
            ratio = len(fam.build_checkerboard(l, gamma).centers) / l ** (2 * gamma)
            assert 0.05 < ratio < 2.0

    def test_cmi_counts_crossing_checks(self):
        f = fam.build_checkerboard(16, 0.5)
        for c in ("vertical", "horizontal"):
            cut = fam.grid_cut(16, c)
            cmi = cmi_rank_formula(fam.checkerboard_zsystem(f).m, cut).value_bits
            assert cmi == fam.crossing_checks(f, cut) == 3

    def test_restricted_columns_recombine(self):
        f = fam.build_checkerboard(12, 0.7)
        m = fam.checkerboard_zsystem(f).m
        cut = fam.grid_cut(12)
        ma = gf2.column_restrict(m, cut.a).to_dense()
        mb = gf2.column_restrict(m, cut.b).to_dense()
        full = np.zeros((m.rows, m.cols), dtype=np.uint8)
        full[:, list(cut.a)] = ma
        full[:, list(cut.b)] = mb
        assert np.array_equal(full, m.to_dense())

    def test_slopes(self):
        sizes = [10, 15, 20, 25, 30]
        slopes = {}
        for g in (0.5, 0.7, 1.0):
            vals = [r.value_bits for _, r in fam.checkerboard_cmi_curve(g, sizes)]
            slopes[g] = fam.loglog_slope(sizes, vals)[0]
        assert abs(slopes[1.0] - 1.0) <= 0.10
        assert 0.35 <= slopes[0.5] <= 0.70
        assert 0.3 < slopes[0.5] < slopes[0.7] < slopes[1.0]

    def test_gamma_zero_is_flat(self):
        vals = [r.value_bits for _, r in fam.checkerboard_cmi_curve(0.0, [9, 15, 21, 27])]
        assert len(set(vals)) == 1

    def test_grid_cut_layout(self):
        cut = fam.grid_cut(4, "vertical")
        assert cut.a == (0, 1, 4, 5, 8, 9, 12, 13)
        assert fam.grid_cut(4, "horizontal").a == tuple(range(8))
        with pytest.raises(ValueError):
            fam.grid_cut(4, "diagonal")

    def test_single_check_is_flat(self):
        for l in (4, 7, 10):
            s, cut = fam.single_check_system(l)
            assert cmi_rank_formula(s.m, cut).value_bits == 1


class TestToric:
    @pytest.mark.parametrize("l", range(2, 9))
    def test_rank(self, l):
        lat = fam.build_toric(l)
        d = lat.plaquettes.to_dense()
        assert d.shape == (l * l, 2 * l * l)
        assert (d.sum(axis=1) == 4).all()
        assert gf2.rank(lat.plaquettes) == l * l - 1

    def test_side_ranks_even(self):
        lat = fam.build_toric(4)
        cut = lat.cut()
        assert gf2.rank(gf2.column_restrict(lat.plaquettes, cut.a)) == 11
        assert gf2.rank(gf2.column_restrict(lat.plaquettes, cut.b)) == 11

    def test_side_ranks_odd(self):
        lat = fam.build_toric(3)
        cut = lat.cut()
        assert gf2.rank(gf2.column_restrict(lat.plaquettes, cut.a)) == 8
        assert gf2.rank(gf2.column_restrict(lat.plaquettes, cut.b)) == 6

    @pytest.mark.parametrize("l", range(2, 13))
    def test_closed_form(self, l):
        assert fam.toric_cmi(l).value_bits == (2 * l - 1 if l % 2 == 0 else 2 * l)

    def test_two_by_two_brute_force(self):
        lat = fam.build_toric(2)
        rows = oracles.solutions_by_enumeration(lat.plaquettes.to_dense(), np.zeros(4))
        cut = lat.cut()
        assert oracles.mi_of_uniform_rows(rows, cut.a, cut.b) == pytest.approx(3.0)
        assert cmi_brute_force(lat.zsystem(), cut).value_bits == pytest.approx(3.0)

    def test_edge_labels(self):
        # vertex (1,1): horizontal edge is label 1 (column 0), vertical edge label 2 (column 1)
        assert fam.horizontal_edge(1, 1, 3) == 0
        assert fam.vertical_edge(1, 1, 3) == 1
        assert fam.horizontal_edge(3, 3, 3) == 2 * 9 - 2
        assert fam.horizontal_edge(4, 1, 3) == fam.horizontal_edge(1, 1, 3)

    @pytest.mark.parametrize("l", [2, 4, 6, 8])
    def test_rotated_cut_agrees(self, l):
        lat = fam.build_toric(l)
        assert cmi_rank_formula(lat.plaquettes, fam.toric_column_cut(l)).value_bits == fam.toric_cmi(l).value_bits

    def test_tableau_commutes(self):
        assert fam.build_toric(5).tableau().commutes()

    def test_too_small(self):
        with pytest.raises(ValueError):
            fam.build_toric(1)


class TestSlope:
    def test_exact_power(self):
        s, se = fam.loglog_slope([2, 4, 8], [3, 12, 48])
        assert s == pytest.approx(2.0) and se == pytest.approx(0.0, abs=1e-12)

    def test_needs_three(self):
        with pytest.raises(ValueError):
            fam.loglog_slope([2, 4], [1, 2])
