import numpy as np
import pytest

from sparselab.corpus import structural_corpus
from sparselab.dyadic import Cube, DyadicGrid, StepFunction, average
from sparselab.sparse import (SparseFamily, anchored_chain, apply_sparse,
                              apply_sparse_square, band_index,
                              deep_descendant_set, generate_sparse,
                              layer_decompose, power_decompose, random_pruned,
                              serialize_decomposition, split_by_average,
                              stopping_cubes, validate_sparsity)


def ones(depth):
    g = DyadicGrid(depth)
    return StepFunction(g, np.ones(g.n_cells))


def eighth_indicator(depth):
    g = DyadicGrid(depth)
    vals = np.zeros(g.n_cells)
    vals[: g.n_cells // 8] = 1.0
    return StepFunction(g, vals)


class TestSparsityValidation:
    def test_exact_eighth_passes(self):
        g = DyadicGrid(3)
        fam = SparseFamily(g, (Cube(0, 0), Cube(3, 0)))
        report = validate_sparsity(fam)
        assert report.passed and report.worst_fraction == 0.125

    def test_half_fails(self):
        g = DyadicGrid(3)
        loose = SparseFamily(g, (Cube(0, 0), Cube(1, 0)), eta=0.5)
        report = validate_sparsity(loose, check_eta=0.125)
        assert not report.passed
        assert report.worst_fraction == 0.5
        assert report.worst_cube == Cube(0, 0)

    def test_antichain_fraction_zero(self):
        g = DyadicGrid(4)
        fam = SparseFamily(g, tuple(Cube(4, i) for i in range(16)))
        report = validate_sparsity(fam)
        assert report.passed and report.worst_fraction == 0.0

    def test_constructor_rejects_violation(self):
        g = DyadicGrid(3)
        with pytest.raises(ValueError):
            SparseFamily(g, (Cube(0, 0), Cube(1, 0)))

    def test_json_roundtrip(self):
        g = DyadicGrid(4)
        fam = SparseFamily(g, (Cube(0, 0), Cube(3, 1), Cube(4, 9)))
        back = SparseFamily.from_json(fam.to_json())
        assert back.cubes == fam.cubes and back.eta == fam.eta


class TestGenerators:
    def test_stopping_constant_function(self):
        fam = stopping_cubes(ones(5), ratio=2.0)
        assert fam.cubes == (Cube(0, 0),)

    def test_random_density_zero_is_root(self):
        fam = random_pruned(DyadicGrid(6), density=0.0, seed=3)
        assert fam.cubes == (Cube(0, 0),)

    def test_random_passes_validator(self):
        fam = random_pruned(DyadicGrid(10), density=0.1, seed=7)
        assert validate_sparsity(fam).passed
        assert len(fam) > 3

    def test_stopping_spiky_function_builds_chain(self):
        g = DyadicGrid(9)
        vals = np.zeros(g.n_cells)
        vals[0] = float(g.n_cells)
        fam = stopping_cubes(StepFunction(g, vals), ratio=8.0)
        assert len(fam) >= 3
        assert validate_sparsity(fam).passed

    def test_chain_strategy(self):
        fam = generate_sparse(DyadicGrid(9), "chain:step=3", seed=5)
        levels = sorted(q.level for q in fam)
        assert levels == [0, 3, 6, 9]
        assert validate_sparsity(fam).passed

    def test_low_step_chain_rejected(self):
        with pytest.raises(ValueError):
            anchored_chain(DyadicGrid(6), seed=0, step=2)

    def test_seeded_trials_all_sparse(self):
        for i, depth in enumerate((4, 6, 8, 10, 12)):
            g = DyadicGrid(depth)
            density = min(0.4, 100.0 / g.n_cells)
            fam = random_pruned(g, density, seed=50 + i)
            assert validate_sparsity(fam).passed


class TestOperators:
    def test_root_only_constant(self):
        fam = SparseFamily(DyadicGrid(3), (Cube(0, 0),))
        tf = apply_sparse(fam, ones(3))
        assert np.all(tf.values == 1.0)

    def test_empty_family(self):
        fam = SparseFamily(DyadicGrid(3), ())
        tf = apply_sparse(fam, ones(3))
        assert np.all(tf.values == 0.0)

    def test_two_cube_example(self):
        g = DyadicGrid(3)
        fam = SparseFamily(g, (Cube(0, 0), Cube(3, 0)))
        f = eighth_indicator(3)
        tf = apply_sparse(fam, f)
        assert tf.values[0] == pytest.approx(1.0 + 0.125)
        assert np.all(tf.values[1:] == pytest.approx(0.125))

    def test_square_single_cube_equals_linear(self):
        fam = SparseFamily(DyadicGrid(4), (Cube(2, 1),))
        rng = np.random.default_rng(0)
        f = StepFunction(DyadicGrid(4), rng.random(16))
        assert np.allclose(apply_sparse_square(fam, f).values,
                           apply_sparse(fam, f).values)

    def test_square_two_cube_example(self):
        g = DyadicGrid(3)
        fam = SparseFamily(g, (Cube(0, 0), Cube(3, 0)))
        sf = apply_sparse_square(fam, eighth_indicator(3))
        assert sf.values[0] == pytest.approx(np.sqrt(1.0 + 1.0 / 64.0))
        assert np.all(sf.values[1:] == pytest.approx(0.125))

    def test_linearity_and_monotonicity(self):
        g = DyadicGrid(6)
        rng = np.random.default_rng(1)
        fam = random_pruned(g, 0.2, seed=9)
        f_vals = rng.random(64)
        g_vals = f_vals + rng.random(64)
        f, fg = StepFunction(g, f_vals), StepFunction(g, g_vals)
        t_f = apply_sparse(fam, f).values
        assert np.allclose(apply_sparse(fam, f.scaled(2.5)).values, 2.5 * t_f,
                           rtol=1e-12)
        assert np.all(apply_sparse(fam, fg).values >= t_f * (1 - 1e-12))


class TestBands:
    def test_band_examples(self):
        assert band_index(0.2, 4) == 1       # 1/16 < 1/5 <= 1/4
        assert band_index(0.25, 4) == 1      # right-closed boundary
        assert band_index(0.3, 2) == 1       # 1/4 < 0.3 <= 1/2
        assert band_index(1.0, 2) == 0
        assert band_index(3.0, 2) == -2

    def test_exact_powers_right_closed(self):
        for k in range(-5, 20):
            assert band_index(2.0 ** (-k), 2) == k
            assert band_index(4.0 ** (-k), 4) == k

    def test_split_drops_zero_average(self):
        g = DyadicGrid(3)
        fam = SparseFamily(g, (Cube(0, 0), Cube(3, 0), Cube(3, 7)))
        f = eighth_indicator(3)
        split = split_by_average(fam, f, base=4)
        assert Cube(3, 7) in split.dropped_zero_average
        covered = {q for band in split.bands.values() for q in band}
        assert covered == {Cube(0, 0), Cube(3, 0)}

    def test_each_cube_in_one_band(self):
        g = DyadicGrid(8)
        rng = np.random.default_rng(2)
        f = StepFunction(g, rng.random(256))
        fam = random_pruned(g, 0.2, seed=12)
        split = split_by_average(fam, f, base=2)
        seen = []
        for k, band in split.bands.items():
            for q in band:
                avg = average(f, q)
                assert 2.0 ** (-k - 1) < avg <= 2.0 ** (-k)
                seen.append(q)
        assert len(seen) == len(set(seen))
        assert len(seen) + len(split.dropped_zero_average) == len(fam)


class TestLayers:
    def test_chain_peeling(self):
        g = DyadicGrid(6)
        cubes = (Cube(0, 0), Cube(3, 0), Cube(6, 0))
        layered = layer_decompose(g, cubes)
        assert layered.layers == ((Cube(0, 0),), (Cube(3, 0),), (Cube(6, 0),))
        e0 = layered.exceptional[Cube(0, 0)]
        assert e0.measure == pytest.approx(1.0 - 1.0 / 8.0)

    def test_antichain_single_layer(self):
        g = DyadicGrid(4)
        cubes = (Cube(2, 0), Cube(2, 2), Cube(3, 15))
        layered = layer_decompose(g, cubes)
        assert layered.n_layers() == 1
        for q in cubes:
            a, b = g.cell_span(q)
            assert layered.exceptional[q].measure == pytest.approx((b - a) / 16.0)

    def test_brute_force_maximality(self):
        # peel maximal cubes by hand and compare layer assignments
        rng = np.random.default_rng(3)
        for depth in (4, 6, 8):
            g = DyadicGrid(depth)
            fam = random_pruned(g, min(0.4, 100.0 / g.n_cells), seed=depth)
            layered = layer_decompose(g, fam.cubes)
            remaining = set(fam.cubes)
            v = 0
            while remaining:
                maximal = {q for q in remaining
                           if not any(o != q and o.contains(q) for o in remaining)}
                assert set(layered.layers[v]) == maximal
                remaining -= maximal
                v += 1
            assert v == layered.n_layers()

    def test_exceptional_sets_disjoint(self):
        g = DyadicGrid(8)
        fam = random_pruned(g, 0.3, seed=4)
        f = ones(8)
        split = split_by_average(fam, f, base=4)
        for band in split.bands.values():
            layered = layer_decompose(g, band)
            total = np.zeros(g.n_cells)
            union = np.zeros(g.n_cells, dtype=bool)
            for q in band:
                total += layered.exceptional[q].mask
                a, b = g.cell_span(q)
                union[a:b] = True
            assert np.all(total <= 1.0)
            assert total.sum() <= union.sum()


class TestDeepDescendants:
    def test_chain_u1(self):
        g = DyadicGrid(6)
        layered = layer_decompose(g, (Cube(0, 0), Cube(3, 0), Cube(6, 0)))
        q1 = deep_descendant_set(layered, Cube(0, 0), 1)
        a, b = g.cell_span(Cube(3, 0))
        assert q1.measure == pytest.approx((b - a) / 64.0)

    def test_u_past_layers_empty(self):
        g = DyadicGrid(6)
        layered = layer_decompose(g, (Cube(0, 0), Cube(3, 0)))
        assert deep_descendant_set(layered, Cube(0, 0), 5).is_empty()

    def test_u_zero_rejected(self):
        g = DyadicGrid(6)
        layered = layer_decompose(g, (Cube(0, 0),))
        with pytest.raises(ValueError):
            deep_descendant_set(layered, Cube(0, 0), 0)

    def test_measure_bound_on_corpus(self):
        for fam, f in structural_corpus(40):
            split = split_by_average(fam, f, base=4)
            for band in split.bands.values():
                layered = layer_decompose(fam.grid, band)
                for q in band:
                    qm = q.measure
                    for u in (1, 2, 3):
                        qu = deep_descendant_set(layered, q, u)
                        assert qu.measure <= 8.0 ** (-u) * qm + 1e-15


class TestPowerDecomposition:
    def test_single_cube(self):
        g = DyadicGrid(4)
        fam = SparseFamily(g, (Cube(1, 1),))
        f = ones(4)
        decomp = power_decompose(fam, f)
        assert list(decomp.bands) == [0]
        band = decomp.bands[0]
        a, b = g.cell_span(Cube(1, 1))
        assert band.exceptional[Cube(1, 1)].measure == pytest.approx((b - a) / 16.0)
        assert np.all(band.counting.values[a:b] == 1.0)
        assert band.support.measure == pytest.approx(0.5)

    def test_good_control_on_corpus(self):
        worst = 1.0
        for fam, f in structural_corpus(60):
            decomp = power_decompose(fam, f)
            for band in decomp.bands.values():
                for q in band.cubes:
                    avg = average(f, q)
                    a, b = fam.grid.cell_span(q)
                    masked = f.values * band.exceptional[q].mask
                    avg_e = float(masked[a:b].sum()) / (b - a)
                    ratio = avg_e / avg
                    worst = min(worst, ratio)
                    assert ratio >= 5.0 / 8.0 - 1e-12
        assert worst <= 1.0

    def test_counting_level_sets_decay(self):
        for fam, f in structural_corpus(60):
            decomp = power_decompose(fam, f)
            for band in decomp.bands.values():
                bm = band.counting.values
                support = band.support.measure
                for t in (0.5, 1.0, 2.0, 2.5, 3.0, 4.0):
                    level = float(np.mean(bm > t))
                    assert level <= 8.0 ** (-np.floor(t) + 1) * support + 1e-15

    def test_square_reconstruction(self):
        for fam, f in structural_corpus(30):
            sf = apply_sparse_square(fam, f)
            decomp = power_decompose(fam, f)
            total = np.zeros(fam.grid.n_cells)
            for band in decomp.bands.values():
                for q in band.cubes:
                    a, b = fam.grid.cell_span(q)
                    total[a:b] += average(f, q) ** 2
            assert np.allclose(total, sf.values ** 2, rtol=1e-12, atol=1e-300)

    def test_counting_equals_indicator_sum(self):
        g = DyadicGrid(6)
        fam = anchored_chain(g, seed=3)
        f = StepFunction(g, 0.4 * np.ones(64))
        decomp = power_decompose(fam, f)
        band = decomp.bands[band_index(0.4, 2)]
        expect = np.zeros(64)
        for q in band.cubes:
            a, b = g.cell_span(q)
            expect[a:b] += 1
        assert np.array_equal(band.counting.values, expect)


class TestExceptionalIntegralBound:
    def test_eq_bound_on_corpus(self):
        # int_Q f <= (8/3) int_{E_Q} f on every layered band instance
        for fam, f in structural_corpus(60):
            split = split_by_average(fam, f, base=4)
            for band in split.bands.values():
                layered = layer_decompose(fam.grid, band)
                for q in band:
                    a, b = fam.grid.cell_span(q)
                    whole = float(f.values[a:b].sum())
                    masked = float((f.values * layered.exceptional[q].mask).sum())
                    assert whole <= (8.0 / 3.0) * masked * (1 + 1e-12)


class TestSerialization:
    def test_decomposition_tree(self):
        g = DyadicGrid(6)
        fam = anchored_chain(g, seed=1)
        f = ones(6)
        split = split_by_average(fam, f, base=4)
        layered = {k: layer_decompose(g, band) for k, band in split.bands.items()}
        text = serialize_decomposition(layered)
        assert '"0"' in text and "exceptional_hex" in text
