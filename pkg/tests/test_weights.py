import numpy as np
import pytest

from sparselab.dyadic import DyadicGrid
from sparselab.weights import (MAX_DYNAMIC_RANGE, Weight, a1_constant,
                               a_infinity_constant, ap_constant, dual_weight,
                               generate_weight, parse_weight_spec,
                               reverse_holder_ratio, weight_from_spec)


def w_of(depth, values):
    return Weight(DyadicGrid(depth), values)


def random_weights(depth=7, count=12, seed=21):
    rng = np.random.default_rng(seed)
    g = DyadicGrid(depth)
    out = []
    for _ in range(count):
        out.append(Weight(g, np.exp(rng.normal(0, 1.5, g.n_cells))))
    return out


class TestWeightType:
    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            w_of(2, [1.0, 0.0, 1.0, 1.0])

    def test_records_dynamic_range(self):
        w = w_of(2, [4.0, 1.0, 2.0, 1.0])
        assert w.dynamic_range == 4.0

    def test_rejects_huge_range(self):
        vals = np.ones(4)
        vals[0] = MAX_DYNAMIC_RANGE * 10
        with pytest.raises(ValueError):
            w_of(2, vals)


class TestApConstant:
    def test_constant_one(self):
        assert ap_constant(w_of(3, np.ones(8)), 2.0) == 1.0

    def test_scale_invariance(self):
        w = w_of(3, [4.0, 1.0, 2.0, 1.0, 1.0, 3.0, 1.0, 2.0])
        for p in (1.5, 2.0, 3.0):
            base = ap_constant(w, p)
            assert ap_constant(w.scaled(7.3), p) == pytest.approx(base, rel=1e-9)

    def test_depth1_hand_value(self):
        # cubes: [0,1) with <w> = 5/2, <w^{-1}> = 5/8; halves give 1
        w = w_of(1, [4.0, 1.0])
        assert ap_constant(w, 2.0) == pytest.approx(25.0 / 16.0)

    def test_monotone_in_p(self):
        for w in random_weights(6, 8):
            a15 = ap_constant(w, 1.5)
            a2 = ap_constant(w, 2.0)
            a3 = ap_constant(w, 3.0)
            assert a3 <= a2 * (1 + 1e-12) and a2 <= a15 * (1 + 1e-12)

    def test_requires_p_above_one(self):
        with pytest.raises(ValueError):
            ap_constant(w_of(2, np.ones(4)), 1.0)


class TestA1Constant:
    def test_constant(self):
        assert a1_constant(w_of(3, np.ones(8))) == 1.0

    def test_depth1_hand_value(self):
        assert a1_constant(w_of(1, [2.0, 1.0])) == pytest.approx(1.5)

    def test_at_least_one(self):
        for w in random_weights(6, 8, seed=3):
            assert a1_constant(w) >= 1.0 - 1e-12

    def test_dominates_ap(self):
        # A_p constants decrease from the A_1 bound as p grows
        for w in random_weights(5, 6, seed=4):
            assert ap_constant(w, 2.0) <= a1_constant(w) * (1 + 1e-9)


class TestAInfinity:
    def test_constant(self):
        assert a_infinity_constant(w_of(3, np.ones(8))) == pytest.approx(1.0)

    def test_depth1_hand_value(self):
        # root: int max(1.5, w) = (2 + 1.5)/2 = 1.75 over w(Q) = 1.5
        w = w_of(1, [2.0, 1.0])
        assert a_infinity_constant(w) == pytest.approx(7.0 / 6.0)

    def test_ordered_below_ap(self):
        for w in random_weights(6, 10, seed=5):
            ainf = a_infinity_constant(w)
            assert 1.0 - 1e-12 <= ainf
            assert ainf <= ap_constant(w, 2.0) * (1 + 1e-9)


class TestDualWeight:
    def test_p2_reciprocal(self):
        w = w_of(2, [4.0, 1.0, 2.0, 0.5])
        assert np.allclose(dual_weight(w, 2.0).values, 1.0 / w.values)

    def test_constant_one(self):
        w = w_of(2, np.ones(4))
        assert np.allclose(dual_weight(w, 3.0).values, 1.0)

    def test_power_arithmetic(self):
        w = w_of(2, 4.0 * np.ones(4))
        assert np.allclose(dual_weight(w, 3.0).values, 0.5)

    def test_duality_identity(self):
        # [w]_{A_p} = [sigma]_{A_p'}^{p-1} holds cube by cube
        for w in random_weights(5, 6, seed=6):
            for p in (1.5, 2.0, 3.0):
                pp = p / (p - 1)
                sigma = dual_weight(w, p)
                lhs = ap_constant(w, p)
                rhs = ap_constant(sigma, pp) ** (p - 1)
                assert lhs == pytest.approx(rhs, rel=1e-9)


class TestReverseHolder:
    def test_constant(self):
        assert reverse_holder_ratio(w_of(3, np.ones(8)), 2.0) == pytest.approx(1.0)

    def test_at_least_one(self):
        for w in random_weights(5, 6, seed=7):
            assert reverse_holder_ratio(w, 1.5) >= 1.0 - 1e-12

    def test_nondecreasing_in_r(self):
        for w in random_weights(5, 6, seed=8):
            r_values = [reverse_holder_ratio(w, r) for r in (1.1, 1.5, 2.0, 3.0)]
            assert all(b >= a * (1 - 1e-12) for a, b in zip(r_values, r_values[1:]))

    def test_calibrated_exponent_from_record(self):
        from sparselab.calibration import load_calibration
        c = load_calibration()["reverse_holder"]["c"]
        for w in random_weights(7, 10, seed=9):
            r = 1.0 + 1.0 / (c * a_infinity_constant(w))
            assert reverse_holder_ratio(w, r) <= 2.0


class TestGenerators:
    def test_constant(self):
        g = DyadicGrid(5)
        w = generate_weight(g, "constant", {"c": 1.0})
        assert np.all(w.values == 1.0)

    def test_spike_a1_grows(self):
        g = DyadicGrid(10)
        values = [a1_constant(generate_weight(g, "spike", {"j": j}))
                  for j in (2, 4, 6, 8, 10)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_cascade_theta_zero(self):
        g = DyadicGrid(6)
        w = generate_weight(g, "cascade", {"theta": 0.0}, seed=5)
        assert np.all(w.values == 1.0)

    def test_cascade_theta_one_rejected(self):
        g = DyadicGrid(6)
        with pytest.raises(ValueError):
            generate_weight(g, "cascade", {"theta": 1.0})

    def test_spike_outside_grid_rejected(self):
        g = DyadicGrid(4)
        with pytest.raises(ValueError):
            generate_weight(g, "spike", {"j": 6})

    def test_deterministic(self):
        g = DyadicGrid(8)
        a = generate_weight(g, "cascade", {"theta": 0.5}, seed=11)
        b = generate_weight(g, "cascade", {"theta": 0.5}, seed=11)
        assert np.array_equal(a.values, b.values)

    def test_power_law_clamped(self):
        g = DyadicGrid(8)
        w = generate_weight(g, "power", {"a": -0.9, "x0": 0.5}, seed=0)
        assert w.dynamic_range <= MAX_DYNAMIC_RANGE * (1 + 1e-9)

    def test_spec_parsing(self):
        assert parse_weight_spec("const:1") == ("const", {"c": 1.0})
        assert parse_weight_spec("power:a=0.5,x0=0.5") == (
            "power", {"a": 0.5, "x0": 0.5})
        assert parse_weight_spec("spike:j=8") == ("spike", {"j": 8.0})
        kind, params = parse_weight_spec("cascade:theta=0.3,seed=7")
        assert kind == "cascade" and params["seed"] == 7.0

    def test_from_spec_seed_in_string_wins(self):
        g = DyadicGrid(6)
        a = weight_from_spec(g, "cascade:theta=0.5,seed=3", seed=99)
        b = weight_from_spec(g, "cascade:theta=0.5,seed=3", seed=1)
        assert np.array_equal(a.values, b.values)


class TestSharpWeakType:
    def test_corpus_constant_bounded(self):
        # lambda^p w(Mf > lambda) <= C [w]_{A_p} ||f||^p with C ~ 1 dyadically
        from sparselab.dyadic import StepFunction, dyadic_maximal, lp_norm, weak_norm
        rng = np.random.default_rng(10)
        g = DyadicGrid(7)
        worst = 0.0
        for _ in range(40):
            w = Weight(g, np.exp(rng.normal(0, 1, g.n_cells)))
            f = StepFunction(g, rng.random(g.n_cells))
            for p in (1.5, 2.0):
                left = weak_norm(dyadic_maximal(f), w, p) ** p
                right = ap_constant(w, p) * lp_norm(f, w, p) ** p
                worst = max(worst, left / right)
        assert worst <= 1.0 + 1e-9
