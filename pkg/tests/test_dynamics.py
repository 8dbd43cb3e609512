import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ibrdyn.dynamics import (
    FieldKind,
    IBRField,
    ReplicatorField,
    field_function,
    ibr_field,
    ibr_switch_rate,
    mean_field_from_rates,
    ppi_average_switch_rate,
    ppi_realized_switch_rate,
    replicator_field,
    two_strategy_polynomial,
    velocity,
)
from ibrdyn.game import average_payoffs, negate, permute, permute_state, vertex
from ibrdyn.presets import get_preset, symmetric_rps
from oracles import ibr_field_loop, ibr_rate_loop, ppi_realized_field_loop, replicator_loop
from strategies import game_and_state, games, interior_states, permutations

P = np.polynomial.Polynomial


class TestSwitchRates:
    def test_trivial_examples(self):
        assert ibr_switch_rate([0.3, 0.7], [[1, 1], [0, 0]], 0, 1) == 0
        assert ibr_switch_rate([0.5, 0.5], [[0, 0], [1, 1]], 0, 1) == 0.5

    def test_matches_loop(self, rng):
        for _ in range(20):
            a = rng.normal(size=(3, 3))
            x = rng.dirichlet(np.ones(3))
            for i in range(3):
                for j in range(3):
                    if i != j:
                        assert ibr_switch_rate(x, a, i, j) == pytest.approx(ibr_rate_loop(x, a, i, j), abs=1e-15)

    def test_diagonal_rejected(self):
        for rate in (ibr_switch_rate, ppi_realized_switch_rate, ppi_average_switch_rate):
            with pytest.raises(ValueError):
                rate([0.5, 0.5], np.eye(2), 1, 1)

    def test_ppi_realized_example1_weights(self):
        # A 2-player earning 2 who sees a 1-player earning 4 gains 2; one earning 3 gains 1.
        a = [[4, 1], [3, 2]]
        x = np.array([0.5, 0.5])
        from_own_2 = x[0] * x[0] * x[1] * (4 - 2)
        from_own_3 = x[0] * x[0] * x[0] * (4 - 3)
        assert from_own_2 == 2 * from_own_3
        assert ppi_realized_switch_rate(x, a, 1, 0) == pytest.approx(from_own_2 + from_own_3, abs=1e-15)

    def test_ppi_realized_constant_game(self):
        assert ppi_realized_switch_rate([0.2, 0.3, 0.5], np.full((3, 3), 7.0), 0, 2) == 0

    @given(st.floats(0.5, 5.0), st.integers(2, 4).flatmap(lambda n: st.tuples(
        st.lists(st.lists(st.booleans(), min_size=n, max_size=n), min_size=n, max_size=n), interior_states(n))))
    def test_two_payoff_ppi_is_k_times_ibr(self, k, data):
        mask, x = data
        a = np.where(np.array(mask), 1.0 + k, 1.0)
        n = a.shape[0]
        for i in range(n):
            for j in range(n):
                if i != j:
                    assert ppi_realized_switch_rate(x, a, i, j) == pytest.approx(
                        k * ibr_switch_rate(x, a, i, j), abs=1e-12)

    def test_ppi_average(self):
        assert ppi_average_switch_rate([0.4, 0.6], [[10, 0], [3, 3]], 1, 0) == pytest.approx(0.4)
        rps = get_preset("rps-standard")
        for i in range(3):
            for j in range(3):
                if i != j:
                    assert ppi_average_switch_rate(np.full(3, 1 / 3), rps, i, j) == pytest.approx(0, abs=1e-15)

    @given(game_and_state())
    def test_ppi_average_recomputed(self, data):
        a, x = data
        pi, _ = average_payoffs(x, a)
        n = len(x)
        for i in range(n):
            for j in range(n):
                if i != j:
                    assert ppi_average_switch_rate(x, a, i, j) == pytest.approx(x[j] * max(0, pi[j] - pi[i]))

    @given(game_and_state())
    def test_rate_bounds(self, data):
        a, x = data
        n = len(x)
        for i in range(n):
            for j in range(n):
                if i != j:
                    r = ibr_switch_rate(x, a, i, j)
                    assert -1e-15 <= r <= x[j] + 1e-15


class TestMeanField:
    def test_zero_rate(self):
        assert np.all(mean_field_from_rates([0.2, 0.3, 0.5], lambda i, j: 0.0) == 0)

    @given(game_and_state(2, 5))
    def test_ibr_rates_give_ibr_field(self, data):
        a, x = data
        v = mean_field_from_rates(x, lambda i, j: ibr_switch_rate(x, a, i, j))
        assert np.max(np.abs(v - ibr_field(x, a))) <= 1e-12

    @given(game_and_state(2, 5))
    def test_schlag_equivalence(self, data):
        a, x = data
        v = mean_field_from_rates(x, lambda i, j: ppi_realized_switch_rate(x, a, i, j))
        assert np.max(np.abs(v - replicator_field(x, a))) <= 1e-10

    def test_ppi_loop_oracle(self, rng):
        a = rng.normal(size=(4, 4))
        x = rng.dirichlet(np.ones(4))
        assert np.allclose(ppi_realized_field_loop(x, a), replicator_field(x, a), atol=1e-12)


class TestIBRField:
    def test_example1_value(self):
        assert ibr_field([0.25, 0.75], [[4, 1], [3, 2]])[0] == pytest.approx(-0.09375, abs=1e-15)

    def test_vertices_are_fixed(self, rng):
        a = rng.normal(size=(4, 4))
        for i in range(4):
            assert np.all(ibr_field(vertex(4, i), a) == 0)
            assert np.all(replicator_field(vertex(4, i), a) == 0)

    def test_standard_rps_factorization(self):
        x, y, z = 0.5, 0.3, 0.2
        expect = np.array([z - y, x - z, y - x]) * np.array([x, y, z]) * (1 - x * y - x * z - y * z)
        got = ibr_field([x, y, z], get_preset("rps-standard"))
        assert np.allclose(got, expect, atol=1e-15)
        assert np.allclose(got, ibr_field_loop([x, y, z], get_preset("rps-standard").tolist()), atol=1e-15)

    def test_example2_replicator_vs_ibr(self):
        a = [[10, 0], [3, 3]]
        assert replicator_field([0.4, 0.6], a)[0] == pytest.approx(0.24)
        assert ibr_field([0.4, 0.6], a)[0] == pytest.approx(-0.048)

    def test_replicator_rps_center(self):
        assert np.allclose(replicator_field(np.full(3, 1 / 3), get_preset("rps-standard")), 0)

    @given(game_and_state(2, 4))
    def test_matches_quadruple_loop(self, data):
        a, x = data
        assert np.max(np.abs(ibr_field(x, a) - ibr_field_loop(x.tolist(), a.tolist()))) <= 1e-13

    @given(game_and_state(2, 5))
    def test_tangency(self, data):
        a, x = data
        for kind in FieldKind:
            assert abs(velocity(x, a, kind).sum()) <= 1e-12

    @given(game_and_state(3, 5), st.data())
    def test_face_invariance(self, data, draw):
        a, x = data
        i = draw.draw(st.integers(0, len(x) - 1))
        x = x.copy()
        x[i] = 0
        x /= x.sum()
        assert ibr_field(x, a)[i] == 0.0

    @given(game_and_state(2, 4))
    def test_ordinal_invariance(self, data):
        a, x = data
        base = ibr_field(x, a)
        assert np.max(np.abs(ibr_field(x, a**3 + 5 * a) - base)) <= 1e-12
        assert np.max(np.abs(ibr_field(x, np.exp(a)) - base)) <= 1e-12

    @given(game_and_state(2, 4))
    def test_time_reversal(self, data):
        a, x = data
        assert np.array_equal(ibr_field(x, negate(a)), -ibr_field(x, a))

    @given(st.integers(2, 4).flatmap(lambda n: st.tuples(games(n, n), interior_states(n), permutations(n))))
    def test_permutation_equivariance(self, data):
        a, x, sigma = data
        lhs = ibr_field(permute_state(x, sigma), permute(a, sigma))
        rhs = permute_state(ibr_field(x, a), sigma)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12

    @given(st.floats(-3, 3), st.floats(0.25, 4), st.integers(2, 4).flatmap(lambda n: st.tuples(
        st.lists(st.lists(st.booleans(), min_size=n, max_size=n), min_size=n, max_size=n), interior_states(n))))
    def test_two_payoff_games_are_scaled_replicator(self, v, k, data):
        mask, x = data
        a = np.where(np.array(mask), v + k, v)
        assume(len(np.unique(a)) == 2)
        assert np.max(np.abs(ibr_field(x, a) - replicator_field(x, a) / k)) <= 1e-12

    @given(st.floats(0.1, 10), st.floats(0.1, 10), interior_states(3))
    def test_symmetric_rps_identity(self, a_, b_, x):
        # Ordinal invariance makes every symmetric RPS game share the standard IBR field.
        g = symmetric_rps(a_, b_)
        std = ReplicatorField(symmetric_rps())
        factor = 1 - x[0] * x[1] - x[0] * x[2] - x[1] * x[2]
        assert np.max(np.abs(ibr_field(x, g) - factor * std(x))) <= 1e-12

    @given(game_and_state(2, 4))
    def test_analytic_jacobians(self, data):
        a, x = data
        for f in (IBRField(a), ReplicatorField(a)):
            h = 1e-6
            fd = np.column_stack([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(len(x))])
            assert np.allclose(f.jacobian(x), fd, atol=1e-7)

    def test_kind_parse(self):
        assert FieldKind.parse("IBR") is FieldKind.IBR
        assert isinstance(field_function(np.eye(2), "replicator"), ReplicatorField)
        with pytest.raises(ValueError):
            FieldKind.parse("smith")


class TestTwoStrategyPolynomial:
    def test_d9(self):
        x = P([0, 1])
        want = x * (1 - x) * (x + (1 - x) ** 2)
        got = two_strategy_polynomial([[3, 2], [2, 1]])
        assert np.allclose(got, np.pad(want.coef, (0, 5 - want.coef.size)), atol=1e-12)

    def test_c1(self):
        x = P([0, 1])
        want = x * (1 - x) * (-2 * x**2 + 4 * x - 1)
        assert np.allclose(two_strategy_polynomial([[4, 2], [1, 3]]), want.coef, atol=1e-12)

    def test_all_ties(self):
        assert np.all(two_strategy_polynomial([[2, 2], [2, 2]]) == 0)

    def test_replicator_kind_is_cubic(self):
        c = two_strategy_polynomial([[10, 0], [3, 3]], FieldKind.REPLICATOR)
        assert abs(c[4]) <= 1e-10

    def test_wrong_size(self):
        with pytest.raises(ValueError):
            two_strategy_polynomial(np.eye(3))
