import math

import numpy as np
import pytest
from hypothesis import given, settings

from ibrdyn.analysis import iterated_elimination, search_rest_points
from ibrdyn.dynamics import FieldKind, IBRField
from ibrdyn.flow import (
    CLOSED_ORBIT,
    CONVERGED,
    INWARD_SPIRAL,
    OUTWARD_SPIRAL,
    REACHED_BOUNDARY,
    StepUnderflowError,
    backward_return,
    classify_orbit,
    integrate,
    lyapunov_H,
    orbit_classify,
    poincare_returns,
    read_trajectory_csv,
    survival_probe,
    time_reversal_gap,
)
from ibrdyn.game import vertex
from ibrdyn.presets import TABLE5, get_preset
from oracles import ibr_field_loop, rk4_fixed
from strategies import game_and_state


class TestIntegrate:
    def test_example1_below_repeller_goes_to_zero(self):
        traj = integrate(get_preset("example1"), "ibr", [0.25, 0.75], 200)
        assert traj.final[0] < 1e-6

    def test_vertex_is_constant(self):
        traj = integrate(TABLE5["A1"], "ibr", vertex(3, 2), 10)
        assert np.all(traj.states == vertex(3, 2).x)

    def test_against_fixed_step_oracle(self):
        a = get_preset("rps-standard").tolist()
        want = rk4_fixed(lambda x: ibr_field_loop(x, a), [0.5, 0.3, 0.2], 5.0, 1e-3)
        got = integrate(a, "ibr", [0.5, 0.3, 0.2], 5.0).final
        assert np.max(np.abs(got - want)) <= 1e-6

    def test_grid_and_csv_round_trip(self):
        traj = integrate(TABLE5["B2"], "replicator", [0.5, 0.3, 0.2], 3.0, samples=31)
        assert traj.times.shape == (31,) and np.allclose(traj.times, np.linspace(0, 3, 31))
        assert np.all(np.diff(traj.times) > 0)
        t, s = read_trajectory_csv(traj.to_csv())
        assert np.array_equal(t, traj.times) and np.array_equal(s, traj.states)
        assert traj.to_csv().splitlines()[0] == "t,x1,x2,x3"

    @settings(max_examples=15, deadline=None)
    @given(game_and_state(3, 4))
    def test_conservation_and_faces(self, data):
        a, x = data
        x = x.copy()
        x[-1] = 0.0
        x /= x.sum()
        traj = integrate(a, "ibr", x, 5.0, samples=50)
        assert np.max(np.abs(traj.states.sum(axis=1) - 1)) <= 1e-9
        assert np.all(traj.states[:, -1] == 0.0)
        assert np.all(traj.states >= 0)

    def test_underflow_gives_partial(self):
        with pytest.raises(StepUnderflowError) as err:
            integrate(TABLE5["A1"], "ibr", [0.5, 0.3, 0.2], 1.0, hmin=1.0)
        assert err.value.partial.states.shape == (1, 3)

    def test_bad_horizon(self):
        with pytest.raises(ValueError):
            integrate(TABLE5["A1"], "ibr", [0.5, 0.3, 0.2], 0.0)


class TestLyapunov:
    def test_values(self):
        c = np.full(3, 1 / 3)
        assert lyapunov_H(c, c) == 0
        want = (math.log(1.5) + math.log(0.9) + math.log(0.6)) / 3
        assert lyapunov_H([0.5, 0.3, 0.2], c) == pytest.approx(want, abs=1e-15)
        assert want == pytest.approx(-0.070, abs=1e-3)
        with pytest.raises(ValueError):
            lyapunov_H([0.5, 0.5, 0.0], c)

    def test_conserved_along_symmetric_rps(self):
        traj = integrate(get_preset("rps-symmetric?a=2&b=5"), "ibr", [0.5, 0.3, 0.2], 100)
        h = [lyapunov_H(s, np.full(3, 1 / 3)) for s in traj.states]
        assert max(abs(v - h[0]) for v in h) <= 1e-6


class TestPoincare:
    def test_c2_closed_orbit(self):
        rets = poincare_returns(TABLE5["C2"], "ibr", [0.5, 0.25, 0.25], section=(1, 2), max_returns=4)
        d = rets.distances()
        assert len(d) >= 3 and max(d) - min(d) <= 1e-6
        assert orbit_classify(rets).tag == CLOSED_ORBIT

    def test_a1_outward(self):
        rets = poincare_returns(TABLE5["A1"], "ibr", [0.36, 0.32, 0.32], max_returns=4)
        d = rets.distances()
        assert len(d) >= 3 and np.all(np.diff(d) > 0)
        assert orbit_classify(rets).tag == OUTWARD_SPIRAL

    def test_b3_inward(self):
        rets = poincare_returns(TABLE5["B3"], "ibr", [0.5, 0.25, 0.25], max_returns=4)
        assert np.all(np.diff(rets.distances()) < 0)
        assert orbit_classify(rets).tag == INWARD_SPIRAL

    def test_zeeman_center_is_stable_focus(self):
        verdict = classify_orbit(get_preset("zeeman-Z"), "ibr", [0.36, 0.32, 0.32], max_returns=4,
                                 center=[1 / 3] * 3)
        assert verdict.tag == INWARD_SPIRAL

    def test_a2_converges_to_vertex_one(self):
        verdict = classify_orbit(get_preset("example3-A2"), "ibr", [0.2, 0.3, 0.5], horizon=500)
        assert verdict.tag == CONVERGED
        assert np.allclose(verdict.rest_point, [1, 0, 0])

    def test_partial_flag(self):
        rets = poincare_returns(TABLE5["C2"], "ibr", [0.5, 0.25, 0.25], max_returns=50, horizon=20)
        assert rets.partial and 1 <= len(rets.crossings) < 50

    def test_needs_three_strategies(self):
        with pytest.raises(ValueError):
            poincare_returns(get_preset("example1"), "ibr", [0.5, 0.5])

    def test_forward_backward_symmetry_for_self_negating_game(self):
        c = search_rest_points(TABLE5["C2"]).interior()[0].location.x
        x0 = [0.5, 0.25, 0.25]
        fwd = poincare_returns(TABLE5["C2"], "ibr", x0, section=(1, 2), max_returns=1, center=c)
        back = backward_return(TABLE5["C2"], "ibr", x0, section=(1, 2), center=c)
        assert abs(fwd.crossings[0].offset) <= 1e-6
        assert abs(back.crossings[0].offset) <= 1e-6
        assert np.max(np.abs(fwd.crossings[0].state - back.crossings[0].state)) <= 1e-6

    def test_boundary_verdict_without_known_rest_points(self):
        rets = poincare_returns(get_preset("example3-A2"), "ibr", [0.2, 0.3, 0.5], horizon=500)
        verdict = orbit_classify(rets, rest_points=[])
        assert verdict.tag == REACHED_BOUNDARY and verdict.face == (0,)


class TestProbes:
    def test_time_reversal(self):
        assert time_reversal_gap(TABLE5["A2"], "ibr", [0.4, 0.3, 0.3], 5.0) <= 1e-5
        assert time_reversal_gap(TABLE5["A2"], "replicator", [0.4, 0.3, 0.3], 5.0) <= 1e-5

    def test_survival(self):
        assert survival_probe(get_preset("example3-A2"), "ibr", 2, starts=5) == 0.0
        assert survival_probe(get_preset("example3-A4"), "ibr", 1, starts=5) == 1.0
        starts = [[0.3, 0.3, 0.4], [0.5, 0.2, 0.3], [0.1, 0.3, 0.6]]
        assert survival_probe(get_preset("example3-A3"), "ibr", 1, starts=starts) == 0.0

    def test_a2_log_gap_eventually_increasing(self):
        traj = integrate(get_preset("example3-A2"), "ibr", [0.2, 0.3, 0.5], 200, samples=2000)
        s = traj.states
        late = s[:, 2] < 1e-3
        assert late.any()
        first = int(np.argmax(late))
        d = np.log(s[first:, 0]) - np.log(s[first:, 1])
        assert np.all(np.diff(d) > 0)

    @pytest.mark.parametrize("name", ["example3-A1", "example3-A2", "table1-D1", "table1-W3"])
    def test_elimination_survivors_persist(self, name):
        a = get_preset(name)
        survivors = iterated_elimination(a).survivors
        x0 = np.full(a.n, 1 / a.n)
        final = integrate(a, "ibr", x0, 200, samples=2).final
        eliminated = set(range(a.n)) - set(survivors)
        for j in eliminated:
            assert final[j] < 1e-3
        assert any(final[i] > 1e-3 for i in survivors)
