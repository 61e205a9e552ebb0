import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from windlmp.scenarios import (ScenarioError, WindScenario, expected_trajectory, load_scenarios,
                               make_scenario_set, reweight, scale, uncertainty_sweep)


def test_rts24_wind_values(rts24_wind):
    assert len(rts24_wind) == 3
    assert [s.trajectory[2] for s in rts24_wind] == [36, 48, 27]
    assert rts24_wind.probabilities.sum() == 1.0


def test_rts24_wind_expected_first_period(rts24_wind):
    assert expected_trajectory(rts24_wind)[0] == pytest.approx(0.6 * 8 + 0.2 * 11 + 0.2 * 1)
    assert expected_trajectory(rts24_wind)[0] == pytest.approx(7.2)


def test_single_scenario():
    s = make_scenario_set([WindScenario((1.0, 2.0), 1.0)])
    assert np.array_equal(expected_trajectory(s), [1.0, 2.0])


def test_probability_sum_error():
    with pytest.raises(ScenarioError, match="sum"):
        make_scenario_set([WindScenario((1.0,), 0.5), WindScenario((2.0,), 0.4)])


def test_normalize():
    s = make_scenario_set([WindScenario((1.0,), 0.5), WindScenario((2.0,), 0.5 * 0.8)],
                          normalize=True)
    assert s.probabilities.sum() == pytest.approx(1.0, abs=1e-12)


def test_negative_probability():
    with pytest.raises(ScenarioError, match="negative"):
        WindScenario((1.0,), -0.1)


def test_sweep_examples():
    s = uncertainty_sweep([8, 21, 36, 9], 50)
    assert s.scenarios[1].trajectory[2] == 54
    assert s.scenarios[2].trajectory[2] == 18
    z = uncertainty_sweep([8, 21, 36, 9], 0)
    assert z.scenarios[0].trajectory == z.scenarios[1].trajectory == z.scenarios[2].trajectory
    low = uncertainty_sweep([8, 21, 36, 9], 100).scenarios[2].trajectory
    assert low == (0.0, 0.0, 0.0, 0.0)


def test_sweep_range():
    with pytest.raises(ScenarioError):
        uncertainty_sweep([1.0], 101)
    with pytest.raises(ScenarioError):
        uncertainty_sweep([1.0], -1)


def test_symmetric_sweep_expectation():
    s = uncertainty_sweep([8, 21, 36, 9], 30, probs=(0.0, 0.5, 0.5))
    assert expected_trajectory(s) == pytest.approx([8, 21, 36, 9])


@settings(max_examples=100, deadline=None)
@given(forecast=st.lists(st.floats(0, 500), min_size=1, max_size=6), x=st.floats(0, 100),
       p=st.floats(0, 1))
def test_sweep_brackets_forecast_and_sums_to_one(forecast, x, p):
    probs = (p, (1 - p) / 2, 1 - p - (1 - p) / 2)
    s = uncertainty_sweep(forecast, x, probs)
    f, hi, lo = (np.array(sc.trajectory) for sc in s)
    assert np.all(lo <= f) and np.all(f <= hi)
    assert abs(s.probabilities.sum() - 1.0) <= 1e-12


def test_reweight_and_scale(rts24_wind):
    r = reweight(rts24_wind, (0.2, 0.4, 0.4))
    assert r.trajectories.tolist() == rts24_wind.trajectories.tolist()
    sc = scale(rts24_wind, 2.0)
    assert sc.trajectories[0, 2] == 72.0


def test_load_bundled_by_name():
    assert len(load_scenarios("tiny2_scenarios")) == 2
