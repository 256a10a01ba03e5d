import warnings

import numpy as np
import pytest

from ising_peel import asymptotics as asy
from ising_peel.survival import tm_survival


@pytest.fixture(scope="module")
def run():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return tm_survival(200, 200, 2000, seed=3, barrier=(0.1, (1, 2, 4)))


def test_stop_times_are_censored_at_the_horizon(run):
    assert run.n_steps == 400
    assert run.times.min() >= 1
    assert run.times.max() <= run.n_steps + 1
    assert run.times.shape == (2000,)


def test_rejection_bound_holds(run):
    assert run.bound_violations == 0
    assert run.proposals > 0
    assert run.approx


def test_table_columns(run):
    rows = run.table((0.5, 1.0, 2.0))
    assert [r[0] for r in rows] == [0.5, 1.0, 2.0]
    emp = [r[1] for r in rows]
    assert emp == sorted(emp, reverse=True)
    for t, e, model in rows:
        assert model == asy.scaling_cdf(1.0, t)
        assert e == run.survival(t)


def test_small_boundary_is_near_the_scaling_limit(run):
    # p = 200 still carries a visible finite-size bias; the tight check lives in the acceptance run
    for _, emp, model in run.table((0.5, 1.0, 2.0)):
        assert abs(emp - model) < 0.12


def test_barrier_crossings_get_rarer_with_height(run):
    probs = [run.barrier_probability(x) for x in (1, 2, 4)]
    assert probs[0] > probs[1] > probs[2] > 0


def test_runs_are_reproducible():
    a = tm_survival(40, 30, 200, seed=8)
    b = tm_survival(40, 30, 200, seed=8)
    np.testing.assert_array_equal(a.times, b.times)
    assert a.q == 30


def test_start_below_the_level_stops_at_once():
    r = tm_survival(10, 10, 50, m=10, seed=0)
    assert np.all(r.times == 0)
