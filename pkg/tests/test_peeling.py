import math
import warnings

import numpy as np
import pytest

from ising_peel import peeling as pl
from ising_peel.curves import MU, NU_C, DomainError, critical_point
from ising_peel.enumeration import build_count_table, eval_z
from ising_peel.generating import ProviderRangeError

# expected (dX, dY) for each (kind, spin) of the half-plane law, at position k
HALF_PLANE_INCREMENTS = {
    ("C", "+"): lambda k: (2, -1),
    ("C", "-"): lambda k: (0, 1),
    ("L", "+"): lambda k: (1, -k - 1),
    ("L", "-"): lambda k: (0, -k),
    ("R", "+"): lambda k: (1 - k, -1),
    ("R", "-"): lambda k: (-k, 0),
}


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


@pytest.fixture(scope="module", params=[2.0, NU_C, 8.0], ids=["high", "critical", "low"])
def half_plane(request):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return pl.step_law("P_inf", request.param)


# -- events


@pytest.mark.parametrize("args, label", [
    (("L", "+", 2, 1), "R+_inf-2"),
    (("L", "-", 3, -1), "R-_inf+3"),
    (("R", "+", 0, 1), "R+_inf-0"),
    (("C", "−"), "C-"),
])
def test_infinite_positions_reduce_to_canonical_labels(args, label):
    assert pl.PeelEvent.make(*args).label == label


def test_finite_positions_past_the_corner_change_side():
    assert pl.PeelEvent.make("R", "-", 5, p=3, q=4).label == "L-_2"
    assert pl.PeelEvent.make("L", "+", 5, p=3, q=4).label == "R+_2"
    with pytest.raises(ValueError):
        pl.PeelEvent.make("R", "-", 9, p=3, q=4)


@pytest.mark.parametrize("bad", [("X", "+"), ("C", "*"), ("L", "+", -1), ("C", "+", 0, 1)])
def test_malformed_events_are_rejected(bad):
    with pytest.raises(ValueError):
        pl.PeelEvent(*bad)


# -- half-plane laws


def test_half_plane_increments_follow_the_event_table(half_plane):
    for f in half_plane.families:
        if f.jump:
            continue
        rule = HALF_PLANE_INCREMENTS[(f.kind, f.spin)]
        ks = range(f.k_start, f.k_stop)
        assert list(zip(f.dx, f.dy)) == [rule(k) for k in ks]
        if f.unbounded:
            far = f.k_stop + 17
            assert f.increment(far) == rule(far)


def test_flipped_law_mirrors_the_half_plane_law():
    d, h = pl.step_law("P_inf", 2.0), pl.step_law("Phat_inf", 2.0)
    mirror = {"C": "C", "L": "R", "R": "L"}
    flip = {"+": "-", "-": "+"}
    for f in h.families:
        (g,) = d.families_of(mirror[f.kind], flip[f.spin], 0)
        np.testing.assert_allclose(f.head, g.head, rtol=1e-14)
        np.testing.assert_array_equal(f.dx, g.dy)
        np.testing.assert_array_equal(f.dy, g.dx)


def test_sampled_increments_match_their_families():
    d = pl.step_law("P_inf", NU_C)
    s = d.sample(pl.philox(3), 200_000)
    for i in np.unique(s.family):
        f = d.families[i]
        sel = s.family == i
        want = np.array([f.increment(int(k)) for k in s.k[sel]])
        np.testing.assert_array_equal(np.column_stack([s.dx[sel], s.dy[sel]]), want)
    assert np.all(s.k < pl.K_CAP)
    assert d.resamples >= 0


def test_sampling_is_reproducible_by_seed():
    d = pl.step_law("P_inf", 2.0)
    a, b = d.sample(pl.philox(5), 1000), d.sample(pl.philox(5), 1000)
    np.testing.assert_array_equal(a.k, b.k)
    np.testing.assert_array_equal(a.family, b.family)


def test_half_plane_laws_have_unit_mass(half_plane):
    assert half_plane.total_mass == pytest.approx(1.0, abs=1e-12)
    assert half_plane.within_eps
    assert float(pl.half_plane_mass(half_plane.nu)) == pytest.approx(1.0, abs=1e-9)


def test_infinite_jumps_exist_only_in_the_low_temperature_phase(half_plane):
    jumps = half_plane.family_mass(infinity=-1) + half_plane.family_mass(infinity=1)
    if half_plane.nu <= NU_C:
        assert jumps == 0.0
        assert float(pl.bottleneck_parameter(half_plane.nu)) == 0.0
    else:
        assert jumps > 0.01
        assert jumps == pytest.approx(float(pl.bottleneck_parameter(half_plane.nu)), rel=1e-6)
        assert all(f.mass > 0 for f in half_plane.families if f.jump)


def test_drift_is_symmetric_at_criticality():
    ex, ey = pl.step_law("P_inf", NU_C).mean_increment()
    assert ex == pytest.approx(MU, abs=2e-3)
    assert ey == pytest.approx(MU, abs=2e-3)
    assert float(pl.order_parameter(NU_C)) == pytest.approx(2 * MU, rel=1e-12)


@pytest.mark.parametrize("nu", [2.0, NU_C])
def test_order_parameter_matches_the_law_mean(nu):
    assert sum(pl.step_law("P_inf", nu).mean_increment()) == pytest.approx(
        float(pl.order_parameter(nu)), abs=1e-3)


def test_drift_signs_in_the_high_temperature_phase():
    ex, ey = pl.step_law("P_inf", 2.0).mean_increment()
    hx, hy = pl.step_law("Phat_inf", 2.0).mean_increment()
    assert ex > 0.2 and ey < -0.2
    assert hx < -0.2 and hy > 0.2


def test_one_sided_drift_approaches_the_half_plane_drift():
    limit = np.array(pl.step_law("P_inf", 2.0).mean_increment())
    gaps = [np.abs(np.array(pl.step_law("P_p", 2.0, p).mean_increment()) - limit).max()
            for p in (10, 100, 1000)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.01


def test_one_sided_law_keeps_its_mass():
    for p in (0, 5, 40, 200):
        d = pl.step_law("P_p", 2.0, p)
        assert d.mass_defect < 1e-3
        assert d.total_mass == pytest.approx(1.0, abs=1e-9)


def test_zero_temperature_aggregates_near_their_limits():
    agg = pl.zero_temperature_aggregates(1e4)
    for key, want in pl.ZERO_TEMPERATURE_LIMITS.items():
        assert agg[key] == pytest.approx(want, abs=1e-3), key


def test_increment_probability_lookup():
    d = pl.step_law("P_inf", 2.0)
    assert pl.half_plane_increment_prob(2.0, 0, 1) == pytest.approx(d.family_mass("C", "-"))
    assert pl.half_plane_increment_prob(2.0, 5, 5) == 0.0


# -- finite laws


def test_finite_law_matches_series_values():
    nu = 2.0
    t = 0.7 * critical_point(nu).t_c
    d = pl.step_law("P_pq", nu, 2, 2, t=t)

    pts = {pq: eval_z(*pq, t, nu, n_terms=40) for pq in [(2, 2), (2, 3), (4, 1)]}
    z = {pq: e.value for pq, e in pts.items()}
    # truncated sums: compare up to the certified errors of the three values
    rel = sum(e.error / e.value for e in pts.values())
    assert d.prob(pl.PeelEvent("C", "-")) == pytest.approx(nu * t * z[2, 3] / z[2, 2], rel=rel)
    assert d.prob(pl.PeelEvent("C", "+")) == pytest.approx(t * z[4, 1] / z[2, 2], rel=rel)
    assert rel < 1e-4
    assert d.total_mass == pytest.approx(1.0, abs=1e-12)


class _TableSource:
    """z_{P,Q}(t) from truncated exact counts, for a t small enough that truncation is invisible."""

    def __init__(self, nu, t, size, n_max):
        tab = build_count_table(size, size, n_max)
        self.pref = t
        self.z = np.zeros((size + 1, size + 1))
        for P in range(size + 1):
            for Q in range(size + 1 - P):
                coeffs = tab.poly(P, Q, nu)
                self.z[P, Q] = sum(c * t ** n for n, c in enumerate(coeffs))

    def H(self, P, Q):
        return self.z[P, Q]

    inner = H


@pytest.mark.parametrize("p_rem, q_rem, peeled",
                         [(1, 0, "-"), (0, 1, "-"), (1, 0, "+"), (1, 1, "-"), (2, 0, "-"), (0, 2, "+"), (1, 2, "-")])
def test_finite_events_exhaust_the_loop_equation(p_rem, q_rem, peeled):
    nu, t = 2.0, 1e-3
    src = _TableSource(nu, t, 8, 10)
    start, events = pl.finite_event_arrays(src, p_rem, q_rem, peeled, nu=nu)
    total = sum(float(np.sum(weights)) for _, _, _, weights, _, _ in events)
    edge_map = {(1, 1): 1.0, (0, 2): nu, (2, 0): nu}
    total += edge_map.get(start, 0.0) / src.H(*start)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_flipped_finite_law_without_plus_edges_falls_back():
    a = pl.step_law("Phat_pq", 2.0, 0, 4)
    b = pl.step_law("P_pq", 2.0, 0, 4)
    assert [f.head.tolist() for f in a.families] == [f.head.tolist() for f in b.families]


@pytest.mark.parametrize("args, err", [
    (("P_pq", 1.0, 2, 2), DomainError),
    (("P_pq", 0.5, 2, 2), DomainError),
    (("P_pq", 2.0, 2, 0), ValueError),
    (("P_pq", 2.0, 2, None), ValueError),
    (("P_p", 2.0, None), ValueError),
    (("no_such_law", 2.0), ValueError),
])
def test_step_law_argument_errors(args, err):
    with pytest.raises(err):
        pl.step_law(*args)


def test_finite_law_rejects_t_above_critical():
    with pytest.raises(DomainError):
        pl.step_law("P_pq", 2.0, 2, 2, t=1.1 * critical_point(2.0).t_c)


# -- comparison relation


def test_comparison_relation_reproduces_the_targeted_row():
    d = pl.step_law("P_pq", NU_C, 3, 3, targeted=True)
    assert pl.doob_transition(3, 3, 0, -1) == pytest.approx(d.prob(pl.PeelEvent("C", "-")), rel=1e-12)


def test_comparison_relation_on_the_asymptotic_route():
    d = pl.step_law("P_pq", NU_C, 300, 300, targeted=True)
    assert pl.doob_transition(300, 300, 0, -1) == pytest.approx(d.prob(pl.PeelEvent("C", "-")), rel=1e-3)


def test_targeted_law_far_from_the_corner_has_full_head():
    d = pl.step_law("P_pq", NU_C, 1000, 1000, targeted=True)
    assert d.approx
    assert d.head_mass == pytest.approx(1.0, abs=1e-3)


def test_comparison_relation_breaks_down_near_the_corner():
    with pytest.raises(pl.RelationBreakdown, match="breaks down"):
        pl.doob_transition(5, 5, 4, 0)
    with pytest.raises(pl.RelationBreakdown):
        pl.doob_transition(5, 5, 0, 5)


def test_comparison_relation_needs_criticality_off_the_exact_range():
    with pytest.raises(ProviderRangeError):
        pl.doob_transition(200, 200, 0, -1, nu=2.0)


def test_diagonal_ratio_is_one_without_a_jump():
    r = pl.diagonal_ratio_check(8, 0, 0)
    assert r["exact"] == pytest.approx(1.0, abs=1e-14)
    assert r["relative_error"] < 1e-12


# -- paths and stop times


def test_fixed_length_paths():
    a = pl.simulate("P_inf", 2.0, n_steps=500, seed=4)
    b = pl.simulate("P_inf", 2.0, n_steps=500, seed=4)
    assert a.n_steps == 500 and a.stop_time is None
    np.testing.assert_array_equal(a.X, b.X)
    assert a.X[0] == a.Y[0] == 0
    assert len(a.events()) == 500


def test_stop_time_never_arrives_without_jumps():
    path = pl.simulate("P_inf", 2.0, until=0, max_steps=2000, seed=1)
    assert path.truncated and path.stop_time is None


def test_low_temperature_path_stops_at_a_jump():
    path = pl.simulate("P_inf", 8.0, until=0, seed=2)
    assert path.stop_time == path.n_steps
    assert np.isinf(path.X[-1])


def test_finite_chain_reaches_the_edge_map():
    path = pl.simulate("P_pq", 2.0, until=0, max_steps=10_000, seed=6, p=2, q=2)
    assert path.stop_time is not None
    assert path.p0 == 2 and path.q0 == 2
    assert min(2 + path.X[-1], 2 + path.Y[-1]) <= 0 or path.families[-1] < 0


def test_first_step_stop_frequency_matches_the_closed_form():
    times = pl.sample_stop_times(8.0, m=0, runs=100_000, seed=9)
    p1 = float(np.mean(times == 1))
    want = float(pl.geometric_rate(8.0, 0))
    se = math.sqrt(want * (1 - want) / times.size)
    assert abs(p1 - want) < 4 * se
    assert times.min() >= 1


def test_stop_times_need_the_low_temperature_phase():
    with pytest.raises(DomainError):
        pl.sample_stop_times(2.0, runs=10)
    assert float(pl.geometric_rate(2.0)) == 0.0


# -- barrier


def test_barrier_profile_at_zero():
    eps = 0.3
    assert float(pl.f_eps(0, eps)) == pytest.approx((2 * math.log(2) ** (1 + eps)) ** 0.75, rel=1e-15)


def test_path_on_the_drift_never_crosses():
    n = np.arange(1000)
    r = pl.barrier_diagnostic((MU * n, MU * n), 0.1, 1.0)
    assert r.tau is None and r.before_stop is None


def test_barrier_crossing_is_dated():
    n = np.arange(100, dtype=float)
    X = MU * n
    X[40:] -= 500
    r = pl.barrier_diagnostic((X, MU * n), 0.1, 2.0, stop_time=60)
    assert r.tau == 40 and r.before_stop is True
    assert pl.barrier_diagnostic((X, MU * n), 0.1, 2.0, stop_time=30).before_stop is False


def test_barrier_arguments_are_checked():
    with pytest.raises(ValueError):
        pl.barrier_diagnostic(([0.0], [0.0]), 0.0, 2.0)
    with pytest.raises(ValueError):
        pl.barrier_diagnostic(([0.0], [0.0]), 0.1, 0.5)


# -- mixed schedule


def test_minus_phase_ends_when_y_drops_below_minus_one():
    s = pl.MixedSchedule()
    assert s.update(0, -1) == "-"
    assert s.update(0, -2) == "+"
    assert s.tau_l == [2]
    assert s.update(-1, -2) == "+"
    assert s.update(-2, -2) == "-"
    assert s.tau_r == [0, 4] and s.alternations == 1


def test_restart_reading_changes_the_plus_threshold():
    restart, running = pl.MixedSchedule(), pl.MixedSchedule(restart=False)
    for s in (restart, running):
        s.update(3, -2)
    assert restart.threshold() == -1
    assert running.threshold() == -4


def test_mixed_runs_alternate_at_high_temperature():
    runs = [pl.run_mixed(2.0, alternations=5, seed=s) for s in range(200)]
    done = [r for r in runs if not r.truncated]
    assert len(done) >= 0.99 * len(runs)
    for r in done:
        assert len(r.tau_r) == 5
        assert all(a < b for a, b in zip(r.tau_l, r.tau_r))


def test_mixed_schedule_is_for_the_high_temperature_phase():
    with pytest.raises(DomainError):
        pl.run_mixed(NU_C)


@pytest.mark.parametrize("law, p, q", [("P_pq", 1, 1), ("P_pq", 0, 2), ("Phat_pq", 2, 0), ("Phat_pq", 1, 1)])
def test_two_gons_close_without_renormalising(law, p, q):
    d = pl.step_law(law, 2.0, p, q)
    assert d.terminal > 0
    assert d.mass_defect < 1e-12
