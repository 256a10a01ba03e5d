import warnings
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from ising_peel import maps as mp
from ising_peel.curves import DomainError, critical_point
from ising_peel.enumeration import brute_force_count, eval_z

NU = 2.0
T = 0.7 * critical_point(NU).t_c


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def _path_of_two_edges():
    """Tree a - v - b seen as a 4-gon: its outer face visits v twice."""
    m = mp.IsingMap([2, 0, 3, 1], [1, 0, 3, 2], [""] * 4, 0, "++--")
    for i, d in enumerate(m.outer_darts()):
        m.spin[d] = m.boundary[i]
    m.mono = m.monochromatic_edges()
    return m


# -- structure and validation


@pytest.mark.parametrize("p, q", [(1, 1), (2, 0), (0, 2)])
def test_edge_maps_validate(p, q):
    m = mp.edge_map(p, q)
    assert mp.validate_map(m).ok
    assert m.n_faces == 0
    assert m.monochromatic_edges() == (0 if p == q else 1)


def test_edge_map_needs_perimeter_two():
    with pytest.raises(ValueError):
        mp.edge_map(2, 2)


def test_pinched_boundary_is_rejected():
    rep = mp.validate_map(_path_of_two_edges())
    assert not rep
    assert "boundary not simple" in rep.failures


def test_broken_involution_is_rejected():
    e = mp.edge_map(1, 1)
    bad = mp.IsingMap(list(e.nxt), [0, 1], list(e.spin), e.root, e.boundary)
    assert any("involution" in f for f in mp.validate_map(bad).failures)


def test_non_dobrushin_word_is_rejected():
    m = mp.edge_map(1, 1)
    m.boundary = "-+"
    assert any("Dobrushin" in f for f in mp.validate_map(m).failures)


def test_stale_monochromatic_count_is_reported():
    m = mp.sample_boltzmann(3, 3, T, NU, seed=4)
    m.mono = m.monochromatic_edges() + 1
    assert "stored monochromatic edge count is stale" in mp.validate_map(m).failures


@pytest.mark.parametrize("p, q", [(1, 1), (3, 1), (2, 4), (6, 6)])
def test_sampled_maps_always_validate(p, q):
    rng = np.random.Generator(np.random.Philox(17))
    for _ in range(150):
        m = mp.sample_boltzmann(p, q, T, NU, rng=rng)
        rep = mp.validate_map(m)
        assert rep.ok, rep.failures
        assert (m.p, m.q) == (p, q)
        assert (m.n_faces - p - q) % 2 == 0


def test_json_round_trip_preserves_the_map():
    m = mp.sample_boltzmann(4, 2, T, NU, seed=21)
    back = mp.IsingMap.from_json(m.to_json())
    assert back == m
    assert hash(back) == hash(m)
    assert back.n_faces == m.n_faces
    assert back.mono == m.monochromatic_edges()
    assert mp.validate_map(back).ok


def test_distinct_samples_compare_unequal():
    rng = np.random.Generator(np.random.Philox(0))
    maps = [mp.sample_boltzmann(4, 2, T, NU, rng=rng) for _ in range(30)]
    sizes = {m.n_faces for m in maps}
    assert len(sizes) > 1
    a, b = next((a, b) for a in maps for b in maps if a.n_faces != b.n_faces)
    assert a != b


# -- sampler law


@pytest.mark.parametrize("p, q", [(1, 1), (0, 2), (2, 0)])
def test_zero_weight_gives_the_edge_map(p, q):
    assert mp.sample_boltzmann(p, q, 0.0, NU, seed=3) == mp.edge_map(p, q)


def test_zero_weight_has_nothing_to_sample_at_larger_perimeter():
    with pytest.raises(ValueError, match="vanishes"):
        mp.sample_boltzmann(3, 1, 0.0, NU, seed=1)


def test_sampler_rejects_weights_at_or_above_critical():
    with pytest.raises(DomainError):
        mp.BoltzmannSampler(NU, critical_point(NU).t_c)
    with pytest.raises(DomainError):
        mp.BoltzmannSampler(1.0, 0.01)


def test_face_and_colour_histogram_matches_exhaustive_counts():
    t = 0.5 * critical_point(NU).t_c
    runs = 20_000
    rng = np.random.Generator(np.random.Philox(2))
    seen = Counter()
    for _ in range(runs):
        m = mp.sample_boltzmann(2, 0, t, NU, rng=rng)
        seen[m.n_faces, m.monochromatic_edges()] += 1
    z = eval_z(2, 0, t, NU, n_terms=40).value
    cells = [(n, k, c * t ** n * NU ** k / z)
             for n in range(4) for k, c in sorted(brute_force_count(2, 0, n).items())]
    observed = [seen[n, k] for n, k, _ in cells]
    expected = [runs * w for *_, w in cells]
    rest = runs - sum(observed)
    observed.append(rest)
    expected.append(runs - sum(expected))
    assert stats.chisquare(observed, expected).pvalue > 1e-3


# -- interfaces


def test_edge_map_interface_has_length_one():
    s = mp.interface_stats(mp.edge_map(1, 1))
    assert s.eta == 1 and s.boundary_touches == 0


@pytest.mark.parametrize("p, q", [(2, 0), (0, 2)])
def test_monochromatic_boundary_has_no_interface(p, q):
    s = mp.interface_stats(mp.edge_map(p, q))
    assert s.eta is None and s.reason == "no interface"


def test_interface_lengths_by_seed():
    # regression snapshot for the Philox stream
    etas = [mp.interface_stats(mp.sample_boltzmann(6, 6, T, NU, seed=s)).eta for s in range(6)]
    assert etas == [2, 6, 5, 4, 3, 5]


def test_interface_is_shorter_than_the_edge_count():
    rng = np.random.Generator(np.random.Philox(5))
    for _ in range(50):
        m = mp.sample_boltzmann(5, 3, T, NU, rng=rng)
        s = mp.interface_stats(m)
        assert 1 <= s.eta <= len(m) // 2
        assert 2 <= s.vertices <= s.eta + 1     # the walk may revisit a vertex


# -- local-limit balls


def test_ball_of_radius_zero_is_the_root():
    b = mp.explore_ball(NU, radius=0)
    assert b.vertices == {0: 0} and b.theta == 0 and not b.triangles


def test_ball_distances_stay_within_the_radius():
    b = mp.explore_ball(NU, radius=2, seed=1)
    assert b.vertices[0] == 0
    assert max(b.vertices.values()) <= 2
    assert b.theta is not None and b.theta <= b.steps
    assert not b.truncated


def test_balls_are_reproducible():
    a, b = mp.explore_ball(8.0, radius=2, seed=5), mp.explore_ball(8.0, radius=2, seed=5)
    assert a.events == b.events and a.vertices == b.vertices


def test_high_temperature_balls_never_jump_to_infinity():
    for s in range(20):
        b = mp.explore_ball(NU, radius=2, seed=s)
        assert b.infinite_jumps == 0 and b.bottleneck_step is None and b.second is None


def test_bottlenecks_grow_more_frequent_at_low_temperature():
    runs = 150
    freq = [np.mean([mp.explore_ball(nu, radius=2, seed=s).bottleneck_step is not None
                     for s in range(runs)]) for nu in (7.0, 8.0, 10.0)]
    assert freq[0] < freq[1] < freq[2]


def test_bottleneck_starts_a_second_component():
    b = next(b for b in (mp.explore_ball(10.0, radius=2, seed=s) for s in range(50))
             if b.bottleneck_step is not None)
    assert b.infinite_jumps >= 1
    assert b.second is not None


def test_ball_arguments_are_checked():
    with pytest.raises(ValueError):
        mp.explore_ball(NU, radius=-1)
    with pytest.raises(DomainError):
        mp.explore_ball(8.0, law="mixed")
    with pytest.raises(DomainError):
        mp.explore_ball(NU, law="P_p")
