import math
from collections import Counter

import numpy as np
import pytest

from frogcert.analytic import brw_constants, brw_m
from frogcert.brw import (
    BrwPopulation,
    PopulationCapExceeded,
    TreeOffspringRule,
    dominating_rule,
    one_step_ratios,
    project_to_Z,
    projected_m,
    simple_walk_rule,
    step_dominating_brw,
    visited_count_bound,
    visited_count_bound_check,
    weight_trajectories,
)
from frogcert.tree import Vertex


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def test_root_step_is_deterministic_doubling(rng):
    theta = brw_constants(6).theta_star
    for _ in range(20):
        nxt = step_dominating_brw(BrwPopulation.at_root(theta), 6, rng)
        assert nxt.size == 2 and len(nxt.particles) == 1 and nxt.generation == 1
        (v,) = nxt.particles
        assert v.distance == 1
        assert math.isclose(nxt.W, 2 * math.exp(-theta))


def test_weights_recompute(rng):
    pop = BrwPopulation.at_root(0.7)
    for _ in range(6):
        pop = step_dominating_brw(pop, 3, rng)
    W = math.fsum(c * math.exp(-0.7 * v.distance) for v, c in pop.particles.items())
    assert math.isclose(pop.W, W, rel_tol=1e-12)


def test_particle_count_range(rng):
    pop = BrwPopulation.at_root(1.0)
    for n in range(1, 9):
        pop = step_dominating_brw(pop, 2, rng)
        assert 1 <= pop.size <= 2**n


def test_population_cap(rng):
    pop = BrwPopulation.at_root(1.0)
    with pytest.raises(PopulationCapExceeded):
        for _ in range(30):
            pop = step_dominating_brw(pop, 2, rng, cap=100)


def test_one_step_ratio_matches_m(rng):
    c = brw_constants(6)
    r = one_step_ratios(6, 3, 10_000, rng)
    assert abs(r.mean() - c.m_theta) < 3 * r.std(ddof=1) / math.sqrt(len(r))


def test_ratio_at_root_is_below_m():
    for d in range(2, 30):
        theta = brw_constants(d).theta_star
        assert 2 * math.exp(-theta) <= brw_m(d, theta)


def test_weight_supermartingale(rng):
    m = brw_constants(6).m_star
    W = weight_trajectories(6, 20, 10_000, rng)
    mean = W.mean(axis=0)
    se = W.std(axis=0, ddof=1) / math.sqrt(W.shape[0])
    for n in range(21):
        assert mean[n] <= m**n + 3 * se[n]
    assert W[:, 0].tolist() == [1.0] * W.shape[0]


def test_lumped_matches_vertex_level(rng):
    """Distance lumping and the vertex simulation agree in mean."""
    d, n, reps = 3, 4, 3000
    theta = brw_constants(d).theta_star
    lumped = weight_trajectories(d, n, reps, rng)[:, -1]
    direct = []
    for _ in range(reps):
        pop = BrwPopulation.at_root(theta)
        for _ in range(n):
            pop = step_dominating_brw(pop, d, rng)
        direct.append(pop.W)
    direct = np.array(direct)
    se = math.hypot(lumped.std() / math.sqrt(reps), direct.std() / math.sqrt(reps))
    assert abs(lumped.mean() - direct.mean()) < 4 * se


def test_visited_count_check(rng):
    c0 = visited_count_bound_check(6, 0, 50, rng)
    assert c0.estimate == 1.0 and c0.holds
    c2 = visited_count_bound_check(6, 2, 300, rng)
    assert c2.holds
    m = math.sqrt(48) / 7
    assert math.isclose(c2.bound, (24 / 7) ** 2 / (1 - m))
    for k in range(5):
        assert math.isclose(visited_count_bound(10, k + 1) / visited_count_bound(10, k), 40 / 11)
    with pytest.raises(ValueError):
        visited_count_bound(5, 1)
    with pytest.raises(ValueError):
        visited_count_bound_check(6, 7, 10, rng)


def test_projection():
    for d in (2, 6):
        (down, dn), (up, un) = project_to_Z(dominating_rule(d))
        assert (down, up) == (-1, 1)
        assert math.isclose(dn, 1 / (d + 1)) and math.isclose(un, 2 * d / (d + 1))
        (_, sn), (_, su) = project_to_Z(simple_walk_rule(d))
        assert math.isclose(sn, 1 / (d + 1)) and math.isclose(su, d / (d + 1))
        c = brw_constants(d)
        assert math.isclose(projected_m(d, c.theta_star), c.m_star, rel_tol=1e-12)


def test_projection_rejects_bad_rules():
    with pytest.raises(ValueError):
        project_to_Z({-1: 0.2, 2: 0.5})
    with pytest.raises(ValueError):
        TreeOffspringRule(2, (0.3, 0.2, 0.5))
    with pytest.raises(ValueError):
        TreeOffspringRule(2, (0.3, 0.2))
    assert project_to_Z({1: 0.5, -1: 0.5}) == [(-1, 0.5), (1, 0.5)]
