"""Branching random walks on the tree and their projection to the integers.

The dominating BRW: each particle moves to a uniform neighbor and leaves one
offspring there if the neighbor is closer to the root, two otherwise.  A
particle at distance k carries weight ``exp(-theta*k)``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .analytic import brw_constants, brw_m
from .tree import TreeParams, Vertex, neighbors, toward_root


class PopulationCapExceeded(RuntimeError):
    pass


@dataclass
class BrwPopulation:
    particles: Counter  # Vertex -> multiplicity
    theta: float
    generation: int = 0

    @classmethod
    def at_root(cls, theta: float) -> "BrwPopulation":
        return cls(Counter({Vertex(0, ()): 1}), theta)

    @property
    def size(self) -> int:
        return sum(self.particles.values())

    def weight_of(self, v: Vertex) -> float:
        return math.exp(-self.theta * v.distance)

    @property
    def W(self) -> float:
        return math.fsum(c * self.weight_of(v) for v, c in self.particles.items())

    def has_root_particle(self) -> bool:
        return self.particles.get(Vertex(0, ()), 0) > 0


def step_dominating_brw(pop: BrwPopulation, d: int, rng: np.random.Generator,
                        cap: int = 1_000_000, kill_beyond: int | None = None) -> BrwPopulation:
    """One generation of the dominating BRW on T_d.

    Particles at a vertex are moved together with one multinomial draw.
    ``kill_beyond`` drops offspring farther than that distance from the root.
    """
    params = TreeParams(d)
    nxt: Counter = Counter()
    probs = np.full(d + 1, 1.0 / (d + 1))
    for v in sorted(pop.particles):
        c = pop.particles[v]
        if c == 0:
            continue
        back = toward_root(v)
        moves = rng.multinomial(c, probs)
        for nb, k in zip(neighbors(v, params), moves.tolist()):
            if k == 0:
                continue
            if kill_beyond is not None and nb.distance > kill_beyond:
                continue
            nxt[nb] += k if nb == back else 2 * k
    out = BrwPopulation(nxt, pop.theta, pop.generation + 1)
    if out.size > cap:
        raise PopulationCapExceeded(f"population {out.size} exceeds cap {cap}")
    return out


def one_step_ratios(d: int, k: int, trials: int, rng: np.random.Generator,
                    theta: float | None = None) -> np.ndarray:
    """W_1/W_0 for ``trials`` single steps of one particle at distance k."""
    theta = brw_constants(d).theta_star if theta is None else theta
    start = BrwPopulation(Counter({Vertex(0, (1,) * k): 1}), theta)
    w0 = start.W
    return np.array([step_dominating_brw(start, d, rng).W / w0 for _ in range(trials)])


def weight_trajectories(d: int, n: int, replicas: int, rng: np.random.Generator,
                        theta: float | None = None) -> np.ndarray:
    """W_0..W_n per replica from one particle at the root.

    Only distances matter for the weight, so particles are lumped by
    distance: from distance k >= 1 a particle steps inward with probability
    1/(d+1) (one offspring), otherwise outward (two offspring).
    """
    theta = brw_constants(d).theta_star if theta is None else theta
    counts = np.zeros((replicas, n + 2), dtype=np.int64)
    counts[:, 0] = 1
    w = np.exp(-theta * np.arange(n + 2))
    out = np.empty((replicas, n + 1))
    out[:, 0] = counts @ w
    p_in = 1.0 / (d + 1)
    for t in range(1, n + 1):
        nxt = np.zeros_like(counts)
        nxt[:, 1] += 2 * counts[:, 0]
        inward = rng.binomial(counts[:, 1:t + 1], p_in)
        nxt[:, 0:t] += inward
        nxt[:, 2:t + 2] += 2 * (counts[:, 1:t + 1] - inward)
        counts = nxt
        out[:, t] = counts @ w
    return out


@dataclass
class VisitedCountCheck:
    k: int
    estimate: float
    stderr: float
    bound: float
    censored: int  # replicas still alive at the horizon or over the cap
    replicas: int

    @property
    def holds(self) -> bool:
        return self.estimate <= self.bound + 3 * self.stderr


def visited_count_bound(d: int, k: int) -> float:
    """(1/(1-m*)) (4d/(d+1))**k for the dominating BRW."""
    c = brw_constants(d)
    if not c.subcritical:
        raise ValueError("the bound needs m* < 1, i.e. d >= 6")
    return (4 * d / (d + 1)) ** k / (1 - c.m_star)


def visited_count_bound_check(d: int, k: int, n_replicas: int, rng: np.random.Generator,
                              horizon: int = 50, cap: int = 200_000) -> VisitedCountCheck:
    """Monte Carlo estimate of E X_k, the number of distance-k vertices ever visited.

    Particles beyond distance k are dropped: they can only come back through
    their own distance-k ancestor, which is already visited, so X_k is
    unchanged.  Replicas alive at the horizon are censored (their count is
    a lower bound).
    """
    if not 0 <= k <= 6:
        raise ValueError("k must lie in [0, 6]")
    bound = visited_count_bound(d, k)
    theta = brw_constants(d).theta_star
    xs = np.zeros(n_replicas)
    censored = 0
    for r in range(n_replicas):
        pop = BrwPopulation.at_root(theta)
        seen = {v for v in pop.particles if v.distance == k}
        for _ in range(horizon):
            try:
                pop = step_dominating_brw(pop, d, rng, cap=cap, kill_beyond=k)
            except PopulationCapExceeded:
                break
            seen.update(v for v in pop.particles if v.distance == k)
            if not pop.particles:
                break
        if pop.particles:
            censored += 1
        xs[r] = len(seen)
    stderr = float(xs.std(ddof=1) / math.sqrt(n_replicas)) if n_replicas > 1 else math.inf
    return VisitedCountCheck(k, float(xs.mean()), stderr, bound, censored, n_replicas)


# ---------------------------------------------------------------- projection

@dataclass(frozen=True)
class TreeOffspringRule:
    """Nearest-neighbor rule: expected offspring placed on each neighbor,
    ordered ``[parent, child 1, ..., child d]`` by level."""

    d: int
    per_neighbor: tuple = field(default=())

    def __post_init__(self):
        if len(self.per_neighbor) != self.d + 1:
            raise ValueError("need one expected count per neighbor (d+1 entries)")
        if any(c < 0 or not math.isfinite(c) for c in self.per_neighbor):
            raise ValueError("expected counts must be finite and >= 0")
        kids = self.per_neighbor[1:]
        if any(not math.isclose(c, kids[0], rel_tol=1e-12, abs_tol=0.0) for c in kids):
            raise ValueError("rule is not invariant under automorphisms fixing the end")


def dominating_rule(d: int) -> TreeOffspringRule:
    p = 1.0 / (d + 1)
    return TreeOffspringRule(d, (p,) + (2 * p,) * d)


def simple_walk_rule(d: int) -> TreeOffspringRule:
    p = 1.0 / (d + 1)
    return TreeOffspringRule(d, (p,) * (d + 1))


def project_to_Z(rule) -> list[tuple[int, float]]:
    """Level projection: displacement -1 for the parent, +1 for children.

    Also accepts a mapping from displacement to expected count, which must
    be nearest-neighbor.
    """
    if isinstance(rule, TreeOffspringRule):
        return [(-1, float(rule.per_neighbor[0])), (1, math.fsum(rule.per_neighbor[1:]))]
    items = dict(rule)
    if any(x not in (-1, 1) for x in items):
        raise ValueError("only nearest-neighbor rules can be projected")
    return [(x, float(items[x])) for x in sorted(items)]


def projected_m(d: int, theta: float) -> float:
    """biggins_m of the projected dominating rule; equals brw_m(d, theta)."""
    from .analytic import biggins_m

    return biggins_m(project_to_Z(dominating_rule(d)), theta)


__all__ = [
    "BrwPopulation", "PopulationCapExceeded", "step_dominating_brw", "one_step_ratios",
    "weight_trajectories", "VisitedCountCheck", "visited_count_bound",
    "visited_count_bound_check", "TreeOffspringRule", "dominating_rule",
    "simple_walk_rule", "project_to_Z", "projected_m", "brw_m",
]
