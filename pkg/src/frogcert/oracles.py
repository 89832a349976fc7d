"""Brute-force cross-checks of the counting and bound formulas."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass

from .analytic import BoundParams, hit_prob_single, tail_weight, total_bound
from .sim import hit_frequency
from .tree import TreeParams, enumerate_ball, phi

# largest ball radius enumerated by default, per d
BALL_RADIUS = {2: 14, 3: 10, 4: 8, 5: 7}


@dataclass
class OracleResult:
    oracle: str
    passed: bool
    observed: float
    expected: float
    tolerance: float
    detail: dict

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out


def cell_counts(R: int, params: TreeParams) -> Counter:
    return Counter((v.level, v.distance) for v in enumerate_ball(R, params))


def phi_oracle(d: int, R: int) -> OracleResult:
    """phi(j, k, d) against BFS counts for every |j| <= k <= R."""
    counts = cell_counts(R, TreeParams(d))
    bad = [
        (j, k)
        for k in range(R + 1)
        for j in range(-k, k + 1)
        if phi(j, k, d) != counts.get((j, k), 0)
    ]
    cells = (R + 1) ** 2
    return OracleResult("phi", not bad, cells - len(bad), cells, 0.0,
                        {"d": d, "R": R, "mismatches": bad[:10]})


def ball_sum(p: BoundParams, R: int) -> float:
    """mu * sum over the radius-R ball of lam**level * min(C d**(-beta k), d**-m)."""
    cap = float(p.d) ** -p.m
    terms = [
        p.lam**v.level * min(p.c_hit * float(p.d) ** (-p.beta * v.distance), cap)
        for v in enumerate_ball(R, TreeParams(p.d))
    ]
    return p.mu * math.fsum(terms)


def ball_bound_oracle(d: int, m: int, mu: float = 1.0, R: int | None = None,
                      tol: float = 1e-6) -> OracleResult:
    """total_bound against ball enumeration plus the analytic tail beyond R."""
    R = BALL_RADIUS.get(d, 6) if R is None else R
    p = BoundParams(d, mu, m)
    ball = ball_sum(p, R)
    # min(1, N d^-k) = N min(d^-m, d^-k) with N = d^m
    tail = mu * float(d) ** -m * tail_weight(R, d, p.lam, 1.0, 1.0, p.N)
    observed = ball + tail
    expected = total_bound(p).alpha
    ok = abs(observed - expected) <= tol * max(1.0, abs(expected))
    return OracleResult("ball-bound", ok, observed, expected, tol,
                        {"d": d, "m": m, "mu": mu, "R": R, "ball": ball, "tail": tail})


def hit_oracle(d: int, k: int, replicas: int = 100_000, seed: int = 0,
               workers: int | None = None) -> OracleResult:
    """Empirical single-walker hit frequency of a distance-k vertex vs d**-k."""
    freq, se = hit_frequency(d, k, replicas, seed, workers=workers)
    expected = hit_prob_single(d, k)
    # stderr under the null, so a zero-hit sample is not trivially accepted
    se0 = math.sqrt(expected * (1 - expected) / replicas)
    ok = abs(freq - expected) <= 3 * se0
    return OracleResult("hit", ok, freq, expected, 3 * se0,
                        {"d": d, "k": k, "replicas": replicas, "seed": seed, "stderr": se})
