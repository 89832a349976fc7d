"""Block recursion: B_0 = {root}, B_{n+1} = sites first visited when every
particle sleeping in B_n is launched."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .analytic import (
    BoundParams,
    Certificate,
    build_infinite_mean_mixture,
    find_min_m,
    total_bound,
    two_type_certificate,
    two_type_exponents,
)
from .laws import Mixture, PlusOne, TwoPoint
from .parallel import map_chunks
from .rng import ROOT_WALKER
from .sim import (
    ROOT_KEY,
    SimConfig,
    VisitSet,
    _bias_or_none,
    _launch_bias,
    launch,
    sample_site_count,
    two_type_block_step,
)

VARIANTS = ("plain", "two_type")


@dataclass
class BlockSequence:
    blocks: list
    weights: list
    alpha_ref: float | None
    truncated: bool = False
    replica: int = 0

    @property
    def bias_bounds(self) -> list:
        return [b.bias_bound for b in self.blocks]

    def union_keys(self) -> set:
        """Every tracked site of every block (not only the recorded ones)."""
        out: set = set()
        for b in self.blocks:
            src = b.tracked if b.tracked is not None else b.keys
            out.update(src.tolist())
        return out

    def rows(self) -> list[dict]:
        return [
            {"replica": self.replica, "n": n, "weight": w, "bias_bound": b.bias_bound}
            for n, (w, b) in enumerate(zip(self.weights, self.blocks))
        ]


def alpha_for(config: SimConfig, variant: str = "plain") -> float | None:
    """Analytic alpha matching the configured law, when one is available."""
    d, law, lam = config.d, config.law, config.lam
    if config.dary or not 1.0 / d < lam < 1.0:
        return None
    m_of = lambda N: round(math.log(N) / math.log(d))
    try:
        if variant == "two_type":
            if not (isinstance(law, PlusOne) and isinstance(law.inner, TwoPoint)):
                return None
            beta, c_hit = two_type_exponents(d)
            if beta <= 0.5 or d ** m_of(law.inner.N) != law.inner.N:
                return None
            p = BoundParams(d, law.inner.mu, m_of(law.inner.N), lam, beta, c_hit)
            return total_bound(p).alpha
        if isinstance(law, TwoPoint) and d ** m_of(law.N) == law.N:
            return total_bound(BoundParams(d, law.mu, m_of(law.N), lam)).alpha
        if isinstance(law, Mixture):
            parts = []
            for c in law.components:
                if d ** m_of(c.N) != c.N:
                    return None
                parts.append(total_bound(BoundParams(d, c.mu, m_of(c.N), lam)).alpha)
            return math.fsum(parts) + law.remainder_bound
    except ValueError:
        return None
    return None


def _root_block(config: SimConfig) -> VisitSet:
    return VisitSet.from_keys([ROOT_KEY], config.d, config.lam, config.R_record,
                              0.0, tracked=np.array([ROOT_KEY], dtype=np.uint64))


def run_blocks(config: SimConfig, n_max: int = 4, variant: str = "plain",
               replica: int = 0, root_walker: bool = False) -> BlockSequence:
    """Build B_0..B_{n_max} for one replica.

    Plain: every site of B_n launches its sampled particles (indices
    0..count-1); with ``root_walker`` the root also launches one extra
    walker, matching ``sim.frog_model``.  Two-type: blocks come from
    ``two_type_block_step``.  Exceeding ``config.max_population`` launched
    walkers stops the recursion with ``truncated`` set.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if variant == "two_type" and not isinstance(config.law, PlusOne):
        raise ValueError("the two_type variant needs a PlusOne law")
    blocks = [_root_block(config)]
    visited = kernels.KeySet([ROOT_KEY])
    truncated = False
    launched = 0
    for _ in range(n_max):
        prev = blocks[-1].tracked
        if variant == "two_type":
            nxt = two_type_block_step(config, prev.tolist(), visited, replica)
            visited.update(nxt.tracked.tolist())
            truncated = truncated or nxt.truncated
        else:
            nxt, count = _plain_step(config, prev, visited, replica,
                                     root_walker and len(blocks) == 1)
            launched += count
            truncated = truncated or nxt.truncated
            if launched > config.max_population:
                truncated = True
                blocks.append(nxt)
                break
        blocks.append(nxt)
    seq = BlockSequence(blocks, [b.weight for b in blocks], alpha_for(config, variant),
                        truncated, replica)
    return seq


def _plain_step(config, sites, visited, replica, with_root_walker):
    launches = []
    counts = {}
    for k in sites.tolist():
        n = sample_site_count(config.law, config.seed, replica, k)
        if n:
            counts[k] = n
            launches.extend((k, i) for i in range(n))
    if with_root_walker:
        counts[ROOT_KEY] = counts.get(ROOT_KEY, 0) + 1
        launches.insert(0, (ROOT_KEY, ROOT_WALKER))
    if len(launches) > config.max_population:
        empty = np.zeros(0, dtype=np.uint64)
        return VisitSet(empty, config.d, config.lam, 0.0, None, True, empty), len(launches)
    if not launches:
        empty = np.zeros(0, dtype=np.uint64)
        return VisitSet(empty, config.d, config.lam, 0.0, 0.0, False, empty), 0
    out = launch(config, launches, visited, replica)
    bias = None if config.dary else _bias_or_none(lambda: _launch_bias(config, counts, out))
    truncated = bool((out["status"] == kernels.STATUS_TMAX).any())
    new = out["new_keys"]
    return (VisitSet.from_keys(new, config.d, config.lam, config.R_record, bias, truncated,
                               tracked=new), len(launches))


@dataclass
class BlockStats:
    weights: np.ndarray  # replicas x (n_max + 1)
    bias: np.ndarray  # same shape; nan where no bound is available
    alpha_ref: float | None
    truncated: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return self.weights.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        n = self.weights.shape[0]
        if n < 2:
            return np.full(self.weights.shape[1], math.inf)
        return self.weights.std(axis=0, ddof=1) / math.sqrt(n)

    def decay_ok(self, n_values=(1, 2, 3)) -> dict:
        """``mean[n] <= alpha**n + 3 stderr`` per requested n."""
        if self.alpha_ref is None:
            raise ValueError("no analytic alpha for this configuration")
        m, s = self.mean, self.stderr
        return {n: bool(m[n] <= self.alpha_ref**n + 3 * s[n]) for n in n_values}


def block_stats(config: SimConfig, n_max: int = 3, variant: str = "plain",
                replicas: int | None = None, root_walker: bool = False,
                workers: int | None = None, chunk: int = 64) -> BlockStats:
    """Run ``run_blocks`` on replicas 0..replicas-1 and stack the weights."""
    n = config.replicas if replicas is None else replicas

    def run(part):
        return [run_blocks(config, n_max, variant, r, root_walker) for r in part]

    seqs = [s for part in map_chunks(run, n, workers, chunk) for s in part]
    width = n_max + 1
    w = np.zeros((n, width))
    b = np.full((n, width), np.nan)
    tr = np.zeros(n, dtype=bool)
    for i, s in enumerate(seqs):
        w[i, :len(s.weights)] = s.weights
        for j, blk in enumerate(s.blocks):
            if blk.bias_bound is not None:
                b[i, j] = blk.bias_bound
        tr[i] = s.truncated
    return BlockStats(w, b, seqs[0].alpha_ref if seqs else alpha_for(config, variant), tr)


def certify(method: str, d: int, mu: float = 1.0, m: int | None = None,
            lam: float | None = None, n_max: int = 20) -> Certificate:
    """Transience certificate by the two-point, infinite-mean or two-type route."""
    method = method.replace("-", "_")
    if method == "two_point":
        if m is None:
            return find_min_m(d, mu, lam)[1]
        p = BoundParams(d, mu, m, lam)
        rep = total_bound(p)
        return Certificate(
            method="two_point", d=d, mu=mu, N=p.N, lam=p.lam, beta=1.0, c_hit=1.0,
            alpha=rep.alpha, region_sums=rep.region_sums,
            transient_certified=rep.transient_certified, m=m,
            reason="" if rep.transient_certified else "alpha >= 1",
        )
    if method == "infinite_mean":
        return build_infinite_mean_mixture(d, lam, mu, n_max)[1]
    if method == "two_type":
        return two_type_certificate(d, mu)
    raise ValueError(f"unknown method {method!r}")
