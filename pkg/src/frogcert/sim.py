"""Random walks and frog dynamics on the implicit tree.

Randomness is keyed, never sequential: the sleeping count at a site comes
from the stream ``(seed, replica, site_key, COUNT_STREAM)`` and particle
``i`` of a site walks with stream ``(seed, replica, site_key, i)``, its t-th
step using draw t.  A particle's path therefore does not depend on when it
was woken, which is what lets the block decomposition and the synchronous
frog run be compared site for site.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .analytic import DivergentSum, tail_weight, walk_weight
from .laws import FinitePMF, ParticleLaw, PlusOne, TwoPoint, mean, pmf, sample, zero
from .parallel import map_chunks
from .rng import COUNT_STREAM, ROOT_WALKER, CounterStream, derive_key, draw, draw_array
from .tree import (
    TreeParams,
    Vertex,
    check_key_radius,
    key_distance,
    key_level,
    neighbors,
    pack,
    toward_root,
    unpack,
)

log = logging.getLogger(__name__)

ROOT_KEY = 0
NO_TARGET = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    params: TreeParams
    law: ParticleLaw = field(default_factory=zero)
    lam: float | None = None
    R_record: int = 10
    R_kill: int = 30
    T_max: int = 1_000_000
    seed: int = 0
    replicas: int = 1000
    max_population: int = 200_000

    def __post_init__(self):
        if self.lam is None:
            object.__setattr__(self, "lam", 1.0 / math.sqrt(self.params.d))
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        if not self.R_kill > self.R_record >= 1:
            raise ValueError("need R_kill > R_record >= 1")
        if self.T_max < 1:
            raise ValueError("T_max must be >= 1")
        check_key_radius(self.R_record, self.params.d)

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def dary(self) -> bool:
        return self.params.dary

    def track_radius(self, activating: bool) -> int:
        """Radius inside which sites are tracked.

        Processes that wake particles track every site short of the kill
        radius, so a truncated run differs from the untruncated one only
        through the continuations of killed walkers.
        """
        if not activating:
            return self.R_record
        r = self.R_kill - 1
        check_key_radius(r, self.d)
        return r


@dataclass
class VisitSet:
    keys: np.ndarray  # sorted packed keys of recorded vertices
    d: int
    lam: float
    weight: float
    bias_bound: float | None
    truncated: bool = False
    tracked: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_keys(cls, keys, d, lam, R_record, bias_bound, truncated=False, tracked=None):
        keys = np.asarray(keys, dtype=np.uint64)
        rec = np.sort(np.array([k for k in keys.tolist() if key_distance(k) <= R_record],
                               dtype=np.uint64))
        weight = math.fsum(lam ** key_level(k) for k in rec.tolist())
        return cls(rec, d, lam, weight, bias_bound, truncated, tracked)

    @property
    def vertices(self) -> set:
        return {unpack(k, self.d) for k in self.keys.tolist()}

    def recompute_weight(self) -> float:
        return math.fsum(self.lam ** v.level for v in self.vertices)

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, v) -> bool:
        key = pack(v, self.d) if isinstance(v, Vertex) else int(v)
        i = np.searchsorted(self.keys, np.uint64(key))
        return bool(i < len(self.keys) and int(self.keys[i]) == key)


@dataclass
class FrogRunStats:
    root_visits: int
    sites_visited: int
    max_level: int
    min_level: int
    awakened: int
    truncated: bool
    capped: bool = False
    steps: int = 0
    visited: frozenset = field(default=frozenset(), repr=False)


# ---------------------------------------------------------------- bias bounds

@lru_cache(maxsize=4096)
def _tail(R, d, lam, beta, c_hit, n):
    return tail_weight(R, d, lam, beta, c_hit, n)


@lru_cache(maxsize=256)
def _walk_weight(d, lam, beta, c_hit):
    return walk_weight(d, lam, beta, c_hit)


def reentry_bound(d, lam, R_record, R_kill, beta=1.0, c_hit=1.0) -> float:
    """Worst-case expected recorded weight missed through one radius kill.

    Getting back into the recorded ball means hitting the point y where the
    walker's geodesic crosses distance R_record, which lies R_kill - R_record
    away.  From y the walker (or the cascade it drives) sees at most
    ``lam**level(y)`` times the weight of a fresh start, and level(y) >= -R_record.
    """
    return reentry_factor(d, lam, R_record, R_kill, beta, c_hit) * lam ** (-R_record)


def reentry_factor(d, lam, R_record, R_kill, beta=1.0, c_hit=1.0) -> float:
    """Hit bound for y times the whole-tree weight bound; multiply by lam**level(y)."""
    return (c_hit * float(d) ** (-beta * (R_kill - R_record))
            * _walk_weight(d, lam, beta, c_hit))


def crossing_levels(end_u, R_record) -> np.ndarray:
    """Level of the distance-R_record point on the geodesic to each kill site."""
    end_u = np.asarray(end_u, dtype=np.int64)
    return np.where(end_u >= R_record, -R_record, R_record - 2 * end_u)


def site_bias(site_key, n, config, beta=1.0, c_hit=1.0) -> float:
    """Tail bound for n walkers (or cascades) launched from a site."""
    if n == 0:
        return 0.0
    dist = key_distance(site_key)
    lvl = key_level(site_key)
    R = max(config.R_record - dist, -1)
    return config.lam**lvl * _tail(R, config.d, config.lam, beta, c_hit, n)


def _bias_or_none(fn):
    try:
        return fn()
    except DivergentSum:
        return None


# ---------------------------------------------------------------- island sets

def _lam_table(lam, R):
    return np.array([lam**lvl for lvl in range(-R, R + 1)])


def island_visit_set(config: SimConfig, n_walkers: int, replica: int = 0,
                     site: Vertex | None = None) -> VisitSet:
    """Visited set of ``n_walkers`` independent walks started together."""
    if n_walkers < 0:
        raise ValueError("n_walkers must be >= 0")
    d, lam = config.d, config.lam
    site_key = ROOT_KEY if site is None else pack(site, d)
    if key_distance(site_key) > config.R_record:
        raise ValueError("launch site must lie inside the recorded ball")
    if n_walkers == 0:
        bias = None if config.dary else 0.0
        return VisitSet(np.zeros(0, dtype=np.uint64), d, lam, 0.0, bias)
    starts = np.full(n_walkers, site_key, dtype=np.uint64)
    streams = np.array([derive_key(config.seed, replica, site_key, i) for i in range(n_walkers)],
                       dtype=np.uint64)
    visited = kernels.KeySet()
    out = kernels.walk_batch(d, config.dary, starts, streams, config.R_record,
                             config.R_kill, config.T_max, visited)
    bias = None
    if not config.dary:
        bias = _bias_or_none(lambda: _launch_bias(config, {site_key: n_walkers}, out))
    truncated = bool((out["status"] == kernels.STATUS_TMAX).any())
    return VisitSet.from_keys(out["new_keys"], d, lam, config.R_record, bias, truncated)


def _launch_bias(config, launches, out, beta=1.0, c_hit=1.0) -> float:
    """Tail + re-entry + horizon terms for one batch of launched walkers."""
    d, lam = config.d, config.lam
    tail = math.fsum(site_bias(k, n, config, beta, c_hit) for k, n in launches.items())
    status = out["status"]
    radius = status == kernels.STATUS_RADIUS
    levels = crossing_levels(out["end_u"][radius], config.R_record)
    reentry = reentry_factor(d, lam, config.R_record, config.R_kill, beta, c_hit) * math.fsum(
        lam ** int(l) for l in levels)
    horizon = math.fsum(lam ** int(l) for l in out["end_level"][~radius])
    return tail + reentry + horizon * _walk_weight(d, lam, beta, c_hit)


def sample_site_count(law, seed, replica, site_key) -> int:
    return sample(law, CounterStream(derive_key(seed, replica, site_key, COUNT_STREAM)))


@dataclass
class IslandEstimate:
    weights: np.ndarray
    counts: np.ndarray
    mean: float
    stderr: float
    bias_bound: float | None
    top_share: float
    truncated: bool
    conditional: bool = False
    biases: np.ndarray | None = field(default=None, repr=False)
    kill_biases: np.ndarray | None = field(default=None, repr=False)

    @property
    def upper(self) -> float:
        """Mean plus certified truncation bias."""
        return self.mean + (self.bias_bound or 0.0)

    @property
    def upper_stderr(self) -> float:
        """Standard error of ``upper`` (weight and bias are estimated together)."""
        if self.kill_biases is None:
            return self.stderr
        n = len(self.weights)
        if n < 2:
            return math.inf
        return float(np.std(self.weights + self.kill_biases, ddof=1) / math.sqrt(n))


def expected_island_bias(config: SimConfig, law=None) -> float | None:
    """A priori bound on the expected truncation bias of one island under ``law``.

    Uses the worst-case re-entry point for every walker.  The tail term is
    concave in the walker count, so when the pmf is too large to enumerate
    it is evaluated at the mean count (Jensen).
    """
    if config.dary:
        return None
    law = config.law if law is None else law

    def compute():
        d, lam = config.d, config.lam
        per = reentry_bound(d, lam, config.R_record, config.R_kill)
        dist = pmf(law)
        if dist is None:
            n_bar = mean(law)
            return _tail(config.R_record, d, lam, 1.0, 1.0, n_bar) + n_bar * per
        return math.fsum(
            p * (_tail(config.R_record, d, lam, 1.0, 1.0, n) + n * per)
            for n, p in dist.items() if p > 0
        )

    return _bias_or_none(compute)


def expected_tail(config: SimConfig, law) -> float:
    """E over the walker count of the tail bound beyond R_record."""
    d, lam, R = config.d, config.lam, config.R_record
    dist = pmf(law)
    if dist is None:
        return _tail(R, d, lam, 1.0, 1.0, mean(law))
    return math.fsum(p * _tail(R, d, lam, 1.0, 1.0, n) for n, p in dist.items() if p > 0)


def kill_biases(config: SimConfig, rweight, tweight) -> np.ndarray:
    """Per-replica bias from killed walkers: re-entry through each radius
    kill's crossing point, plus the full-walk bound from each horizon kill."""
    d, lam = config.d, config.lam
    return (reentry_factor(d, lam, config.R_record, config.R_kill) * np.asarray(rweight)
            + _walk_weight(d, lam, 1.0, 1.0) * np.asarray(tweight))


def estimate_island_weight(config: SimConfig, replicas: int | None = None,
                           conditional: bool = False, workers: int | None = None,
                           chunk: int = 256, first_replica: int = 0) -> IslandEstimate:
    """Monte Carlo estimate of the expected recorded weight of one island.

    With ``conditional=True`` (TwoPoint laws only) every replica launches N
    walkers and the weight is scaled by mu/N, which is the same expectation
    without the empty replicas.
    """
    n = config.replicas if replicas is None else replicas
    law = config.law
    reps = np.arange(first_replica, first_replica + n, dtype=np.uint64)
    if conditional:
        if not isinstance(law, TwoPoint):
            raise ValueError("conditional estimation needs a TwoPoint law")
        counts = np.full(n, law.N, dtype=np.int64)
        scale = law.p
    else:
        counts = np.array([sample_site_count(law, config.seed, int(r), ROOT_KEY) for r in reps],
                          dtype=np.int64)
        scale = 1.0
    lam_pow = _lam_table(config.lam, config.R_record)

    def run(part):
        return kernels.island_batch(
            config.d, config.dary, counts[part.start:part.stop], config.seed,
            reps[part.start:part.stop], ROOT_KEY, config.R_record, config.R_kill,
            config.T_max, lam_pow, config.lam, NO_TARGET,
        )

    parts = map_chunks(run, n, workers, chunk)

    def col(i):
        return np.concatenate([p[i] for p in parts]) if parts else np.zeros(0)

    weights = col(0) * scale
    tkills = col(4)
    total = math.fsum(weights.tolist())
    mu_hat = total / n if n else 0.0
    stderr = float(np.std(weights, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    top = float(weights.max() / total) if total > 0 else 0.0
    biases = bias = None
    if not config.dary:
        try:
            kills = kill_biases(config, col(6), col(5)) * scale
            tails = {int(c): _tail(config.R_record, config.d, config.lam, 1.0, 1.0, int(c))
                     for c in np.unique(counts)}
            law_tail = expected_tail(config, FinitePMF(((law.N, 1.0),)) if conditional else law)
        except DivergentSum:
            pass
        else:
            # exact expectation of the tail term, empirical mean of the kill terms
            biases = kills + scale * np.array([tails[int(c)] for c in counts])
            bias = scale * law_tail + (math.fsum(kills.tolist()) / n if n else 0.0)
            kill_part = kills
    if n and total > 0 and top > 0.1:
        log.warning("top replica carries %.0f%% of the summed weight; "
                    "the estimate is heavy-tailed", 100 * top)
    est = IslandEstimate(weights, counts, mu_hat, stderr, bias, top,
                         bool(tkills.any()), conditional, biases)
    if biases is not None:
        est.kill_biases = kill_part
    return est


def hit_frequency(d: int, k: int, replicas: int, seed: int = 0, R_kill: int | None = None,
                  target: Vertex | None = None, dary: bool = False,
                  workers: int | None = None, chunk: int = 4096) -> tuple[float, float]:
    """Fraction of single walks from the root that visit ``target``.

    The default target is the descendant ``(0, (1,)*k)``.  Returns the
    frequency and its standard error.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    target = Vertex(0, (1,) * k) if target is None else target
    if target.distance != k:
        raise ValueError("target must be at distance k")
    R_kill = k + 20 if R_kill is None else R_kill
    check_key_radius(k, d)
    tkey = pack(target, d)
    lam_pow = np.ones(2 * k + 1)
    counts = np.ones(replicas, dtype=np.int64)
    reps = np.arange(replicas, dtype=np.uint64)

    def run(part):
        out = kernels.island_batch(d, dary, counts[part.start:part.stop], seed,
                                   reps[part.start:part.stop], ROOT_KEY, k, R_kill,
                                   10**9, lam_pow, 0.5, tkey)
        return int(out[2].sum())

    hits = sum(map_chunks(run, replicas, workers, chunk))
    freq = hits / replicas
    return freq, math.sqrt(freq * (1 - freq) / replicas)


# ---------------------------------------------------------------- frog model

class _SyncWalkers:
    """Struct-of-arrays walker population stepped in lockstep.

    Uses the same transition rule and stream layout as the walk kernels,
    so a particle follows the same path here as in ``walk_batch``.
    """

    def __init__(self, d, dary, R_track):
        self.d, self.dary, self.R_track = d, dary, R_track
        self.u = np.zeros(0, dtype=np.int64)
        self.L = np.zeros(0, dtype=np.int64)
        self.code = np.zeros(0, dtype=np.uint64)
        self.skey = np.zeros(0, dtype=np.uint64)
        self.age = np.zeros(0, dtype=np.int64)

    def __len__(self):
        return len(self.u)

    def add(self, site_key, stream_keys):
        n = len(stream_keys)
        if n == 0:
            return
        site_key = int(site_key)
        self.u = np.concatenate([self.u, np.full(n, site_key >> 58, dtype=np.int64)])
        self.L = np.concatenate([self.L, np.full(n, (site_key >> 52) & 63, dtype=np.int64)])
        self.code = np.concatenate(
            [self.code, np.full(n, site_key & ((1 << 52) - 1), dtype=np.uint64)])
        self.skey = np.concatenate([self.skey, np.asarray(stream_keys, dtype=np.uint64)])
        self.age = np.concatenate([self.age, np.zeros(n, dtype=np.int64)])

    def keep(self, mask):
        for name in ("u", "L", "code", "skey", "age"):
            setattr(self, name, getattr(self, name)[mask])

    def step(self):
        d, Rt = self.d, self.R_track
        u, L, code = self.u, self.L, self.code
        x = draw_array(self.skey, self.age)
        r = (x % np.uint64(d + 1)).astype(np.int64)
        at_root = (u == 0) & (L == 0)
        if self.dary:
            r = np.where(at_root, (x % np.uint64(d)).astype(np.int64) + 1, r)
        down = L > 0
        pop = down & (r == 0)
        push = down & (r > 0)
        spine = ~down & (u > 0)
        up = (spine | at_root) & (r == 0)
        spine_down = spine & (r == 1)
        start = (spine & (r >= 2)) | (at_root & (r > 0))
        new_code = code.copy()
        m = pop & (L <= Rt)
        new_code[m] = code[m] // np.uint64(d)
        m = push & (L < Rt)
        new_code[m] = code[m] * np.uint64(d) + (r[m] - 1).astype(np.uint64)
        if Rt > 0:
            new_code[start] = (r[start] - 1).astype(np.uint64)
        new_L = L.copy()
        new_L[pop] -= 1
        new_L[push] += 1
        new_L[start] = 1
        new_u = u.copy()
        new_u[up] += 1
        new_u[spine_down] -= 1
        self.u, self.L, self.code = new_u, new_L, new_code
        self.age = self.age + 1

    def keys(self):
        return ((self.u.astype(np.uint64) << np.uint64(58))
                | (self.L.astype(np.uint64) << np.uint64(52)) | self.code)


def _site_streams(seed, replica, site_key, count, extra=()):
    return list(extra) + [derive_key(seed, replica, site_key, i) for i in range(count)]


def frog_model(config: SimConfig, replica: int = 0, root_walker: bool = True) -> FrogRunStats:
    """Synchronous discrete-time frog model started from the root.

    All active particles move at once, then every newly visited site inside
    the tracked ball wakes its sleeping particles.  Walkers die on reaching
    distance R_kill or after T_max steps of their own; the run stops when
    none are left or when the population cap is exceeded.
    """
    d, seed, law = config.d, config.seed, config.law
    Rt = config.track_radius(activating=True)
    walkers = _SyncWalkers(d, config.dary, Rt)
    visited = {ROOT_KEY}
    root_count = sample_site_count(law, seed, replica, ROOT_KEY)
    extra = [derive_key(seed, replica, ROOT_KEY, ROOT_WALKER)] if root_walker else []
    walkers.add(ROOT_KEY, _site_streams(seed, replica, ROOT_KEY, root_count, extra))
    awakened = root_count
    root_visits = 0
    lo = hi = 0
    truncated = capped = False
    t = 0
    while len(walkers):
        if awakened + len(walkers) > config.max_population:
            capped = truncated = True
            break
        walkers.step()
        t += 1
        levels = walkers.L - walkers.u
        lo = min(lo, int(levels.min()))
        hi = max(hi, int(levels.max()))
        at_root = (walkers.u == 0) & (walkers.L == 0)
        root_visits += int(at_root.sum())
        dist = walkers.u + walkers.L
        tracked = dist <= Rt
        new_sites = []
        for key in walkers.keys()[tracked].tolist():
            if key not in visited:
                visited.add(key)
                new_sites.append(key)
        dead = (dist >= config.R_kill) | (walkers.age >= config.T_max)
        if dead.any():
            truncated = True
            walkers.keep(~dead)
        for key in new_sites:
            n = sample_site_count(law, seed, replica, key)
            awakened += n
            walkers.add(key, _site_streams(seed, replica, key, n))
    return FrogRunStats(root_visits, len(visited), hi, lo, awakened, truncated, capped, t,
                        frozenset(visited))


# ---------------------------------------------------------------- launches

def launch(config: SimConfig, launches: list, visited, replica: int = 0):
    """Walk every ``(site_key, particle_index)`` in ``launches`` once.

    New sites are added to ``visited``; returns the kernel output dict.
    """
    starts = np.array([s for s, _ in launches], dtype=np.uint64)
    streams = np.array([derive_key(config.seed, replica, s, i) for s, i in launches],
                       dtype=np.uint64)
    return kernels.walk_batch(config.d, config.dary, starts, streams,
                              config.track_radius(activating=True), config.R_kill,
                              config.T_max, visited)


def two_type_block_step(config: SimConfig, sites, exclusion, replica: int = 0) -> VisitSet:
    """One generation of the two-type block construction.

    Each site in ``sites`` launches its type-2 particles (indices 1..zeta);
    every site visited for the first time wakes its one type-1 particle
    (index 0), which walks in turn.  Sites in ``exclusion`` are treated as
    already visited.  Returns the newly visited sites.
    """
    law = config.law
    if not isinstance(law, PlusOne):
        raise ValueError("two-type blocks need a PlusOne law")
    d = config.d
    visited = kernels.KeySet(exclusion.to_array() if hasattr(exclusion, "to_array")
                             else exclusion)
    site_keys = sorted(pack(s, d) if isinstance(s, Vertex) else int(s) for s in sites)
    for k in site_keys:
        visited.add(k)
    launches, type2 = [], {}
    for k in site_keys:
        zeta = sample_site_count(law, config.seed, replica, k) - 1
        type2[k] = zeta
        launches.extend((k, i) for i in range(1, zeta + 1))
    beta = c_hit = None
    if d >= 6 and not config.dary:
        from .analytic import two_type_exponents

        beta, c_hit = two_type_exponents(d)
    new_all: list = []
    outs = []
    total = 0
    truncated = False
    while launches:
        total += len(launches)
        if total > config.max_population:
            truncated = True
            break
        out = launch(config, launches, visited, replica)
        outs.append(out)
        new = out["new_keys"].tolist()
        new_all.extend(new)
        launches = [(k, 0) for k in new]
    capped = truncated
    truncated = truncated or any((o["status"] == kernels.STATUS_TMAX).any() for o in outs)
    bias = None
    if beta is not None and beta > 0.5 and not capped:
        # only type-2 launches carry a tail term: the type-1 cascades they
        # drive are inside the C d^(-beta k) hit bound
        bias = _bias_or_none(lambda: math.fsum(
            _launch_bias(config, type2 if i == 0 else {}, o, beta, c_hit)
            for i, o in enumerate(outs)))
    return VisitSet.from_keys(new_all, d, config.lam, config.R_record, bias, truncated,
                              tracked=np.array(new_all, dtype=np.uint64))


# ---------------------------------------------------------------- coupling

def _step_vertex(v: Vertex, r: int, d: int, dary: bool) -> Vertex:
    """Kernel transition rule on explicit addresses (r is the raw draw)."""
    u, w = v
    if w:
        c = r % (d + 1)
        return Vertex(u, w[:-1]) if c == 0 else Vertex(u, w + (c,))
    if u > 0:
        c = r % (d + 1)
        if c == 0:
            return Vertex(u + 1, ())
        if c == 1:
            return Vertex(u - 1, ())
        return Vertex(u, (c,))
    c = r % d + 1 if dary else r % (d + 1)
    return Vertex(1, ()) if c == 0 else Vertex(0, (c,))


def _neighbor_index(r: int, v: Vertex, d: int, dary: bool) -> int:
    if dary and v == Vertex(0, ()):
        return r % d
    return r % (d + 1)


@dataclass
class CouplingResult:
    holds: bool
    steps: int
    thinned: bool
    max_frogs: int
    brw_lower_count: int
    frog_counts: list = field(default_factory=list, repr=False)
    brw_counts: list = field(default_factory=list, repr=False)

    def __bool__(self):
        return self.holds


def coupled_domination_run(config: SimConfig, horizon: int, replica: int = 0,
                           max_frogs: int = 64, max_horizon: int = 10_000) -> CouplingResult:
    """Drive the one-frog-per-site model and the dominating BRW together.

    Each active frog is tethered to a BRW particle that takes the same
    neighbor choice.  A tethered particle stepping toward the root has one
    offspring, otherwise two; when its frog wakes a sleeping frog the second
    offspring adopts it, otherwise the second offspring starts a free
    lineage (never simulated, only counted).  At every step the frog
    position multiset must be contained in the tethered BRW multiset.

    Above ``max_frogs`` active frogs, a keyed random subset of frog/tether
    pairs is kept; dropping both members of a pair preserves the coupling.
    """
    if horizon < 0 or horizon > max_horizon:
        raise ValueError(f"horizon must lie in [0, {max_horizon}]")
    law = config.law
    if not (isinstance(law, FinitePMF) and law.support == ((1, 1.0),)):
        raise ValueError("the coupling needs exactly one sleeping frog per site")
    d, dary, seed = config.d, config.dary, config.seed
    rootv = Vertex(0, ())
    frogs = [rootv]
    tethers = [rootv]
    keys = [derive_key(seed, replica, 0, 0)]
    ages = [0]
    next_id = 1
    visited = {rootv}
    free = 0
    thinned = False
    peak = 1
    frog_counts, brw_counts = [1], [1]
    for t in range(1, horizon + 1):
        new_frogs, new_tethers, new_keys, new_ages = [], [], [], []
        woken_here = set()
        for f, p, k, a in zip(frogs, tethers, keys, ages):
            x = draw(k, a)
            nf = _step_vertex(f, x, d, dary)
            # same neighbor index as the frog's step
            target = _step_vertex(p, x, d, dary)
            offspring = 1 if target.distance < p.distance else 2
            new_frogs.append(nf)
            new_tethers.append(target)
            new_keys.append(k)
            new_ages.append(a + 1)
            wakes = nf not in visited and nf not in woken_here
            if wakes:
                woken_here.add(nf)
            if offspring == 2:
                if wakes:
                    new_frogs.append(nf)
                    new_tethers.append(target)
                    new_keys.append(derive_key(seed, replica, 0, next_id))
                    new_ages.append(0)
                    next_id += 1
                else:
                    free += 1
            elif wakes:
                # woken frog with no BRW particle to carry it
                new_frogs.append(nf)
                new_keys.append(derive_key(seed, replica, 0, next_id))
                new_ages.append(0)
                next_id += 1
        visited.update(woken_here)
        if Counter(new_frogs) - Counter(new_tethers):
            return CouplingResult(False, t, thinned, peak, len(new_tethers) + free,
                                  frog_counts, brw_counts)
        frogs, tethers, keys, ages = new_frogs, new_tethers, new_keys, new_ages
        peak = max(peak, len(frogs))
        frog_counts.append(len(frogs))
        brw_counts.append(len(tethers) + free)
        if len(frogs) > max_frogs:
            thinned = True
            tkey = derive_key(seed, replica, t, 1 << 61)
            order = np.argsort([draw(tkey, i) for i in range(len(frogs))],
                               kind="stable")[:max_frogs]
            order.sort()
            frogs = [frogs[i] for i in order]
            tethers = [tethers[i] for i in order]
            keys = [keys[i] for i in order]
            ages = [ages[i] for i in order]
    return CouplingResult(True, horizon, thinned, peak, len(tethers) + free,
                          frog_counts, brw_counts)
