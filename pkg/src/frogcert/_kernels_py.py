"""Pure-Python walk kernels.

Reference implementation of the compiled ``_kernels`` extension; both must
produce identical outputs for identical inputs.  A walker's state is
``(u, L, code)`` where ``code`` is the base-d code of ``w[:R_track]``.  The
letters beyond ``R_track`` are never needed: deeper vertices are not
recorded and popping back restores the stored prefix.
"""

from __future__ import annotations

import numpy as np

from .rng import GAMMA, MASK, derive_key, fmix64

BACKEND = "python"

_CODE_MASK = (1 << 52) - 1

STATUS_RADIUS = 0
STATUS_TMAX = 1


class KeySet:
    """Set of packed vertex keys."""

    __slots__ = ("_s",)

    def __init__(self, keys=()):
        self._s = set(int(k) for k in keys)

    def add(self, key) -> bool:
        key = int(key)
        if key in self._s:
            return False
        self._s.add(key)
        return True

    def update(self, keys) -> None:
        self._s.update(int(k) for k in keys)

    def __contains__(self, key) -> bool:
        return int(key) in self._s

    def __len__(self) -> int:
        return len(self._s)

    def to_array(self) -> np.ndarray:
        return np.array(sorted(self._s), dtype=np.uint64)

    def copy(self) -> "KeySet":
        out = KeySet()
        out._s = set(self._s)
        return out


def _walk(d, dary, start_key, skey, R_track, R_kill, T_max, visited, on_new):
    """Run one walker.

    Returns (root_hits, min_level, max_level, steps, status, end_level, end_u).
    """
    u = start_key >> 58
    L = (start_key >> 52) & 63
    code = start_key & _CODE_MASK
    nb = d + 1
    level = L - u
    lo = hi = level
    root_hits = 0
    dist = u + L
    if dist <= R_track:
        key = (u << 58) | (L << 52) | code
        if key not in visited:
            visited.add(key)
            on_new(key)
    if dist >= R_kill:
        return root_hits, lo, hi, 0, STATUS_RADIUS, level, u
    t = 0
    state = skey
    while True:
        if t >= T_max:
            return root_hits, lo, hi, t, STATUS_TMAX, level, u
        state = (state + GAMMA) & MASK
        x = fmix64(state)
        t += 1
        if L > 0:
            r = x % nb
            if r == 0:
                if L <= R_track:
                    code //= d
                L -= 1
            else:
                if L < R_track:
                    code = code * d + (r - 1)
                L += 1
        elif u > 0:
            r = x % nb
            if r == 0:
                u += 1
            elif r == 1:
                u -= 1
            else:
                if R_track > 0:
                    code = r - 1
                L = 1
        else:
            if dary:
                r = x % d + 1
            else:
                r = x % nb
            if r == 0:
                u = 1
            else:
                if R_track > 0:
                    code = r - 1
                L = 1
        level = L - u
        if level < lo:
            lo = level
        elif level > hi:
            hi = level
        if u == 0 and L == 0:
            root_hits += 1
        dist = u + L
        if dist <= R_track:
            key = (u << 58) | (L << 52) | code
            if key not in visited:
                visited.add(key)
                on_new(key)
        if dist >= R_kill:
            return root_hits, lo, hi, t, STATUS_RADIUS, level, u


def walk_batch(d, dary, start_keys, stream_keys, R_track, R_kill, T_max, visited):
    """Walk each (start, stream) pair in order, adding new sites to ``visited``.

    Returns a dict of arrays: ``new_keys``/``new_src`` in discovery order and
    per-walker ``root_hits``, ``min_level``, ``max_level``, ``steps``,
    ``status``, ``end_level`` and ``end_u``.
    """
    n = len(start_keys)
    if len(stream_keys) != n:
        raise ValueError("start_keys and stream_keys differ in length")
    s = visited._s
    new_keys: list = []
    new_src: list = []
    stats = np.zeros((7, n), dtype=np.int64)
    for i in range(n):
        def on_new(key, i=i):
            new_keys.append(key)
            new_src.append(i)

        stats[:, i] = _walk(
            d, dary, int(start_keys[i]), int(stream_keys[i]) & MASK,
            R_track, R_kill, T_max, s, on_new,
        )
    return {
        "new_keys": np.array(new_keys, dtype=np.uint64),
        "new_src": np.array(new_src, dtype=np.int64),
        "root_hits": stats[0],
        "min_level": stats[1],
        "max_level": stats[2],
        "steps": stats[3],
        "status": stats[4].astype(np.int8),
        "end_level": stats[5],
        "end_u": stats[6],
    }


def island_batch(d, dary, counts, seed, replicas, site_key, R_rec, R_kill, T_max,
                 lam_pow, lam, target_key):
    """Independent islands at ``site_key``: one replica per entry of ``counts``.

    ``lam_pow[level + R_rec]`` is the weight of a recorded site.  Returns
    per-replica weight, recorded-site count, target-hit flag, radius-kill
    count, T_max-kill count, the summed ``lam**level`` of T_max kills and,
    for radius kills, the summed weight of the point where the walker's
    geodesic crosses distance ``R_rec`` (the only way back into the ball).
    """
    n_rep = len(counts)
    weights = np.zeros(n_rep)
    nsites = np.zeros(n_rep, dtype=np.int64)
    hit = np.zeros(n_rep, dtype=np.uint8)
    rkills = np.zeros(n_rep, dtype=np.int64)
    tkills = np.zeros(n_rep, dtype=np.int64)
    tweight = np.zeros(n_rep)
    rweight = np.zeros(n_rep)
    seed = int(seed) & MASK
    site_key = int(site_key)
    target_key = int(target_key)
    for r in range(n_rep):
        visited: set = set()
        acc = [0.0]

        def on_new(key):
            acc[0] += lam_pow[((key >> 52) & 63) - (key >> 58) + R_rec]

        rep = int(replicas[r])
        rk = tk = 0
        tw = rw = 0.0
        for i in range(int(counts[r])):
            skey = derive_key(seed, rep, site_key, i)
            res = _walk(d, dary, site_key, skey, R_rec, R_kill, T_max, visited, on_new)
            if res[4] == STATUS_TMAX:
                tk += 1
                tw += lam ** res[5]
            else:
                rk += 1
                u = res[6]
                gl = -R_rec if u >= R_rec else R_rec - 2 * u
                rw += lam_pow[gl + R_rec]
        weights[r] = acc[0]
        nsites[r] = len(visited)
        hit[r] = target_key in visited
        rkills[r] = rk
        tkills[r] = tk
        tweight[r] = tw
        rweight[r] = rw
    return weights, nsites, hit, rkills, tkills, tweight, rweight
