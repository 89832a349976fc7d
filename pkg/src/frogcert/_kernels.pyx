# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled walk kernels; mirrors ``_kernels_py`` output for output."""

import numpy as np

from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.math cimport pow
from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector

BACKEND = "cython"

cdef enum:
    ST_RADIUS = 0
    ST_TMAX = 1

STATUS_RADIUS = ST_RADIUS
STATUS_TMAX = ST_TMAX

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t fc_fmix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static inline uint64_t fc_absorb(uint64_t h, uint64_t x) {
        return fc_fmix((h ^ x) + 0x9E3779B97F4A7C15ULL);
    }
    static inline uint64_t fc_derive(uint64_t seed, uint64_t rep, uint64_t site, uint64_t idx) {
        uint64_t h = fc_fmix(seed + 0x9E3779B97F4A7C15ULL);
        h = fc_absorb(h, rep);
        h = fc_absorb(h, site);
        return fc_absorb(h, idx);
    }
    static const uint64_t FC_GAMMA = 0x9E3779B97F4A7C15ULL;
    static const uint64_t FC_CODE_MASK = (1ULL << 52) - 1;
    """
    uint64_t fc_fmix(uint64_t z) nogil
    uint64_t fc_derive(uint64_t seed, uint64_t rep, uint64_t site, uint64_t idx) nogil
    uint64_t FC_GAMMA
    uint64_t FC_CODE_MASK


cdef struct WalkOut:
    int64_t root_hits
    int64_t min_level
    int64_t max_level
    int64_t steps
    int64_t status
    int64_t end_level
    int64_t end_u


cdef class KeySet:
    """Set of packed vertex keys."""

    cdef unordered_set[uint64_t] s

    def __init__(self, keys=()):
        for k in keys:
            self.s.insert(<uint64_t>k)

    def add(self, key):
        return self.s.insert(<uint64_t>key).second

    def update(self, keys):
        for k in keys:
            self.s.insert(<uint64_t>k)

    def __contains__(self, key):
        return self.s.count(<uint64_t>key) > 0

    def __len__(self):
        return self.s.size()

    def to_array(self):
        out = np.empty(self.s.size(), dtype=np.uint64)
        cdef uint64_t[:] view = out
        cdef Py_ssize_t i = 0
        for k in self.s:
            view[i] = k
            i += 1
        out.sort()
        return out

    def copy(self):
        cdef KeySet other = KeySet()
        other.s = self.s
        return other


cdef inline void _record(uint64_t key, unordered_set[uint64_t]* visited,
                         vector[uint64_t]* new_keys) noexcept nogil:
    if visited.insert(key).second:
        new_keys.push_back(key)


cdef void _walk(int64_t d, bint dary, uint64_t start_key, uint64_t skey,
                int64_t R_track, int64_t R_kill, int64_t T_max,
                unordered_set[uint64_t]* visited, vector[uint64_t]* new_keys,
                WalkOut* out) noexcept nogil:
    cdef int64_t u = <int64_t>(start_key >> 58)
    cdef int64_t L = <int64_t>((start_key >> 52) & 63)
    cdef uint64_t code = start_key & FC_CODE_MASK
    cdef uint64_t nb = <uint64_t>(d + 1)
    cdef uint64_t ud = <uint64_t>d
    cdef uint64_t x, r
    cdef uint64_t state = skey
    cdef int64_t level = L - u
    cdef int64_t t = 0
    out.root_hits = 0
    out.min_level = level
    out.max_level = level
    if u + L <= R_track:
        _record((<uint64_t>u << 58) | (<uint64_t>L << 52) | code, visited, new_keys)
    if u + L >= R_kill:
        out.steps = 0
        out.status = ST_RADIUS
        out.end_level = level
        out.end_u = u
        return
    while True:
        if t >= T_max:
            out.steps = t
            out.status = ST_TMAX
            out.end_level = level
            out.end_u = u
            return
        state = state + FC_GAMMA
        x = fc_fmix(state)
        t += 1
        if L > 0:
            r = x % nb
            if r == 0:
                if L <= R_track:
                    code = code // ud
                L -= 1
            else:
                if L < R_track:
                    code = code * ud + (r - 1)
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
                r = x % ud + 1
            else:
                r = x % nb
            if r == 0:
                u = 1
            else:
                if R_track > 0:
                    code = r - 1
                L = 1
        level = L - u
        if level < out.min_level:
            out.min_level = level
        elif level > out.max_level:
            out.max_level = level
        if u == 0 and L == 0:
            out.root_hits += 1
        if u + L <= R_track:
            _record((<uint64_t>u << 58) | (<uint64_t>L << 52) | code, visited, new_keys)
        if u + L >= R_kill:
            out.steps = t
            out.status = ST_RADIUS
            out.end_level = level
            out.end_u = u
            return


def walk_batch(int64_t d, bint dary, start_keys, stream_keys, int64_t R_track,
               int64_t R_kill, int64_t T_max, KeySet visited):
    cdef uint64_t[:] starts = np.ascontiguousarray(start_keys, dtype=np.uint64)
    cdef uint64_t[:] streams = np.ascontiguousarray(stream_keys, dtype=np.uint64)
    cdef Py_ssize_t n = starts.shape[0]
    if streams.shape[0] != n:
        raise ValueError("start_keys and stream_keys differ in length")
    stats_arr = np.zeros((7, n), dtype=np.int64)
    cdef int64_t[:, :] stats = stats_arr
    cdef vector[uint64_t] new_keys
    cdef vector[int64_t] new_src
    cdef WalkOut res
    cdef Py_ssize_t i, j, before
    with nogil:
        for i in range(n):
            before = new_keys.size()
            _walk(d, dary, starts[i], streams[i], R_track, R_kill, T_max,
                  &visited.s, &new_keys, &res)
            for j in range(before, <Py_ssize_t>new_keys.size()):
                new_src.push_back(i)
            stats[0, i] = res.root_hits
            stats[1, i] = res.min_level
            stats[2, i] = res.max_level
            stats[3, i] = res.steps
            stats[4, i] = res.status
            stats[5, i] = res.end_level
            stats[6, i] = res.end_u
    keys_out = np.empty(new_keys.size(), dtype=np.uint64)
    src_out = np.empty(new_src.size(), dtype=np.int64)
    cdef uint64_t[:] kv = keys_out
    cdef int64_t[:] sv = src_out
    for i in range(<Py_ssize_t>new_keys.size()):
        kv[i] = new_keys[i]
        sv[i] = new_src[i]
    return {
        "new_keys": keys_out,
        "new_src": src_out,
        "root_hits": stats_arr[0],
        "min_level": stats_arr[1],
        "max_level": stats_arr[2],
        "steps": stats_arr[3],
        "status": stats_arr[4].astype(np.int8),
        "end_level": stats_arr[5],
        "end_u": stats_arr[6],
    }


def island_batch(int64_t d, bint dary, counts, seed, replicas, site_key,
                 int64_t R_rec, int64_t R_kill, int64_t T_max, lam_pow,
                 double lam, target_key):
    cdef int64_t[:] cnt = np.ascontiguousarray(counts, dtype=np.int64)
    cdef uint64_t[:] reps = np.ascontiguousarray(replicas, dtype=np.uint64)
    cdef double[:] lp = np.ascontiguousarray(lam_pow, dtype=np.float64)
    cdef Py_ssize_t n_rep = cnt.shape[0]
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t site = <uint64_t>int(site_key)
    cdef uint64_t target = <uint64_t>int(target_key)
    weights_arr = np.zeros(n_rep)
    nsites_arr = np.zeros(n_rep, dtype=np.int64)
    hit_arr = np.zeros(n_rep, dtype=np.uint8)
    rk_arr = np.zeros(n_rep, dtype=np.int64)
    tk_arr = np.zeros(n_rep, dtype=np.int64)
    tw_arr = np.zeros(n_rep)
    rw_arr = np.zeros(n_rep)
    cdef double[:] rweight = rw_arr
    cdef double[:] weights = weights_arr
    cdef int64_t[:] nsites = nsites_arr
    cdef uint8_t[:] hit = hit_arr
    cdef int64_t[:] rkills = rk_arr
    cdef int64_t[:] tkills = tk_arr
    cdef double[:] tweight = tw_arr
    cdef unordered_set[uint64_t] visited
    cdef vector[uint64_t] new_keys
    cdef WalkOut res
    cdef Py_ssize_t r, j
    cdef int64_t i, rk, tk
    cdef double acc, tw, rw
    cdef int64_t gl
    cdef uint64_t key
    with nogil:
        for r in range(n_rep):
            visited.clear()
            acc = 0.0
            rk = 0
            tk = 0
            tw = 0.0
            rw = 0.0
            for i in range(cnt[r]):
                new_keys.clear()
                _walk(d, dary, site, fc_derive(useed, reps[r], site, <uint64_t>i),
                      R_rec, R_kill, T_max, &visited, &new_keys, &res)
                for j in range(<Py_ssize_t>new_keys.size()):
                    key = new_keys[j]
                    acc += lp[<int64_t>((key >> 52) & 63) - <int64_t>(key >> 58) + R_rec]
                if res.status == ST_TMAX:
                    tk += 1
                    tw += pow(lam, <double>res.end_level)
                else:
                    rk += 1
                    gl = -R_rec if res.end_u >= R_rec else R_rec - 2 * res.end_u
                    rw += lp[gl + R_rec]
            weights[r] = acc
            nsites[r] = visited.size()
            hit[r] = visited.count(target) > 0
            rkills[r] = rk
            tkills[r] = tk
            tweight[r] = tw
            rweight[r] = rw
    return weights_arr, nsites_arr, hit_arr, rk_arr, tk_arr, tw_arr, rw_arr
