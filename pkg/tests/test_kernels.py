import numpy as np
import pytest

from frogcert import kernels
from frogcert.rng import derive_key
from frogcert.tree import TreeParams, Vertex, key_distance, neighbors, pack, unpack

PY = kernels.backend("python")
BACKENDS = kernels.available_backends()
needs_cython = pytest.mark.skipif("cython" not in BACKENDS, reason="extension not built")


def streams(n, seed=0, site=0):
    return np.array([derive_key(seed, 0, site, i) for i in range(n)], dtype=np.uint64)


@pytest.mark.parametrize("name", BACKENDS)
def test_keyset(name):
    ks = kernels.backend(name).KeySet([5, 3])
    assert ks.add(7) and not ks.add(3)
    ks.update([1, 1])
    assert 1 in ks and 2 not in ks and len(ks) == 4
    assert ks.to_array().tolist() == [1, 3, 5, 7]
    other = ks.copy()
    other.add(9)
    assert 9 not in ks


@pytest.mark.parametrize("name", BACKENDS)
@pytest.mark.parametrize("d,dary", [(2, False), (3, True)])
def test_walk_invariants(name, d, dary):
    mod = kernels.backend(name)
    n = 200
    out = mod.walk_batch(d, dary, np.zeros(n, dtype=np.uint64), streams(n), 6, 10, 500,
                         mod.KeySet())
    keys = out["new_keys"].tolist()
    assert len(keys) == len(set(keys))
    assert all(key_distance(k) <= 6 for k in keys)
    assert np.all(np.diff(out["new_src"]) >= 0)
    radius = out["status"] == kernels.STATUS_RADIUS
    assert np.all(out["steps"][~radius] == 500)
    end_dist = 2 * out["end_u"] + out["end_level"]
    assert np.all(end_dist[radius] == 10)
    assert np.all(out["min_level"] <= 0) and np.all(out["max_level"] >= 0)
    if dary:
        assert np.all(out["end_u"] == 0)
        assert np.all(out["min_level"] == 0)


def test_python_walk_follows_tree_neighbors():
    """Replay the python kernel rule through tree.neighbors for a few walks."""
    from frogcert.rng import draw

    d = 3
    p = TreeParams(d)
    for i in range(20):
        key = derive_key(9, 0, 0, i)
        ks = PY.KeySet()
        PY.walk_batch(d, False, np.zeros(1, dtype=np.uint64), np.array([key], dtype=np.uint64),
                      12, 8, 40, ks)
        v = Vertex(0, ())
        seen = {v}
        for t in range(40):
            if v.distance >= 8:
                break
            x = draw(key, t)
            v = neighbors(v, p)[x % (d + 1)]
            seen.add(v)
        assert {unpack(k, d) for k in ks.to_array().tolist()} == seen


@needs_cython
@pytest.mark.parametrize("d,dary,R_track,R_kill,T_max", [
    (2, False, 8, 14, 10**6),
    (3, True, 5, 9, 10**6),
    (2, False, 10, 30, 37),
    (6, False, 3, 6, 10**6),
])
def test_backends_agree_walk(d, dary, R_track, R_kill, T_max):
    cy = kernels.backend("cython")
    starts = np.array([0, pack(Vertex(1, (2,)), d), pack(Vertex(0, (1, 1)), d)] * 100,
                      dtype=np.uint64)
    keys = streams(len(starts), seed=4)
    # off-root starts only exist in the regular tree
    a = PY.walk_batch(d, False, starts, keys, R_track, R_kill, T_max, PY.KeySet([0]))
    b = cy.walk_batch(d, False, starts, keys, R_track, R_kill, T_max, cy.KeySet([0]))
    for k in a:
        assert np.array_equal(a[k], b[k]), k
    z = np.zeros(300, dtype=np.uint64)
    a = PY.walk_batch(d, dary, z, keys, R_track, R_kill, T_max, PY.KeySet())
    b = cy.walk_batch(d, dary, z, keys, R_track, R_kill, T_max, cy.KeySet())
    for k in a:
        assert np.array_equal(a[k], b[k]), k


@needs_cython
@pytest.mark.parametrize("dary", [False, True])
def test_backends_agree_island(dary):
    cy = kernels.backend("cython")
    d, R = 2, 6
    lam = 2 ** -0.5
    lam_pow = np.array([lam**j for j in range(-R, R + 1)])
    counts = np.array([0, 1, 3, 16, 5, 2] * 10, dtype=np.int64)
    reps = np.arange(len(counts), dtype=np.uint64)
    target = pack(Vertex(0, (1, 1)), d)
    a = PY.island_batch(d, dary, counts, 11, reps, 0, R, 12, 60, lam_pow, lam, target)
    b = cy.island_batch(d, dary, counts, 11, reps, 0, R, 12, 60, lam_pow, lam, target)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    assert a[2].any() and a[4].any()


def test_fallback_selection(monkeypatch):
    import importlib

    monkeypatch.setenv("FROGCERT_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("FROGCERT_PURE_PYTHON")
        importlib.reload(kernels)
