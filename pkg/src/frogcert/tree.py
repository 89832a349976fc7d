"""Implicit addressing of the (d+1)-regular tree and the d-ary tree.

A vertex is stored as ``(u, w)``: ``u`` up-steps along the spine from the
root toward level -infinity, followed by the word ``w`` of child labels.
Child 1 of a spine vertex is the next spine vertex toward the root, so a
canonical address never has ``u > 0`` together with ``w[0] == 1``.

    level(v)    = len(w) - u
    distance(v) = len(w) + u

Vertices also pack into a single 64-bit key, used by the walk kernels and
by every visited-set container in the package.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

REGULAR = "regular"
DARY = "d-ary"

KEY_CODE_BITS = 52
KEY_CODE_MASK = (1 << KEY_CODE_BITS) - 1


@dataclass(frozen=True)
class TreeParams:
    d: int
    mode: str = REGULAR

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d!r}")
        if self.mode not in (REGULAR, DARY):
            raise ValueError(f"unknown tree mode {self.mode!r}")

    @property
    def dary(self) -> bool:
        return self.mode == DARY


class Vertex(NamedTuple):
    u: int
    w: tuple = ()

    @property
    def level(self) -> int:
        return len(self.w) - self.u

    @property
    def distance(self) -> int:
        return len(self.w) + self.u


def root() -> Vertex:
    return Vertex(0, ())


def is_canonical(v: Vertex, params: TreeParams) -> bool:
    if v.u < 0 or any(not 1 <= c <= params.d for c in v.w):
        return False
    if params.dary and v.u != 0:
        return False
    return not (v.u > 0 and v.w and v.w[0] == 1)


def _check(v: Vertex, params: TreeParams) -> None:
    if not is_canonical(v, params):
        raise ValueError(f"non-canonical vertex {v!r} for {params}")


def neighbors(v: Vertex, params: TreeParams) -> list[Vertex]:
    """Neighbors of ``v``, ordered ``[parent, child 1, ..., child d]``.

    The parent is the unique neighbor one level lower.  At the d-ary root
    there is no parent and the list is ``[child 1, ..., child d]``.  This
    ordering is the one the walk kernels index with a uniform draw.
    """
    _check(v, params)
    d = params.d
    u, w = v
    if w:
        out = [Vertex(u, w[:-1])]
        out.extend(Vertex(u, w + (c,)) for c in range(1, d + 1))
        return out
    if u > 0:
        out = [Vertex(u + 1, ()), Vertex(u - 1, ())]
        out.extend(Vertex(u, (c,)) for c in range(2, d + 1))
        return out
    children = [Vertex(0, (c,)) for c in range(1, d + 1)]
    if params.dary:
        return children
    return [Vertex(1, ())] + children


def toward_root(v: Vertex) -> Vertex | None:
    """The neighbor of ``v`` on the geodesic to the root (None at the root)."""
    if v.w:
        return Vertex(v.u, v.w[:-1])
    if v.u > 0:
        return Vertex(v.u - 1, ())
    return None


def geodesic_point(v: Vertex, r: int) -> Vertex:
    """The vertex at distance ``r`` from the root on the geodesic to ``v``."""
    if not 0 <= r <= v.distance:
        raise ValueError("r must lie between 0 and distance(v)")
    if r <= v.u:
        return Vertex(r, ())
    return Vertex(v.u, v.w[: r - v.u])


def tree_distance(a: Vertex, b: Vertex) -> int:
    """Graph distance between two canonical vertices."""
    pa, pb = _root_path(a), _root_path(b)
    common = 0
    for x, y in zip(pa, pb):
        if x != y:
            break
        common += 1
    return len(pa) + len(pb) - 2 * common


def _root_path(v: Vertex) -> list[Vertex]:
    return [geodesic_point(v, r) for r in range(v.distance + 1)]


def phi(j: int, k: int, d: int) -> int:
    """Number of vertices of T_d at level ``j`` and root distance ``k``."""
    if d < 2:
        raise ValueError("d must be >= 2")
    extra = k - abs(j)
    if extra < 0 or extra % 2:
        return 0
    i = extra // 2
    if j >= 1:
        return d**j if i == 0 else (d - 1) * d ** (j + i - 1)
    return 1 if i == 0 else (d - 1) * d ** (i - 1)


def ball_size(R: int, params: TreeParams) -> int:
    d = params.d
    if params.dary:
        return sum(d**k for k in range(R + 1))
    return 1 + sum((d + 1) * d ** (k - 1) for k in range(1, R + 1))


MAX_BALL = 2_000_000


def enumerate_ball(R: int, params: TreeParams) -> list[Vertex]:
    """All canonical vertices within distance ``R`` of the root, by BFS."""
    if R < 0:
        raise ValueError("radius must be nonnegative")
    if ball_size(R, params) > MAX_BALL:
        raise ValueError(
            f"ball of radius {R} for d={params.d} exceeds {MAX_BALL} vertices"
        )
    start = root()
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if v.distance == R:
            continue
        for nb in neighbors(v, params):
            if nb not in seen:
                seen.add(nb)
                order.append(nb)
                queue.append(nb)
    return order


# packed keys: | u (6 bits) | len(w) (6 bits) | base-d code of w (52 bits) |

def max_key_radius(d: int) -> int:
    """Largest radius whose vertices all fit the 64-bit key layout."""
    r = 0
    while r < 63 and d ** (r + 1) <= (1 << KEY_CODE_BITS):
        r += 1
    return r


def check_key_radius(R: int, d: int) -> None:
    if R > max_key_radius(d):
        raise ValueError(
            f"radius {R} too large to address for d={d} "
            f"(limit {max_key_radius(d)})"
        )


def pack(v: Vertex, d: int) -> int:
    code = 0
    for c in v.w:
        code = code * d + (c - 1)
    if v.u > 63 or len(v.w) > 63 or code > KEY_CODE_MASK:
        raise ValueError(f"vertex {v!r} does not fit a 64-bit key")
    return (v.u << 58) | (len(v.w) << KEY_CODE_BITS) | code


def unpack(key: int, d: int) -> Vertex:
    key = int(key)
    u = key >> 58
    n = (key >> KEY_CODE_BITS) & 63
    code = key & KEY_CODE_MASK
    w = [0] * n
    for pos in range(n - 1, -1, -1):
        code, digit = divmod(code, d)
        w[pos] = digit + 1
    return Vertex(u, tuple(w))


def key_level(key: int) -> int:
    key = int(key)
    return ((key >> KEY_CODE_BITS) & 63) - (key >> 58)


def key_distance(key: int) -> int:
    key = int(key)
    return ((key >> KEY_CODE_BITS) & 63) + (key >> 58)
