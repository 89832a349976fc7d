"""Per-site sleeping-particle count distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

INT_LIMIT = (1 << 63) - 1


@dataclass(frozen=True)
class TwoPoint:
    """``N`` particles with probability ``mu/N``, otherwise none."""

    N: int
    mu: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not 0 < self.mu <= self.N:
            raise ValueError(f"need 0 < mu <= N, got mu={self.mu}, N={self.N}")
        if self.N > INT_LIMIT:
            raise ValueError("N exceeds the machine integer range")

    @property
    def p(self) -> float:
        return self.mu / self.N


@dataclass(frozen=True)
class PlusOne:
    """One guaranteed particle plus a draw from ``inner``."""

    inner: "ParticleLaw"


@dataclass(frozen=True)
class FinitePMF:
    support: tuple  # ((count, prob), ...)

    def __post_init__(self):
        support = tuple((int(c), float(p)) for c, p in self.support)
        object.__setattr__(self, "support", support)
        if not support:
            raise ValueError("empty support")
        if any(c < 0 or c > INT_LIMIT for c, _ in support):
            raise ValueError("counts must be nonnegative machine integers")
        if any(p < 0 for _, p in support):
            raise ValueError("probabilities must be nonnegative")
        total = math.fsum(p for _, p in support)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")


@dataclass(frozen=True)
class Mixture:
    """Truncation of ``X = sum_n X_n`` with independent ``X_n ~ TwoPoint(N_n, mu)``.

    ``remainder_bound`` bounds the expected weight contributed by the
    components beyond ``len(components)`` that were dropped.
    """

    components: tuple
    remainder_bound: float = 0.0
    infinite_mean: bool = field(default=True)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("mixture needs at least one component")
        if not all(isinstance(c, TwoPoint) for c in self.components):
            raise TypeError("mixture components must be TwoPoint laws")
        if sum(c.N for c in self.components) > INT_LIMIT:
            raise ValueError("mixture draws could exceed the machine integer range")
        if self.remainder_bound < 0:
            raise ValueError("remainder_bound must be >= 0")

    @property
    def n_max(self) -> int:
        return len(self.components)


ParticleLaw = Union[TwoPoint, PlusOne, FinitePMF, Mixture]


def zero() -> FinitePMF:
    return FinitePMF(((0, 1.0),))


def constant(n: int) -> FinitePMF:
    return FinitePMF(((n, 1.0),))


def sample(law: ParticleLaw, rng) -> int:
    """One draw.  ``rng`` needs only a ``random()`` method returning [0, 1)."""
    if isinstance(law, TwoPoint):
        return law.N if rng.random() < law.p else 0
    if isinstance(law, PlusOne):
        return 1 + sample(law.inner, rng)
    if isinstance(law, FinitePMF):
        if len(law.support) == 1:
            return law.support[0][0]
        x = rng.random()
        acc = 0.0
        for count, p in law.support:
            acc += p
            if x < acc:
                return count
        return law.support[-1][0]
    if isinstance(law, Mixture):
        return sum(sample(c, rng) for c in law.components)
    raise TypeError(f"not a particle law: {law!r}")


def mean(law: ParticleLaw) -> float:
    """Exact expectation; for a Mixture this is the truncated mean."""
    if isinstance(law, TwoPoint):
        return float(law.mu)
    if isinstance(law, PlusOne):
        return 1.0 + mean(law.inner)
    if isinstance(law, FinitePMF):
        return math.fsum(c * p for c, p in law.support)
    if isinstance(law, Mixture):
        return math.fsum(c.mu for c in law.components)
    raise TypeError(f"not a particle law: {law!r}")


def variance(law: ParticleLaw) -> float:
    if isinstance(law, TwoPoint):
        return law.mu * law.N - law.mu**2
    if isinstance(law, PlusOne):
        return variance(law.inner)
    if isinstance(law, FinitePMF):
        m = mean(law)
        return math.fsum(p * (c - m) ** 2 for c, p in law.support)
    if isinstance(law, Mixture):
        return math.fsum(variance(c) for c in law.components)
    raise TypeError(f"not a particle law: {law!r}")


def has_infinite_mean(law: ParticleLaw) -> bool:
    """Whether the untruncated construction behind ``law`` has infinite mean."""
    if isinstance(law, Mixture):
        return law.infinite_mean
    if isinstance(law, PlusOne):
        return has_infinite_mean(law.inner)
    return False


def pmf(law: ParticleLaw, max_support: int = 4096) -> dict | None:
    """Exact pmf as ``{count: prob}``, or None if the support is too large."""
    if isinstance(law, TwoPoint):
        if law.p == 1.0:
            return {law.N: 1.0}
        return {0: 1.0 - law.p, law.N: law.p}
    if isinstance(law, PlusOne):
        inner = pmf(law.inner, max_support)
        return None if inner is None else {c + 1: p for c, p in inner.items()}
    if isinstance(law, FinitePMF):
        out: dict = {}
        for c, p in law.support:
            out[c] = out.get(c, 0.0) + p
        return out
    if isinstance(law, Mixture):
        acc = {0: 1.0}
        for comp in law.components:
            nxt: dict = {}
            for c, p in acc.items():
                for c2, p2 in pmf(comp).items():
                    nxt[c + c2] = nxt.get(c + c2, 0.0) + p * p2
            if len(nxt) > max_support:
                return None
            acc = nxt
        return acc
    raise TypeError(f"not a particle law: {law!r}")


def is_plus_one(law: ParticleLaw) -> bool:
    return isinstance(law, PlusOne)


def to_dict(law: ParticleLaw) -> dict:
    if isinstance(law, TwoPoint):
        return {"type": "two_point", "N": law.N, "mu": law.mu}
    if isinstance(law, PlusOne):
        return {"type": "plus_one", "inner": to_dict(law.inner)}
    if isinstance(law, FinitePMF):
        return {"type": "finite_pmf", "support": [list(x) for x in law.support]}
    if isinstance(law, Mixture):
        return {
            "type": "mixture",
            "components": [to_dict(c) for c in law.components],
            "remainder_bound": law.remainder_bound,
        }
    raise TypeError(f"not a particle law: {law!r}")


_FIELDS = {
    "two_point": {"type", "N", "mu"},
    "plus_one": {"type", "inner"},
    "finite_pmf": {"type", "support"},
    "mixture": {"type", "components", "remainder_bound"},
}


def from_dict(spec: dict) -> ParticleLaw:
    """Inverse of :func:`to_dict`; unknown tags or fields are rejected."""
    if not isinstance(spec, dict) or spec.get("type") not in _FIELDS:
        raise ValueError(f"bad law spec: {spec!r}")
    kind = spec["type"]
    unknown = set(spec) - _FIELDS[kind]
    if unknown:
        raise ValueError(f"unknown fields for {kind}: {sorted(unknown)}")
    if kind == "two_point":
        return TwoPoint(int(spec["N"]), float(spec["mu"]))
    if kind == "plus_one":
        return PlusOne(from_dict(spec["inner"]))
    if kind == "finite_pmf":
        return FinitePMF(tuple((c, p) for c, p in spec["support"]))
    return Mixture(
        tuple(from_dict(c) for c in spec["components"]),
        float(spec.get("remainder_bound", 0.0)),
    )


def parse(text: str) -> ParticleLaw:
    """Parse the compact CLI form.

    ``twopoint:N:mu``, ``zero``, ``const:n``, ``pmf:c=p,c=p,...``,
    ``poisson:mean:cutoff`` (renormalized truncated Poisson) and
    ``plusone:<law>``.
    """
    head, _, rest = text.strip().partition(":")
    head = head.lower()
    if head == "twopoint":
        n, mu = rest.split(":")
        return TwoPoint(int(n), float(mu))
    if head == "zero":
        return zero()
    if head == "const":
        return constant(int(rest))
    if head == "pmf":
        pairs = []
        for item in rest.split(","):
            c, p = item.split("=")
            pairs.append((int(c), float(p)))
        return FinitePMF(tuple(pairs))
    if head == "poisson":
        lam, cutoff = rest.split(":")
        return truncated_poisson(float(lam), int(cutoff))
    if head == "plusone":
        return PlusOne(parse(rest))
    raise ValueError(f"cannot parse law {text!r}")


def truncated_poisson(lam: float, cutoff: int) -> FinitePMF:
    weights = [math.exp(-lam + c * math.log(lam) - math.lgamma(c + 1)) for c in range(cutoff + 1)]
    total = math.fsum(weights)
    probs = [w / total for w in weights]
    # push the rounding residue onto the mode so the pmf sums to 1 exactly
    mode = max(range(len(probs)), key=probs.__getitem__)
    probs[mode] += 1.0 - math.fsum(probs)
    return FinitePMF(tuple(zip(range(cutoff + 1), probs)))
