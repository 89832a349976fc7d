"""Closed-form and exactly summed bounds for the island visited-set weight.

Cells of the tree are indexed by ``(j, i)``: level ``j`` and root distance
``|j| + 2i``.  The island bound sums, over all cells,

    e(j, i) = lam**j * phi(j, |j|+2i) * min(C * d**(-beta*k), d**(-m))

which is the per-vertex visit probability bound for ``N = d**m`` walkers
(divided by mu) times the vertex weight.  All infinite tails are summed with
exact geometric formulas, so the numeric path has no truncation error.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from . import __version__
from .laws import Mixture, TwoPoint

REGIONS = ("S1+", "S2+", "S3+", "S1-", "S2-", "S3-")
M_CAP = 64


class DivergentSum(ValueError):
    """The requested cell sum has an infinite value."""


@dataclass(frozen=True)
class BoundParams:
    d: int
    mu: float
    m: int
    lam: float | None = None
    beta: float = 1.0
    c_hit: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError("d must be an integer >= 2")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be an integer >= 1")
        if self.lam is None:
            object.__setattr__(self, "lam", 1.0 / math.sqrt(self.d))
        if not 1.0 / self.d < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (1/d, 1), got {self.lam}")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if self.c_hit < 1:
            raise ValueError("C_hit must be >= 1")

    @property
    def N(self) -> int:
        return self.d**self.m

    @property
    def closed_form_applicable(self) -> bool:
        return (
            self.beta == 1.0
            and self.c_hit == 1.0
            and math.isclose(self.lam, 1.0 / math.sqrt(self.d), rel_tol=1e-15)
        )


@dataclass
class BoundReport:
    params: BoundParams
    region_sums: dict
    total: float
    alpha: float
    method: str = "two_point"
    remainder: float = 0.0

    @property
    def transient_certified(self) -> bool:
        return self.alpha < 1.0

    def to_dict(self) -> dict:
        p = self.params
        return {
            "method": self.method,
            "d": p.d,
            "mu": p.mu,
            "m": p.m,
            "N": p.N,
            "lambda": p.lam,
            "beta": p.beta,
            "C_hit": p.c_hit,
            "region_sums": dict(self.region_sums),
            "total": self.total,
            "alpha": self.alpha,
            "transient_certified": self.transient_certified,
        }


# ---------------------------------------------------------------- hitting

def hit_prob_single(d: int, k: int) -> float:
    """Probability that one walk from the root ever visits a given vertex at distance k."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return float(d) ** (-k)


def hit_prob_union(d: int, k: int, N: int, beta: float = 1.0, c_hit: float = 1.0) -> float:
    """Union bound on the probability that one of N walks visits the vertex."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return min(1.0, N * c_hit * float(d) ** (-beta * k))


# ---------------------------------------------------------------- cell sums

def _log_pre(j: int, lam: float, d: int) -> tuple[float, float]:
    """log(lam**j * phi(j, |j|)) and log(lam**j * phi(j, |j|+2i) / d**i) for i >= 1."""
    ld = math.log(d)
    base = j * math.log(lam)
    if j >= 1:
        base += j * ld
    return base, base + math.log(d - 1) - ld


class _CellSummer:
    """Sums ``lam**j * phi * min(cap, coef * d**(-beta*k))`` over cell sets."""

    def __init__(self, d: int, lam: float, beta: float, cap: float, coef: float):
        self.d, self.lam, self.beta = d, lam, beta
        self.cap, self.coef = cap, coef
        self.ld = math.log(d)
        self.log_cap = math.log(cap)
        self.log_coef = math.log(coef)
        self.r = float(d) ** (1.0 - 2.0 * beta)
        self.rho_pos = lam * float(d) ** (1.0 - beta)
        self.rho_neg = 1.0 / (lam * float(d) ** beta)

    def _capped(self, J: int, i: int) -> bool:
        return self.log_coef - self.beta * (J + 2 * i) * self.ld > self.log_cap

    def _i_star(self, J: int) -> int:
        x = ((self.log_coef - self.log_cap) / (self.beta * self.ld) - J) / 2.0
        i = max(0, math.ceil(x))
        while i > 0 and not self._capped(J, i - 1):
            i -= 1
        while self._capped(J, i):
            i += 1
        return i

    def _j_star(self) -> int:
        """Smallest |j| from which every cell of the row is uncapped."""
        x = (self.log_coef - self.log_cap) / (self.beta * self.ld)
        J = max(0, math.ceil(x))
        while J > 0 and not self._capped(J - 1, 0):
            J -= 1
        while self._capped(J, 0):
            J += 1
        return J

    def _geom(self, a: int, hi: int | None) -> float:
        r = self.r
        if hi is None:
            if r >= 1.0:
                raise DivergentSum("i-tail diverges (beta <= 1/2)")
            return r**a / (1.0 - r)
        if hi < a:
            return 0.0
        if r == 1.0:
            return float(hi - a + 1)
        return (r**a - r ** (hi + 1)) / (1.0 - r)

    def row_terms(self, j: int, lo: int, hi: int | None) -> list[float]:
        """Terms of row ``j`` over ``lo <= i <= hi`` (``hi=None`` is infinity)."""
        J = abs(j)
        lp0, lp1 = _log_pre(j, self.lam, self.d)
        ld = self.ld
        out = []
        istar = self._i_star(J)
        stop = istar - 1 if hi is None else min(hi, istar - 1)
        for i in range(lo, stop + 1):
            lp = lp0 if i == 0 else lp1 + i * ld
            out.append(math.exp(lp + self.log_cap))
        a = max(lo, istar)
        if hi is not None and a > hi:
            return out
        if a == 0:
            out.append(math.exp(lp0 + self.log_coef - self.beta * J * ld))
            a = 1
        g = self._geom(a, hi)
        if g > 0.0:
            out.append(math.exp(lp1 + self.log_coef - self.beta * J * ld) * g)
        return out

    def rows_to_infinity(self, j0: int, sign: int) -> list[float]:
        """All cells of rows ``sign*J`` for ``J >= j0`` (every i >= 0)."""
        jstar = max(self._j_star(), j0)
        out = []
        for J in range(j0, jstar):
            out.extend(self.row_terms(sign * J, 0, None))
        if self.r >= 1.0:
            raise DivergentSum("i-tail diverges (beta <= 1/2)")
        row_factor = 1.0 + (self.d - 1) / self.d * self.r / (1.0 - self.r)
        rho = self.rho_pos if sign > 0 else self.rho_neg
        if rho >= 1.0:
            raise DivergentSum(
                "level tail diverges: need lam*d**(1-beta) < 1 and lam*d**beta > 1"
            )
        out.append(self.coef * row_factor * rho**jstar / (1.0 - rho))
        return out


def e_term(j: int, i: int, p: BoundParams) -> float:
    """Summand of the island bound at cell (j, i), without the factor mu."""
    if i < 0:
        raise ValueError("i must be >= 0")
    from .tree import phi

    k = abs(j) + 2 * i
    hit = min(p.c_hit * float(p.d) ** (-p.beta * k), float(p.d) ** (-p.m))
    return p.lam**j * phi(j, k, p.d) * hit


def _numeric_region(region: str, p: BoundParams) -> float:
    d, m = p.d, p.m
    s = _CellSummer(d, p.lam, p.beta, cap=float(d) ** (-m), coef=p.c_hit)
    terms: list[float] = []
    if region == "S1+":
        for j in range(1, m + 1):
            terms.extend(s.row_terms(j, 0, (m - j) // 2))
    elif region == "S2+":
        for j in range(1, m + 1):
            terms.extend(s.row_terms(j, (m - j) // 2 + 1, None))
    elif region == "S3+":
        terms.extend(s.rows_to_infinity(m + 1, +1))
    elif region == "S1-":
        for J in range(0, m + 1):
            terms.extend(s.row_terms(-J, 0, (m - J) // 2))
    elif region == "S2-":
        for J in range(0, m + 1):
            terms.extend(s.row_terms(-J, (m - J) // 2 + 1, None))
    elif region == "S3-":
        terms.extend(s.rows_to_infinity(m + 1, -1))
    else:
        raise ValueError(f"unknown region {region!r}")
    return math.fsum(terms)


def _closed_region(region: str, p: BoundParams) -> float:
    d, m = p.d, p.m
    sd = math.sqrt(d)
    lam = 1.0 / sd
    even_pos, odd_pos = (m + 1) // 2, m // 2  # j in 1..m by parity of m-j
    even_neg, odd_neg = m // 2 + 1, (m + 1) // 2  # j in 0..m
    scale = float(d) ** (-m / 2.0)
    if region == "S1+":
        return scale * (even_pos + odd_pos / sd)
    if region == "S2+":
        return scale / d * (even_pos + odd_pos * sd)
    if region == "S3+":
        return (1.0 + 1.0 / d) * lam ** (m + 1) / (1.0 - lam)
    if region == "S1-":
        return scale * (even_neg + odd_neg / sd)
    if region == "S2-":
        return scale / d * (even_neg + odd_neg * sd)
    if region == "S3-":
        return (1.0 + 1.0 / d) * sd ** (-(m + 1)) / (1.0 - 1.0 / sd)
    raise ValueError(f"unknown region {region!r}")


def region_sum(region: str, p: BoundParams, mode: str = "numeric") -> float:
    """Sum of :func:`e_term` over one of the six cell regions.

    ``mode="closed_form"`` evaluates the exact geometric closed forms that
    hold for lam = 1/sqrt(d), beta = 1, C_hit = 1 only.
    """
    if region not in REGIONS:
        raise ValueError(f"unknown region {region!r}")
    if mode in ("closed_form", "closed-form"):
        if not p.closed_form_applicable:
            raise ValueError("closed_form needs lambda = 1/sqrt(d), beta = 1, C_hit = 1")
        return _closed_region(region, p)
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    return _numeric_region(region, p)


def total_bound(p: BoundParams, mode: str = "numeric", method: str = "two_point") -> BoundReport:
    sums = {r: region_sum(r, p, mode) for r in REGIONS}
    total = math.fsum(sums.values())
    return BoundReport(p, sums, total, p.mu * total, method=method)


def tail_weight(
    R: int,
    d: int,
    lam: float,
    beta: float = 1.0,
    c_hit: float = 1.0,
    n_walkers: float = 1,
) -> float:
    """Bound on the expected weight of sites beyond distance R visited by n walkers.

    Sums ``lam**j * phi * min(1, n*C*d**(-beta*k))`` over cells with
    ``k > R``; ``R = -1`` gives the whole tree.
    """
    if n_walkers < 0:
        raise ValueError("n_walkers must be >= 0")
    if lam * float(d) ** beta <= 1.0 or lam * float(d) ** (1.0 - beta) >= 1.0:
        raise DivergentSum("tail weight diverges for these parameters")
    if n_walkers == 0:
        return 0.0
    s = _CellSummer(d, lam, beta, cap=1.0, coef=n_walkers * c_hit)
    terms: list[float] = []
    R = max(R, -1)
    for j in range(1, R + 1):
        terms.extend(s.row_terms(j, (R - j) // 2 + 1, None))
    terms.extend(s.rows_to_infinity(max(R + 1, 1), +1))
    for J in range(0, R + 1):
        terms.extend(s.row_terms(-J, (R - J) // 2 + 1, None))
    terms.extend(s.rows_to_infinity(R + 1, -1))
    return math.fsum(terms)


def walk_weight(d: int, lam: float, beta: float = 1.0, c_hit: float = 1.0) -> float:
    """Bound on the expected weight of everything one walker (or one
    dominated cascade) started at the root ever visits."""
    return tail_weight(-1, d, lam, beta, c_hit, 1)


# ---------------------------------------------------------------- certificates

def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (
        datetime.fromtimestamp(int(epoch), timezone.utc)
        if epoch
        else datetime.now(timezone.utc)
    )
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class Certificate:
    method: str
    d: int
    mu: float
    N: object  # int, or list of ints for a mixture
    lam: float
    beta: float
    c_hit: float
    alpha: float
    region_sums: object
    transient_certified: bool
    m: object = None
    reason: str = ""
    extra: dict = field(default_factory=dict)
    tool_version: str = __version__
    timestamp: str = field(default_factory=_timestamp)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        out["C_hit"] = out.pop("c_hit")
        extra = out.pop("extra")
        out.update(extra)
        return out


def find_min_m(
    d: int,
    mu: float,
    lam: float | None = None,
    beta: float = 1.0,
    c_hit: float = 1.0,
    target: float = 1.0,
    cap: int = M_CAP,
    method: str = "two_point",
) -> tuple[int | None, Certificate]:
    """Smallest m with alpha(m) < target, scanning m = 1, 2, ... up to ``cap``.

    The scan is linear because alpha is not known to be monotone in m.  If
    no m qualifies a negative certificate is returned, not an exception.
    """
    if lam is None:
        lam = 1.0 / math.sqrt(d)
    last = None
    for m in range(1, cap + 1):
        p = BoundParams(d, mu, m, lam, beta, c_hit)
        if mu > p.N:
            continue
        report = total_bound(p, method=method)
        last = report
        if report.alpha < target:
            return m, Certificate(
                method=method, d=d, mu=mu, N=p.N, lam=lam, beta=beta, c_hit=c_hit,
                alpha=report.alpha, region_sums=report.region_sums,
                transient_certified=report.alpha < 1.0, m=m,
            )
    alpha = last.alpha if last else math.inf
    return None, Certificate(
        method=method, d=d, mu=mu, N=None, lam=lam, beta=beta, c_hit=c_hit,
        alpha=alpha if math.isfinite(alpha) else None,
        region_sums=last.region_sums if last else {},
        transient_certified=False, m=None,
        reason=f"no m <= {cap} gives alpha < {target}",
    )


# ---------------------------------------------------------------- BRW constants

def brw_m(d: int, theta: float) -> float:
    """One-step expected weight factor of the dominating BRW."""
    return math.exp(theta) / (d + 1) + 2 * d * math.exp(-theta) / (d + 1)


@dataclass(frozen=True)
class BrwConstants:
    theta_star: float
    m_theta: float
    m_star: float

    @property
    def subcritical(self) -> bool:
        return self.m_star < 1.0


def brw_constants(d: int, theta: float | None = None) -> BrwConstants:
    if d < 2:
        raise ValueError("d must be >= 2")
    theta_star = math.log(2 * d) / 2
    if theta is None:
        theta = theta_star
    return BrwConstants(theta_star, brw_m(d, theta), math.sqrt(8 * d) / (d + 1))


def two_type_exponents(d: int) -> tuple[float, float]:
    """(beta, C_hit) such that the one-frog-per-site hit bound is C_hit * d**(-beta*k)."""
    if d < 6:
        raise ValueError("the dominating BRW is subcritical only for d >= 6")
    beta = math.log((d + 1) / 4) / math.log(d)
    c_hit = (d + 1) / (d + 1 - math.sqrt(8 * d))
    return beta, c_hit


def brw_hit_bound(d: int, k: int) -> float:
    """Bound on the probability that the one-frog-per-site model ever hits a
    given vertex at distance k."""
    _, c_hit = two_type_exponents(d)
    return c_hit * (4.0 / (d + 1)) ** k


# ---------------------------------------------------------------- Biggins

def biggins_m(offspring, lam: float) -> float:
    """``sum count * exp(-lam * x)`` over (displacement, expected count) pairs."""
    offspring = list(offspring)
    if not offspring:
        raise ValueError("empty offspring specification")
    if any(c < 0 or not math.isfinite(c) for _, c in offspring):
        raise ValueError("expected counts must be finite and >= 0")
    return math.fsum(c * math.exp(-lam * x) for x, c in offspring)


@dataclass(frozen=True)
class BigginsResult:
    verdict: str  # "transient+", "transient-" or "recurrent-at-lambda-grid"
    inf_pos: float
    argmin_pos: float
    inf_neg: float
    argmin_neg: float


def _slope0(offspring) -> float:
    return -math.fsum(c * x for x, c in offspring)


def _direction_inf(offspring, lam_max: float, grid: int) -> tuple[float, float]:
    """(inf of m over lam > 0, minimizer); minimizer 0 means inf is the limit at 0."""
    total = math.fsum(c for _, c in offspring)
    if _slope0(offspring) >= 0:
        return total, 0.0
    if not any(x < 0 and c > 0 for x, c in offspring):
        return 0.0, math.inf
    f = lambda t: biggins_m(offspring, t)
    # convex in lam: widen until the grid minimum is interior, then golden-section
    hi = lam_max
    while True:
        pts = [hi * n / grid for n in range(1, grid + 1)]
        vals = [f(t) for t in pts]
        n = min(range(grid), key=vals.__getitem__)
        if n < grid - 1:
            break
        hi *= 2
    a = pts[n - 1] if n > 0 else 0.0
    b = pts[n + 1]
    g = (math.sqrt(5) - 1) / 2
    c, e = b - g * (b - a), a + g * (b - a)
    fc, fe = f(c), f(e)
    for _ in range(200):
        if fc < fe:
            b, e, fe = e, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + g * (b - a)
            fe = f(e)
        if b - a < 1e-14 * max(1.0, b):
            break
    t = (a + b) / 2
    return f(t), t


def classify_brw(offspring, lam_max: float = 10.0, grid: int = 200) -> BigginsResult:
    """Transience direction of a BRW on the integers by the Biggins criterion."""
    offspring = [(int(x), float(c)) for x, c in offspring]
    biggins_m(offspring, 0.0)
    mirrored = [(-x, c) for x, c in offspring]
    inf_pos, arg_pos = _direction_inf(offspring, lam_max, grid)
    inf_neg, arg_neg = _direction_inf(mirrored, lam_max, grid)

    def below_one(value, arg):
        # a limit approached only as lam -> 0 is not attained at any lam > 0
        if arg == 0.0:
            return value < 1.0
        return value <= 1.0 + 1e-12

    if below_one(inf_pos, arg_pos):
        verdict = "transient+"
    elif below_one(inf_neg, arg_neg):
        verdict = "transient-"
    else:
        verdict = "recurrent-at-lambda-grid"
    return BigginsResult(verdict, inf_pos, arg_pos, inf_neg, arg_neg)


# ---------------------------------------------------------------- infinite mean

def build_infinite_mean_mixture(
    d: int,
    lam: float | None = None,
    mu_per_component: float = 1.0,
    n_max: int = 20,
    beta: float = 1.0,
    c_hit: float = 1.0,
) -> tuple[Mixture, Certificate]:
    """Mixture law whose n-th component has island bound below 2**-n."""
    if lam is None:
        lam = 1.0 / math.sqrt(d)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    ms, Ns, alphas, comps = [], [], [], []
    for n in range(1, n_max + 1):
        m, cert = find_min_m(d, mu_per_component, lam, beta, c_hit, target=2.0**-n)
        if m is None:
            raise ValueError(f"component {n}: alpha < 2**-{n} unreachable with m <= {M_CAP}")
        ms.append(m)
        Ns.append(d**m)
        alphas.append(cert.alpha)
        comps.append(TwoPoint(d**m, mu_per_component))
    remainder = 2.0**-n_max
    law = Mixture(tuple(comps), remainder)
    alpha = math.fsum(alphas) + remainder
    cert = Certificate(
        method="infinite_mean", d=d, mu=mu_per_component, N=Ns, lam=lam,
        beta=beta, c_hit=c_hit, alpha=alpha,
        region_sums={"component_alphas": alphas, "remainder": remainder},
        transient_certified=alpha < 1.0, m=ms,
        extra={
            "n_max": n_max,
            "truncated_mean": n_max * mu_per_component,
            "untruncated_mean_infinite": True,
        },
    )
    return law, cert


def two_type_certificate(d: int, mu: float, cap: int = M_CAP) -> Certificate:
    """Certificate for the law ``PlusOne(TwoPoint(N, mu))`` on T_d."""
    lam = 1.0 / math.sqrt(d)
    if d < 6:
        return Certificate(
            method="two_type", d=d, mu=mu, N=None, lam=lam, beta=None, c_hit=None,
            alpha=None, region_sums={}, transient_certified=False,
            reason="d < 6: the dominating BRW is not subcritical",
        )
    beta, c_hit = two_type_exponents(d)
    if beta <= 0.5:
        return Certificate(
            method="two_type", d=d, mu=mu, N=None, lam=lam, beta=beta, c_hit=c_hit,
            alpha=None, region_sums={}, transient_certified=False,
            reason="beta <= 1/2",
        )
    m, cert = find_min_m(d, mu, lam, beta, c_hit, cap=cap, method="two_type")
    return cert
