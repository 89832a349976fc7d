import json
import math

import pytest
from hypothesis import given, strategies as st

from frogcert.analytic import (
    REGIONS,
    BoundParams,
    DivergentSum,
    biggins_m,
    brw_constants,
    brw_hit_bound,
    brw_m,
    build_infinite_mean_mixture,
    classify_brw,
    e_term,
    find_min_m,
    hit_prob_single,
    hit_prob_union,
    region_sum,
    tail_weight,
    total_bound,
    two_type_certificate,
    two_type_exponents,
    walk_weight,
)
from frogcert.tree import phi


def brute_total(p: BoundParams, J=400, I=400) -> float:
    """Plain double loop over cells, far past where the terms matter."""
    d, lam = p.d, p.lam
    terms = []
    for j in range(-J, J + 1):
        for i in range(I):
            k = abs(j) + 2 * i
            f = phi(j, k, d)
            if f == 0:
                continue
            lt = j * math.log(lam) + math.log(f)
            lc = min(math.log(p.c_hit) - p.beta * k * math.log(d), -p.m * math.log(d))
            t = math.exp(lt + lc)
            terms.append(t)
            if t < 1e-30 and i > 5:
                break
    return p.mu * math.fsum(terms)


def brute_tail(R, d, lam, n) -> float:
    terms = []
    for j in range(-400, 401):
        for i in range(400):
            k = abs(j) + 2 * i
            if k <= R:
                continue
            f = phi(j, k, d)
            t = lam**j * f * min(1.0, n * float(d) ** -k)
            terms.append(t)
            if t < 1e-30 and i > 5:
                break
    return math.fsum(terms)


# ---------------------------------------------------------------- hitting

def test_hit_prob_single():
    assert hit_prob_single(2, 1) == 0.5
    assert hit_prob_single(5, 0) == 1.0
    assert math.isclose(hit_prob_single(3, 4), 1 / 81)


def test_hit_prob_union():
    assert hit_prob_union(2, 3, 4) == 0.5
    assert hit_prob_union(2, 1, 100) == 1.0


@given(st.integers(2, 6), st.integers(0, 12), st.integers(1, 5000))
def test_union_bound_dominates_exact(d, k, N):
    exact = 1 - (1 - float(d) ** -k) ** N
    assert exact <= hit_prob_union(d, k, N) + 1e-15


# ---------------------------------------------------------------- cell sums

def test_e_term_examples():
    p = BoundParams(2, 1.0, 2)
    assert e_term(0, 0, p) == 0.25
    assert math.isclose(e_term(1, 0, p), 2 / math.sqrt(2) / 4, rel_tol=1e-15)
    assert e_term(-3, 2, p) >= 0


def test_s1_minus_small_case():
    p = BoundParams(2, 1.0, 1)
    expected = 0.5 + math.sqrt(2) * 0.5
    assert math.isclose(region_sum("S1-", p), expected, rel_tol=1e-12)


@pytest.mark.parametrize("d,m", [(2, 1), (2, 4), (3, 2), (5, 3)])
def test_total_matches_brute_force(d, m):
    p = BoundParams(d, 1.0, m)
    assert math.isclose(total_bound(p).alpha, brute_total(p), rel_tol=1e-11)


def test_total_matches_brute_force_general_beta():
    p = BoundParams(14, 2.0, 3, lam=0.3, beta=0.6, c_hit=3.0)
    assert math.isclose(total_bound(p).alpha, brute_total(p), rel_tol=1e-10)


@pytest.mark.parametrize("d", [2, 3, 5])
@pytest.mark.parametrize("m", range(2, 13))
def test_closed_form_agrees(d, m):
    p = BoundParams(d, 1.0, m)
    for r in REGIONS:
        a, b = region_sum(r, p, "numeric"), region_sum(r, p, "closed_form")
        assert math.isclose(a, b, rel_tol=1e-12), r


def test_closed_form_guard():
    with pytest.raises(ValueError):
        region_sum("S1+", BoundParams(2, 1.0, 3, lam=0.6), "closed_form")
    with pytest.raises(ValueError):
        region_sum("S4+", BoundParams(2, 1.0, 3))


def test_report_invariants():
    rep = total_bound(BoundParams(2, 1.0, 10))
    assert math.isclose(rep.total, math.fsum(rep.region_sums.values()), rel_tol=1e-12)
    assert rep.alpha == rep.total
    # regression fixture
    assert math.isclose(rep.alpha, 1.1838992597140698, rel_tol=1e-12)
    assert not rep.transient_certified


def test_s3_plus_decreases():
    vals = [region_sum("S3+", BoundParams(2, 1.0, m)) for m in range(1, 30)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3


def test_params_validation():
    for bad in [dict(d=1, mu=1, m=1), dict(d=2, mu=0, m=1), dict(d=2, mu=1, m=0),
                dict(d=2, mu=1, m=1, lam=0.5), dict(d=2, mu=1, m=1, beta=1.5),
                dict(d=2, mu=1, m=1, c_hit=0.5)]:
        with pytest.raises(ValueError):
            BoundParams(**bad)
    assert BoundParams(2, 1, 3).closed_form_applicable
    assert not BoundParams(2, 1, 3, lam=0.6).closed_form_applicable


# ---------------------------------------------------------------- tails

def test_tail_weight_basics():
    assert tail_weight(0, 2, 1 / math.sqrt(2), n_walkers=0) == 0.0
    vals = [tail_weight(R, 2, 1 / math.sqrt(2)) for R in range(0, 30)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    # two more levels of depth cost a factor approaching lam**-2 = 2
    ratios = [vals[R] / vals[R + 2] for R in range(10, 26)]
    assert all(1.5 < r < 2 for r in ratios)
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    with pytest.raises(DivergentSum):
        tail_weight(3, 2, 0.4)


@pytest.mark.parametrize("R,n", [(0, 1), (5, 1), (6, 40), (9, 3)])
def test_tail_weight_matches_brute_force(R, n):
    lam = 1 / math.sqrt(2)
    assert math.isclose(tail_weight(R, 2, lam, n_walkers=n), brute_tail(R, 2, lam, n),
                        rel_tol=1e-11)


def test_walk_weight_is_whole_tree():
    lam = 1 / math.sqrt(2)
    assert math.isclose(walk_weight(2, lam), brute_tail(-1, 2, lam, 1), rel_tol=1e-11)
    assert math.isclose(walk_weight(2, lam), 8.742640687119286, rel_tol=1e-9)


# ---------------------------------------------------------------- scans

def test_find_min_m_fixture():
    m, cert = find_min_m(2, 10.0)
    assert m == 19 and cert.N == 2**19
    assert math.isclose(cert.alpha, 0.88544, rel_tol=1e-4)
    assert total_bound(BoundParams(2, 10.0, 18)).alpha >= 1
    assert cert.transient_certified


def test_find_min_m_trivial_and_negative():
    m, _ = find_min_m(2, 0.01)
    assert m == 1
    m, cert = find_min_m(2, 1e6, cap=5)
    assert m is None and not cert.transient_certified and cert.reason


def test_alpha_eventually_decreases():
    a = [total_bound(BoundParams(2, 10.0, m)).alpha for m in range(1, 65)]
    assert all(a[m + 4] < a[m] for m in range(0, 60))


# ---------------------------------------------------------------- BRW constants

def test_brw_constants():
    c6 = brw_constants(6)
    assert math.isclose(c6.m_star, math.sqrt(48) / 7)
    assert c6.subcritical
    c5 = brw_constants(5)
    assert math.isclose(c5.m_star, 1.05409, rel_tol=1e-5) and not c5.subcritical
    for d in range(2, 51):
        c = brw_constants(d)
        assert abs(brw_m(d, c.theta_star) - c.m_star) < 1e-12


def test_subcritical_threshold():
    assert [d for d in range(2, 101) if brw_constants(d).subcritical] == list(range(6, 101))


def test_beta_threshold():
    assert [d for d in range(6, 101) if two_type_exponents(d)[0] > 0.5] == list(range(14, 101))
    assert math.isclose(two_type_exponents(14)[0], 0.5009, abs_tol=1e-4)
    assert math.isclose(two_type_exponents(13)[0], 0.4884, abs_tol=1e-4)
    with pytest.raises(ValueError):
        two_type_exponents(5)


def test_brw_hit_bound():
    assert math.isclose(brw_hit_bound(14, 1), 0.9056, abs_tol=1e-4)
    assert brw_hit_bound(14, 0) >= 1
    assert math.isclose(brw_hit_bound(20, 5) / brw_hit_bound(20, 4), 4 / 21)


# ---------------------------------------------------------------- Biggins

def test_biggins_projection_matches_constants():
    for d in (2, 6, 30):
        spec = [(-1, 1 / (d + 1)), (1, 2 * d / (d + 1))]
        c = brw_constants(d)
        assert math.isclose(biggins_m(spec, c.theta_star), c.m_star, rel_tol=1e-12)


def test_classify():
    assert classify_brw([(-1, 0.5), (1, 0.5)]).verdict == "recurrent-at-lambda-grid"
    assert classify_brw([(-1, 1.0), (1, 1.0)]).verdict == "recurrent-at-lambda-grid"
    assert classify_brw([(-1, 0.3), (1, 0.5)]).verdict == "transient+"
    assert classify_brw([(-1, 0.9), (1, 0.2)]).verdict == "transient-"
    res = classify_brw([(-1, 1 / 7), (1, 12 / 7)])
    assert res.verdict == "transient+"
    assert math.isclose(res.inf_pos, math.sqrt(48) / 7, rel_tol=1e-9)
    assert math.isclose(res.argmin_pos, math.log(12) / 2, rel_tol=1e-6)
    with pytest.raises(ValueError):
        biggins_m([], 1.0)
    with pytest.raises(ValueError):
        biggins_m([(1, -0.5)], 1.0)


# ---------------------------------------------------------------- certificates

def test_infinite_mean_mixture():
    law, cert = build_infinite_mean_mixture(2, n_max=20)
    alphas = cert.region_sums["component_alphas"]
    assert len(alphas) == 20 and len(cert.N) == 20
    assert all(a < 2.0**-n for n, a in enumerate(alphas, start=1))
    assert all(b >= a for a, b in zip(cert.N, cert.N[1:]))
    assert cert.alpha < 1 and cert.transient_certified
    assert cert.extra["truncated_mean"] == 20.0
    assert math.isclose(sum(c.mu for c in law.components), 20.0)


def test_two_type_certificates():
    c50 = two_type_certificate(50, 10.0)
    assert c50.transient_certified and c50.m == 7
    c13 = two_type_certificate(13, 10.0)
    assert not c13.transient_certified and c13.reason == "beta <= 1/2"
    c5 = two_type_certificate(5, 10.0)
    assert not c5.transient_certified and c5.reason.startswith("d < 6")


def test_certificate_schema(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    _, cert = find_min_m(2, 10.0)
    out = cert.to_dict()
    for key in ("method", "d", "mu", "N", "lambda", "beta", "C_hit", "alpha",
                "region_sums", "transient_certified", "tool_version", "timestamp"):
        assert key in out
    assert out["timestamp"] == "1970-01-01T00:00:00Z"
    json.dumps(out, allow_nan=False)
