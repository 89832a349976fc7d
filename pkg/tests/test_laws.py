import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from frogcert import laws
from frogcert.laws import FinitePMF, Mixture, PlusOne, TwoPoint
from frogcert.rng import CounterStream


def draws(law, n, seed=0):
    s = CounterStream.for_site(seed, 0, 0)
    return np.array([laws.sample(law, s) for _ in range(n)])


def test_two_point_validation():
    with pytest.raises(ValueError):
        TwoPoint(4, 5.0)
    with pytest.raises(ValueError):
        TwoPoint(0, 0.1)
    with pytest.raises(ValueError):
        TwoPoint(1 << 64, 1.0)
    assert TwoPoint(8, 2.0).p == 0.25


def test_two_point_sampling():
    law = TwoPoint(16, 2.0)
    x = draws(law, 40000)
    assert set(np.unique(x)) <= {0, 16}
    se = math.sqrt(laws.variance(law) / len(x))
    assert abs(x.mean() - 2.0) < 4 * se


def test_finite_pmf_must_sum_to_one():
    with pytest.raises(ValueError):
        FinitePMF(((0, 0.5), (1, 0.4)))
    assert laws.constant(3).support == ((3, 1.0),)
    assert laws.sample(laws.zero(), CounterStream(1)) == 0


def test_plus_one():
    law = PlusOne(TwoPoint(4, 1.0))
    assert laws.mean(law) == 2.0
    assert laws.pmf(law) == {1: 0.75, 5: 0.25}
    assert set(np.unique(draws(law, 2000))) == {1, 5}
    assert laws.is_plus_one(law)


def test_mixture_moments():
    comps = (TwoPoint(2, 1.0), TwoPoint(4, 1.0))
    law = Mixture(comps, 0.25)
    assert laws.mean(law) == 2.0
    assert laws.has_infinite_mean(law)
    pmf = laws.pmf(law)
    assert math.isclose(math.fsum(pmf.values()), 1.0)
    assert math.isclose(math.fsum(c * p for c, p in pmf.items()), 2.0)
    x = draws(law, 20000)
    assert abs(x.mean() - 2.0) < 4 * math.sqrt(laws.variance(law) / len(x))


def test_pmf_support_guard():
    comps = tuple(TwoPoint(2**k, 1.0) for k in range(1, 20))
    assert laws.pmf(Mixture(comps, 0.1), max_support=100) is None


@given(st.integers(1, 10**6), st.floats(0.01, 1.0))
def test_two_point_mean_and_variance(N, frac):
    law = TwoPoint(N, frac * N)
    p = laws.pmf(law)
    assert math.isclose(laws.mean(law), math.fsum(c * q for c, q in p.items()), rel_tol=1e-9)
    var = math.fsum(q * (c - laws.mean(law)) ** 2 for c, q in p.items())
    assert math.isclose(laws.variance(law), var, rel_tol=1e-6, abs_tol=1e-6)


@pytest.mark.parametrize("law", [
    TwoPoint(1024, 5.0),
    PlusOne(TwoPoint(8, 2.0)),
    FinitePMF(((0, 0.25), (3, 0.75))),
    Mixture((TwoPoint(2, 1.0), TwoPoint(8, 1.0)), 0.25),
])
def test_dict_roundtrip(law):
    assert laws.from_dict(laws.to_dict(law)) == law


def test_from_dict_rejects_unknown_fields():
    with pytest.raises(ValueError):
        laws.from_dict({"type": "two_point", "N": 4, "mu": 1, "extra": 0})
    with pytest.raises(ValueError):
        laws.from_dict({"type": "geometric"})


def test_parse():
    assert laws.parse("twopoint:1024:5") == TwoPoint(1024, 5.0)
    assert laws.parse("zero") == laws.zero()
    assert laws.parse("const:2") == laws.constant(2)
    assert laws.parse("pmf:0=0.5,2=0.5") == FinitePMF(((0, 0.5), (2, 0.5)))
    assert laws.parse("plusone:twopoint:4:1") == PlusOne(TwoPoint(4, 1.0))
    p = laws.parse("poisson:5:30")
    assert math.isclose(laws.mean(p), 5.0, rel_tol=1e-6)
    with pytest.raises(ValueError):
        laws.parse("binomial:3")
