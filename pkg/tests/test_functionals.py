import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homfields.core import FieldSample, HomogeneousNorm
from homfields.functionals import (
    INFINITE,
    B_V_tau,
    S_V,
    axiom_check,
    event_probe,
    first_exceedance,
    infargsup,
)
from homfields.lattice import Lattice, enumerate_window
from homfields.mc import substream
from homfields.tailfields import SyntheticDiscreteField, local_field, tail_field

NORM = HomogeneousNorm("alpha_sum", 1.0, 1)
L = Lattice([[1.0]])


def field(values, radius=None):
    values = np.asarray(values, dtype=float)
    w = enumerate_window(L, radius or (len(values) - 1) // 2)
    return FieldSample(w, values, 1.0)


def test_infargsup_examples():
    f = field([0.2, 0.9, 0.9])
    assert infargsup(f, NORM).coords == (0,)
    assert infargsup(f.shifted([1]), NORM).coords == (1,)
    assert infargsup(f.scaled(7.0), NORM).coords == (0,)


def test_infargsup_ties_on_constant_field():
    f = field(np.ones(5))
    assert infargsup(f, NORM).coords == (-2,)
    assert infargsup(f.shifted([1]), NORM).coords == (-1,)


def test_first_exceedance_examples():
    assert first_exceedance(field([0.5, 1.2, 2.0]), NORM).coords == (0,)
    assert first_exceedance(field([0.5, 1.0, 0.2]), NORM) is INFINITE
    assert INFINITE.minus([3]).is_infinite


def test_first_exceedance_is_not_scale_invariant():
    f = FieldSample(enumerate_window(L, 1), np.array([0.0, 0.5, 2.0]), 1.0)
    assert first_exceedance(f, NORM).coords == (0,) or first_exceedance(f, NORM).coords == (1,)
    assert first_exceedance(f.scaled(0.4), NORM).coords != first_exceedance(f, NORM).coords


def test_first_exceedance_on_tail_samples(br4):
    y = tail_field(local_field(br4))
    for v in y.sample(substream(0, "fe"), 200):
        f = FieldSample(br4.window, v, 1.0)
        loc = first_exceedance(f, br4.norm)
        assert not loc.is_infinite
        assert f.norms(br4.norm)[f.window.index(loc.coords)] > 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=7, max_size=7), st.integers(-2, 2),
       st.floats(0.01, 100.0))
def test_infargsup_equivariance_and_scale_invariance(vals, j, c):
    f = field(vals)
    loc = infargsup(f, NORM)
    assert infargsup(f.shifted([j]), NORM).minus([j]) == loc
    assert infargsup(f.scaled(c), NORM) == loc


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=7, max_size=7), st.integers(-2, 2))
def test_first_exceedance_equivariance(vals, j):
    f = field(vals)
    assert first_exceedance(f.shifted([j]), NORM).minus([j]) == first_exceedance(f, NORM)


def test_cluster_functionals():
    w = enumerate_window(L, 6)
    single = SyntheticDiscreteField("singleton", w).field_samples(substream(0, "s"), 1)[0]
    assert S_V(single, w.coords, 1.0, NORM) == 1.0
    y = FieldSample(w, single.values * 3.7, 1.0)
    assert B_V_tau(y, w.coords, 0.0, NORM) == 1.0
    assert S_V(single, w.coords, 1.0, NORM, continuous=True) == L.delta
    geo = SyntheticDiscreteField("geometric_decay", w, rho=0.5)
    g = geo.field_samples(substream(0, "g"), 1)[0]
    for K in (1, 3, 6):
        V = np.arange(-K, K + 1)[:, None]
        assert S_V(g, V, 1.0, NORM) == pytest.approx(3 - 2.0 ** (1 - K))


def test_axiom_report_on_brown_resnick(br4):
    y = tail_field(local_field(br4))
    corpus = br4.field_samples(substream(1, "c"), 50) + y.field_samples(substream(1, "y"), 50)
    rep = axiom_check(infargsup, corpus, [[-1], [0], [1]], (0.5, 3.0), br4.norm)
    for ax in ("A1", "A3", "A2", "hom0"):
        assert rep.holds(ax), ax
    assert rep.tallies["A1"].checked == 300
    # |Z(0)| = 1 puts spectral samples outside the domain where A2 is asserted
    assert rep.tallies["A2"].checked == 50 and rep.a2_out_of_domain == 50
    fe = axiom_check(first_exceedance, corpus, [[0]], (0.5, 3.0), br4.norm)
    assert fe.tallies["hom0"].failed > 0 and fe.tallies["hom0"].witnesses


def test_event_probe_closed_forms(Z1):
    w = enumerate_window(Z1, 8)
    single = tail_field(local_field(SyntheticDiscreteField("singleton", w)))
    rows = event_probe(single, [2, 4, 8], 2.0, 0.0, 5000, 0)
    for r in rows:
        # S = R and B = 1: S < M has probability 1 - M^-alpha
        assert r.freq_B == 1.0 and r.freq_far == 1.0
        assert r.freq_S == pytest.approx(0.5, abs=0.03)
    const = tail_field(local_field(SyntheticDiscreteField("constant", w)))
    c = event_probe(const, [2, 4, 8], 2.0, 0.0, 5000, 0)
    assert c[-1].freq_far == 0.0 and c[-1].freq_B == 0.0
    geo = tail_field(local_field(SyntheticDiscreteField("geometric_decay", w)))
    g = event_probe(geo, [2, 4, 8], 4.0, 0.0, 5000, 0)
    assert g[-1].freq_far >= g[0].freq_far and g[-1].freq_far > 0.9
