import numpy as np
import pytest

from homfields.core import ContractError, UsageError
from homfields.extremal import (
    RefinementRow,
    RefinementTable,
    extremal_index_blocks,
    extremal_index_pil,
    refinement_study,
    stationary_block_sampler,
)
from homfields.lattice import Lattice, enumerate_window
from homfields.mc import MCEstimate
from homfields.tailfields import SyntheticDiscreteField, local_field

single = lambda w: SyntheticDiscreteField("singleton", w)
const = lambda w: SyntheticDiscreteField("constant", w)


def test_blocks_closed_forms(Z1):
    for e in extremal_index_blocks(single, Z1, [4, 8], 500, 0):
        assert e.value.mean == pytest.approx(1.0) and e.value.se == pytest.approx(0.0, abs=1e-12)
    c = extremal_index_blocks(const, Z1, [8, 16, 32], 500, 0)
    assert [e.value.mean for e in c] == pytest.approx([1 / 8, 1 / 16, 1 / 32])
    raw = extremal_index_blocks(const, Z1, [8], 500, 0, stationarize=False)
    assert raw[0].value.mean == pytest.approx(1 / 8)
    with pytest.raises(UsageError):
        extremal_index_blocks(single, Z1, [8, 4], 10, 0)


def test_stationary_block_sampler_window(Z1):
    z = stationary_block_sampler(single, Z1, 4)
    assert z.window.coords[:, 0].tolist() == [0, 1, 2, 3]


def test_pil_singleton_exact():
    for A, target in ((1.0, 1.0), (2.0, 0.5)):
        L = Lattice([[A]])
        theta = local_field(single(enumerate_window(L, 8)))
        for e in extremal_index_pil(theta, L, [2, 8], 200, 0):
            assert e.value.mean == target and e.value.se == 0


def test_pil_brown_resnick_is_monotone(Z1, br_factory):
    theta = local_field(br_factory(enumerate_window(Z1, 8)))
    est = extremal_index_pil(theta, Z1, [2, 4, 8], 5000, 1)
    assert est[0].diagnostics["monotone_in_radius"]
    assert est[0].value.mean >= est[1].value.mean >= est[2].value.mean
    tau = extremal_index_pil(theta, Z1, [8], 5000, 1, tau=0.5)
    assert tau[0].tau == 0.5 and 0 < tau[0].value.mean < 1
    assert np.isfinite(tau[0].diagnostics["tau_moment"].mean)


def test_pil_is_insensitive_to_tau(Z1, br_factory):
    from homfields.mc import compare

    theta = local_field(br_factory(enumerate_window(Z1, 16)))
    t0 = extremal_index_pil(theta, Z1, [16], 10_000, 2)[0].value
    th = extremal_index_pil(theta, Z1, [16], 10_000, 2, tau=0.5)[0].value
    rep = compare(t0, th)
    assert rep.passed, rep.summary()


def test_pil_input_checks(Z1, br_factory):
    theta = local_field(br_factory(enumerate_window(Z1, 4)))
    with pytest.raises(UsageError):
        extremal_index_pil(theta, Z1, [8], 10, 0)
    with pytest.raises(UsageError):
        extremal_index_pil(theta, Lattice([[2.0]]), [2], 10, 0)
    zero = local_field(SyntheticDiscreteField("constant", enumerate_window(Z1, 2),
                                              law=([0.0, 2.0], [0.5, 0.5])))
    # weighted rows with |Z(0)| = 0 are weighted out, so no denominator vanishes
    assert extremal_index_pil(zero, Z1, [2], 100, 0)[0].value.mean == pytest.approx(1 / 5)


def test_negative_estimate_is_a_contract_violation(Z1):
    from homfields.extremal import ExtremalEstimate

    with pytest.raises(ContractError):
        ExtremalEstimate("blocks", MCEstimate(-0.1, 0.0, 2), Z1, 8.0)


def test_refinement_constant_field(Z1):
    tab = refinement_study(const, Z1, [0, 1, 2], 8, 200, 0)
    assert [r.delta for r in tab.rows] == [1.0, 0.5, 0.25]
    assert [r.points for r in tab.rows] == [8, 16, 32]
    # the raw estimate n^-l E max |Z|^alpha ignores the mesh; dividing by Delta doubles it
    assert [r.raw.mean for r in tab.rows] == pytest.approx([1 / 8] * 3)
    assert [r.normalized.mean for r in tab.rows] == pytest.approx([1 / 8, 1 / 4, 1 / 2])


def test_refinement_table_change():
    mk = lambda v: MCEstimate(v, 0.0, 2)
    tab = RefinementTable([RefinementRow(0, 1.0, mk(1.0), mk(1.0), 1),
                           RefinementRow(1, 0.5, mk(1.05), mk(2.1), 2)])
    assert tab.raw_change == pytest.approx(0.05)
    assert tab.normalized_change == pytest.approx(1.1)
    assert not tab.passed
