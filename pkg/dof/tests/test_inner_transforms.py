import numpy as np
import pytest

from dof.exceptions import ConstructionError
from dof.services.channels import USERS, ChannelSet, gen_generic
from dof.services.inner_transforms import HEAD, MIDDLE, TAIL, BlockSizes, build, equivalent_channel, verify_pattern
from dof.services.params import Regime, SystemParams
from dof.utils.rng import complex_gaussian, substream
from dof.utils.subspace import is_invertible

LOW_TUPLES = [
    SystemParams(2, 4, 2, 1, 1),
    SystemParams(3, 5, 3, 1, 2),
    SystemParams(4, 4, 4, 2, 2),
    SystemParams(3, 4, 2, 0, 3),
    SystemParams(5, 3, 3, 1, 1),
]
HIGH_TUPLES = [
    SystemParams(3, 4, 3, 2, 2),
    SystemParams(2, 3, 2, 2, 2),
    SystemParams(4, 6, 4, 3, 3),
    SystemParams(4, 7, 4, 4, 4),
    SystemParams(4, 4, 4, 4, 3),
    SystemParams(4, 3, 3, 2, 2),
]


def test_block_sizes_slices():
    blocks = BlockSizes(2, 3, 1)
    assert blocks.total == 6
    assert blocks.slice(HEAD) == slice(0, 2)
    assert blocks.slice(MIDDLE) == slice(2, 5)
    assert blocks.slice(TAIL) == slice(5, 6)
    with pytest.raises(KeyError):
        blocks.slice('side')


@pytest.mark.parametrize('regime, tuples', [(Regime.LOW, LOW_TUPLES), (Regime.HIGH, HIGH_TUPLES)])
def test_equivalent_channel_pattern_over_many_trials(regime, tuples):
    for trial in range(200):
        params = tuples[trial % len(tuples)]
        cs = gen_generic(params, seed=1000 + trial)
        it = build(cs)
        assert it.regime == regime
        assert all(is_invertible(r, 1e-8) for r in it.r)
        assert all(is_invertible(t, 1e-8) for t in it.t)

        report = verify_pattern(equivalent_channel(cs, it))
        assert report.passed, (params, [c.name for c in report.failures])
        assert report.max_zero_residual() <= 1e-9


def test_low_regime_block_sizes():
    cs = gen_generic(SystemParams(3, 5, 3, 1, 2), 0)
    it = build(cs)
    assert it.rx_blocks[0].as_tuple() == (2, 2, 1)
    assert it.tx_blocks[0].as_tuple() == (2, 0, 1)
    eq = equivalent_channel(cs, it)
    # H̃_kh: D_2 × D_2 от передатчика k-1, H̃_kt: D_1 × D_1 от k+1
    assert eq.h_head(0).shape == (2, 2)
    assert eq.h_tail(0).shape == (1, 1)


def test_high_regime_block_sizes():
    cs = gen_generic(SystemParams(4, 7, 4, 4, 4), 0)
    it = build(cs)
    assert it.regime == Regime.HIGH
    assert it.rx_blocks[1].as_tuple() == (0, 7, 0)
    assert it.tx_blocks[1].as_tuple() == (0, 4, 0)
    pmats = equivalent_channel(cs, it).pmats()
    assert set(pmats) == {(0, 1), (0, 2), (1, 2), (1, 0), (2, 0), (2, 1)}
    assert all(p.shape == (7, 4) for p in pmats.values())


def test_reciprocal_construction_for_more_transmit_antennas():
    params = SystemParams(5, 3, 3, 1, 1)
    cs = gen_generic(params, 4)
    it = build(cs)
    assert it.reciprocal_applied
    assert all(r.shape == (3, 3) for r in it.r)
    assert all(t.shape == (5, 5) for t in it.t)

    r_w, t_w = it.working()
    assert all(r.shape == (5, 5) for r in r_w)
    assert it.working_rx_blocks[0].total == 5
    assert verify_pattern(equivalent_channel(cs, it)).passed


def test_no_cross_interference_uses_identity():
    cs = gen_generic(SystemParams(2, 3, 2, 0, 0), 0)
    it = build(cs)
    np.testing.assert_array_equal(it.r[0], np.eye(3))
    assert it.rx_blocks[0].as_tuple() == (0, 3, 0)
    assert verify_pattern(equivalent_channel(cs, it)).passed


def test_randomized_receive_block_breaks_the_pattern():
    cs = gen_generic(SystemParams(2, 4, 2, 1, 1), 7)
    it = build(cs)
    broken = it.with_receiver(0, complex_gaussian(substream(7, 'control'), (4, 4)))
    report = verify_pattern(equivalent_channel(cs, broken))
    assert not report.passed
    assert any(check.kind == 'zero' for check in report.failures)

    cs = gen_generic(SystemParams(3, 4, 3, 2, 2), 7)
    it = build(cs)
    broken = it.with_receiver(1, complex_gaussian(substream(7, 'control'), (4, 4)))
    assert not verify_pattern(equivalent_channel(cs, broken)).passed


def test_non_generic_channel_reports_dimension_mismatch():
    params = SystemParams(2, 4, 2, 1, 1)
    cs = gen_generic(params, 3)
    rng = substream(3, 'degenerate')
    shared = complex_gaussian(rng, (4, 1))
    h = [list(row) for row in cs.h]
    # обе помехи приёмника 0 приходят с одного направления
    h[0][1] = shared @ complex_gaussian(rng, (1, 2))
    h[0][2] = shared @ complex_gaussian(rng, (1, 2))
    degenerate = ChannelSet(h=h, params=params)

    with pytest.raises(ConstructionError) as exc:
        build(degenerate)
    assert exc.value.tag == 'dimension_mismatch'
    assert exc.value.block == 'U_c[0]'


def test_rank_pattern_is_checked_before_construction():
    params = SystemParams(2, 4, 2, 1, 1)
    cs = gen_generic(params, 3)
    h = [list(row) for row in cs.h]
    h[1][1] = complex_gaussian(substream(3, 'low'), (4, 1)) @ complex_gaussian(substream(4, 'low'), (1, 2))
    with pytest.raises(ConstructionError) as exc:
        build(ChannelSet(h=h, params=params))
    assert exc.value.tag == 'rank_pattern_mismatch'


def test_transforms_are_deterministic_for_a_seed():
    cs = gen_generic(SystemParams(4, 6, 4, 3, 3), 2)
    first, again = build(cs, seed=5), build(cs, seed=5)
    for k in range(USERS):
        np.testing.assert_array_equal(first.r[k], again.r[k])
        np.testing.assert_array_equal(first.t[k], again.t[k])
