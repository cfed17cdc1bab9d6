import numpy as np
import pytest

from dof.exceptions import InfeasibleChainError, InvalidInputError
from dof.services.allocation import Branch, MiddleDesign, allocate_symbols
from dof.services.channels import USERS, gen_generic
from dof.services.inner_transforms import build, equivalent_channel
from dof.services.outer_precoders import build_alignment_chains, build_cycle, build_precoders, chain_link_residuals, \
    chain_matrix, chain_schedule
from dof.services.params import SystemParams, derive
from dof.utils.subspace import has_full_column_rank, numerical_rank


def prepare(values, seed=0):
    params = SystemParams(*values)
    cs = gen_generic(params, seed)
    it = build(cs, seed)
    eq = equivalent_channel(cs, it)
    return eq, allocate_symbols(derive(params))


def test_chain_schedule_visits_both_interferers_of_each_receiver():
    transmitters, receivers = chain_schedule(0, 3)
    assert transmitters == (0, 2, 1)
    assert receivers == (1, 0)
    for s, rx in enumerate(receivers):
        assert {transmitters[s], transmitters[s + 1]} == {(rx + 1) % USERS, (rx - 1) % USERS}

    # каждый передатчик встречается p раз на три цепочки
    counts = [0] * USERS
    for origin in range(USERS):
        for tx in chain_schedule(origin, 4)[0]:
            counts[tx] += 1
    assert counts == [4, 4, 4]


def test_chain_matrix_shape():
    eq, _ = prepare((10, 15, 10, 10, 10))
    pmats = eq.pmats()
    transmitters, receivers = chain_schedule(1, 2)
    a = chain_matrix(pmats, transmitters, receivers)
    assert a.shape == (15, 20)
    assert numerical_rank(a) == 15


def test_chain_certificate_for_chain_n_branch():
    eq, alloc = prepare((10, 15, 10, 10, 10))
    assert alloc.branch == Branch.HIGH_CHAIN_N
    ps = build_precoders(alloc, eq, seed=0)

    assert len(ps.chains) == USERS
    assert all(chain.null_dim == 5 for chain in ps.chains)
    residuals = chain_link_residuals(ps, eq.pmats())
    assert len(residuals) == USERS
    assert max(r.residual for r in residuals) <= 1e-9

    assert len(ps.slots) == 2 * USERS
    for k in range(USERS):
        assert ps.e[k].shape == (10, 6)
        assert has_full_column_rank(ps.e[k], 1e-8)
        assert ps.middle(k).shape == (10, 6)


def test_chain_groups_for_chain_m_branch():
    eq, alloc = prepare((12, 21, 12, 12, 12))
    assert alloc.branch == Branch.HIGH_CHAIN_M
    assert alloc.middle == MiddleDesign.CHAIN_GROUPS
    ps = build_precoders(alloc, eq, seed=1)

    assert [chain.group for chain in ps.chains] == [1, 1, 1]
    # ядро A размерности p·M̃ - (p-1)·Ñ = 24 - 21
    assert all(chain.null_dim == 3 for chain in ps.chains)
    assert max(r.residual for r in chain_link_residuals(ps, eq.pmats())) <= 1e-9
    assert all(e.shape == (12, 8) for e in ps.e)


def test_chain_groups_with_three_links():
    eq, alloc = prepare((10, 14, 10, 9, 10), seed=2)
    assert (alloc.p, alloc.r_prime, alloc.r_hat) == (3, 1, 1)
    ps = build_precoders(alloc, eq, seed=2)

    first = [chain for chain in ps.chains if chain.group == 1]
    second = [chain for chain in ps.chains if chain.group == 2]
    assert len(first) == len(second) == USERS
    assert all(chain.length == 3 for chain in first)
    assert all(chain.length == 2 for chain in second)
    assert max(r.residual for r in chain_link_residuals(ps, eq.pmats())) <= 1e-9
    for k in range(USERS):
        assert ps.e[k].shape == (10, 6)
        assert has_full_column_rank(ps.e[k], 1e-8)


def test_chain_longer_than_kernel_is_infeasible():
    eq, _ = prepare((12, 18, 12, 9, 9))
    with pytest.raises(InfeasibleChainError) as exc:
        build_alignment_chains(eq.pmats(), 3, 1, seed=0)
    assert exc.value.tag == 'infeasible_chain'


def test_chain_length_must_be_at_least_two():
    eq, _ = prepare((10, 15, 10, 10, 10))
    with pytest.raises(InvalidInputError):
        build_alignment_chains(eq.pmats(), 1, 1, seed=0)


def test_cycle_alignment_for_equal_antennas():
    eq, alloc = prepare((4, 4, 4, 4, 4))
    assert alloc.branch == Branch.HIGH_CYCLE
    pmats = eq.pmats()
    e0, e1, e2 = build_cycle(pmats, 2)
    assert e0.shape == e1.shape == e2.shape == (4, 2)
    # на приёмниках 1 и 2 образы совпадают точно
    np.testing.assert_allclose(pmats[(1, 2)] @ e2, pmats[(1, 0)] @ e0, atol=1e-9)
    np.testing.assert_allclose(pmats[(2, 0)] @ e0, pmats[(2, 1)] @ e1, atol=1e-9)

    ps = build_precoders(alloc, eq, seed=0)
    residuals = chain_link_residuals(ps, pmats)
    assert [r.kind for r in residuals] == ['cycle'] * USERS
    assert max(r.residual for r in residuals) <= 1e-9


def test_random_precoders_are_block_diagonal():
    eq, alloc = prepare((12, 18, 12, 9, 9))
    assert alloc.branch == Branch.HIGH_P1
    ps = build_precoders(alloc, eq, seed=0)
    caps = alloc.caps
    for e in ps.e:
        assert e.shape == (caps.total, 8)
        # голова передатчика не попадает в столбцы середины и хвоста
        assert np.all(e[caps.slice('head'), alloc.dh:] == 0)
        assert np.all(e[caps.slice('tail'), :alloc.dh + alloc.dm] == 0)


def test_low_regime_precoders():
    eq, alloc = prepare((3, 5, 3, 1, 1))
    assert alloc.branch == Branch.LOW_FULL
    ps = build_precoders(alloc, eq, seed=3)
    assert all(e.shape == (3, 3) for e in ps.e)
    assert all(has_full_column_rank(e, 1e-8) for e in ps.e)
    assert ps.chains == ()
    assert chain_link_residuals(ps, eq.pmats()) == []


def test_precoders_are_deterministic_for_a_seed():
    eq, alloc = prepare((10, 15, 10, 10, 10))
    first, again = build_precoders(alloc, eq, seed=4), build_precoders(alloc, eq, seed=4)
    for k in range(USERS):
        np.testing.assert_array_equal(first.e[k], again.e[k])
