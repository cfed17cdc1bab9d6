"""Тесты декодируемости, сквозных прогонов и Монте-Карло."""
import json

import numpy as np
import pytest

from dof.constants import PROVENANCE_ULA
from dof.exceptions import InvalidInputError, NoDecoderError
from dof.services.allocation import Branch, allocate_symbols, plan_allocation, spatial_extension_factor
from dof.services.channels import USERS, ChannelSet, gen_generic, worked_example_channels
from dof.services.inner_transforms import build, equivalent_channel
from dof.services.outer_precoders import PrecoderSet, build_precoders
from dof.services.params import SystemParams, derive, scale
from dof.services.verification import TIGHT_BRANCHES, EffectiveLinks, TrialOptions, TrialResult, decodability, \
    effective_links, end_to_end_trial, monte_carlo, predicted_z, run_pipeline, run_trial, verify_channels, \
    zero_forcing_decoder
from dof.utils.rng import complex_gaussian, substream

ACCEPTANCE_TUPLES = [
    # LowFull
    (2, 4, 2, 1, 1), (3, 5, 3, 1, 1), (4, 4, 4, 2, 2), (2, 2, 2, 1, 1), (3, 3, 3, 1, 1),
    (4, 2, 2, 1, 1), (2, 3, 2, 1, 0), (3, 4, 3, 2, 1), (1, 2, 1, 1, 0), (3, 4, 3, 1, 1),
    # LowDirectLimited
    (3, 5, 1, 1, 1), (2, 4, 1, 1, 1), (4, 6, 2, 1, 1), (3, 3, 2, 0, 1), (5, 3, 2, 1, 1),
    # HighHalfN
    (3, 4, 3, 2, 2), (4, 4, 4, 3, 2), (4, 5, 4, 3, 2), (2, 2, 2, 2, 1), (6, 8, 6, 4, 4), (4, 3, 3, 2, 2),
    # HighP1
    (4, 6, 4, 3, 3), (2, 3, 2, 1, 2), (3, 5, 3, 2, 2), (2, 4, 2, 2, 1), (2, 6, 2, 2, 1),
    # HighChainN
    (2, 3, 2, 2, 2), (4, 6, 4, 4, 4), (3, 4, 3, 3, 3), (3, 2, 2, 2, 2),
    # HighChainM
    (4, 7, 4, 4, 4), (3, 5, 3, 3, 3), (5, 9, 5, 5, 5), (10, 14, 10, 9, 10), (6, 10, 6, 6, 5),
    # HighCycle
    (4, 4, 4, 4, 4), (4, 4, 4, 4, 3), (2, 2, 2, 2, 2), (6, 6, 6, 5, 5),
    # HighDirectLimited
    (12, 21, 6, 12, 12), (4, 6, 2, 3, 3), (4, 4, 1, 3, 3), (10, 15, 4, 10, 10),
]



def pipeline_parts(values, seed=0):
    params = SystemParams(*values)
    cs = gen_generic(params, seed)
    it = build(cs, seed)
    eq = equivalent_channel(cs, it)
    alloc = allocate_symbols(derive(params))
    ps = build_precoders(alloc, eq, seed)
    return cs, it, alloc, ps


# ---------- Декодируемость ----------


def test_decodability_and_predicted_z_for_the_published_configuration():
    cs, it, alloc, ps = pipeline_parts((2, 4, 2, 1, 1))
    links = effective_links(cs, it, ps)
    assert links.dbar == 2
    verdicts = decodability(links, 2)
    assert [v.z for v in verdicts] == [2, 2, 2]
    assert all(v.passed for v in verdicts)
    assert predicted_z(derive(cs.params), alloc) == 2


@pytest.mark.parametrize('values, z', [
    ((10, 15, 10, 10, 10), 9),
    ((12, 21, 12, 12, 12), 13),
    ((12, 18, 12, 9, 9), 10),
    ((4, 4, 4, 4, 4), 2),
    ((10, 14, 10, 9, 10), 8),
])
def test_measured_interference_dimension_matches_prediction(values, z):
    cs, it, alloc, ps = pipeline_parts(values)
    assert predicted_z(derive(cs.params), alloc) == z
    verdicts = decodability(effective_links(cs, it, ps), alloc.dbar)
    assert [v.z for v in verdicts] == [z] * USERS
    assert all(v.passed for v in verdicts)


def test_decodability_is_invariant_to_receive_basis_change():
    cs, it, alloc, ps = pipeline_parts((12, 21, 12, 12, 12), seed=3)
    links = effective_links(cs, it, ps)
    rng = substream(3, 'rebasis')
    mixed = []
    for k in range(USERS):
        g = complex_gaussian(rng, (links.n, links.n))
        mixed.append((g @ links.desired[k], g @ links.interference[k]))
    rebased = EffectiveLinks(
        desired=tuple(d for d, _ in mixed), interference=tuple(i for _, i in mixed), dbar=links.dbar,
    )
    before = [(v.z, v.rank_total) for v in decodability(links, alloc.dbar)]
    after = [(v.z, v.rank_total) for v in decodability(rebased, alloc.dbar)]
    assert before == after


def test_zero_forcing_decoder_inverts_desired_and_cancels_interference():
    cs, it, alloc, ps = pipeline_parts((12, 18, 12, 9, 9))
    links = effective_links(cs, it, ps)
    for k in range(USERS):
        w = zero_forcing_decoder(links, k)
        assert w.shape == (alloc.dbar, links.n)
        np.testing.assert_allclose(w @ links.desired[k], np.eye(alloc.dbar), atol=1e-8)
        assert np.max(np.abs(w @ links.interference[k])) <= 1e-8


def test_no_decoder_for_overloaded_receiver():
    rng = substream(0, 'overload')
    links = EffectiveLinks(
        desired=tuple(complex_gaussian(rng, (4, 2)) for _ in range(USERS)),
        interference=tuple(complex_gaussian(rng, (4, 4)) for _ in range(USERS)),
        dbar=2,
    )
    verdict = decodability(links, 2)[0]
    assert verdict.z == 4
    assert not verdict.decodable
    with pytest.raises(NoDecoderError):
        zero_forcing_decoder(links, 0)


def test_roundoff_interference_has_zero_dimensions():
    rng = substream(0, 'suppressed')
    links = EffectiveLinks(
        desired=tuple(0.03 * complex_gaussian(rng, (2, 1)) for _ in range(USERS)),
        interference=tuple(1e-17 * complex_gaussian(rng, (2, 2)) for _ in range(USERS)),
        dbar=1,
    )
    verdicts = decodability(links, 1)
    assert [(v.z, v.rank_total) for v in verdicts] == [(0, 1)] * USERS
    assert all(v.passed for v in verdicts)

    w = zero_forcing_decoder(links, 0)
    np.testing.assert_allclose(w @ links.desired[0], np.eye(1), atol=1e-8)


@pytest.mark.parametrize('values', [(2, 2, 1, 0, 1), (3, 3, 2, 0, 1)])
def test_fully_suppressed_interference_decodes(values):
    params = SystemParams(*values)
    for seed in range(5):
        result = run_trial(params, seed)
        assert result.passed, result.problems
        assert result.branch == Branch.LOW_DIRECT_LIMITED
        assert [r.z_measured for r in result.receivers] == [0] * USERS
        assert [r.z_predicted for r in result.receivers] == [0] * USERS

    assert monte_carlo(params, 20, seed=2024).pass_rate == 1.0


def test_shape_mismatch_between_precoders_and_transforms():
    cs, it, _, ps = pipeline_parts((2, 4, 2, 1, 1))
    _, _, _, other = pipeline_parts((3, 4, 3, 2, 2))
    with pytest.raises(InvalidInputError):
        effective_links(cs, it, other)


# ---------- Сквозные прогоны ----------


def test_published_configuration_end_to_end():
    report = end_to_end_trial(SystemParams(2, 4, 2, 1, 1), seed=0)
    assert report.passed
    data = report.to_dict()
    assert data['q'] == 1
    assert data['streams_per_user'] == [2]
    assert data['branch'] == 'LowFull'
    assert all(r['z_measured'] == [2] for r in data['receivers'])
    assert data['max_symbol_error'] <= 1e-8
    assert data['max_interference_residual'] <= 1e-9


def test_worked_example_channels_decode():
    for delta in (0.5, 0.3):
        report = verify_channels(worked_example_channels(delta), seed=0)
        assert report.passed, report.to_dict()['problems']
        assert report.streams_per_user == {2}
        # свободное от помех подпространство размерности 2 на каждом приёмнике
        assert all(summary.z_measured == {2} for summary in report.receivers)
        assert report.max_symbol_error <= 1e-8


def test_end_to_end_trial_is_deterministic():
    params = SystemParams(3, 4, 3, 2, 2)
    assert end_to_end_trial(params, seed=5).to_json() == end_to_end_trial(params, seed=5).to_json()


def test_spatial_extension_is_applied_automatically():
    report = end_to_end_trial(SystemParams(2, 3, 2, 2, 2), seed=1)
    assert report.passed
    assert report.q == 5
    assert report.scaled_params.as_tuple() == (10, 15, 10, 10, 10)
    assert report.streams_per_user == {6}
    assert report.chain_null_dims == {5}
    assert report.max_chain_residual <= 1e-9


def test_reciprocal_network_end_to_end():
    report = end_to_end_trial(SystemParams(5, 3, 3, 1, 1), seed=2)
    assert report.passed, report.to_dict()['problems']
    report = end_to_end_trial(SystemParams(4, 3, 3, 2, 2), seed=2)
    assert report.passed, report.to_dict()['problems']


def test_ula_channels_end_to_end():
    options = TrialOptions(provenance=PROVENANCE_ULA)
    report = monte_carlo(SystemParams(2, 4, 2, 1, 1), 5, seed=3, provenance=PROVENANCE_ULA, options=options)
    assert report.passed
    assert report.provenance == 'ula'


def test_snr_demo_does_not_affect_pass():
    options = TrialOptions(snr_db=20.0)
    report = end_to_end_trial(SystemParams(2, 4, 2, 1, 1), seed=0, options=options)
    assert report.passed
    assert report.snr_db == 20.0
    assert report.max_snr_symbol_error > 0


def test_non_integral_channels_report_allocation_problem():
    cs = gen_generic(SystemParams(2, 3, 2, 2, 2), 0)
    report = verify_channels(cs)
    assert not report.passed
    assert 'allocation' in report.errors


# ---------- Отрицательные контроли ----------


def wrong_rank_channels(params: SystemParams, seed: int) -> ChannelSet:
    cs = gen_generic(params, seed)
    h = [list(row) for row in cs.h]
    h[0][1] = complex_gaussian(substream(seed, 'full'), (params.mr, params.mt))
    return ChannelSet(h=h, params=params)


def test_rank_pattern_violation_fails_the_trial():
    result = run_trial(SystemParams(2, 4, 2, 1, 1), seed=0, channel_factory=wrong_rank_channels)
    assert not result.passed
    assert [code for code, _ in result.problems] == ['rank_pattern_mismatch']


def test_corrupted_precoder_is_detected():
    cs, it, alloc, ps = pipeline_parts((3, 4, 3, 2, 2))
    broken = list(ps.e)
    broken[1] = complex_gaussian(substream(0, 'broken'), broken[1].shape)
    links = effective_links(cs, it, PrecoderSet(e=tuple(broken), alloc=alloc))
    verdicts = decodability(links, alloc.dbar)
    assert not all(v.passed for v in verdicts)


def test_monte_carlo_counts_failures():
    report = monte_carlo(SystemParams(2, 4, 2, 1, 1), 3, seed=0, channel_factory=wrong_rank_channels)
    assert report.trials == 3
    assert report.passed_trials == 0
    assert not report.passed
    assert report.errors == {'rank_pattern_mismatch'}
    assert [p['trial'] for p in report.to_dict()['problems']] == [0, 1, 2]


# ---------- Монте-Карло ----------


def test_monte_carlo_report_is_independent_of_execution_order():
    params = SystemParams(4, 6, 4, 3, 3)

    def reversed_runner(params, jobs, options):
        return [run_trial(params, seed, index, options) for index, seed in reversed(list(jobs))]

    sequential = monte_carlo(params, 4, seed=9)
    shuffled = monte_carlo(params, 4, seed=9, runner=reversed_runner)
    assert sequential.to_dict() == shuffled.to_dict()
    assert sequential.passed


def test_monte_carlo_reports_progress():
    params = SystemParams(2, 4, 2, 1, 1)
    calls = []
    monte_carlo(params, 3, seed=1, progress=lambda done, total: calls.append((done, total)))
    assert calls == [(1, 3), (2, 3), (3, 3)]

    calls.clear()
    monte_carlo(params, 3, seed=1, progress=lambda done, total: calls.append((done, total)),
                runner=lambda p, jobs, options: [run_trial(p, seed, index, options) for index, seed in jobs])
    assert calls == [(3, 3)]


def test_monte_carlo_rejects_empty_run():
    with pytest.raises(InvalidInputError):
        monte_carlo(SystemParams(2, 4, 2, 1, 1), 0, seed=0)


def test_trial_result_survives_json():
    result = run_trial(SystemParams(3, 4, 3, 2, 2), seed=1)
    restored = TrialResult.from_dict(json.loads(json.dumps(result.to_dict())))
    assert restored.passed == result.passed
    assert restored.receivers == result.receivers
    assert restored.streams_per_user == 2


def test_run_pipeline_on_given_channels():
    cs = gen_generic(SystemParams(4, 4, 4, 4, 3), 6)
    result = run_pipeline(cs, seed=6)
    assert result.passed, result.problems
    assert result.branch == 'HighCycle'
    assert all(r.tight for r in result.receivers)


@pytest.mark.slow
@pytest.mark.parametrize('values', ACCEPTANCE_TUPLES)
def test_acceptance_sweep(values):
    params = SystemParams(*values)
    derived = derive(params)
    q = spatial_extension_factor(derived)
    report = monte_carlo(params, 50, seed=2024)

    assert report.pass_rate == 1.0, (values, report.to_dict()['errors'])
    assert report.streams_per_user == {int(q * derived.dbar)}
    for summary in report.receivers:
        assert summary.z_measured == summary.z_predicted
    if Branch(report.branch) in TIGHT_BRANCHES:
        n = report.scaled_params.n
        for summary in report.receivers:
            assert {int(q * derived.dbar) + z for z in summary.z_measured} == {n}


def test_acceptance_list_spans_every_branch():
    assert len(ACCEPTANCE_TUPLES) >= 40

    branches = set()
    for values in ACCEPTANCE_TUPLES:
        params = SystemParams(*values)
        scaled = scale(params, spatial_extension_factor(derive(params)))
        if scaled.mt > scaled.mr:
            scaled = scaled.reciprocal()
        branches.add(plan_allocation(derive(scaled)).branch)
    assert branches == set(Branch)
