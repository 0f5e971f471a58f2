import math

import numpy as np
import pytest

from tripartite import constants
from tripartite.engine import (
    COMPUTATIONAL,
    FOURIER,
    BasisChoice,
    BasisKind,
    ClassicalMessage,
    EveStrategy,
    InvalidRecordError,
    RejectReason,
    TrialRecord,
    Transcript,
    check_message_hygiene,
    conditional_alice_distribution,
    estimate_qber,
    qkd_key_symbols,
    reconstruct_alice,
    run_qkd,
    run_secret_sharing,
    subspace_bases,
    trial_rng,
    wilson_interval,
)
from tripartite.report import within_sigma
from tripartite.states import correlation_table
from tripartite.qudit import fourier_basis


def _qkd_transcript(pairs):
    records = tuple(
        TrialRecord(t, ("X01", "X01"), (True, True), (a, b), True, None, latent=(0, 1))
        for t, (a, b) in enumerate(pairs)
    )
    return Transcript(0, "qkd", ("alice", "bob"), records)


# -- basis choices ---------------------------------------------------------------------


def test_basis_labels_round_trip():
    for label in ("Z", "F", "Z01", "X12", "Z02"):
        assert BasisChoice.parse(label).label == label


def test_subspace_basis_needs_distinct_levels():
    with pytest.raises(ValueError):
        BasisChoice(BasisKind.SUBSPACE_COMPUTATIONAL, (1, 1))
    with pytest.raises(ValueError):
        BasisChoice.parse("Q")


def test_superposition_basis_vectors():
    m = subspace_bases((1, 2))[1].measurement()
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(m.vectors, [[0, s, s], [0, s, -s]], atol=1e-12)


# -- reconstruction ---------------------------------------------------------------------


def test_reconstruct_computational():
    assert reconstruct_alice(1, 2, COMPUTATIONAL) == 0
    assert reconstruct_alice(0, 2, COMPUTATIONAL) == 1


def test_reconstruct_rejects_impossible_shares():
    with pytest.raises(InvalidRecordError):
        reconstruct_alice(1, 1, COMPUTATIONAL)


def test_reconstruct_fourier_for_all_occurring_pairs():
    table = correlation_table(fourier_basis(3))
    seen = set()
    for (a, b), (c, _) in table.entries.items():
        assert reconstruct_alice(b, c, FOURIER) == a
        seen.add((b, c))
    assert len(seen) == 9


def test_reconstruct_rejects_subspace_basis():
    with pytest.raises(ValueError):
        reconstruct_alice(0, 1, subspace_bases()[0])


# -- secret sharing ------------------------------------------------------------------------


def test_secret_sharing_sift_fraction():
    tr = run_secret_sharing(10_000, seed=5)
    assert within_sigma(len(tr.sifted()), len(tr.records), constants.SECRET_SHARING_SIFT)


def test_sifted_computational_rounds_are_permutations(secret_sharing_run):
    rounds = [r for r in secret_sharing_run.sifted() if r.bases[0] == "Z"]
    assert rounds
    assert all(sorted(r.outcomes) == [0, 1, 2] for r in rounds)


def test_sifted_rounds_always_reconstruct(secret_sharing_run):
    assert secret_sharing_run.error_rate == 0
    assert secret_sharing_run.reconstruction_success_rate == 1.0
    for r in secret_sharing_run.sifted():
        assert r.reconstructed == r.outcomes[0]


def test_rejected_rounds_carry_basis_mismatch(secret_sharing_run):
    for r in secret_sharing_run.records[:2000]:
        if not r.sifted:
            assert r.reason is RejectReason.BASIS_MISMATCH
            assert len(set(r.bases)) > 1


def test_single_party_learns_nothing(secret_sharing_run):
    for given in (1, 2):
        for row in conditional_alice_distribution(secret_sharing_run, given).values():
            n = sum(row)
            assert all(within_sigma(c, n, 1 / 3) for c in row)


def test_fourier_only_switch(fourier_only_run):
    assert fourier_only_run.sift_fraction == 1.0
    assert {r.bases for r in fourier_only_run.records[:100]} == {("F", "F", "F")}
    assert fourier_only_run.error_rate == 0


def test_secret_sharing_is_deterministic():
    a = run_secret_sharing(500, seed=17, record_messages=True)
    b = run_secret_sharing(500, seed=17, record_messages=True)
    assert a == b
    assert a != run_secret_sharing(500, seed=18, record_messages=True)


def test_secret_sharing_rejects_subspace_bases():
    with pytest.raises(ValueError):
        run_secret_sharing(10, 0, basis_set=("Z01",))
    with pytest.raises(ValueError):
        run_secret_sharing(0, 0)


def test_secret_sharing_message_hygiene():
    tr = run_secret_sharing(2000, seed=3, record_messages=True)
    assert check_message_hygiene(tr.messages, tr) == []
    shares = {m.round for m in tr.messages if m.kind == "share"}
    assert shares == {r.trial for r in tr.sifted()}


def test_hygiene_flags_leaked_outcome():
    tr = run_secret_sharing(50, seed=3, record_messages=True)
    unsifted = next(r.trial for r in tr.records if not r.sifted)
    leaked = tr.messages + (ClassicalMessage("bob", unsifted, "share", 2),)
    assert check_message_hygiene(leaked, tr)
    bad_click = (ClassicalMessage("bob", 0, "click", 1),)
    assert check_message_hygiene(bad_click, tr)


def test_trial_streams_are_order_independent():
    a = trial_rng(123, 45).random(4)
    trial_rng(123, 44).random(10)
    np.testing.assert_array_equal(a, trial_rng(123, 45).random(4))


# -- QKD ---------------------------------------------------------------------------------


def test_key_symbol_mapping():
    z = TrialRecord(0, ("Z01", "Z01"), (True, True), (0, 1), True, None)
    x = TrialRecord(0, ("X01", "X01"), (True, True), (1, 1), True, None)
    assert qkd_key_symbols(z) == (0, 0)
    assert qkd_key_symbols(x) == (1, 1)


def test_record_outcome_needs_click():
    with pytest.raises(ValueError):
        TrialRecord(0, ("Z01", "Z01"), (True, False), (0, 1), False, RejectReason.MISSING_CLICK)


def test_honest_qkd_fixed_subspace(qkd_fixed_run):
    tr = qkd_fixed_run
    assert tr.error_rate == 0
    assert within_sigma(len(tr.sifted()), len(tr.records), constants.QKD_SIFT_FIXED)


def test_honest_qkd_random_subspace(qkd_random_run):
    tr = qkd_random_run
    assert tr.error_rate == 0
    assert within_sigma(len(tr.sifted()), len(tr.records), constants.QKD_SIFT_RANDOM)
    assert tr.rejection_counts()["subspace-mismatch"] > 0


def test_double_click_exclusivity(qkd_fixed_run):
    others = [r for r in qkd_fixed_run.records if r.latent != (0, 1)]
    assert len(others) > 50_000
    assert not any(all(r.clicks) for r in others)
    # the in-subspace branch always clicks twice
    assert all(all(r.clicks) for r in qkd_fixed_run.records if r.latent == (0, 1))


def test_latent_branches_are_uniform(qkd_fixed_run):
    n = len(qkd_fixed_run.records)
    for branch in ((0, 1), (1, 2), (0, 2)):
        k = sum(r.latent == branch for r in qkd_fixed_run.records)
        assert within_sigma(k, n, 1 / 3)


def test_qkd_is_deterministic():
    eve = EveStrategy.from_policy(1, "random")
    assert run_qkd(400, 11, eve=eve) == run_qkd(400, 11, eve=eve)


def test_qkd_message_hygiene():
    tr = run_qkd(1000, 2, subspace_policy="random", record_messages=True)
    assert check_message_hygiene(tr.messages, tr) == []
    assert {m.kind for m in tr.messages} == {"basis", "subspace", "click"}


def test_eve_qber_matches_frozen_constant(qkd_eve_run):
    tr = qkd_eve_run
    errors = sum(a != b for a, b in tr.key_pairs())
    assert within_sigma(errors, len(tr.sifted()), constants.QKD_QBER_EVE)
    assert within_sigma(len(tr.sifted()), len(tr.records), constants.QKD_SIFT_EVE)


def test_eve_on_alice_gives_same_qber():
    tr = run_qkd(20_000, 3, eve=EveStrategy.from_policy(0, "random"))
    errors = sum(a != b for a, b in tr.key_pairs())
    assert within_sigma(errors, len(tr.sifted()), constants.QKD_QBER_EVE)


def test_three_level_eve():
    tr = run_qkd(20_000, 4, eve=EveStrategy.from_policy(1, "random3d"))
    errors = sum(a != b for a, b in tr.key_pairs())
    assert within_sigma(errors, len(tr.sifted()), constants.QKD_QBER_EVE_3D)
    assert within_sigma(len(tr.sifted()), len(tr.records), constants.QKD_SIFT_EVE_3D)


def test_eve_strategy_validation():
    with pytest.raises(ValueError):
        EveStrategy(basis_set=())
    with pytest.raises(ValueError):
        EveStrategy(target=2)
    assert EveStrategy.from_policy(1, "random", "random").describe().count(",") == 5


def test_charlie_loss_probability_recorded():
    tr = run_qkd(4000, 6, charlie_loss=0.25)
    present = sum(r.charlie_present for r in tr.records)
    assert within_sigma(present, 4000, 0.75)
    assert not any(r.charlie_present for r in run_qkd(200, 6).records)


def test_run_qkd_argument_errors():
    with pytest.raises(ValueError):
        run_qkd(10, 0, subspace_policy="sometimes")
    with pytest.raises(ValueError):
        run_qkd(10, 0, pair=(1, 1))
    with pytest.raises(ValueError):
        run_qkd(10, 0, charlie_loss=1.5)


# -- QBER estimation -------------------------------------------------------------------------


def test_estimate_on_clean_key():
    est = estimate_qber(_qkd_transcript([(0, 0), (1, 1)] * 50), 0.5)
    assert est.estimate == 0
    assert est.sample_size == 50
    assert len(est.remaining_key[0]) == 50
    assert est.interval[0] == 0


def test_estimate_on_all_error_key():
    est = estimate_qber(_qkd_transcript([(0, 1)] * 40), 0.25)
    assert est.estimate == 1
    assert est.interval[1] == 1


def test_estimate_errors():
    with pytest.raises(ValueError):
        estimate_qber(_qkd_transcript([(0, 0)]), 1.0)
    empty = Transcript(0, "qkd", ("alice", "bob"), ())
    with pytest.raises(ValueError):
        estimate_qber(empty, 0.5)


def test_wilson_interval_reference_value():
    # 10 errors in 100 at 95%: (0.0552, 0.1744) from the closed form
    lo, hi = wilson_interval(10, 100)
    assert abs(lo - 0.05522914) < 1e-6
    assert abs(hi - 0.17436566) < 1e-6


def test_interval_coverage_against_frozen_constant():
    eve = EveStrategy.from_policy(1, "random")
    covered = 0
    for k in range(100):
        est = estimate_qber(run_qkd(2000, k << 32, eve=eve), 0.5)
        covered += est.interval[0] <= constants.QKD_QBER_EVE <= est.interval[1]
    assert covered >= 95
