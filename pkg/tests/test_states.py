import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tripartite import constants
from tripartite.oracle import fourier_pair_probabilities
from tripartite.qudit import (
    computational_basis,
    equal_up_to_global_phase,
    fourier_basis,
    from_terms,
    measure,
    partial_trace,
)
from tripartite.states import (
    CONVENTIONS,
    REFERENCE_RELATIONS,
    collapse_vector,
    correlation_table,
    pair_mixture,
    reduced_pair_state,
    sym_bell,
    symmetric_state,
    verify_collapse_relations,
)


def test_two_party_symmetric_state():
    expected = from_terms({(0, 1): 1, (1, 0): 1}, (2, 2))
    assert_allclose(symmetric_state(2).state.amplitudes, expected.amplitudes, atol=1e-12)


def test_three_party_symmetric_state_terms():
    s = symmetric_state(3).state
    for idx in itertools.product(range(3), repeat=3):
        want = 1 / math.sqrt(6) if len(set(idx)) == 3 else 0
        assert abs(s.amplitude(idx) - want) < 1e-12


def test_four_party_symmetric_state():
    s = symmetric_state(4).state
    nz = s.amplitudes[np.abs(s.amplitudes) > 1e-12]
    assert len(nz) == 24
    assert_allclose(nz, 1 / math.sqrt(24), atol=1e-12)
    assert abs(s.norm() - 1) < 1e-12


@pytest.mark.parametrize("n", [1, 7, 0])
def test_symmetric_state_range(n):
    with pytest.raises(ValueError):
        symmetric_state(n)


@pytest.mark.parametrize("n", range(2, 6))
def test_symmetric_state_invariants(n):
    sym = symmetric_state(n)
    sym.check()
    for k in range(n):
        rho = partial_trace(sym.state, {k})
        assert_allclose(rho.matrix, np.eye(n) / n, atol=1e-10, rtol=0)


@pytest.mark.parametrize("n", [4, 5])
def test_computational_outcomes_are_permutations(n):
    psi = symmetric_state(n).state
    rng = np.random.default_rng(n)
    bases = [computational_basis(n)] * n
    for _ in range(300):
        outcome, _ = measure(psi, bases, rng)
        assert sorted(outcome) == list(range(n))


def test_sym_bell_examples():
    b = sym_bell(0, 1).state
    assert abs(b.amplitude((0, 1)) - 1 / math.sqrt(2)) < 1e-12
    assert abs(b.amplitude((1, 0)) - 1 / math.sqrt(2)) < 1e-12
    t = sym_bell(1, 2).state.tensor()
    assert_allclose(t, t.T)


def test_sym_bell_errors():
    with pytest.raises(ValueError):
        sym_bell(1, 1)
    with pytest.raises(ValueError):
        sym_bell(0, 3)


def test_sym_bell_order_does_not_matter():
    assert equal_up_to_global_phase(sym_bell(2, 0).state, sym_bell(0, 2).state)


def test_reduced_state_is_uniform_pair_mixture():
    rho = reduced_pair_state()
    assert_allclose(rho.matrix, pair_mixture().matrix, atol=1e-10, rtol=0)
    assert rho.rank() == 3
    assert abs(rho.purity() - 1 / 3) < 1e-12


def test_computational_correlation_table():
    table = correlation_table(computational_basis(3))
    assert len(table.entries) == 6
    for (a, b), (c, p) in table.entries.items():
        assert {a, b, c} == {0, 1, 2}
        assert abs(p - 1 / 6) < 1e-12


def test_fourier_correlation_table_against_hand_oracle():
    table = correlation_table(fourier_basis(3))
    oracle = fourier_pair_probabilities()
    assert len(table.entries) == 9
    for (a, b), (c, p) in table.entries.items():
        assert abs(p - oracle[(a, b)]) < 1e-12
        frozen = constants.FOURIER_DIAGONAL_PAIR if a == b else constants.FOURIER_OFF_DIAGONAL_PAIR
        assert abs(p - frozen) < 1e-12
    assert abs(table.total() - 1) < 1e-12


def test_fourier_table_charlie_determined_by_phase_sum():
    # amplitude of <u_a u_b u_c|Psi> vanishes unless a + b + c = 0 mod 3
    table = correlation_table(fourier_basis(3))
    for (a, b), (c, _) in table.entries.items():
        assert (a + b + c) % 3 == 0


def test_correlation_table_inverse_lookup():
    table = correlation_table(fourier_basis(3))
    for (a, b), (c, _) in table.entries.items():
        assert table.alice_for(b, c) == a
        assert table.charlie_for(a, b) == c


def test_correlation_table_needs_three_levels():
    with pytest.raises(ValueError):
        correlation_table(fourier_basis(2))


def test_reference_relations_cover_all_pairs():
    assert sorted((b, a) for b, a, _, _ in REFERENCE_RELATIONS) == list(itertools.product(range(3), repeat=2))
    for _, _, coef, _ in REFERENCE_RELATIONS:
        assert abs(abs(coef) - 1) < 1e-12


def test_collapse_first_relation_same_under_both_conventions():
    u = fourier_basis(3).vectors
    for conv in CONVENTIONS:
        v = collapse_vector(0, 0, conv)
        assert abs(abs(np.vdot(u[0], v)) / np.linalg.norm(v) - 1) < 1e-12
        assert abs(np.linalg.norm(v) - math.sqrt(2) / 3) < 1e-12


def test_collapse_second_relation_differs_between_conventions():
    report = verify_collapse_relations()
    row = next(r for r in report.rows if (r.bob, r.alice) == (1, 0))
    assert row.direction_match["unconjugated"]
    assert not row.direction_match["conjugated"]
    assert row.unique["conjugated"]
    assert row.target["conjugated"] != row.printed_target


def test_every_collapse_is_a_single_fourier_vector():
    report = verify_collapse_relations()
    assert report.all_unique
    assert len(report.rows) == 9


def test_mixed_reading_matches_every_printed_direction():
    report = verify_collapse_relations()
    assert all(r.direction_match["mixed"] for r in report.rows)


def test_collapse_report_table_has_one_row_per_relation():
    rows = verify_collapse_relations().table()
    assert [r["relation"] for r in rows][:2] == ["<u1,u1|Psi>", "<u2,u1|Psi>"]
    assert {"printed", "conjugated_target", "unconjugated_target"} <= set(rows[0])


def test_collapse_vector_unknown_convention():
    with pytest.raises(ValueError):
        collapse_vector(0, 0, "sideways")
