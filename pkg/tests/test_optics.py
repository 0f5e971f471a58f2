import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.stats import unitary_group

from tripartite import constants
from tripartite.optics import (
    CouplerUnitary,
    DetectorAssignment,
    ModelLimitError,
    OpticalSetup,
    SorterStage,
    SourceSpec,
    fourier_three_port,
    herald_tripartite,
    hologram_shift,
    port_map,
    sorter_basis,
    sorter_route,
    source_state,
    three_level_cascade,
    three_port_basis,
)
from tripartite.oracle import herald_success_probability
from tripartite.qudit import (
    PureState,
    apply_local_phases,
    born_probabilities,
    computational_basis,
    equal_up_to_local_diagonal_phases,
    fourier_basis,
    ket,
    measure,
    partial_trace,
)
from tripartite.report import within_sigma
from tripartite.states import symmetric_state

W = np.exp(2j * np.pi / 3)
PERMS = set(itertools.permutations(range(3)))


def test_default_source():
    s = source_state()
    expected = np.zeros((3, 3))
    np.fill_diagonal(expected, 1 / math.sqrt(3))
    assert_allclose(s.tensor(), expected, atol=1e-12)


def test_single_level_source_is_a_product():
    s = source_state(SourceSpec((1, 0, 0)))
    assert_allclose(s.amplitudes, ket([0, 0], 3).amplitudes)
    assert partial_trace(s, {0}).rank() == 1


def test_default_source_marginal_is_maximally_mixed():
    assert_allclose(partial_trace(source_state(), {1}).matrix, np.eye(3) / 3, atol=1e-12)


def test_source_spec_must_be_normalized():
    with pytest.raises(ValueError):
        SourceSpec((1, 1, 0))


def test_coupler_validation():
    with pytest.raises(ValueError):
        CouplerUnitary(np.ones((3, 3)))
    with pytest.raises(ValueError):
        CouplerUnitary(np.eye(2))
    with pytest.raises(ValueError):
        DetectorAssignment((0, 0, 1))


def test_dft_herald():
    res = herald_tripartite(CouplerUnitary.dft())
    assert abs(res.success_probability - 2 / 243) < 1e-12
    assert abs(res.success_probability - constants.HERALD_SUCCESS_DFT) < 1e-12
    target = symmetric_state(3).state
    ok, phases = equal_up_to_local_diagonal_phases(res.state, target)
    assert ok
    fid = abs(np.vdot(target.amplitudes, apply_local_phases(res.state, phases).amplitudes)) ** 2
    assert abs(fid - 1) < 1e-10


def test_dft_herald_textbook_witness():
    # party k, level m picks up omega^(-k m); undoing it recovers the symmetric state
    res = herald_tripartite()
    phases = [np.array([W ** (-k * m) for m in range(3)]) for k in range(3)]
    corrected = apply_local_phases(res.state, phases)
    target = symmetric_state(3).state
    assert abs(abs(np.vdot(target.amplitudes, corrected.amplitudes)) - 1) < 1e-10


def test_identity_coupler_herald():
    res = herald_tripartite(CouplerUnitary.identity())
    assert abs(res.success_probability - 1 / 27) < 1e-12
    assert_allclose(np.abs(res.state.amplitudes), ket([0, 1, 2], 3).amplitudes, atol=1e-12)
    for k in range(3):
        assert partial_trace(res.state, {k}).rank() == 1


@pytest.mark.parametrize("seed", range(8))
def test_herald_support_for_random_couplers(seed):
    U = unitary_group.rvs(3, random_state=seed)
    res = herald_tripartite(CouplerUnitary(U))
    assert 0 < res.success_probability <= 1
    assert abs(res.success_probability - herald_success_probability(U)) < 1e-12
    for idx in itertools.product(range(3), repeat=3):
        if idx not in PERMS:
            assert res.raw[idx] == 0


def test_herald_with_permuted_detectors():
    res = herald_tripartite(CouplerUnitary.dft(), DetectorAssignment((2, 0, 1)))
    assert abs(res.success_probability - 2 / 243) < 1e-12


def test_hologram_shift_examples():
    assert_allclose(hologram_shift(ket([2], 3), 0, -2).amplitudes, ket([0], 3).amplitudes)
    psi = source_state()
    assert_allclose(hologram_shift(psi, 1, 0).amplitudes, psi.amplitudes)


def test_hologram_shift_out_of_range():
    with pytest.raises(ValueError):
        hologram_shift(ket([2], 3), 0, 1)
    with pytest.raises(ValueError):
        hologram_shift(ket([0], 3), 0, -1)


def test_hologram_shift_into_larger_space():
    out = hologram_shift(ket([2], 3), 0, 1, l_max=3)
    assert out.party_dims == (4,)
    assert out.amplitude((3,)) == 1


@given(st.integers(-2, 2), st.integers(0, 100))
@settings(max_examples=25, deadline=None)
def test_hologram_shift_preserves_norm(delta, seed):
    rng = np.random.default_rng(seed)
    v = np.zeros(5, dtype=complex)
    lo, hi = max(0, -delta), min(5, 5 - delta)
    v[lo:hi] = rng.normal(size=hi - lo) + 1j * rng.normal(size=hi - lo)
    psi = PureState((5,), v / np.linalg.norm(v))
    assert abs(hologram_shift(psi, 0, delta).norm() - 1) < 1e-12


def test_single_stage_parity_routing():
    stage = (SorterStage(np.pi / 2),)
    assert sorter_route(np.eye(3)[2], stage).probabilities == {"e": 1.0}
    assert sorter_route(np.eye(3)[1], stage).probabilities == {"o": 1.0}
    half = sorter_route(np.array([1, 1, 0]) / math.sqrt(2), stage).probabilities
    assert abs(half["e"] - 0.5) < 1e-12 and abs(half["o"] - 0.5) < 1e-12


def test_cascade_separates_three_levels():
    ports = port_map(three_level_cascade(), range(3))
    assert ports == {0: "ee", 1: "o", 2: "eo"}
    for l in range(3):
        assert sorter_route(np.eye(3)[l]).probabilities == {ports[l]: 1.0}


def test_single_stage_cannot_separate_three_levels():
    with pytest.raises(ModelLimitError):
        sorter_basis((SorterStage(np.pi / 2),))


def test_non_parity_phase_is_a_model_limit():
    with pytest.raises(ModelLimitError):
        sorter_route(np.eye(3)[1], (SorterStage(np.pi / 3),))


def test_sorter_stage_validation():
    with pytest.raises(ValueError):
        SorterStage(0)
    with pytest.raises(ValueError):
        SorterStage(np.pi / 2, delta_l=0.5)


def test_three_port_examples():
    u = fourier_basis(3).vectors
    assert_allclose(fourier_three_port(u[0]), [1, 0, 0], atol=1e-12)
    assert_allclose(fourier_three_port(np.eye(3)[0]), [1 / 3] * 3, atol=1e-12)


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False), min_size=3, max_size=3))
@settings(max_examples=40, deadline=None)
def test_three_port_probabilities_match_fourier_born_rule(amps):
    v = np.array(amps)
    if np.linalg.norm(v) < 1e-3:
        return
    v = v / np.linalg.norm(v)
    p = fourier_three_port(v)
    assert abs(p.sum() - 1) < 1e-12
    assert_allclose(p, np.abs(fourier_basis(3).vectors.conj() @ v) ** 2, atol=1e-10)


def test_optical_bases_equal_abstract_bases():
    assert_allclose(np.abs(sorter_basis().vectors), np.eye(3), atol=1e-12)
    assert_allclose(three_port_basis().vectors, fourier_basis(3).vectors, atol=1e-12)


def test_optical_measurement_sampling_agrees_with_born_rule():
    psi = symmetric_state(3).state
    n = 5000
    for optical, abstract in ((sorter_basis(), computational_basis(3)), (three_port_basis(), fourier_basis(3))):
        table = born_probabilities(psi, [abstract] * 3)
        counts = np.zeros((3, 3, 3), dtype=int)
        rng = np.random.default_rng(12)
        for _ in range(n):
            counts[measure(psi, [optical] * 3, rng)[0]] += 1
        for idx in itertools.product(range(3), repeat=3):
            assert within_sigma(int(counts[idx]), n, float(table[idx]))


def test_optical_setup_round_trip():
    setup = OpticalSetup(coupler=CouplerUnitary(unitary_group.rvs(3, random_state=4)))
    again = OpticalSetup.from_dict(setup.to_dict())
    assert_allclose(again.coupler.matrix, setup.coupler.matrix, atol=1e-15)
    assert again.stages == setup.stages
    assert again.source == setup.source
