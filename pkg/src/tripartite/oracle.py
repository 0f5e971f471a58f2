"""Exact reference values, computed without the sampling paths they check.

``render_constants()`` produces the source of :mod:`tripartite.constants`;
``tripartite oracle --output src/tripartite/constants.py`` regenerates it.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .engine import SUBSPACE_PAIRS, BasisChoice, EveStrategy, qkd_key_symbols, subspace_bases, TrialRecord
from .qudit import Basis, partial_trace
from .states import symmetric_state


def permanent(matrix) -> complex:
    """Permanent by summing over all permutations."""
    M = np.asarray(matrix)
    n = M.shape[0]
    total = 0j
    for perm in itertools.permutations(range(n)):
        term = 1 + 0j
        for i, j in enumerate(perm):
            term *= M[i, j]
        total += term
    return total


def fourier_pair_probabilities() -> dict:
    """P(alice = m_a, bob = m_b) with all three parties in the Fourier basis.

    Sums the six permutation terms of the symmetric state against the three
    Fourier bras by hand.
    """
    w = np.exp(2j * np.pi / 3)
    amp = 1 / math.sqrt(6)
    out = {}
    for ma, mb in itertools.product(range(3), repeat=2):
        p = 0.0
        for mc in range(3):
            a = 0j
            for levels in itertools.permutations(range(3)):
                phase = w ** (-(ma * levels[0] + mb * levels[1] + mc * levels[2]))
                a += amp * phase / math.sqrt(27)
            p += abs(a) ** 2
        out[(ma, mb)] = p
    return out


def herald_success_probability(U, detector_levels=(0, 1, 2), source=(1 / math.sqrt(3),) * 3) -> float:
    """Triple-coincidence probability from permanents of the OAM-filtered coupler.

    For partner levels ``m`` the event amplitude is the permanent of
    ``A[j, k] = U[j, k] [detector_levels[j] == m_k]`` times the source weights.
    """
    U = np.asarray(U, dtype=complex)
    total = 0.0
    for ms in itertools.product(range(len(source)), repeat=3):
        A = np.array([[U[j, k] * (detector_levels[j] == ms[k]) for k in range(3)] for j in range(3)])
        weight = np.prod([source[m] for m in ms])
        total += abs(weight * permanent(A)) ** 2
    return float(total)


def _eve_channel(rho: np.ndarray, eve: EveStrategy) -> np.ndarray:
    """Intercept-resend as a measure-and-prepare channel on the target party."""
    out = np.zeros_like(rho)
    for choice in eve.basis_set:
        meas = choice.measurement()
        if isinstance(meas, Basis):
            projectors = [np.outer(v, v.conj()) for v in meas.vectors]
        else:
            projectors = meas.projectors()
        for P in projectors:
            full = np.kron(P, np.eye(3)) if eve.target == 0 else np.kron(np.eye(3), P)
            out += full @ rho @ full / len(eve.basis_set)
    return out


def qkd_exact(subspace_policy="fixed", pair=(0, 1), eve: EveStrategy | None = None) -> dict:
    """Sift fraction and QBER from the reduced density matrix, averaged over basis choices."""
    rho = partial_trace(symmetric_state(3).state, {0, 1}).matrix
    if eve is not None:
        rho = _eve_channel(rho, eve)
    pairs = SUBSPACE_PAIRS if subspace_policy == "random" else (tuple(sorted(pair)),)
    p_pair = 1 / len(pairs)
    sift = err = 0.0
    double_click = 0.0
    for pa, pb in itertools.product(pairs, repeat=2):
        for ka, kb in itertools.product(range(2), repeat=2):
            ca, cb = subspace_bases(pa)[ka], subspace_bases(pb)[kb]
            w = p_pair * p_pair * 0.25
            ma, mb = ca.measurement(), cb.measurement()
            for a, b in itertools.product(range(2), repeat=2):
                Pa = np.outer(ma.vectors[a], ma.vectors[a].conj())
                Pb = np.outer(mb.vectors[b], mb.vectors[b].conj())
                p = float(np.trace(np.kron(Pa, Pb) @ rho).real)
                double_click += w * p
                if ca != cb:
                    continue
                sift += w * p
                rec = TrialRecord(0, (ca.label, cb.label), (True, True), (a, b), True, None)
                ka_sym, kb_sym = qkd_key_symbols(rec)
                if ka_sym != kb_sym:
                    err += w * p
    return {"sift_fraction": sift, "qber": err / sift if sift else float("nan"), "double_click": double_click}


def secret_sharing_sift(n_bases: int = 2) -> Fraction:
    """Probability that three independent uniform choices agree."""
    agree = sum(1 for c in itertools.product(range(n_bases), repeat=3) if len(set(c)) == 1)
    return Fraction(agree, n_bases**3)


def compute_constants() -> list[tuple[str, float, str]]:
    """(name, value, provenance) for every frozen reference constant."""
    from .optics import CouplerUnitary

    probs = fourier_pair_probabilities()
    diag = [probs[(m, m)] for m in range(3)]
    off = [p for (a, b), p in probs.items() if a != b]
    honest_fixed = qkd_exact("fixed")
    honest_random = qkd_exact("random")
    eve2 = qkd_exact("fixed", eve=EveStrategy.from_policy(1, "random"))
    eve3 = qkd_exact("fixed", eve=EveStrategy.from_policy(1, "random3d"))
    return [
        ("FOURIER_DIAGONAL_PAIR", float(np.mean(diag)),
         "27-amplitude contraction, P(alice=m, bob=m) in the Fourier basis"),
        ("FOURIER_OFF_DIAGONAL_PAIR", float(np.mean(off)),
         "27-amplitude contraction, P(alice=m, bob=m') for m != m'"),
        ("SECRET_SHARING_SIFT", float(secret_sharing_sift(2)),
         "enumeration of three uniform choices over two bases"),
        ("QKD_SIFT_FIXED", honest_fixed["sift_fraction"],
         "reduced density matrix, fixed subspace {0,1}, no eavesdropper"),
        ("QKD_SIFT_RANDOM", honest_random["sift_fraction"],
         "reduced density matrix, random subspace per party, no eavesdropper"),
        ("QKD_QBER_HONEST", honest_fixed["qber"],
         "reduced density matrix, fixed subspace {0,1}, no eavesdropper"),
        ("QKD_QBER_EVE", eve2["qber"],
         "intercept-resend channel on Bob, uniform over the two {0,1} subspace bases"),
        ("QKD_SIFT_EVE", eve2["sift_fraction"],
         "intercept-resend channel on Bob, uniform over the two {0,1} subspace bases"),
        ("QKD_QBER_EVE_3D", eve3["qber"],
         "intercept-resend channel on Bob, uniform over the full computational and Fourier bases"),
        ("QKD_SIFT_EVE_3D", eve3["sift_fraction"],
         "intercept-resend channel on Bob, uniform over the full computational and Fourier bases"),
        ("HERALD_SUCCESS_DFT", herald_success_probability(CouplerUnitary.dft().matrix),
         "permanent of the OAM-filtered DFT coupler, summed over partner levels"),
        ("HERALD_SUCCESS_IDENTITY", herald_success_probability(np.eye(3)),
         "permanent of the OAM-filtered identity coupler"),
    ]


def render_constants() -> str:
    lines = [
        '"""Reference constants frozen before any Monte Carlo run.',
        "",
        "Generated by ``tripartite oracle``; do not edit by hand.",
        '"""',
        "",
    ]
    for name, value, provenance in compute_constants():
        lines.append(f"# {provenance}")
        lines.append(f"{name} = {value!r}")
        lines.append("")
    lines.append("PROVENANCE = {")
    for name, _, provenance in compute_constants():
        lines.append(f"    {name!r}: {provenance!r},")
    lines.append("}")
    return "\n".join(lines) + "\n"
