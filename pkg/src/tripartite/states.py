"""The permutation-symmetric shared state, its pair components and correlations."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .qudit import (
    ATOL,
    Basis,
    MixedState,
    PureState,
    born_probabilities,
    fourier_basis,
    partial_trace,
)

MAX_PARTIES = 6

ALICE, BOB, CHARLIE = 0, 1, 2
PARTY_NAMES = ("alice", "bob", "charlie")
LEVEL_NAMES = ("a", "b", "c")


@dataclass(frozen=True)
class SymmetricState:
    """Equal superposition of all ``n!`` permutation kets of ``n`` levels over ``n`` parties."""

    n: int
    state: PureState

    def check(self) -> None:
        amps = self.state.tensor()
        expected = np.zeros_like(amps)
        for p in itertools.permutations(range(self.n)):
            expected[p] = 1 / math.sqrt(math.factorial(self.n))
        if not np.allclose(amps, expected, atol=ATOL, rtol=0):
            raise AssertionError("amplitudes are not the uniform permutation superposition")


def symmetric_state(n: int = 3) -> SymmetricState:
    if not 2 <= n <= MAX_PARTIES:
        raise ValueError(f"n must lie in 2..{MAX_PARTIES}, got {n}")
    amps = np.zeros((n,) * n, dtype=complex)
    c = 1 / math.sqrt(math.factorial(n))
    for p in itertools.permutations(range(n)):
        amps[p] = c
    return SymmetricState(n, PureState((n,) * n, amps))


@dataclass(frozen=True)
class SymBellPair:
    levels: tuple[int, int]
    state: PureState


def sym_bell(i: int, j: int, d: int = 3) -> SymBellPair:
    """``(|ij> + |ji>) / sqrt(2)`` on two ``d``-level parties."""
    if i == j:
        raise ValueError("sym_bell needs two distinct levels")
    if not (0 <= i < d and 0 <= j < d):
        raise ValueError(f"levels must lie in 0..{d - 1}")
    amps = np.zeros((d, d), dtype=complex)
    amps[i, j] = amps[j, i] = 1 / math.sqrt(2)
    return SymBellPair((i, j), PureState((d, d), amps))


def pair_mixture() -> MixedState:
    """Uniform mixture of the three symmetric Bell pairs (0,1), (1,2), (2,0)."""
    rho = sum(sym_bell(i, j).state.density_matrix().matrix for i, j in ((0, 1), (1, 2), (2, 0))) / 3
    return MixedState((3, 3), rho)


def reduced_pair_state() -> MixedState:
    """Alice and Bob's state once Charlie's particle is discarded."""
    return partial_trace(symmetric_state(3).state, {ALICE, BOB})


# -- correlations ------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationTable:
    """``entries[(alice, bob)] = (charlie, probability)`` for one common basis."""

    basis_label: str
    entries: dict

    def total(self) -> float:
        return sum(p for _, p in self.entries.values())

    def charlie_for(self, alice: int, bob: int) -> int:
        return self.entries[(alice, bob)][0]

    def alice_for(self, bob: int, charlie: int) -> int:
        """Inverse lookup; KeyError if the pair never occurs."""
        return self._by_bob_charlie()[(bob, charlie)]

    def _by_bob_charlie(self) -> dict:
        out = {}
        for (a, b), (c, _) in self.entries.items():
            out.setdefault((b, c), set()).add(a)
        return {k: next(iter(v)) for k, v in out.items() if len(v) == 1}

    def check(self, tol: float = ATOL) -> None:
        if abs(self.total() - 1) > tol:
            raise AssertionError(f"probabilities sum to {self.total()}")
        seen = {}
        for (a, b), (c, _) in self.entries.items():
            seen.setdefault((b, c), set()).add(a)
        bad = {k: v for k, v in seen.items() if len(v) > 1}
        if bad:
            raise AssertionError(f"(bob, charlie) pairs with ambiguous alice: {bad}")


def correlation_table(basis: Basis, tol: float = ATOL) -> CorrelationTable:
    """Exact joint statistics when all three parties measure the symmetric state in ``basis``.

    Raises if some (alice, bob) pair leaves Charlie's outcome undetermined.
    """
    if basis.dim != 3:
        raise ValueError("correlation tables are defined for three-level bases")
    table = born_probabilities(symmetric_state(3).state, [basis] * 3)
    entries = {}
    for a, b in itertools.product(range(3), repeat=2):
        row = table[a, b]
        p = float(row.sum())
        if p <= tol:
            continue
        support = np.flatnonzero(row > tol)
        if len(support) != 1:
            raise AssertionError(f"charlie outcome not determined by ({a}, {b}): {row}")
        entries[(a, b)] = (int(support[0]), p)
    out = CorrelationTable(basis.label, entries)
    out.check()
    return out


# -- collapse relations -------------------------------------------------------

_W = np.exp(2j * np.pi / 3)

# Reference form: <first, second|Psi> = coefficient * |target>, with first = Bob's bra
# and second = Alice's bra, phi = 2 pi / 3.  Fourier vectors indexed 0, 1, 2.
REFERENCE_RELATIONS = (
    (0, 0, 1, 0),
    (1, 0, -1, 1),
    (2, 0, -1, 2),
    (0, 1, -_W.conjugate(), 2),
    (1, 1, -_W.conjugate(), 0),
    (2, 1, _W.conjugate(), 1),
    (0, 2, -_W, 1),
    (1, 2, _W, 2),
    (2, 2, -_W.conjugate(), 0),
)

CONVENTIONS = ("conjugated", "unconjugated")


@dataclass(frozen=True)
class CollapseRow:
    bob: int
    alice: int
    printed_target: int
    printed_coefficient: complex
    # per convention: index of the single Fourier vector Charlie collapses onto
    target: dict
    norm: dict
    direction_match: dict
    exact_match: dict
    unique: dict

    def matched_by(self) -> list[str]:
        return [c for c, ok in self.direction_match.items() if ok]


@dataclass(frozen=True)
class CollapseReport:
    rows: tuple
    conventions: tuple

    @property
    def all_unique(self) -> bool:
        return all(row.unique[c] for row in self.rows for c in CONVENTIONS)

    @property
    def all_rows_matched(self) -> bool:
        return all(any(row.direction_match[c] for c in CONVENTIONS) for row in self.rows)

    def table(self) -> list[dict]:
        out = []
        for r in self.rows:
            out.append(
                {
                    "relation": f"<u{r.bob + 1},u{r.alice + 1}|Psi>",
                    "printed": f"u{r.printed_target + 1}",
                    **{f"{c}_target": f"u{r.target[c] + 1}" for c in self.conventions},
                    **{f"{c}_direction_match": r.direction_match[c] for c in self.conventions},
                    **{f"{c}_exact_match": r.exact_match[c] for c in self.conventions},
                }
            )
        return out


def _collapse(bob_bra: np.ndarray, alice_bra: np.ndarray) -> np.ndarray:
    psi = symmetric_state(3).state.tensor()
    return np.einsum("i,j,ijk->k", alice_bra, bob_bra, psi)


def collapse_vector(bob: int, alice: int, convention: str) -> np.ndarray:
    """Charlie's unnormalized state after Alice and Bob project onto Fourier vectors.

    ``mixed`` conjugates Alice's bra only, which is the reading under which
    every reference relation holds as a direction.
    """
    u = fourier_basis(3).vectors
    if convention == "conjugated":
        return _collapse(u[bob].conj(), u[alice].conj())
    if convention == "unconjugated":
        return _collapse(u[bob], u[alice])
    if convention == "mixed":
        return _collapse(u[bob], u[alice].conj())
    raise ValueError(f"unknown convention {convention!r}")


def verify_collapse_relations(conventions=CONVENTIONS + ("mixed",), tol: float = ATOL) -> CollapseReport:
    u = fourier_basis(3).vectors
    rows = []
    for bob, alice, coef, tgt in REFERENCE_RELATIONS:
        target, norm, dmatch, ematch, unique = {}, {}, {}, {}, {}
        for conv in conventions:
            v = collapse_vector(bob, alice, conv)
            n = float(np.linalg.norm(v))
            overlaps = np.abs(u.conj() @ (v / n)) ** 2
            hits = np.flatnonzero(np.abs(overlaps - 1) < tol)
            unique[conv] = len(hits) == 1 and np.allclose(np.sort(overlaps)[:-1], 0, atol=tol)
            target[conv] = int(np.argmax(overlaps))
            norm[conv] = n
            dmatch[conv] = target[conv] == tgt and unique[conv]
            ematch[conv] = bool(np.allclose(v / n, coef * u[tgt], atol=tol))
        rows.append(CollapseRow(bob, alice, tgt, coef, target, norm, dmatch, ematch, unique))
    return CollapseReport(tuple(rows), tuple(conventions))
