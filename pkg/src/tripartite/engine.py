"""Round-by-round execution of the secret-sharing and pair QKD protocols.

Every round draws from its own generator seeded with ``seed ^ trial`` so a
round's outcome does not depend on which other rounds ran.  Parties interact
only through :class:`ClassicalMessage` records; sifting reads announcements,
never outcomes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qudit import Basis, PureState, SubspaceMeasurement, computational_basis, fourier_basis
from .states import ALICE, BOB, CHARLIE, correlation_table, symmetric_state

SUBSPACE_PAIRS = ((0, 1), (1, 2), (0, 2))
_Z3 = computational_basis(3)


class InvalidRecordError(ValueError):
    """Outcomes that the shared state can never produce."""


class BasisKind(str, enum.Enum):
    COMPUTATIONAL = "computational"
    FOURIER = "fourier"
    SUBSPACE_COMPUTATIONAL = "subspace-computational"
    SUBSPACE_SUPERPOSITION = "subspace-superposition"


_SHORT = {
    BasisKind.COMPUTATIONAL: "Z",
    BasisKind.FOURIER: "F",
    BasisKind.SUBSPACE_COMPUTATIONAL: "Z",
    BasisKind.SUBSPACE_SUPERPOSITION: "X",
}


@dataclass(frozen=True)
class BasisChoice:
    kind: BasisKind
    pair: tuple | None = None

    def __post_init__(self):
        kind = BasisKind(self.kind)
        object.__setattr__(self, "kind", kind)
        subspace = kind in (BasisKind.SUBSPACE_COMPUTATIONAL, BasisKind.SUBSPACE_SUPERPOSITION)
        if subspace:
            if self.pair is None or len(self.pair) != 2:
                raise ValueError(f"{kind.value} needs a level pair")
            i, j = sorted(int(x) for x in self.pair)
            if i == j or not (0 <= i and j <= 2):
                raise ValueError(f"level pair must be two distinct levels in 0..2, got {self.pair}")
            object.__setattr__(self, "pair", (i, j))
        elif self.pair is not None:
            raise ValueError(f"{kind.value} takes no level pair")

    @property
    def is_subspace(self) -> bool:
        return self.pair is not None

    @property
    def label(self) -> str:
        if self.pair is None:
            return _SHORT[self.kind]
        return f"{_SHORT[self.kind]}{self.pair[0]}{self.pair[1]}"

    @classmethod
    def parse(cls, label: str) -> BasisChoice:
        """Inverse of :attr:`label` (``Z``, ``F``, ``Z01``, ``X12``...)."""
        if label in ("Z", "F"):
            return cls(BasisKind.COMPUTATIONAL if label == "Z" else BasisKind.FOURIER)
        if len(label) == 3 and label[0] in "ZX" and label[1:].isdigit():
            kind = BasisKind.SUBSPACE_COMPUTATIONAL if label[0] == "Z" else BasisKind.SUBSPACE_SUPERPOSITION
            return cls(kind, (int(label[1]), int(label[2])))
        raise ValueError(f"unknown basis label {label!r}")

    def measurement(self, d: int = 3) -> Basis | SubspaceMeasurement:
        if self.kind is BasisKind.COMPUTATIONAL:
            return computational_basis(d)
        if self.kind is BasisKind.FOURIER:
            return fourier_basis(d)
        i, j = self.pair
        e = np.eye(d, dtype=complex)
        if self.kind is BasisKind.SUBSPACE_COMPUTATIONAL:
            vecs = [e[i], e[j]]
        else:
            vecs = [(e[i] + e[j]) / math.sqrt(2), (e[i] - e[j]) / math.sqrt(2)]
        return SubspaceMeasurement(d, np.array(vecs), (0, 1))


COMPUTATIONAL = BasisChoice(BasisKind.COMPUTATIONAL)
FOURIER = BasisChoice(BasisKind.FOURIER)


def subspace_bases(pair=(0, 1)) -> tuple[BasisChoice, BasisChoice]:
    return (
        BasisChoice(BasisKind.SUBSPACE_COMPUTATIONAL, pair),
        BasisChoice(BasisKind.SUBSPACE_SUPERPOSITION, pair),
    )


class RejectReason(str, enum.Enum):
    BASIS_MISMATCH = "basis-mismatch"
    SUBSPACE_MISMATCH = "subspace-mismatch"
    MISSING_CLICK = "missing-click"


@dataclass(frozen=True, slots=True)
class ClassicalMessage:
    sender: str
    round: int
    kind: str  # basis | subspace | click | share
    payload: object


@dataclass(frozen=True, slots=True)
class TrialRecord:
    trial: int
    bases: tuple
    clicks: tuple
    outcomes: tuple
    sifted: bool
    reason: RejectReason | None
    reconstructed: int | None = None
    latent: tuple | None = None
    eve_basis: str | None = None
    eve_outcome: int | None = None
    charlie_present: bool = False

    def __post_init__(self):
        for c, o in zip(self.clicks, self.outcomes):
            if c != (o is not None):
                raise ValueError(f"trial {self.trial}: outcome present iff click")


@dataclass(frozen=True)
class EveStrategy:
    """Intercept-resend on one party's particle.

    Each round Eve picks a basis uniformly from ``basis_set`` (a fixed basis is
    a one-element set), measures projectively and forwards the collapsed state.
    """

    target: int = BOB
    basis_set: tuple = subspace_bases((0, 1))

    def __post_init__(self):
        if not self.basis_set:
            raise ValueError("Eve needs at least one basis")
        if self.target not in (ALICE, BOB):
            raise ValueError("Eve intercepts Alice's or Bob's particle")
        object.__setattr__(
            self, "basis_set", tuple(b if isinstance(b, BasisChoice) else BasisChoice.parse(b) for b in self.basis_set)
        )

    @classmethod
    def from_policy(cls, target: int, policy: str, subspace_policy=(0, 1)) -> EveStrategy:
        """``random`` (2D bases of the active subspace(s)), ``random3d`` or a fixed basis label."""
        if policy == "random":
            pairs = SUBSPACE_PAIRS if subspace_policy == "random" else (tuple(subspace_policy),)
            return cls(target, tuple(b for p in pairs for b in subspace_bases(p)))
        if policy == "random3d":
            return cls(target, (COMPUTATIONAL, FOURIER))
        return cls(target, (BasisChoice.parse(policy),))

    def describe(self) -> str:
        return f"intercept:{('alice', 'bob')[self.target]}:" + ",".join(b.label for b in self.basis_set)


@dataclass(frozen=True)
class Transcript:
    seed: int
    protocol: str
    parties: tuple
    records: tuple
    config: dict = field(default_factory=dict)
    messages: tuple | None = None

    def sifted(self) -> list[TrialRecord]:
        return [r for r in self.records if r.sifted]

    @property
    def sift_fraction(self) -> float:
        return len(self.sifted()) / len(self.records)

    def key_pairs(self) -> list[tuple[int, int]]:
        """(Alice, Bob) key symbols of the sifted QKD rounds."""
        if self.protocol != "qkd":
            raise ValueError("key symbols exist only for QKD transcripts")
        return [qkd_key_symbols(r) for r in self.sifted()]

    @property
    def error_rate(self) -> float:
        """QBER for QKD; failed-reconstruction rate for secret sharing."""
        sifted = self.sifted()
        if not sifted:
            return float("nan")
        if self.protocol == "qkd":
            return sum(a != b for a, b in self.key_pairs()) / len(sifted)
        return sum(r.reconstructed != r.outcomes[ALICE] for r in sifted) / len(sifted)

    @property
    def reconstruction_success_rate(self) -> float:
        if self.protocol != "secret-sharing":
            return float("nan")
        return 1.0 - self.error_rate

    def rejection_counts(self) -> dict:
        out = {reason.value: 0 for reason in RejectReason}
        for r in self.records:
            if r.reason is not None:
                out[r.reason.value] += 1
        return out

    def stats(self) -> dict:
        n_sift = len(self.sifted())
        out = {
            "trials": len(self.records),
            "sifted": n_sift,
            "sift_fraction": self.sift_fraction,
            "error_rate": self.error_rate if n_sift else None,
            "rejected": self.rejection_counts(),
        }
        if self.protocol == "secret-sharing":
            out["reconstruction_success_rate"] = self.reconstruction_success_rate if n_sift else None
        return out


# -- measurement sampling -------------------------------------------------------


class _Sampler:
    """Sequential projective measurements with the outcome distributions memoized.

    The protocols only ever visit a handful of distinct states, so caching the
    (probabilities, collapsed states) per (state, party, measurement) avoids
    redoing the same contractions every round.
    """

    def __init__(self):
        self._cache = {}

    def _branches(self, state: PureState, party: int, meas):
        key = (state.amplitudes.tobytes(), state.party_dims, party, id(meas))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if isinstance(meas, Basis):
            projectors = [np.outer(v, v.conj()) for v in meas.vectors]
            labels = list(range(meas.dim))
        else:
            projectors = meas.projectors()
            labels = list(meas.labels) + [None]
        psi = state.tensor()
        probs, posts = [], []
        for P in projectors:
            v = np.moveaxis(np.tensordot(P, psi, axes=([1], [party])), 0, party)
            p = float(np.vdot(v, v).real)
            probs.append(p)
            posts.append(PureState(state.party_dims, v / math.sqrt(p)) if p > 1e-14 else None)
        cdf = np.cumsum(probs)
        hit = (cdf / cdf[-1], labels, posts, meas)  # meas kept alive so id() stays unique
        self._cache[key] = hit
        return hit

    def measure(self, state: PureState, party: int, meas, rng: np.random.Generator):
        """Returns ``(label, post_state)``; label is None for a subspace no-click."""
        cdf, labels, posts, _ = self._branches(state, party, meas)
        i = min(int(np.searchsorted(cdf, rng.random(), side="right")), len(cdf) - 1)
        if posts[i] is None:
            raise FloatingPointError("sampled a zero-probability outcome")
        return labels[i], posts[i]


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Generator for one round, seeded with ``seed XOR trial``.

    Runs whose seeds differ only in bits that trial indices also use draw from
    overlapping sets of streams; repeated studies should space seeds apart,
    e.g. ``k << 32``.
    """
    return np.random.default_rng(int(seed) ^ int(trial))


# -- secret sharing ---------------------------------------------------------------

_TABLES = {}


def _fourier_table():
    if "F" not in _TABLES:
        _TABLES["F"] = correlation_table(fourier_basis(3))
    return _TABLES["F"]


def reconstruct_alice(bob_outcome: int, charlie_outcome: int, basis) -> int:
    """Alice's outcome from Bob's and Charlie's shares in a sifted round."""
    kind = basis.kind if isinstance(basis, BasisChoice) else BasisKind(basis)
    if kind is BasisKind.COMPUTATIONAL:
        missing = {0, 1, 2} - {bob_outcome, charlie_outcome}
        if bob_outcome == charlie_outcome or len(missing) != 1:
            raise InvalidRecordError(f"computational shares ({bob_outcome}, {charlie_outcome}) are impossible")
        return missing.pop()
    if kind is BasisKind.FOURIER:
        try:
            return _fourier_table().alice_for(bob_outcome, charlie_outcome)
        except KeyError:
            raise InvalidRecordError(f"Fourier shares ({bob_outcome}, {charlie_outcome}) never occur") from None
    raise ValueError(f"{kind.value} is not a secret-sharing basis")


def sift_secret_sharing(announcements: Sequence[ClassicalMessage]) -> RejectReason | None:
    bases = {m.payload for m in announcements if m.kind == "basis"}
    return None if len(bases) == 1 else RejectReason.BASIS_MISMATCH


def run_secret_sharing(
    n_trials: int,
    seed: int,
    basis_set: Sequence = (COMPUTATIONAL, FOURIER),
    measurements: dict | None = None,
    record_messages: bool = False,
) -> Transcript:
    """Three-party secret sharing on fresh copies of the symmetric state.

    Each party picks a basis from ``basis_set`` uniformly, then Alice, Bob and
    Charlie measure in that order.  Rounds where all three bases agree are
    kept and Bob and Charlie pool their outcomes to recover Alice's.
    ``measurements`` maps a basis choice to the measurement that realizes it
    (e.g. the optical readout); by default the ideal bases are used.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    choices = tuple(b if isinstance(b, BasisChoice) else BasisChoice.parse(b) for b in basis_set)
    if not choices or any(b.kind not in (BasisKind.COMPUTATIONAL, BasisKind.FOURIER) for b in choices):
        raise ValueError("secret sharing uses the computational and/or Fourier basis")
    meas = {b: (measurements or {}).get(b) or b.measurement() for b in choices}
    names = ("alice", "bob", "charlie")
    psi0 = symmetric_state(3).state
    sampler = _Sampler()
    records, log = [], []

    for t in range(n_trials):
        rng = trial_rng(seed, t)
        picks = rng.integers(len(choices), size=3)
        bases = [choices[i] for i in picks]
        state, outcomes = psi0, []
        for party in (ALICE, BOB, CHARLIE):
            m, state = sampler.measure(state, party, meas[bases[party]], rng)
            outcomes.append(m)

        announcements = [ClassicalMessage(names[k], t, "basis", bases[k].label) for k in range(3)]
        reason = sift_secret_sharing(announcements)
        reconstructed = None
        if record_messages:
            log.extend(announcements)
        if reason is None:
            shares = (
                ClassicalMessage("bob", t, "share", outcomes[BOB]),
                ClassicalMessage("charlie", t, "share", outcomes[CHARLIE]),
            )
            if record_messages:
                log.extend(shares)
            try:
                reconstructed = reconstruct_alice(shares[0].payload, shares[1].payload, bases[BOB])
            except InvalidRecordError:
                reconstructed = None
        records.append(
            TrialRecord(
                trial=t,
                bases=tuple(b.label for b in bases),
                clicks=(True, True, True),
                outcomes=tuple(outcomes),
                sifted=reason is None,
                reason=reason,
                reconstructed=reconstructed,
            )
        )
    config = {"basis_set": [b.label for b in choices]}
    return Transcript(seed, "secret-sharing", names, tuple(records), config, tuple(log) if record_messages else None)


def conditional_alice_distribution(transcript: Transcript, given: int = BOB) -> dict:
    """Empirical P(Alice's outcome | one other party's outcome) over sifted rounds.

    Conditions on the outcome value alone, pooling the bases.
    """
    counts = {}
    for r in transcript.sifted():
        counts.setdefault(r.outcomes[given], [0, 0, 0])[r.outcomes[ALICE]] += 1
    return {k: v for k, v in sorted(counts.items())}


# -- pair QKD ---------------------------------------------------------------------


def qkd_key_symbols(record: TrialRecord) -> tuple[int, int]:
    """Alice's and Bob's key symbol for a sifted round.

    The pair state anti-correlates in the subspace computational basis, so Bob
    flips his bit there; in the superposition basis both keep their outcome.
    """
    a, b = record.outcomes[ALICE], record.outcomes[BOB]
    if record.bases[BOB].startswith("Z"):
        b = 1 - b
    return a, b


def sift_qkd(announcements: Sequence[ClassicalMessage]) -> RejectReason | None:
    by = {}
    for m in announcements:
        by.setdefault(m.kind, {})[m.sender] = m.payload
    if by["subspace"]["alice"] != by["subspace"]["bob"]:
        return RejectReason.SUBSPACE_MISMATCH
    if by["basis"]["alice"] != by["basis"]["bob"]:
        return RejectReason.BASIS_MISMATCH
    if not (by["click"]["alice"] and by["click"]["bob"]):
        return RejectReason.MISSING_CLICK
    return None


def _branch_after_loss(sampler: _Sampler, psi0: PureState, rng, cache: dict) -> tuple[PureState, tuple]:
    """Alice-Bob pure branch of the reduced state, drawn with its mixture weight.

    Discarding Charlie's particle is equivalent to an unread computational
    measurement of it, which leaves one symmetric Bell pair per outcome.
    """
    c, post = sampler.measure(psi0, CHARLIE, _Z3, rng)
    if c not in cache:
        ab = post.tensor()[:, :, c]
        cache[c] = (PureState((3, 3), ab / np.linalg.norm(ab)), tuple(sorted({0, 1, 2} - {c})))
    return cache[c]


def run_qkd(
    n_trials: int,
    seed: int,
    subspace_policy="fixed",
    pair=(0, 1),
    eve: EveStrategy | None = None,
    charlie_loss: float = 1.0,
    record_messages: bool = False,
) -> Transcript:
    """Alice and Bob build a key from the reduced state after Charlie's particle is lost.

    ``subspace_policy`` is ``"fixed"`` (both use ``pair``) or ``"random"``
    (each picks one of the three level pairs).  With ``charlie_loss < 1``
    Charlie keeps his particle in some rounds; Alice and Bob's statistics are
    the same either way and the record notes it.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    if subspace_policy not in ("fixed", "random"):
        raise ValueError(f"unknown subspace policy {subspace_policy!r}")
    if not 0.0 <= charlie_loss <= 1.0:
        raise ValueError("charlie_loss is a probability")
    pair = tuple(sorted(pair))
    if subspace_policy == "fixed" and pair not in SUBSPACE_PAIRS:
        raise ValueError(f"invalid subspace pair {pair}")

    psi0 = symmetric_state(3).state
    sampler = _Sampler()
    meas_cache = {}

    def meas(choice: BasisChoice):
        if choice not in meas_cache:
            meas_cache[choice] = choice.measurement()
        return meas_cache[choice]

    names = ("alice", "bob")
    bases_of = {p: subspace_bases(p) for p in SUBSPACE_PAIRS}
    branches = {}
    records, log = [], []
    for t in range(n_trials):
        rng = trial_rng(seed, t)
        charlie_present = bool(rng.random() >= charlie_loss)
        state, latent = _branch_after_loss(sampler, psi0, rng, branches)
        if subspace_policy == "random":
            pairs = [SUBSPACE_PAIRS[i] for i in rng.integers(3, size=2)]
        else:
            pairs = [pair, pair]
        kinds = rng.integers(2, size=2)
        choices = [bases_of[pairs[k]][kinds[k]] for k in (ALICE, BOB)]

        eve_basis = eve_outcome = None
        if eve is not None:
            eb = eve.basis_set[int(rng.integers(len(eve.basis_set)))]
            eve_outcome, state = sampler.measure(state, eve.target, meas(eb), rng)
            eve_basis = eb.label

        outcomes = []
        for party in (ALICE, BOB):
            label, state = sampler.measure(state, party, meas(choices[party]), rng)
            outcomes.append(label)
        clicks = tuple(o is not None for o in outcomes)

        announcements = []
        for k, name in enumerate(names):
            announcements.append(ClassicalMessage(name, t, "basis", choices[k].kind.value))
            announcements.append(ClassicalMessage(name, t, "subspace", choices[k].pair))
            announcements.append(ClassicalMessage(name, t, "click", clicks[k]))
        reason = sift_qkd(announcements)
        if record_messages:
            log.extend(announcements)
        records.append(
            TrialRecord(
                trial=t,
                bases=tuple(c.label for c in choices),
                clicks=clicks,
                outcomes=tuple(outcomes),
                sifted=reason is None,
                reason=reason,
                latent=latent,
                eve_basis=eve_basis,
                eve_outcome=eve_outcome,
                charlie_present=charlie_present,
            )
        )
    config = {
        "subspace_policy": subspace_policy if subspace_policy == "random" else f"fixed:{pair[0]},{pair[1]}",
        "eve": eve.describe() if eve else "off",
        "charlie_loss": charlie_loss,
    }
    return Transcript(seed, "qkd", names, tuple(records), config, tuple(log) if record_messages else None)


def check_message_hygiene(messages: Sequence[ClassicalMessage], transcript: Transcript) -> list[str]:
    """Problems found in a message log; empty when every announcement is outcome-free."""
    problems = []
    sifted = {r.trial for r in transcript.records if r.sifted}
    shared = set()
    for m in messages:
        if m.kind == "share":
            if m.round not in sifted:
                problems.append(f"round {m.round}: share sent for an unsifted round")
            shared.add(m.round)
        elif m.kind in ("basis", "subspace", "click"):
            if m.round in shared:
                problems.append(f"round {m.round}: announcement after reconciliation")
            if m.kind == "click" and not isinstance(m.payload, bool):
                problems.append(f"round {m.round}: click announcement carries {m.payload!r}")
            if m.kind == "basis" and not isinstance(m.payload, str):
                problems.append(f"round {m.round}: basis announcement carries {m.payload!r}")
        else:
            problems.append(f"round {m.round}: unknown message kind {m.kind!r}")
    return problems


# -- parameter estimation ------------------------------------------------------------


@dataclass(frozen=True)
class QberEstimate:
    estimate: float
    interval: tuple[float, float]
    sample_size: int
    errors: int
    remaining_key: tuple  # (alice symbols, bob symbols)


def wilson_interval(errors: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    from scipy.stats import norm

    z = float(norm.ppf(0.5 + confidence / 2))
    p = errors / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == n else min(1.0, centre + half)
    return lo, hi


def estimate_qber(transcript: Transcript, sample_fraction: float, seed=None, confidence: float = 0.95) -> QberEstimate:
    """Publicly compare a random sample of the sifted key and drop it from the key."""
    if not 0 < sample_fraction < 1:
        raise ValueError("sample_fraction must lie strictly between 0 and 1")
    pairs = transcript.key_pairs()
    if not pairs:
        raise ValueError("transcript has no sifted key")
    n = len(pairs)
    k = min(n, max(1, round(sample_fraction * n)))
    rng = np.random.default_rng(transcript.seed if seed is None else seed)
    sample = set(rng.choice(n, size=k, replace=False).tolist())
    errors = sum(pairs[i][0] != pairs[i][1] for i in sample)
    rest = [pairs[i] for i in range(n) if i not in sample]
    key = (tuple(a for a, _ in rest), tuple(b for _, b in rest))
    return QberEstimate(errors / k, wilson_interval(errors, k, confidence), k, errors, key)
