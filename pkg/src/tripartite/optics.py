"""Idealized OAM optics: heralded state generation and the sorter/interferometer readout.

Photons carry an integer orbital angular momentum ``l``; all devices are
lossless and detectors are perfect.  Levels are truncated to ``0..l_max``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .qudit import ATOL, Basis, PureState

TWO_PI = 2 * np.pi


class ModelLimitError(ValueError):
    """A device was driven outside the parity-routing regime it models."""


@dataclass(frozen=True)
class SourceSpec:
    """Pair source emitting ``sum_l c_l |l, l>``."""

    amplitudes: tuple = (1 / math.sqrt(3),) * 3

    def __post_init__(self):
        amps = tuple(complex(c) for c in self.amplitudes)
        if abs(sum(abs(c) ** 2 for c in amps) - 1) > ATOL:
            raise ValueError("source amplitudes must be normalized")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dimension(self) -> int:
        return len(self.amplitudes)


@dataclass(frozen=True, eq=False)
class CouplerUnitary:
    """``matrix[j, k]``: amplitude for a photon entering input ``k`` to leave port ``j``."""

    matrix: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.matrix, dtype=complex)
        if U.shape != (3, 3):
            raise ValueError("the coupler is a 3x3 matrix")
        if not np.allclose(U.conj().T @ U, np.eye(3), atol=ATOL, rtol=0):
            raise ValueError("coupler matrix is not unitary")
        U = U.copy()
        U.setflags(write=False)
        object.__setattr__(self, "matrix", U)

    @classmethod
    def dft(cls) -> CouplerUnitary:
        j = np.arange(3)
        return cls(np.exp(2j * np.pi * np.outer(j, j) / 3) / math.sqrt(3))

    @classmethod
    def identity(cls) -> CouplerUnitary:
        return cls(np.eye(3))


@dataclass(frozen=True)
class DetectorAssignment:
    """OAM value a detector at each coupler port responds to."""

    levels: tuple = (0, 1, 2)

    def __post_init__(self):
        if len(self.levels) != 3:
            raise ValueError("one level per port")
        if len(set(self.levels)) != 3:
            raise ValueError(f"detector levels must be distinct, got {self.levels}")


def source_state(spec: SourceSpec = SourceSpec()) -> PureState:
    d = spec.dimension
    amps = np.zeros((d, d), dtype=complex)
    for l, c in enumerate(spec.amplitudes):
        amps[l, l] = c
    return PureState((d, d), amps)


@dataclass(frozen=True)
class HeraldResult:
    state: PureState
    success_probability: float
    # unnormalized conditional amplitudes, indexed by the partner photons' levels
    raw: np.ndarray = field(repr=False)


def herald_tripartite(
    coupler: CouplerUnitary = None,
    assign: DetectorAssignment = DetectorAssignment(),
    source: SourceSpec = SourceSpec(),
) -> HeraldResult:
    """State of the three partner photons given one click at every coupler port.

    Photon ``k`` (from source ``k``) keeps its OAM through the coupler, so a
    triple coincidence with port ``j`` demanding ``assign.levels[j]`` fixes
    which port each photon left by.  The partner amplitude for levels
    ``(m_0, m_1, m_2)`` is ``prod_k c_{m_k} U[port(m_k), k]``.
    """
    if coupler is None:
        coupler = CouplerUnitary.dft()
    if not isinstance(coupler, CouplerUnitary):
        coupler = CouplerUnitary(coupler)
    if len(set(assign.levels)) != 3:
        raise ValueError("detector levels must be distinct")
    U = coupler.matrix
    c = source.amplitudes
    d = source.dimension
    port_of = {l: j for j, l in enumerate(assign.levels)}

    raw = np.zeros((d, d, d), dtype=complex)
    for ms in itertools.product(range(d), repeat=3):
        if sorted(ms) != sorted(assign.levels):
            continue
        amp = 1.0 + 0j
        for k, m in enumerate(ms):
            amp *= c[m] * U[port_of[m], k]
        raw[ms] = amp
    p = float(np.sum(np.abs(raw) ** 2))
    if p <= 0:
        raise ValueError("heralding event has zero probability for this coupler")
    state = PureState((d, d, d), raw / math.sqrt(p))
    return HeraldResult(state, p, raw)


def hologram_shift(state: PureState, party: int, delta_l: int, l_max: int | None = None) -> PureState:
    """Relabel ``l -> l + delta_l`` on one party.

    The output keeps the party dimension ``l_max + 1``; an occupied level that
    would leave ``0..l_max`` raises instead of being dropped.
    """
    d = state.party_dims[party]
    if l_max is None:
        l_max = d - 1
    new_d = l_max + 1
    psi = np.moveaxis(state.tensor(), party, 0)
    out = np.zeros((new_d,) + psi.shape[1:], dtype=complex)
    for l in range(d):
        if np.allclose(psi[l], 0, atol=ATOL):
            continue
        target = l + delta_l
        if not 0 <= target <= l_max:
            raise ValueError(f"level {l} shifted by {delta_l} leaves 0..{l_max}")
        out[target] = psi[l]
    dims = list(state.party_dims)
    dims[party] = new_d
    return PureState(tuple(dims), np.moveaxis(out, 0, party), normalized=state.normalized)


# -- Dove-prism sorter --------------------------------------------------------


@dataclass(frozen=True)
class SorterStage:
    """One Mach-Zehnder stage with Dove prisms at relative angle ``half_angle``.

    The arms differ in phase by ``l * alpha`` with ``alpha = 2 * half_angle``,
    after the incoming photon is shifted by ``delta_l``.  The stage acts on
    photons arriving at ``port`` (a string of 'e'/'o' marks from earlier stages;
    "" is the sorter input).
    """

    half_angle: float
    delta_l: int = 0
    port: str = ""

    def __post_init__(self):
        if not 0 < self.half_angle <= np.pi + 1e-12:
            raise ValueError("half_angle must lie in (0, pi]")
        if int(self.delta_l) != self.delta_l:
            raise ValueError("delta_l must be an integer")

    @property
    def alpha(self) -> float:
        return 2 * self.half_angle

    def route(self, l: int) -> tuple[str, int]:
        """Exit mark ('e' or 'o') and OAM value after the stage."""
        l = l + self.delta_l
        theta = (l * self.alpha) % TWO_PI
        if min(theta, TWO_PI - theta) < 1e-9:
            return "e", l
        if abs(theta - np.pi) < 1e-9:
            return "o", l
        raise ModelLimitError(
            f"l={l} picks up phase {theta:.4f} at alpha={self.alpha:.4f}; only 0 or pi route cleanly"
        )


def three_level_cascade() -> tuple[SorterStage, ...]:
    """Two stages resolving l = 0, 1, 2: parity first, then l=0 vs l=2 on the even port."""
    return (SorterStage(np.pi / 2), SorterStage(np.pi / 4, port="e"))


def _walk(l: int, stages) -> tuple[str, int]:
    by_port = {s.port: s for s in stages}
    if len(by_port) != len(stages):
        raise ValueError("two sorter stages attached to the same port")
    path = ""
    while path in by_port:
        mark, l = by_port[path].route(l)
        path += mark
    return path, l


def port_map(stages, levels) -> dict:
    """Exit port of each OAM eigenstate."""
    return {l: _walk(l, stages)[0] for l in levels}


@dataclass(frozen=True)
class SorterResult:
    probabilities: dict
    amplitudes: dict

    def ports(self) -> list[str]:
        return sorted(self.probabilities)


def sorter_route(amplitudes, stages=None) -> SorterResult:
    """Split a single-photon OAM superposition across the cascade's output ports.

    ``amplitudes[l]`` is the amplitude on OAM value ``l``.  Each port receives
    the coherent part of the input whose levels route there.
    """
    if stages is None:
        stages = three_level_cascade()
    amps = np.asarray(amplitudes, dtype=complex)
    probs, parts = {}, {}
    for l, a in enumerate(amps):
        if abs(a) < ATOL:
            continue
        port = _walk(l, stages)[0]
        parts.setdefault(port, np.zeros_like(amps))[l] = a
    total = float(np.sum(np.abs(amps) ** 2))
    for port, v in parts.items():
        probs[port] = float(np.sum(np.abs(v) ** 2)) / total
    return SorterResult(probs, parts)


def sorter_basis(stages=None, d: int = 3) -> Basis:
    """Computational measurement realized by the cascade: outcome ``l`` is the port ``l`` exits."""
    if stages is None:
        stages = three_level_cascade()
    ports = port_map(stages, range(d))
    if len(set(ports.values())) != d:
        raise ModelLimitError(f"cascade does not separate all {d} levels: {ports}")
    vecs = np.zeros((d, d), dtype=complex)
    for l, port in ports.items():
        vecs[l] = sorter_route(np.eye(d)[l], stages).amplitudes[port]
    return Basis("sorter", vecs)


def _three_port_matrix() -> np.ndarray:
    """Balanced three-path interferometer; path ``l`` enters input ``l``."""
    k = np.arange(3)
    return np.exp(-2j * np.pi * np.outer(k, k) / 3) / math.sqrt(3)


def three_port_amplitudes(amplitudes, stages=None) -> np.ndarray:
    """Output-port amplitudes of sorter -> flattening holograms -> three-port interferometer."""
    if stages is None:
        stages = three_level_cascade()
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.shape != (3,):
        raise ValueError("the three-port readout takes a three-level photon")
    ports = port_map(stages, range(3))
    # after sorting, a hologram on each port brings every path to the same l;
    # the path index then carries the former level
    paths = np.zeros(3, dtype=complex)
    for l in range(3):
        part = sorter_route(np.eye(3)[l], stages).amplitudes[ports[l]]
        paths[l] = amps[l] * part[l]
    return _three_port_matrix() @ paths


def fourier_three_port(amplitudes, stages=None) -> np.ndarray:
    """Port probabilities; port ``m`` fires with probability ``|<u_m|psi>|^2``."""
    out = np.abs(three_port_amplitudes(amplitudes, stages)) ** 2
    return out / out.sum()


def three_port_basis(stages=None) -> Basis:
    """The measurement vectors the sorter + interferometer chain implements."""
    M = np.array([three_port_amplitudes(np.eye(3)[l], stages) for l in range(3)]).T
    return Basis("three-port", M.conj())


@dataclass(frozen=True)
class OpticalSetup:
    source: SourceSpec = SourceSpec()
    coupler: CouplerUnitary = field(default_factory=CouplerUnitary.dft)
    assignment: DetectorAssignment = DetectorAssignment()
    stages: tuple = field(default_factory=three_level_cascade)

    def to_dict(self) -> dict:
        return {
            "source": [[c.real, c.imag] for c in self.source.amplitudes],
            "coupler": [[[z.real, z.imag] for z in row] for row in self.coupler.matrix.tolist()],
            "detectors": list(self.assignment.levels),
            "stages": [[s.delta_l, s.half_angle * 2, s.port] for s in self.stages],
        }

    @classmethod
    def from_dict(cls, data: dict) -> OpticalSetup:
        kw = {}
        if "source" in data:
            kw["source"] = SourceSpec(tuple(complex(re, im) for re, im in data["source"]))
        if "coupler" in data:
            kw["coupler"] = CouplerUnitary(
                np.array([[complex(re, im) for re, im in row] for row in data["coupler"]])
            )
        if "detectors" in data:
            kw["assignment"] = DetectorAssignment(tuple(int(l) for l in data["detectors"]))
        if "stages" in data:
            stages = []
            for st in data["stages"]:
                dl, alpha = int(st[0]), float(st[1])
                port = st[2] if len(st) > 2 else ""
                stages.append(SorterStage(alpha / 2, dl, port))
            kw["stages"] = tuple(stages)
        return cls(**kw)
