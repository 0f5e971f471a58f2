"""Exact finite-dimensional qudit algebra.

States are stored as dense numpy arrays with party 0 as the slowest-varying
index.  Everything here is immutable after construction and every random
operation takes an explicit seed or ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ATOL = 1e-10
PSD_TOL = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


def _as_rng(rng) -> np.random.Generator:
    return np.random.default_rng(rng)


@dataclass(frozen=True, eq=False)
class PureState:
    """State vector over parties with dimensions ``party_dims``."""

    party_dims: tuple[int, ...]
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        dims = tuple(int(d) for d in self.party_dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"party dimensions must be positive, got {dims}")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != math.prod(dims):
            raise ValueError(
                f"expected {math.prod(dims)} amplitudes for dims {dims}, got {amps.size}"
            )
        if self.normalized and abs(np.vdot(amps, amps).real - 1.0) > ATOL:
            raise ValueError("state flagged normalized but has norm^2 %.3g" % np.vdot(amps, amps).real)
        object.__setattr__(self, "party_dims", dims)
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def n_parties(self) -> int:
        return len(self.party_dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per party."""
        return self.amplitudes.reshape(self.party_dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> PureState:
        n = self.norm()
        if n < ATOL:
            raise ValueError("cannot normalize the zero vector")
        return PureState(self.party_dims, self.amplitudes / n)

    def amplitude(self, levels: Sequence[int]) -> complex:
        return complex(self.tensor()[tuple(levels)])

    def density_matrix(self) -> MixedState:
        return MixedState(self.party_dims, np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self):
        return f"PureState(party_dims={self.party_dims}, nonzero={np.count_nonzero(np.abs(self.amplitudes) > ATOL)})"


@dataclass(frozen=True, eq=False)
class MixedState:
    party_dims: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.party_dims)
        n = math.prod(dims)
        rho = np.asarray(self.matrix, dtype=complex)
        if rho.shape != (n, n):
            raise ValueError(f"density matrix must be {n}x{n}, got {rho.shape}")
        if not np.allclose(rho, rho.conj().T, atol=ATOL, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > ATOL:
            raise ValueError("density matrix trace is %.12g, expected 1" % np.trace(rho).real)
        if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "party_dims", dims)
        object.__setattr__(self, "matrix", _frozen(rho))

    @property
    def n_parties(self) -> int:
        return len(self.party_dims)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def rank(self, tol: float = 1e-9) -> int:
        return int(np.sum(np.linalg.eigvalsh(self.matrix) > tol))


@dataclass(frozen=True, eq=False)
class Basis:
    """Orthonormal measurement frame; ``vectors[m]`` is outcome ``m``."""

    label: str
    vectors: np.ndarray

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=complex)
        if vecs.ndim != 2 or vecs.shape[0] != vecs.shape[1]:
            raise ValueError("a basis needs dim vectors of length dim")
        if not np.allclose(vecs.conj() @ vecs.T, np.eye(len(vecs)), atol=ATOL, rtol=0):
            raise ValueError(f"basis {self.label!r} is not orthonormal")
        object.__setattr__(self, "vectors", _frozen(vecs))

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def __len__(self):
        return self.dim

    def __getitem__(self, m: int) -> np.ndarray:
        return self.vectors[m]


@dataclass(frozen=True, eq=False)
class SubspaceMeasurement:
    """Projective measurement onto a few orthonormal vectors plus a no-click complement.

    Outcome ``i`` (labelled ``labels[i]``) is a click on ``vectors[i]``; the
    projector onto the orthogonal complement of their span is the no-click
    outcome.
    """

    dim: int
    vectors: np.ndarray
    labels: tuple = field(default=None)

    def __post_init__(self):
        vecs = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        if vecs.shape[1] != self.dim:
            raise ValueError(f"subspace vectors must have length {self.dim}")
        if len(vecs) >= self.dim:
            raise ValueError("a subspace measurement needs fewer vectors than the dimension")
        if not np.allclose(vecs.conj() @ vecs.T, np.eye(len(vecs)), atol=ATOL, rtol=0):
            raise ValueError("subspace vectors are not orthonormal")
        labels = tuple(range(len(vecs))) if self.labels is None else tuple(self.labels)
        if len(labels) != len(vecs):
            raise ValueError("one label per subspace vector")
        object.__setattr__(self, "vectors", _frozen(vecs))
        object.__setattr__(self, "labels", labels)

    def projectors(self) -> list[np.ndarray]:
        """Click projectors followed by the no-click complement."""
        clicks = [np.outer(v, v.conj()) for v in self.vectors]
        return clicks + [np.eye(self.dim) - sum(clicks)]


# -- construction -----------------------------------------------------------


def ket(levels: Sequence[int], dims: Sequence[int] | int = 3) -> PureState:
    """Computational basis ket ``|levels[0], levels[1], ...>``."""
    levels = tuple(levels)
    if isinstance(dims, int):
        dims = (dims,) * len(levels)
    dims = tuple(dims)
    if len(dims) != len(levels) or any(not 0 <= l < d for l, d in zip(levels, dims)):
        raise ValueError(f"levels {levels} do not fit dims {dims}")
    amps = np.zeros(dims, dtype=complex)
    amps[levels] = 1.0
    return PureState(dims, amps)


def from_terms(terms: dict, dims: Sequence[int]) -> PureState:
    """Normalized state from ``{levels: amplitude}``."""
    amps = np.zeros(tuple(dims), dtype=complex)
    for levels, c in terms.items():
        amps[tuple(levels)] += c
    return PureState(tuple(dims), amps, normalized=False).normalize()


def tensor(states: Sequence[PureState]) -> PureState:
    states = list(states)
    if not states:
        raise ValueError("tensor() needs at least one state")
    for s in states:
        if not s.normalized:
            raise ValueError("tensor() inputs must be normalized")
    amps = states[0].amplitudes
    dims = states[0].party_dims
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
        dims = dims + s.party_dims
    return PureState(dims, amps)


def partial_trace(state: PureState | MixedState, keep) -> MixedState:
    """Reduced density matrix on the parties in ``keep`` (kept in ascending order)."""
    dims = state.party_dims
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep must name at least one party")
    if any(not 0 <= k < len(dims) for k in keep):
        raise ValueError(f"party index out of range for {len(dims)} parties: {keep}")
    drop = [k for k in range(len(dims)) if k not in keep]
    kdim = math.prod(dims[k] for k in keep)

    if isinstance(state, PureState):
        psi = np.moveaxis(state.tensor(), keep, range(len(keep))).reshape(kdim, -1)
        rho = psi @ psi.conj().T
    else:
        n = len(dims)
        rho = state.matrix.reshape(dims + dims)
        # contract each dropped ket axis with its bra axis
        letters = "abcdefghijklmnopqrstuvwxyz"
        ket_ix = list(letters[:n])
        bra_ix = list(letters[n : 2 * n])
        for k in drop:
            bra_ix[k] = ket_ix[k]
        out = "".join(ket_ix[k] for k in keep) + "".join(bra_ix[k] for k in keep)
        rho = np.einsum("".join(ket_ix) + "".join(bra_ix) + "->" + out, rho).reshape(kdim, kdim)
    return MixedState(tuple(dims[k] for k in keep), rho)


def computational_basis(d: int) -> Basis:
    if d < 1:
        raise ValueError("dimension must be positive")
    return Basis("computational", np.eye(d, dtype=complex))


def fourier_basis(d: int) -> Basis:
    """Vector ``m`` has components ``w^(m k) / sqrt(d)`` with ``w = exp(2 pi i / d)``.

    At ``d = 3`` the vectors are (1,1,1), (1,w,w^2), (1,w^2,w) over sqrt(3).
    """
    if d < 2:
        raise ValueError(f"Fourier basis needs d >= 2, got {d}")
    k = np.arange(d)
    vecs = np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)
    return Basis("fourier", vecs)


# -- probabilities and measurement -----------------------------------------


def _apply_local(psi: np.ndarray, party: int, op: np.ndarray) -> np.ndarray:
    """Apply a matrix to one axis of a state tensor."""
    return np.moveaxis(np.tensordot(op, psi, axes=([1], [party])), 0, party)


def born_probabilities(state: PureState | MixedState, per_party_basis: Sequence[Basis]) -> np.ndarray:
    """Joint outcome distribution, indexed ``table[m_0, m_1, ...]``."""
    dims = state.party_dims
    if len(per_party_basis) != len(dims):
        raise ValueError(f"need one basis per party ({len(dims)}), got {len(per_party_basis)}")
    for d, b in zip(dims, per_party_basis):
        if b.dim != d:
            raise ValueError(f"basis {b.label!r} has dim {b.dim}, party has dim {d}")
    if isinstance(state, PureState):
        psi = state.tensor()
        for k, b in enumerate(per_party_basis):
            psi = _apply_local(psi, k, b.vectors.conj())
        table = np.abs(psi) ** 2
    else:
        w = per_party_basis[0].vectors.conj()
        for b in per_party_basis[1:]:
            w = np.kron(w, b.vectors.conj())
        table = np.einsum("ij,jk,ik->i", w, state.matrix, w.conj()).real.reshape(dims)
    return np.clip(table, 0.0, None)


def _sample(probs: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(i, len(probs) - 1)


def measure_party(state: PureState, party: int, basis: Basis, rng=None) -> tuple[int, PureState]:
    """Projective measurement of one party; returns the outcome and collapsed state."""
    if not 0 <= party < state.n_parties:
        raise ValueError(f"no party {party}")
    if basis.dim != state.party_dims[party]:
        raise ValueError(f"basis dim {basis.dim} != party dim {state.party_dims[party]}")
    rng = _as_rng(rng)
    psi = state.tensor()
    # component along each basis vector: shape (dim, rest...)
    comps = np.tensordot(basis.vectors.conj(), psi, axes=([1], [party]))
    probs = np.sum(np.abs(comps.reshape(basis.dim, -1)) ** 2, axis=1)
    m = _sample(probs, rng)
    if probs[m] < 1e-14:
        raise FloatingPointError("sampled a zero-probability outcome")
    post = np.multiply.outer(basis.vectors[m], comps[m]) / np.sqrt(probs[m])
    post = np.moveaxis(post, 0, party)
    return m, PureState(state.party_dims, post)


def measure(state: PureState, per_party_basis: Sequence[Basis], rng=None) -> tuple[tuple[int, ...], PureState]:
    """Measure every party in turn (party 0 first) and return the joint outcome."""
    if not state.normalized:
        raise ValueError("measure() needs a normalized state")
    if len(per_party_basis) != state.n_parties:
        raise ValueError("need one basis per party")
    rng = _as_rng(rng)
    outcome = []
    for k, b in enumerate(per_party_basis):
        m, state = measure_party(state, k, b, rng)
        outcome.append(m)
    return tuple(outcome), state


def subspace_probabilities(state: PureState | MixedState, party: int, meas: SubspaceMeasurement) -> np.ndarray:
    """Probabilities of each click outcome followed by the no-click probability."""
    if meas.dim != state.party_dims[party]:
        raise ValueError(f"measurement dim {meas.dim} != party dim {state.party_dims[party]}")
    probs = []
    for P in meas.projectors():
        if isinstance(state, PureState):
            v = _apply_local(state.tensor(), party, P)
            probs.append(float(np.vdot(v, v).real))
        else:
            full = _embed(P, party, state.party_dims)
            probs.append(float(np.trace(full @ state.matrix).real))
    return np.clip(np.array(probs), 0.0, None)


def _embed(op: np.ndarray, party: int, dims: Sequence[int]) -> np.ndarray:
    out = np.eye(1)
    for k, d in enumerate(dims):
        out = np.kron(out, op if k == party else np.eye(d))
    return out


def subspace_measure(state: PureState | MixedState, party: int, meas: SubspaceMeasurement, rng=None):
    """Sample a click or no-click on one party.

    Returns ``(click, label, post_state)``; ``label`` is None on no-click and
    the post state is the renormalized projection in either case.
    """
    rng = _as_rng(rng)
    probs = subspace_probabilities(state, party, meas)
    i = _sample(probs, rng)
    if probs[i] < 1e-14:
        raise FloatingPointError("sampled a zero-probability outcome")
    P = meas.projectors()[i]
    if isinstance(state, PureState):
        v = _apply_local(state.tensor(), party, P) / np.sqrt(probs[i])
        post = PureState(state.party_dims, v)
    else:
        full = _embed(P, party, state.party_dims)
        rho = full @ state.matrix @ full / probs[i]
        post = MixedState(state.party_dims, (rho + rho.conj().T) / 2)
    if i == len(meas.vectors):
        return False, None, post
    return True, meas.labels[i], post


# -- equivalence tests ------------------------------------------------------


def global_phase(x: PureState, y: PureState, tol: float = ATOL) -> complex | None:
    """Phase ``c`` with ``y = c x`` if one exists, else None."""
    if x.party_dims != y.party_dims:
        return None
    i = int(np.argmax(np.abs(x.amplitudes)))
    if abs(x.amplitudes[i]) < tol:
        return 1.0 + 0j if np.allclose(y.amplitudes, 0, atol=tol) else None
    c = y.amplitudes[i] / x.amplitudes[i]
    if abs(abs(c) - 1) > tol:
        return None
    if not np.allclose(c * x.amplitudes, y.amplitudes, atol=tol, rtol=0):
        return None
    return complex(c)


def equal_up_to_global_phase(x: PureState, y: PureState, tol: float = ATOL) -> bool:
    return global_phase(x, y, tol) is not None


def apply_local_phases(state: PureState, phases: Sequence[np.ndarray]) -> PureState:
    """Multiply level ``m`` of party ``k`` by ``phases[k][m]``."""
    psi = state.tensor()
    for k, p in enumerate(phases):
        shape = [1] * state.n_parties
        shape[k] = -1
        psi = psi * np.asarray(p).reshape(shape)
    return PureState(state.party_dims, psi, normalized=state.normalized)


def equal_up_to_local_diagonal_phases(x: PureState, y: PureState, tol: float = ATOL):
    """Search for per-party diagonal unitaries ``D_k`` with ``(D_0 x ... x D_n) x = y``.

    Returns ``(True, phases)`` where ``phases[k][m]`` is the factor applied to
    level ``m`` of party ``k``, or ``(False, None)``.  The witness is gauge
    fixed so that every party but the first has phase 1 on the level of the
    largest amplitude; levels outside the support get phase 1.
    """
    if x.party_dims != y.party_dims:
        return False, None
    ax, ay = x.tensor(), y.tensor()
    if not np.allclose(np.abs(ax), np.abs(ay), atol=tol, rtol=0):
        return False, None
    support = np.argwhere(np.abs(ax) > max(tol, 1e-8))
    dims = x.party_dims
    if len(support) == 0:
        return True, [np.ones(d, dtype=complex) for d in dims]

    order = np.argsort(-np.abs(ax[tuple(support.T)]), kind="stable")
    support = support[order]
    anchor = tuple(support[0])

    offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    n_vars = int(offsets[-1])
    rows, rhs = [], []
    for idx in support:
        row = [0] * n_vars
        for k, m in enumerate(idx):
            row[offsets[k] + m] = 1
        rows.append(row)
        rhs.append(float(np.angle(ay[tuple(idx)] / ax[tuple(idx)])))
    # gauge: parties 1.. pinned at the anchor level
    for k in range(1, len(dims)):
        row = [0] * n_vars
        row[offsets[k] + anchor[k]] = 1
        rows.append(row)
        rhs.append(0.0)
    theta = _solve_angles(rows, rhs, n_vars, tol)
    if theta is None:
        return False, None

    phases = [np.exp(1j * theta[offsets[k] : offsets[k + 1]]) for k in range(len(dims))]
    if np.allclose(apply_local_phases(x, phases).amplitudes, y.amplitudes, atol=tol, rtol=0):
        return True, phases
    return False, None


def _wrap(angle: float) -> float:
    return (angle + np.pi) % (2 * np.pi) - np.pi


def _solve_angles(rows: list[list[int]], rhs: list[float], n_vars: int, tol: float):
    """Solve ``rows @ theta = rhs (mod 2 pi)`` for integer ``rows``.

    Integer row reduction keeps the solution set intact; free variables are
    set to zero.  Returns None when the system is inconsistent.
    """
    rows = [list(r) for r in rows]
    rhs = list(rhs)
    m = len(rows)
    pivots = []
    r = 0
    for col in range(n_vars):
        while True:
            nz = [i for i in range(r, m) if rows[i][col] != 0]
            if not nz:
                break
            best = min(nz, key=lambda i: abs(rows[i][col]))
            rows[r], rows[best] = rows[best], rows[r]
            rhs[r], rhs[best] = rhs[best], rhs[r]
            clean = True
            for i in range(r + 1, m):
                if rows[i][col] == 0:
                    continue
                q = rows[i][col] // rows[r][col]
                rows[i] = [a - q * b for a, b in zip(rows[i], rows[r])]
                rhs[i] = _wrap(rhs[i] - q * rhs[r])
                clean = clean and rows[i][col] == 0
            if clean:
                break
        if r < m and rows[r][col] != 0:
            pivots.append((r, col))
            r += 1
    for i in range(r, m):
        if abs(_wrap(rhs[i])) > max(tol, 1e-8) * 10:
            return None
    theta = np.zeros(n_vars)
    for i, col in reversed(pivots):
        t = rhs[i] - sum(rows[i][j] * theta[j] for j in range(col + 1, n_vars) if rows[i][j])
        theta[col] = t / rows[i][col]
    return theta
