"""Finite-dimensional system states, evolution chains and weak values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegeneratePostselectionError
from .partitions import MomentFunctional, cumulant, is_independent

POSTSELECTION_THRESHOLD = 1e-8


def _as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class SystemState:
    """Normalized pure state of the measured system."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"system state must be normalized, |psi| = {norm!r}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def normalized(cls, vector) -> "SystemState":
        v = np.asarray(vector, dtype=complex).reshape(-1)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def basis(cls, d: int, index: int) -> "SystemState":
        v = np.zeros(d, dtype=complex)
        v[index] = 1.0
        return cls(v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian system observable."""

    matrix: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.matrix)
        if np.max(np.abs(a - a.conj().T)) > 1e-12:
            raise ValueError("observable matrix is not Hermitian")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @classmethod
    def projector(cls, vector) -> "Observable":
        v = np.asarray(vector, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """Unitary evolution between couplings."""

    matrix: np.ndarray

    def __post_init__(self):
        u = _as_matrix(self.matrix)
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
            raise ValueError("matrix is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @classmethod
    def identity(cls, d: int) -> "UnitaryOp":
        return cls(np.eye(d, dtype=complex))

    def is_identity(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, np.eye(self.matrix.shape[0]), atol=atol, rtol=0))


@dataclass(frozen=True, eq=False)
class EvolutionChain:
    """``psi_i -> U_1 -> A_1 -> U_2 -> ... -> A_n -> U_{n+1} -> <psi_f|``.

    Observables are labeled 1..n in the order they act.
    """

    psi_i: SystemState
    psi_f: SystemState
    unitaries: tuple[UnitaryOp, ...]
    observables: tuple[Observable, ...]
    threshold: float = POSTSELECTION_THRESHOLD
    amplitude: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "unitaries", tuple(self.unitaries))
        object.__setattr__(self, "observables", tuple(self.observables))
        if len(self.unitaries) != len(self.observables) + 1:
            raise ValueError("a chain with n observables needs n+1 unitaries")
        d = self.psi_i.dim
        dims = {self.psi_f.dim, *(u.matrix.shape[0] for u in self.unitaries),
                *(a.dim for a in self.observables)}
        if dims != {d}:
            raise ValueError(f"inconsistent system dimensions {sorted(dims | {d})}")
        amp = self.product_amplitude({})
        object.__setattr__(self, "amplitude", amp)
        if abs(amp) <= self.threshold:
            raise DegeneratePostselectionError(abs(amp), self.threshold)

    @property
    def n(self) -> int:
        return len(self.observables)

    @property
    def dim(self) -> int:
        return self.psi_i.dim

    def product_amplitude(self, inserts: Mapping[int, np.ndarray]) -> complex:
        """``<psi_f| U_{n+1} X_n U_n ... X_1 U_1 |psi_i>`` with ``X_k = inserts.get(k, I)``."""
        v = self.unitaries[0].matrix @ self.psi_i.amplitudes
        for k in range(1, len(self.unitaries)):
            if k in inserts:
                v = inserts[k] @ v
            v = self.unitaries[k].matrix @ v
        return complex(np.vdot(self.psi_f.amplitudes, v))

    def operator_weak_value(self, inserts: Mapping[int, np.ndarray]) -> complex:
        """Ratio of ``product_amplitude(inserts)`` to the uninterrupted amplitude."""
        return self.product_amplitude(inserts) / self.amplitude


def _check_subset(chain: EvolutionChain, subset: Iterable[int]) -> tuple[int, ...]:
    s = tuple(subset)
    if len(set(s)) != len(s) or any(not 1 <= k <= chain.n for k in s):
        raise ValueError(f"subset {s} is not a subset of 1..{chain.n}")
    return tuple(sorted(s))


def weak_value(A: Observable, psi_i: SystemState, psi_f: SystemState,
               threshold: float = POSTSELECTION_THRESHOLD) -> complex:
    """``<psi_f|A|psi_i> / <psi_f|psi_i>``."""
    overlap = complex(np.vdot(psi_f.amplitudes, psi_i.amplitudes))
    if abs(overlap) <= threshold:
        raise DegeneratePostselectionError(abs(overlap), threshold)
    return complex(np.vdot(psi_f.amplitudes, A.matrix @ psi_i.amplitudes)) / overlap


def sequential_weak_value(chain: EvolutionChain, subset: Iterable[int]) -> complex:
    """Sequential weak value with ``A_k`` inserted for every ``k`` in ``subset``.

    Later observables act to the left of earlier ones.
    """
    s = _check_subset(chain, subset)
    return chain.operator_weak_value({k: chain.observables[k - 1].matrix for k in s})


def power_weak_value(chain: EvolutionChain, powers: Mapping[int, int]) -> complex:
    """Sequential weak value of ``(A_n^{i_n}, ..., A_1^{i_1})``; zero powers are identities."""
    inserts = {k: np.linalg.matrix_power(chain.observables[k - 1].matrix, p)
               for k, p in powers.items() if p}
    _check_subset(chain, inserts)
    return chain.operator_weak_value(inserts)


def _rank_one_vector(A: Observable, tol: float = 1e-10) -> np.ndarray:
    m = A.matrix
    w, v = np.linalg.eigh(m)
    if not (np.max(np.abs(m @ m - m)) <= tol and abs(np.trace(m).real - 1) <= tol):
        raise ValueError("observable is not a rank-1 projector")
    return v[:, np.argmax(w)]


def path_amplitude_ratio(chain: EvolutionChain) -> complex:
    """Amplitude of the projector path divided by the sum over all basis paths.

    Every observable must be a rank-1 projector ``|x_k><x_k|``. The
    denominator enumerates every computational-basis path explicitly.
    """
    xs = [_rank_one_vector(A) for A in chain.observables]
    U = [u.matrix for u in chain.unitaries]
    psi_i, psi_f = chain.psi_i.amplitudes, chain.psi_f.amplitudes

    def amplitude(path_vectors):
        if not path_vectors:
            return complex(np.vdot(psi_f, U[0] @ psi_i))
        amp = np.vdot(path_vectors[0], U[0] @ psi_i)
        for k in range(1, len(path_vectors)):
            amp *= np.vdot(path_vectors[k], U[k] @ path_vectors[k - 1])
        amp *= np.vdot(psi_f, U[-1] @ path_vectors[-1])
        return complex(amp)

    basis = np.eye(chain.dim, dtype=complex)
    total = sum(amplitude([basis[y] for y in ys]) for ys in product(range(chain.dim), repeat=chain.n))
    if abs(total) <= chain.threshold:
        raise DegeneratePostselectionError(abs(total), chain.threshold)
    return amplitude(xs) / total


def simultaneous_weak_value(chain: EvolutionChain, subset: Iterable[int]) -> complex:
    """Average of the sequential weak value over all orderings of the inserted observables.

    Evolution unitaries stay at their chain positions; only the assignment of
    observables to the occupied slots is permuted.
    """
    s = _check_subset(chain, subset)
    if len(s) > 8:
        raise ValueError("simultaneous weak value limited to 8 observables")
    mats = [chain.observables[k - 1].matrix for k in s]
    total = 0j
    for perm in permutations(range(len(s))):
        total += chain.operator_weak_value({slot: mats[p] for slot, p in zip(s, perm)})
    return total / math.factorial(len(s))


def weak_value_functional(chain: EvolutionChain, mode: str = "sequential") -> MomentFunctional:
    """Subset -> arrow-ordered weak value, as a moment functional."""
    if mode == "sequential":
        fn = sequential_weak_value
    elif mode == "simultaneous":
        fn = simultaneous_weak_value
    else:
        raise ValueError(f"unknown weak value mode {mode!r}")
    return MomentFunctional(chain.n, lambda s: fn(chain, s))


def weak_value_cumulant(chain: EvolutionChain, mode: str = "sequential") -> complex:
    """``(A_n, ..., A_1)^c_w`` (or its simultaneous counterpart)."""
    return cumulant(weak_value_functional(chain, mode))


def is_weakly_independent(chain: EvolutionChain, s1: Sequence[int], s2: Sequence[int],
                          tol: float = 1e-10) -> bool:
    """Factorization of all sequential weak values across ``s1 | s2``."""
    return is_independent(weak_value_functional(chain), s1, s2, tol)
