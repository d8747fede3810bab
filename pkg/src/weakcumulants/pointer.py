"""Discretized one-dimensional pointer: grids, wavefunctions, operators, moments.

Units have hbar = 1. Position is diagonal on a uniform periodic grid and
momentum is the spectral derivative ``-i d/dq`` realized with the DFT.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SingularEtaError

SERIES_ORDER_CAP = 4


@dataclass(frozen=True)
class PointerGrid:
    """Uniform grid ``q_j = q_min + j * spacing``, ``j = 0..m_points-1``."""

    q_min: float = -12.0
    q_max: float = 12.0
    m_points: int = 256

    def __post_init__(self):
        m = self.m_points
        if not (isinstance(m, (int, np.integer)) and 32 <= m <= 1024 and m & (m - 1) == 0):
            raise ValueError(f"m_points must be a power of two in 32..1024, got {m!r}")
        if not self.q_max > self.q_min:
            raise ValueError("q_max must exceed q_min")

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / self.m_points

    @property
    def q(self) -> np.ndarray:
        return self.q_min + self.spacing * np.arange(self.m_points)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in numpy FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.m_points, d=self.spacing)


DEFAULT_GRID = PointerGrid()


class PointerObservable:
    """Pointer operator: position ``Q``, momentum ``P``, or an explicit matrix.

    ``Q`` and ``P`` are symbolic and resolved against a grid on use.
    """

    __slots__ = ("kind", "matrix", "label")

    def __init__(self, kind: str, matrix=None, label: str | None = None):
        if kind not in ("q", "p", "matrix"):
            raise ValueError(f"unknown pointer observable kind {kind!r}")
        if kind == "matrix":
            matrix = np.array(matrix, dtype=complex)
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise ValueError("pointer observable matrix must be square")
            if np.max(np.abs(matrix - matrix.conj().T)) > 1e-12:
                raise ValueError("pointer observable matrix is not Hermitian")
            matrix.setflags(write=False)
        elif matrix is not None:
            raise ValueError("only the matrix kind carries a matrix")
        self.kind = kind
        self.matrix = matrix
        self.label = label or kind

    def __repr__(self):
        return f"PointerObservable({self.label!r})"

    def __eq__(self, other):
        if not isinstance(other, PointerObservable):
            return NotImplemented
        if other.kind != self.kind:
            return False
        return self.kind != "matrix" or np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.kind, self.label))


Q = PointerObservable("q")
P = PointerObservable("p")


def parse_observable(spec) -> PointerObservable:
    if isinstance(spec, PointerObservable):
        return spec
    if spec in ("q", "Q"):
        return Q
    if spec in ("p", "P"):
        return P
    raise ValueError(f"cannot interpret {spec!r} as a pointer observable")


@lru_cache(maxsize=64)
def _dense_operator(kind: str, grid: PointerGrid) -> np.ndarray:
    if kind == "q":
        op = np.diag(grid.q).astype(complex)
    else:
        eye = np.eye(grid.m_points)
        op = np.fft.ifft(grid.k[:, None] * np.fft.fft(eye, axis=0), axis=0)
        op = 0.5 * (op + op.conj().T)
    op.setflags(write=False)
    return op


def make_operator(obs: PointerObservable, grid: PointerGrid) -> np.ndarray:
    """Dense ``m x m`` matrix of ``obs`` on ``grid``."""
    obs = parse_observable(obs)
    if obs.kind == "matrix":
        if obs.matrix.shape[0] != grid.m_points:
            raise ValueError("matrix observable does not match the grid size")
        return obs.matrix
    return _dense_operator(obs.kind, grid)


def apply_operator(op, grid: PointerGrid, samples: np.ndarray, axis: int = -1) -> np.ndarray:
    """Apply a pointer operator along one axis of a sample array.

    ``op`` may be a ``PointerObservable`` or any ``m x m`` array (e.g. a
    non-Hermitian lowering operator).
    """
    samples = np.asarray(samples, dtype=complex)
    if isinstance(op, (PointerObservable, str)):
        op = parse_observable(op)
        shape = [1] * samples.ndim
        shape[axis] = grid.m_points
        if op.kind == "q":
            return samples * grid.q.reshape(shape)
        if op.kind == "p":
            return np.fft.ifft(grid.k.reshape(shape) * np.fft.fft(samples, axis=axis), axis=axis)
        op = op.matrix
    op = np.asarray(op, dtype=complex)
    if op.shape != (grid.m_points, grid.m_points):
        raise ValueError("operator does not match the grid size")
    moved = np.moveaxis(samples, axis, 0)
    out = np.tensordot(op, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


class PointerWavefunction:
    """Normalized pointer wavefunction sampled on a ``PointerGrid``."""

    def __init__(self, grid: PointerGrid, samples, check_decay: bool = True):
        samples = np.array(samples, dtype=complex).reshape(-1)
        if samples.shape[0] != grid.m_points:
            raise ValueError("sample count does not match the grid")
        norm2 = float(np.sum(np.abs(samples) ** 2) * grid.spacing)
        if abs(norm2 - 1.0) > 1e-10:
            raise ValueError(f"wavefunction not normalized: sum |phi|^2 dq = {norm2!r}")
        if check_decay:
            peak = np.max(np.abs(samples))
            edge = max(abs(samples[0]), abs(samples[-1]))
            if edge > 1e-6 * peak:
                raise ValueError("wavefunction does not decay at the grid edges")
        samples.setflags(write=False)
        self.grid = grid
        self.samples = samples

    @classmethod
    def from_samples(cls, grid: PointerGrid, samples, **kw) -> "PointerWavefunction":
        samples = np.asarray(samples, dtype=complex)
        norm = math.sqrt(float(np.sum(np.abs(samples) ** 2) * grid.spacing))
        if norm == 0:
            raise ValueError("cannot normalize a zero wavefunction")
        return cls(grid, samples / norm, **kw)

    @classmethod
    def from_function(cls, grid: PointerGrid, fn, **kw) -> "PointerWavefunction":
        return cls.from_samples(grid, fn(grid.q), **kw)

    def inner(self, left: np.ndarray, right: np.ndarray) -> complex:
        return complex(np.vdot(left, right) * self.grid.spacing)

    def __repr__(self):
        return f"PointerWavefunction(m_points={self.grid.m_points})"


# ---- CSV import / export -------------------------------------------------

_HEADER = re.compile(r"#\s*grid\s+q_min=(\S+)\s+q_max=(\S+)\s+m_points=(\d+)")


def save_wavefunction_csv(phi: PointerWavefunction, path) -> None:
    """Write ``phi`` as CSV: a ``# grid`` header line, then ``q,re,im`` rows."""
    g = phi.grid
    with open(path, "w", newline="") as fh:
        fh.write(f"# grid q_min={g.q_min!r} q_max={g.q_max!r} m_points={g.m_points}\n")
        w = csv.writer(fh)
        w.writerow(["q", "re", "im"])
        for qv, z in zip(g.q, phi.samples):
            w.writerow([repr(float(qv)), repr(float(z.real)), repr(float(z.imag))])


def load_wavefunction_csv(path, normalize: bool = False) -> PointerWavefunction:
    text = Path(path).read_text().splitlines()
    if not text:
        raise ValueError(f"{path}: empty wavefunction file")
    match = _HEADER.match(text[0])
    if not match:
        raise ValueError(f"{path}: first line must be '# grid q_min=.. q_max=.. m_points=..'")
    grid = PointerGrid(float(match[1]), float(match[2]), int(match[3]))
    rows = list(csv.DictReader(text[1:]))
    if len(rows) != grid.m_points:
        raise ValueError(f"{path}: expected {grid.m_points} rows, found {len(rows)}")
    q = np.array([float(r["q"]) for r in rows])
    if np.max(np.abs(q - grid.q)) > 1e-9 * max(1.0, abs(grid.q_min), abs(grid.q_max)):
        raise ValueError(f"{path}: q column does not match the grid header")
    z = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
    if normalize:
        return PointerWavefunction.from_samples(grid, z)
    return PointerWavefunction(grid, z)


# ---- moments and derived constants ----------------------------------------

def _resolve(phi: PointerWavefunction, op):
    if isinstance(op, PointerObservable) and op.kind == "matrix":
        if op.matrix.shape[0] != phi.grid.m_points:
            raise ValueError("observable grid does not match the wavefunction grid")
    return op


def moment(phi: PointerWavefunction, word: Sequence) -> complex:
    """``<phi| O_1 O_2 ... O_w |phi>`` for a word of pointer operators."""
    if len(word) == 0:
        raise ValueError("moment needs a non-empty operator word")
    v = phi.samples
    for op in reversed(word):
        v = apply_operator(_resolve(phi, op), phi.grid, v)
    return phi.inner(phi.samples, v)


@dataclass(frozen=True)
class MomentSet:
    """``<q>, <p>, <p^2>, <qp>, <qp^2>, <pqp>`` of an initial pointer state."""

    mu: complex
    nu: complex
    zeta: complex
    rho: complex
    sigma: complex
    tau: complex


def moment_set(phi: PointerWavefunction) -> MomentSet:
    return MomentSet(
        mu=moment(phi, [Q]),
        nu=moment(phi, [P]),
        zeta=moment(phi, [P, P]),
        rho=moment(phi, [Q, P]),
        sigma=moment(phi, [Q, P, P]),
        tau=moment(phi, [P, Q, P]),
    )


def xi_factor(pointers: Sequence[tuple]) -> complex:
    """Pointer-dependent prefactor of the cumulant theorem.

    ``pointers`` holds ``(phi, r, s)`` triples: initial wavefunction, readout
    and coupling observable. Returns
    ``2 (-i)^n (prod <r_k s_k> - prod <r_k><s_k>)`` where ``<r s>`` is the
    moment of the ordered (unsymmetrized) product.
    """
    if not pointers:
        raise ValueError("xi_factor needs at least one pointer")
    joint = 1 + 0j
    separate = 1 + 0j
    for phi, r, s in pointers:
        joint *= moment(phi, [r, s])
        separate *= moment(phi, [r]) * moment(phi, [s])
    return 2 * (-1j) ** len(pointers) * (joint - separate)


def eta(phi: PointerWavefunction, s=P) -> complex:
    """``-i conj(xi_p) / conj(xi_q)`` for a single pointer coupled through ``s``."""
    xi_q = xi_factor([(phi, Q, s)])
    xi_p = xi_factor([(phi, P, s)])
    if abs(xi_q) <= 1e-10:
        raise SingularEtaError(f"xi_q = {xi_q!r} vanishes; lowering operator undefined")
    return -1j * np.conj(xi_p) / np.conj(xi_q)


def _theta_sum(pointers: Sequence[tuple], conjugate_leading: bool) -> complex:
    readouts = (Q, P)
    singles = []
    for phi, s in pointers:
        xq = xi_factor([(phi, Q, s)])
        xp = xi_factor([(phi, P, s)])
        if abs(xq) <= 1e-10 or abs(xp) <= 1e-10:
            raise SingularEtaError("single-pointer xi vanishes; theta undefined")
        singles.append((xq, xp))
    denom = 2 * np.prod([np.conj(xp) for _, xp in singles])
    total = 0j
    for bits in product((0, 1), repeat=len(pointers)):
        lead = xi_factor([(phi, readouts[b], s) for (phi, s), b in zip(pointers, bits)])
        if conjugate_leading:
            lead = np.conj(lead)
        other = np.prod([np.conj(single[1 - b]) for single, b in zip(singles, bits)])
        total += (-1) ** sum(bits) * lead * other
    return complex(total / denom)


def theta_factor(pointers: Sequence[tuple]) -> complex:
    """Prefactor of the lowering-operator cumulant theorem.

    ``pointers`` holds ``(phi, s)`` pairs. The sum runs over all ``2^n``
    assignments of position / momentum readouts.
    """
    return _theta_sum(pointers, conjugate_leading=False)


def varpi_factor(pointers: Sequence[tuple]) -> complex:
    """Companion of ``theta_factor`` with the leading xi conjugated; vanishes identically."""
    return _theta_sum(pointers, conjugate_leading=True)


def apply_power(phi: PointerWavefunction, s, power: int) -> np.ndarray:
    """``(-i s)^power phi`` as samples."""
    v = phi.samples
    for _ in range(power):
        v = -1j * apply_operator(_resolve(phi, s), phi.grid, v)
    return v


def uv_coefficients(phi: PointerWavefunction, s, r, l: int, m: int,
                    order_cap: int = SERIES_ORDER_CAP) -> tuple[complex, complex]:
    """Series coefficients ``(u_lm, v_lm)`` of one pointer.

    ``u = <(-is)^m phi | r | (-is)^l phi> / (l! m!)`` and ``v`` is the same
    overlap without ``r``.
    """
    if not (0 <= l <= order_cap and 0 <= m <= order_cap):
        raise ValueError(f"series indices ({l}, {m}) exceed the order cap {order_cap}")
    ket = apply_power(phi, s, l)
    bra = apply_power(phi, s, m)
    scale = 1.0 / (math.factorial(l) * math.factorial(m))
    u = phi.inner(bra, apply_operator(_resolve(phi, r), phi.grid, ket)) * scale
    v = phi.inner(bra, ket) * scale
    return u, v


def uv_tables(phi: PointerWavefunction, s, r, order: int) -> tuple[np.ndarray, np.ndarray]:
    """``(order+1) x (order+1)`` tables of ``u_lm`` and ``v_lm`` (first index ``l``)."""
    if order > SERIES_ORDER_CAP:
        raise ValueError(f"series order {order} exceeds cap {SERIES_ORDER_CAP}")
    powers = [apply_power(phi, s, j) for j in range(order + 1)]
    r_powers = [apply_operator(_resolve(phi, r), phi.grid, v) for v in powers]
    u = np.empty((order + 1, order + 1), dtype=complex)
    v = np.empty_like(u)
    for l in range(order + 1):
        for m in range(order + 1):
            scale = 1.0 / (math.factorial(l) * math.factorial(m))
            u[l, m] = phi.inner(powers[m], r_powers[l]) * scale
            v[l, m] = phi.inner(powers[m], powers[l]) * scale
    return u, v
