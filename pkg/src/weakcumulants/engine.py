"""Measurement simulator: pointer coupling, post-selection and pointer moments.

Three exact evolutions are provided:

* ``run_exact`` - sequential impulsive couplings ``exp(-i g_k s_k A_k)``
  interleaved with the chain unitaries. The coupling is resolved on the
  eigenbasis of ``A_k``, so the post-selected pointer state is kept as a
  sum of product states, ``sum_e C[e] prod_k exp(-i g_k lambda_{e_k} s_k) phi_k``.
  Moments then contract a ``d**kappa`` tensor instead of a grid tensor.
* ``run_simultaneous_exact`` - one joint exponential of ``sum_k g_k s_k A_k``.
* ``run_trotter_simultaneous`` - ``N`` alternating small couplings of two pointers.

The last two work in the eigenbasis of the pointer coupling operators, where
each pointer factor is diagonal and the system part is a small batched matrix.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import DegeneratePostselectionError, SizeError
from .partitions import MomentFunctional, all_subsets, covariance, cumulant
from .pointer import (PointerGrid, PointerObservable, PointerWavefunction, apply_operator,
                      make_operator, parse_observable, uv_tables)
from .quantum import EvolutionChain, power_weak_value

MEMORY_BUDGET = 2 ** 26
NORM2_FLOOR = 1e-16


@dataclass(frozen=True, eq=False)
class PointerConfig:
    """One pointer: initial state, coupling observable ``s``, readout ``r``, strength ``g``."""

    phi: PointerWavefunction
    s: PointerObservable
    r: PointerObservable
    g: float
    g_max: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "s", parse_observable(self.s))
        object.__setattr__(self, "r", parse_observable(self.r))
        if not 0 <= self.g <= self.g_max:
            raise ValueError(f"coupling g={self.g} outside the weak regime [0, {self.g_max}]")

    @property
    def grid(self) -> PointerGrid:
        return self.phi.grid


@dataclass(frozen=True, eq=False)
class Experiment:
    """An evolution chain plus one pointer per observable (pointer k couples to ``A_k``)."""

    chain: EvolutionChain
    pointers: tuple[PointerConfig, ...]

    def __post_init__(self):
        object.__setattr__(self, "pointers", tuple(self.pointers))
        if len(self.pointers) != self.chain.n:
            raise ValueError(f"{self.chain.n} observables but {len(self.pointers)} pointers")

    @property
    def n(self) -> int:
        return self.chain.n

    @property
    def couplings(self) -> tuple[float, ...]:
        return tuple(p.g for p in self.pointers)

    def with_couplings(self, gs: Sequence[float]) -> "Experiment":
        if len(gs) != self.n:
            raise ValueError("need one coupling per pointer")
        return replace(self, pointers=tuple(replace(p, g=float(g)) for p, g in zip(self.pointers, gs)))

    def scaled(self, level: float) -> "Experiment":
        """Rescale couplings so the largest equals ``level``, keeping their ratios."""
        top = max(self.couplings)
        if top == 0:
            return self.with_couplings([level] * self.n)
        return self.with_couplings([level * g / top for g in self.couplings])

    def with_readouts(self, readouts: Sequence) -> "Experiment":
        return replace(self, pointers=tuple(replace(p, r=parse_observable(r))
                                            for p, r in zip(self.pointers, readouts)))


def _check_subset(exp: Experiment, subset: Iterable[int]) -> tuple[int, ...]:
    s = tuple(sorted(subset))
    if len(set(s)) != len(s) or any(not 1 <= k <= exp.n for k in s):
        raise ValueError(f"subset {s} is not a subset of 1..{exp.n}")
    return s


def _check_budget(entries: int, budget: int) -> None:
    if entries > budget:
        raise SizeError(f"state needs {entries} complex entries, budget is {budget}")


class JointPointerState:
    """Post-selected (unnormalized) state of the coupled pointers.

    Either factored (``branch_amplitudes`` with one stack of coupled
    wavefunctions per pointer) or dense (``samples`` over the grids).
    ``norm2`` is the integral of ``|Psi|^2``.
    """

    def __init__(self, coupled_subset, grids, *, branch_amplitudes=None, branch_wavefunctions=None,
                 samples=None, budget: int = MEMORY_BUDGET):
        self.coupled_subset = tuple(coupled_subset)
        self.grids = tuple(grids)
        self.budget = budget
        self.branch_amplitudes = branch_amplitudes
        self.branch_wavefunctions = None if branch_wavefunctions is None else tuple(branch_wavefunctions)
        self._samples = samples
        if (samples is None) == (branch_amplitudes is None):
            raise ValueError("give exactly one of samples or branch_amplitudes")
        self.norm2 = float(np.real(self._quadratic_form([None] * len(self.coupled_subset))))
        if not self.norm2 > NORM2_FLOOR:
            raise DegeneratePostselectionError(np.sqrt(max(self.norm2, 0.0)), np.sqrt(NORM2_FLOOR))

    @property
    def is_factored(self) -> bool:
        return self._samples is None

    @property
    def measure(self) -> float:
        return float(np.prod([g.spacing for g in self.grids]))

    @property
    def samples(self) -> np.ndarray:
        """Dense ``Psi(q_1, ..., q_kappa)``; built on demand for factored states."""
        if self._samples is None:
            _check_budget(int(np.prod([g.m_points for g in self.grids])), self.budget)
            t = self.branch_amplitudes
            for w in self.branch_wavefunctions:
                # contract the leading branch axis, append the grid axis
                t = np.tensordot(t, w, axes=(0, 0))
            self._samples = t
        return self._samples

    def _quadratic_form(self, readouts) -> complex:
        if self.is_factored:
            c = self.branch_amplitudes
            t = c
            for axis, (op, w, grid) in enumerate(zip(readouts, self.branch_wavefunctions, self.grids)):
                rw = w if op is None else apply_operator(op, grid, w, axis=1)
                overlap = (w.conj() @ rw.T) * grid.spacing  # [e', e]
                t = np.moveaxis(np.tensordot(overlap, t, axes=(1, axis)), 0, axis)
            return complex(np.vdot(c, t))
        psi = self._samples
        t = psi
        for axis, (op, grid) in enumerate(zip(readouts, self.grids)):
            if op is not None:
                t = apply_operator(op, grid, t, axis=axis)
        return complex(np.vdot(psi, t) * self.measure)

    def expectation(self, readouts) -> complex:
        if len(readouts) != len(self.coupled_subset):
            raise ValueError(f"{len(readouts)} readouts for coupled subset {self.coupled_subset}")
        return self._quadratic_form(list(readouts)) / self.norm2


def _coupled_branches(cfg: PointerConfig, eigenvalues: np.ndarray) -> np.ndarray:
    """Rows ``exp(-i g lambda s) phi`` for each system eigenvalue ``lambda``."""
    phi, grid = cfg.phi.samples, cfg.grid
    lam = np.asarray(eigenvalues)[:, None]
    if cfg.s.kind == "q":
        return np.exp(-1j * cfg.g * lam * grid.q[None, :]) * phi[None, :]
    if cfg.s.kind == "p":
        spectrum = np.fft.fft(phi)
        return np.fft.ifft(np.exp(-1j * cfg.g * lam * grid.k[None, :]) * spectrum[None, :], axis=1)
    s = make_operator(cfg.s, grid)
    return np.stack([scipy.linalg.expm(-1j * cfg.g * l * s) @ phi for l in eigenvalues])


def run_exact(exp: Experiment, subset: Iterable[int], budget: int = MEMORY_BUDGET) -> JointPointerState:
    """Couple only the pointers in ``subset``, evolve, post-select on ``psi_f``."""
    s = _check_subset(exp, subset)
    chain = exp.chain
    _check_budget(chain.dim * int(np.prod([exp.pointers[k - 1].grid.m_points for k in s])), budget)
    v = chain.unitaries[0].matrix @ chain.psi_i.amplitudes  # [branches..., system]
    branches = []
    for k in range(1, chain.n + 1):
        if k in s:
            lam, vecs = np.linalg.eigh(chain.observables[k - 1].matrix)
            coeff = v @ vecs.conj()  # <e|v> for each eigenvector e
            v = coeff[..., :, None] * vecs.T
            branches.append(_coupled_branches(exp.pointers[k - 1], lam))
        v = v @ chain.unitaries[k].matrix.T
    amplitudes = v @ chain.psi_f.amplitudes.conj()
    if not s:
        amplitudes = np.asarray(amplitudes)
    return JointPointerState(s, [exp.pointers[k - 1].grid for k in s],
                             branch_amplitudes=amplitudes, branch_wavefunctions=branches, budget=budget)


def expectation_product(state: JointPointerState, readouts: Sequence) -> float:
    """Normalized ``<prod_k r_k>`` for Hermitian readouts; must come out real."""
    value = state.expectation(readouts)
    if abs(value.imag) > 1e-9 * max(1.0, abs(value)):
        raise ValueError(f"Hermitian readout product has imaginary part {value.imag:.3e}")
    return value.real


def expectation_product_complex(state: JointPointerState, readouts: Sequence) -> complex:
    """``<prod_k r_k>`` for arbitrary (possibly non-Hermitian) readout matrices."""
    return state.expectation(readouts)


# ---- simultaneous coupling --------------------------------------------------

def _pointer_eigenbasis(cfg: PointerConfig):
    """Eigenvalues of ``s`` and forward / backward transforms to its eigenbasis."""
    grid = cfg.grid
    if cfg.s.kind == "q":
        return grid.q, (lambda x, axis: x), (lambda x, axis: x)
    if cfg.s.kind == "p":
        return (grid.k,
                lambda x, axis: np.fft.fft(x, axis=axis, norm="ortho"),
                lambda x, axis: np.fft.ifft(x, axis=axis, norm="ortho"))
    sig, vecs = np.linalg.eigh(make_operator(cfg.s, grid))
    return (sig,
            lambda x, axis: np.moveaxis(np.tensordot(vecs.conj().T, np.moveaxis(x, axis, 0), 1), 0, axis),
            lambda x, axis: np.moveaxis(np.tensordot(vecs, np.moveaxis(x, axis, 0), 1), 0, axis))


def _dense_state(exp: Experiment, s: tuple[int, ...], system_amplitude: np.ndarray,
                 bases, budget: int) -> JointPointerState:
    psi = system_amplitude
    for axis, (k, (_, fwd, _)) in enumerate(zip(s, bases)):
        shape = [1] * len(s)
        shape[axis] = -1
        psi = psi * fwd(exp.pointers[k - 1].phi.samples, 0).reshape(shape)
    for axis, (_, _, back) in enumerate(bases):
        psi = back(psi, axis)
    return JointPointerState(s, [exp.pointers[k - 1].grid for k in s], samples=psi, budget=budget)


def _check_no_intermediate_evolution(exp: Experiment, s: tuple[int, ...]) -> None:
    for k in range(s[0] + 1, s[-1] + 1) if s else ():
        if not exp.chain.unitaries[k - 1].is_identity():
            raise ValueError(f"simultaneous coupling needs identity unitary U_{k}")


def _outer_unitaries(chain: EvolutionChain, s: tuple[int, ...]):
    """System vectors ``U_{first}...U_1 psi_i`` and ``(U_{n+1}...U_{last+1})^dag psi_f``."""
    x = chain.psi_i.amplitudes
    for u in chain.unitaries[:s[0]]:
        x = u.matrix @ x
    y = chain.psi_f.amplitudes
    for u in reversed(chain.unitaries[s[-1]:]):
        y = u.matrix.conj().T @ y
    return x, y


def run_simultaneous_exact(exp: Experiment, subset: Iterable[int] | None = None,
                           budget: int = MEMORY_BUDGET) -> JointPointerState:
    """Apply ``exp(-i sum_k g_k s_k A_k)`` for the pointers in ``subset`` at once."""
    s = _check_subset(exp, range(1, exp.n + 1) if subset is None else subset)
    if not s:
        return run_exact(exp, s, budget)
    _check_no_intermediate_evolution(exp, s)
    d = exp.chain.dim
    sizes = [exp.pointers[k - 1].grid.m_points for k in s]
    _check_budget(d * d * int(np.prod(sizes)), budget)
    bases = [_pointer_eigenbasis(exp.pointers[k - 1]) for k in s]
    h = np.zeros(tuple(sizes) + (d, d), dtype=complex)
    for axis, (k, (sig, _, _)) in enumerate(zip(s, bases)):
        shape = [1] * len(s) + [1, 1]
        shape[axis] = -1
        h = h + exp.pointers[k - 1].g * sig.reshape(shape) * exp.chain.observables[k - 1].matrix
    w, vecs = np.linalg.eigh(h)
    x, y = _outer_unitaries(exp.chain, s)
    # <y| V exp(-i w) V^dag |x>
    left = np.einsum("i,...ij->...j", y.conj(), vecs)
    right = np.einsum("...ij,i->...j", vecs.conj(), x)
    amplitude = np.sum(left * np.exp(-1j * w) * right, axis=-1)
    return _dense_state(exp, s, amplitude, bases, budget)


def run_trotter_simultaneous(exp: Experiment, steps: int, budget: int = MEMORY_BUDGET) -> JointPointerState:
    """Two pointers coupled alternately ``steps`` times with strengths ``g_k / steps``."""
    if exp.n != 2:
        raise ValueError("Trotterized coupling is defined for two pointers")
    if not 1 <= steps <= 10_000:
        raise ValueError("steps must be in 1..10000")
    s = (1, 2)
    _check_no_intermediate_evolution(exp, s)
    d = exp.chain.dim
    sizes = [p.grid.m_points for p in exp.pointers]
    _check_budget(d * d * int(np.prod(sizes)), budget)
    bases = [_pointer_eigenbasis(p) for p in exp.pointers]
    factors = []
    for k, (sig, _, _) in zip(s, bases):
        lam, vecs = np.linalg.eigh(exp.chain.observables[k - 1].matrix)
        phase = np.exp(-1j * (exp.pointers[k - 1].g / steps) * sig[:, None] * lam[None, :])
        factors.append(np.einsum("ij,sj,kj->sik", vecs, phase, vecs.conj()))
    step = factors[1][None, :, :, :] @ factors[0][:, None, :, :]
    total = np.linalg.matrix_power(step, steps)
    x, y = _outer_unitaries(exp.chain, s)
    amplitude = np.einsum("i,...ij,j->...", y.conj(), total, x)
    return _dense_state(exp, s, amplitude, bases, budget)


# ---- moments and cumulants -----------------------------------------------------

def _readouts(exp: Experiment, readouts) -> list:
    if readouts is None:
        return [p.r for p in exp.pointers]
    if len(readouts) != exp.n:
        raise ValueError("need one readout per pointer")
    return [r if not isinstance(r, str) else parse_observable(r) for r in readouts]


def _run(exp: Experiment, subset, mode: str, budget: int) -> JointPointerState:
    if mode == "sequential":
        return run_exact(exp, subset, budget)
    if mode == "simultaneous":
        return run_simultaneous_exact(exp, subset, budget)
    raise ValueError(f"unknown coupling mode {mode!r}")


def pointer_moments(exp: Experiment, readouts=None, mode: str = "sequential", complex_values: bool = False,
                    max_workers: int | None = None, budget: int = MEMORY_BUDGET) -> MomentFunctional:
    """``<prod_{k in S} r_k>`` for every non-empty subset ``S``, each from its own experiment.

    Only the pointers of ``S`` are coupled when evaluating ``S``. Runs are
    independent and may be spread over ``max_workers`` threads; the table is
    assembled in subset order regardless of completion order.
    """
    rs = _readouts(exp, readouts)
    subsets = all_subsets(exp.n)

    def one(subset):
        state = _run(exp, subset, mode, budget)
        ops = [rs[k - 1] for k in subset]
        return state.expectation(ops) if complex_values else expectation_product(state, ops)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            values = list(pool.map(one, subsets))
    else:
        values = [one(sub) for sub in subsets]
    return MomentFunctional(exp.n, dict(zip(subsets, values)))


def pointer_cumulant(exp: Experiment, readouts=None, mode: str = "sequential", complex_values: bool = False,
                     max_workers: int | None = None, budget: int = MEMORY_BUDGET):
    """Joint cumulant of the pointer readouts from per-subset experiments."""
    value = cumulant(pointer_moments(exp, readouts, mode, complex_values, max_workers, budget))
    return value if complex_values else value.real


def pointer_covariance(exp: Experiment, readouts=None, mode: str = "sequential",
                       max_workers: int | None = None, budget: int = MEMORY_BUDGET) -> float:
    """Central product moment ``<prod (r_k - <r_k>)>`` from per-subset experiments (n in 2..4)."""
    return covariance(pointer_moments(exp, readouts, mode, False, max_workers, budget)).real


# ---- perturbative series -----------------------------------------------------------

def _multi_indices(size: int, order: int):
    return [idx for idx in product(range(order + 1), repeat=size) if sum(idx) <= order]


def run_perturbative(exp: Experiment, subset: Iterable[int], order: int, readouts=None) -> float:
    """``<prod_{k in subset} r_k>`` from the coupling series, truncated at total order ``order``.

    Numerator and denominator are expanded as power series in a common
    scale of the couplings and divided as formal series, so the result
    differs from the exact value by ``O(g^(order+1))``.
    """
    s = _check_subset(exp, subset)
    if not 0 <= order <= 4:
        raise ValueError("series order must be in 0..4")
    rs = _readouts(exp, readouts)
    chain = exp.chain
    indices = _multi_indices(len(s), order)
    alpha = {}
    for idx in indices:
        weight = np.prod([exp.pointers[k - 1].g ** i for k, i in zip(s, idx)])
        alpha[idx] = weight * power_weak_value(chain, dict(zip(s, idx)))
    tables = [uv_tables(exp.pointers[k - 1].phi, exp.pointers[k - 1].s, rs[k - 1], order) for k in s]
    num = np.zeros(order + 1, dtype=complex)
    den = np.zeros(order + 1, dtype=complex)
    for i in indices:
        for j in indices:
            degree = sum(i) + sum(j)
            if degree > order:
                continue
            weight = alpha[i] * np.conj(alpha[j])
            u_term = np.prod([u[a, b] for (u, _), a, b in zip(tables, i, j)])
            v_term = np.prod([v[a, b] for (_, v), a, b in zip(tables, i, j)])
            num[degree] += weight * u_term
            den[degree] += weight * v_term
    ratio = np.zeros(order + 1, dtype=complex)
    for o in range(order + 1):
        ratio[o] = (num[o] - np.dot(den[1:o + 1], ratio[o - 1::-1][:o])) / den[0]
    return float(np.sum(ratio).real)
