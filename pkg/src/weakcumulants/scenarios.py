"""Reproducible experiment builders: interferometers, pointer families, random chains."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegeneratePostselectionError
from .pointer import DEFAULT_GRID, PointerGrid, PointerWavefunction
from .quantum import EvolutionChain, Observable, SystemState, UnitaryOp

#: symmetric 50/50 beamsplitter
BEAMSPLITTER = np.array([[1, 1j], [1j, 1]], dtype=complex) / np.sqrt(2)


def beamsplitter(d: int, a: int, b: int) -> np.ndarray:
    """``d``-mode identity with the symmetric beamsplitter acting on modes ``a, b``."""
    u = np.eye(d, dtype=complex)
    u[np.ix_([a, b], [a, b])] = BEAMSPLITTER
    return u


def _mode_projector(d: int, mode: int) -> Observable:
    return Observable.projector(np.eye(d)[mode])


def double_interferometer() -> EvolutionChain:
    """Two Mach-Zehnder interferometers in series on a 2-mode path space.

    The photon enters mode 0 and is detected in mode 0; both observables
    project onto arm 0. Weak values: ``(A_1)_w = (A_2)_w = 0`` and
    ``(A_2, A_1)_w = -1/2``.
    """
    bs = UnitaryOp(beamsplitter(2, 0, 1))
    arm0 = _mode_projector(2, 0)
    start = SystemState.basis(2, 0)
    return EvolutionChain(start, start, (bs, bs, bs), (arm0, arm0))


def bottleneck_interferometer() -> EvolutionChain:
    """The double interferometer with a single connecting link between the halves.

    Modes 0 and 1 form the first interferometer; its output in mode 1 is the
    link ``L`` feeding the second interferometer on modes 1 and 2, while
    mode 0 (``L'``) never reaches the detector on mode 2. Weak values
    ``1/2, 1/2, 1/4``.
    """
    d = 3
    first = beamsplitter(d, 0, 1)
    second = beamsplitter(d, 1, 2)
    return EvolutionChain(
        SystemState.basis(d, 0),
        SystemState.basis(d, 2),
        (UnitaryOp(first), UnitaryOp(second @ first), UnitaryOp(second)),
        (_mode_projector(d, 0), _mode_projector(d, 1)),
    )


def bottleneck_double_pair() -> EvolutionChain:
    """Two double interferometers joined through a bottleneck link (four observables).

    Pairs ``{1, 2}`` and ``{3, 4}`` each reproduce the double-interferometer
    weak values (``-1/2`` for the pair) and are weakly independent of each
    other.
    """
    d = 3
    first = beamsplitter(d, 0, 1)
    second = beamsplitter(d, 0, 2)
    arm0 = _mode_projector(d, 0)
    start = SystemState.basis(d, 0)
    return EvolutionChain(
        start,
        start,
        (UnitaryOp(first), UnitaryOp(first), UnitaryOp(second @ first), UnitaryOp(second),
         UnitaryOp(second)),
        (arm0, arm0, arm0, arm0),
    )


def product_bipartite_chain(seed: int = 7) -> EvolutionChain:
    """Two-qubit chain where every ingredient factorizes across the qubits.

    ``A_1`` acts on qubit A and ``A_2`` on qubit B, so they are weakly
    independent by construction.
    """
    rng = np.random.default_rng(seed)
    a = _random_chain_once(2, 2, rng)
    b = _random_chain_once(2, 2, rng)
    eye = np.eye(2)
    unitaries = [UnitaryOp(np.kron(ua.matrix, ub.matrix)) for ua, ub in zip(a.unitaries, b.unitaries)]
    observables = [Observable(np.kron(a.observables[0].matrix, eye)),
                   Observable(np.kron(eye, b.observables[1].matrix))]
    return EvolutionChain(
        SystemState(np.kron(a.psi_i.amplitudes, b.psi_i.amplitudes)),
        SystemState(np.kron(a.psi_f.amplitudes, b.psi_f.amplitudes)),
        unitaries,
        observables,
    )


def noncommuting_pair(theta: float = 0.6) -> EvolutionChain:
    """Qubit chain with ``A_1 = sigma_z``, ``A_2 = sigma_x`` and no evolution between them."""
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    psi_i = SystemState.normalized([np.cos(theta), np.sin(theta)])
    psi_f = SystemState.normalized([1.0, 0.4 + 0.3j])
    eye = UnitaryOp.identity(2)
    return EvolutionChain(psi_i, psi_f, (eye, eye, eye), (Observable(sz), Observable(sx)))


def commuting_pair() -> EvolutionChain:
    """Qubit chain with two diagonal observables and no evolution between them."""
    psi_i = SystemState.normalized([1.0, 0.5j])
    psi_f = SystemState.normalized([0.8, 0.6])
    eye = UnitaryOp.identity(2)
    return EvolutionChain(psi_i, psi_f, (eye, eye, eye),
                          (Observable(np.diag([1.0, -1.0])), Observable(np.diag([0.3, 1.2]))))


# ---- random chains ---------------------------------------------------------

def _haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (z + z.conj().T) / 2
    return h / np.max(np.abs(np.linalg.eigvalsh(h)))


def _random_state(d: int, rng: np.random.Generator) -> SystemState:
    return SystemState.normalized(rng.standard_normal(d) + 1j * rng.standard_normal(d))


def _random_chain_once(d: int, n: int, rng: np.random.Generator) -> EvolutionChain:
    unitaries = [UnitaryOp(_haar_unitary(d, rng)) for _ in range(n + 1)]
    observables = [Observable(_random_hermitian(d, rng)) for _ in range(n)]
    return EvolutionChain(_random_state(d, rng), _random_state(d, rng), unitaries, observables)


def random_chain(d: int, n: int, seed: int, min_overlap: float = 0.1,
                 max_tries: int = 100) -> EvolutionChain:
    """Haar unitaries, unit-norm random Hermitian observables, random end states.

    Draws are repeated until ``|<psi_f|U...U|psi_i>| >= min_overlap``.
    """
    if not (1 <= d <= 8 and 0 <= n <= 4):
        raise ValueError("random_chain supports d <= 8 and n <= 4")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        try:
            chain = _random_chain_once(d, n, rng)
        except DegeneratePostselectionError:
            continue
        if abs(chain.amplitude) >= min_overlap:
            return chain
    raise RuntimeError(f"no non-degenerate chain after {max_tries} draws (seed={seed})")


# ---- pointer families -----------------------------------------------------

def _gaussian(q, sigma2, q0=0.0):
    return np.exp(-((q - q0) ** 2) / (4 * sigma2))


def pointer_family(kind: str, grid: PointerGrid = DEFAULT_GRID, **params) -> PointerWavefunction:
    """Named initial pointer wavefunctions.

    ``sigma2`` is the position variance of ``|phi|^2``.

    * ``gaussian``: ``sigma2=0.5, q0=0``
    * ``real_nongaussian``: ``exp(-q^2/(4 width2)) / (1 + q^2)``, real and even
    * ``chirped``: Gaussian times ``exp(i alpha q^2)``, ``alpha=0.3``
    * ``boosted``: Gaussian shifted by ``q0`` with mean momentum ``k0``
    * ``random``: smooth complex packet with seeded random shift, boost, chirp and skew
    """
    q = grid.q
    if kind == "gaussian":
        f = _gaussian(q, params.get("sigma2", 0.5), params.get("q0", 0.0))
    elif kind == "real_nongaussian":
        f = _gaussian(q, params.get("width2", 1.0)) / (1 + q ** 2)
    elif kind == "chirped":
        f = _gaussian(q, params.get("sigma2", 0.5)) * np.exp(1j * params.get("alpha", 0.3) * q ** 2)
    elif kind == "boosted":
        f = (_gaussian(q, params.get("sigma2", 0.5), params.get("q0", 0.4))
             * np.exp(1j * params.get("k0", 0.7) * q))
    elif kind == "random":
        rng = np.random.default_rng(params.get("seed", 0))
        q0, k0 = rng.uniform(-1, 1, size=2)
        alpha, beta = rng.uniform(-0.3, 0.3), rng.uniform(-0.05, 0.05)
        sigma2 = rng.uniform(0.3, 0.8)
        skew = rng.uniform(-0.5, 0.5)
        x = q - q0
        f = (_gaussian(x, sigma2) * (1 + skew * x)
             * np.exp(1j * (k0 * q + alpha * x ** 2 + beta * x ** 3)))
    else:
        raise ValueError(f"unknown pointer family {kind!r}")
    return PointerWavefunction.from_samples(grid, f)


# ---- registry ---------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioDescriptor:
    name: str
    builder: Callable[..., EvolutionChain]
    params: dict = field(default_factory=dict)
    description: str = ""

    def build(self, **overrides) -> EvolutionChain:
        unknown = set(overrides) - set(self.params)
        if unknown:
            raise ValueError(f"scenario {self.name!r} has no parameters {sorted(unknown)}")
        return self.builder(**{**self.params, **overrides})


SCENARIOS: dict[str, ScenarioDescriptor] = {
    s.name: s
    for s in [
        ScenarioDescriptor("double_interferometer", double_interferometer, {},
                           "two interferometers in series; weak values 0, 0, -1/2"),
        ScenarioDescriptor("bottleneck", bottleneck_interferometer, {},
                           "interferometers joined by a link; weak values 1/2, 1/2, 1/4"),
        ScenarioDescriptor("bottleneck_double_pair", bottleneck_double_pair, {},
                           "two double interferometers joined by a link; four observables"),
        ScenarioDescriptor("product_bipartite", product_bipartite_chain, {"seed": 7},
                           "two-qubit factorized chain"),
        ScenarioDescriptor("noncommuting_pair", noncommuting_pair, {"theta": 0.6},
                           "sigma_z then sigma_x, no evolution in between"),
        ScenarioDescriptor("commuting_pair", commuting_pair, {},
                           "two diagonal qubit observables, no evolution in between"),
        ScenarioDescriptor("random", random_chain, {"d": 4, "n": 2, "seed": 0},
                           "Haar-random chain with unit-norm random observables"),
    ]
}


def get_scenario(name: str) -> ScenarioDescriptor:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None
