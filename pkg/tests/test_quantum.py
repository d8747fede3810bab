import numpy as np
import pytest

from weakcumulants.errors import DegeneratePostselectionError
from weakcumulants.quantum import (EvolutionChain, Observable, SystemState, UnitaryOp, is_weakly_independent,
                                   path_amplitude_ratio, power_weak_value, sequential_weak_value,
                                   simultaneous_weak_value, weak_value, weak_value_cumulant,
                                   weak_value_functional)
from weakcumulants.scenarios import (bottleneck_interferometer, commuting_pair, double_interferometer,
                                     noncommuting_pair, product_bipartite_chain, random_chain)


class TestTypes:
    def test_state_must_be_normalized(self):
        with pytest.raises(ValueError):
            SystemState(np.array([1.0, 1.0]))

    def test_normalized_constructor(self):
        s = SystemState.normalized([3.0, 4.0j])
        assert np.linalg.norm(s.amplitudes) == pytest.approx(1.0)

    def test_observable_must_be_hermitian(self):
        with pytest.raises(ValueError):
            Observable(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_unitary_check(self):
        with pytest.raises(ValueError):
            UnitaryOp(np.array([[1.0, 1.0], [0.0, 1.0]]))
        assert UnitaryOp.identity(3).is_identity()

    def test_chain_shapes(self):
        eye = UnitaryOp.identity(2)
        s = SystemState.basis(2, 0)
        with pytest.raises(ValueError):
            EvolutionChain(s, s, (eye,), (Observable(np.eye(2)),))
        with pytest.raises(ValueError):
            EvolutionChain(s, SystemState.basis(3, 0), (eye,), ())

    def test_degenerate_chain(self):
        eye = UnitaryOp.identity(2)
        with pytest.raises(DegeneratePostselectionError) as info:
            EvolutionChain(SystemState.basis(2, 0), SystemState.basis(2, 1), (eye,), ())
        assert info.value.overlap == 0.0


class TestWeakValue:
    def test_eigenstate(self):
        sz = Observable(np.diag([1.0, -1.0]))
        psi = SystemState.basis(2, 1)
        assert weak_value(sz, psi, psi) == pytest.approx(-1.0)

    def test_anomalous_value(self):
        sz = Observable(np.diag([1.0, -1.0]))
        eps = 0.1
        psi_i = SystemState.normalized([np.cos(np.pi / 4), np.sin(np.pi / 4)])
        psi_f = SystemState.normalized([np.cos(eps - np.pi / 4), np.sin(eps - np.pi / 4)])
        # cot(eps): far outside the spectrum for nearly orthogonal pre/post-selection
        assert weak_value(sz, psi_i, psi_f) == pytest.approx(1 / np.tan(eps))

    def test_degenerate(self):
        with pytest.raises(DegeneratePostselectionError):
            weak_value(Observable(np.eye(2)), SystemState.basis(2, 0), SystemState.basis(2, 1))

    @pytest.mark.parametrize("seed", range(5))
    def test_sequential_matches_matrix_product(self, seed):
        chain = random_chain(4, 3, seed)
        U = [u.matrix for u in chain.unitaries]
        A = [a.matrix for a in chain.observables]
        i, f = chain.psi_i.amplitudes, chain.psi_f.amplitudes
        den = f.conj() @ U[3] @ U[2] @ U[1] @ U[0] @ i
        num = f.conj() @ U[3] @ A[2] @ U[2] @ U[1] @ A[0] @ U[0] @ i
        assert sequential_weak_value(chain, (3, 1)) == pytest.approx(num / den, abs=1e-12)

    def test_empty_subset_is_one(self):
        chain = random_chain(3, 0, 1)
        assert chain.operator_weak_value({}) == pytest.approx(1.0)

    def test_power_weak_value(self):
        chain = random_chain(3, 2, 2)
        assert power_weak_value(chain, {1: 1, 2: 0}) == pytest.approx(sequential_weak_value(chain, (1,)))
        a2 = chain.observables[1].matrix @ chain.observables[1].matrix
        assert power_weak_value(chain, {2: 2}) == pytest.approx(chain.operator_weak_value({2: a2}))

    def test_bad_subset(self):
        with pytest.raises(ValueError):
            sequential_weak_value(random_chain(2, 2, 0), (3,))


class TestPathSum:
    @pytest.mark.parametrize("builder, expected", [(double_interferometer, -0.5),
                                                   (bottleneck_interferometer, 0.25)])
    def test_path_ratio_equals_sequential(self, builder, expected):
        chain = builder()
        assert path_amplitude_ratio(chain) == pytest.approx(expected, abs=1e-12)
        assert sequential_weak_value(chain, (1, 2)) == pytest.approx(expected, abs=1e-12)

    def test_requires_projectors(self):
        with pytest.raises(ValueError):
            path_amplitude_ratio(random_chain(2, 1, 0))


class TestSimultaneous:
    def test_commuting_equals_sequential(self):
        chain = commuting_pair()
        assert abs(simultaneous_weak_value(chain, (1, 2)) - sequential_weak_value(chain, (1, 2))) < 1e-12

    def test_two_observable_average(self):
        chain = noncommuting_pair()
        a1, a2 = (o.matrix for o in chain.observables)
        swapped = chain.operator_weak_value({1: a2, 2: a1})
        expected = 0.5 * (sequential_weak_value(chain, (1, 2)) + swapped)
        assert simultaneous_weak_value(chain, (1, 2)) == pytest.approx(expected)

    def test_noncommuting_differs(self):
        chain = noncommuting_pair()
        assert abs(simultaneous_weak_value(chain, (1, 2)) - sequential_weak_value(chain, (1, 2))) > 1e-3

    def test_singleton(self):
        chain = noncommuting_pair()
        assert simultaneous_weak_value(chain, (2,)) == pytest.approx(sequential_weak_value(chain, (2,)))


class TestWeakCumulant:
    def test_double_interferometer(self):
        assert weak_value_cumulant(double_interferometer()) == pytest.approx(-0.5, abs=1e-12)
        assert not is_weakly_independent(double_interferometer(), (1,), (2,))

    @pytest.mark.parametrize("builder", [bottleneck_interferometer, product_bipartite_chain])
    def test_weakly_independent(self, builder):
        chain = builder()
        assert is_weakly_independent(chain, (1,), (2,))
        assert abs(weak_value_cumulant(chain)) < 1e-12

    def test_functional_modes(self):
        chain = noncommuting_pair()
        seq = weak_value_functional(chain)
        sim = weak_value_functional(chain, "simultaneous")
        assert seq((1,)) == pytest.approx(sim((1,)))
        with pytest.raises(ValueError):
            weak_value_functional(chain, "bogus")
