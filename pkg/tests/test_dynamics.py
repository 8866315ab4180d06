import math

import numpy as np
import pytest

from kerrdyn.errors import DomainError, TruncationError
from kerrdyn.fockspace import FockBasis, identity, number_op
from kerrdyn.model import ModelParams, build_hamiltonian
from kerrdyn.spectral import eigendecompose
from kerrdyn.dynamics import (
    StateVector, TimeGrid, coherent_state, coherent_truncation_weight, evolve, evolve_many,
    fock_state, from_amplitudes, required_m_cut, time_series, time_series_spectral,
)

from oracles import centered_difference, poisson_amplitudes


def system(params, m_cut):
    basis = FockBasis(m_cut)
    h = build_hamiltonian(params, basis)
    return basis, h, eigendecompose(h)


def test_vacuum_coherent():
    s = coherent_state(0, 0, FockBasis(4))
    assert s.amplitudes[0] == 1.0 and s.truncation_weight == 0.0
    assert np.count_nonzero(s.amplitudes) == 1


def test_coherent_amplitudes_against_poisson():
    b = FockBasis(14)
    s = coherent_state(1.0, 0.0, b)
    assert s.amplitudes[0].real == pytest.approx(math.exp(-0.5), abs=1e-9)
    assert s.amplitudes[0].real == pytest.approx(0.606531, abs=5e-7)
    assert s.expect(number_op(b, 1)).real == pytest.approx(1.0, abs=1e-8)
    alpha = 0.7 - 0.4j
    s = coherent_state(alpha, 0.3j, FockBasis(16))
    ref = np.kron(poisson_amplitudes(alpha, 17), poisson_amplitudes(0.3j, 17))
    assert np.abs(s.amplitudes - ref / np.linalg.norm(ref)).max() < 1e-14


def test_coherent_two_modes():
    b = FockBasis(20)
    s = coherent_state(2.0, 2.0, b)
    assert s.truncation_weight < 1e-8
    assert s.expect(number_op(b, 1)).real == pytest.approx(4.0, abs=1e-6)
    assert s.expect(number_op(b, 2)).real == pytest.approx(4.0, abs=1e-6)
    assert abs(s.norm - 1.0) < 1e-12
    # Poisson tail oracle
    tail = 1.0 - sum(math.exp(-4) * 4**n / math.factorial(n) for n in range(21))
    assert s.truncation_weight == pytest.approx(2 * tail - tail**2, rel=1e-6)


def test_coherent_large_alpha_no_overflow():
    s = coherent_state(12.0, 0.0, FockBasis(260), threshold=None)
    assert np.isfinite(s.amplitudes).all()
    assert abs(s.norm - 1.0) < 1e-12


def test_truncation_error_advises_cutoff():
    with pytest.raises(TruncationError) as exc:
        coherent_state(2.0, 2.0, FockBasis(6))
    need = exc.value.required_m_cut
    assert coherent_truncation_weight(2.0, 2.0, need) <= 1e-8
    assert coherent_truncation_weight(2.0, 2.0, need - 1) > 1e-8
    assert need == required_m_cut(2.0, 2.0)
    s = coherent_state(2.0, 2.0, FockBasis(6), threshold=None)
    assert s.truncation_weight > 1e-3


def test_state_validation():
    b = FockBasis(2)
    with pytest.raises(DomainError):
        StateVector(np.ones(4), b)
    with pytest.raises(DomainError):
        from_amplitudes(np.zeros(9), b)
    with pytest.raises(DomainError):
        TimeGrid(1.0, 1.0, 5)
    with pytest.raises(DomainError):
        TimeGrid(0.0, 1.0, 1)
    g = TimeGrid()
    assert len(g.times) == 601 and g.times[-1] == 30.0


def test_evolve_identity_at_zero(fig_params):
    b, h, eig = system(fig_params, 8)
    s = coherent_state(0.5, 0.5, b)
    assert evolve(s, eig, 0.0) is s
    assert np.array_equal(evolve_many(s, eig, [0.0, 1.0])[0].amplitudes, s.amplitudes)


def test_vacuum_stationary_without_coupling():
    b, h, eig = system(ModelParams(), 6)
    s = fock_state(0, 0, b)
    for t in [0.3, 2.0, 17.0]:
        st = evolve(s, eig, t)
        assert st.fidelity(s) == pytest.approx(1.0, abs=1e-14)
        assert st.amplitudes[0] == pytest.approx(np.exp(-1j * 0.75 * t), abs=1e-13)


def test_evolve_matches_dense_expm(fig_params):
    from scipy.linalg import expm
    b, h, eig = system(fig_params, 6)
    s = coherent_state(0.6, 0.4, b, threshold=None)
    t = 2.3
    ref = expm(-1j * t * h.toarray()) @ s.amplitudes
    assert np.abs(evolve(s, eig, t).amplitudes - ref).max() < 1e-11


def test_dimension_mismatch(fig_params):
    _, _, eig = system(fig_params, 4)
    with pytest.raises(DomainError):
        evolve(fock_state(0, 0, FockBasis(5)), eig, 1.0)


def test_route_equivalence(fig_params):
    b, h, eig = system(fig_params, 15)
    s = coherent_state(1.0, 1.0, b, threshold=None)
    obs = [number_op(b, 1), number_op(b, 2), h]
    times = np.linspace(0, 30, 41)
    a = time_series(s, eig, obs, times)
    c = time_series_spectral(s, eig, obs, times)
    assert np.abs(a - c).max() < 1e-9


def test_norm_energy_and_identity(fig_params):
    b, h, eig = system(fig_params, 20)
    s = coherent_state(2.0, 2.0, b)
    grid = TimeGrid(0, 30, 121)
    for st in evolve_many(s, eig, grid.times):
        assert abs(st.norm - 1.0) <= 1e-10
    vals = time_series(s, eig, [identity(b), h], grid)
    assert np.abs(vals[:, 0] - 1.0).max() < 1e-10
    assert np.abs(vals[:, 1] - vals[0, 1]).max() < 1e-10


def test_number_conserved_without_pair_term():
    p = ModelParams.from_couplings(0.3, 0.0, omega1=1.0, omega2=1.0, beta1=0.1, beta2=0.05)
    b, h, eig = system(p, 8)
    ntot = number_op(b, 1) + number_op(b, 2)
    for occ in [(3, 0), (1, 2), (4, 4)]:
        vals = time_series(fock_state(*occ, b), eig, [ntot], np.linspace(0, 30, 31))[:, 0]
        assert np.abs(vals - sum(occ)).max() <= 1e-8


def test_kerr_revival():
    p = ModelParams(beta1=0.1)
    b, h, eig = system(p, 14)
    s = coherent_state(1.0, 0.0, b)
    tr = math.pi / 0.1
    target = coherent_state(np.exp(-1j * tr), 0.0, b)
    assert evolve(s, eig, tr).fidelity(target) >= 1 - 1e-6
    # halfway the state is far from any rotated coherent state
    assert evolve(s, eig, tr / 2).fidelity(coherent_state(np.exp(-1j * tr / 2), 0.0, b)) < 0.9


def test_initial_slope_of_population(fig_params):
    b, h, eig = system(fig_params, 24)
    s = coherent_state(2.0, 2.0, b)
    n1 = number_op(b, 1)
    f = lambda t: time_series(s, eig, [n1], [t])[0, 0].real
    slope = centered_difference(f, 0.0, 1e-4)
    expected = 2 * 2.0 * 2.0 * (fig_params.lambda1 + fig_params.lambda2)
    assert slope == pytest.approx(expected, abs=1e-6)


def test_edge_weight():
    b = FockBasis(3)
    assert fock_state(3, 0, b).edge_weight() == 1.0
    assert fock_state(2, 3, b).edge_weight() == 1.0
    assert fock_state(2, 2, b).edge_weight() == 0.0
    amp = np.zeros(16)
    amp[b.index(3, 3)] = amp[b.index(0, 0)] = 1.0
    assert from_amplitudes(amp, b).edge_weight() == pytest.approx(0.5)
