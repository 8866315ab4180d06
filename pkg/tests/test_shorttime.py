import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from kerrdyn.dynamics import coherent_state, fock_state, time_series
from kerrdyn.errors import DomainError
from kerrdyn.fockspace import FockBasis, annihilator, number_op
from kerrdyn.model import ModelParams, build_hamiltonian
from kerrdyn.shorttime import (
    commutator_defect, commutator_terms, ehrenfest_check, expansion_terms, heisenberg_expansion,
    initial_rates, operator_error, scaling_table, short_time_population,
)
from kerrdyn.spectral import eigendecompose

from oracles import centered_difference

TIMES = (1e-2, 5e-3, 2.5e-3)


def interior_diff(x, y, basis, margin=4):
    mask = basis.interior(margin)
    d = (x - y)[mask][:, mask]
    return float(abs(d).max()) if d.nnz else 0.0


def test_first_order_simple_case():
    b = FockBasis(8)
    p = ModelParams.from_couplings(0.3, 0.0)
    first, _ = expansion_terms(p, b, 1)
    a1, a2 = annihilator(b, 1).matrix, annihilator(b, 2).matrix
    assert abs(first - (-1j * 1.0 * a1 + 0.3 * a2)).max() < 1e-15
    ref, _ = commutator_terms(p, b, 1)
    assert interior_diff(first, ref, b) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 0.49), st.floats(0, 0.3), st.floats(0, 0.3), st.sampled_from([1, 2]))
def test_term_list_equals_commutators(omega, b1, b2, mode):
    b = FockBasis(9)
    p = ModelParams.from_rotation(omega, omega1=1.0, omega2=0.5, beta1=b1, beta2=b2)
    first, second = expansion_terms(p, b, mode)
    ref1, ref2 = commutator_terms(p, b, mode)
    assert interior_diff(first, ref1, b) <= 1e-10
    assert interior_diff(second, ref2, b) <= 1e-10


def test_direct_couplings_regime():
    # lambda2 > lambda1 is allowed with direct couplings
    b = FockBasis(9)
    p = ModelParams.from_couplings(0.05, 0.3, beta1=0.2, beta2=0.1)
    for mode in (1, 2):
        first, second = expansion_terms(p, b, mode)
        ref1, ref2 = commutator_terms(p, b, mode)
        assert interior_diff(second, ref2, b) <= 1e-10


def test_mode2_kerr_cross_term_operator_order():
    # writing the beta1 cross term of a2'' as (l1 a1^dag a1 + l2 a1^dag) a1
    # breaks agreement with the commutator; a1^dag (l1 a1 + l2 a1^dag) a1 keeps it
    b = FockBasis(9)
    p = ModelParams.from_rotation(0.15, beta1=0.1, beta2=0.1)
    a1 = annihilator(b, 1).matrix
    c1 = a1.getH()
    _, second = expansion_terms(p, b, 2)
    _, ref = commutator_terms(p, b, 2)
    good = 2j * p.beta1 * (c1 @ (p.lambda1 * a1 + p.lambda2 * c1) @ a1)
    bad = 2j * p.beta1 * ((p.lambda1 * c1 @ a1 + p.lambda2 * c1) @ a1)
    swapped = second - 0.5 * good + 0.5 * bad
    assert interior_diff(second, ref, b) <= 1e-10
    assert interior_diff(swapped, ref, b) > 1e-3


def test_heisenberg_expansion_guard():
    with pytest.raises(DomainError):
        heisenberg_expansion(ModelParams(), FockBasis(3), 1)
    with pytest.raises(DomainError):
        expansion_terms(ModelParams(), FockBasis(5), 3)


@pytest.fixture(scope="module")
def small_system():
    p = ModelParams.from_rotation(0.15, beta1=0.1, beta2=0.1)
    b = FockBasis(12)
    eig = eigendecompose(build_hamiltonian(p, b))
    return p, b, eig


def test_operator_error_third_order(small_system):
    p, b, eig = small_system
    for mode in (1, 2):
        ex = heisenberg_expansion(p, b, mode)
        rows = scaling_table(lambda t: operator_error(ex, eig, t), TIMES)
        assert all(6 <= r[2] <= 10 for r in rows), rows


def test_commutator_defect_third_order(small_system):
    p, b, _ = small_system
    e1, e2 = heisenberg_expansion(p, b, 1), heisenberg_expansion(p, b, 2)
    assert commutator_defect(e1, e2, 0.0) < 1e-14
    rows = scaling_table(lambda t: commutator_defect(e1, e2, t), TIMES)
    assert all(6 <= r[2] <= 10 for r in rows), rows


def test_population_examples():
    p = ModelParams.from_rotation(0.15)
    assert short_time_population(1.0, 1.0, p, 0.0) == 1.0
    q = ModelParams.from_rotation(0.15, beta1=0.2, beta2=0.2)
    assert short_time_population(1.0, 1.0, p, 0.1) == short_time_population(1.0, 1.0, q, 0.1)
    l1, l2 = p.lambda1, p.lambda2
    first = 1 + 2 * 0.1 * (l1 + l2)
    assert first == pytest.approx(1 + 0.2 * 0.212132, abs=1e-7)
    # t^2 coefficient from the exact double commutator, see below
    assert short_time_population(1.0, 1.0, p, 0.1) == pytest.approx(1.0426795, abs=1e-7)
    with pytest.raises(DomainError):
        short_time_population(1.0, 1.0, p, 0.1, mode=3)


@pytest.mark.parametrize("a1,a2", [(1.0, 1.0), (2.0, 0.5), (0.0, 1.5), (1.2, 0.0)])
@pytest.mark.parametrize("mode", [1, 2])
def test_population_coefficients_against_double_commutator(a1, a2, mode):
    # d^2<N>/dt^2 at 0 is -<[H,[H,N]]>, evaluated on a basis large enough to be exact
    p = ModelParams.from_rotation(0.3, beta1=0.1, beta2=0.07)
    b = FockBasis(30)
    h = build_hamiltonian(p, b).matrix
    n = number_op(b, mode).matrix
    psi = coherent_state(a1, a2, b).amplitudes
    c = h @ n - n @ h
    dn = np.vdot(psi, 1j * (c @ psi)).real
    d2n = -np.vdot(psi, (h @ c - c @ h) @ psi).real
    t = 1e-3
    taylor = np.array([short_time_population(a1, a2, p, s, mode) for s in (0.0, t, -t)])
    slope = (taylor[1] - taylor[2]) / (2 * t)
    curv = (taylor[1] + taylor[2] - 2 * taylor[0]) / t**2
    assert taylor[0] == pytest.approx((a1 if mode == 1 else a2) ** 2, abs=1e-14)
    assert slope == pytest.approx(dn, abs=1e-9)
    assert curv == pytest.approx(d2n, abs=1e-6)


def test_reduced_t2_coefficient_fails_ratio_test():
    # keeping only -(l1^2 - l2^2) a1^2 + 2 l1 l2 a2^2 in the t^2 term leaves an O(t^2) error
    p = ModelParams.from_rotation(0.15, beta1=0.1, beta2=0.1)
    b = FockBasis(20)
    eig = eigendecompose(build_hamiltonian(p, b))
    s = coherent_state(1.0, 1.0, b)
    n1 = number_op(b, 1)
    exact = lambda t: time_series(s, eig, [n1], [t])[0, 0].real
    l1, l2 = p.lambda1, p.lambda2
    reduced = lambda t: 1 + 2 * (l1 + l2) * t - ((l1**2 - l2**2) - 2 * l1 * l2) * t * t
    good = scaling_table(lambda t: abs(exact(t) - short_time_population(1, 1, p, t)), TIMES)
    bad = scaling_table(lambda t: abs(exact(t) - reduced(t)), TIMES)
    assert all(6 <= r[2] <= 10 for r in good), good
    assert all(r[2] < 5 for r in bad), bad


def test_initial_rates_values():
    p = ModelParams.from_rotation(0.15, omega1=1.0, omega2=0.5)
    r = initial_rates(1.0, 1.0, p)
    assert r["dN1"] == pytest.approx(2 * 0.15 * math.sqrt(2), rel=1e-12)
    assert r["dN1"] / 2 == pytest.approx(0.212132, abs=5e-7)
    assert r["dN2"] == pytest.approx(-2 * 0.15 / math.sqrt(2), rel=1e-12)
    assert r["dN2"] / 2 == pytest.approx(-0.106066, abs=5e-7)
    assert r["dNtot_half"] == pytest.approx(0.5 * (r["dN1"] + r["dN2"]), rel=1e-12)
    assert r["dVarN1"] == r["dN1"] and r["dD1"] == 0.0 and r["dD2"] == 0.0
    zero = initial_rates(0.0, 1.7, p)
    assert all(v == 0.0 for v in zero.values())


def test_ehrenfest_vacuum_and_initial():
    p = ModelParams.from_rotation(0.15, beta1=0.1, beta2=0.1)
    b = FockBasis(16)
    assert all(v == 0.0 for v in ehrenfest_check(fock_state(0, 0, b), p).values())
    rhs = ehrenfest_check(coherent_state(1.0, 1.0, b), p)
    rates = initial_rates(1.0, 1.0, p)
    for k in ("dN1", "dN2", "dNtot_half", "dVarN1", "dVarN2", "dD1", "dD2"):
        assert rhs[k + "_rhs"] == pytest.approx(rates[k], abs=1e-12)


def test_ehrenfest_mid_trajectory(fig_params):
    b = FockBasis(24)
    eig = eigendecompose(build_hamiltonian(fig_params, b))
    s0 = coherent_state(2.0, 2.0, b)
    n1, n2 = number_op(b, 1), number_op(b, 2)
    from kerrdyn.dynamics import evolve
    rhs = ehrenfest_check(evolve(s0, eig, 5.0), fig_params)
    for j, key in enumerate(("dN1_rhs", "dN2_rhs")):
        op = (n1, n2)[j]
        f = lambda t: time_series(s0, eig, [op], [t])[0, 0].real
        fd = centered_difference(f, 5.0, 1e-3)
        assert fd == pytest.approx(rhs[key], rel=1e-5)
    ntot = lambda t: 0.5 * time_series(s0, eig, [n1 + n2], [t])[0, 0].real
    assert centered_difference(ntot, 5.0, 1e-3) == pytest.approx(rhs["dNtot_half_rhs"], rel=1e-5)


def test_scaling_table_shape():
    rows = scaling_table(lambda t: t**3, [0.1, 0.01])
    assert rows[0][0] == 0.1 and rows[0][2] == pytest.approx(8.0)
    assert scaling_table(lambda t: 0.0, [0.1])[0][2] == float("inf")
