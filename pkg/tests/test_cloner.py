import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmimo.cloner import (
    SYMMETRIC_A,
    CloneParams,
    in_cloning_region,
    params_from_a,
    symmetric_clone_state,
    symmetric_fidelity,
    two_clone_state,
    two_clone_state_from_isometry,
)
from qmimo.linalg import PureQubit, fidelity_with_pure, is_valid_state, partial_trace, permute_subsystems

a_values = st.floats(1e-6, 1.0)


def test_symmetric_params():
    p = params_from_a(SYMMETRIC_A)
    assert math.isclose(p.b, SYMMETRIC_A, abs_tol=1e-12)
    assert math.isclose(p.gamma1, 2 / 3, abs_tol=1e-12)
    assert math.isclose(p.gamma2, 2 / 3, abs_tol=1e-12)
    assert p.is_symmetric


def test_degenerate_endpoint():
    p = params_from_a(1.0)
    assert (p.b, p.gamma1, p.gamma2, p.kappa) == (0.0, 1.0, 0.0, 0.0)


def test_half():
    p = params_from_a(0.5)
    assert math.isclose(p.b, (-0.5 + math.sqrt(3.25)) / 2, abs_tol=1e-15)
    assert abs(p.a**2 + p.a * p.b + p.b**2 - 1) <= 1e-12


@pytest.mark.parametrize("a", [0.0, -0.1, 1.0001])
def test_a_out_of_range(a):
    with pytest.raises(ValueError):
        params_from_a(a)


def test_inconsistent_params_rejected():
    with pytest.raises(ValueError):
        CloneParams(a=0.5, b=0.5, gamma1=0.5, gamma2=0.5, kappa=0.25)


@given(a_values)
def test_param_invariants(a):
    p = params_from_a(a)
    assert abs(p.a**2 + p.a * p.b + p.b**2 - 1) <= 1e-12
    assert abs(p.gamma1 - a * (a + p.b)) <= 1e-12
    assert abs(p.gamma2 - p.b * (a + p.b)) <= 1e-12
    assert 0 <= p.kappa <= 1 / 3 + 1e-12


def test_symmetric_marginals():
    psi = PureQubit(1, 0)
    rho = two_clone_state([0, 0, 1], params_from_a(SYMMETRIC_A))
    for keep in (0, 1):
        assert math.isclose(fidelity_with_pure(partial_trace(rho, [keep]), psi), 5 / 6, abs_tol=1e-12)


def test_degenerate_clone_is_product():
    psi = PureQubit.from_angles(1.1, 0.4)
    rho = two_clone_state(psi.bloch, params_from_a(1.0))
    assert np.allclose(rho.data, np.kron(psi.projector, np.eye(2) / 2), atol=1e-12)


@given(a_values, st.floats(0, math.pi), st.floats(-math.pi, math.pi))
def test_isometry_matches_pauli_form(a, theta, phi):
    psi = PureQubit.from_angles(theta, phi)
    p = params_from_a(a)
    ref = two_clone_state_from_isometry(psi, p).data
    assert np.max(np.abs(two_clone_state(psi.bloch, p).data - ref)) <= 1e-12


@given(a_values, st.floats(0, math.pi), st.floats(-math.pi, math.pi))
def test_marginal_fidelities(a, theta, phi):
    psi = PureQubit.from_angles(theta, phi)
    p = params_from_a(a)
    rho = two_clone_state(psi, p)
    assert is_valid_state(rho.data)
    f1, f2 = (fidelity_with_pure(partial_trace(rho, [k]), psi) for k in (0, 1))
    assert abs(f1 - 0.5 * (1 + p.gamma1)) <= 1e-12
    assert abs(f2 - 0.5 * (1 + p.gamma2)) <= 1e-12


@pytest.mark.parametrize("a", [0.3, SYMMETRIC_A, 0.9])
def test_exchange_symmetry_iff_symmetric(a):
    p = params_from_a(a)
    rho = two_clone_state([0.6, 0.0, 0.8], p).data
    swapped = permute_subsystems(rho, (2, 2), [1, 0])
    assert np.allclose(rho, swapped, atol=1e-12) == p.is_symmetric


def test_non_unit_bloch_rejected():
    with pytest.raises(ValueError):
        two_clone_state([0, 0, 0.5], params_from_a(0.5))


@pytest.mark.parametrize("m,expected", [(1, 1.0), (2, 5 / 6), (3, 7 / 9), (4, 3 / 4)])
def test_symmetric_clone_fidelity(m, expected):
    psi = PureQubit.from_angles(0.9, -2.0)
    rho = symmetric_clone_state(psi, m)
    assert is_valid_state(rho.data)
    for q in range(m):
        assert abs(fidelity_with_pure(partial_trace(rho, [q]), psi) - expected) <= 1e-10
    assert math.isclose(symmetric_fidelity(1, m), expected, abs_tol=1e-15)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_symmetric_clone_permutation_invariant(m):
    rho = symmetric_clone_state(PureQubit.from_angles(2.0, 0.3), m).data
    for perm in itertools.permutations(range(m)):
        assert np.max(np.abs(permute_subsystems(rho, (2,) * m, perm) - rho)) <= 1e-12


def test_symmetric_clone_unsupported():
    with pytest.raises(ValueError):
        symmetric_clone_state(PureQubit(1, 0), 5)


def test_symmetric_fidelity_examples():
    assert math.isclose(symmetric_fidelity(1, 2), 5 / 6)
    assert math.isclose(symmetric_fidelity(2, 3), 11 / 12)
    for k in range(1, 6):
        assert math.isclose(symmetric_fidelity(k, k), 1.0)
    with pytest.raises(ValueError):
        symmetric_fidelity(3, 2)


def test_region_examples():
    assert in_cloning_region(5 / 6, 5 / 6)
    assert in_cloning_region(1.0, 0.5)
    assert not in_cloning_region(0.95, 0.95)
    with pytest.raises(ValueError):
        in_cloning_region(1.2, 0.5)


def _boundary_residual(fa, fb):
    da, db = 1 - fa, 1 - fb
    return math.sqrt(da * db) - (0.5 - da - db)


def test_boundary_sweep():
    for a in np.linspace(0.01, 1.0, 100):
        fa, fb = params_from_a(a).fidelities
        assert abs(_boundary_residual(fa, fb)) <= 1e-10
        assert in_cloning_region(fa, fb)
