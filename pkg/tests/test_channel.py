import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmimo.channel import (
    MimoChannelSpec,
    apply_mimo_channel,
    apply_superoperator_batch,
    block_swap_permutation,
    channel_superoperator,
    cptp_check,
    crossing_matrix,
    crossing_probability,
    cswap_layer,
    depolarize,
    layer_boxes,
    permutation_unitary,
    sample_crossing_matrix,
    stream_marginal,
)
from qmimo.haar import haar_average
from qmimo.linalg import DensityMatrix, bloch_to_density, is_valid_state, tensor_product

from conftest import random_state

P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])
MIXED = np.eye(2) / 2
etas_st = st.floats(0, 0.5)
lams_st = st.floats(0, 1)


def test_depolarize_examples(rng):
    rho = random_state(rng, 2)
    assert np.array_equal(depolarize(rho, 0, 0.0), rho)
    out = depolarize(rho, 1, 1.0)
    assert np.allclose(stream_marginal(out, 1), MIXED, atol=1e-14)
    assert np.allclose(depolarize(P0, 0, 0.3), np.diag([0.85, 0.15]), atol=1e-15)


def test_depolarize_scales_bloch(rng):
    rho = random_state(rng, 2)
    out = depolarize(rho, 0, 0.4)
    before, after = stream_marginal(rho, 0), stream_marginal(out, 0)
    assert np.allclose(after - MIXED, 0.6 * (before - MIXED), atol=1e-14)
    assert np.allclose(stream_marginal(out, 1), stream_marginal(rho, 1), atol=1e-14)


def test_depolarize_errors():
    with pytest.raises(ValueError):
        depolarize(P0, 0, 1.5)
    with pytest.raises(IndexError):
        depolarize(P0, 1, 0.1)


def test_cswap_examples(rng):
    rho, sigma = random_state(rng, 1), random_state(rng, 1)
    prod = np.kron(rho, sigma)
    assert np.array_equal(cswap_layer(prod, [((0,), (1,))], 0.0), prod)
    half = cswap_layer(prod, [((0,), (1,))], 0.5)
    assert np.allclose(half, 0.5 * (prod + np.kron(sigma, rho)), atol=1e-15)
    out = cswap_layer(np.kron(P0, MIXED), [((0,), (1,))], 0.245)
    assert np.allclose(stream_marginal(out, 0), np.diag([0.8775, 0.1225]), atol=1e-15)


def test_cswap_errors():
    with pytest.raises(ValueError):
        cswap_layer(np.eye(8) / 8, [((0,), (1,)), ((1,), (2,))], 0.1)
    with pytest.raises(ValueError):
        cswap_layer(np.eye(4) / 4, [((0,), (1,))], 0.6)


def test_identity_channel(rng):
    for m in (1, 2):
        rho = random_state(rng, 2**m)
        assert np.allclose(apply_mimo_channel(rho, MimoChannelSpec.identity(m)), rho, atol=1e-15)


def test_single_layer_mixture():
    spec = MimoChannelSpec.two_by_two(0.245, 0.0, 0.0)
    out = apply_mimo_channel(np.kron(P0, P1), spec)
    assert np.allclose(out, 0.755 * np.kron(P0, P1) + 0.245 * np.kron(P1, P0), atol=1e-15)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_mimo_channel(np.eye(2) / 2, MimoChannelSpec.uniform(1, 0.1, 0.1))


@pytest.mark.parametrize(
    "etas,lams",
    [((0.6,), (0.1, 0.1)), ((0.1,), (0.1,)), ((0.1,), (0.1, 1.2)), ((0.1, 0.1, 0.1), (0.0,) * 8)],
)
def test_spec_validation(etas, lams):
    with pytest.raises(ValueError):
        MimoChannelSpec(etas, lams)


def test_crossing_examples():
    assert np.allclose(crossing_matrix([0.245]), [[0.755, 0.245], [0.245, 0.755]], atol=1e-15)
    assert np.isclose(crossing_probability(1, 2, [0.3, 0.2]), 0.06, atol=1e-15)
    for j in range(4):
        assert np.isclose(crossing_probability(j, j, [0.3, 0.2]), 0.7 * 0.8, atol=1e-15)
    with pytest.raises(IndexError):
        crossing_probability(0, 4, [0.3, 0.2])


def test_crossing_monte_carlo():
    rng = np.random.default_rng(7)
    mc = sample_crossing_matrix([0.3, 0.2], 100_000, rng)
    assert abs(mc[1, 2] - 0.06) <= 1e-2
    assert np.max(np.abs(mc - crossing_matrix([0.3, 0.2]))) <= 1e-2


@given(st.lists(etas_st, min_size=1, max_size=2))
def test_crossing_rows(etas):
    P = crossing_matrix(etas)
    assert np.max(np.abs(P.sum(axis=1) - 1)) <= 1e-12
    assert np.array_equal(P, P.T)
    assert P.min() >= 0 and P.max() <= 1


def test_crossing_matches_layer_circuit():
    # path probability read off the exact superoperator on basis-state labels
    etas = (0.3, 0.2)
    spec = MimoChannelSpec(etas, (0.0,) * 4)
    for j in range(4):
        rho = tensor_product(*[P1 if q == j else P0 for q in range(4)])
        out = apply_mimo_channel(rho, spec)
        for k in range(4):
            assert np.isclose(stream_marginal(out, k)[1, 1], crossing_probability(j, k, etas), atol=1e-14)


@pytest.mark.parametrize(
    "spec",
    [
        MimoChannelSpec.identity(1),
        MimoChannelSpec.two_by_two(0.245, 0.1, 0.2),
        MimoChannelSpec.uniform(2, 0.245, 0.1),
        MimoChannelSpec((0.5, 0.0), (1.0, 0.0, 0.3, 0.9)),
    ],
)
def test_cptp(spec):
    rep = cptp_check(lambda rho: apply_mimo_channel(rho, spec), spec.n_streams)
    assert rep.passed
    assert rep.min_eigenvalue >= -1e-9
    assert rep.tp_error <= 1e-10


def test_cptp_detects_non_tp():
    rep = cptp_check(lambda rho: 0.5 * rho, 1)
    assert rep.completely_positive and not rep.trace_preserving
    rep = cptp_check(lambda rho: rho.T, 1)
    assert not rep.completely_positive


def test_valid_state_sweep():
    rng = np.random.default_rng(99)
    specs = [
        MimoChannelSpec.two_by_two(*rng.uniform(0, 0.5, 1), *np.sort(rng.uniform(0, 1, 2))),
        MimoChannelSpec(tuple(rng.uniform(0, 0.5, 2)), tuple(rng.uniform(0, 1, 4))),
    ]
    for spec in specs:
        n = spec.n_streams
        states = np.array([random_state(rng, n, rank=int(rng.integers(1, 3))) for _ in range(500)])
        out = apply_superoperator_batch(states, channel_superoperator(spec))
        assert all(is_valid_state(s) for s in out)


def test_superoperator_matches_direct(rng):
    spec = MimoChannelSpec((0.3, 0.1), (0.1, 0.2, 0.3, 0.4))
    rho = random_state(rng, 4)
    batch = apply_superoperator_batch(rho[None], channel_superoperator(spec))[0]
    assert np.allclose(batch, apply_mimo_channel(rho, spec), atol=1e-13)


@given(st.tuples(etas_st, etas_st), st.tuples(lams_st, lams_st, lams_st, lams_st), st.integers(0, 3))
def test_marginal_consistency(etas, lams, j):
    rng = np.random.default_rng(j)
    rho = random_state(rng, 1)
    spec = MimoChannelSpec(etas, lams)
    inp = tensor_product(*[rho if q == j else MIXED for q in range(4)])
    out = apply_mimo_channel(inp, spec)
    for k in range(4):
        w = crossing_probability(j, k, etas) * (1 - lams[k])
        assert np.max(np.abs(stream_marginal(out, k) - (w * rho + (1 - w) * MIXED))) <= 1e-10


def test_permutation_covariance(rng):
    spec = MimoChannelSpec.uniform(2, 0.3, 0.2)
    rho = random_state(rng, 4)
    gens = [block_swap_permutation(((0, 1), (2, 3)), 4), [1, 0, 3, 2]]
    for perm in gens:
        U = permutation_unitary(perm)
        lhs = apply_mimo_channel(U @ rho @ U.T, spec)
        rhs = U @ apply_mimo_channel(rho, spec) @ U.T
        assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_layer_boxes():
    assert layer_boxes(1) == [[((0,), (1,))]]
    assert layer_boxes(2) == [[((0,), (1,)), ((2,), (3,))], [((0, 1), (2, 3))]]


def test_stream_fidelity_vs_permutation_sampling():
    eta, lam = 0.245, 0.1
    spec = MimoChannelSpec.uniform(2, eta, lam)
    sup = channel_superoperator(spec)
    pad = np.eye(8) / 8

    def fid(r):
        rho = np.einsum("pij,kl->pikjl", bloch_to_density(r), pad).reshape(len(r), 16, 16)
        out = apply_superoperator_batch(rho, sup)
        marg = np.array([stream_marginal(s, 0) for s in out])
        return np.einsum("pij,pji->p", marg, bloch_to_density(r)).real

    exact = haar_average(fid).value
    stay = sample_crossing_matrix([eta, eta], 100_000, np.random.default_rng(3))[0, 0]
    assert abs(exact - 0.5 * (1 + stay * (1 - lam))) <= 1e-3


def test_density_matrix_passthrough():
    rho = DensityMatrix(np.kron(P0, MIXED), (2, 2))
    out = apply_mimo_channel(rho, MimoChannelSpec.two_by_two(0.1, 0.2, 0.3))
    assert isinstance(out, DensityMatrix) and out.dims == (2, 2)
