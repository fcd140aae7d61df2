import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnvp.errors import IllConditioned, MissingRun, ValidationError
from qnvp.fluid import FluidEnsemble, FluidTrajectory
from qnvp.phase_space import PhaseGrid
from qnvp.uq import (
    ASetParams,
    FluidRun,
    G_epsilon,
    RandomInput,
    aset_membership,
    build_ensemble,
    differentiation_matrix,
    z_derivative,
)

UNIFORM = RandomInput("amplitude", (-1.0, 1.0))
GRID = PhaseGrid(16, 8, 1.0, 8.0)


def test_gauss_legendre_two_nodes():
    ens = build_ensemble(UNIFORM, 2)
    assert np.allclose(ens.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    assert np.allclose(ens.weights, [1.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("rule", ["gauss-legendre", "chebyshev-lobatto"])
@pytest.mark.parametrize("n", [2, 3, 7, 16])
def test_weights_sum_to_support_length(rule, n):
    ens = build_ensemble(RandomInput("drift", (0.0, 3.0)), n, rule)
    assert ens.weights.sum() == pytest.approx(3.0, abs=1e-12)
    assert np.all((ens.nodes >= 0) & (ens.nodes <= 3))


def test_single_node_rejected():
    with pytest.raises(ValidationError):
        build_ensemble(UNIFORM, 1)


def test_lobatto_middle_node_is_zero():
    ens = build_ensemble(UNIFORM, 5, "chebyshev-lobatto")
    assert ens.nodes[2] == 0.0 and ens.index_of(0.0) == 2


def test_families():
    assert UNIFORM(1.0) == pytest.approx(0.55)
    assert RandomInput("drift", base=0.0, slope=2.0)(0.5) == pytest.approx(1.0)


def test_derivatives_of_z_squared():
    ens = build_ensemble(UNIFORM, 5, "chebyshev-lobatto")
    vals = ens.nodes**2
    assert abs(z_derivative(vals, ens, 1, 0.0)) <= 1e-12
    assert z_derivative(vals, ens, 2, 0.0) == pytest.approx(2.0, abs=1e-10)


def test_third_derivative_of_exponential():
    ens = build_ensemble(UNIFORM, 16, "chebyshev-lobatto")
    assert z_derivative(np.exp(ens.nodes), ens, 3, 0.2) == pytest.approx(np.exp(0.2), abs=1e-8)


def test_derivative_of_field_valued_samples():
    ens = build_ensemble(UNIFORM, 6, "chebyshev-lobatto")
    x = np.linspace(0, 1, 5)
    vals = np.sin(ens.nodes)[:, None] * x[None, :]
    d = z_derivative(vals, ens, 1, 0.3)
    assert d.shape == (5,)
    assert np.allclose(d, np.cos(0.3) * x, atol=1e-4)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 16), st.sampled_from(["chebyshev-lobatto", "gauss-legendre"]), st.data())
def test_polynomials_are_differentiated_exactly(n, rule, data):
    ens = build_ensemble(UNIFORM, n, rule)
    coeffs = data.draw(st.lists(st.floats(-2, 2), min_size=n, max_size=n))
    k = data.draw(st.integers(1, min(3, n - 1)))
    at = data.draw(st.floats(-1, 1))
    p = np.polynomial.Polynomial(coeffs)
    scale = max(1.0, np.abs(p.deriv(k)(np.linspace(-1, 1, 41))).max())
    assert abs(z_derivative(p(ens.nodes), ens, k, at) - p.deriv(k)(at)) <= 1e-10 * scale


def test_differentiation_matrix_kills_constants():
    D = differentiation_matrix(np.cos(np.pi * np.arange(9) / 8))
    assert np.abs(D @ np.ones(9)).max() <= 1e-13


def test_too_many_nodes():
    ens = build_ensemble(UNIFORM, 41, "chebyshev-lobatto")
    with pytest.raises(IllConditioned):
        z_derivative(ens.nodes, ens, 1, 0.0)


def test_aset_params_validation():
    with pytest.raises(ValidationError):
        ASetParams(1.0, 2.0, 0.0)
    with pytest.raises(ValidationError):
        ASetParams(0.5, 1.0, 0.0)


def _ensemble(rho, u, eps=0.1):
    rho, u = np.atleast_2d(rho), np.atleast_2d(u)
    n = rho.shape[0]
    return FluidEnsemble(GRID, np.arange(n, dtype=float), np.full(n, 1 / n), rho, u, eps)


def _traj(*states):
    return FluidTrajectory([0.1 * i for i in range(len(states))], list(states), [])


def _run(scale):
    x = GRID.x
    eps_state = _ensemble(1 + scale * 0.1 * np.cos(2 * np.pi * x), scale * np.sin(2 * np.pi * x))
    lim_state = _ensemble(np.ones(16), scale * 0.9 * np.sin(2 * np.pi * x), 0.0)
    return FluidRun(_traj(eps_state), _traj(lim_state))


def test_aset_membership_properties():
    runs = {(z, e): _run(1 + 0.2 * z) for z in (-1.0, 0.0, 1.0) for e in (0.2, 0.1)}
    ms = [1.01, 1.1, 1.3, 2.0]
    members = [aset_membership(runs, ASetParams(0.5, M, 0.0), [0.2, 0.1]) for M in ms]
    for m in members:
        assert m[0.0]
    for small, big in zip(members, members[1:]):
        assert all(big[z] for z in small if small[z])
    assert members[0] == {-1.0: True, 0.0: True, 1.0: False}
    assert all(members[-1].values())
    coarse = aset_membership(runs, ASetParams(0.15, 1.1, 0.0), [0.2, 0.1])
    assert all(coarse[z] for z in members[1] if members[1][z])


def test_aset_missing_run():
    runs = {(0.0, 0.1): _run(1.0), (1.0, 0.2): _run(1.0)}
    with pytest.raises(MissingRun):
        aset_membership(runs, ASetParams(0.5, 2.0, 0.0), [0.2, 0.1])


def test_G_epsilon_examples():
    x = GRID.x
    s = _ensemble(1 + 0.1 * np.cos(2 * np.pi * x), 0.3 * np.sin(2 * np.pi * x))
    assert G_epsilon(_traj(s), _traj(s)) == 0.0
    c = 0.04
    eps_state = _ensemble(np.stack([np.full(16, 1 + c), np.full(16, 1 - c)]), np.zeros((2, 16)))
    lim_state = _ensemble(np.ones((2, 16)), np.zeros((2, 16)), 0.0)
    assert G_epsilon(_traj(eps_state), _traj(lim_state)) == pytest.approx(c / 2, abs=1e-15)
    assert G_epsilon(_traj(eps_state), _traj(lim_state)) >= 0
