import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnvp.errors import ValidationError
from qnvp.phase_space import (
    DistField,
    FieldProfile,
    PhaseGrid,
    kinetic_energy,
    maxwellian,
    moment_current,
    moment_density,
    read_field_csv,
    read_profile_csv,
    torus_distance,
    write_field_csv,
    write_profile_csv,
)


def uniform_maxwellian(grid, u=0.0):
    x, v = grid.mesh()
    return DistField(grid, np.ones_like(x) * maxwellian(v, u), 0.0)


def test_grid_geometry(unit_grid):
    g = unit_grid
    assert g.dx == pytest.approx(1 / 32)
    assert g.x[0] == 0 and g.x[-1] == pytest.approx(1 - g.dx)
    assert g.v[0] == pytest.approx(-8 + g.dv / 2)
    assert np.allclose(g.v, -g.v[::-1])
    with pytest.raises(ValidationError):
        PhaseGrid(0, 8)


def test_density_of_uniform_maxwellian(unit_grid):
    rho = moment_density(uniform_maxwellian(unit_grid))
    assert np.abs(rho.values - 1).max() <= 1e-12


def test_density_of_zero_field(unit_grid):
    f = DistField(unit_grid, np.zeros((32, 128)), 0.0)
    assert np.all(moment_density(f).values == 0)
    assert kinetic_energy(f) == 0


def test_density_of_cosine_perturbation(unit_grid):
    x, v = unit_grid.mesh()
    f = DistField(unit_grid, (1 + 0.5 * np.cos(2 * np.pi * x)) * maxwellian(v), 0.0)
    rho = moment_density(f).values
    assert np.abs(rho - (1 + 0.5 * np.cos(2 * np.pi * unit_grid.x))).max() <= 1e-10


def test_current(unit_grid):
    assert np.abs(moment_current(uniform_maxwellian(unit_grid)).values).max() <= 1e-14
    g = PhaseGrid(8, 256, 1.0, 10.0)
    j = moment_current(uniform_maxwellian(g, 1.5)).values
    assert np.abs(j - 1.5).max() <= 1e-10


def test_current_of_single_velocity_cell(unit_grid):
    vals = np.zeros((32, 128))
    vals[:, 100] = 3.0
    f = DistField(unit_grid, vals, 0.0)
    j = moment_current(f).values
    rho = moment_density(f).values
    assert np.allclose(j, rho * unit_grid.v[100], rtol=1e-14)
    assert np.allclose(rho, 3.0 * unit_grid.dv)


def test_kinetic_energy(unit_grid):
    assert kinetic_energy(uniform_maxwellian(unit_grid)) == pytest.approx(0.5, abs=1e-8)
    vals = np.zeros((32, 128))
    i = 90
    i_mirror = 127 - i
    vals[:, [i, i_mirror]] = 0.5 / unit_grid.dv
    v0 = unit_grid.v[i]
    assert kinetic_energy(DistField(unit_grid, vals, 0.0)) == pytest.approx(v0**2 / 2, rel=1e-13)


@pytest.mark.parametrize("x1,x2,d", [(0.1, 0.9, 0.2), (0.3, 0.3, 0.0), (0.0, 0.5, 0.5)])
def test_torus_distance_examples(x1, x2, d):
    assert torus_distance(x1, x2, 1.0) == pytest.approx(d, abs=1e-15)


def test_torus_distance_is_a_metric():
    rng = np.random.default_rng(1)
    a, b, c = rng.uniform(-3, 3, (3, 10_000))
    dab, dbc, dac = torus_distance(a, b), torus_distance(b, c), torus_distance(a, c)
    assert np.all(dab == torus_distance(b, a))
    assert np.all(dac <= dab + dbc + 1e-15)
    assert np.all((dab >= 0) & (dab <= 0.5))


def test_mass_matches_density_integral(unit_grid):
    rng = np.random.default_rng(2)
    f = DistField(unit_grid, rng.random((32, 128)), 0.0)
    assert moment_density(f).values.sum() * unit_grid.dx == pytest.approx(f.mass, rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31 - 1))
def test_moments_are_linear(alpha, beta, seed):
    g = PhaseGrid(8, 16, 1.0, 4.0)
    rng = np.random.default_rng(seed)
    a, b = rng.random((2, 8, 16))
    fa, fb = DistField(g, a, 0.0), DistField(g, b, 0.0)
    fab = DistField(g, alpha * a + beta * b, 0.0)
    for op in (lambda f: moment_density(f).values, lambda f: moment_current(f).values):
        lhs = op(fab)
        rhs = alpha * op(fa) + beta * op(fb)
        assert np.abs(lhs - rhs).max() <= 1e-13 * max(1.0, np.abs(rhs).max())


def test_csv_round_trip(tmp_path, unit_grid):
    rng = np.random.default_rng(3)
    f = DistField(unit_grid, rng.random((32, 128)), 0.25)
    write_field_csv(tmp_path / "f.csv", f)
    g = read_field_csv(tmp_path / "f.csv")
    assert g.grid == unit_grid and g.time == 0.25
    assert np.array_equal(g.values, f.values)
    assert (tmp_path / "f.csv").read_text().startswith("# t=0.25 nx=32 nv=128 L=1.0 vmax=8.0")
    e = rng.standard_normal(32)
    p = FieldProfile(unit_grid, e - e.mean(), "E", 0.5)
    write_profile_csv(tmp_path / "E.csv", p)
    q = read_profile_csv(tmp_path / "E.csv")
    assert q.kind == "E" and np.array_equal(q.values, p.values)
