import numpy as np
import pytest

from qnvp.errors import GridMismatch, ValidationError
from qnvp.phase_space import DistField, PhaseGrid, maxwellian
from qnvp.scaling import (
    ScalingMap,
    dv_zero_fraction,
    field_rescale_identity_check,
    quasineutral_residual,
    rescale_solution,
)
from qnvp.uq import RandomInput, build_ensemble
from qnvp.vlasov import SolverConfig, evolve, landau_initial

L4PI = 4 * np.pi


def landau_run(grid, times, alpha=0.05, dt=0.05):
    return evolve(landau_initial(alpha, 1, 0.0, grid), SolverConfig(grid, dt, times[-1]), times)


def test_map_construction():
    g = PhaseGrid(16, 32, 1.0, 8.0)
    smap = ScalingMap.from_epsilon(0.25, g)
    assert smap.N == 4 and smap.epsilon * smap.N == 1.0
    assert smap.target.nx == 64 and smap.exact()
    with pytest.raises(ValidationError):
        ScalingMap.from_epsilon(0.3, g)
    with pytest.raises(GridMismatch):
        ScalingMap(2, g, PhaseGrid(32, 16, 1.0, 8.0))


def test_epsilon_one_is_identity():
    g = PhaseGrid(16, 32, L4PI, 8.0)
    tr = landau_run(g, [0.5, 1.0])
    h = rescale_solution(tr, ScalingMap.from_epsilon(1.0, g))
    assert h.times == tr.times
    for a, b, ea, eb in zip(h.fields, tr.fields, h.efields, tr.efields):
        assert np.array_equal(a.values, b.values) and np.array_equal(ea.values, eb.values)


def test_x_uniform_state():
    g = PhaseGrid(8, 32, 1.0, 8.0)
    _, v = g.mesh()
    f = DistField(g, np.ones((8, 32)) * maxwellian(v), 0.0)
    tr = evolve(f, SolverConfig(g, 0.1, 0.2), [0.1, 0.2])
    h = rescale_solution(tr, ScalingMap.from_epsilon(0.5, g))
    assert h.times == pytest.approx([0.0, 0.05, 0.1])
    for hf, f in zip(h.fields, tr.fields):
        assert np.array_equal(hf.values[:8], f.values) and np.array_equal(hf.values[8:], f.values)
    pde, gauss = quasineutral_residual(h.fields, h.efields, 0.5)
    assert pde <= 1e-12 and gauss <= 1e-12


def test_mass_is_exact_and_source_is_recovered():
    g = PhaseGrid(16, 64, L4PI, 8.0)
    tr = landau_run(g, [0.5, 1.0])
    smap = ScalingMap.from_epsilon(1 / 3, g)
    h = rescale_solution(tr, smap)
    for hf, f in zip(h.fields, tr.fields):
        assert abs(hf.mass - f.mass) <= 1e-13 * f.mass
        assert np.array_equal(hf.values[::3], f.values[smap.source_index()[::3]])
        assert np.array_equal(hf.values[: 16], f.values)


def test_non_aligned_target_needs_interpolation():
    g = PhaseGrid(16, 32, 1.0, 8.0)
    smap = ScalingMap.from_epsilon(0.5, g, target_nx=24)
    assert not smap.exact()
    with pytest.raises(GridMismatch):
        smap.pull(np.zeros(16), interpolate=False)
    vals = np.sin(2 * np.pi * g.x)
    assert np.abs(smap.pull(vals) - np.sin(4 * np.pi * smap.target.x)).max() <= 1e-12


def test_identity_is_exact_for_rescaled_fields():
    g = PhaseGrid(16, 64, L4PI, 8.0)
    tr = landau_run(g, [0.5, 1.0])
    smap = ScalingMap.from_epsilon(0.25, g)
    h = rescale_solution(tr, smap)
    En = np.stack([E.values for E in tr.efields])[None]
    Eq = np.stack([E.values for E in h.efields])[None]
    assert field_rescale_identity_check(En, Eq, 0, 0, smap)["abs_error"] == 0.0


def manufactured(x, t, z, L):
    """A smooth field, polynomial in z, with zero mean in x."""
    return ((1 + 0.3 * z + 0.2 * z**2) * np.sin(2 * np.pi * x / L) * np.exp(-t)
            + 0.1 * z**2 * np.cos(4 * np.pi * x / L + 0.3) * np.exp(-2 * t))


@pytest.mark.parametrize("eps", [1.0, 0.5, 0.25])
@pytest.mark.parametrize("l", [0, 1, 2])
@pytest.mark.parametrize("k", [0, 1, 2])
def test_identity_on_manufactured_fields(eps, l, k):
    g = PhaseGrid(32, 8, 1.0, 8.0)
    smap = ScalingMap.from_epsilon(eps, g)
    ens = build_ensemble(RandomInput("amplitude", (-1.0, 1.0)), 5, "chebyshev-lobatto")
    times = np.array([0.2, 0.5, 1.0])
    En = np.stack([[manufactured(g.x, t, z, 1.0) for t in times] for z in ens.nodes])
    xq = smap.target.x
    Eq = np.stack([[manufactured(xq / eps, t, z, 1.0) / eps for t in times] for z in ens.nodes])
    r = field_rescale_identity_check(En, Eq, l, k, smap, ens, at=0.3)
    assert r["rel_error"] <= 1e-8
    if l == 0:
        assert r["x0_rel_error"] <= 1e-8


def test_identity_needs_aligned_series():
    g = PhaseGrid(8, 8, 1.0, 8.0)
    smap = ScalingMap.from_epsilon(0.5, g)
    with pytest.raises(ValidationError):
        field_rescale_identity_check(np.zeros((1, 2, 8)), np.zeros((1, 3, 16)), 0, 0, smap)
    with pytest.raises(ValidationError):
        field_rescale_identity_check(np.zeros((2, 2, 8)), np.zeros((2, 2, 16)), 0, 1, smap)


def test_residual_is_second_order():
    residuals = []
    for nx, nv, dt in ((32, 128, 0.04), (64, 256, 0.02)):
        g = PhaseGrid(nx, nv, L4PI, 8.0)
        times = [round(1.0 + i * dt, 12) for i in range(5)]
        h = rescale_solution(landau_run(g, times, dt=dt), ScalingMap.from_epsilon(0.5, g))
        pde, gauss = quasineutral_residual(h.fields[1:], h.efields[1:], 0.5)
        assert gauss <= 1e-10
        residuals.append(pde)
    assert np.log2(residuals[0] / residuals[1]) == pytest.approx(2.0, abs=0.3)


def test_residual_needs_three_equally_spaced_snapshots():
    g = PhaseGrid(8, 16, L4PI, 8.0)
    tr = landau_run(g, [0.05, 0.15], dt=0.05)
    with pytest.raises(ValidationError):
        quasineutral_residual(tr.fields[:2], tr.efields[:2], 1.0)
    with pytest.raises(ValidationError):
        quasineutral_residual(tr.fields, tr.efields, 1.0)


def test_dv_zero_fraction():
    g = PhaseGrid(4, 32, 1.0, 8.0)
    _, v = g.mesh()
    assert dv_zero_fraction(DistField(g, np.ones((4, 32)), 0.0)) == 1.0
    assert dv_zero_fraction(DistField(g, maxwellian(v) + 0 * v, 0.0), 1e-300) == 0.0
