"""Strang-split semi-Lagrangian solver for the 1D1V Vlasov-Poisson system.

The Gauss law is eps^2 dE/dx = rho - 1 with zero-mean E; eps = 1 is the
normal regime, eps < 1 the quasineutral one.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BadSnapshotTime, BlowUp, NonNeutral, ValidationError
from .interp import shift_periodic, shift_zero_extended
from .phase_space import (
    DistField,
    FieldProfile,
    PhaseGrid,
    kinetic_energy,
    maxwellian,
    moment_density,
)

NEUTRALITY_TOL = 1e-8
BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class SolverConfig:
    grid: PhaseGrid
    dt: float
    t_end: float
    epsilon: float = 1.0
    interpolation_order: int = 3
    with_field: bool = True

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValidationError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not self.dt > 0 or self.t_end < 0:
            raise ValidationError("dt must be positive and t_end nonnegative")
        if self.interpolation_order != 3:
            raise ValidationError("only cubic interpolation is implemented")
        if self.dt > self.grid.dx / self.grid.vmax:
            warnings.warn(
                f"dt={self.dt} exceeds dx/vmax={self.grid.dx / self.grid.vmax:.3g}",
                stacklevel=2,
            )
        if self.epsilon < 1 and self.dt > self.epsilon / 10:
            warnings.warn(
                f"dt={self.dt} does not resolve the plasma period (eps/10={self.epsilon / 10:.3g})",
                stacklevel=2,
            )

    @property
    def n_steps(self) -> int:
        return _steps_for(self.t_end, self.dt)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    efields: list = field(default_factory=list)
    # rows of (time, mass, kinetic energy, field energy, min f)
    diagnostics: list = field(default_factory=list)
    epsilon: float = 1.0

    def snapshot(self, t: float):
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(t)
        return self.fields[i], self.efields[i]

    def diagnostics_array(self) -> np.ndarray:
        return np.array(self.diagnostics, dtype=float).reshape(-1, 5)


def _steps_for(t: float, dt: float) -> int:
    n = round(t / dt)
    if abs(n * dt - t) > 1e-12 * max(1.0, abs(t)):
        raise BadSnapshotTime(f"time {t} is not a multiple of dt={dt}")
    return n


def poisson_solve(rho: FieldProfile, epsilon: float = 1.0) -> FieldProfile:
    """Zero-mean E with eps^2 dE/dx = rho - 1, solved spectrally."""
    r = rho.values
    if abs(r.mean() - 1.0) > NEUTRALITY_TOL:
        raise NonNeutral(f"mean density {r.mean():.12g} != 1")
    g = rho.grid
    rk = np.fft.rfft(r - 1.0)
    kk = 2 * np.pi * np.arange(rk.size) / g.length
    ek = np.zeros_like(rk)
    ek[1:] = rk[1:] / (1j * kk[1:] * epsilon**2)
    e = np.fft.irfft(ek, n=g.nx)
    return FieldProfile(g, e - e.mean(), "E", rho.time)


def field_energy(E: FieldProfile, epsilon: float = 1.0) -> float:
    return float(0.5 * epsilon**2 * (E.values**2).sum() * E.grid.dx)


def advect_x(f: DistField, dt: float) -> DistField:
    """Free streaming f(x, v) <- f(x - v dt, v), periodic in x."""
    g = f.grid
    vals = shift_periodic(f.values, g.v * dt / g.dx, axis=0)
    return f.replace(values=vals, time=max(f.time + dt, 0.0))


def advect_v(f: DistField, E: np.ndarray, dt: float) -> DistField:
    """Acceleration f(x, v) <- f(x, v - E(x) dt); zero beyond +-vmax."""
    g = f.grid
    vals = shift_zero_extended(f.values, np.asarray(E) * dt / g.dv, axis=1)
    return f.replace(values=vals)


def electric_field(f: DistField, epsilon: float = 1.0) -> FieldProfile:
    return poisson_solve(moment_density(f), epsilon)


def step(f: DistField, cfg: SolverConfig, ref_max: float | None = None):
    """One Strang step; returns the new state and the field used for the kick."""
    half = 0.5 * cfg.dt
    f1 = advect_x(f, half)
    if cfg.with_field:
        E = electric_field(f1, cfg.epsilon)
        f1 = advect_v(f1, E.values, cfg.dt)
    else:
        E = FieldProfile(f.grid, np.zeros(f.grid.nx), "E", f1.time)
    f2 = advect_x(f1, half)
    f2 = f2.replace(time=f.time + cfg.dt)
    ref = float(np.abs(f.values).max()) if ref_max is None else ref_max
    if np.abs(f2.values).max() > BLOWUP_FACTOR * ref:
        raise BlowUp(f"max|f| grew beyond {BLOWUP_FACTOR:g} x initial at t={f2.time:.4g}")
    return f2, E


def _diag_row(f: DistField, E: FieldProfile, eps: float):
    return (f.time, f.mass, kinetic_energy(f), field_energy(E, eps), f.min_value)


def evolve(f0: DistField, cfg: SolverConfig, snapshot_times=()) -> Trajectory:
    want = sorted({_steps_for(t, cfg.dt) for t in snapshot_times if t >= 0} | {0})
    n_end = cfg.n_steps
    for t in snapshot_times:
        if t < 0 or t > cfg.t_end + 1e-12:
            raise BadSnapshotTime(f"snapshot time {t} outside [0, {cfg.t_end}]")
    field_of = (
        (lambda f: electric_field(f, cfg.epsilon))
        if cfg.with_field
        else (lambda f: FieldProfile(f.grid, np.zeros(f.grid.nx), "E", f.time))
    )
    traj = Trajectory(epsilon=cfg.epsilon)
    f = f0
    ref = float(np.abs(f0.values).max())
    E = field_of(f)
    traj.diagnostics.append(_diag_row(f, E, cfg.epsilon))
    traj.times.append(f.time)
    traj.fields.append(f)
    traj.efields.append(E)
    wanted = set(want)
    for n in range(1, n_end + 1):
        f, _ = step(f, cfg, ref_max=ref)
        f = f.replace(time=f0.time + n * cfg.dt)
        E = field_of(f)
        traj.diagnostics.append(_diag_row(f, E, cfg.epsilon))
        if n in wanted:
            traj.times.append(f.time)
            traj.fields.append(f)
            traj.efields.append(E)
    return traj


def landau_initial(alpha: float, wavenumber_index: int, z_shift: float, grid: PhaseGrid) -> DistField:
    """Perturbed Maxwellian (1 + alpha cos(2 pi k x / L)) M(v - z_shift).

    Normalised on the grid so that the mean density is exactly 1; on the
    unit torus this is unit total mass.
    """
    if not abs(alpha) < 1:
        raise ValidationError("|alpha| must be < 1")
    if wavenumber_index < 1:
        raise ValidationError("wavenumber index must be positive")
    x, v = grid.mesh()
    f = (1 + alpha * np.cos(2 * np.pi * wavenumber_index * x / grid.length)) * maxwellian(v, z_shift)
    mean_rho = f.sum() * grid.dv / grid.nx
    return DistField(grid, f / mean_rho, 0.0)


def field_energy_series(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    d = traj.diagnostics_array()
    return d[:, 0], d[:, 3]


def free_stream_exact(f: DistField, t: float) -> DistField:
    """f(x - v t, v) by an exact Fourier shift in x (trigonometric interpolant)."""
    g = f.grid
    c = np.fft.rfft(f.values, axis=0)
    kk = 2 * np.pi * np.arange(c.shape[0]) / g.length
    phase = np.exp(-1j * np.outer(kk, g.v) * t)
    if g.nx % 2 == 0:
        phase[-1] = np.cos(kk[-1] * g.v * t)
    vals = np.fft.irfft(c * phase, n=g.nx, axis=0)
    return f.replace(values=vals, time=max(f.time + t, 0.0))


def fit_damping_rate(times, field_energy, t_min: float = 0.0, t_max: float = np.inf) -> float:
    """Damping rate of the field amplitude from a log-linear fit of the
    field-energy local maxima (energy decays at twice the rate)."""
    t = np.asarray(times, dtype=float)
    W = np.asarray(field_energy, dtype=float)
    inner = (W[1:-1] > W[:-2]) & (W[1:-1] >= W[2:])
    idx = np.nonzero(inner)[0] + 1
    idx = idx[(t[idx] >= t_min) & (t[idx] <= t_max) & (W[idx] > 0)]
    if idx.size < 2:
        raise ValidationError("fewer than two field-energy maxima to fit")
    slope = np.polyfit(t[idx], np.log(W[idx]), 1)[0]
    return -0.5 * float(slope)
