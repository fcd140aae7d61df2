"""Multi-fluid pressureless Euler-Poisson in 1D, its kinetic reconstruction
and the plasma-oscillation corrector.

Each fluid carries a label theta with quadrature weight w; the fluids are
coupled only through the field, which sees the weighted total density.
``epsilon = 0`` selects the quasineutral limit, where the field is the
Lagrange multiplier E = d/dx sum_j w_j rho_j u_j^2 of the constraint
sum_j w_j rho_j = 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .errors import ComplexLeak, ShockDetected, ValidationError
from .interp import periodic_spline_eval, shift_periodic, shift_zero_extended, spectral_derivative
from .phase_space import DistField, FieldProfile, PhaseGrid
from .transport import WeightedCloud
from .vlasov import NEUTRALITY_TOL, _steps_for, poisson_solve

IMAG_TOL = 1e-9


def mu_quadrature(n_theta: int = 9, theta_max: float = 5.0, d: int = 1):
    """Gauss-Legendre nodes on [-theta_max, theta_max] for the density
    proportional to 1/(1 + |theta|^(d+1)), weights renormalised to 1."""
    if n_theta < 1:
        raise ValidationError("n_theta must be positive")
    if n_theta == 1:
        return np.zeros(1), np.ones(1)
    z, w = roots_legendre(n_theta)
    theta = theta_max * z
    w = w / (1.0 + np.abs(theta) ** (d + 1))
    return theta, w / w.sum()


@dataclass(frozen=True)
class FluidEnsemble:
    """Densities and velocities of all fluids, arrays of shape (n_theta, nx)."""

    grid: PhaseGrid
    thetas: np.ndarray
    mu_weights: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    epsilon: float
    time: float = 0.0

    def __post_init__(self):
        for name in ("thetas", "mu_weights", "rho", "u"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        n = self.thetas.size
        if self.mu_weights.shape != (n,) or np.any(self.mu_weights <= 0):
            raise ValidationError("need one positive weight per fluid")
        if abs(self.mu_weights.sum() - 1) > 1e-12:
            raise ValidationError("fluid weights must sum to 1")
        shape = (n, self.grid.nx)
        if self.rho.shape != shape or self.u.shape != shape:
            raise ValidationError(f"rho and u must have shape {shape}")
        if np.any(self.rho < 0):
            raise ValidationError("negative fluid density")
        if abs(self.total_density().mean() - 1) > NEUTRALITY_TOL:
            raise ValidationError("weighted mean density must be 1")
        if self.epsilon < 0:
            raise ValidationError("epsilon must be nonnegative")

    def total_density(self) -> np.ndarray:
        return self.mu_weights @ self.rho

    def current(self) -> FieldProfile:
        return FieldProfile(self.grid, self.mu_weights @ (self.rho * self.u), "current", self.time)

    @property
    def mass(self) -> float:
        return float(self.mu_weights @ self.rho.sum(axis=1) * self.grid.dx)

    def rho_profile(self, j: int) -> FieldProfile:
        return FieldProfile(self.grid, self.rho[j], "rho", self.time)

    def u_profile(self, j: int) -> FieldProfile:
        return FieldProfile(self.grid, self.u[j], "velocity", self.time)

    def replace(self, rho=None, u=None, time=None) -> "FluidEnsemble":
        return FluidEnsemble(
            self.grid,
            self.thetas,
            self.mu_weights,
            self.rho if rho is None else rho,
            self.u if u is None else u,
            self.epsilon,
            self.time if time is None else time,
        )


def single_fluid(grid: PhaseGrid, rho, u, epsilon: float, time: float = 0.0) -> FluidEnsemble:
    nx = grid.nx
    return FluidEnsemble(
        grid, [0.0], [1.0], np.broadcast_to(rho, (nx,))[None], np.broadcast_to(u, (nx,))[None],
        epsilon, time,
    )


def fluid_field(s: FluidEnsemble, rho=None, u=None) -> np.ndarray:
    """Field driving the fluids: Poisson for epsilon > 0, the constraint
    multiplier for epsilon = 0."""
    rho = s.rho if rho is None else rho
    u = s.u if u is None else u
    g = s.grid
    if s.epsilon > 0:
        total = FieldProfile(g, s.mu_weights @ rho, "rho", s.time)
        return poisson_solve(total, s.epsilon).values
    return spectral_derivative(s.mu_weights @ (rho * u**2), g.length)


def _upwind_face(q, vel):
    """Fromm reconstruction of q at faces i+1/2 upwinded on ``vel``."""
    left = q + 0.25 * (np.roll(q, -1, -1) - np.roll(q, 1, -1))
    right = np.roll(q, -1, -1) - 0.25 * (np.roll(q, -2, -1) - q)
    return np.where(vel >= 0, left, right)


def _rhs(s: FluidEnsemble, rho, u):
    dx = s.grid.dx
    u_face = 0.5 * (u + np.roll(u, -1, -1))
    flux = u_face * _upwind_face(rho, u_face)
    drho = -(flux - np.roll(flux, 1, -1)) / dx
    back = (3 * u - 4 * np.roll(u, 1, -1) + np.roll(u, 2, -1)) / (2 * dx)
    fwd = (-3 * u + 4 * np.roll(u, -1, -1) - np.roll(u, -2, -1)) / (2 * dx)
    du = -u * np.where(u >= 0, back, fwd) + fluid_field(s, rho, u)[None, :]
    return drho, du


def _check_smooth(s: FluidEnsemble, u, dt):
    ux = (np.roll(u, -1, -1) - np.roll(u, 1, -1)) / (2 * s.grid.dx)
    if np.max(np.abs(ux)) * dt >= 1:
        raise ShockDetected(f"max|du/dx| dt = {np.max(np.abs(ux)) * dt:.3g} >= 1 at t={s.time:.4g}")


def fluid_step(s: FluidEnsemble, dt: float) -> FluidEnsemble:
    """Midpoint step: finite-volume continuity, upwind forced Burgers."""
    _check_smooth(s, s.u, dt)
    k1r, k1u = _rhs(s, s.rho, s.u)
    rh, uh = s.rho + 0.5 * dt * k1r, s.u + 0.5 * dt * k1u
    k2r, k2u = _rhs(s, rh, uh)
    rho, u = s.rho + dt * k2r, s.u + dt * k2u
    if np.any(rho < 0):
        raise ShockDetected(f"density went negative at t={s.time + dt:.4g}")
    return s.replace(rho=rho, u=u, time=s.time + dt)


def reconstruct_kinetic(s: FluidEnsemble) -> WeightedCloud:
    """Monokinetic measure sum_j w_j rho_j(x) delta(v - u_j(x)) as a cloud.

    Weights are normalised by the torus length so they form a probability
    measure; cells with zero density are dropped.
    """
    g = s.grid
    w = (s.mu_weights[:, None] * s.rho * g.dx / g.length).ravel()
    x = np.broadcast_to(g.x, s.rho.shape).ravel()
    keep = w > 0
    return WeightedCloud(np.column_stack([x[keep], s.u.ravel()[keep]]), w[keep], g.length)


# --- corrector ---------------------------------------------------------------


@dataclass(frozen=True)
class CorrectorState:
    grid: PhaseGrid
    d_plus: np.ndarray
    d_minus: np.ndarray
    epsilon: float
    time: float = 0.0

    def __post_init__(self):
        for name in ("d_plus", "d_minus"):
            a = np.array(getattr(self, name), dtype=complex)
            if a.shape != (self.grid.nx,):
                raise ValidationError(f"{name} must have length nx")
            a.setflags(write=False)
            object.__setattr__(self, name, a)


def corrector_init(E_eps0: FieldProfile, j_eps0: FieldProfile, epsilon: float) -> CorrectorState:
    """d_pm = (eps E +- i (j - mean j)) / 2 at the run's own epsilon."""
    if E_eps0.grid != j_eps0.grid:
        raise ValidationError("E and j live on different grids")
    jc = j_eps0.values - j_eps0.values.mean()
    ee = epsilon * E_eps0.values
    return CorrectorState(E_eps0.grid, 0.5 * (ee + 1j * jc), 0.5 * (ee - 1j * jc), epsilon, E_eps0.time)


def _advect_periodic(values, J, dt, dx):
    shifts = np.asarray(J, dtype=float) * dt / dx
    if np.ptp(shifts) == 0:
        return shift_periodic(values, shifts[0])
    return periodic_spline_eval(values, np.arange(values.size) - shifts)


def corrector_step(c: CorrectorState, advecting_current: FieldProfile, dt: float) -> CorrectorState:
    """Transport d_pm with velocity J, then re-project onto zero mean."""
    if advecting_current.grid != c.grid:
        raise ValidationError("current lives on a different grid")
    J, dx = advecting_current.values, c.grid.dx
    out = []
    for d in (c.d_plus, c.d_minus):
        new = _advect_periodic(d.real, J, dt, dx) + 1j * _advect_periodic(d.imag, J, dt, dx)
        out.append(new - new.mean())
    return CorrectorState(c.grid, out[0], out[1], c.epsilon, c.time + dt)


def corrector_eval(c: CorrectorState, t: float) -> FieldProfile:
    """C = -(1/i)(d_+ e^{it/eps} - d_- e^{-it/eps}), a real velocity profile."""
    if c.epsilon == 0:
        return FieldProfile(c.grid, np.zeros(c.grid.nx), "velocity", t)
    ph = np.exp(1j * t / c.epsilon)
    val = 1j * (c.d_plus * ph - c.d_minus * np.conj(ph))
    scale = max(1.0, float(np.abs(val).max(initial=0.0)))
    leak = float(np.abs(val.imag).max(initial=0.0))
    if leak > IMAG_TOL * scale:
        raise ComplexLeak(f"corrector imaginary residual {leak:.3e}")
    return FieldProfile(c.grid, val.real, "velocity", t)


def shift_velocity(f: DistField, C: FieldProfile) -> DistField:
    """f(x, v) <- f(x, v - C(x)), zero-extended in v."""
    if C.grid.nx != f.grid.nx or C.grid.length != f.grid.length:
        raise ValidationError("profile and distribution grids differ")
    vals = shift_zero_extended(f.values, C.values / f.grid.dv, axis=1)
    return f.replace(values=vals)


# --- time integration --------------------------------------------------------


@dataclass
class FluidTrajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    correctors: list = field(default_factory=list)

    def at(self, t: float):
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(t)
        return i


def evolve_fluid(s0: FluidEnsemble, dt: float, t_end: float, snapshot_times=(), corrector=None):
    """Advance the ensemble, recording snapshots at the requested times.

    If ``corrector`` is given it is transported with the current of this
    run (meant to be the limit run), updated every step.
    """
    n_end = _steps_for(t_end, dt)
    for t in snapshot_times:
        if t < 0 or t > t_end + 1e-12:
            raise ValidationError(f"snapshot time {t} outside [0, {t_end}]")
    wanted = {_steps_for(t, dt) for t in snapshot_times} | {0}
    traj = FluidTrajectory()
    s, c = s0, corrector

    def record():
        traj.times.append(s.time)
        traj.states.append(s)
        if c is not None:
            traj.correctors.append(c)

    record()
    for n in range(1, n_end + 1):
        if c is not None:
            c = corrector_step(c, s.current(), dt)
        s = fluid_step(s, dt).replace(time=s0.time + n * dt)
        if c is not None:
            c = CorrectorState(c.grid, c.d_plus, c.d_minus, c.epsilon, s.time)
        if n in wanted:
            record()
    return traj
