"""Random inputs, collocation ensembles, z-derivatives and the A-set diagnostic."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev
from scipy.special import roots_legendre

from .errors import IllConditioned, MissingRun, ValidationError
from .fluid import FluidTrajectory, corrector_eval

MAX_NODES = 40


@dataclass(frozen=True)
class RandomInput:
    """Affine families of the uncertain input.

    ``amplitude``: alpha(z) = base * (1 + slope * z); ``drift``: z_shift(z) = base + slope * z.
    """

    kind: str = "amplitude"
    support: tuple = (-1.0, 1.0)
    density: str = "uniform"
    base: float = 0.5
    slope: float = 0.1

    def __post_init__(self):
        if self.kind not in ("amplitude", "drift"):
            raise ValidationError(f"unknown random-input family {self.kind!r}")
        if self.density != "uniform":
            raise ValidationError("only the uniform density is supported")
        lo, hi = self.support
        if not lo < hi:
            raise ValidationError("support must be a nonempty interval")

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "amplitude":
            return self.base * (1 + self.slope * z)
        return self.base + self.slope * z


@dataclass
class ZEnsemble:
    nodes: np.ndarray
    weights: np.ndarray
    rule: str = "gauss-legendre"
    support: tuple = (-1.0, 1.0)
    artifacts: dict = field(default_factory=dict)

    def index_of(self, z: float) -> int:
        hits = np.nonzero(np.abs(self.nodes - z) <= 1e-12 * max(1.0, abs(z)))[0]
        if hits.size == 0:
            raise ValidationError(f"{z} is not an ensemble node")
        return int(hits[0])


def _clenshaw_curtis(n):
    """Nodes cos(pi j/(n-1)) (ascending) and their Clenshaw-Curtis weights on [-1, 1]."""
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
        v -= np.cos(N * theta[1:-1]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
    w[1:-1] = 2 * v / N
    x = -np.cos(theta)
    return 0.5 * (x - x[::-1]), w[::-1]


def build_ensemble(inp: RandomInput, n_nodes: int, rule: str = "gauss-legendre") -> ZEnsemble:
    """Quadrature nodes for the uniform density; weights sum to the support length."""
    if n_nodes < 2:
        raise ValidationError("need at least two collocation nodes")
    if rule == "gauss-legendre":
        x, w = roots_legendre(n_nodes)
    elif rule == "chebyshev-lobatto":
        x, w = _clenshaw_curtis(n_nodes)
    else:
        raise ValidationError(f"unknown quadrature rule {rule!r}")
    lo, hi = inp.support
    half = 0.5 * (hi - lo)
    return ZEnsemble(lo + half * (x + 1), half * w, rule, (lo, hi))


def _bary_weights(z):
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / diff.prod(axis=1)
    return w / np.abs(w).max()


def differentiation_matrix(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    w = _bary_weights(z)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def _bary_eval(z, values, at):
    w = _bary_weights(z)
    d = at - z
    hit = np.nonzero(d == 0)[0]
    if hit.size:
        return values[hit[0]]
    c = w / d
    return np.tensordot(c, values, axes=(0, 0)) / c.sum()


def z_derivative(values_at_nodes, ensemble: ZEnsemble, order: int, at: float):
    """k-th derivative of the nodal interpolating polynomial, evaluated at ``at``.

    ``values_at_nodes`` may carry trailing axes (one polynomial per entry).
    """
    z = np.asarray(ensemble.nodes, dtype=float)
    n = z.size
    if n > MAX_NODES:
        raise IllConditioned(f"{n} nodes exceed the limit of {MAX_NODES}")
    if not 0 <= order <= n - 1:
        raise ValidationError(f"derivative order {order} needs more than {n} nodes")
    vals = np.asarray(values_at_nodes, dtype=float)
    lo, hi = ensemble.support
    scale = 2.0 / (hi - lo)
    s = scale * (z - lo) - 1.0
    # interpolate in the Chebyshev basis, which stays well conditioned on
    # clustered nodes, then differentiate the coefficients exactly
    V = chebyshev.chebvander(s, n - 1)
    coef = np.linalg.solve(V, vals.reshape(n, -1))
    coef = chebyshev.chebder(coef, order, scl=scale, axis=0)
    out = chebyshev.chebval(scale * (float(at) - lo) - 1.0, coef).reshape(vals.shape[1:])
    return float(out) if np.ndim(out) == 0 else out


# --- A-set membership ---------------------------------------------------------


@dataclass(frozen=True)
class ASetParams:
    delta: float
    M: float
    z0: float
    T: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValidationError("delta must lie in (0, 1)")
        if not self.M > 1:
            raise ValidationError("M must exceed 1")


@dataclass(frozen=True)
class FluidRun:
    """An epsilon-run and the matching limit run; the limit run carries the corrector."""

    eps_run: FluidTrajectory
    limit_run: FluidTrajectory


def _aligned(run: FluidRun, T: float):
    out = []
    for i, t in enumerate(run.eps_run.times):
        if t > T + 1e-12:
            continue
        j = run.limit_run.at(t)
        s, lim = run.eps_run.states[i], run.limit_run.states[j]
        C = corrector_eval(run.limit_run.correctors[j], t).values if run.limit_run.correctors else 0.0
        out.append((s, lim, C))
    if not out:
        raise MissingRun("no recorded times inside the horizon")
    return out


def aset_quantities(run: FluidRun, T: float) -> np.ndarray:
    """Per-fluid sups over x and t of rho_eps, v, rho_eps - rho and v_eps - v + C; shape (4, n_theta)."""
    q = None
    for s, lim, C in _aligned(run, T):
        cur = np.stack([
            np.abs(s.rho).max(axis=1),
            np.abs(lim.u).max(axis=1),
            np.abs(s.rho - lim.rho).max(axis=1),
            np.abs(s.u - lim.u + C).max(axis=1),
        ])
        q = cur if q is None else np.maximum(q, cur)
    return q


def aset_membership(fluid_runs: dict, params: ASetParams, eps_list) -> dict:
    """Map z-node -> whether all four sup bounds hold at every tested eps < delta.

    ``fluid_runs`` is keyed by (z, eps). The finite eps grid makes this a
    necessary-condition certificate only.
    """
    tested = [e for e in eps_list if e < params.delta]
    zs = sorted({z for z, _ in fluid_runs})
    out = {}
    for z in zs:
        ok = True
        for e in tested:
            if (z, e) not in fluid_runs:
                raise MissingRun(f"no run for z={z}, eps={e}")
            if (params.z0, e) not in fluid_runs:
                raise MissingRun(f"no reference run for z0={params.z0}, eps={e}")
            q = aset_quantities(fluid_runs[(z, e)], params.T)
            q0 = aset_quantities(fluid_runs[(params.z0, e)], params.T)
            ok = ok and bool(np.all(q <= params.M * q0))
        out[z] = ok
    return out


def G_epsilon(eps_run: FluidTrajectory, limit_run: FluidTrajectory, correctors=None) -> float:
    """sup_t [ sup_j|rho_eps| sum_j w_j|v_eps + C - v| + sum_j w_j|rho_eps - rho| (1/2 + sup_j|v|) ]."""
    lim = limit_run if correctors is None else FluidTrajectory(
        limit_run.times, limit_run.states, list(correctors)
    )
    best = 0.0
    for s, l, C in _aligned(FluidRun(eps_run, lim), np.inf):
        w = s.mu_weights
        term1 = np.abs(s.rho).max() * (w @ np.abs(s.u + C - l.u).max(axis=1))
        term2 = (w @ np.abs(s.rho - l.rho).max(axis=1)) * (0.5 + np.abs(l.u).max())
        best = max(best, float(term1 + term2))
    return best
