"""Wasserstein distances between weighted point clouds on the torus x R.

Ground metric: sqrt(d_torus(x)^2 + |v|^2). The exact solver is the
transport linear program solved by a simplex method; the entropic solver is
log-domain Sinkhorn with an annealed regularisation and debiasing.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import EmptyCloud, Infeasible, NoConvergence, SizeExceeded, ValidationError
from .phase_space import DistField, torus_distance

MAX_COST_ENTRIES = 10**6
MARGINAL_TOL = 1e-8


@dataclass(frozen=True)
class WeightedCloud:
    """Points (x..., v...) with positive weights summing to 1.

    The first ``dim_x`` coordinates are periodic with period ``L``.
    """

    points: np.ndarray
    weights: np.ndarray
    L: float = 1.0
    dim_x: int = 1

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        w = np.array(self.weights, dtype=float)
        if p.shape[0] != w.size or p.shape[0] == 0:
            raise EmptyCloud("cloud needs at least one point and one weight per point")
        if np.any(w <= 0):
            raise ValidationError("cloud weights must be positive")
        if abs(w.sum() - 1) > 1e-10:
            raise ValidationError(f"cloud weights sum to {w.sum():.15g}, not 1")
        if not 0 <= self.dim_x <= p.shape[1]:
            raise ValidationError("dim_x exceeds point dimension")
        p.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True)
class Coupling:
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    row_residual: float
    col_residual: float

    def as_dict(self) -> dict:
        return {(int(i), int(j)): float(m) for i, j, m in zip(self.rows, self.cols, self.mass)}


def ground_cost(p, q, q_exp: int = 1, L: float = 1.0, dim_x: int = 1) -> float:
    if q_exp not in (1, 2):
        raise ValidationError("q must be 1 or 2")
    p, q = np.atleast_1d(np.asarray(p, float)), np.atleast_1d(np.asarray(q, float))
    dx = torus_distance(p[:dim_x], q[:dim_x], L)
    sq = float(np.sum(np.square(dx)) + np.sum((p[dim_x:] - q[dim_x:]) ** 2))
    return sq if q_exp == 2 else float(np.sqrt(sq))


def cost_matrix(a: WeightedCloud, b: WeightedCloud, q: int) -> np.ndarray:
    if q not in (1, 2):
        raise ValidationError("q must be 1 or 2")
    if a.L != b.L or a.dim_x != b.dim_x or a.points.shape[1] != b.points.shape[1]:
        raise ValidationError("clouds live on different spaces")
    k = a.dim_x
    sq = np.zeros((len(a), len(b)))
    for c in range(a.points.shape[1]):
        diff = a.points[:, c, None] - b.points[None, :, c]
        if c < k:
            diff = np.mod(diff, a.L)
            diff = np.minimum(diff, a.L - diff)
        sq += diff**2
    return sq if q == 2 else np.sqrt(sq)


def _check_pair(a, b):
    if len(a) * len(b) > MAX_COST_ENTRIES:
        raise SizeExceeded(f"{len(a)} x {len(b)} cost entries exceed {MAX_COST_ENTRIES}")
    if abs(a.weights.sum() - b.weights.sum()) > MARGINAL_TOL:
        raise Infeasible("clouds carry different total mass")


def wasserstein_exact(a: WeightedCloud, b: WeightedCloud, q: int = 1):
    """Exact W_q via the transport LP (HiGHS dual simplex); returns (W_q, Coupling)."""
    _check_pair(a, b)
    C = cost_matrix(a, b, q)
    n, m = C.shape
    eye_n, eye_m = sparse.identity(n, format="csr"), sparse.identity(m, format="csr")
    A = sparse.vstack([
        sparse.kron(eye_n, np.ones((1, m))),
        sparse.kron(np.ones((1, n)), eye_m),
    ]).tocsr()
    rhs = np.concatenate([a.weights, b.weights])
    res = linprog(
        C.ravel(), A_eq=A, b_eq=rhs, bounds=(0, None), method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise Infeasible(f"transport LP failed: {res.message}")
    P = np.clip(res.x.reshape(n, m), 0, None)
    rows, cols = np.nonzero(P > 0)
    plan = Coupling(
        rows, cols, P[rows, cols],
        float(np.abs(P.sum(1) - a.weights).max()),
        float(np.abs(P.sum(0) - b.weights).max()),
    )
    cost = max(float((P * C).sum()), 0.0)
    return cost ** (1.0 / q), plan


@dataclass(frozen=True)
class AnnealSchedule:
    eta_start: float = 1.0
    eta_end: float = 1e-3
    factor: float = 0.5
    iterations: int = 500
    # the last stage keeps iterating, checking every 50 sweeps, until the
    # row marginal error drops below ``target_residual``
    final_iterations: int = 10000
    target_residual: float = 1e-8

    def etas(self):
        out, eta = [], self.eta_start
        while eta > self.eta_end * (1 + 1e-12):
            out.append(eta)
            eta *= self.factor
        out.append(self.eta_end)
        return out


def _lse(a, axis):
    m = a.max(axis=axis, keepdims=True)
    return np.log(np.exp(a - m).sum(axis=axis)) + np.squeeze(m, axis)


def _sinkhorn(C, loga, logb, schedule: AnnealSchedule):
    f = np.zeros(loga.size)
    g = np.zeros(logb.size)

    def sweep(f, g, eta):
        f = -eta * _lse((g[None, :] - C) / eta + logb[None, :], axis=1)
        g = -eta * _lse((f[:, None] - C) / eta + loga[:, None], axis=0)
        return f, g

    def residual(f, g, eta):
        logP = (f[:, None] + g[None, :] - C) / eta + loga[:, None] + logb[None, :]
        return float(np.abs(np.exp(_lse(logP, axis=1)) - np.exp(loga)).max())

    etas = schedule.etas()
    for eta in etas:
        for _ in range(schedule.iterations):
            f, g = sweep(f, g, eta)
    resid = residual(f, g, eta)
    extra = 0
    while resid > schedule.target_residual and extra < schedule.final_iterations:
        for _ in range(50):
            f, g = sweep(f, g, eta)
        extra += 50
        resid = residual(f, g, eta)
    value = float(np.exp(loga) @ f + np.exp(logb) @ g)
    return value, resid


def wasserstein_entropic(a: WeightedCloud, b: WeightedCloud, q: int = 1, schedule=None) -> float:
    """Debiased Sinkhorn divergence S = OT(a,b) - OT(a,a)/2 - OT(b,b)/2, to the power 1/q."""
    schedule = schedule or AnnealSchedule()
    if abs(a.weights.sum() - b.weights.sum()) > MARGINAL_TOL:
        raise Infeasible("clouds carry different total mass")
    la, lb = np.log(a.weights), np.log(b.weights)
    total = 0.0
    for coef, (x, y, lx, ly) in ((1.0, (a, b, la, lb)), (-0.5, (a, a, la, la)), (-0.5, (b, b, lb, lb))):
        val, resid = _sinkhorn(cost_matrix(x, y, q), lx, ly, schedule)
        if resid > 1e-6:
            raise NoConvergence(f"Sinkhorn marginal residual {resid:.2e} at eta={schedule.eta_end}")
        total += coef * val
    return max(total, 0.0) ** (1.0 / q)


def wasserstein_1d(a_quantiles, b_quantiles, q: int = 1) -> float:
    """W_q on the line from quantiles at common, equally spaced levels."""
    a, b = np.asarray(a_quantiles, float), np.asarray(b_quantiles, float)
    if a.shape != b.shape:
        raise ValidationError("quantile arrays must share levels")
    if q not in (1, 2):
        raise ValidationError("q must be 1 or 2")
    return float(np.mean(np.abs(a - b) ** q) ** (1.0 / q))


def cloud_from_field(f: DistField, mass_floor: float = 0.0) -> WeightedCloud:
    """One point per cell, weight f dx dv clipped at 0, pruned and renormalised."""
    g = f.grid
    w = np.clip(f.values, 0, None).ravel() * g.dx * g.dv
    keep = (w > 0) & (w >= mass_floor)
    if not keep.any():
        raise EmptyCloud("all mass pruned")
    X, V = g.mesh()
    pts = np.column_stack([X.ravel()[keep], V.ravel()[keep]])
    w = w[keep]
    return WeightedCloud(pts, w / w.sum(), g.length)


def write_cloud_csv(path, c: WeightedCloud) -> None:
    dv = c.points.shape[1] - c.dim_x
    cols = [f"x{i}" for i in range(c.dim_x)] + [f"v{i}" for i in range(dv)] + ["w"]
    lines = [f"# L={c.L!r}", ",".join(cols)]
    lines += [",".join(f"{x:.16e}" for x in row) for row in np.column_stack([c.points, c.weights])]
    Path(path).write_text("\n".join(lines) + "\n")


def read_cloud_csv(path) -> WeightedCloud:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# L="):
        raise ValidationError(f"{path}: missing cloud header")
    L = float(lines[0][4:])
    cols = lines[1].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[2:]]).reshape(-1, len(cols))
    dim_x = sum(c.startswith("x") for c in cols)
    return WeightedCloud(data[:, :-1], data[:, -1], L, dim_x)
