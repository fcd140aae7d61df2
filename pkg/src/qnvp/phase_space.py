"""Phase-space grids, distribution fields and their velocity moments."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

FIELD_KINDS = ("rho", "E", "U", "current", "velocity")


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid on the torus [0, L) times the velocity box [-vmax, vmax].

    x nodes sit at i*dx; velocity nodes are cell centres, so they are
    symmetric about v = 0.
    """

    nx: int
    nv: int
    length: float = 1.0
    vmax: float = 8.0

    def __post_init__(self):
        if self.nx < 4 or self.nv < 4:
            raise ValidationError(f"need nx, nv >= 4, got {self.nx}, {self.nv}")
        if self.nx % 2:
            raise ValidationError(f"nx must be even, got {self.nx}")
        if not self.length > 0 or not self.vmax > 0:
            raise ValidationError("length and vmax must be positive")

    @property
    def dx(self) -> float:
        return self.length / self.nx

    @property
    def dv(self) -> float:
        return 2.0 * self.vmax / self.nv

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    @property
    def v(self) -> np.ndarray:
        return -self.vmax + (np.arange(self.nv) + 0.5) * self.dv

    def mesh(self):
        return np.meshgrid(self.x, self.v, indexing="ij")

    def with_nx(self, nx: int) -> "PhaseGrid":
        return PhaseGrid(nx, self.nv, self.length, self.vmax)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DistField:
    """Samples f(x_i, v_j) at one time; shape (nx, nv).

    Negative values from interpolation are allowed (see ``min_value``);
    clipping happens only when exporting to a transport cloud.
    """

    grid: PhaseGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (self.grid.nx, self.grid.nv):
            raise ValidationError(
                f"values shape {self.values.shape} != grid {(self.grid.nx, self.grid.nv)}"
            )
        if self.time < 0:
            raise ValidationError("time must be nonnegative")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("non-finite distribution values")

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.dx * self.grid.dv)

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    def replace(self, values=None, time=None) -> "DistField":
        return DistField(
            self.grid,
            self.values if values is None else values,
            self.time if time is None else time,
        )


@dataclass(frozen=True)
class FieldProfile:
    """A periodic 1D profile on the x-part of a grid."""

    grid: PhaseGrid
    values: np.ndarray
    kind: str = "rho"
    time: float = field(default=0.0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.kind not in FIELD_KINDS:
            raise ValidationError(f"unknown profile kind {self.kind!r}")
        if self.values.shape != (self.grid.nx,):
            raise ValidationError(f"profile length {self.values.shape} != nx {self.grid.nx}")
        if self.kind == "E":
            scale = max(1.0, float(np.abs(self.values).max(initial=0.0)))
            if abs(self.values.mean()) > 1e-9 * scale:
                raise ValidationError(f"E profile has nonzero mean {self.values.mean():.3e}")

    @property
    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def mean(self) -> float:
        return float(self.values.mean())


def moment_density(f: DistField) -> FieldProfile:
    return FieldProfile(f.grid, f.values.sum(axis=1) * f.grid.dv, "rho", f.time)


def moment_current(f: DistField) -> FieldProfile:
    return FieldProfile(f.grid, f.values @ f.grid.v * f.grid.dv, "current", f.time)


def kinetic_energy(f: DistField) -> float:
    g = f.grid
    return float(0.5 * (f.values @ g.v**2).sum() * g.dx * g.dv)


def torus_distance(x1, x2, L: float = 1.0):
    """Flat-torus distance between representatives; result in [0, L/2]."""
    if not L > 0:
        raise ValidationError("period must be positive")
    d = np.mod(np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float), L)
    out = np.minimum(d, L - d)
    return float(out) if out.ndim == 0 else out


def maxwellian(v, u=0.0, temperature=1.0):
    return np.exp(-((v - u) ** 2) / (2 * temperature)) / np.sqrt(2 * np.pi * temperature)


# --- CSV snapshots ----------------------------------------------------------

_HEADER = re.compile(
    r"#\s*t=(?P<t>\S+)\s+nx=(?P<nx>\d+)\s+nv=(?P<nv>\d+)\s+L=(?P<L>\S+)\s+vmax=(?P<vmax>\S+)"
    r"(?:\s+kind=(?P<kind>\S+))?"
)


def _header(grid: PhaseGrid, time: float) -> str:
    return f"# t={time!r} nx={grid.nx} nv={grid.nv} L={grid.length!r} vmax={grid.vmax!r}"


def _rows(values: np.ndarray) -> str:
    return "\n".join(",".join(f"{x:.16e}" for x in row) for row in np.atleast_2d(values)) + "\n"


def write_field_csv(path, f: DistField) -> None:
    Path(path).write_text(_header(f.grid, f.time) + "\n" + _rows(f.values))


def write_profile_csv(path, p: FieldProfile) -> None:
    Path(path).write_text(
        _header(p.grid, p.time) + f" kind={p.kind}\n" + _rows(p.values[:, None])
    )


def _read(path):
    lines = Path(path).read_text().splitlines()
    m = _HEADER.match(lines[0]) if lines else None
    if m is None:
        raise ValidationError(f"{path}: missing or malformed snapshot header")
    grid = PhaseGrid(int(m["nx"]), int(m["nv"]), float(m["L"]), float(m["vmax"]))
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:] if ln.strip()])
    return grid, float(m["t"]), m["kind"], data


def read_field_csv(path) -> DistField:
    grid, t, _, data = _read(path)
    return DistField(grid, data, t)


def read_profile_csv(path) -> FieldProfile:
    grid, t, kind, data = _read(path)
    return FieldProfile(grid, data[:, 0], kind or "rho", t)
