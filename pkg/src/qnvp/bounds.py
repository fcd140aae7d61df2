"""Weighted norms, assumption predicates, bound formulas and rate predictors.

Every double exponential is evaluated in log domain. Functions returning a
``log_*`` value never overflow; the plain-valued variants may return inf or
0 when the true value is out of double range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import wofz

from .errors import EmptyWindow, NoRoot, ValidationError

UNDERFLOW = 1e-300
LOG_UNDERFLOW = math.log(UNDERFLOW)


# --- the epsilon-dependent time-weighted sup norm ---------------------------


@dataclass(frozen=True)
class NormSpec:
    """Parameters of sup_{t >= t0} t^-k exp(a_tilde t) ||F(t)||.

    With ``a_tilde`` left as None the exponent is a + 1/eps^m (m-mode);
    otherwise ``a_tilde`` is used directly and ``a``/``m`` are ignored.
    """

    a: float = 0.0
    t0: float = 1.0
    k: int = 1
    m: int = 1
    epsilon: float = 1.0
    a_tilde: float | None = None

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValidationError("t0 must be positive")
        if self.k < 0:
            raise ValidationError("k must be nonnegative")
        if self.a_tilde is None and (self.m < 1 or not 0 < self.epsilon <= 1):
            raise ValidationError("m-mode needs m >= 1 and eps in (0, 1]")

    @property
    def exponent(self) -> float:
        if self.a_tilde is not None:
            return self.a_tilde
        return self.a + self.epsilon ** (-self.m)


@dataclass(frozen=True)
class TimeSeriesSup:
    times: np.ndarray
    sup_values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.sup_values, dtype=float)
        if t.shape != s.shape or t.ndim != 1:
            raise ValidationError("times and sup_values must be 1D and aligned")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValidationError("times must be nonnegative and increasing")
        if np.any(s < 0):
            raise ValidationError("sup values must be nonnegative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "sup_values", s)


def weighted_sup_norm_log(series: TimeSeriesSup, spec: NormSpec) -> tuple[float, float]:
    """Return (log of the norm, time at which the sup is attained)."""
    mask = series.times >= spec.t0
    if not mask.any():
        raise EmptyWindow(f"no samples at or beyond t0={spec.t0}")
    t = series.times[mask]
    with np.errstate(divide="ignore"):
        logs = -spec.k * np.log(t) + spec.exponent * t + np.log(series.sup_values[mask])
    i = int(np.argmax(logs))
    return float(logs[i]), float(t[i])


def weighted_sup_norm(series: TimeSeriesSup, spec: NormSpec) -> float:
    return math.exp(weighted_sup_norm_log(series, spec)[0])


# --- B_delta norm ------------------------------------------------------------


@dataclass(frozen=True)
class BDeltaNorm:
    value: float
    tail_bound: float


def fourier_coefficients(values) -> dict:
    """x-Fourier coefficients (1/L) int g exp(-2 pi i k x / L) dx of periodic samples."""
    c = np.fft.fft(np.asarray(values, dtype=float)) / len(values)
    kk = np.fft.fftfreq(len(values), d=1.0 / len(values)).astype(int)
    return {int(k): complex(ck) for k, ck in zip(kk, c)}


def b_delta_norm(fourier_coeffs: dict, delta: float) -> BDeltaNorm:
    """Sum of |g_k| delta^|k| over the supplied modes.

    The tail bound assumes modes beyond the largest supplied |k| are no
    larger in modulus than the largest modulus seen at that |k|.
    """
    if not 0 < delta <= 1:
        raise ValidationError("delta must lie in (0, 1]")
    value = sum(abs(c) * delta ** abs(k) for k, c in fourier_coeffs.items())
    kmax = max((abs(k) for k in fourier_coeffs), default=0)
    edge = max((abs(c) for k, c in fourier_coeffs.items() if abs(k) == kmax), default=0.0)
    if edge == 0:
        tail = 0.0
    elif delta < 1:
        tail = 2 * edge * delta ** (kmax + 1) / (1 - delta)
    else:
        tail = math.inf
    return BDeltaNorm(float(value), float(tail))


# --- Landau damping function hypotheses --------------------------------------


@dataclass(frozen=True)
class LandauParams:
    a1: float
    a2: float
    a_tilde: float
    t0: float
    K: int = 0

    def __post_init__(self):
        if min(self.a1, self.a2, self.a_tilde, self.t0) <= 0 or self.K < 0:
            raise ValidationError("a1, a2, a_tilde, t0 must be positive and K >= 0")

    @property
    def C_E(self) -> float:
        return 240 * self.a1 * self.a2 / self.a_tilde + 4 * self.a1

    @property
    def t0_threshold(self) -> float:
        return math.log(8 * self.a1) / self.a_tilde


@dataclass(frozen=True)
class PredicateReport:
    passed: dict
    margins: dict

    @property
    def all_pass(self) -> bool:
        return all(self.passed.values())


def check_H(params: LandauParams, fstar_hat, fstar, kx, kv, x, v) -> PredicateReport:
    """Smoothness, decay and constant constraints on a Landau damping function.

    ``fstar_hat(kx, kv)`` and ``fstar(x, v)`` are evaluated on the tensor
    lattices given; moduli are compared against the envelopes.
    """
    KX, KV = np.meshgrid(np.asarray(kx, float), np.asarray(kv, float), indexing="ij")
    env1 = params.a1 / (1 + KX**2) * np.exp(-params.a_tilde * np.abs(KV))
    m1 = float(np.min(env1 - np.abs(fstar_hat(KX, KV))))
    X, V = np.meshgrid(np.asarray(x, float), np.asarray(v, float), indexing="ij")
    m2 = float(np.min(params.a2 / (1 + V**4) - np.abs(fstar(X, V))))
    m3a = params.a_tilde - 15 * math.sqrt(params.a2)
    m3b = params.t0 - max(0.0, params.t0_threshold)
    passed = {"H1": m1 >= 0, "H2": m2 >= 0, "H3": m3a >= 0 and m3b >= 0}
    margins = {"H1": m1, "H2": m2, "H3": min(m3a, m3b), "H3_a_tilde": m3a, "H3_t0": m3b}
    return PredicateReport(passed, margins)


def check_A(params: LandauParams) -> PredicateReport:
    """Parameter constraints A1-A5.

    A3 is evaluated in its sup-over-t form (at t = 3/a_tilde); the weaker
    form at t = t0 is reported separately as ``A3_t0``.
    """
    p = params
    at, CE = p.a_tilde, p.C_E
    m1 = at - max(1.0, 15 * math.sqrt(p.a2))
    m2 = p.t0 - max(2.0, 4.0 * p.K, p.t0_threshold)
    lhs3 = 50 * CE / at * (3 / at) ** 3 * math.exp(-3)
    lhs3_t0 = 50 * CE / at * p.t0**3 * math.exp(-at * p.t0)
    m4 = 1 / (20 * p.a2) - 8 * math.e
    m5 = at**2 - 8 * CE
    margins = {"A1": m1, "A2": m2, "A3": 1 - lhs3, "A3_t0": 1 - lhs3_t0, "A4": m4, "A5": m5}
    passed = {key: val >= 0 for key, val in margins.items()}
    return PredicateReport(passed, margins)


def fstar_spectrum(values, x, v, kx, kv):
    """(1/2pi) sum f(x,v) exp(i(kx x + kv v)) dx dv by direct quadrature."""
    values = np.asarray(values, float)
    dx, dv = x[1] - x[0], v[1] - v[0]
    ex = np.exp(1j * np.outer(np.asarray(kx, float), x))
    ev = np.exp(1j * np.outer(v, np.asarray(kv, float)))
    return ex @ values @ ev * dx * dv / (2 * np.pi)


# --- initial-data functionals ------------------------------------------------


def A_tilde(rho_f_sup, rho_g_sup, rho_f_minus1_sup, epsilon: float) -> np.ndarray:
    rf = np.asarray(rho_f_sup, float)
    rg = np.asarray(rho_g_sup, float)
    dev = np.asarray(rho_f_minus1_sup, float)
    return 1 + np.sqrt(rg) * np.sqrt(np.maximum(rf, rg)) / epsilon**2 + dev / epsilon**2


def a_tilde_integral(t_samples, a_tilde_values, C0: float = 1.0) -> float:
    """C0 times the trapezoid integral of A_tilde over the samples."""
    return float(C0 * trapezoid(np.asarray(a_tilde_values, float), np.asarray(t_samples, float)))


def log_R_epsilon(x: float, a_tilde_integral: float, d: int) -> float:
    if not x > 0:
        raise ValidationError("R_epsilon needs x > 0")
    return math.log(16 * d) + math.log(x / (16 * d)) * math.exp(a_tilde_integral)


def R_epsilon(t: float, x: float, a_tilde_integral: float, d: int) -> float:
    """16 d exp{log(x / 16 d) exp[C0 int_0^t A_tilde]}; ``t`` enters only via the integral."""
    return math.exp(log_R_epsilon(x, a_tilde_integral, d))


@dataclass(frozen=True)
class BoundParams:
    C0: float = 2.0
    T: float = 1.0
    d: int = 2
    gamma: float = 1.0
    beta: float = 3.0
    delta0: float = 0.5
    K0: int = 1
    C1: float = 1.0
    C2: float = 1.0
    C_beta: float = 1.0

    def __post_init__(self):
        if not self.C0 > 1:
            raise ValidationError("C0 must exceed 1")
        if self.d not in (2, 3):
            raise ValidationError("d must be 2 or 3")
        if self.d == 2 and not self.beta > 2:
            raise ValidationError("beta must exceed 2")
        if min(self.T, self.gamma, self.delta0, self.C1, self.C2, self.C_beta) <= 0 or self.K0 < 1:
            raise ValidationError("all bound constants must be positive")


def rho_f_bound(epsilon: float, p: BoundParams) -> float:
    """Density bound: C_beta / eps^(2 max(beta, gamma)) in 2D, C1 / eps^max(38, 3 gamma) in 3D."""
    if p.d == 2:
        return p.C_beta / epsilon ** (2 * max(p.beta, p.gamma))
    return p.C1 / epsilon ** max(38.0, 3 * p.gamma)


def a_tilde_integral_bound(epsilon: float, p: BoundParams) -> tuple[float, float]:
    """Lower and upper bounds T <= int_0^T A_tilde <= T(1 + (1 + C + sqrt(C2 max(C2, C)))/eps^2)."""
    c = rho_f_bound(epsilon, p)
    upper = p.T * (1 + (1 + c + math.sqrt(p.C2 * max(p.C2, c))) / epsilon**2)
    return p.T, upper


def log_R_tilde(t: float, x: float, epsilon: float, p: BoundParams) -> float:
    base = math.log(16 * p.d)
    lx = math.log(x / (16 * p.d))
    if x > 16 * p.d:
        c = rho_f_bound(epsilon, p)
        rate = p.C0 * t * (1 + (1 + c + math.sqrt(p.C2 * max(p.C2, c))) / epsilon**2)
    else:
        rate = p.C0 * t
    return base + lx * math.exp(rate)


def log_L_tilde(x: float, epsilon: float, p: BoundParams) -> float:
    base = math.log(16 * p.d)
    lx = math.log(x / (16 * p.d))
    if x > 16 * p.d:
        rate = p.C0 * p.T / epsilon**2 * (1 + p.C2 + rho_f_bound(epsilon, p))
    else:
        rate = p.C0 * p.T / epsilon**2
    return base + lx * math.exp(rate)


def log_L_tilde_from_log(log_x: float, epsilon: float, p: BoundParams) -> float:
    """``log_L_tilde`` for arguments given as logs (x below double range)."""
    if log_x > math.log(16 * p.d):
        return log_L_tilde(math.exp(log_x), epsilon, p)
    return math.log(16 * p.d) + (log_x - math.log(16 * p.d)) * math.exp(p.C0 * p.T / epsilon**2)


def log_W2_bound(log_psi: float, epsilon: float, rho_f_sup: float, rho_g_sup: float,
                 C0: float, T: float, d: int) -> float:
    """Log of the W2 growth bound given sup-in-time density norms."""
    rate = C0 * T / epsilon**2 * (1 + rho_f_sup + rho_g_sup)
    return math.log(16 * d) + (log_psi - math.log(16 * d)) * math.exp(rate)


@dataclass(frozen=True)
class PhiPsi:
    log_phi: float
    log_psi: float

    @property
    def underflow(self) -> bool:
        return self.log_phi < LOG_UNDERFLOW

    @property
    def phi(self) -> float:
        return math.exp(self.log_phi)

    @property
    def psi(self) -> float:
        return math.exp(self.log_psi)


def phi_psi(epsilon: float, z: float, d: int, K0: int) -> PhiPsi:
    """phi = 16 d exp[-exp(eps^-K0)] and psi = phi / (1 + z^2), as logs."""
    if not 0 < epsilon <= 1:
        raise ValidationError("epsilon must lie in (0, 1]")
    if K0 < 1:
        raise ValidationError("K0 must be >= 1")
    try:
        inner = math.exp(epsilon ** (-K0))
    except OverflowError:
        inner = math.inf
    log_phi = math.log(16 * d) - inner
    return PhiPsi(log_phi, log_phi - math.log1p(z * z))


# --- convergence-speed predictors --------------------------------------------


def _rate_exponent(epsilon, a, m, t0):
    return (epsilon ** (-(m + 1)) - epsilon ** (-m) + a / epsilon) * t0


def rate_kinetic(epsilon: float, a: float, m: int, t0: float) -> float:
    """Log of (1/eps) exp[-(eps^-(m+1) - eps^-m + a/eps) t0]."""
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    return -math.log(epsilon) - _rate_exponent(epsilon, a, m, t0)


def rate_field(epsilon: float, a: float, m: int, t0: float, l: int) -> float:
    """Log of eps^-(2l+1) exp[-(eps^-(m+1) - eps^-m + a/eps) t0]."""
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    if l < 0:
        raise ValidationError("l must be nonnegative")
    return -(2 * l + 1) * math.log(epsilon) - _rate_exponent(epsilon, a, m, t0)


def log_B(epsilon: float, a: float, m: int, t0: float) -> float:
    """log of eps exp[(a + eps^-m)(1/eps - 1) t0]."""
    return math.log(epsilon) + (a + epsilon ** (-m)) * (1 / epsilon - 1) * t0


def log_A_ratio(t: float, epsilon: float, a: float, m: int) -> float:
    """log of the weight ratio phi(t/eps, eps) / phi(t, eps) = eps exp[(a + eps^-m)(1/eps - 1) t]."""
    return math.log(epsilon) + (a + epsilon ** (-m)) * (1 / epsilon - 1) * t


# --- linear Landau damping oracle ---------------------------------------------


def plasma_z(zeta):
    return 1j * np.sqrt(np.pi) * wofz(zeta)


def dispersion(omega, k: float):
    zeta = omega / (k * np.sqrt(2))
    return 1 + (1 + zeta * plasma_z(zeta)) / k**2


def landau_rate(k: float, guess: complex | None = None, tol: float = 1e-14) -> complex:
    """Least-damped root omega of the Maxwellian Langmuir dispersion relation."""
    if not 0 < k <= 1:
        raise ValidationError("k must lie in (0, 1]")
    s = k * np.sqrt(2)
    zeta = (np.sqrt(1 + 3 * k * k) if guess is None else guess) / s + 0j

    def residual(z):
        Z = plasma_z(z)
        return 1 + (1 + z * Z) / k**2, (Z - 2 * z * (1 + z * Z)) / k**2

    D, dD = residual(zeta)
    with np.errstate(all="ignore"):
        for _ in range(100):
            step = D / dD
            # damped Newton: halve until the residual decreases
            lam = 1.0
            while lam > 1e-6:
                trial = zeta - lam * step
                Dt, dDt = residual(trial)
                if np.isfinite(Dt) and abs(Dt) < abs(D):
                    break
                lam *= 0.5
            else:
                break
            zeta, D, dD = trial, Dt, dDt
            if abs(lam * step) < tol * max(1.0, abs(zeta)):
                break
    omega = complex(zeta * s)
    if not np.isfinite(omega) or abs(dispersion(omega, k)) > 1e-10:
        raise NoRoot(f"Newton did not converge for k={k}")
    return omega
