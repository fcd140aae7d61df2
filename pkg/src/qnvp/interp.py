"""Cubic B-spline interpolation on uniform grids.

Shifts are applied in Fourier space: sampling the interpolating spline at
i - s is a circulant operation whose symbol is w_s(k) / w_0(k). Uniform
shifts are therefore exact for integer s and conserve the line sum exactly.
"""
import numpy as np


def bspline3(t):
    t = np.abs(t)
    return np.where(
        t < 1, 2.0 / 3.0 - t**2 + 0.5 * t**3, np.where(t < 2, (2.0 - t) ** 3 / 6.0, 0.0)
    )


def _symbol_ratio(shifts, n):
    k = np.arange(n // 2 + 1)
    w0 = 2.0 / 3.0 + np.cos(2 * np.pi * k / n) / 3.0
    s = np.asarray(shifts, dtype=float)[..., None]
    p = np.floor(s)
    fr = s - p
    ws = np.zeros(s.shape[:-1] + (k.size,), dtype=complex)
    for q in (-1, 0, 1, 2):
        ws += bspline3(q - fr) * np.exp(-2j * np.pi * k * q / n)
    return ws * np.exp(-2j * np.pi * k * p / n) / w0


def shift_periodic(values, shifts, axis=-1):
    """Sample each line of ``values`` along ``axis`` at index i - s.

    ``shifts`` broadcasts against the remaining axes (one shift per line).
    """
    if not np.any(shifts):
        return np.array(values, dtype=float)
    a = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = a.shape[-1]
    out = np.fft.irfft(np.fft.rfft(a, axis=-1) * _symbol_ratio(shifts, n), n=n, axis=-1)
    return np.moveaxis(out, -1, axis)


def shift_zero_extended(values, shifts, axis=-1):
    """Like ``shift_periodic`` but the data is taken to be 0 beyond both ends."""
    if not np.any(shifts):
        return np.array(values, dtype=float)
    a = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = a.shape[-1]
    pad = int(np.ceil(np.max(np.abs(shifts), initial=0.0))) + 16
    padded = np.zeros(a.shape[:-1] + (n + 2 * pad,))
    padded[..., pad : pad + n] = a
    out = shift_periodic(padded, shifts, axis=-1)[..., pad : pad + n]
    return np.moveaxis(out, -1, axis)


def periodic_spline_eval(values, positions):
    """Evaluate the periodic cubic spline through ``values`` at fractional indices."""
    values = np.asarray(values, dtype=float)
    n = values.size
    k = np.arange(n // 2 + 1)
    w0 = 2.0 / 3.0 + np.cos(2 * np.pi * k / n) / 3.0
    coef = np.fft.irfft(np.fft.rfft(values) / w0, n=n)
    y = np.asarray(positions, dtype=float)
    base = np.floor(y)
    out = np.zeros_like(y)
    for q in (-1, 0, 1, 2):
        m = base + q
        out += coef[np.mod(m, n).astype(int)] * bspline3(y - m)
    return out


def fourier_resample(values, positions, period):
    """Trigonometric interpolation of periodic samples at arbitrary positions."""
    values = np.asarray(values, dtype=float)
    n = values.size
    c = np.fft.fft(values) / n
    kk = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        c = c.copy()
        c[n // 2] *= 0.5
        c = np.append(c, c[n // 2])
        kk = np.append(kk, n // 2)
        kk[n // 2] = -n // 2
    ph = np.exp(2j * np.pi * np.outer(np.asarray(positions, dtype=float) / period, kk))
    return (ph @ c).real


def spectral_derivative(values, period, order=1, axis=-1):
    """d^order/dx^order of periodic samples; the Nyquist mode is dropped for odd orders."""
    a = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = a.shape[-1]
    if order == 0:
        return np.moveaxis(a.copy(), -1, axis)
    kk = 2 * np.pi * np.arange(n // 2 + 1) / period
    sym = (1j * kk) ** order
    if n % 2 == 0 and order % 2:
        sym[-1] = 0.0
    out = np.fft.irfft(np.fft.rfft(a, axis=-1) * sym, n=n, axis=-1)
    return np.moveaxis(out, -1, axis)
