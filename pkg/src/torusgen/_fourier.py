"""Trigonometric interpolation helpers shared by the orbit and averaging code."""
import numpy as np


def rcoeffs(values):
    """One-sided Fourier coefficients ``c_q`` with ``f = sum_q c_q e^{iqx} + c.c.``.

    ``c_0`` holds the mean once (not doubled); the Nyquist entry is halved so
    that evaluation as ``Re(c_0 + 2 sum c_q e^{iqx})`` reproduces the cosine.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    c = np.fft.rfft(values, axis=-1) / n
    if n % 2 == 0:
        c[..., -1] *= 0.5
    return c


def evaluate(c, x, period, deriv=0):
    """Evaluate the series with coefficients ``c`` at points ``x``."""
    x = np.asarray(x, dtype=float)
    q = np.arange(c.shape[-1])
    kappa = 2.0 * np.pi / period
    ph = np.exp(1j * kappa * np.multiply.outer(x, q))
    w = (1j * kappa * q) ** deriv if deriv else np.ones(q.size)
    fac = np.full(q.size, 2.0)
    fac[0] = 1.0
    return np.real(ph @ (c * w * fac))


def shift_samples(values, frac):
    """Resample a periodic grid function at points shifted by ``frac`` cells."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    F = np.fft.rfft(values, axis=-1)
    q = np.arange(F.shape[-1])
    F = F * np.exp(2j * np.pi * q * frac / n)
    if n % 2 == 0:
        F[..., -1] = F[..., -1].real * np.cos(np.pi * frac)
    return np.fft.irfft(F, n=n, axis=-1)


def tail_energy(values, frac=0.25):
    """Share of spectral energy in the top ``frac`` of resolved frequencies."""
    F = np.abs(np.fft.rfft(np.asarray(values, dtype=float), axis=-1)) ** 2
    total = F.sum()
    if total == 0.0:
        return 0.0
    cut = int(np.ceil(F.shape[-1] * (1.0 - frac)))
    return float(F[..., cut:].sum() / total)
