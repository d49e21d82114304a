"""Changes of quadrature angle and exact band-limited translations.

``rotate`` applies ``exp(i * delta * N)`` to a wavefunction, i.e. it maps
``psi(x; theta)`` to ``psi(x; theta + delta)``.  The integral kernel is the
fractional Fourier kernel

    K(x, x') = exp(-i delta/2) / sqrt(-2 pi i sin(delta))
               * exp(-i [(x^2 + x'^2) cos(delta) - 2 x x'] / (2 sin(delta)))

evaluated as a Riemann sum on the grid.  The ``x_j x_k`` cross term is a
chirp-z transform, computed with Bluestein's chirp-FFT-chirp algorithm on a
zero-padded buffer of at least twice the grid length.
"""

from __future__ import annotations

import math

import numpy as np

from .states import QuadratureWaveFunction

ANGLE_EPS = 1e-12


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def _chirp(w: float, j: np.ndarray) -> np.ndarray:
    """``exp(i w j^2 / 2)`` with the phase reduced mod 2 pi before exponentiation."""
    j = np.asarray(j, dtype=float)
    phase = np.mod(0.5 * w * (j * j), 2.0 * np.pi)
    return np.exp(1j * phase)


def czt(x, w: float, n_out: int | None = None, axis: int = -1) -> np.ndarray:
    """``X_k = sum_m x_m exp(i w m k)`` for ``k = 0 .. n_out-1`` along ``axis``."""
    x = np.moveaxis(np.asarray(x, dtype=complex), axis, -1)
    m = x.shape[-1]
    n_out = m if n_out is None else int(n_out)
    length = _next_pow2(m + n_out - 1)
    a = np.zeros(x.shape[:-1] + (length,), dtype=complex)
    a[..., :m] = x * _chirp(w, np.arange(m))
    b = np.zeros(length, dtype=complex)
    b[:n_out] = np.conj(_chirp(w, np.arange(n_out)))
    b[length - m + 1:] = np.conj(_chirp(w, np.arange(-(m - 1), 0)))
    conv = np.fft.ifft(np.fft.fft(a, axis=-1) * np.fft.fft(b), axis=-1)
    out = conv[..., :n_out] * _chirp(w, np.arange(n_out))
    return np.moveaxis(out, -1, axis)


def _frft_kernel_apply(amps: np.ndarray, x0: float, dx: float, delta: float) -> np.ndarray:
    s, c = math.sin(delta), math.cos(delta)
    if abs(abs(delta) - math.pi / 2) <= ANGLE_EPS:
        c, s = 0.0, math.copysign(1.0, delta)
    cot, csc = c / s, 1.0 / s
    n = amps.shape[-1]
    k = np.arange(n)
    x = x0 + dx * k
    pre = amps * np.exp(1j * (-0.5 * cot * x * x + csc * x0 * dx * k))
    core = czt(pre, csc * dx * dx)
    post = np.exp(1j * (-0.5 * cot * x * x + csc * (x0 * x0 + x0 * dx * k)))
    prefactor = np.exp(-0.5j * delta) / np.sqrt(complex(0.0, -2.0 * np.pi * s))
    return prefactor * dx * post * core


def _parity(amps: np.ndarray) -> np.ndarray:
    n = amps.shape[-1]
    return amps[(-np.arange(n)) % n]


def rotate_amplitudes(amps: np.ndarray, x0: float, dx: float, delta: float) -> np.ndarray:
    """Array-level rotation on a symmetric grid starting at ``x0``."""
    d = math.remainder(float(delta), 2.0 * math.pi)
    if abs(d) <= ANGLE_EPS:
        return np.array(amps, dtype=complex)
    if abs(abs(d) - math.pi) <= ANGLE_EPS:
        return _parity(np.asarray(amps, dtype=complex))
    # keep |sin| >= 1/sqrt(2) in every kernel application
    if abs(d) < math.pi / 4 or abs(d) > 3 * math.pi / 4:
        quarter = math.copysign(math.pi / 2, d) if abs(d) > 3 * math.pi / 4 else math.pi / 2
        first = _frft_kernel_apply(np.asarray(amps, dtype=complex), x0, dx, d - quarter)
        return _frft_kernel_apply(first, x0, dx, quarter)
    return _frft_kernel_apply(np.asarray(amps, dtype=complex), x0, dx, d)


def rotate(wf: QuadratureWaveFunction, delta_theta: float) -> QuadratureWaveFunction:
    """Re-express ``wf`` in the quadrature basis at ``wf.angle + delta_theta``.

    Unitary up to discretization error; ``rotate(wf, pi/2)`` is the unitary
    Fourier transform ``(2 pi)^-1/2 int exp(i x x') psi(x') dx'`` and
    ``rotate(wf, pi)`` is the parity flip ``psi(-x)``.
    """
    wf.grid.require_symmetric()
    if abs(math.remainder(float(delta_theta), 2.0 * math.pi)) <= ANGLE_EPS:
        return wf
    amps = rotate_amplitudes(wf.amplitudes, wf.grid.x_min, wf.grid.dx, delta_theta)
    return wf.with_amplitudes(amps, angle=wf.angle + delta_theta)


def rotate_to(wf: QuadratureWaveFunction, angle: float) -> QuadratureWaveFunction:
    return rotate(wf, angle - wf.angle)


def wavenumbers(n: int, dx: float) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(n, d=dx)


def fourier_shift(amps: np.ndarray, s: float, dx: float, axis: int = -1) -> np.ndarray:
    """Band-limited translation ``psi(x) -> psi(x - s)`` along ``axis``."""
    amps = np.asarray(amps, dtype=complex)
    n = amps.shape[axis]
    k = wavenumbers(n, dx)
    shape = [1] * amps.ndim
    shape[axis] = n
    phase = np.exp(-1j * k * s).reshape(shape)
    return np.fft.ifft(np.fft.fft(amps, axis=axis) * phase, axis=axis)


def shift(wf: QuadratureWaveFunction, s: float) -> QuadratureWaveFunction:
    """Translate ``wf`` by ``s``; raises ``OffGridError`` if mass reaches the grid edge."""
    if s == 0:
        return wf
    return wf.with_amplitudes(fourier_shift(wf.amplitudes, s, wf.grid.dx))


def upsample2(amps: np.ndarray, dx: float) -> np.ndarray:
    """Samples at half the spacing: ``out[2j] = psi(x_j)``, ``out[2j+1] = psi(x_j + dx/2)``."""
    amps = np.asarray(amps, dtype=complex)
    out = np.empty(2 * amps.shape[-1], dtype=complex)
    out[0::2] = amps
    out[1::2] = fourier_shift(amps, -0.5 * dx, dx)
    return out
