"""Hot inner loops, each in a numba and a pure-numpy flavour.

The public names at the bottom point at the numba versions unless
``QNDTOMO_DISABLE_NUMBA`` is set; both flavours are kept importable so
tests and ``benchmarks/bench_kernels.py`` can compare them directly.
"""

import numpy as np

from ._accel import USE_NUMBA, njit, prange


# --- joint-state assembly ---------------------------------------------------


def shifted_spectra_numpy(spectrum, k, shifts):
    """Row ``i`` holds ``spectrum * exp(-i k shifts[i])`` (Fourier translation by ``shifts[i]``)."""
    return spectrum[None, :] * np.exp(-1j * np.outer(shifts, k))


@njit(parallel=True)
def shifted_spectra_numba(spectrum, k, shifts):
    ns, nm = shifts.shape[0], k.shape[0]
    out = np.empty((ns, nm), dtype=np.complex128)
    for i in prange(ns):
        s = shifts[i]
        for j in range(nm):
            out[i, j] = spectrum[j] * np.exp(-1j * (k[j] * s))
    return out


def apply_row_phase_numpy(rows, psi_s, x_s, x_m, quad, lin):
    """``rows[i, j] * psi_s[i] * exp(-i (quad x_s[i]^2 + lin x_s[i] x_m[j]))``."""
    phase = quad * (x_s * x_s)[:, None] + lin * np.outer(x_s, x_m)
    return rows * psi_s[:, None] * np.exp(-1j * phase)


@njit(parallel=True)
def apply_row_phase_numba(rows, psi_s, x_s, x_m, quad, lin):
    ns, nm = rows.shape
    out = np.empty((ns, nm), dtype=np.complex128)
    for i in prange(ns):
        xs = x_s[i]
        a = quad * xs * xs
        b = lin * xs
        ps = psi_s[i]
        for j in range(nm):
            out[i, j] = rows[i, j] * ps * np.exp(-1j * (a + b * x_m[j]))
    return out


# --- Wigner correlation -------------------------------------------------------


def wigner_correlation_numpy(fine, n_rows, origin=0):
    """Correlation ``g[j, m] = f[c - t] * conj(f[c + t])`` with ``c = 2j + origin``, ``t = m - n_rows``.

    ``fine`` holds samples at half the coarse spacing, row ``j`` sitting at
    fine index ``2j + origin``; entries reaching outside ``fine`` are zero.
    """
    n_fine = fine.shape[0]
    j = np.arange(n_rows)[:, None]
    t = np.arange(2 * n_rows)[None, :] - n_rows
    left = 2 * j + origin - t
    right = 2 * j + origin + t
    ok = (left >= 0) & (left < n_fine) & (right >= 0) & (right < n_fine)
    out = np.zeros((n_rows, 2 * n_rows), dtype=np.complex128)
    out[ok] = fine[left[ok]] * np.conj(fine[right[ok]])
    return out


@njit(parallel=True)
def wigner_correlation_numba(fine, n_rows, origin=0):
    n_fine = fine.shape[0]
    out = np.zeros((n_rows, 2 * n_rows), dtype=np.complex128)
    for j in prange(n_rows):
        c = 2 * j + origin
        for m in range(2 * n_rows):
            t = m - n_rows
            left = c - t
            right = c + t
            if 0 <= left < n_fine and 0 <= right < n_fine:
                out[j, m] = fine[left] * np.conj(fine[right])
    return out


# --- filtered back-projection -------------------------------------------------


def backproject_numpy(filtered, s0, ds, cosines, sines, weights, x, p):
    """``W[i, k] = sum_a weights[a] * q_a(x[i] cos_a - p[k] sin_a)``.

    ``q_a`` is ``filtered[a]`` sampled at ``s0 + n * ds`` and linearly
    interpolated; it is zero outside its sample range.
    """
    n_s = filtered.shape[1]
    s_grid = s0 + ds * np.arange(n_s)
    out = np.zeros((x.shape[0], p.shape[0]))
    for a in range(filtered.shape[0]):
        s = x[:, None] * cosines[a] - p[None, :] * sines[a]
        out += weights[a] * np.interp(s, s_grid, filtered[a], left=0.0, right=0.0)
    return out


@njit(parallel=True)
def backproject_numba(filtered, s0, ds, cosines, sines, weights, x, p):
    n_a, n_s = filtered.shape
    nx, n_p = x.shape[0], p.shape[0]
    out = np.zeros((nx, n_p))
    # rows are independent; within a row the angle order is fixed, so the
    # result does not depend on the thread schedule
    for i in prange(nx):
        for a in range(n_a):
            c = cosines[a]
            sn = sines[a]
            w = weights[a]
            q = filtered[a]
            xc = x[i] * c
            for k in range(n_p):
                u = (xc - p[k] * sn - s0) / ds
                if u < 0.0 or u > n_s - 1:
                    continue
                n = int(u)
                if n >= n_s - 1:
                    out[i, k] += w * q[n_s - 1]
                else:
                    frac = u - n
                    out[i, k] += w * ((1.0 - frac) * q[n] + frac * q[n + 1])
    return out


if USE_NUMBA:
    shifted_spectra = shifted_spectra_numba
    apply_row_phase = apply_row_phase_numba
    wigner_correlation = wigner_correlation_numba
    backproject = backproject_numba
else:
    shifted_spectra = shifted_spectra_numpy
    apply_row_phase = apply_row_phase_numpy
    wigner_correlation = wigner_correlation_numpy
    backproject = backproject_numpy
