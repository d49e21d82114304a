"""Wigner functions on a phase-space grid.

``W(X, P) = 1/(2 pi) int dY exp(i P Y) psi(X - Y/2) conj(psi(X + Y/2))``.
The ``Y`` integral is a Riemann sum with step ``dx``; the half-step values
``psi(X +- Y/2)`` come from exact band-limited interpolation onto a grid
twice as fine.  The ``P`` axis defaults to the same grid as ``X`` and is
evaluated with a chirp-z transform, so one square grid serves Wigner
functions, their Radon slices and tomographic reconstructions alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage
from scipy.signal import fftconvolve

from . import kernels
from .states import GridSpec, QuadratureWaveFunction
from .transforms import czt, upsample2

IMAG_TOLERANCE = 1e-10
_ROW_CHUNK = 256


@dataclass(frozen=True)
class WignerGrid:
    """``values[i, k] = W(x_grid.x[i], p_grid.x[k])``; the X axis is the quadrature at ``angle``."""

    x_grid: GridSpec
    p_grid: GridSpec
    values: np.ndarray = field(repr=False)
    angle: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.x_grid.n_points, self.p_grid.n_points):
            raise ValueError(f"Wigner values have shape {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def total(self) -> float:
        return float(self.values.sum() * self.x_grid.dx * self.p_grid.dx)

    def purity(self) -> float:
        """``2 pi sum W^2 dX dP`` (1 for pure states)."""
        return float(2.0 * math.pi * np.sum(self.values ** 2) * self.x_grid.dx * self.p_grid.dx)

    def x_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.p_grid.dx

    def p_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.x_grid.dx


def _wigner_from_fine(fine: np.ndarray, x_grid: GridSpec, p_grid: GridSpec, origin: int = 0) -> np.ndarray:
    n = x_grid.n_points
    dx = x_grid.dx
    m = np.arange(2 * n)
    y = (m - n) * dx
    pre = np.exp(1j * p_grid.x_min * y)
    k = np.arange(p_grid.n_points)
    post = np.exp(-1j * k * p_grid.dx * n * dx) * dx / (2.0 * math.pi)
    out = np.empty((n, p_grid.n_points), dtype=complex)
    corr = kernels.wigner_correlation(fine, n, origin)
    for start in range(0, n, _ROW_CHUNK):
        block = corr[start:start + _ROW_CHUNK] * pre
        out[start:start + _ROW_CHUNK] = czt(block, p_grid.dx * dx, p_grid.n_points) * post
    return out


def _realify(values: np.ndarray, what: str) -> np.ndarray:
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue > IMAG_TOLERANCE:
        raise ArithmeticError(f"{what} has imaginary residue {residue:.3e}")
    return values.real


def wigner_of(wf: QuadratureWaveFunction, p_grid: GridSpec | None = None) -> WignerGrid:
    """Wigner function of a normalized pure state, X axis at ``wf.angle``."""
    p_grid = wf.grid if p_grid is None else p_grid
    fine = upsample2(wf.amplitudes, wf.grid.dx)
    values = _realify(_wigner_from_fine(fine, wf.grid, p_grid), "Wigner transform")
    return WignerGrid(wf.grid, p_grid, values, wf.angle)


def conjugate_p_grid(grid: GridSpec) -> GridSpec:
    """The FFT-native momentum grid of the Y sum: ``dP = pi / (n dx)``, centred on 0.

    On this grid the Dirichlet kernel of the finite Y range vanishes at every
    bin but one, so pure-phase filters give single-bin ridges.
    """
    n = grid.n_points
    dp = math.pi / (n * grid.dx)
    return GridSpec(-0.5 * n * dp, 0.5 * n * dp, n)


def fine_grid(grid: GridSpec) -> GridSpec:
    """Same box as ``grid`` at half the spacing."""
    return GridSpec(grid.x_min, grid.x_max, 2 * grid.n_points)


def filter_wigner(
    f: Callable[[np.ndarray], np.ndarray],
    x_grid: GridSpec,
    p_grid: GridSpec | None = None,
    angle: float = 0.0,
) -> WignerGrid:
    """Unnormalized Wigner kernel of a filter function.

    ``f`` is evaluated directly at half-step points (filters are not
    band-limited on the box, so they are not resampled), over twice the box
    so that every row sees the full ``Y`` window.  On
    :func:`conjugate_p_grid` a pure-phase filter is then a one-bin ridge.
    """
    p_grid = x_grid if p_grid is None else p_grid
    n, half = x_grid.n_points, 0.5 * x_grid.dx
    points = x_grid.x_min + half * (np.arange(4 * n) - n)
    fine = np.asarray(f(points), dtype=complex)
    # the Y window runs over [-n, n); its unpaired end term makes the sum
    # complex, and the real part is exactly the end-symmetrized (trapezoid) sum
    values = _wigner_from_fine(fine, x_grid, p_grid, n).real
    return WignerGrid(x_grid, p_grid, values, angle)


def extended_p_grid(grid: GridSpec) -> GridSpec:
    """Twice the range of ``grid`` at the same spacing."""
    return GridSpec(2.0 * grid.x_min, 2.0 * grid.x_max, 2 * grid.n_points)


def p_convolve(w_s: WignerGrid, w_f: WignerGrid) -> np.ndarray:
    """``int dP' W_s(X, P - P') W_f(X, P')`` sampled on ``w_s.p_grid``.

    ``w_f`` must share the X grid and the P spacing of ``w_s`` and cover
    (at least) the P range of ``w_s`` widened by its support.
    """
    ps, pf = w_s.p_grid, w_f.p_grid
    if w_s.x_grid != w_f.x_grid or not math.isclose(ps.dx, pf.dx, rel_tol=1e-12):
        raise ValueError("Wigner grids are not compatible for a P convolution")
    # P_k - P'_l = ps.x_min + (k - l + offset) dP
    offset = (ps.x_min - pf.x_min) - ps.x_min
    shift = int(round(offset / ps.dx))
    if not math.isclose(shift * ps.dx, offset, abs_tol=1e-9 * ps.dx):
        raise ValueError("P grids are not aligned")
    full = fftconvolve(w_f.values, w_s.values, axes=1)
    n = ps.n_points
    # full[:, q] = sum_l W_f[:, l] W_s[:, q - l]; need q - l = k - l + shift
    lo = shift
    if lo < 0 or lo + n > full.shape[1]:
        raise ValueError("filter P grid does not cover the signal P grid")
    return full[:, lo:lo + n] * ps.dx


def convolution_check(
    signal: QuadratureWaveFunction,
    conditioned: QuadratureWaveFunction,
    f: Callable[[np.ndarray], np.ndarray],
) -> float:
    """Max deviation between the conditioned-state Wigner function and the
    P-convolution of the prior Wigner function with the filter kernel.
    """
    w_cond = wigner_of(conditioned)
    w_s = wigner_of(signal)
    w_f = filter_wigner(f, signal.grid, extended_p_grid(signal.grid), signal.angle)
    return float(np.max(np.abs(w_cond.values - p_convolve(w_s, w_f))))


def wigner_marginals(w: WignerGrid, angles, order: int = 5) -> np.ndarray:
    """:func:`wigner_marginal` at several angles (rows), sharing one spline fit."""
    angles = list(angles)
    coeffs = None
    out = np.empty((len(angles), w.x_grid.n_points))
    for row, angle in enumerate(angles):
        exact = _axis_marginal(w, angle)
        if exact is not None:
            out[row] = exact
            continue
        if coeffs is None:
            coeffs = ndimage.spline_filter(w.values, order=order, mode="constant") if order > 1 else w.values
        out[row] = _rotated_marginal(w, coeffs, angle, order)
    return out


def _axis_marginal(w: WignerGrid, angle: float):
    xg, pg = w.x_grid, w.p_grid
    a = math.remainder(angle - w.angle, 2.0 * math.pi)
    quarter = round(a / (math.pi / 2))
    if abs(a - quarter * math.pi / 2) > 1e-12 or xg != pg:
        return None
    q = quarter % 4
    flip = (-np.arange(xg.n_points)) % xg.n_points
    if q == 0:
        return w.x_marginal()
    if q == 2:
        return w.x_marginal()[flip]
    # s = -p for a = pi/2 and s = p for a = -pi/2
    return w.p_marginal()[flip] if q == 1 else w.p_marginal()


def _rotated_marginal(w: WignerGrid, coeffs: np.ndarray, angle: float, order: int) -> np.ndarray:
    xg, pg = w.x_grid, w.p_grid
    a = angle - w.angle
    c, s_ = math.cos(a), math.sin(a)
    s = xg.x[:, None]
    t = xg.x[None, :]
    x = s * c + t * s_
    p = -s * s_ + t * c
    coords = np.array([(x - xg.x_min) / xg.dx, (p - pg.x_min) / pg.dx])
    vals = ndimage.map_coordinates(coeffs, coords, order=order, mode="constant", cval=0.0, prefilter=False)
    return vals.sum(axis=1) * xg.dx


def wigner_marginal(w: WignerGrid, angle: float, order: int = 5) -> np.ndarray:
    """Density of the quadrature ``X(angle)`` obtained by integrating ``w``.

    ``X(angle)`` corresponds to the phase-space coordinate
    ``s = x cos(a) - p sin(a)`` with ``a = angle - w.angle``.  Angles that
    are multiples of pi/2 are plain row/column sums; other angles rotate
    the grid by spline interpolation (``order``) before summing.  The result
    is sampled on ``w.x_grid``.
    """
    return wigner_marginals(w, [angle], order)[0]
