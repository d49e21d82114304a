"""Signal-meter entanglement under the QND coupling and meter-conditioned signal states.

The interaction ``exp(-i kappa X_s(phi + pi/2) X_m(phi))`` with
``kappa = 2 sigma t`` leaves the signal quadrature ``X_s(phi + pi/2)``
untouched and, in the meter basis at readout angle ``theta``, shifts the
meter wavefunction by ``kappa X_s sin(theta - phi)`` and multiplies it by
``exp(-i gamma)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import OffGridError, ZeroProbabilityError
from .states import TAIL_TOLERANCE, GridSpec, QuadratureWaveFunction
from .transforms import rotate_to, wavenumbers

PROBABILITY_FLOOR = 1e-14
_TWO_PI = 2.0 * math.pi


def _sincos(delta: float) -> tuple[float, float]:
    """``(sin, cos)`` of ``delta`` with multiples of pi/2 snapped to exact values."""
    quarter = delta / (math.pi / 2)
    q = round(quarter)
    if abs(quarter - q) * (math.pi / 2) <= 1e-12:
        return ((0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0))[q % 4]
    return math.sin(delta), math.cos(delta)


@dataclass(frozen=True)
class CouplingConfig:
    """Coupling strength ``kappa = 2 sigma t``, pump phase ``phi`` and meter readout angle ``theta``."""

    kappa: float
    phi: float = 0.0
    theta: float = math.pi / 2

    def __post_init__(self):
        k = float(self.kappa)
        if not math.isfinite(k) or k <= 0.0:
            raise ValueError(f"kappa must be positive and finite, got {self.kappa!r}")
        object.__setattr__(self, "kappa", k)
        object.__setattr__(self, "phi", float(self.phi) % _TWO_PI)
        object.__setattr__(self, "theta", float(self.theta) % _TWO_PI)

    @property
    def delta(self) -> float:
        return self.theta - self.phi

    @property
    def signal_angle(self) -> float:
        return self.phi + math.pi / 2


def gamma_phase(x_s, x_m, delta: float, sigma_t: float):
    """Phase ``gamma`` imprinted on the joint amplitude, ``Psi ~ exp(-i gamma)``.

    ``gamma = -(sigma_t x_s)^2 sin(2 delta) + 2 sigma_t x_s x_m cos(delta)``.
    The sign of the quadratic term is the one consistent with the shift
    ``x_m -> x_m - 2 sigma_t x_s sin(delta)`` in this package's quadrature
    convention (checked against the Fock-basis propagator).
    """
    s, c = _sincos(delta)
    q = sigma_t * np.asarray(x_s)
    return -(q * q) * (2.0 * s * c) + 2.0 * q * np.asarray(x_m) * c


@dataclass(frozen=True)
class JointState:
    """Dense joint amplitudes ``Psi[i, j] = Psi(X_s = x_i, X_m = x_j)``.

    ``signal`` and ``meter`` keep the pre-interaction wavefunctions at the
    representation angles used (``phi + pi/2`` and ``theta``).
    """

    signal_grid: GridSpec
    meter_grid: GridSpec
    signal_angle: float
    meter_angle: float
    amplitudes: np.ndarray = field(repr=False)
    coupling: CouplingConfig = None
    signal: QuadratureWaveFunction = field(default=None, repr=False)
    meter: QuadratureWaveFunction = field(default=None, repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.signal_grid.n_points, self.meter_grid.n_points):
            raise ValueError(f"joint amplitudes have shape {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        total = float(np.sum(np.abs(amps) ** 2)) * self.signal_grid.dx * self.meter_grid.dx
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"joint state not normalized: {total!r}")


@dataclass(frozen=True)
class ConditionedState:
    outcome: float
    probability_density: float
    state: QuadratureWaveFunction


def _check_fit(signal: QuadratureWaveFunction, meter: QuadratureWaveFunction, shifts: np.ndarray):
    """Every joint amplitude above ``TAIL_TOLERANCE`` must stay clear of the meter grid edges."""
    mg = meter.grid
    w = mg.edge_width
    inner_lo, inner_hi = mg.x[w], mg.x[mg.n_points - 1 - w]
    mag_m = np.abs(meter.amplitudes)
    peak = mag_m.max()
    lo, hi = np.inf, -np.inf
    for a, s in zip(np.abs(signal.amplitudes), shifts):
        if a * peak < TAIL_TOLERANCE:
            continue
        idx = np.flatnonzero(mag_m >= TAIL_TOLERANCE / a)
        lo = min(lo, mg.x[idx[0]] + s)
        hi = max(hi, mg.x[idx[-1]] + s)
    if lo < inner_lo or hi > inner_hi:
        raise OffGridError(
            f"shifted meter occupies [{lo:.3f}, {hi:.3f}] but the meter grid only holds "
            f"[{inner_lo:.3f}, {inner_hi:.3f}] away from its edges; use a larger meter grid "
            f"or a smaller kappa"
        )


def entangle(
    signal: QuadratureWaveFunction, meter: QuadratureWaveFunction, cfg: CouplingConfig
) -> JointState:
    """Joint state after the QND interaction.

    ``Psi(X_s, X_m) = psi_s(X_s; phi+pi/2) exp(-i gamma) psi_m(X_m - kappa X_s sin(theta-phi); theta)``.
    Both inputs are rotated to the required angles first; each meter row
    is translated exactly in Fourier space.
    """
    sig = rotate_to(signal, cfg.signal_angle)
    met = rotate_to(meter, cfg.theta)
    sg, mg = sig.grid, met.grid
    s, c = _sincos(cfg.delta)
    x_s, x_m = sg.x, mg.x
    shifts = cfg.kappa * s * x_s
    _check_fit(sig, met, shifts)
    if s == 0.0:
        rows = np.broadcast_to(met.amplitudes, (sg.n_points, mg.n_points))
    else:
        spectra = kernels.shifted_spectra(np.fft.fft(met.amplitudes), wavenumbers(mg.n_points, mg.dx), shifts)
        rows = np.fft.ifft(spectra, axis=1)
    quad = -0.25 * cfg.kappa ** 2 * (2.0 * s * c)
    lin = cfg.kappa * c
    amps = kernels.apply_row_phase(
        np.ascontiguousarray(rows), sig.amplitudes, x_s, x_m, quad, lin
    )
    return JointState(sg, mg, sig.angle, met.angle, amps, cfg, sig, met)


def meter_marginal(joint: JointState) -> np.ndarray:
    """Meter outcome density ``W(X_m) = sum_s |Psi|^2 dX_s`` on the meter grid."""
    return np.sum(np.abs(joint.amplitudes) ** 2, axis=0) * joint.signal_grid.dx


def signal_marginal(joint: JointState) -> np.ndarray:
    """Density of ``X_s(phi + pi/2)`` after the interaction (meter traced out)."""
    return np.sum(np.abs(joint.amplitudes) ** 2, axis=1) * joint.meter_grid.dx


def fix_global_phase(amps: np.ndarray) -> np.ndarray:
    """Multiply by a unit phase making the largest-magnitude sample real and positive."""
    k = int(np.argmax(np.abs(amps)))
    a = amps[k]
    return amps if a == 0 else amps * (abs(a) / a)


def condition(joint: JointState, outcome_index: int) -> ConditionedState:
    """Signal state given the meter outcome at grid index ``outcome_index``."""
    mg = joint.meter_grid
    if not 0 <= outcome_index < mg.n_points:
        raise IndexError(f"outcome index {outcome_index} outside the meter grid")
    column = joint.amplitudes[:, outcome_index]
    w = float(np.sum(np.abs(column) ** 2) * joint.signal_grid.dx)
    if w <= PROBABILITY_FLOOR:
        raise ZeroProbabilityError(
            f"meter outcome {mg.x[outcome_index]:.6g} has probability density {w:.3e}"
        )
    amps = fix_global_phase(column / math.sqrt(w))
    state = QuadratureWaveFunction(joint.signal_grid, joint.signal_angle, amps)
    return ConditionedState(float(mg.x[outcome_index]), w, state)


def _bandlimited_eval(wf: QuadratureWaveFunction, points: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant of ``wf`` evaluated at arbitrary ``points``."""
    g = wf.grid
    k = wavenumbers(g.n_points, g.dx)
    spectrum = np.fft.fft(wf.amplitudes) / g.n_points
    return np.exp(1j * np.outer(points - g.x_min, k)) @ spectrum


def filter_values(
    meter: QuadratureWaveFunction,
    outcome: float,
    cfg: CouplingConfig,
    points,
    probability_density: float,
) -> np.ndarray:
    """Filter ``f(X_s | X_m) = psi_m(X_m - kappa X_s sin(theta-phi); theta) exp(-i gamma) / sqrt(W(X_m))``
    evaluated at arbitrary signal points.

    ``meter`` must already be the wavefunction at the readout angle.
    """
    if probability_density <= PROBABILITY_FLOOR:
        raise ZeroProbabilityError(
            f"outcome {outcome:.6g} has probability density {probability_density:.3e}"
        )
    if abs(math.remainder(meter.angle - cfg.theta, _TWO_PI)) > 1e-9:
        raise ValueError("meter wavefunction must be given at the readout angle theta")
    s, _ = _sincos(cfg.delta)
    x_s = np.asarray(points, dtype=float)
    shifted = _bandlimited_eval(meter, outcome - cfg.kappa * s * x_s)
    phase = gamma_phase(x_s, outcome, cfg.delta, 0.5 * cfg.kappa)
    return shifted * np.exp(-1j * phase) / math.sqrt(probability_density)


def filter_function(
    meter: QuadratureWaveFunction,
    outcome: float,
    cfg: CouplingConfig,
    signal_grid: GridSpec,
    probability_density: float,
) -> np.ndarray:
    """The filter sampled on ``signal_grid``; see :func:`filter_values`."""
    return filter_values(meter, outcome, cfg, signal_grid.x, probability_density)


def joint_filter(joint: JointState, outcome_index: int):
    """Filter for the outcome at ``outcome_index`` of ``joint``, as a callable of ``X_s``."""
    w = float(meter_marginal(joint)[outcome_index])
    x_m = float(joint.meter_grid.x[outcome_index])
    return lambda points: filter_values(joint.meter, x_m, joint.coupling, points, w)
