"""Truncated Fock-basis brute force of the whole protocol.

Independent of :mod:`qndtomo.qnd`: the interaction
``exp(-i kappa X_s(phi + pi/2) X_m(phi))`` is exponentiated as a finite
matrix instead of using the closed-form shifted wavefunction.  Slow by
design; used as ground truth in tests and by ``--backend fock``.

Quadrature matrices follow the package convention
``X(theta) = (a exp(i theta) + a^dagger exp(-i theta)) / sqrt(2)``, the
operator whose eigenbasis has ``<x; theta | n> = exp(i n theta) h_n(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_hermite, gammaln

from .errors import PreconditionError, TruncationError
from .states import (
    DEFAULT_FOCK_CUTOFF,
    Cat,
    Coherent,
    Fock,
    GridSpec,
    QuadratureWaveFunction,
    SqueezedVacuum,
    Superposition,
    Vacuum,
)

TAIL_LEVELS = 5


@dataclass(frozen=True)
class FockState:
    cutoff: int
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        if c.shape != (self.cutoff + 1,):
            raise ValueError(f"expected {self.cutoff + 1} coefficients, got {c.shape}")
        total = float(np.sum(np.abs(c) ** 2))
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"Fock coefficients not normalized (sum |c|^2 = {total!r})")
        if abs(c[-1]) ** 2 >= 1e-10:
            raise TruncationError(f"cutoff {self.cutoff} too small: |c_N|^2 = {abs(c[-1])**2:.2e}")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    def rotated(self, angle: float) -> "FockState":
        n = np.arange(self.cutoff + 1)
        return FockState(self.cutoff, self.coefficients * np.exp(1j * n * angle))


@dataclass(frozen=True)
class FockJointState:
    """Joint amplitudes ``D[n, m]``: ``Psi(X_s, X_m) = sum D[n, m] h_n(X_s) h_m(X_m)``.

    The representation angles are already folded into ``D``.
    """

    cutoffs: tuple
    coefficients: np.ndarray = field(repr=False)
    signal_angle: float = 0.0
    meter_angle: float = 0.0

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        if c.shape != (self.cutoffs[0] + 1, self.cutoffs[1] + 1):
            raise ValueError("coefficient shape does not match cutoffs")
        total = float(np.sum(np.abs(c) ** 2))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"joint Fock state not normalized ({total!r})")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1).astype(complex)


def quadrature_matrix(cutoff: int, theta: float) -> np.ndarray:
    a = annihilation(cutoff)
    return (a * np.exp(1j * theta) + a.conj().T * np.exp(-1j * theta)) / math.sqrt(2.0)


def interaction_matrix(signal_cutoff: int, meter_cutoff: int, phi: float) -> np.ndarray:
    """``X_s(phi + pi/2) (x) X_m(phi)`` on the truncated product space."""
    return np.kron(quadrature_matrix(signal_cutoff, phi + math.pi / 2), quadrature_matrix(meter_cutoff, phi))


def _normalized(c: np.ndarray, cutoff: int) -> FockState:
    c = np.asarray(c, dtype=complex)
    return FockState(cutoff, c / math.sqrt(float(np.sum(np.abs(c) ** 2))))


def _coherent_coefficients(alpha: complex, cutoff: int) -> np.ndarray:
    c = np.empty(cutoff + 1, dtype=complex)
    c[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, cutoff + 1):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def fock_preset(preset, cutoff: int = DEFAULT_FOCK_CUTOFF) -> FockState:
    """Fock amplitudes of a state preset (lab frame, angle 0)."""
    c = np.zeros(cutoff + 1, dtype=complex)
    if isinstance(preset, Vacuum):
        c[0] = 1.0
    elif isinstance(preset, Coherent):
        c = _coherent_coefficients(preset.alpha, cutoff)
    elif isinstance(preset, SqueezedVacuum):
        t = math.tanh(preset.r)
        c[0] = 1.0 / math.sqrt(math.cosh(preset.r))
        for n in range(2, cutoff + 1, 2):
            c[n] = c[n - 2] * (-t) * math.sqrt((n - 1) / n)
    elif isinstance(preset, Fock):
        if preset.n > cutoff:
            raise TruncationError(f"fock n={preset.n} above cutoff {cutoff}")
        c[preset.n] = 1.0
    elif isinstance(preset, Cat):
        c = _coherent_coefficients(preset.alpha, cutoff) + preset.parity * _coherent_coefficients(
            -preset.alpha, cutoff
        )
    elif isinstance(preset, Superposition):
        for w, sub in preset.terms:
            c = c + w * fock_preset(sub, cutoff).coefficients
    else:
        raise TypeError(f"unknown preset {preset!r}")
    return _normalized(c, cutoff)


def hermite_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """``h_n(x) = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi))`` for n = 0..n_max, via scipy."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max + 1,) + x.shape)
    for n in range(n_max + 1):
        h = eval_hermite(n, x)
        lognorm = 0.5 * (n * math.log(2.0) + gammaln(n + 1.0) + 0.5 * math.log(math.pi))
        with np.errstate(divide="ignore"):
            out[n] = np.sign(h) * np.exp(np.log(np.abs(h)) - 0.5 * x * x - lognorm)
    return out


def fock_quadrature_wavefunction(
    state: FockState, angle: float, grid: GridSpec
) -> QuadratureWaveFunction:
    """``psi(x; angle) = sum_n c_n exp(i n angle) h_n(x)`` on ``grid``."""
    n = np.arange(state.cutoff + 1)
    amps = (state.coefficients * np.exp(1j * n * angle)) @ hermite_table(state.cutoff, grid.x)
    return QuadratureWaveFunction(grid, angle, amps)


def _tail_weight(c: np.ndarray, axis: int) -> float:
    p = np.abs(np.moveaxis(c, axis, 0)) ** 2
    return float(p[-TAIL_LEVELS:].sum())


def fock_evolve(
    signal: FockState, meter: FockState, kappa: float, phi: float, theta_readout: float
) -> FockJointState:
    """Apply ``exp(-i kappa X_s(phi+pi/2) X_m(phi))`` and express the result at the
    signal angle ``phi + pi/2`` and meter angle ``theta_readout``.

    The signal factor is diagonalized (it commutes with the interaction);
    each eigen-block ``exp(-i kappa lambda X_m(phi))`` is a dense matrix
    exponential by scaling and squaring.
    """
    ns, nm = signal.cutoff, meter.cutoff
    xs = quadrature_matrix(ns, phi + math.pi / 2)
    xm = quadrature_matrix(nm, phi)
    lam, vecs = np.linalg.eigh(xs)
    joint = np.outer(signal.coefficients, meter.coefficients)
    rotated = vecs.conj().T @ joint
    for i, lam_i in enumerate(lam):
        if kappa != 0.0:
            rotated[i] = expm(-1j * kappa * lam_i * xm) @ rotated[i]
    evolved = vecs @ rotated
    for axis, name in ((0, "signal"), (1, "meter")):
        tail = _tail_weight(evolved, axis)
        if tail >= 1e-8:
            raise TruncationError(
                f"{name} cutoff too small after evolution: top-{TAIL_LEVELS} weight {tail:.2e}"
            )
    sig_angle = phi + math.pi / 2
    d = evolved * np.exp(1j * np.arange(ns + 1) * sig_angle)[:, None]
    d = d * np.exp(1j * np.arange(nm + 1) * theta_readout)[None, :]
    return FockJointState((ns, nm), d, sig_angle, theta_readout)


def joint_wavefunction(joint: FockJointState, signal_grid: GridSpec, meter_grid: GridSpec) -> np.ndarray:
    hs = hermite_table(joint.cutoffs[0], signal_grid.x)
    hm = hermite_table(joint.cutoffs[1], meter_grid.x)
    return hs.T @ joint.coefficients @ hm


def fock_meter_marginal(joint: FockJointState, meter_grid: GridSpec) -> np.ndarray:
    """``W(x_m) = sum_n |sum_m D[n, m] h_m(x_m)|^2`` (trace over the signal in Fock basis)."""
    hm = hermite_table(joint.cutoffs[1], meter_grid.x)
    return np.sum(np.abs(joint.coefficients @ hm) ** 2, axis=0)


def fock_signal_marginal(joint: FockJointState, signal_grid: GridSpec) -> np.ndarray:
    hs = hermite_table(joint.cutoffs[0], signal_grid.x)
    return np.sum(np.abs(joint.coefficients.T @ hs) ** 2, axis=0)


def fock_conditioned(joint: FockJointState, x_m: float, signal_grid: GridSpec) -> QuadratureWaveFunction:
    """Normalized signal wavefunction (at the joint's signal angle) given meter outcome ``x_m``."""
    hm = hermite_table(joint.cutoffs[1], np.array([x_m]))[:, 0]
    d = joint.coefficients @ hm
    total = float(np.sum(np.abs(d) ** 2))
    if total <= 1e-28:
        raise PreconditionError(f"outcome {x_m} has vanishing probability in the Fock oracle")
    amps = (d / math.sqrt(total)) @ hermite_table(joint.cutoffs[0], signal_grid.x)
    return QuadratureWaveFunction(signal_grid, joint.signal_angle, amps)


@dataclass(frozen=True)
class OracleScenario:
    """A protocol run representable on both the grid and in the Fock basis.

    ``meter_frame`` is ``"readout"`` when the meter preset describes
    ``psi_m(x; theta)`` directly, ``"lab"`` when it is the angle-0 state.
    """

    signal: object
    meter: object
    kappa: float
    phi: float
    theta: float
    signal_grid: GridSpec = GridSpec()
    meter_grid: GridSpec = GridSpec()
    cutoffs: tuple = (DEFAULT_FOCK_CUTOFF, DEFAULT_FOCK_CUTOFF)
    meter_frame: str = "readout"


def fock_run(scenario: OracleScenario) -> FockJointState:
    sig = fock_preset(scenario.signal, scenario.cutoffs[0])
    met = fock_preset(scenario.meter, scenario.cutoffs[1])
    if scenario.meter_frame == "readout":
        met = met.rotated(-scenario.theta)
    return fock_evolve(sig, met, scenario.kappa, scenario.phi, scenario.theta)


def oracle_compare(scenario: OracleScenario, quantiles=(0.1, 0.5, 0.9)) -> dict:
    """Run ``scenario`` through the grid simulator and the Fock oracle and compare.

    Returns the max pointwise meter-marginal deviation and the worst
    conditioned-state infidelity over the most likely outcome and the
    outcomes at the given CDF quantiles.
    """
    from . import qnd
    from .states import make_state

    sg, mg = scenario.signal_grid, scenario.meter_grid
    cfg = qnd.CouplingConfig(scenario.kappa, scenario.phi, scenario.theta)
    try:
        fj = fock_run(scenario)
        psi_s = make_state(scenario.signal, sg)
        psi_m = make_state(scenario.meter, mg)
    except (TruncationError, ValueError) as exc:
        raise PreconditionError(f"scenario not representable: {exc}") from exc
    if scenario.meter_frame == "readout":
        from .states import in_frame

        psi_m = in_frame(psi_m, cfg.theta)
    joint = qnd.entangle(psi_s, psi_m, cfg)
    w_grid = qnd.meter_marginal(joint)
    w_fock = fock_meter_marginal(fj, mg)
    cdf = np.cumsum(w_grid) * mg.dx
    picks = {int(np.argmax(w_grid))}
    picks.update(int(np.searchsorted(cdf, q)) for q in quantiles)
    worst = 0.0
    for idx in sorted(picks):
        grid_state = qnd.condition(joint, idx).state
        fock_state = fock_conditioned(fj, mg.x[idx], sg)
        overlap = np.sum(np.conj(grid_state.amplitudes) * fock_state.amplitudes) * sg.dx
        worst = max(worst, 1.0 - abs(overlap) ** 2)
    return {
        "marginal_deviation": float(np.max(np.abs(w_grid - w_fock))),
        "infidelity": float(worst),
        "outcomes": [float(mg.x[i]) for i in sorted(picks)],
    }
