"""Protocol drivers: homodyne sampling of the meter, weak measurements,
the squeezed-meter delta limit and endoscopic tomography of the signal.

Every phase point of a sweep is independent.  Its random stream is derived
from ``(seed, phase index)`` alone, so results do not depend on the order
(or concurrency) in which phases are processed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.signal import fftconvolve, resample
from scipy.stats import gaussian_kde

from . import kernels, qnd
from .errors import PreconditionError
from .states import (
    DEFAULT_GRID,
    GridSpec,
    QuadratureWaveFunction,
    SqueezedVacuum,
    in_frame,
    make_state,
)
from .transforms import rotate_to
from .wigner import WignerGrid, wigner_marginals

MIN_WIDTH_RATIO = 10.0
MIN_TOMOGRAPHY_PHASES = 8
BACKPROJECTION_ANGLES = 256
DEFAULT_TOMOGRAPHY_METER = SqueezedVacuum(3.0)
ESTIMATORS = ("histogram", "kde")


@dataclass(frozen=True)
class MeasurementRecord:
    """One homodyne shot on the meter."""

    phi: float
    theta: float
    outcome: float
    shot_index: int


# --- sampling -----------------------------------------------------------------


def phase_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for phase point ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def sample_indices(density: np.ndarray, grid: GridSpec, n_shots: int, rng) -> np.ndarray:
    """Inverse-CDF draws of grid indices from the cell probabilities ``density * dx``."""
    if isinstance(n_shots, bool) or int(n_shots) != n_shots or n_shots < 0:
        raise ValueError(f"n_shots must be a non-negative integer, got {n_shots!r}")
    w = np.asarray(density, dtype=float)
    if w.shape != (grid.n_points,) or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("density must be finite, non-negative and live on the grid")
    total = float(w.sum() * grid.dx)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"density is not normalized (integral {total:.9g})")
    if n_shots == 0:
        return np.empty(0, dtype=np.int64)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    u = rng.random(int(n_shots))
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, grid.n_points - 1)


def sample_outcomes(density: np.ndarray, grid: GridSpec, n_shots: int, seed) -> np.ndarray:
    """``n_shots`` i.i.d. meter outcomes (grid points) drawn from ``density``.

    Deterministic given ``seed`` (an int, a ``SeedSequence`` or a ``Generator``).
    """
    return grid.x[sample_indices(density, grid, n_shots, seed)]


def histogram_density(indices: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Grid-cell histogram (no smoothing), normalized to unit integral."""
    if len(indices) == 0:
        raise ValueError("cannot estimate a density from an empty record set")
    counts = np.bincount(np.asarray(indices), minlength=grid.n_points).astype(float)
    return counts / (counts.sum() * grid.dx)


def kde_density(outcomes: np.ndarray, grid: GridSpec, bandwidth=None) -> np.ndarray:
    """Gaussian kernel estimate (``bandwidth`` as accepted by ``scipy.stats.gaussian_kde``)."""
    outcomes = np.asarray(outcomes, dtype=float)
    if outcomes.size < 2 or np.ptp(outcomes) == 0.0:
        return histogram_density(np.round((outcomes - grid.x_min) / grid.dx).astype(np.int64), grid)
    est = gaussian_kde(outcomes, bw_method=bandwidth)(grid.x)
    return est / (est.sum() * grid.dx)


def estimate_density(outcomes, grid: GridSpec, estimator: str = "histogram", bandwidth=None) -> np.ndarray:
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")
    outcomes = np.asarray(outcomes, dtype=float)
    if outcomes.size == 0:
        raise ValueError("cannot estimate a density from an empty record set")
    if estimator == "kde":
        return kde_density(outcomes, grid, bandwidth)
    idx = np.clip(np.round((outcomes - grid.x_min) / grid.dx).astype(np.int64), 0, grid.n_points - 1)
    return histogram_density(idx, grid)


# --- weak measurements --------------------------------------------------------


def _std(density: np.ndarray, x: np.ndarray) -> float:
    p = density / density.sum()
    m = float(np.sum(x * p))
    return math.sqrt(float(np.sum((x - m) ** 2 * p)))


@dataclass(frozen=True)
class WeakResult:
    shift: float
    standard_error: float
    expected_shift: float
    width_ratio: float
    fidelities: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    outcomes: np.ndarray = field(repr=False)

    @property
    def min_fidelity(self) -> float:
        return float(self.fidelities.min()) if self.fidelities.size else 1.0

    @property
    def z_score(self) -> float:
        if self.standard_error == 0.0:
            return 0.0 if self.shift == self.expected_shift else math.inf
        return (self.shift - self.expected_shift) / self.standard_error


def run_weak(
    signal,
    meter,
    cfg: qnd.CouplingConfig,
    shots: int,
    seed: int,
    signal_grid: GridSpec = DEFAULT_GRID,
    meter_grid: GridSpec = GridSpec(-50.0, 50.0, 1024),
) -> WeakResult:
    """Weak measurement of ``X_s(phi + pi/2)`` with a broad meter.

    ``signal`` and ``meter`` are presets or wavefunctions; a meter preset
    is prepared in the readout frame.  The meter must be broad: the std of
    ``|psi_m|^2`` has to be at least ten times the spread ``kappa * std(X_s)``
    that the signal imprints on the meter axis.
    """
    psi_s = signal if isinstance(signal, QuadratureWaveFunction) else make_state(signal, signal_grid)
    psi_m = meter if isinstance(meter, QuadratureWaveFunction) else in_frame(make_state(meter, meter_grid), cfg.theta)
    joint = qnd.entangle(psi_s, psi_m, cfg)
    sig, met = joint.signal, joint.meter
    p_s = sig.probability()
    p_m = met.probability()
    spread = cfg.kappa * abs(math.sin(cfg.delta)) * _std(p_s, sig.x)
    ratio = math.inf if spread == 0.0 else _std(p_m, met.x) / spread
    if ratio < MIN_WIDTH_RATIO:
        raise PreconditionError(
            f"meter is not broad enough for a weak measurement: width ratio {ratio:.3g} < {MIN_WIDTH_RATIO:g}"
        )
    w = qnd.meter_marginal(joint)
    mg = joint.meter_grid
    idx = sample_indices(w, mg, shots, phase_rng(seed, 0))
    outcomes = mg.x[idx]
    m0 = float(np.sum(mg.x * p_m) / np.sum(p_m))
    mean_s = float(np.sum(sig.x * p_s) / np.sum(p_s))
    expected = cfg.kappa * math.sin(cfg.delta) * mean_s
    if shots:
        shift = float(outcomes.mean()) - m0
        se = float(outcomes.std(ddof=1)) / math.sqrt(shots) if shots > 1 else math.inf
        density = histogram_density(idx, mg)
    else:
        shift = float(np.sum(mg.x * w) * mg.dx) - m0
        se = 0.0
        density = w
    fids = []
    prior = sig.amplitudes
    for j in np.unique(idx):
        c = qnd.condition(joint, int(j)).state.amplitudes
        fids.append(abs(np.sum(np.conj(prior) * c) * sig.grid.dx) ** 2)
    return WeakResult(shift, se, expected, ratio, np.array(fids), density, outcomes)


# --- delta limit ----------------------------------------------------------------


def rescale_density(meter_density: np.ndarray, meter_grid: GridSpec, kappa: float, signal_grid: GridSpec) -> np.ndarray:
    """``kappa * W~(kappa X)`` on ``signal_grid`` (linear interpolation), normalized."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    x = signal_grid.x
    offset = (signal_grid.x_min - meter_grid.x_min) / meter_grid.dx
    k0 = int(round(offset))
    aligned = (
        kappa == 1.0
        and math.isclose(meter_grid.dx, signal_grid.dx, rel_tol=1e-12)
        and abs(offset - k0) < 1e-9
        and 0 <= k0 <= meter_grid.n_points - signal_grid.n_points
    )
    if aligned:
        est = np.array(meter_density[k0:k0 + signal_grid.n_points], dtype=float)
    else:
        est = kappa * np.interp(kappa * x, meter_grid.x, meter_density, left=0.0, right=0.0)
    total = float(est.sum() * signal_grid.dx)
    if not total > 0.0:
        raise PreconditionError("rescaled density vanishes on the signal grid")
    return est / total


def delta_limit_reconstruct(
    records: Sequence[MeasurementRecord],
    kappa: float,
    meter_grid: GridSpec = DEFAULT_GRID,
    signal_grid: GridSpec = DEFAULT_GRID,
    estimator: str = "histogram",
    bandwidth=None,
) -> np.ndarray:
    """Density of ``X_s(phi + pi/2)`` estimated from out-of-phase meter records."""
    if len(records) == 0:
        raise ValueError("no measurement records")
    first = records[0]
    for r in records:
        if r.phi != first.phi or r.theta != first.theta:
            raise ValueError("records mix several phases")
    if abs(math.remainder(first.theta - first.phi - math.pi / 2, 2 * math.pi)) > 1e-9:
        raise ValueError("the delta limit needs theta = phi + pi/2 records")
    outcomes = np.array([r.outcome for r in records])
    est = estimate_density(outcomes, meter_grid, estimator, bandwidth)
    return rescale_density(est, meter_grid, kappa, signal_grid)


def default_meter_grid(signal_grid: GridSpec, kappa: float) -> GridSpec:
    """Meter grid with the signal spacing, wide enough for shifts ``kappa * X_s``.

    The half-width is at least ``(1 + kappa)`` times the signal half-width,
    rounded up to a power-of-two sample count; grid points stay aligned with
    the signal grid so that ``kappa = 1`` rescaling needs no interpolation.
    """
    signal_grid.require_symmetric()
    n = signal_grid.n_points
    target = math.ceil((1.0 + kappa) * n)
    n_m = 1 << (target - 1).bit_length()
    half = 0.5 * n_m * signal_grid.dx
    return GridSpec(-half, half, n_m)


def exact_meter_density(
    signal, meter, cfg: qnd.CouplingConfig, signal_grid: GridSpec, meter_grid: GridSpec | None = None,
    backend: str = "grid", cutoffs=(64, 64),
) -> np.ndarray:
    """Exact meter outcome density, meter preset prepared in the readout frame."""
    if meter_grid is None:
        meter_grid = default_meter_grid(signal_grid, cfg.kappa)
    if backend == "grid":
        psi_s = make_state(signal, signal_grid)
        psi_m = in_frame(make_state(meter, meter_grid), cfg.theta)
        return qnd.meter_marginal(qnd.entangle(psi_s, psi_m, cfg))
    if backend == "fock":
        from .oracle import OracleScenario, fock_meter_marginal, fock_run

        scen = OracleScenario(signal, meter, cfg.kappa, cfg.phi, cfg.theta, signal_grid, meter_grid, tuple(cutoffs))
        return fock_meter_marginal(fock_run(scen), meter_grid)
    raise ValueError(f"unknown backend {backend!r}")


# --- phase sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class MarginalSet:
    """Per-phase estimates of the signal marginal ``W(X_s; phi + pi/2)``.

    ``densities[a]`` is the rescaled estimate on ``grid`` for ``phases[a]``;
    ``exact[a]`` is the rescaled exact meter density it was sampled from
    (identical to ``densities[a]`` in exact mode).
    """

    phases: np.ndarray
    grid: GridSpec
    densities: np.ndarray = field(repr=False)
    exact: np.ndarray = field(repr=False)
    shots: tuple
    kappa: float
    meter_grid: GridSpec
    meter_densities: np.ndarray = field(repr=False)
    outcome_indices: tuple = field(default=(), repr=False)
    estimator: dict = field(default_factory=dict)

    def __post_init__(self):
        ph = np.array(self.phases, dtype=float)
        if ph.ndim != 1 or ph.size == 0:
            raise ValueError("a marginal set needs at least one phase")
        if np.any(ph < 0) or np.any(ph >= math.pi) or np.any(np.diff(ph) <= 0):
            raise ValueError("phases must be strictly increasing in [0, pi)")
        ph.flags.writeable = False
        object.__setattr__(self, "phases", ph)

    @property
    def marginal_angles(self) -> np.ndarray:
        return self.phases + math.pi / 2

    def records(self) -> Iterator[MeasurementRecord]:
        for a, idx in enumerate(self.outcome_indices):
            phi = float(self.phases[a])
            theta = phi + math.pi / 2
            xs = self.meter_grid.x[idx]
            for shot, x in enumerate(xs):
                yield MeasurementRecord(phi, theta, float(x), shot)


def _validate_phases(phases) -> np.ndarray:
    ph = np.asarray(phases, dtype=float)
    if ph.ndim != 1 or ph.size == 0:
        raise ValueError("phase list is empty")
    if not np.all(np.isfinite(ph)):
        raise ValueError("phases must be finite")
    if len(np.unique(ph)) != len(ph):
        raise ValueError("phase list contains duplicates")
    if np.any(ph < 0) or np.any(ph >= math.pi):
        raise ValueError("phases must lie in [0, pi)")
    if np.any(np.diff(ph) <= 0):
        raise ValueError("phases must be strictly increasing")
    return ph


def uniform_phases(count: int, start: float = 0.0, stop: float = math.pi) -> np.ndarray:
    """``count`` phases ``start + k (stop - start) / count`` (``stop`` excluded)."""
    if count < 1:
        raise ValueError("phase count must be positive")
    return start + (stop - start) * np.arange(count) / count


def sweep_phases(
    signal,
    meter,
    kappa: float,
    phases,
    shots: int,
    seed: int,
    signal_grid: GridSpec = DEFAULT_GRID,
    meter_grid: GridSpec | None = None,
    estimator: str = "histogram",
    bandwidth=None,
    backend: str = "grid",
    cutoffs=(64, 64),
    workers: int = 1,
) -> MarginalSet:
    """Out-of-phase (``theta = phi + pi/2``) measurement at every phase.

    ``shots = 0`` uses the exact meter densities instead of sampling.  The
    signal is prepared afresh for every shot, so the shots at one phase are
    i.i.d. draws from the same meter density.
    """
    ph = _validate_phases(phases)
    if meter_grid is None:
        meter_grid = default_meter_grid(signal_grid, kappa)
    if isinstance(shots, bool) or int(shots) != shots or shots < 0:
        raise ValueError(f"shots must be a non-negative integer, got {shots!r}")
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}")

    def one(a):
        cfg = qnd.CouplingConfig(kappa, ph[a], ph[a] + math.pi / 2)
        w = exact_meter_density(signal, meter, cfg, signal_grid, meter_grid, backend, cutoffs)
        exact = rescale_density(w, meter_grid, kappa, signal_grid)
        if shots == 0:
            return w, exact, exact, np.empty(0, dtype=np.int64)
        idx = sample_indices(w, meter_grid, shots, phase_rng(seed, a))
        if estimator == "histogram":
            est = histogram_density(idx, meter_grid)
        else:
            est = kde_density(meter_grid.x[idx], meter_grid, bandwidth)
        return w, exact, rescale_density(est, meter_grid, kappa, signal_grid), idx

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(len(ph))))
    else:
        results = [one(a) for a in range(len(ph))]
    meta = {"estimator": "exact" if shots == 0 else estimator, "backend": backend}
    if shots and estimator == "kde":
        meta["bandwidth"] = bandwidth
    return MarginalSet(
        phases=ph,
        grid=signal_grid,
        densities=np.array([r[2] for r in results]),
        exact=np.array([r[1] for r in results]),
        shots=tuple(int(shots) for _ in ph),
        kappa=float(kappa),
        meter_grid=meter_grid,
        meter_densities=np.array([r[0] for r in results]),
        outcome_indices=tuple(r[3] for r in results) if shots else (),
        estimator=meta,
    )


# --- reconstruction ---------------------------------------------------------------


def ramp_kernel(n: int, dx: float, cutoff: float) -> np.ndarray:
    """Spatial ramp filter ``h(s) = (1/2pi) int_{|k|<cutoff} |k| exp(iks) dk`` at ``s = j dx``,
    ``j = -(n-1) .. n-1``.
    """
    s = dx * np.arange(-(n - 1), n)
    h = np.empty_like(s)
    zero = s == 0
    sz = s[~zero]
    h[zero] = cutoff * cutoff / (2.0 * math.pi)
    h[~zero] = (cutoff * np.sin(cutoff * sz) / sz + (np.cos(cutoff * sz) - 1.0) / (sz * sz)) / math.pi
    return h


def angular_weights(angles: np.ndarray) -> np.ndarray:
    """Trapezoidal weights of the back-projection integral over one period ``pi``."""
    n = len(angles)
    if n == 1:
        return np.array([math.pi])
    nxt = np.roll(angles, -1)
    nxt[-1] += math.pi
    prv = np.roll(angles, 1)
    prv[0] -= math.pi
    return 0.5 * (nxt - prv)


@dataclass(frozen=True)
class ReconstructionResult:
    wigner: WignerGrid
    residuals: np.ndarray
    shots_used: int
    cutoff: float


def _check_coverage(angles: np.ndarray) -> None:
    if len(angles) < MIN_TOMOGRAPHY_PHASES:
        raise PreconditionError(
            f"tomography needs at least {MIN_TOMOGRAPHY_PHASES} phases, got {len(angles)}"
        )
    gaps = np.diff(np.append(angles, angles[0] + math.pi))
    if gaps.max() > math.pi / 4 + 1e-12:
        raise PreconditionError(
            f"phases leave a gap of {gaps.max():.3f} rad in [0, pi); at most pi/4 is allowed"
        )


def is_uniform(angles: np.ndarray) -> bool:
    """True when increasing ``angles`` are equally spaced over one period ``pi``."""
    if len(angles) < 2 or np.any(np.diff(angles) <= 0):
        return False
    gaps = np.diff(np.append(angles, angles[0] + math.pi))
    return bool(np.allclose(gaps, math.pi / len(angles), rtol=0.0, atol=1e-9))


def upsample_sinogram(densities: np.ndarray, angles: np.ndarray, n_out: int):
    """Trigonometric interpolation of uniformly spaced marginals onto ``n_out`` angles.

    Over a full turn the marginals are periodic, and the second half is the
    mirror image of the first (``p(s; a + pi) = p(-s; a)``), so ``2 * len(angles)``
    equally spaced samples of the angular dependence are available.  States
    with finite photon number have band-limited angular dependence, which
    makes the interpolation exact once the phases resolve the bandwidth.
    """
    n_a, n_s = densities.shape
    if n_out <= n_a:
        return densities, angles
    mirror = densities[:, (-np.arange(n_s)) % n_s]
    full_turn = np.concatenate([densities, mirror], axis=0)
    fine = resample(full_turn, 2 * n_out, axis=0)[:n_out]
    return fine, angles[0] + math.pi * np.arange(n_out) / n_out


def filtered_back_projection(
    densities: np.ndarray, angles: np.ndarray, grid: GridSpec, cutoff: float | None = None
) -> np.ndarray:
    """Inverse Radon transform of marginals ``densities[a]`` of ``s = x cos(angles[a]) - p sin(angles[a])``.

    The ramp filter is band-limited at ``cutoff`` (default: half the grid
    Nyquist wavenumber, ``pi / (2 dx)``).  Returns ``W[i, k]`` at
    ``(grid.x[i], grid.x[k])``.
    """
    dx, n = grid.dx, grid.n_points
    kc = math.pi / (2.0 * dx) if cutoff is None else float(cutoff)
    # filtered projections have ~1/s^2 tails, so they are kept on a grid twice
    # as wide as the marginals (the corners of the box lie at |s| = sqrt(2) L)
    pad = n // 2
    h = ramp_kernel(n + 2 * pad, dx, kc)
    full = fftconvolve(np.asarray(densities, dtype=float), h[None, :], axes=1) * dx
    # full[:, j] is the filtered projection at s = x_min + (j - (n + 2 pad - 1)) dx
    start = n + 2 * pad - 1 - pad
    filtered = full[:, start:start + n + 2 * pad]
    order = np.argsort(np.mod(angles, math.pi))
    weights = np.empty(len(angles))
    weights[order] = angular_weights(np.mod(angles, math.pi)[order])
    x = grid.x
    return kernels.backproject(
        np.ascontiguousarray(filtered), grid.x_min - pad * dx, dx,
        np.cos(angles), np.sin(angles), weights / (2.0 * math.pi), x, x,
    )


def reconstruct_wigner(
    m: MarginalSet, cutoff: float | None = None, n_angles: int = BACKPROJECTION_ANGLES
) -> ReconstructionResult:
    """Filtered back-projection of a phase sweep, normalized to unit volume.

    Uniformly spaced sweeps are first interpolated in angle onto ``n_angles``
    projections (see :func:`upsample_sinogram`); otherwise the measured
    angles are back-projected directly with trapezoidal weights.

    Residuals are the L1 distances between the Radon marginals of the
    reconstruction and the exact marginals carried by ``m``.
    """
    angles = m.marginal_angles
    _check_coverage(np.sort(np.mod(angles, math.pi)))
    g = m.grid
    g.require_symmetric()
    kc = math.pi / (2.0 * g.dx) if cutoff is None else float(cutoff)
    dens, proj_angles = m.densities, angles
    if is_uniform(angles):
        dens, proj_angles = upsample_sinogram(m.densities, angles, n_angles)
    values = filtered_back_projection(dens, proj_angles, g, kc)
    total = float(values.sum() * g.dx * g.dx)
    if not total > 0.0:
        raise PreconditionError("reconstructed Wigner function has non-positive volume")
    wg = WignerGrid(g, g, values / total, 0.0)
    radon = wigner_marginals(wg, angles, order=3)
    residuals = np.sum(np.abs(radon - m.exact), axis=1) * g.dx
    return ReconstructionResult(wg, residuals, int(sum(m.shots)), kc)


def marginal_of(wf: QuadratureWaveFunction, angle: float) -> np.ndarray:
    """``|psi(x; angle)|^2`` of a wavefunction given at any angle."""
    return rotate_to(wf, angle).probability()
