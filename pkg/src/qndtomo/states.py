"""Grid-sampled quadrature wavefunctions and the state presets used by the protocol.

Conventions used throughout the package:

* quadratures are dimensionless with hbar = 1 and vacuum variance 1/2;
* the wavefunction of a state at representation angle ``theta`` is
  ``psi(x; theta) = sum_n c_n exp(i n theta) h_n(x)`` where ``h_n`` are the
  normalized Hermite functions and ``c_n`` the Fock amplitudes.  Number
  states are therefore strict eigenfunctions of a change of angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Mapping, Sequence, Union

import numpy as np

from .errors import ConfigError, OffGridError

TAIL_TOLERANCE = 1e-8
EDGE_FRACTION = 0.05
DEFAULT_FOCK_CUTOFF = 64


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid ``x_k = x_min + k * dx`` with ``dx = (x_max - x_min) / n_points``.

    The right end point is excluded, which keeps ``x = 0`` on symmetric
    grids and makes the grid periodic-FFT friendly.
    """

    x_min: float = -10.0
    x_max: float = 10.0
    n_points: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        n = self.n_points
        if isinstance(n, bool) or int(n) != n:
            raise ValueError(f"n_points must be an integer, got {n!r}")
        object.__setattr__(self, "n_points", int(n))
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if not self.x_min < self.x_max:
            raise ValueError(f"x_min must be < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n_points < 64 or self.n_points & (self.n_points - 1):
            raise ValueError(f"n_points must be a power of two >= 64, got {self.n_points}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def is_symmetric(self) -> bool:
        return abs(self.x_min + self.x_max) <= 1e-12 * max(1.0, abs(self.x_max))

    @property
    def edge_width(self) -> int:
        """Number of samples on each side that make up the outer 5% of the grid."""
        return max(1, int(math.ceil(EDGE_FRACTION * self.n_points)))

    def require_symmetric(self) -> None:
        if not self.is_symmetric:
            raise ValueError(
                f"operation requires a symmetric grid, got [{self.x_min}, {self.x_max}]"
            )

    def index_of(self, value: float) -> int:
        """Index of the grid point nearest to ``value``."""
        k = int(round((value - self.x_min) / self.dx))
        if not 0 <= k < self.n_points:
            raise ValueError(f"{value} lies outside the grid [{self.x_min}, {self.x_max})")
        return k

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points}


DEFAULT_GRID = GridSpec()


def edge_amplitude(amplitudes: np.ndarray, grid: GridSpec, axis: int = -1) -> float:
    """Largest magnitude found in the outer 5% band on either side of ``axis``."""
    w = grid.edge_width
    a = np.moveaxis(np.abs(amplitudes), axis, -1)
    return float(max(a[..., :w].max(), a[..., -w:].max()))


@dataclass(frozen=True)
class QuadratureWaveFunction:
    """Complex amplitudes ``psi(x; angle)`` sampled on ``grid``.

    Construction fails with :class:`OffGridError` when the state does not
    fit its box, i.e. when any amplitude in the outer 5% of the grid
    exceeds ``TAIL_TOLERANCE``.  Normalization is not enforced here so that
    unnormalized superpositions can be represented; see :func:`renormalize`.
    """

    grid: GridSpec
    angle: float
    amplitudes: np.ndarray = field(repr=False)
    check_tails: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes, np.complex128)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} amplitudes, got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "angle", float(self.angle))
        if self.check_tails:
            tail = edge_amplitude(amps, self.grid)
            if tail >= TAIL_TOLERANCE:
                raise OffGridError(
                    f"state does not fit grid [{self.grid.x_min}, {self.grid.x_max}]: "
                    f"edge amplitude {tail:.3e} >= {TAIL_TOLERANCE:.0e}"
                )

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def probability(self) -> np.ndarray:
        """Density ``|psi|^2`` on the grid."""
        return np.abs(self.amplitudes) ** 2

    def with_amplitudes(self, amplitudes, angle=None) -> "QuadratureWaveFunction":
        return QuadratureWaveFunction(
            self.grid, self.angle if angle is None else angle, amplitudes
        )


def norm(wf: QuadratureWaveFunction) -> float:
    return float(np.sum(np.abs(wf.amplitudes) ** 2) * wf.grid.dx)


def renormalize(wf: QuadratureWaveFunction) -> QuadratureWaveFunction:
    n = norm(wf)
    if not n > 0.0:
        raise ValueError("cannot renormalize a zero-norm wavefunction")
    return wf.with_amplitudes(wf.amplitudes / math.sqrt(n))


def in_frame(wf: QuadratureWaveFunction, angle: float) -> QuadratureWaveFunction:
    """Reinterpret the amplitudes of ``wf`` as the wavefunction at ``angle``.

    This is a relabeling, not a rotation: it describes a state prepared
    directly in the ``angle`` quadrature frame.
    """
    return wf.with_amplitudes(wf.amplitudes, angle=angle)


def mean(wf: QuadratureWaveFunction) -> float:
    p = wf.probability()
    return float(np.sum(wf.x * p) / np.sum(p))


def variance(wf: QuadratureWaveFunction) -> float:
    p = wf.probability()
    total = np.sum(p)
    m = np.sum(wf.x * p) / total
    return float(np.sum((wf.x - m) ** 2 * p) / total)


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Normalized Hermite functions ``h_0 .. h_{n_max}`` evaluated at ``x``.

    Uses the two-term recursion
    ``h_{n+1} = sqrt(2/(n+1)) x h_n - sqrt(n/(n+1)) h_{n-1}``, which never
    forms factorials and stays stable for large ``n``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


# --- presets -------------------------------------------------------------


@dataclass(frozen=True)
class Vacuum:
    kind: ClassVar[str] = "vacuum"


@dataclass(frozen=True)
class Coherent:
    alpha: complex
    kind: ClassVar[str] = "coherent"

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))


@dataclass(frozen=True)
class SqueezedVacuum:
    """Squeezed vacuum; ``r > 0`` narrows the angle-0 quadrature to variance ``exp(-2r)/2``."""

    r: float
    kind: ClassVar[str] = "squeezed_vacuum"

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))


@dataclass(frozen=True)
class Fock:
    n: int
    kind: ClassVar[str] = "fock"

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 0:
            raise ValueError(f"fock n must be a non-negative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class Cat:
    alpha: complex
    parity: int = 1
    kind: ClassVar[str] = "cat"

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if self.parity not in (1, -1):
            raise ValueError(f"cat parity must be +1 or -1, got {self.parity!r}")


@dataclass(frozen=True)
class Superposition:
    terms: tuple  # of (weight, preset)
    kind: ClassVar[str] = "superposition"

    def __post_init__(self):
        terms = tuple((complex(w), p) for w, p in self.terms)
        if not terms:
            raise ValueError("superposition needs at least one term")
        object.__setattr__(self, "terms", terms)


StatePreset = Union[Vacuum, Coherent, SqueezedVacuum, Fock, Cat, Superposition]


def _coherent_amplitudes(alpha: complex, x: np.ndarray) -> np.ndarray:
    # Global phase matches sum_n exp(-|a|^2/2) a^n / sqrt(n!) h_n(x).
    return np.pi ** -0.25 * np.exp(
        -0.5 * x * x + math.sqrt(2.0) * alpha * x - 0.5 * alpha * alpha - 0.5 * abs(alpha) ** 2
    )


def preset_amplitudes(preset, grid: GridSpec, fock_cutoff: int = DEFAULT_FOCK_CUTOFF) -> np.ndarray:
    """Unnormalized amplitudes of ``preset`` at angle 0 (analytic, no renormalization)."""
    x = grid.x
    if isinstance(preset, Vacuum):
        return np.pi ** -0.25 * np.exp(-0.5 * x * x) + 0j
    if isinstance(preset, Coherent):
        return _coherent_amplitudes(preset.alpha, x)
    if isinstance(preset, SqueezedVacuum):
        s = math.exp(2.0 * preset.r)
        return (s / np.pi) ** 0.25 * np.exp(-0.5 * s * x * x) + 0j
    if isinstance(preset, Fock):
        if preset.n > fock_cutoff:
            raise ValueError(f"fock n={preset.n} exceeds the Fock cutoff {fock_cutoff}")
        return hermite_functions(preset.n, x)[preset.n] + 0j
    if isinstance(preset, Cat):
        return _coherent_amplitudes(preset.alpha, x) + preset.parity * _coherent_amplitudes(
            -preset.alpha, x
        )
    if isinstance(preset, Superposition):
        total = np.zeros(grid.n_points, dtype=complex)
        for weight, sub in preset.terms:
            amps = preset_amplitudes(sub, grid, fock_cutoff)
            amps = amps / math.sqrt(np.sum(np.abs(amps) ** 2) * grid.dx)
            total += weight * amps
        return total
    raise TypeError(f"unknown preset {preset!r}")


def make_state(
    preset, grid: GridSpec = DEFAULT_GRID, fock_cutoff: int = DEFAULT_FOCK_CUTOFF
) -> QuadratureWaveFunction:
    """Normalized angle-0 wavefunction of ``preset`` on ``grid``.

    Raises :class:`OffGridError` if the state does not fit the grid and
    ``ValueError`` for invalid preset parameters.
    """
    grid.require_symmetric()
    amps = preset_amplitudes(preset, grid, fock_cutoff)
    n = float(np.sum(np.abs(amps) ** 2) * grid.dx)
    if not n > 1e-12:
        raise ValueError(f"preset {preset!r} is not normalizable (norm {n:.3e})")
    return QuadratureWaveFunction(grid, 0.0, amps / math.sqrt(n))


# --- config representation ------------------------------------------------


def _alpha_from(d: Mapping, errors: list, path: str) -> complex:
    re, im = d.get("alpha_re", 0.0), d.get("alpha_im", 0.0)
    for key, v in (("alpha_re", re), ("alpha_im", im)):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            errors.append(f"{path}.{key}: expected a finite number, got {v!r}")
            return 0j
    return complex(re, im)


_PRESET_KEYS = {
    "vacuum": {"kind"},
    "coherent": {"kind", "alpha_re", "alpha_im"},
    "squeezed_vacuum": {"kind", "r"},
    "fock": {"kind", "n"},
    "cat": {"kind", "alpha_re", "alpha_im", "parity"},
    "superposition": {"kind", "terms"},
}


def preset_from_dict(d, path: str = "preset", errors: list | None = None):
    """Build a preset from its tagged-record form, e.g. ``{"kind": "fock", "n": 2}``.

    Collects every violation; raises :class:`ConfigError` when called
    without an ``errors`` list and anything is wrong.
    """
    own = errors is None
    errors = [] if own else errors
    result = None
    if not isinstance(d, Mapping):
        errors.append(f"{path}: expected a table, got {type(d).__name__}")
    else:
        kind = d.get("kind")
        if kind not in _PRESET_KEYS:
            errors.append(f"{path}.kind: unknown state kind {kind!r}")
        else:
            unknown = sorted(set(d) - _PRESET_KEYS[kind])
            for key in unknown:
                errors.append(f"{path}.{key}: unknown key for kind {kind!r}")
            n_before = len(errors)
            try:
                if kind == "vacuum":
                    result = Vacuum()
                elif kind == "coherent":
                    result = Coherent(_alpha_from(d, errors, path))
                elif kind == "squeezed_vacuum":
                    r = d.get("r")
                    if isinstance(r, bool) or not isinstance(r, (int, float)) or not math.isfinite(r):
                        errors.append(f"{path}.r: expected a finite number, got {r!r}")
                    else:
                        result = SqueezedVacuum(r)
                elif kind == "fock":
                    n = d.get("n")
                    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
                        errors.append(f"{path}.n: expected a non-negative integer, got {n!r}")
                    elif n > DEFAULT_FOCK_CUTOFF:
                        errors.append(f"{path}.n: {n} exceeds the Fock cutoff {DEFAULT_FOCK_CUTOFF}")
                    else:
                        result = Fock(n)
                elif kind == "cat":
                    parity = d.get("parity", 1)
                    alpha = _alpha_from(d, errors, path)
                    if parity not in (1, -1) or isinstance(parity, bool):
                        errors.append(f"{path}.parity: expected +1 or -1, got {parity!r}")
                    else:
                        result = Cat(alpha, parity)
                else:
                    terms = d.get("terms")
                    if not isinstance(terms, Sequence) or isinstance(terms, str) or not terms:
                        errors.append(f"{path}.terms: expected a non-empty array of tables")
                    else:
                        built = []
                        for i, term in enumerate(terms):
                            tpath = f"{path}.terms[{i}]"
                            if not isinstance(term, Mapping) or "state" not in term:
                                errors.append(f"{tpath}: expected a table with 'state' and weights")
                                continue
                            for key in sorted(set(term) - {"state", "weight_re", "weight_im"}):
                                errors.append(f"{tpath}.{key}: unknown key")
                            wr, wi = term.get("weight_re", 1.0), term.get("weight_im", 0.0)
                            if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in (wr, wi)):
                                errors.append(f"{tpath}: weights must be numbers")
                                continue
                            sub = preset_from_dict(term["state"], f"{tpath}.state", errors)
                            built.append((complex(wr, wi), sub))
                        if len(errors) == n_before:
                            result = Superposition(tuple(built))
            except ValueError as exc:
                errors.append(f"{path}: {exc}")
            if len(errors) > n_before:
                result = None
    if own and errors:
        raise ConfigError(errors)
    return result


def preset_to_dict(preset) -> dict:
    out = {"kind": preset.kind}
    if isinstance(preset, (Coherent, Cat)):
        out["alpha_re"] = preset.alpha.real
        out["alpha_im"] = preset.alpha.imag
    if isinstance(preset, Cat):
        out["parity"] = preset.parity
    if isinstance(preset, SqueezedVacuum):
        out["r"] = preset.r
    if isinstance(preset, Fock):
        out["n"] = preset.n
    if isinstance(preset, Superposition):
        out["terms"] = [
            {"weight_re": w.real, "weight_im": w.imag, "state": preset_to_dict(p)}
            for w, p in preset.terms
        ]
    return out
