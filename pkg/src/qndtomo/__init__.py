"""Quantum-non-demolition coupling of a signal and a meter mode, simulated on
quadrature grids, with endoscopic homodyne tomography of the signal."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    OffGridError,
    PreconditionError,
    QNDError,
    TruncationError,
    ZeroProbabilityError,
)
from .states import (  # noqa: E402
    Cat,
    Coherent,
    Fock,
    GridSpec,
    QuadratureWaveFunction,
    SqueezedVacuum,
    Superposition,
    Vacuum,
    make_state,
)

__all__ = [
    "__version__",
    "Cat",
    "Coherent",
    "ConfigError",
    "Fock",
    "GridSpec",
    "OffGridError",
    "PreconditionError",
    "QNDError",
    "QuadratureWaveFunction",
    "SqueezedVacuum",
    "Superposition",
    "TruncationError",
    "Vacuum",
    "ZeroProbabilityError",
    "make_state",
]
