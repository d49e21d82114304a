import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from qndtomo import _accel, kernels

needs_numba = pytest.mark.skipif(not _accel.NUMBA_AVAILABLE, reason="numba not installed")
rng = np.random.default_rng(2024)


def crandn(*shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@needs_numba
def test_shifted_spectra_flavours_agree():
    spec, k, shifts = crandn(128), rng.standard_normal(128) * 10, rng.standard_normal(64)
    a = kernels.shifted_spectra_numpy(spec, k, shifts)
    b = kernels.shifted_spectra_numba(spec, k, shifts)
    assert np.max(np.abs(a - b)) < 1e-13


@needs_numba
def test_apply_row_phase_flavours_agree():
    rows, psi = crandn(64, 96), crandn(64)
    xs, xm = rng.standard_normal(64) * 5, rng.standard_normal(96) * 5
    a = kernels.apply_row_phase_numpy(rows, psi, xs, xm, 0.3, -0.8)
    b = kernels.apply_row_phase_numba(rows, psi, xs, xm, 0.3, -0.8)
    assert np.max(np.abs(a - b)) < 1e-12


@needs_numba
@pytest.mark.parametrize("n_fine,origin", [(128, 0), (256, 64), (100, 3)])
def test_wigner_correlation_flavours_agree(n_fine, origin):
    fine = crandn(n_fine)
    a = kernels.wigner_correlation_numpy(fine, 64, origin)
    b = kernels.wigner_correlation_numba(fine, 64, origin)
    assert np.max(np.abs(a - b)) < 1e-14


def test_wigner_correlation_definition():
    fine = crandn(32)
    g = kernels.wigner_correlation_numpy(fine, 16)
    j, t = 5, 3
    assert g[j, t + 16] == pytest.approx(fine[2 * j - t] * np.conj(fine[2 * j + t]), abs=1e-15)
    assert g[0, 16 + 5] == 0  # left index out of range


@needs_numba
def test_backproject_flavours_agree():
    filtered = rng.standard_normal((12, 200))
    ang = np.linspace(0, np.pi, 12, endpoint=False)
    x = np.linspace(-3, 3, 40)
    args = (filtered, -5.0, 0.05, np.cos(ang), np.sin(ang), np.full(12, 0.1), x, x)
    a = kernels.backproject_numpy(*args)
    b = kernels.backproject_numba(*args)
    assert np.max(np.abs(a - b)) < 1e-12


def test_public_names_follow_switch():
    expected = "numba" if _accel.USE_NUMBA else "numpy"
    for name in ("shifted_spectra", "apply_row_phase", "wigner_correlation", "backproject"):
        assert getattr(kernels, name) is getattr(kernels, f"{name}_{expected}")


def test_disable_flag_selects_numpy_path():
    code = textwrap.dedent(
        """
        from qndtomo import _accel, kernels, qnd
        from qndtomo.states import Coherent, Vacuum, make_state
        assert _accel.NUMBA_DISABLED and not _accel.USE_NUMBA
        assert kernels.shifted_spectra is kernels.shifted_spectra_numpy
        j = qnd.entangle(make_state(Coherent(1.0)), make_state(Vacuum()), qnd.CouplingConfig(1.0, 0.0, 1.0))
        print(float(qnd.meter_marginal(j).sum()))
        """
    )
    env = dict(os.environ, QNDTOMO_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert float(out.stdout) > 0
