import math

import numpy as np
import pytest

from qndtomo import qnd
from qndtomo.states import DEFAULT_GRID, Cat, Coherent, Fock, GridSpec, SqueezedVacuum, Vacuum, in_frame, make_state
from qndtomo.transforms import rotate_to
from qndtomo.wigner import (
    WignerGrid,
    conjugate_p_grid,
    convolution_check,
    filter_wigner,
    wigner_marginal,
    wigner_marginals,
    wigner_of,
)

from conftest import PRESETS

SMALL = GridSpec(-10.0, 10.0, 256)


def mesh(w):
    return np.meshgrid(w.x_grid.x, w.p_grid.x, indexing="ij")


def test_vacuum():
    w = wigner_of(make_state(Vacuum(), SMALL))
    x, p = mesh(w)
    assert np.max(np.abs(w.values - np.exp(-x * x - p * p) / math.pi)) < 1e-12
    assert w.values[128, 128] == pytest.approx(1 / math.pi, abs=1e-12)


def test_fock_one_negative_origin():
    w = wigner_of(make_state(Fock(1), SMALL))
    x, p = mesh(w)
    r2 = x * x + p * p
    assert np.max(np.abs(w.values - (2 * r2 - 1) * np.exp(-r2) / math.pi)) < 1e-12
    assert w.values[128, 128] == pytest.approx(-1 / math.pi, abs=1e-12)


def test_coherent_displaced_gaussian():
    alpha = 1.0 + 0.5j
    w = wigner_of(make_state(Coherent(alpha), SMALL))
    x, p = mesh(w)
    x0, p0 = math.sqrt(2) * alpha.real, math.sqrt(2) * alpha.imag
    assert np.max(np.abs(w.values - np.exp(-(x - x0) ** 2 - (p - p0) ** 2) / math.pi)) < 1e-12


@pytest.mark.parametrize("preset", PRESETS, ids=repr)
def test_normalization_marginals_purity_bound(preset):
    wf = make_state(preset, SMALL if not isinstance(preset, Cat) else DEFAULT_GRID)
    w = wigner_of(wf)
    assert w.total() == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(w.x_marginal() - wf.probability())) < 1e-10
    assert w.purity() == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.abs(w.values)) <= 1 / math.pi + 1e-12
    assert not w.values.flags.writeable


def test_momentum_marginal_is_quarter_turn_density():
    wf = make_state(Cat(2.0, 1))
    w = wigner_of(wf)
    # P = -X(pi/2): the column sums are the pi/2 density reflected
    assert np.max(np.abs(wigner_marginal(w, math.pi / 2) - rotate_to(wf, math.pi / 2).probability())) < 1e-9


def test_explicit_p_grid():
    pg = GridSpec(-3.0, 5.0, 128)
    w = wigner_of(make_state(Coherent(1j), SMALL), pg)
    x, p = mesh(w)
    assert np.max(np.abs(w.values - np.exp(-x * x - (p - math.sqrt(2)) ** 2) / math.pi)) < 1e-12


def test_shape_validation():
    with pytest.raises(ValueError):
        WignerGrid(SMALL, SMALL, np.zeros((3, 3)))


def in_phase_filter(kappa, x_m):
    cfg = qnd.CouplingConfig(kappa, 0.0, 0.0)
    meter = in_frame(make_state(Vacuum()), 0.0)
    w = float(np.pi ** -0.5 * math.exp(-x_m * x_m))
    return lambda pts: qnd.filter_values(meter, x_m, cfg, pts, w)


def test_in_phase_ridge_single_bin_on_conjugate_grid():
    pg = conjugate_p_grid(DEFAULT_GRID)
    kappa = 1.0
    x_m = -5 * pg.dx / kappa  # ridge at P = -kappa X_m = 5 dP
    w = filter_wigner(in_phase_filter(kappa, x_m), DEFAULT_GRID, pg)
    col = int(round((-kappa * x_m - pg.x_min) / pg.dx))
    off = np.delete(w.values, col, axis=1)
    assert np.max(np.abs(off)) < 1e-10 * np.max(np.abs(w.values[:, col]))
    assert np.ptp(w.values[:, col]) < 1e-10 * w.values[0, col]


@pytest.mark.parametrize("x_m", [0.37, -1.1, 2.05])
def test_in_phase_ridge_on_default_grid(x_m):
    kappa = 0.8
    w = filter_wigner(in_phase_filter(kappa, x_m), DEFAULT_GRID)
    peaks = DEFAULT_GRID.x[np.argmax(w.values, axis=1)]
    assert np.max(np.abs(peaks + kappa * x_m)) <= DEFAULT_GRID.dx


@pytest.mark.parametrize("preset", [Coherent(1.0), Cat(1.5, 1), Fock(2)], ids=repr)
def test_in_phase_conditioning_translates_momentum(preset):
    kappa, phi = 0.7, 0.4
    cfg = qnd.CouplingConfig(kappa, phi, phi)
    sig = rotate_to(make_state(preset), cfg.signal_angle)
    joint = qnd.entangle(sig, in_frame(make_state(Vacuum()), phi), cfg)
    idx = 540
    x_m = joint.meter_grid.x[idx]
    cond = wigner_of(qnd.condition(joint, idx).state)
    g = DEFAULT_GRID
    shifted = wigner_of(sig, GridSpec(g.x_min + kappa * x_m, g.x_max + kappa * x_m, g.n_points))
    # W_c(X, P) = W_s(X, P + kappa X_m)
    assert np.max(np.abs(cond.values - shifted.values)) < 1e-10


@pytest.mark.parametrize(
    "signal,meter,theta",
    [
        (SqueezedVacuum(0.3), Vacuum(), 1.0),
        (Fock(2), SqueezedVacuum(1.0), math.pi / 2),
        (Cat(2.0, 1), SqueezedVacuum(3.0), 0.0),
        (Cat(1.5, -1), Vacuum(), 2.2),
    ],
    ids=repr,
)
def test_convolution_identity(signal, meter, theta):
    cfg = qnd.CouplingConfig(1.0, 0.0, theta)
    sig = rotate_to(make_state(signal), cfg.signal_angle)
    met = in_frame(make_state(meter, GridSpec(-16, 16, 2048)), theta)
    joint = qnd.entangle(sig, met, cfg)
    idx = int(np.argmax(qnd.meter_marginal(joint))) + 7
    cond = qnd.condition(joint, idx).state
    assert convolution_check(sig, cond, qnd.joint_filter(joint, idx)) < 1e-10


def test_marginal_vacuum_any_angle():
    w = wigner_of(make_state(Vacuum(), SMALL))
    x = SMALL.x
    gauss = np.exp(-x * x) / math.sqrt(math.pi)
    for angle in (0.0, 0.3, 1.0, math.pi / 2, 2.5):
        assert np.max(np.abs(wigner_marginal(w, angle) - gauss)) < 1e-6


@pytest.mark.parametrize("r", [0.3, -0.3])
def test_marginal_squeezed_variances(r):
    w = wigner_of(make_state(SqueezedVacuum(r), SMALL))
    x = SMALL.x
    for angle in np.linspace(0, math.pi, 7):
        m = wigner_marginal(w, angle)
        expected = 0.5 * (math.exp(-2 * r) * math.cos(angle) ** 2 + math.exp(2 * r) * math.sin(angle) ** 2)
        assert np.sum(x * x * m) * SMALL.dx == pytest.approx(expected, abs=1e-5)


def test_marginal_fock_one_node():
    w = wigner_of(make_state(Fock(1), SMALL))
    mid = SMALL.n_points // 2
    for angle in (0.2, 0.9, 1.7):
        m = wigner_marginal(w, angle)
        assert abs(m[mid]) < 1e-6 and m.max() == pytest.approx(2 / (math.e * math.sqrt(math.pi)), rel=1e-3)


def test_marginals_match_rotated_states():
    wf = make_state(Cat(2.0, 1))
    w = wigner_of(wf)
    angles = [0.0, 0.4, 1.3, math.pi / 2, 2.9]
    rows = wigner_marginals(w, angles, order=5)
    for row, a in zip(rows, angles):
        assert np.sum(np.abs(row - rotate_to(wf, a).probability())) * wf.grid.dx < 1e-4


def test_documented_ridge_example():
    w = filter_wigner(in_phase_filter(1.0, 0.5), DEFAULT_GRID)
    peaks = DEFAULT_GRID.x[np.argmax(w.values, axis=1)]
    assert np.max(np.abs(peaks + 0.5)) <= DEFAULT_GRID.dx


def test_vanishing_coupling_ridge_at_zero():
    cfg = qnd.CouplingConfig(1e-12, 0.0, 1.0)
    meter = in_frame(make_state(Vacuum()), 1.0)
    f = lambda pts: qnd.filter_values(meter, 0.3, cfg, pts, 0.5)
    pg = conjugate_p_grid(DEFAULT_GRID)
    w = filter_wigner(f, DEFAULT_GRID, pg)
    col = pg.n_points // 2
    assert pg.x[col] == 0.0
    assert np.max(np.abs(np.delete(w.values, col, axis=1))) < 1e-9 * np.max(w.values[:, col])


def test_gaussian_filter_stripe():
    kappa = 0.8
    cfg = qnd.CouplingConfig(kappa, 0.0, math.pi / 2)
    meter = in_frame(make_state(SqueezedVacuum(1.0)), cfg.theta)
    x_m = 0.6
    f = lambda pts: qnd.filter_values(meter, x_m, cfg, pts, 0.3)
    w = filter_wigner(f, DEFAULT_GRID)
    rows = w.values.sum(axis=1)
    centre = np.sum(DEFAULT_GRID.x * rows) / np.sum(rows)
    assert centre == pytest.approx(x_m / kappa, abs=1e-9)


def test_convolution_in_phase_vacuum_translation():
    cfg = qnd.CouplingConfig(1.0, 0.0, 0.0)
    sig = rotate_to(make_state(Vacuum()), cfg.signal_angle)
    meter = in_frame(make_state(SqueezedVacuum(1.0)), 0.0)
    x_m = 0.5
    c = sig.amplitudes * qnd.filter_values(meter, x_m, cfg, sig.grid.x, 1.0)
    prob = float(np.sum(np.abs(c) ** 2) * sig.grid.dx)
    cond = type(sig)(sig.grid, sig.angle, c / math.sqrt(prob))
    f = lambda pts: qnd.filter_values(meter, x_m, cfg, pts, prob)
    assert convolution_check(sig, cond, f) < 1e-7
    w = wigner_of(cond)
    x, p = mesh(w)
    assert np.max(np.abs(w.values - np.exp(-x * x - (p + 0.5) ** 2) / math.pi)) < 1e-10


def test_convolution_vanishing_coupling():
    cfg = qnd.CouplingConfig(1e-12, 0.0, 1.0)
    sig = rotate_to(make_state(Cat(2.0, 1)), cfg.signal_angle)
    meter = in_frame(make_state(Vacuum()), 1.0)
    joint = qnd.entangle(sig, meter, cfg)
    cond = qnd.condition(joint, 520).state
    assert convolution_check(sig, cond, qnd.joint_filter(joint, 520)) < 1e-10
