import math

import numpy as np
import pytest

from qndtomo import experiments as ex
from qndtomo import qnd
from qndtomo.errors import PreconditionError
from qndtomo.states import DEFAULT_GRID, Cat, Coherent, Fock, GridSpec, SqueezedVacuum, Vacuum, make_state
from qndtomo.transforms import rotate_to
from qndtomo.wigner import wigner_of

from conftest import TWO_SQRT2

WEAK_CFG = qnd.CouplingConfig(0.2, 3 * math.pi / 2, 0.0)


def vacuum_density(grid):
    return np.exp(-grid.x ** 2) / math.sqrt(math.pi)


# --- sampling ---------------------------------------------------------------


def test_zero_shots_empty():
    assert ex.sample_outcomes(vacuum_density(DEFAULT_GRID), DEFAULT_GRID, 0, 1).size == 0


def test_point_mass():
    d = np.zeros(DEFAULT_GRID.n_points)
    d[300] = 1.0 / DEFAULT_GRID.dx
    out = ex.sample_outcomes(d, DEFAULT_GRID, 500, 3)
    assert np.all(out == DEFAULT_GRID.x[300])


def test_vacuum_clt():
    n = 100_000
    out = ex.sample_outcomes(vacuum_density(DEFAULT_GRID), DEFAULT_GRID, n, 11)
    sigma = math.sqrt(0.5)
    assert abs(out.mean()) < 4 * sigma / math.sqrt(n)
    # the grid cells add dx^2/12 of variance
    assert out.var() == pytest.approx(0.5, rel=0.05)


def test_sampling_deterministic_and_seed_sensitive():
    d = vacuum_density(DEFAULT_GRID)
    a = ex.sample_outcomes(d, DEFAULT_GRID, 1000, 5)
    assert np.array_equal(a, ex.sample_outcomes(d, DEFAULT_GRID, 1000, 5))
    assert not np.array_equal(a, ex.sample_outcomes(d, DEFAULT_GRID, 1000, 6))


@pytest.mark.parametrize("shots", [-1, 1.5, True])
def test_sampling_rejects_bad_shot_counts(shots):
    with pytest.raises(ValueError):
        ex.sample_outcomes(vacuum_density(DEFAULT_GRID), DEFAULT_GRID, shots, 0)


def test_sampling_rejects_unnormalized():
    with pytest.raises(ValueError, match="normalized"):
        ex.sample_outcomes(2 * vacuum_density(DEFAULT_GRID), DEFAULT_GRID, 10, 0)


def test_estimators_normalized():
    idx = ex.sample_indices(vacuum_density(DEFAULT_GRID), DEFAULT_GRID, 2000, ex.phase_rng(0, 0))
    for kind in ex.ESTIMATORS:
        d = ex.estimate_density(DEFAULT_GRID.x[idx], DEFAULT_GRID, kind)
        assert np.all(d >= 0)
        assert np.sum(d) * DEFAULT_GRID.dx == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        ex.estimate_density([], DEFAULT_GRID)
    with pytest.raises(ValueError):
        ex.estimate_density([0.0], DEFAULT_GRID, "spline")


# --- weak regime ---------------------------------------------------------------


@pytest.fixture(scope="module")
def weak_run():
    return ex.run_weak(Coherent(2.0), SqueezedVacuum(-2.0), WEAK_CFG, shots=20_000, seed=7)


def test_weak_shift(weak_run):
    assert weak_run.expected_shift == pytest.approx(0.2 * TWO_SQRT2, rel=1e-9)
    assert abs(weak_run.z_score) < 4
    assert weak_run.shift == pytest.approx(0.566, abs=4 * weak_run.standard_error)


def test_weak_fidelity(weak_run):
    assert weak_run.min_fidelity > 0.99
    assert weak_run.width_ratio >= ex.MIN_WIDTH_RATIO


def test_weak_vacuum_signal_no_shift():
    r = ex.run_weak(Vacuum(), SqueezedVacuum(-2.0), WEAK_CFG, shots=20_000, seed=8)
    assert r.expected_shift == pytest.approx(0.0, abs=1e-12)
    assert abs(r.shift) < 4 * r.standard_error


def test_weak_exact_mode():
    r = ex.run_weak(Coherent(2.0), SqueezedVacuum(-2.0), WEAK_CFG, shots=0, seed=0)
    assert r.shift == pytest.approx(r.expected_shift, abs=1e-9)
    assert r.standard_error == 0.0


def test_weak_rejects_narrow_meter():
    with pytest.raises(PreconditionError, match="width ratio"):
        ex.run_weak(Coherent(2.0), Vacuum(), WEAK_CFG, shots=10, seed=0)


# --- delta limit -------------------------------------------------------------


def exact_delta_estimate(signal, r, kappa=1.0):
    cfg = qnd.CouplingConfig(kappa, 0.0, math.pi / 2)
    mg = ex.default_meter_grid(DEFAULT_GRID, kappa)
    w = ex.exact_meter_density(signal, SqueezedVacuum(r), cfg, DEFAULT_GRID, mg)
    return ex.rescale_density(w, mg, kappa, DEFAULT_GRID)


def l1_to_truth(signal, r):
    truth = rotate_to(make_state(signal), math.pi / 2).probability()
    return np.sum(np.abs(exact_delta_estimate(signal, r) - truth)) * DEFAULT_GRID.dx


@pytest.mark.parametrize("signal", [Vacuum(), Coherent(1.0), Fock(1)], ids=repr)
def test_delta_limit_monotone(signal):
    errs = [l1_to_truth(signal, r) for r in (1.0, 2.0, 3.0)]
    assert errs[0] > errs[1] > errs[2]


def test_delta_limit_vacuum_r3():
    assert l1_to_truth(Vacuum(), 3.0) < 0.02


def test_delta_limit_fock_one_dip():
    est = exact_delta_estimate(Fock(1), 3.0)
    mid = DEFAULT_GRID.n_points // 2
    assert est[mid] < 0.05 * est.max()
    assert est[mid] <= est[mid - 1] and est[mid] <= est[mid + 1]


def test_delta_reconstruct_from_records():
    cfg = qnd.CouplingConfig(1.0, 0.0, math.pi / 2)
    mg = ex.default_meter_grid(DEFAULT_GRID, 1.0)
    w = ex.exact_meter_density(Vacuum(), SqueezedVacuum(3.0), cfg, DEFAULT_GRID, mg)
    out = ex.sample_outcomes(w, mg, 50_000, 1)
    recs = [ex.MeasurementRecord(0.0, math.pi / 2, float(x), i) for i, x in enumerate(out)]
    est = ex.delta_limit_reconstruct(recs, 1.0, mg, DEFAULT_GRID)
    assert np.sum(est) * DEFAULT_GRID.dx == pytest.approx(1.0, abs=1e-12)
    x = DEFAULT_GRID.x
    assert np.sum(x * x * est) * DEFAULT_GRID.dx == pytest.approx(0.5, rel=0.03)


def test_delta_reconstruct_errors():
    with pytest.raises(ValueError, match="no measurement"):
        ex.delta_limit_reconstruct([], 1.0)
    with pytest.raises(ValueError, match="theta"):
        ex.delta_limit_reconstruct([ex.MeasurementRecord(0.0, 0.0, 0.1, 0)], 1.0)
    mixed = [ex.MeasurementRecord(0.0, math.pi / 2, 0.1, 0), ex.MeasurementRecord(0.1, 0.1 + math.pi / 2, 0.1, 1)]
    with pytest.raises(ValueError, match="mix"):
        ex.delta_limit_reconstruct(mixed, 1.0)


def test_rescale_interpolates_for_other_kappa():
    mg = GridSpec(-40, 40, 4096)
    kappa = 2.0
    # meter density of a vacuum signal read through a perfect meter: N(0, kappa^2 / 2)
    w = np.exp(-mg.x ** 2 / kappa ** 2) / (kappa * math.sqrt(math.pi))
    est = ex.rescale_density(w, mg, kappa, DEFAULT_GRID)
    assert np.max(np.abs(est - vacuum_density(DEFAULT_GRID))) < 1e-4


def test_default_meter_grid():
    g = ex.default_meter_grid(DEFAULT_GRID, 1.0)
    assert g == GridSpec(-20.0, 20.0, 2048)
    assert g.dx == DEFAULT_GRID.dx
    assert ex.default_meter_grid(DEFAULT_GRID, 0.5).n_points == 2048
    assert ex.default_meter_grid(DEFAULT_GRID, 3.5).n_points == 8192


# --- sweeps ------------------------------------------------------------------


def test_single_phase_matches_delta_path():
    m = ex.sweep_phases(Vacuum(), SqueezedVacuum(3.0), 1.0, [0.0], 0, 0)
    assert np.array_equal(m.densities[0], exact_delta_estimate(Vacuum(), 3.0))


def test_exact_mode_is_meter_marginal():
    phi = 0.7
    m = ex.sweep_phases(Cat(2.0, 1), SqueezedVacuum(3.0), 1.0, [phi], 0, 0)
    cfg = qnd.CouplingConfig(1.0, phi, phi + math.pi / 2)
    direct = ex.exact_meter_density(Cat(2.0, 1), SqueezedVacuum(3.0), cfg, DEFAULT_GRID)
    assert np.array_equal(m.meter_densities[0], direct)


@pytest.fixture(scope="module")
def coherent_sweep():
    return ex.sweep_phases(Coherent(2.0), SqueezedVacuum(3.0), 1.0, ex.uniform_phases(16), 0, 0)


def test_coherent_marginal_means_trace_circle(coherent_sweep):
    x = coherent_sweep.grid.x
    for a, ang in enumerate(coherent_sweep.marginal_angles):
        d = coherent_sweep.densities[a]
        mean = np.sum(x * d) * coherent_sweep.grid.dx
        assert mean == pytest.approx(TWO_SQRT2 * math.cos(ang), abs=1e-3)
        var = np.sum((x - mean) ** 2 * d) * coherent_sweep.grid.dx
        assert var == pytest.approx(0.5 + math.exp(-6) / 2, rel=1e-3)


def test_marginal_set_invariants(coherent_sweep):
    dx = coherent_sweep.grid.dx
    assert np.all(coherent_sweep.densities >= 0)
    assert np.allclose(coherent_sweep.densities.sum(axis=1) * dx, 1.0, atol=1e-9)
    assert coherent_sweep.estimator["estimator"] == "exact"
    assert list(coherent_sweep.records()) == []


def fringe_contrast(d, x):
    mid = len(x) // 2
    window = d[mid - 40:mid + 41]
    return (window.max() - window.min()) / window.max()


def test_cat_fringes_orthogonal_to_axis():
    ph = ex.uniform_phases(32)
    m = ex.sweep_phases(Cat(2.0, 1), SqueezedVacuum(3.0), 1.0, ph, 0, 0)
    x = m.grid.x
    ang = np.mod(m.marginal_angles, math.pi)
    ortho = int(np.argmin(np.abs(ang - math.pi / 2)))
    along = int(np.argmin(np.minimum(ang, math.pi - ang)))
    assert fringe_contrast(m.densities[ortho], x) > 0.9
    # along the axis the marginal is two separated humps with nothing at the origin
    assert m.densities[along][len(x) // 2] < 1e-3


@pytest.mark.parametrize("phases", [[], [0.1, 0.1], [0.2, 0.1], [-0.1], [math.pi], [float("nan")]])
def test_sweep_rejects_bad_phases(phases):
    with pytest.raises(ValueError):
        ex.sweep_phases(Vacuum(), SqueezedVacuum(3.0), 1.0, phases, 0, 0)


def test_sampled_sweep_records_and_determinism():
    ph = ex.uniform_phases(4)
    a = ex.sweep_phases(Vacuum(), SqueezedVacuum(3.0), 1.0, ph, 200, 42)
    b = ex.sweep_phases(Vacuum(), SqueezedVacuum(3.0), 1.0, ph, 200, 42, workers=3)
    assert np.array_equal(a.densities, b.densities)
    ra, rb = list(a.records()), list(b.records())
    assert ra == rb and len(ra) == 800
    assert {r.shot_index for r in ra} == set(range(200))
    mg = a.meter_grid
    assert all(np.any(mg.x == r.outcome) for r in ra[:50])
    assert all(math.isclose(r.theta - r.phi, math.pi / 2) for r in ra)


def test_sampling_rate():
    ph = [0.3]
    errs = []
    for shots in (1_000, 100_000):
        m = ex.sweep_phases(Coherent(1.0), SqueezedVacuum(3.0), 1.0, ph, shots, 3)
        # compare on the meter grid where the histogram lives
        w = m.meter_densities[0]
        est = ex.histogram_density(m.outcome_indices[0], m.meter_grid)
        errs.append(np.sum(np.abs(est - w)) * m.meter_grid.dx)
    assert 5 <= errs[0] / errs[1] <= 20


def test_kde_sweep():
    m = ex.sweep_phases(Vacuum(), SqueezedVacuum(3.0), 1.0, [0.0], 5000, 1, estimator="kde", bandwidth=0.2)
    assert m.estimator == {"estimator": "kde", "backend": "grid", "bandwidth": 0.2}
    assert np.sum(np.abs(m.densities[0] - m.exact[0])) * m.grid.dx < 0.1


# --- reconstruction ------------------------------------------------------------


def test_ramp_kernel_moment():
    # the discrete ramp kernel integrates to ~0 (no DC response)
    h = ex.ramp_kernel(4096, 0.01, math.pi / 0.02)
    assert abs(np.sum(h) * 0.01) < 0.05 * h.max() * 0.01


def test_angular_weights_sum_to_pi():
    ang = np.array([0.0, 0.2, 1.0, 2.5])
    assert ex.angular_weights(ang).sum() == pytest.approx(math.pi)
    assert np.allclose(ex.angular_weights(ex.uniform_phases(8)), math.pi / 8)


def test_uniformity_detection():
    assert ex.is_uniform(ex.uniform_phases(16) + math.pi / 2)
    assert not ex.is_uniform(np.array([0.0, 0.1, 0.5]))


@pytest.fixture(scope="module")
def vacuum_reconstruction():
    m = ex.sweep_phases(Vacuum(), SqueezedVacuum(3.0), 1.0, ex.uniform_phases(16), 0, 0)
    return ex.reconstruct_wigner(m)


def test_vacuum_reconstruction(vacuum_reconstruction):
    w = vacuum_reconstruction.wigner
    x, p = np.meshgrid(w.x_grid.x, w.p_grid.x, indexing="ij")
    assert np.max(np.abs(w.values - np.exp(-x * x - p * p) / math.pi)) < 0.01
    assert w.total() == pytest.approx(1.0, abs=1e-12)
    assert np.all(vacuum_reconstruction.residuals >= 0)
    assert vacuum_reconstruction.shots_used == 0


def test_coherent_reconstruction_peak(coherent_sweep, vacuum_reconstruction):
    r = ex.reconstruct_wigner(coherent_sweep)
    w = r.wigner
    i, k = np.unravel_index(np.argmax(w.values), w.values.shape)
    assert abs(w.x_grid.x[i] - TWO_SQRT2) <= w.x_grid.dx
    assert abs(w.p_grid.x[k]) <= w.p_grid.dx
    assert r.residuals.max() < 2 * max(vacuum_reconstruction.residuals.max(), 1e-3)


def test_cat_reconstruction_negativity():
    m = ex.sweep_phases(Cat(2.0, 1), SqueezedVacuum(3.0), 1.0, ex.uniform_phases(32), 0, 0)
    r = ex.reconstruct_wigner(m)
    w = r.wigner
    mid = w.x_grid.n_points // 2
    assert w.values[mid, mid] > 0
    assert w.values.min() < -0.05
    ref = wigner_of(make_state(Cat(2.0, 1)))
    assert np.max(np.abs(w.values - ref.values)) < 0.02


def test_nonuniform_phases_reconstruct():
    ph = np.sort(np.concatenate([ex.uniform_phases(12), [0.05, 1.0]]))
    m = ex.sweep_phases(Vacuum(), SqueezedVacuum(3.0), 1.0, ph, 0, 0)
    w = ex.reconstruct_wigner(m).wigner
    x, p = np.meshgrid(w.x_grid.x, w.p_grid.x, indexing="ij")
    # without angular interpolation, 14 directions leave streaks in the corners
    # whose volume also biases the unit-volume normalization
    assert np.max(np.abs(w.values - np.exp(-x * x - p * p) / math.pi)) < 0.025


def test_coverage_errors():
    m = ex.sweep_phases(Vacuum(), SqueezedVacuum(3.0), 1.0, ex.uniform_phases(4), 0, 0)
    with pytest.raises(PreconditionError, match="at least 8"):
        ex.reconstruct_wigner(m)
    gap = np.linspace(0, 1.5, 10)
    m = ex.sweep_phases(Vacuum(), SqueezedVacuum(3.0), 1.0, gap, 0, 0)
    with pytest.raises(PreconditionError, match="gap"):
        ex.reconstruct_wigner(m)
