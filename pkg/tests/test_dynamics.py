import math

import numpy as np
import pytest

from otto_ion.dynamics import (
    IntegratorConfig,
    RampSpec,
    StabilityError,
    adiabaticity_parameter,
    adiabaticity_small_g,
    evolve_liouville,
    field_ramp,
    min_ramp_time,
)
from otto_ion.model import EngineParams, h_joint
from otto_ion.thermo import gibbs_joint

RAMP_PARAMS = EngineParams(b_hot=10.0, b_cold=1.0, tau=5.0)
RAMP = RampSpec(10.0, 1.0, 5.0)


@pytest.fixture(scope="module")
def ramp_trajectory():
    return evolve_liouville(gibbs_joint(RAMP_PARAMS, 10.0), RAMP_PARAMS, RAMP, IntegratorConfig(5000))


def test_field_ramp():
    assert field_ramp(RAMP, 0.0) == 10.0
    assert field_ramp(RAMP, 5.0) == 1.0
    assert field_ramp(RampSpec(10.0, 1.0, 5.0), 2.5) == 5.5
    with pytest.raises(ValueError):
        field_ramp(RAMP, 5.1)
    with pytest.raises(ValueError):
        field_ramp(RAMP, -0.1)
    with pytest.raises(ValueError):
        RampSpec(1.0, 2.0, 0.0)


def test_static_hamiltonian_keeps_thermal_state():
    p = RAMP_PARAMS.with_(b_cold=10.0)
    rho0 = gibbs_joint(p, 10.0)
    traj = evolve_liouville(rho0, p, RampSpec(10.0, 10.0, 2.0), IntegratorConfig(2000))
    assert len(traj) == 2001
    for s in traj[::100]:
        np.testing.assert_allclose(s.rho, rho0, atol=1e-9)
        assert s.xi == 0.0


def test_trajectory_sanity(ramp_trajectory):
    traj = ramp_trajectory
    assert traj[0].t == 0.0 and traj[-1].t == 5.0
    assert traj[-1].b == 1.0
    purity0 = traj[0].purity
    for s in traj:
        assert abs(s.trace - 1) <= 1e-9
        assert abs(s.purity - purity0) <= 1e-7
        assert abs(s.p1 + s.p2 - 1) <= 1e-6
        assert np.max(np.abs(s.rho - s.rho.conj().T)) == 0.0
    for s in traj[::250]:
        assert np.linalg.eigvalsh(s.rho)[0] >= -1e-7


def test_step_halving(ramp_trajectory):
    fine = evolve_liouville(gibbs_joint(RAMP_PARAMS, 10.0), RAMP_PARAMS, RAMP, IntegratorConfig(10000))
    assert np.max(np.abs(fine[-1].rho - ramp_trajectory[-1].rho)) <= 1e-8


def test_ground_population_drift_slow_ramp(ramp_trajectory):
    p2_0, p2_end = ramp_trajectory[0].p2, ramp_trajectory[-1].p2
    assert p2_end < p2_0
    assert abs(p2_end - p2_0) / p2_0 <= 5e-3


def test_drift_shrinks_with_slower_ramps():
    rho0 = gibbs_joint(RAMP_PARAMS, 10.0)
    drifts = []
    for tau in (1.0, 5.0, 25.0):
        traj = evolve_liouville(rho0, RAMP_PARAMS, RampSpec(10.0, 1.0, tau), IntegratorConfig(int(1000 * tau)))
        drifts.append(abs(traj[-1].p1 - traj[0].p1))
    assert drifts[0] > drifts[1] > drifts[2]


def test_xi_peaks_at_small_field(ramp_trajectory):
    xs = [s.xi for s in ramp_trajectory]
    assert int(np.argmax(xs)) == len(xs) - 1
    assert max(xs) == pytest.approx(0.0849, abs=1e-4)


def test_stability_guard():
    with pytest.raises(StabilityError, match="steps >= "):
        evolve_liouville(gibbs_joint(RAMP_PARAMS, 10.0), RAMP_PARAMS, RAMP, IntegratorConfig(10))


def test_rejects_invalid_initial_state():
    with pytest.raises(ValueError):
        evolve_liouville(np.eye(4), RAMP_PARAMS, RAMP, IntegratorConfig(100))


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(0)
    with pytest.raises(ValueError):
        IntegratorConfig(10, scheme="euler")


def test_rk4_matches_exact_propagator_for_static_h():
    # off-diagonal start so the commutator is non-trivial
    p = RAMP_PARAMS.with_(b_cold=3.0)
    psi = np.array([1, 1, 1, 1]) / 2.0
    rho0 = np.outer(psi, psi)
    traj = evolve_liouville(rho0, p, RampSpec(3.0, 3.0, 1.0), IntegratorConfig(1000))
    e, v = np.linalg.eigh(h_joint(p, 3.0))
    u = (v * np.exp(-1j * e)) @ v.conj().T
    np.testing.assert_allclose(traj[-1].rho, u @ rho0 @ u.conj().T, atol=1e-10)


def test_adiabaticity_parameter():
    assert adiabaticity_parameter(0.0, 1.0, 3.0) == 0.0
    assert adiabaticity_parameter(0.2, 1.0, 0.0) == 0.0
    assert adiabaticity_parameter(0.2, 1.0, -9 / 5) == pytest.approx(0.36 / (4 * 1.04**1.5), rel=1e-14)
    assert adiabaticity_parameter(0.2, 1.0, 9 / 5) == pytest.approx(0.0849, abs=1e-4)


def test_adiabaticity_matches_overlap_form():
    # |B' g^2 / (2 N+ N- (g^2 + B^2))| with N+ N- = 2 g eps
    for g, b, bd in [(0.2, 1.0, 1.8), (0.5, 3.0, -2.0), (1.0, 0.3, 0.7)]:
        eps = math.hypot(g, b)
        n_minus = math.sqrt(2 * (eps**2 - b * eps))
        n_plus = math.sqrt(2 * (eps**2 + b * eps))
        form = abs(bd * g * g / (2 * n_plus * n_minus * eps**2))
        assert adiabaticity_parameter(g, b, bd) == pytest.approx(form, rel=1e-10)


def test_adiabaticity_small_g():
    value, flagged = adiabaticity_small_g(0.2, 10.0, 1.8)
    assert value == pytest.approx(9e-5, rel=1e-12) and not flagged
    assert adiabaticity_small_g(0.0, 1.0, 1.0) == (0.0, False)
    assert adiabaticity_small_g(0.2, 1.0, 1.8)[1]
    for b in np.linspace(4.0, 20.0, 50):
        for g in (0.01, 0.1, 0.2):
            if b >= 20 * g:
                approx, _ = adiabaticity_small_g(g, b, 1.3)
                assert approx == pytest.approx(adiabaticity_parameter(g, b, 1.3), rel=1e-2)


def test_min_ramp_time():
    assert min_ramp_time(0.2, 10.0, 1.0) == pytest.approx(0.02475, rel=1e-12)
    assert min_ramp_time(0.2, 3.0, 3.0) == 0.0
    assert min_ramp_time(0.2, 10.0, 0.05) == pytest.approx(0.025 * (400 - 0.01), rel=1e-12)
    assert min_ramp_time(0.2, 10.0, 0.05) == pytest.approx(10.0, abs=0.01)
    with pytest.raises(ValueError):
        min_ramp_time(0.2, 10.0, 0.0)
