import numpy as np
import pytest

from riesz_balayage.balayage import (minimum_mass_check, probe_points, sweep, sweep_with_rest,
                                     verify_characterizations)
from riesz_balayage.geometry import SetSpec, discretize, restrict
from riesz_balayage.kernel import KernelSpec, assemble_matrix
from riesz_balayage.measure import DiscreteMeasure, PointCharge
from riesz_balayage.qp import ConeQPProblem, brute_force


@pytest.fixture(scope="module")
def swept(newton, sphere200, charge_z2):
    return sweep(charge_z2, sphere200, newton)


def test_newtonian_sphere_sweep_mass(swept):
    # exterior unit charge at distance 2 from a unit sphere: swept mass 1/2
    assert swept.swept_mass == pytest.approx(0.5, rel=2e-2)
    assert swept.qp.converged


def test_swept_potential_matches_source_on_set(swept):
    assert swept.potential_match_residual < 1e-2


def test_energy_equals_mutual_energy(swept):
    assert swept.energy_swept == pytest.approx(swept.mutual_energy_source, rel=1e-6)


def test_characterizations_pass(swept, newton, sphere200, charge_z2):
    rep = verify_characterizations(swept, newton, sphere200, charge_z2, rng_seed=1)
    assert rep.passed, [c.name for c in rep.failures()]
    assert rep["exhaustion_limit"].note.startswith("skipped")


def test_minimum_mass(swept, newton, sphere200, charge_z2):
    rep = minimum_mass_check(swept, newton, sphere200, charge_z2, rng_seed=2)
    assert rep.passed


def test_small_sweep_matches_brute_force():
    spec = KernelSpec(1.5, 2)
    S = discretize(SetSpec.segment([0, 0], [1, 0]), 8)
    r = sweep([PointCharge((0.3, 0.4), 1.0)], S, spec, tol=1e-10)
    ref = brute_force(ConeQPProblem(assemble_matrix(spec, S).entries, r.b))
    np.testing.assert_allclose(r.swept.masses, ref.w, atol=1e-7)


def test_sweeping_a_measure_on_the_set_returns_it():
    spec = KernelSpec(1.5, 2)
    S = discretize(SetSpec.segment([0, 0], [1, 0]), 20)
    mu = DiscreteMeasure(S, np.linspace(0.1, 1.0, 20) / 20)
    r = sweep(mu, S, spec, tol=1e-12)
    np.testing.assert_allclose(r.swept.masses, mu.masses, atol=1e-8)


def test_sweep_with_rest_on_hemisphere(newton, sphere200, charge_z2):
    half = restrict(sphere200, SetSpec.halfspace([0, 0, 1]))
    rep = sweep_with_rest(charge_z2, sphere200, half, newton)
    assert rep.passed, rep.to_dict()


def test_charge_on_node_rejected(newton, sphere200):
    q = [PointCharge(tuple(sphere200.nodes[0]), 1.0)]
    with pytest.raises(ValueError, match="continuity hypothesis"):
        sweep(q, sphere200, newton)


def test_dimension_mismatch_rejected(sphere200):
    with pytest.raises(ValueError):
        sweep([PointCharge((0.0, 3.0), 1.0)], sphere200, KernelSpec(1.5, 2))


def test_probe_points_avoid_the_set(sphere200, charge_z2):
    P = probe_points(sphere200, charge_z2)
    r = np.linalg.norm(P, axis=1)
    assert np.all(np.abs(r - 1.0) > 0.1)
