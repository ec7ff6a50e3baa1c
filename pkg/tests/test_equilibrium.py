import numpy as np
import pytest

from riesz_balayage.equilibrium import capacity, equilibrium_mass_identity, equilibrium_measure
from riesz_balayage.geometry import SetSpec, discretize, restrict
from riesz_balayage.kernel import KernelSpec


@pytest.fixture(scope="module")
def eq(newton, sphere200):
    return equilibrium_measure(sphere200, newton)


def test_unit_sphere_capacity(eq):
    assert eq.capacity == pytest.approx(1.0, rel=2e-2)
    assert eq.energy == pytest.approx(eq.capacity, rel=1e-6)


def test_sphere_density_nearly_uniform(eq):
    d = eq.density()
    assert d.max() / d.min() < 1.05


def test_frostman_bounds(eq):
    assert eq.potential_residual < 1e-6
    assert eq.frostman_excess < 1e-3


def test_capacity_scales_with_radius(newton):
    S = discretize(SetSpec.sphere([0, 0, 0], 2.0), 200)
    small = discretize(SetSpec.sphere([0, 0, 0], 1.0), 200)
    assert capacity(S, newton) == pytest.approx(2 * capacity(small, newton), rel=1e-9)


def test_capacity_monotone_under_inclusion(newton, sphere200):
    half = restrict(sphere200, SetSpec.halfspace([0, 0, 1]))
    assert capacity(half, newton) < capacity(sphere200, newton)


def test_segment_equilibrium_piles_up_at_ends():
    S = discretize(SetSpec.segment([0, 0], [1, 0]), 60)
    e = equilibrium_measure(S, KernelSpec(1.5, 2))
    d = e.density()
    np.testing.assert_allclose(d, d[::-1], rtol=1e-6)
    assert d[0] > 2 * d[30]


def test_mass_identity(newton, sphere200, charge_z2):
    rep = equilibrium_mass_identity(charge_z2, sphere200, newton)
    assert rep.passed
    assert rep.data["swept_mass"] == pytest.approx(0.5, rel=2e-2)


def test_empty_target_rejected(newton, sphere200):
    with pytest.raises(ValueError):
        equilibrium_measure(sphere200.subset([]), newton)
