import math

import numpy as np
import pytest

from riesz_balayage.convergence import (Bump, bump_integrals, check_nested, constants_monotone, default_bumps,
                                        gauss_exhaustion, sweep_decreasing, sweep_exhaustion)
from riesz_balayage.geometry import SetSpec, decreasing_family, discretize, exhaustion
from riesz_balayage.kernel import KernelSpec
from riesz_balayage.measure import DiscreteMeasure, PointCharge

SPEC = KernelSpec(1.5, 2)
RAY = SetSpec.ray([1, 0], [1, 0])
Q = [PointCharge((0.0, 0.0), 1.0)]


@pytest.fixture(scope="module")
def stages():
    return exhaustion(RAY, [2, 4, 8, 16], 8)


def test_bump_profile():
    f = Bump((0.0, 0.0), 2.0)
    v = f(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [5.0, 0.0]]))
    assert v[0] == pytest.approx(1.0)
    assert 0 < v[1] < 1 and v[2] == 0 and v[3] == 0


def test_bump_integrals_of_uniform_measure():
    S = discretize(SetSpec.segment([0, 0], [1, 0]), 10)
    bumps = default_bumps(S)
    assert len(bumps) == 5
    vals = bump_integrals(DiscreteMeasure.zero(S), bumps)
    np.testing.assert_array_equal(vals, 0.0)


def test_check_nested_rejects_wrong_order(stages):
    check_nested(stages, increasing=True)
    with pytest.raises(ValueError):
        check_nested(stages[::-1], increasing=True)
    with pytest.raises(ValueError):
        check_nested([])


def test_sweep_exhaustion_monotone(stages):
    rep = sweep_exhaustion(Q, stages, SPEC)
    assert rep.checks().passed, rep.checks().to_dict()
    assert all(b >= a for a, b in zip(rep.masses, rep.masses[1:]))
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("stage,label,panels,mass")
    assert len(lines) == 1 + len(stages)


def test_gauss_exhaustion_constants_and_window(stages):
    rep = gauss_exhaustion(Q, stages, SPEC, window=4.0)
    assert constants_monotone(rep.constants_c, increasing=True) <= 1e-8
    assert all(math.isnan(v) for v in rep.potential_monotonicity_violations)
    assert len(rep.extra["window_masses"]) == len(stages)
    assert rep.extra["vague_limit_mass_estimate"] == rep.extra["window_masses"][-1]


def test_constants_monotone_direction():
    assert constants_monotone([3, 2, 1], increasing=True) == 0.0
    assert constants_monotone([1, 2, 1.5], increasing=True) == pytest.approx(1.0)
    assert constants_monotone([1, 2, 3], increasing=False) == 0.0


def test_sweep_decreasing_to_a_limit():
    spec = KernelSpec(2.0, 3)
    seg = SetSpec.box([-1, -1, -1], [1, 1, 1])
    fam = decreasing_family(seg, [SetSpec.ball([0, 0, 0], r) for r in (1.8, 1.4, 1.0)], 6)
    limit = fam[-1]
    rep = sweep_decreasing([PointCharge((0.0, 0.0, 3.0), 1.0)], fam, spec, limit=limit)
    assert rep.extra["limit_relative_distance"] < 1e-8
    checks = rep.checks()
    assert checks["energy_monotone"].passed and checks["mass_monotone"].passed


def test_decreasing_family_must_nest():
    with pytest.raises(ValueError):
        decreasing_family(SetSpec.segment([0, 0], [4, 0]), [SetSpec.ball([0, 0], 1), SetSpec.ball([0, 0], 2)], 16)
