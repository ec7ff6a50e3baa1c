import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riesz_balayage.geometry import SetSpec, discretize, restrict
from riesz_balayage.kernel import KernelSpec, assemble_matrix, interaction
from riesz_balayage.measure import (DiscreteMeasure, PointCharge, charges_from_config, distance_between, embed,
                                    energy_norm, field_on_panels, measure_from_csv, measure_to_csv, norm_distance,
                                    pull_back, restrict_measure, source_scaled, total_mass)

K2 = np.array([[2.0, 1.0], [1.0, 2.0]])
SEG = discretize(SetSpec.segment([0, 0], [1, 0]), 12)
SPEC = KernelSpec(1.5, 2)


def test_total_mass():
    S = discretize(SetSpec.segment([0, 0], [1, 0]), 2)
    assert total_mass(DiscreteMeasure(S, [0.2, 0.3])) == pytest.approx(0.5)
    assert total_mass(DiscreteMeasure.zero(S)) == 0.0
    mu = DiscreteMeasure(S, [0.2, 0.3])
    assert mu.scaled(1 / mu.total()).total() == pytest.approx(1.0)


def test_negative_masses_rejected():
    with pytest.raises(ValueError):
        DiscreteMeasure(SEG, -np.ones(len(SEG)))


def test_norm_distance_small_cases():
    assert norm_distance(K2, [1, 1], [1, 1]) == 0.0
    assert norm_distance(K2, [1, 0], [0, 1]) == pytest.approx(math.sqrt(2))


vectors = st.lists(st.floats(0, 1), min_size=12, max_size=12).map(np.array)


@settings(max_examples=50, deadline=None)
@given(vectors, vectors, vectors)
def test_energy_distance_is_a_metric(a, b, c):
    K = assemble_matrix(SPEC, SEG)
    mu, nu, xi = (DiscreteMeasure(SEG, v) for v in (a, b, c))
    dab, dbc, dac = norm_distance(K, mu, nu), norm_distance(K, nu, xi), norm_distance(K, mu, xi)
    assert dab == pytest.approx(norm_distance(K, nu, mu))
    assert dac <= dab + dbc + 1e-12
    assert energy_norm(K, mu.scaled(2.0)) == pytest.approx(2 * energy_norm(K, mu))


def test_restrict_measure_cases():
    mu = DiscreteMeasure.uniform(SEG)
    assert np.array_equal(restrict_measure(mu, range(len(SEG))).masses, mu.masses)
    assert restrict_measure(mu, []).total() == 0.0
    assert restrict_measure(mu, [0, 3]).total() <= mu.total()


def test_embed_and_pull_back_round_trip():
    half = restrict(SEG, SetSpec.segment([0, 0], [0.5, 0]))
    mu = DiscreteMeasure.uniform(half)
    big = embed(mu, SEG)
    assert big.total() == pytest.approx(mu.total())
    np.testing.assert_array_equal(pull_back(big, half).masses, mu.masses)


def test_distance_between_nested_and_cross_paths_agree():
    half = restrict(SEG, SetSpec.segment([0, 0], [0.5, 0]))
    mu = DiscreteMeasure.uniform(half)
    nu = DiscreteMeasure.uniform(SEG)
    nested = distance_between(SPEC, mu, nu)
    # same quantity from the cross-interaction formula
    cross = float(mu.masses @ (interaction(SPEC, half, SEG) @ nu.masses))
    direct = math.sqrt(mu.energy(SPEC) + nu.energy(SPEC) - 2 * cross)
    assert nested == pytest.approx(direct, rel=1e-8)
    assert distance_between(SPEC, nu, nu) == 0.0


def test_field_on_panels_for_charges_and_measures():
    q = [PointCharge((0.5, 1.0), 2.0)]
    b = field_on_panels(SPEC, q, SEG)
    assert np.all(b > 0)
    np.testing.assert_allclose(field_on_panels(SPEC, source_scaled(q, 0.5), SEG), b / 2)
    mu = DiscreteMeasure.uniform(SEG)
    np.testing.assert_allclose(field_on_panels(SPEC, mu, SEG), assemble_matrix(SPEC, SEG).entries @ mu.masses)


def test_csv_round_trip():
    mu = DiscreteMeasure(SEG, np.linspace(0, 1, len(SEG)))
    text = measure_to_csv(mu)
    assert text.startswith("# set_spec_hash=")
    back = measure_from_csv(text, SEG)
    np.testing.assert_array_equal(back.masses, mu.masses)


def test_charges_from_config():
    (q,) = charges_from_config([{"location": [0, 1]}])
    assert q.mass == 1.0 and q.location == (0.0, 1.0)
    with pytest.raises(ValueError):
        PointCharge((0.0, 0.0), -1.0)
