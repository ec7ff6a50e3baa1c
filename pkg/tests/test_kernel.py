import math

import numpy as np
import pytest
from scipy import integrate

from riesz_balayage.geometry import SetSpec, discretize
from riesz_balayage.kernel import (KernelSpec, assemble_matrix, ball_self_energy, evaluate, interaction,
                                   monte_carlo_self_energy, mutual_energy, point_potentials, potential,
                                   segment_self_energy, self_energies)
from riesz_balayage.measure import DiscreteMeasure, PointCharge


def test_kernel_values():
    assert evaluate(KernelSpec(2.0, 3), [0, 0, 0], [2, 0, 0]) == pytest.approx(0.5)
    assert evaluate(KernelSpec(1.0, 3), [0, 0, 0], [2, 0, 0]) == pytest.approx(0.25)
    assert evaluate(KernelSpec(2.0, 3), [1, 1, 1], [1, 1, 1]) == math.inf


@pytest.mark.parametrize("alpha,dim", [(3.0, 3), (0.0, 3), (2.5, 2), (2.0, 2), (-1.0, 3)])
def test_admitted_range(alpha, dim):
    with pytest.raises(ValueError, match="admitted range"):
        KernelSpec(alpha, dim)


def test_two_far_panels_point_rule(tmp_path):
    p = tmp_path / "two.txt"
    p.write_text("0 0 0 1e-4 0.005\n1 0 0 1e-4 0.005\n")
    S = discretize(SetSpec.points_file(str(p), 3, cell_dim=2), 1)
    K = assemble_matrix(KernelSpec(2.0, 3, near_field=0.0), S).entries
    assert K[0, 1] == pytest.approx(1.0)
    assert K[1, 0] == pytest.approx(1.0)


def test_segment_diagonal_against_quadrature():
    # mean of |x-y|^-s over [0,h]^2 via the density 2(h-t)/h^2 of |x-y|
    h, s = 0.3, 0.5
    val, _ = integrate.quad(lambda t: 2 * (h - t) / h**2, 0, h, weight="alg", wvar=(-s, 0))
    assert segment_self_energy(h, s) == pytest.approx(val, rel=1e-10)


def test_segment_monte_carlo_agrees():
    h, s = 0.2, 0.5
    mc = monte_carlo_self_energy(1, h, s, 100_000, seed=0)
    assert abs(mc - segment_self_energy(h, s)) / segment_self_energy(h, s) < 1e-2


def test_ball_and_disc_self_energy_closed_forms():
    # uniform ball in R^3 and disc in R^2, Newtonian-type kernel 1/r
    assert ball_self_energy(3, 2.0, 1.0) == pytest.approx(6 / (5 * 2.0), rel=1e-9)
    assert ball_self_energy(2, 1.0, 1.0) == pytest.approx(16 / (3 * math.pi), rel=1e-9)


def test_adjacent_segment_panels_are_panel_means():
    h, s = 0.1, 0.5
    S = discretize(SetSpec.segment([0, 0], [2 * h, 0]), 2)
    K = assemble_matrix(KernelSpec(1.5, 2), S).entries
    exact = ((2 * h) ** (2 - s) - 2 * h ** (2 - s)) / ((1 - s) * (2 - s)) / h**2
    assert K[0, 1] == pytest.approx(exact, rel=2e-3)
    assert K[0, 0] == pytest.approx(segment_self_energy(h, s))


def test_polar_panels_rejected():
    S = discretize(SetSpec.segment([0, 0, 0], [1, 0, 0]), 4)
    with pytest.raises(ValueError, match="capacity"):
        self_energies(KernelSpec(2.0, 3), S)


def test_matrix_symmetric_positive_definite(newton, sphere200):
    K = assemble_matrix(newton, sphere200).entries
    np.testing.assert_array_equal(K, K.T)
    assert np.linalg.eigvalsh(K).min() > 0


def test_matrix_cached_by_content(newton, sphere200):
    assert assemble_matrix(newton, sphere200) is assemble_matrix(newton, sphere200)


def test_interaction_matches_matrix_block(newton, sphere200):
    K = assemble_matrix(newton, sphere200).entries
    far = interaction(newton, sphere200, sphere200)
    np.testing.assert_allclose(far, K, rtol=1e-10)


def test_point_charge_potential():
    k = KernelSpec(2.0, 3)
    u = potential(k, [PointCharge((0, 0, 0), 1.0)], np.array([[2.0, 0, 0]]))
    assert u[0] == pytest.approx(0.5)


def test_uniform_sphere_potential(newton, sphere200):
    mu = DiscreteMeasure.uniform(sphere200)
    out = potential(newton, mu, np.array([[0, 0, 2.0], [1.3, 1.3, 0], [0, 0, 0]]))
    np.testing.assert_allclose(out[:2], [0.5, 1 / math.hypot(1.3, 1.3)], rtol=1e-2)
    assert out[2] == pytest.approx(1.0, rel=1e-2)


def test_point_potentials_at_nodes_use_matrix_rows(newton, sphere200):
    P = point_potentials(newton, sphere200, sphere200.nodes[:3])
    K = assemble_matrix(newton, sphere200).entries
    np.testing.assert_allclose(P, K[:3])


def test_mutual_energy():
    K = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert mutual_energy(K, [1, 1], [1, 1]) == 6.0
    assert mutual_energy(K, [0, 0], [1, 1]) == 0.0
    rng = np.random.default_rng(1)
    w, v = rng.random(2), rng.random(2)
    assert mutual_energy(K, w, v) == pytest.approx(mutual_energy(K, v, w))


def test_spec_round_trip():
    k = KernelSpec(1.5, 2, near_field=4.0)
    assert KernelSpec.from_dict(k.to_dict()) == k
    assert k.s == pytest.approx(0.5)
