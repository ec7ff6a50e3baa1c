import math

import numpy as np
import pytest

from riesz_balayage.geometry import (SetSpec, analytic_measure, contains, decreasing_family, discretize,
                                     exhaustion, fibonacci_directions, join, restrict)


def test_segment_four_panels():
    S = discretize(SetSpec.segment([0, 0, 0], [1, 0, 0]), 4)
    np.testing.assert_allclose(S.nodes[:, 0], [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(S.cell_measures, 0.25)
    assert S.cell_dims.tolist() == [1, 1, 1, 1]


@pytest.mark.parametrize("n", [20, 100, 500])
def test_sphere_area(n):
    S = discretize(SetSpec.sphere([0, 0, 0], 1.0), n)
    assert len(S) == n
    assert abs(S.total_measure() - 4 * math.pi) / (4 * math.pi) < 1e-2
    np.testing.assert_allclose(np.linalg.norm(S.nodes, axis=1), 1.0)


def test_ball_volume():
    S = discretize(SetSpec.ball([0, 0, 0], 1.0), 3)
    assert abs(S.total_measure() - 4 * math.pi / 3) / (4 * math.pi / 3) < 1e-2
    assert np.all(S.cell_dims == 3)


def test_circle_and_disc_measures():
    C = discretize(SetSpec.sphere([0, 0], 2.0), 64)
    assert abs(C.total_measure() - 4 * math.pi) < 1e-2 * 4 * math.pi
    D = discretize(SetSpec.ball([0, 0], 1.0), 4)
    assert abs(D.total_measure() - math.pi) < 1e-2 * math.pi


def test_box_and_annulus_measures():
    B = discretize(SetSpec.box([0, 0, 0], [2, 1, 1]), 4)
    assert abs(B.total_measure() - 2.0) < 1e-12
    A = discretize(SetSpec.annulus([0, 0, 0], 0.5, 1.0), 3)
    exact = analytic_measure(SetSpec.annulus([0, 0, 0], 0.5, 1.0))
    assert abs(A.total_measure() - exact) / exact < 1e-2


def test_union_concatenates_parts():
    u = SetSpec.union([SetSpec.segment([0, 0], [1, 0]), SetSpec.segment([0, 1], [1, 1])])
    S = discretize(u, 5)
    assert len(S) == 10
    assert abs(S.total_measure() - 2.0) < 1e-12


def test_join_keeps_each_resolution():
    a = discretize(SetSpec.sphere([0, 0, 0], 1.0), 50)
    b = discretize(SetSpec.ball([0, 0, 0], 0.1), 1)
    S = join([a, b])
    assert len(S) == 51
    assert S.cell_dims.tolist() == [2] * 50 + [3]
    assert a.is_subset_of(S) and b.is_subset_of(S)


def test_fibonacci_directions_unit_and_spread():
    d = fibonacci_directions(200)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.linalg.norm(d.mean(axis=0)) < 1e-2


def test_half_line_exhaustion_is_nested():
    ray = SetSpec.ray([1, 0, 0], [1, 0, 0])
    st = exhaustion(ray, [2, 4, 8], resolution=4)
    ends = [(s.nodes[:, 0].min(), s.nodes[:, 0].max()) for s in st]
    for (lo, hi), R in zip(ends, [2, 4, 8]):
        assert lo > 1 and hi < R
    assert st[0].is_subset_of(st[1]) and st[1].is_subset_of(st[2])
    np.testing.assert_allclose([s.total_measure() for s in st], [1, 3, 7])


def test_exhaustion_single_radius_is_the_set():
    ball = SetSpec.ball([0, 0, 0], 1.0)
    (only,) = exhaustion(ball, [1.0], resolution=2)
    assert only.key == discretize(ball, 2).key


def test_exhaustion_rejects_unsorted_radii():
    with pytest.raises(ValueError):
        exhaustion(SetSpec.ray([1, 0], [1, 0]), [4, 2], resolution=4)


def test_restrict_upper_half_space():
    S = discretize(SetSpec.sphere([0, 0, 0], 1.0), 100)
    H = restrict(S, SetSpec.halfspace([0, 0, 1], 0.0))
    assert 0 < len(H) < len(S)
    assert np.all(H.nodes[:, 2] >= 0)
    assert H.is_subset_of(S)


def test_restrict_identity_and_segment_half():
    S = discretize(SetSpec.segment([0, 0], [1, 0]), 4)
    assert restrict(S, S.spec) is S
    half = restrict(S, SetSpec.segment([0, 0], [0.5, 0]))
    np.testing.assert_allclose(half.nodes[:, 0], [0.125, 0.375])


def test_restrict_empty_raises():
    S = discretize(SetSpec.segment([0, 0], [1, 0]), 4)
    with pytest.raises(ValueError, match="empty"):
        restrict(S, SetSpec.ball([5, 5], 0.1))


def test_decreasing_family_of_annuli():
    subs = [SetSpec.annulus([0, 0, 0], 1.0, r) for r in (1.6, 1.3)]
    st = decreasing_family(SetSpec.annulus([0, 0, 0], 1.0, 1.9), subs, 3)
    assert st[1].is_subset_of(st[0]) and len(st[1]) < len(st[0])


def test_contains_sphere_and_segment():
    sph = SetSpec.sphere([0, 0, 0], 1.0)
    pts = np.array([[1.0, 0, 0], [0.5, 0, 0]])
    assert contains(sph, pts).tolist() == [True, False]
    seg = SetSpec.segment([0, 0], [1, 0])
    assert contains(seg, np.array([[0.5, 0.0], [0.5, 0.1]])).tolist() == [True, False]


def test_invalid_specs_collect_problems():
    with pytest.raises(ValueError, match="radius"):
        SetSpec.sphere([0, 0, 0], -1.0)
    with pytest.raises(ValueError, match="coincide"):
        SetSpec.segment([0, 0], [0, 0])


def test_spec_round_trip_and_digest():
    u = SetSpec.union([SetSpec.sphere([0, 0, 0], 1.0), SetSpec.ball([0, 0, 0], 0.2)])
    assert SetSpec.from_dict(u.to_dict()) == u
    assert u.digest() == SetSpec.from_dict(u.to_dict()).digest()


def test_points_file(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("# x y measure radius\n0 0 0.5 0.25\n1 0 0.5 0.25\n")
    S = discretize(SetSpec.points_file(str(p), 2, cell_dim=1), 1)
    assert len(S) == 2 and abs(S.total_measure() - 1.0) < 1e-12


def test_discrete_set_is_read_only():
    S = discretize(SetSpec.segment([0, 0], [1, 0]), 4)
    with pytest.raises(ValueError):
        S.nodes[0, 0] = 3.0
