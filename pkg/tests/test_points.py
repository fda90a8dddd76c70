import numpy as np

from qpmoduli.services import linalg
from qpmoduli.services.points import gen_points, is_regular_semisimple, matrix_power, random_matrix, trace


def test_points_are_reproducible_for_a_seed() -> None:
    first = gen_points(123, 2, 3)
    second = gen_points(123, 2, 3)
    assert [p.sites for p in first] == [p.sites for p in second]


def test_different_seeds_give_different_points() -> None:
    assert gen_points(1, 1, 1)[0].sites != gen_points(2, 1, 1)[0].sites


def test_sl_points_have_unit_determinant() -> None:
    for point in gen_points(5, 3, 4, "SL"):
        for mat in point.sites:
            assert linalg.determinant(mat) == 1


def test_gl_points_are_invertible() -> None:
    rng = np.random.default_rng(9)
    for _ in range(5):
        assert linalg.determinant(random_matrix(rng, "GL")) != 0


def test_trace_power_and_regularity() -> None:
    assert trace(matrix_power([[linalg.frac(2), 0], [0, linalg.frac("1/2")]], 2)) == linalg.frac("17/4")
    assert not is_regular_semisimple(linalg.identity(2))
