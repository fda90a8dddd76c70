from fractions import Fraction

import pytest

from qpmoduli.services.catalog import get_algebra
from qpmoduli.services.invcalc import (
    Generator,
    LayoutError,
    Multivector,
    PointFrame,
    QuasiPoissonData,
    Tensor2,
    action_extend,
    evaluate_at,
    group_point,
    identity_point,
    invariance_defects,
    jacobiator_defect,
    schouten,
    sigma_of,
)
from qpmoduli.services.moduli import build
from qpmoduli.services.points import gen_points
from qpmoduli.services.qla import cartan_trivector, t_tensor
from qpmoduli.services.surface import named_recipe

L0 = [Multivector.generator(0, "L", i) for i in range(3)]
R0 = [Multivector.generator(0, "R", i) for i in range(3)]


def test_wedge_is_alternating() -> None:
    a, b = L0[0], L0[1]
    assert (a.wedge(b) + b.wedge(a)).is_zero()
    assert a.wedge(a).is_zero()
    swapped = Multivector.from_items(2, [((Generator(0, "L", 1), Generator(0, "L", 0)), Fraction(1))])
    assert swapped == a.wedge(b).scale(Fraction(-1))


def test_degree_mismatch_is_a_layout_error() -> None:
    with pytest.raises(LayoutError, match="Degree mismatch"):
        L0[0] + L0[0].wedge(L0[1])


def test_left_generators_bracket_like_the_algebra() -> None:
    sl2 = get_algebra("sl2")
    assert schouten(L0[0], L0[1], sl2) == L0[2]
    assert schouten(R0[0], R0[1], sl2) == R0[2].scale(Fraction(-1))
    assert schouten(L0[0], R0[1], sl2).is_zero()


def test_action_extend_needs_alternating_tensor() -> None:
    sl2 = get_algebra("sl2")
    with pytest.raises(LayoutError, match="alternating"):
        action_extend(L0, t_tensor(sl2))


def test_sigma_splits_into_pi_and_symmetric_part() -> None:
    sl2 = get_algebra("sl2")
    pi = L0[0].wedge(R0[1])
    sigma = sigma_of(pi, L0, t_tensor(sl2))
    assert sigma.skew() == pi
    assert (sigma - sigma.transpose()).skew() == pi.scale(Fraction(2))
    with pytest.raises(LayoutError, match="bivector"):
        sigma_of(L0[0], L0, t_tensor(sl2))


def test_group_point_validates_determinant() -> None:
    with pytest.raises(LayoutError, match="determinant"):
        group_point([[[Fraction(2), Fraction(0)], [Fraction(0), Fraction(1)]]], "SL")
    with pytest.raises(LayoutError, match="Singular"):
        group_point([[[Fraction(1), Fraction(1)], [Fraction(1), Fraction(1)]]], "GL")


def test_frame_at_identity_sends_right_to_left() -> None:
    frame = PointFrame(get_algebra("sl2"), identity_point(1))
    assert frame.dense(R0[2]) == frame.dense(L0[2])
    with pytest.raises(LayoutError, match="out of range"):
        frame.vector(Generator(1, "L", 0))


def test_tensor_evaluation_of_outer_product() -> None:
    frame = PointFrame(get_algebra("sl2"), identity_point(1))
    value = evaluate_at(Tensor2.outer(L0[0], L0[1]), frame)
    assert value.matrix()[0][1] == 1
    assert value.matrix()[1][0] == 0


def test_layout_is_checked() -> None:
    sl2 = get_algebra("sl2")
    with pytest.raises(LayoutError, match="rho has"):
        QuasiPoissonData(sl2, 1, sl2, L0[:2], Multivector.zero(2))
    with pytest.raises(LayoutError, match="outside layout"):
        QuasiPoissonData(sl2, 1, sl2, [Multivector.generator(3, "L", i) for i in range(3)], Multivector.zero(2))


@pytest.mark.parametrize("surface", ["disk", "annulus", "alternating4"])
def test_glued_spaces_are_quasi_poisson(surface: str) -> None:
    space = build(named_recipe(surface), get_algebra("sl2"))
    phi = cartan_trivector(space.data.acting)
    for point in gen_points(99, space.n_sites, 2):
        frame = space.frame(point)
        assert jacobiator_defect(space.data, phi, frame).is_zero()
        assert invariance_defects(space.data, frame) == []
