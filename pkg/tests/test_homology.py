import pytest

from qpmoduli.services import linalg
from qpmoduli.services.catalog import get_algebra
from qpmoduli.services.homology import (
    LocalSystem,
    annihilator_image,
    cross_check,
    intersection_sigma,
    inverse_word,
    resplit_invariance,
)
from qpmoduli.services.invcalc import full_pairing
from qpmoduli.services.moduli import build
from qpmoduli.services.qla import AlgebraError
from qpmoduli.services.surface import named_recipe


def _space(name: str, algebra: str = "sl2"):
    return build(named_recipe(name), get_algebra(algebra))


def test_inverse_word_reverses_and_negates() -> None:
    assert inverse_word(((0, 1), (2, -1))) == ((2, 1), (0, -1))


@pytest.mark.parametrize("surface", ["disk", "annulus", "three_marked_disk", "alternating4", "genus1"])
def test_intersection_pairing_matches_invariant_sigma(surface: str) -> None:
    space = _space(surface)
    for point in space.points(17, 2):
        report = cross_check(space, point)
        assert report.ok, report.as_dict()
        assert report.sigma_matches


def test_pi_does_not_depend_on_the_split() -> None:
    space = _space("three_marked_disk")
    system = LocalSystem(space.algebra, space.points(2, 1)[0])
    report = resplit_invariance(space, system)
    assert report.invariant
    assert report.splits_checked == 2 ** len(space.surface.vertices)


def test_disk_pairing_vanishes_for_either_split() -> None:
    space = _space("disk")
    point = space.points(6, 1)[0]
    system = LocalSystem(space.algebra, point)
    flipped = {"+1": "-", "-1": "+"}
    assert intersection_sigma(space, system) == full_pairing(space.sigma, space.frame(point))
    assert linalg.is_zero_matrix(intersection_sigma(space, system, flipped))


def test_annihilator_image_counts_left_arcs() -> None:
    space = _space("alternating4")
    system = LocalSystem(space.algebra, space.points(1, 1)[0])
    assert len(annihilator_image(space, system)) == len(space.analysis.left) * space.algebra.dim


def test_annihilator_image_needs_nondegenerate_t() -> None:
    space = _space("disk", "gl2_central")
    with pytest.raises(AlgebraError, match="nondegenerate"):
        annihilator_image(space, LocalSystem(space.algebra, space.points(1, 1)[0]))
