import pytest

from qpmoduli.services import linalg
from qpmoduli.services.catalog import borel_pair, diagonal, get_algebra, nilradical_pair
from qpmoduli.services.invcalc import identity_point
from qpmoduli.services.moduli import build, forget
from qpmoduli.services.qla import HypothesisError, Subalgebra
from qpmoduli.services.reduction import (
    TransversalityError,
    central_reduction_at,
    fibre_points,
    fuse_central_pairs,
    partial_reduction_at,
    reduced_bivector_at,
    space_full_algebra,
    symplectic_leaf_check,
)
from qpmoduli.services.surface import named_recipe, recipe


def _space(name: str):
    return build(named_recipe(name), get_algebra("sl2"))


def test_reduced_bivector_on_invariant_covectors() -> None:
    space = _space("disk")
    c = diagonal(space.data.acting)
    for point in space.points(3, 2):
        reduced = reduced_bivector_at(space.data, c, point)
        assert reduced.ok, reduced.as_dict()


def test_reduction_needs_coisotropic_subalgebra() -> None:
    space = _space("disk")
    with pytest.raises(HypothesisError, match="not coisotropic"):
        reduced_bivector_at(space.data, nilradical_pair(space.data.acting), space.points(3, 1)[0])


def test_three_punctured_sphere_reduces_to_a_point() -> None:
    space = _space("annulus")
    c = diagonal(space.data.acting)
    for point in space.points(23, 3):
        reduced = central_reduction_at(space, c, point)
        assert reduced.ok, reduced.as_dict()
        assert reduced.dim == 0


def test_four_punctured_sphere_reduces_to_a_symplectic_surface() -> None:
    space = _space("pants")
    c = diagonal(space.data.acting)
    for point in space.points(19, 3):
        reduced = central_reduction_at(space, c, point)
        assert reduced.dim == 2
        assert reduced.nondegenerate
        assert reduced.matrix[0][1] == -reduced.matrix[1][0] != 0


def test_identity_point_is_not_transverse() -> None:
    space = _space("annulus")
    with pytest.raises(TransversalityError, match="transversality fails") as info:
        central_reduction_at(space, diagonal(space.data.acting), identity_point(space.n_sites))
    summary = info.value.as_dict()
    assert summary["deficit"] == summary["expected_rank"] - summary["actual_rank"] > 0


def test_leaf_check_agrees_with_central_reduction() -> None:
    space = _space("pants")
    verdict = symplectic_leaf_check(space, diagonal(space.data.acting), space.points(19, 1)[0])
    assert verdict.ok, verdict.as_dict()
    assert verdict.reduced_dim == 2


def test_bruhat_partial_reduction() -> None:
    space = _space("disk")
    acting = space.data.acting
    for point in space.points(29, 2):
        partial = partial_reduction_at(space.data, borel_pair(acting), nilradical_pair(acting), point)
        assert partial.ok, partial.as_dict()
        assert partial.descent.quotient.dim == 2


def test_fused_disks_keep_central_pairs() -> None:
    disk = _space("disk")
    for point in fibre_points(disk, disk, 2, seed=31):
        report = fuse_central_pairs(disk, disk, point)
        assert report.ok, report.as_dict()


def test_disk_conormals_are_never_transverse() -> None:
    # mu_L and mu_R read the same edge, so both conormals pull back to d tr g
    space = _space("disk")
    for point in space.points(7, 2):
        with pytest.raises(TransversalityError) as info:
            central_reduction_at(space, diagonal(space.data.acting), point)
        assert info.value.as_dict()["deficit"] > 0


def test_forget_is_partial_reduction_by_one_copy() -> None:
    sl2 = get_algebra("sl2")
    before = build(
        recipe(3, [("glue", "+1", "+2"), ("glue", "+1|+2", "+3"), ("glue", "-2", "-1"), ("glue", "-2|-1", "-3")]),
        sl2,
    )
    after = forget(before, "-2|-1|-3")
    assert after.dim == build(named_recipe("genus1"), sl2).dim

    acting = before.data.acting
    start = before.copy_index("-2|-1|-3") * sl2.dim
    rows = linalg.identity(acting.dim)[start : start + sl2.dim]
    copy = Subalgebra(acting, tuple(tuple(row) for row in rows))
    for point in before.points(13, 2):
        partial = partial_reduction_at(before.data, space_full_algebra(before), copy, point)
        assert partial.ok, partial.as_dict()
        assert partial.dim == after.dim
        assert partial.descent.quotient.dim == after.data.acting.dim
