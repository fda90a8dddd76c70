from fractions import Fraction

import pytest

from qpmoduli.services import linalg
from qpmoduli.services.catalog import get_algebra
from qpmoduli.services.invcalc import LayoutError, identity_point
from qpmoduli.services.moduli import (
    FusionError,
    adjoint,
    build,
    central_maps,
    check_centrality,
    evaluate_word,
    internal_fusion,
    leaf_pairing,
    leaf_ranks,
    leaf_stabilizer_report,
    sigma_inverse_on_leaves,
    slice_points,
    solve_words,
)
from qpmoduli.services.points import gen_points
from qpmoduli.services.surface import RecipeError, named_recipe, recipe


def _space(name: str, algebra: str = "sl2", group: str = "SL"):
    return build(named_recipe(name), get_algebra(algebra), group)


def test_disk_is_the_double_acting_on_one_copy_of_g() -> None:
    space = _space("disk")
    assert space.n_sites == 1
    assert space.dim == 3
    assert [c.name for c in space.copies] == ["+1", "-1"]
    assert space.data.acting.dim == 6
    assert space.pi.is_zero()


def test_gluing_fuses_acting_copies() -> None:
    space = _space("annulus")
    assert [c.name for c in space.copies] == ["+1|+2", "-1|-2"]
    assert not space.pi.is_zero()


def test_forgetting_removes_a_site_and_a_copy() -> None:
    space = _space("genus1")
    assert space.n_sites == 2
    assert [c.name for c in space.copies] == ["+1|+2|+3"]


def test_build_needs_a_matrix_model() -> None:
    with pytest.raises(LayoutError, match="matrix model"):
        build(named_recipe("disk"), get_algebra("abelian3"))


def test_build_reports_the_failing_step() -> None:
    with pytest.raises(RecipeError, match="Step 0"):
        build(recipe(2, [("glue", "+1", "-2")]), get_algebra("sl2"))


def test_fusion_rejects_mismatched_copies() -> None:
    space = _space("disk")
    with pytest.raises(FusionError, match="itself"):
        internal_fusion(space.pi, space.copies, 0, 0)
    with pytest.raises(FusionError, match="Incompatible"):
        internal_fusion(space.pi, space.copies, 0, 1)


def test_central_maps_follow_the_arcs() -> None:
    maps = central_maps(_space("disk"))
    assert [w.word for w in maps.mu_l] == [((0, 1),)]
    assert [w.word for w in maps.mu_r] == [((0, -1),)]
    assert maps.uncut == []


def test_word_and_its_inverse_cancel() -> None:
    point = gen_points(4, 2, 1)[0]
    assert evaluate_word(((0, 1), (1, 1), (1, -1), (0, -1)), point) == linalg.identity(2)


def test_adjoint_at_identity_is_trivial() -> None:
    sl2 = get_algebra("sl2")
    u = [Fraction(1), Fraction(-2), Fraction(3)]
    assert adjoint(sl2, linalg.identity(2), u) == u


@pytest.mark.parametrize(
    ("surface", "algebra", "group"),
    [
        ("disk", "sl2", "SL"),
        ("annulus", "sl2", "SL"),
        ("alternating4", "sl2", "SL"),
        ("three_marked_disk", "sl2", "SL"),
        ("annulus", "gl2", "GL"),
    ],
)
def test_arc_holonomies_are_central(surface: str, algebra: str, group: str) -> None:
    space = _space(surface, algebra, group)
    for point in space.points(21, 2):
        report = check_centrality(space, point)
        assert report.ok, report.as_dict()
        assert report.left_checked == len(space.analysis.left) * space.algebra.dim


def test_left_and_right_leaves_have_equal_rank() -> None:
    space = _space("annulus")
    for point in space.points(8, 2):
        ranks = leaf_ranks(space, point)
        assert ranks.rank_left == ranks.rank_right
        assert ranks.theorem_holds, ranks.as_dict()


def test_alternating_split_leaf_rank() -> None:
    space = _space("alternating4")
    point = space.points(3, 1)[0]
    ranks = leaf_ranks(space, point)
    assert ranks.rank_left == space.dim - space.data.acting.dim // 2
    assert all(s.lagrangian for s in leaf_stabilizer_report(space, point))


def test_sigma_inverse_is_nondegenerate_on_leaves() -> None:
    space = _space("annulus")
    pairing = sigma_inverse_on_leaves(space, space.points(12, 1)[0])
    assert pairing.nondegenerate
    assert pairing.choice_independent
    assert len(pairing.matrix) == leaf_ranks(space, space.points(12, 1)[0]).rank_left


@pytest.mark.parametrize("surface", ["disk", "alternating4"])
def test_left_leaf_rank_is_dim_minus_half_the_double(surface: str) -> None:
    space = _space(surface)
    half = space.data.acting.dim // 2
    for point in space.points(17, 3):
        ranks = leaf_ranks(space, point)
        assert ranks.rank_left == ranks.rank_right == space.dim - half
        assert len(sigma_inverse_on_leaves(space, point).matrix) == space.dim - half


def test_leaf_pairing_quotients_both_kernels() -> None:
    F = Fraction
    # rank 2 with a one-dimensional left kernel e3 and right kernel e1 + e3
    s = [[F(0), F(1), F(0)], [F(-1), F(0), F(1)], [F(0), F(0), F(0)]]
    pairing = leaf_pairing(s, 3)
    assert len(pairing.matrix) == 2
    assert pairing.nondegenerate
    assert pairing.choice_independent

    zero = leaf_pairing([[F(0)] * 2 for _ in range(2)], 2)
    assert zero.matrix == []
    assert zero.nondegenerate


def test_solve_words_lands_on_the_slice() -> None:
    space = _space("alternating4")
    words = [w.word for w in central_maps(space).mu_l]
    for point in slice_points(space, words, 2, seed=5):
        for word in words:
            assert evaluate_word(word, point) == linalg.identity(2)


def test_solve_words_needs_a_free_site() -> None:
    with pytest.raises(LayoutError, match="No edge assignment"):
        solve_words(identity_point(1), [((0, 1), (0, 1))])
