import pytest

from qpmoduli.services import linalg
from qpmoduli.services.catalog import antidiagonal, borel_pair, diagonal, get_algebra, standard_complement
from qpmoduli.services.invcalc import GroupPoint, full_pairing
from qpmoduli.services.moduli import build, central_maps, evaluate_word, slice_points, word_differential
from qpmoduli.services.momentmap import (
    annulus_comparison,
    change_complement,
    check_fused_moment,
    check_twisted_identities,
    conjugate,
    conjugate_pair,
    conjugation_check,
    diagonal_pair,
    disk_space,
    double_of,
    fuse_moment_maps,
    induce_central_pair,
    induction_round_trip,
    leaf_structure_check,
    manin_pair_data,
    moment_condition_check,
    point_space,
    restrict_structure,
    slice_pair,
    triple_fusion_check,
)
from qpmoduli.services.points import gen_points
from qpmoduli.services.qla import HypothesisError, cartan_trivector
from qpmoduli.services.surface import named_recipe

SL2 = get_algebra("sl2")


def _space(name: str):
    return build(named_recipe(name), SL2)


def _slice(space, n: int = 2, seed: int = 5):
    words = [w.word for w in central_maps(space).mu_l]
    return slice_points(space, words, n, seed)


def test_diagonal_pair_dual_basis() -> None:
    pair = diagonal_pair(SL2)
    assert pair.rank == 3
    for i, f in enumerate(pair.dual):
        assert [pair.pairing(f, e) for e in pair.basis] == [int(i == j) for j in range(3)]
    assert pair.tau_matrix == [[-x for x in row] for row in linalg.transpose(pair.tau_matrix)]


def test_antidiagonal_complement_has_trivial_cobracket() -> None:
    pair = diagonal_pair(SL2)
    assert pair.bialgebra_trivial
    assert not pair.phi.is_zero()
    assert not cartan_trivector(SL2).is_zero()


def test_standard_complement_is_a_lie_bialgebra() -> None:
    double = double_of(SL2)
    pair = manin_pair_data(double, standard_complement(double), diagonal(double))
    assert pair.phi.is_zero()
    assert not pair.bialgebra_trivial


@pytest.mark.parametrize(
    ("h", "h_star", "message"),
    [
        (antidiagonal, diagonal, "not a subalgebra"),
        (borel_pair, diagonal, "not Lagrangian"),
        (diagonal, diagonal, "not complementary"),
    ],
)
def test_manin_pair_hypotheses(h, h_star, message: str) -> None:
    double = double_of(SL2)
    with pytest.raises(HypothesisError, match=message):
        manin_pair_data(double, h(double), h_star(double))


def test_degenerate_double_is_rejected() -> None:
    with pytest.raises(HypothesisError, match="degenerate pairing"):
        diagonal_pair(get_algebra("gl2_central"))


def test_conjugate_pair_flips_the_pairing() -> None:
    pair = diagonal_pair(SL2)
    bar = conjugate_pair(pair)
    assert bar.double.t_matrix == [[-x for x in row] for row in pair.double.t_matrix]
    assert bar.rank == pair.rank


@pytest.mark.parametrize("complement", [antidiagonal, standard_complement])
def test_twisted_identities_on_the_annulus(complement) -> None:
    space = _space("annulus")
    acting = space.data.acting
    structure = restrict_structure(space.data, manin_pair_data(acting, diagonal(acting), complement(acting)))
    for point in space.points(11, 2):
        report = check_twisted_identities(structure, point)
        assert report.ok, report.as_dict()


def test_restriction_needs_the_matching_double() -> None:
    space = _space("annulus")
    with pytest.raises(HypothesisError, match="acting algebra mismatch"):
        restrict_structure(space.data, diagonal_pair(get_algebra("gl2")))


def test_changing_the_complement_twists_by_wedge_h() -> None:
    space = _space("disk")
    acting = space.data.acting
    first = manin_pair_data(acting, diagonal(acting), antidiagonal(acting))
    second = manin_pair_data(acting, diagonal(acting), standard_complement(acting))
    change = change_complement(space.data, first, second)
    assert change.in_wedge_h
    assert change.relation_holds


def test_slice_needs_alternating_points() -> None:
    with pytest.raises(HypothesisError, match="alternating marked points"):
        slice_pair(_space("three_marked_disk"))


@pytest.mark.parametrize("surface", ["disk", "alternating4"])
def test_left_slice_is_an_h_space_with_moment_map(surface: str) -> None:
    space = _space(surface)
    for point in _slice(space):
        leaf = leaf_structure_check(space, point)
        assert leaf.ok, leaf.as_dict()
        moment = moment_condition_check(space, point)
        assert moment.ok, moment.as_dict()
        assert conjugation_check(space, point).ok


def test_leaf_structure_needs_a_single_big_leaf() -> None:
    space = _space("annulus")
    point = _slice(space, 1)[0]
    with pytest.raises(HypothesisError, match="not split-symplectic"):
        leaf_structure_check(space, point)


def test_untwisted_bivector_is_not_tangent_to_the_slice() -> None:
    space = _space("alternating4")
    point = _slice(space, 1)[0]
    assert not leaf_structure_check(space, point, twisted=False).pi_tangent


def test_induction_round_trip_on_the_disk() -> None:
    base = disk_space(SL2)
    for point in gen_points(3, 1, 2):
        report = induction_round_trip(base, point)
        assert report.ok, report.as_dict()


def test_induced_pair_from_the_disk_is_the_annulus() -> None:
    for point in gen_points(4, 2, 2):
        report = annulus_comparison(SL2, point)
        assert report.ok, report.as_dict()


def test_fused_annuli_restrict_to_pants() -> None:
    for point in gen_points(6, 3, 2):
        report = triple_fusion_check(SL2, point)
        assert report.ok, report.as_dict()


def test_fused_moment_maps() -> None:
    base = disk_space(SL2)
    fused = fuse_moment_maps(base, base)
    for first, second in zip(gen_points(8, 1, 2), gen_points(9, 1, 2)):
        report = check_fused_moment(fused, fused.point(first, second))
        assert report.ok, report.as_dict()


def test_conjugate_space_lives_on_the_right() -> None:
    flipped = conjugate(disk_space(SL2))
    assert flipped.side == "right"
    assert flipped.mu == ((0, -1),)
    with pytest.raises(HypothesisError, match="left slice required"):
        induce_central_pair(flipped)
    assert induce_central_pair(conjugate(flipped)).mu_l == ((0, 1),)


def test_fusion_needs_one_algebra() -> None:
    with pytest.raises(HypothesisError, match="incompatible algebras"):
        fuse_moment_maps(disk_space(SL2), disk_space(get_algebra("gl2")))


def test_point_space_is_the_fusion_unit() -> None:
    base = disk_space(SL2)
    fused = fuse_moment_maps(base, point_space(SL2))
    structure = restrict_structure(fused.data, fused.pair)
    for x in gen_points(12, 1, 2):
        point = fused.point(x, GroupPoint(sites=()))
        assert evaluate_word(fused.moment, point) == evaluate_word(base.mu, x)
        report = check_fused_moment(fused, point)
        assert report.ok, report.as_dict()

        frame = fused.data.frame(point)
        conormal = [row for word in fused.slice_words for row in word_differential(SL2, word, point)]
        assert len(linalg.nullspace(conormal, frame.size)) == base.n_sites * SL2.dim
        small = full_pairing(base.pi, base.frame(x))
        assert linalg.rank(full_pairing(structure.pi_prime, frame), frame.size) == linalg.rank(small, len(small))
