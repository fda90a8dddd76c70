from fractions import Fraction

import pytest

from qpmoduli.services import linalg
from qpmoduli.services.catalog import borel_pair, get_algebra, nilradical_pair
from qpmoduli.services.qla import (
    AlgebraError,
    HypothesisError,
    cartan_trivector,
    compose,
    coisotropy_report,
    descend_data,
    direct_sum,
    dump_algebra,
    is_ideal,
    load_algebra,
    perp,
    subalgebra,
    validate_algebra,
)


def test_catalog_algebras_validate() -> None:
    for name in ("abelian3", "sl2", "gl2", "gl2_central", "sl2+sl2", "sl2+bar(sl2)"):
        report = validate_algebra(get_algebra(name))
        assert report.ok, report.as_dict()


def test_wrong_sign_t_fails_ad_invariance() -> None:
    sl2 = dump_algebra(get_algebra("sl2"))
    sl2["t"] = [[0, 1, 1], [1, 0, 1], [2, 2, "-1/2"]]
    report = validate_algebra(load_algebra(sl2))
    assert not report.ok
    failed = [check.name for check in report.checks if not check.ok]
    assert failed == ["ad_invariance"]


def test_sl2_brackets_from_matrix_model() -> None:
    sl2 = get_algebra("sl2")
    e, f, h = (sl2.basis_vector(i) for i in range(3))
    assert sl2.bracket(e, f) == h
    assert sl2.bracket(h, e) == [2, 0, 0]
    assert sl2.bracket(h, f) == [0, -2, 0]


def test_degenerate_t_has_no_metric() -> None:
    algebra = get_algebra("gl2_central")
    assert not algebra.nondegenerate
    with pytest.raises(AlgebraError, match="degenerate"):
        _ = algebra.metric


def test_cartan_trivector_vanishes_on_abelian() -> None:
    assert cartan_trivector(get_algebra("abelian3")).is_zero()


def test_cartan_trivector_on_sl2_is_alternating_and_nonzero() -> None:
    phi = cartan_trivector(get_algebra("sl2"))
    assert not phi.is_zero()
    assert phi.respects_symmetry()


def test_bar_negates_t_and_is_an_involution() -> None:
    sl2 = get_algebra("sl2")
    bar = compose(sl2, mode="bar")
    assert bar.name == "bar(sl2)"
    assert bar.t[2][2] == Fraction(-1, 2)
    assert compose(bar, mode="bar").name == "sl2"


def test_direct_sum_tags_repeated_labels() -> None:
    sl2 = get_algebra("sl2")
    both = direct_sum([sl2, sl2])
    assert both.labels == ("e", "f", "h", "e2", "f2", "h2")
    assert both.dim == 6
    assert validate_algebra(both).ok


def test_compose_direct_sum_needs_two_algebras() -> None:
    with pytest.raises(AlgebraError, match="two algebras"):
        compose(get_algebra("sl2"))


def test_subalgebra_rejects_span_not_closed() -> None:
    sl2 = get_algebra("sl2")
    with pytest.raises(AlgebraError, match="not closed"):
        subalgebra(sl2, [[1, 0, 0], [0, 1, 0]])


def test_borel_pair_is_coisotropic_with_nilradical_perp() -> None:
    double = get_algebra("sl2+bar(sl2)")
    c = borel_pair(double)
    report = coisotropy_report(c)
    assert report.is_coisotropic
    assert report.is_lagrangian is False
    assert perp(c).same_as(nilradical_pair(double))
    assert is_ideal(nilradical_pair(double), c)


def test_degenerate_parent_reports_no_lagrangian_verdict() -> None:
    algebra = get_algebra("gl2_central")
    report = coisotropy_report(subalgebra(algebra, linalg.identity(4)))
    assert report.t_status == "degenerate"
    assert report.is_lagrangian is None


def test_descent_to_cartan_quotient() -> None:
    double = get_algebra("sl2+bar(sl2)")
    data = descend_data(borel_pair(double), nilradical_pair(double))
    summary = data.as_dict()
    assert summary["quotient_dim"] == 2
    assert summary["quotient_abelian"]
    assert data.phi_mod_vanishes


def test_descent_requires_coisotropic_c() -> None:
    double = get_algebra("sl2+bar(sl2)")
    n = nilradical_pair(double)
    with pytest.raises(HypothesisError, match="not coisotropic") as info:
        descend_data(n, n)
    assert info.value.hypothesis == "not coisotropic"


def test_dump_and_load_preserve_structure() -> None:
    sl2 = get_algebra("sl2")
    document = dump_algebra(sl2)
    assert document["t"] == [[0, 1, "1"], [1, 0, "1"], [2, 2, "1/2"]]
    loaded = load_algebra(document)
    assert loaded.c == sl2.c
    assert loaded.t == sl2.t
    assert loaded.matrix_model == sl2.matrix_model


def test_load_algebra_reports_bad_documents() -> None:
    with pytest.raises(AlgebraError, match="Invalid algebra document"):
        load_algebra({"labels": ["x"]})
    with pytest.raises(AlgebraError, match="labels length"):
        load_algebra({"dim": 2, "labels": ["x"]})
