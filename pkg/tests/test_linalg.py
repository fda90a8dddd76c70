from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpmoduli.services import linalg

F = Fraction


def _m(rows: list[list[int]]) -> list[list[Fraction]]:
    return [[F(x) for x in row] for row in rows]


small = st.integers(min_value=-5, max_value=5)
square3 = st.lists(st.lists(small, min_size=3, max_size=3), min_size=3, max_size=3)


def test_frac_accepts_strings_and_rejects_bools() -> None:
    assert linalg.frac("-3/4") == F(-3, 4)
    assert linalg.frac(2) == F(2)
    with pytest.raises(ValueError, match="Not a rational"):
        linalg.frac(True)
    with pytest.raises(ValueError, match="Empty"):
        linalg.frac("  ")


def test_fmt_writes_p_over_q() -> None:
    assert linalg.fmt(F(1, 2)) == "1/2"
    assert linalg.fmt(F(-3)) == "-3"


def test_rank_and_nullspace() -> None:
    mat = _m([[1, 2, 3], [2, 4, 6], [0, 1, 1]])
    assert linalg.rank(mat, 3) == 2
    kernel = linalg.nullspace(mat, 3)
    assert len(kernel) == 1
    assert linalg.mat_vec(mat, kernel[0]) == [0, 0, 0]


def test_inverse_of_singular_matrix_raises() -> None:
    with pytest.raises(linalg.SingularMatrixError):
        linalg.inverse(_m([[1, 2], [2, 4]]))


def test_solve_inconsistent_system_raises() -> None:
    with pytest.raises(linalg.InconsistentSystemError):
        linalg.solve(_m([[1, 1], [1, 1]]), [F(1), F(2)], 2)


def test_intersect_two_planes_in_three_space() -> None:
    a = _m([[1, 0, 0], [0, 1, 0]])
    b = _m([[0, 1, 0], [0, 0, 1]])
    assert linalg.intersect(a, b, 3) == _m([[0, 1, 0]])


def test_complement_basis_extends_sub() -> None:
    sub = _m([[1, 1, 0]])
    whole = _m([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    extra = linalg.complement_basis(sub, whole, 3)
    assert len(extra) == 2
    assert linalg.rank([*sub, *extra], 3) == 3


def test_skew_and_sym_parts_add_up() -> None:
    mat = _m([[1, 2], [5, 7]])
    skew = linalg.skew_part(mat)
    sym = linalg.sym_part(mat)
    assert [[s + k for s, k in zip(r1, r2)] for r1, r2 in zip(sym, skew)] == mat
    assert skew[0][1] == -skew[1][0]


@settings(max_examples=40, deadline=None)
@given(square3)
def test_inverse_matches_determinant(rows: list[list[int]]) -> None:
    mat = _m(rows)
    det = linalg.determinant(mat)
    if det == 0:
        with pytest.raises(linalg.SingularMatrixError):
            linalg.inverse(mat)
        return
    assert linalg.matmul(mat, linalg.inverse(mat)) == linalg.identity(3)


@settings(max_examples=40, deadline=None)
@given(square3)
def test_rank_nullity(rows: list[list[int]]) -> None:
    mat = _m(rows)
    assert linalg.rank(mat, 3) + len(linalg.nullspace(mat, 3)) == 3
