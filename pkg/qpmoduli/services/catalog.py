from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Callable

from qpmoduli.services import linalg
from qpmoduli.services.qla import (
    AlgebraError,
    QuadraticLieAlgebra,
    Subalgebra,
    compose,
    direct_sum,
    from_matrix_model,
    subalgebra,
    subspace,
)

ONE = Fraction(1)
HALF = Fraction(1, 2)
ZERO = Fraction(0)

SL2_MATRICES = (
    ((ZERO, ONE), (ZERO, ZERO)),
    ((ZERO, ZERO), (ONE, ZERO)),
    ((ONE, ZERO), (ZERO, -ONE)),
)

GL2_MATRICES = (
    ((ONE, ZERO), (ZERO, ZERO)),
    ((ZERO, ONE), (ZERO, ZERO)),
    ((ZERO, ZERO), (ONE, ZERO)),
    ((ZERO, ZERO), (ZERO, ONE)),
)


def abelian(n: int = 3) -> QuadraticLieAlgebra:
    zero = tuple(tuple(ZERO for _ in range(n)) for _ in range(n))
    return QuadraticLieAlgebra(
        name=f"abelian{n}",
        labels=tuple(f"x{i}" for i in range(n)),
        c=tuple(zero for _ in range(n)),
        t=tuple(tuple(row) for row in linalg.identity(n)),
    )


def sl2() -> QuadraticLieAlgebra:
    # inverse of the trace form: e⊗f + f⊗e + 1/2 h⊗h
    t = [[ZERO, ONE, ZERO], [ONE, ZERO, ZERO], [ZERO, ZERO, HALF]]
    return from_matrix_model("sl2", ("e", "f", "h"), SL2_MATRICES, t)


def gl2() -> QuadraticLieAlgebra:
    # basis E11, E12, E21, E22; inverse of the trace form
    t = [
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ZERO, ONE, ZERO],
        [ZERO, ONE, ZERO, ZERO],
        [ZERO, ZERO, ZERO, ONE],
    ]
    return from_matrix_model("gl2", ("a", "e", "f", "d"), GL2_MATRICES, t)


def gl2_central() -> QuadraticLieAlgebra:
    """gl2 with t = z⊗z for the identity z; invariant but degenerate."""
    t = [[ONE if i in (0, 3) and j in (0, 3) else ZERO for j in range(4)] for i in range(4)]
    return from_matrix_model("gl2_central", ("a", "e", "f", "d"), GL2_MATRICES, t)


def sl2_double() -> QuadraticLieAlgebra:
    return direct_sum([sl2(), compose(sl2(), mode="bar")], name="sl2+bar(sl2)")


def sl2_pair() -> QuadraticLieAlgebra:
    return direct_sum([sl2(), sl2()], name="sl2+sl2")


ALGEBRAS: dict[str, Callable[[], QuadraticLieAlgebra]] = {
    "abelian3": abelian,
    "sl2": sl2,
    "gl2": gl2,
    "gl2_central": gl2_central,
    "sl2+sl2": sl2_pair,
    "sl2+bar(sl2)": sl2_double,
}


@lru_cache(maxsize=None)
def get_algebra(name: str) -> QuadraticLieAlgebra:
    builder = ALGEBRAS.get(name)
    if builder is None:
        raise AlgebraError(f"Unknown algebra '{name}'. Known: {', '.join(sorted(ALGEBRAS))}.")
    return builder()


def list_algebras() -> list[str]:
    return sorted(ALGEBRAS)


def _block(rows_first: list[list[int]], rows_second: list[list[int]]) -> list[list[Fraction]]:
    """Rows of g⊕g from pairs of coordinate rows (x, y)."""
    return [[Fraction(v) for v in x] + [Fraction(v) for v in y] for x, y in zip(rows_first, rows_second)]


def _unit(n: int, i: int, scale: int = 1) -> list[int]:
    row = [0] * n
    row[i] = scale
    return row


def diagonal(double: QuadraticLieAlgebra) -> Subalgebra:
    n = double.dim // 2
    rows = _block([_unit(n, i) for i in range(n)], [_unit(n, i) for i in range(n)])
    return subalgebra(double, rows)


def antidiagonal(double: QuadraticLieAlgebra) -> Subalgebra:
    n = double.dim // 2
    rows = _block([_unit(n, i) for i in range(n)], [_unit(n, i, -1) for i in range(n)])
    return subspace(double, rows)


def borel_pair(double: QuadraticLieAlgebra) -> Subalgebra:
    """b⊕b in sl2⊕bar(sl2), b spanned by e and h."""
    rows = _block([[1, 0, 0], [0, 0, 1], [0, 0, 0], [0, 0, 0]], [[0, 0, 0], [0, 0, 0], [1, 0, 0], [0, 0, 1]])
    return subalgebra(double, rows)


def nilradical_pair(double: QuadraticLieAlgebra) -> Subalgebra:
    rows = _block([[1, 0, 0], [0, 0, 0]], [[0, 0, 0], [1, 0, 0]])
    return subalgebra(double, rows)


def standard_complement(double: QuadraticLieAlgebra) -> Subalgebra:
    """{(x, y): x in b+, y in b-, opposite Cartan parts}; a Lagrangian subalgebra complementary to the diagonal."""
    rows = _block([[1, 0, 0], [0, 0, 0], [0, 0, 1]], [[0, 0, 0], [0, 1, 0], [0, 0, -1]])
    return subalgebra(double, rows)


SUBALGEBRAS: dict[str, Callable[[QuadraticLieAlgebra], Subalgebra]] = {
    "diagonal": diagonal,
    "antidiagonal": antidiagonal,
    "borel_pair": borel_pair,
    "nilradical_pair": nilradical_pair,
    "standard_complement": standard_complement,
}


def get_subspace(name: str, double: QuadraticLieAlgebra) -> Subalgebra:
    builder = SUBALGEBRAS.get(name)
    if builder is None:
        raise AlgebraError(f"Unknown subalgebra '{name}'. Known: {', '.join(sorted(SUBALGEBRAS))}.")
    return builder(double)
