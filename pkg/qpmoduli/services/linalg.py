from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

Vector = list[Fraction]
Matrix = list[list[Fraction]]


class SingularMatrixError(ValueError):
    pass


class InconsistentSystemError(ValueError):
    pass


def frac(value: object) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"Not a rational value: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        raw = value.strip()
        if not raw:
            raise ValueError("Empty rational string.")
        return Fraction(raw)
    raise ValueError(f"Not a rational value: {value!r}")


def fmt(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def zeros(rows: int, cols: int) -> Matrix:
    return [[Fraction(0)] * cols for _ in range(rows)]


def identity(n: int) -> Matrix:
    out = zeros(n, n)
    for i in range(n):
        out[i][i] = Fraction(1)
    return out


def transpose(mat: Sequence[Sequence[Fraction]], ncols: int | None = None) -> Matrix:
    if not mat:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*mat)]


def matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> Matrix:
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    out = zeros(len(a), cols)
    for i, row in enumerate(a):
        target = out[i]
        for k in range(inner):
            aik = row[k]
            if not aik:
                continue
            bk = b[k]
            for j in range(cols):
                if bk[j]:
                    target[j] += aik * bk[j]
    return out


def mat_vec(a: Sequence[Sequence[Fraction]], v: Sequence[Fraction]) -> Vector:
    return [sum((x * y for x, y in zip(row, v) if x and y), Fraction(0)) for row in a]


def vec_mat(v: Sequence[Fraction], a: Sequence[Sequence[Fraction]]) -> Vector:
    if not a:
        return []
    out = [Fraction(0)] * len(a[0])
    for x, row in zip(v, a):
        if not x:
            continue
        for j, y in enumerate(row):
            if y:
                out[j] += x * y
    return out


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b) if x and y), Fraction(0))


def bilinear(u: Sequence[Fraction], mat: Sequence[Sequence[Fraction]], v: Sequence[Fraction]) -> Fraction:
    return dot(u, mat_vec(mat, v))


def is_zero_matrix(mat: Iterable[Iterable[Fraction]]) -> bool:
    return all(not x for row in mat for x in row)


def _to_domain(rows: Sequence[Sequence[Fraction]], ncols: int) -> DomainMatrix:
    data = [[QQ(int(x.numerator), int(x.denominator)) for x in row] for row in rows]
    return DomainMatrix(data, (len(data), ncols), QQ)


def _from_domain(values: Iterable[Iterable[object]]) -> Matrix:
    return [[Fraction(int(x.numerator), int(x.denominator)) for x in row] for row in values]


def rref(rows: Sequence[Sequence[Fraction]], ncols: int) -> tuple[Matrix, tuple[int, ...]]:
    """Reduced row echelon form over QQ; zero rows are dropped."""
    if not rows or ncols == 0:
        return [], ()
    reduced, pivots = _to_domain(rows, ncols).rref()
    matrix = _from_domain(reduced.to_list())
    return matrix[: len(pivots)], tuple(int(p) for p in pivots)


def rank(rows: Sequence[Sequence[Fraction]], ncols: int) -> int:
    return len(rref(rows, ncols)[1])


def span_basis(rows: Sequence[Sequence[Fraction]], ncols: int) -> Matrix:
    return rref(rows, ncols)[0]


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> Matrix:
    """Basis of {x : A x = 0}, one vector per free column of the echelon form."""
    reduced, pivots = rref(rows, ncols)
    pivot_set = set(pivots)
    basis: Matrix = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for row, pivot in zip(reduced, pivots):
            vec[pivot] = -row[free]
        basis.append(vec)
    return basis


def left_nullspace(rows: Sequence[Sequence[Fraction]], nrows: int, ncols: int) -> Matrix:
    """Basis of {y : y^T A = 0}."""
    if nrows == 0:
        return []
    return nullspace(transpose(rows, ncols) if rows else zeros(ncols, nrows), nrows)


def column_space(mat: Sequence[Sequence[Fraction]], nrows: int, ncols: int) -> Matrix:
    if not mat or ncols == 0:
        return []
    return span_basis(transpose(mat), nrows)


def same_span(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]], ncols: int) -> bool:
    return span_basis(a, ncols) == span_basis(b, ncols)


def span_contains(space: Sequence[Sequence[Fraction]], vectors: Sequence[Sequence[Fraction]], ncols: int) -> bool:
    base = rank(space, ncols)
    return rank([*space, *vectors], ncols) == base


def intersect(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]], ncols: int) -> Matrix:
    """Basis of span(a) ∩ span(b)."""
    ba = span_basis(a, ncols)
    bb = span_basis(b, ncols)
    if not ba or not bb:
        return []
    # coefficients (x, y) with x·A = y·B
    stacked = transpose([*ba, *[[-v for v in row] for row in bb]])
    coeffs = nullspace(stacked, len(ba) + len(bb))
    return span_basis([vec_mat(c[: len(ba)], ba) for c in coeffs], ncols)


def sum_spaces(*spaces: Sequence[Sequence[Fraction]], ncols: int) -> Matrix:
    rows: list[Sequence[Fraction]] = []
    for space in spaces:
        rows.extend(space)
    return span_basis(rows, ncols)


def complement_basis(sub: Sequence[Sequence[Fraction]], whole: Sequence[Sequence[Fraction]], ncols: int) -> Matrix:
    """Vectors of `whole` extending a basis of `sub` to a basis of span(sub + whole)."""
    chosen = span_basis(sub, ncols)
    extra: Matrix = []
    current = len(chosen)
    for vec in whole:
        trial = [*chosen, *extra, list(vec)]
        if rank(trial, ncols) > current:
            extra.append(list(vec))
            current += 1
    return extra


def inverse(mat: Sequence[Sequence[Fraction]]) -> Matrix:
    n = len(mat)
    if n == 0:
        return []
    augmented = [list(row) + ident for row, ident in zip(mat, identity(n))]
    reduced, pivots = rref(augmented, 2 * n)
    if tuple(pivots[:n]) != tuple(range(n)):
        raise SingularMatrixError("Matrix is singular over QQ.")
    return [row[n:] for row in reduced[:n]]


def determinant(mat: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(mat)
    if n == 0:
        return Fraction(1)
    value = _to_domain(mat, n).det()
    return Fraction(int(value.numerator), int(value.denominator))


def solve(mat: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction], ncols: int) -> Vector:
    """One solution of A x = b (free variables set to zero)."""
    augmented = [list(row) + [b] for row, b in zip(mat, rhs)]
    reduced, pivots = rref(augmented, ncols + 1)
    if ncols in pivots:
        raise InconsistentSystemError("Linear system has no solution.")
    solution = [Fraction(0)] * ncols
    for row, pivot in zip(reduced, pivots):
        solution[pivot] = row[ncols]
    return solution


def restrict_form(form: Sequence[Sequence[Fraction]], left: Sequence[Sequence[Fraction]], right: Sequence[Sequence[Fraction]]) -> Matrix:
    """Matrix of the bilinear form on two lists of vectors: out[i][j] = left_i^T F right_j."""
    right_images = [mat_vec(form, r) for r in right]
    return [[dot(l, img) for img in right_images] for l in left]


def skew_part(mat: Sequence[Sequence[Fraction]]) -> Matrix:
    n = len(mat)
    return [[(mat[i][j] - mat[j][i]) / 2 for j in range(n)] for i in range(n)]


def sym_part(mat: Sequence[Sequence[Fraction]]) -> Matrix:
    n = len(mat)
    return [[(mat[i][j] + mat[j][i]) / 2 for j in range(n)] for i in range(n)]


def serialize_matrix(mat: Sequence[Sequence[Fraction]]) -> list[list[str]]:
    return [[fmt(x) for x in row] for row in mat]
