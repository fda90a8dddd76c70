from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import permutations, product
from typing import Any, Literal, Sequence

from qpmoduli.services import linalg
from qpmoduli.services.linalg import Matrix, Vector, fmt, frac

logger = logging.getLogger(__name__)

Symmetry = Literal["alternating", "symmetric", "none"]
ComposeMode = Literal["direct_sum", "bar"]


class AlgebraError(ValueError):
    pass


class HypothesisError(ValueError):
    """A named precondition of a construction does not hold."""

    def __init__(self, hypothesis: str, detail: str = "") -> None:
        self.hypothesis = hypothesis
        message = hypothesis if not detail else f"{hypothesis}: {detail}"
        super().__init__(message)


@dataclass(frozen=True)
class QuadraticLieAlgebra:
    name: str
    labels: tuple[str, ...]
    c: tuple[tuple[tuple[Fraction, ...], ...], ...]
    t: tuple[tuple[Fraction, ...], ...]
    matrix_model: tuple[tuple[tuple[Fraction, ...], ...], ...] | None = None

    @property
    def dim(self) -> int:
        return len(self.labels)

    @cached_property
    def nondegenerate(self) -> bool:
        return linalg.rank(self.t_matrix, self.dim) == self.dim

    @cached_property
    def t_matrix(self) -> Matrix:
        return [list(row) for row in self.t]

    @cached_property
    def metric(self) -> Matrix:
        if not self.nondegenerate:
            raise AlgebraError(f"t degenerate on {self.name}; no metric.")
        return linalg.inverse(self.t_matrix)

    def bracket(self, u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
        out = [Fraction(0)] * self.dim
        for i, ui in enumerate(u):
            if not ui:
                continue
            for j, vj in enumerate(v):
                if not vj:
                    continue
                coeff = ui * vj
                for k, ck in enumerate(self.c[i][j]):
                    if ck:
                        out[k] += coeff * ck
        return out

    def basis_vector(self, index: int) -> Vector:
        vec = [Fraction(0)] * self.dim
        vec[index] = Fraction(1)
        return vec

    def t_sharp(self, alpha: Sequence[Fraction]) -> Vector:
        return linalg.mat_vec(self.t_matrix, alpha)

    def t_pair(self, alpha: Sequence[Fraction], beta: Sequence[Fraction]) -> Fraction:
        return linalg.bilinear(alpha, self.t_matrix, beta)

    def ad_matrix(self, u: Sequence[Fraction]) -> Matrix:
        """Matrix of ad_u acting on column coordinates."""
        columns = [self.bracket(u, self.basis_vector(j)) for j in range(self.dim)]
        return linalg.transpose(columns)

    @cached_property
    def _coordinate_solver(self) -> tuple[tuple[int, ...], Matrix]:
        if self.matrix_model is None:
            raise AlgebraError(f"{self.name} has no matrix model.")
        flat = [[entry for row in mat for entry in row] for mat in self.matrix_model]
        columns = linalg.transpose(flat)
        _, pivots = linalg.rref(flat, len(columns))
        if len(pivots) != self.dim:
            raise AlgebraError(f"Matrix model of {self.name} is not injective.")
        square = [[columns[p][j] for j in range(self.dim)] for p in pivots]
        return pivots, linalg.inverse(square)

    def coordinates(self, matrix: Sequence[Sequence[Fraction]]) -> Vector:
        """Basis coordinates of a matrix lying in the span of the matrix model."""
        pivots, inv = self._coordinate_solver
        flat = [entry for row in matrix for entry in row]
        coords = linalg.mat_vec(inv, [flat[p] for p in pivots])
        if self.from_coordinates(coords) != [list(row) for row in matrix]:
            raise AlgebraError(f"Matrix is outside the span of the {self.name} model.")
        return coords

    def from_coordinates(self, coords: Sequence[Fraction]) -> Matrix:
        if self.matrix_model is None:
            raise AlgebraError(f"{self.name} has no matrix model.")
        size = len(self.matrix_model[0])
        out = linalg.zeros(size, size)
        for x, mat in zip(coords, self.matrix_model):
            if not x:
                continue
            for i in range(size):
                for j in range(size):
                    if mat[i][j]:
                        out[i][j] += x * mat[i][j]
        return out


@dataclass(frozen=True)
class AlgTensor:
    degree: int
    symmetry: Symmetry
    dim: int
    components: dict[tuple[int, ...], Fraction] = field(default_factory=dict)

    def is_zero(self) -> bool:
        return not any(self.components.values())

    def get(self, *index: int) -> Fraction:
        return self.components.get(tuple(index), Fraction(0))

    def respects_symmetry(self) -> bool:
        if self.symmetry == "none":
            return True
        for index, value in self.components.items():
            for perm in permutations(range(self.degree)):
                permuted = tuple(index[p] for p in perm)
                sign = _perm_sign(perm) if self.symmetry == "alternating" else 1
                if self.get(*permuted) != sign * value:
                    return False
        return True

    def as_dict(self) -> dict[str, Any]:
        return {
            "degree": self.degree,
            "symmetry": self.symmetry,
            "components": {",".join(map(str, k)): fmt(v) for k, v in sorted(self.components.items()) if v},
        }


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        for j in range(i + 1, len(seen)):
            if seen[i] > seen[j]:
                sign = -sign
    return sign


def make_tensor(degree: int, symmetry: Symmetry, dim: int, components: dict[tuple[int, ...], Fraction]) -> AlgTensor:
    return AlgTensor(degree=degree, symmetry=symmetry, dim=dim, components={k: v for k, v in components.items() if v})


@dataclass
class InvariantCheck:
    name: str
    ok: bool
    witness: tuple[int, ...] | None = None

    def as_dict(self) -> dict[str, Any]:
        return {"name": self.name, "ok": self.ok, "witness": list(self.witness) if self.witness else None}


@dataclass
class ValidationReport:
    algebra: str
    checks: list[InvariantCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(item.ok for item in self.checks)

    def as_dict(self) -> dict[str, Any]:
        return {"algebra": self.algebra, "ok": self.ok, "checks": [item.as_dict() for item in self.checks]}


def validate_algebra(algebra: QuadraticLieAlgebra) -> ValidationReport:
    n = algebra.dim
    c = algebra.c
    t = algebra.t
    report = ValidationReport(algebra=algebra.name)

    report.checks.append(
        _first_violation(
            "antisymmetry",
            ((i, j, k) for i, j, k in product(range(n), repeat=3) if c[i][j][k] != -c[j][i][k]),
        )
    )

    def jacobi_fails(i: int, j: int, k: int, l: int) -> bool:
        total = sum(
            (c[i][j][m] * c[m][k][l] + c[j][k][m] * c[m][i][l] + c[k][i][m] * c[m][j][l] for m in range(n)),
            Fraction(0),
        )
        return total != 0

    report.checks.append(
        _first_violation("jacobi", (idx for idx in product(range(n), repeat=4) if jacobi_fails(*idx)))
    )
    report.checks.append(
        _first_violation("t_symmetric", ((i, j) for i, j in product(range(n), repeat=2) if t[i][j] != t[j][i]))
    )

    def invariance_fails(i: int, j: int, k: int) -> bool:
        total = sum((c[k][m][i] * t[m][j] + c[k][m][j] * t[i][m] for m in range(n)), Fraction(0))
        return total != 0

    report.checks.append(
        _first_violation("ad_invariance", (idx for idx in product(range(n), repeat=3) if invariance_fails(*idx)))
    )

    if algebra.matrix_model is not None:
        report.checks.append(
            _first_violation("matrix_model", ((i, j) for i, j in product(range(n), repeat=2) if _commutator_mismatch(algebra, i, j)))
        )

    if not report.ok:
        logger.warning("Algebra %s failed validation: %s", algebra.name, [item.name for item in report.checks if not item.ok])
    return report


def _first_violation(name: str, violations: Any) -> InvariantCheck:
    witness = next(iter(violations), None)
    return InvariantCheck(name=name, ok=witness is None, witness=witness)


def _commutator_mismatch(algebra: QuadraticLieAlgebra, i: int, j: int) -> bool:
    assert algebra.matrix_model is not None
    a = algebra.matrix_model[i]
    b = algebra.matrix_model[j]
    ab = linalg.matmul(a, b)
    ba = linalg.matmul(b, a)
    commutator = [[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(ab, ba)]
    expected = algebra.from_coordinates(algebra.c[i][j])
    return commutator != expected


def cartan_trivector(algebra: QuadraticLieAlgebra) -> AlgTensor:
    """phi^{abk} = 1/4 sum_{ij} t^{ai} t^{bj} c[i][j][k]."""
    n = algebra.dim
    t = algebra.t
    components: dict[tuple[int, ...], Fraction] = {}
    for a, b in product(range(n), repeat=2):
        for i in range(n):
            if not t[a][i]:
                continue
            for j in range(n):
                if not t[b][j]:
                    continue
                weight = t[a][i] * t[b][j] / 4
                for k, ck in enumerate(algebra.c[i][j]):
                    if ck:
                        components[(a, b, k)] = components.get((a, b, k), Fraction(0)) + weight * ck
    return make_tensor(3, "alternating", n, components)


def t_tensor(algebra: QuadraticLieAlgebra) -> AlgTensor:
    n = algebra.dim
    return make_tensor(2, "symmetric", n, {(i, j): algebra.t[i][j] for i in range(n) for j in range(n)})


def compose(first: QuadraticLieAlgebra, second: QuadraticLieAlgebra | None = None, mode: ComposeMode = "direct_sum") -> QuadraticLieAlgebra:
    if mode == "bar":
        return QuadraticLieAlgebra(
            name=_bar_name(first.name),
            labels=first.labels,
            c=first.c,
            t=tuple(tuple(-x for x in row) for row in first.t),
            matrix_model=first.matrix_model,
        )
    if second is None:
        raise AlgebraError("direct_sum needs two algebras.")
    return direct_sum([first, second])


def _bar_name(name: str) -> str:
    if name.startswith("bar(") and name.endswith(")"):
        return name[4:-1]
    return f"bar({name})"


def direct_sum(parts: Sequence[QuadraticLieAlgebra], name: str | None = None) -> QuadraticLieAlgebra:
    dims = [p.dim for p in parts]
    total = sum(dims)
    offsets = [sum(dims[:i]) for i in range(len(parts))]
    c = [[[Fraction(0)] * total for _ in range(total)] for _ in range(total)]
    t = linalg.zeros(total, total)
    labels: list[str] = []
    seen: set[str] = set()
    for pos, (part, off) in enumerate(zip(parts, offsets)):
        for label in part.labels:
            tagged = label if label not in seen else f"{label}{pos + 1}"
            while tagged in seen:
                tagged += "'"
            seen.add(tagged)
            labels.append(tagged)
        for i, j, k in product(range(part.dim), repeat=3):
            c[off + i][off + j][off + k] = part.c[i][j][k]
        for i, j in product(range(part.dim), repeat=2):
            t[off + i][off + j] = part.t[i][j]

    matrix_model = None
    if all(p.matrix_model is not None for p in parts):
        sizes = [len(p.matrix_model[0]) for p in parts]  # type: ignore[index]
        size = sum(sizes)
        blocks: list[tuple[tuple[Fraction, ...], ...]] = []
        corner = 0
        for part, sz in zip(parts, sizes):
            assert part.matrix_model is not None
            for mat in part.matrix_model:
                out = linalg.zeros(size, size)
                for i in range(sz):
                    for j in range(sz):
                        out[corner + i][corner + j] = mat[i][j]
                blocks.append(tuple(tuple(row) for row in out))
            corner += sz
        matrix_model = tuple(blocks)

    return QuadraticLieAlgebra(
        name=name or "+".join(p.name for p in parts),
        labels=tuple(labels),
        c=tuple(tuple(tuple(row) for row in plane) for plane in c),
        t=tuple(tuple(row) for row in t),
        matrix_model=matrix_model,
    )


def from_matrix_model(
    name: str,
    labels: Sequence[str],
    matrices: Sequence[Sequence[Sequence[Fraction]]],
    t: Sequence[Sequence[Fraction]],
) -> QuadraticLieAlgebra:
    """Derive structure constants from matrix commutators."""
    model = tuple(tuple(tuple(frac(x) for x in row) for row in mat) for mat in matrices)
    n = len(model)
    draft = QuadraticLieAlgebra(
        name=name,
        labels=tuple(labels),
        c=tuple(tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n)) for _ in range(n)),
        t=tuple(tuple(frac(x) for x in row) for row in t),
        matrix_model=model,
    )
    c = []
    for i in range(n):
        plane = []
        for j in range(n):
            ab = linalg.matmul(model[i], model[j])
            ba = linalg.matmul(model[j], model[i])
            plane.append(tuple(draft.coordinates([[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(ab, ba)])))
        c.append(tuple(plane))
    return QuadraticLieAlgebra(name=name, labels=draft.labels, c=tuple(c), t=draft.t, matrix_model=model)


@dataclass(frozen=True)
class Subalgebra:
    parent: QuadraticLieAlgebra
    basis: tuple[tuple[Fraction, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.basis)

    def rows(self) -> Matrix:
        return [list(row) for row in self.basis]

    def contains(self, vectors: Sequence[Sequence[Fraction]]) -> bool:
        return linalg.span_contains(self.rows(), vectors, self.parent.dim)

    def same_as(self, other: "Subalgebra | Sequence[Sequence[Fraction]]") -> bool:
        rows = other.rows() if isinstance(other, Subalgebra) else other
        return linalg.same_span(self.rows(), rows, self.parent.dim)

    def annihilator(self) -> Matrix:
        return linalg.nullspace(self.rows(), self.parent.dim) if self.basis else linalg.identity(self.parent.dim)


def subspace(parent: QuadraticLieAlgebra, rows: Sequence[Sequence[object]]) -> Subalgebra:
    vectors = [[frac(x) for x in row] for row in rows]
    return Subalgebra(parent=parent, basis=tuple(tuple(r) for r in linalg.span_basis(vectors, parent.dim)))


def subalgebra(parent: QuadraticLieAlgebra, rows: Sequence[Sequence[object]]) -> Subalgebra:
    sub = subspace(parent, rows)
    for u, v in product(sub.basis, repeat=2):
        if not sub.contains([parent.bracket(u, v)]):
            raise AlgebraError(f"Span is not closed under the bracket of {parent.name}.")
    return sub


def is_ideal(ideal: Subalgebra, ambient: Subalgebra) -> bool:
    parent = ambient.parent
    return all(ideal.contains([parent.bracket(u, v)]) for u in ambient.basis for v in ideal.basis)


@dataclass
class CoisotropyReport:
    is_coisotropic: bool
    perp: Subalgebra
    is_lagrangian: bool | None
    t_status: Literal["nondegenerate", "degenerate"]

    def as_dict(self) -> dict[str, Any]:
        return {
            "is_coisotropic": self.is_coisotropic,
            "is_lagrangian": self.is_lagrangian,
            "t_status": self.t_status,
            "perp": linalg.serialize_matrix(self.perp.rows()),
        }


def perp(sub: Subalgebra) -> Subalgebra:
    """c^perp = t(Ann c, .)."""
    parent = sub.parent
    return subspace(parent, [parent.t_sharp(alpha) for alpha in sub.annihilator()])


def coisotropy_report(sub: Subalgebra) -> CoisotropyReport:
    parent = sub.parent
    ortho = perp(sub)
    coisotropic = sub.contains(ortho.rows())
    if parent.nondegenerate:
        return CoisotropyReport(coisotropic, ortho, coisotropic and ortho.same_as(sub), "nondegenerate")
    return CoisotropyReport(coisotropic, ortho, None, "degenerate")


@dataclass
class DescentData:
    quotient: QuadraticLieAlgebra
    quotient_basis: Matrix
    dual_functionals: Matrix
    t_prime: AlgTensor
    phi_prime: AlgTensor
    phi_mod_vanishes: bool

    def as_dict(self) -> dict[str, Any]:
        return {
            "quotient_dim": self.quotient.dim,
            "quotient_abelian": all(not x for plane in self.quotient.c for row in plane for x in row),
            "t_prime": self.t_prime.as_dict(),
            "phi_prime": self.phi_prime.as_dict(),
            "phi_mod_vanishes": self.phi_mod_vanishes,
        }


def descend_data(c: Subalgebra, h: Subalgebra) -> DescentData:
    parent = c.parent
    n = parent.dim
    if not coisotropy_report(c).is_coisotropic:
        raise HypothesisError("not coisotropic", f"c of rank {c.rank} in {parent.name}")
    if not c.contains(h.rows()):
        raise HypothesisError("not contained", "h is not a subspace of c")
    if not is_ideal(h, c):
        raise HypothesisError("not an ideal", "[c, h] is not contained in h")
    if not h.contains(perp(c).rows()):
        raise HypothesisError("perp not contained", "c^perp is not contained in h")

    quotient_basis = linalg.complement_basis(h.rows(), c.rows(), n)
    rest = linalg.complement_basis([*h.rows(), *quotient_basis], linalg.identity(n), n)
    frame = [*h.rows(), *quotient_basis, *rest]
    # columns of frame^{-1} are the dual functionals
    inverse = linalg.inverse(linalg.transpose(frame))
    offset = h.rank
    duals = [inverse[offset + i] for i in range(len(quotient_basis))]

    m = len(quotient_basis)
    c_quot = []
    for i in range(m):
        plane = []
        for j in range(m):
            br = parent.bracket(quotient_basis[i], quotient_basis[j])
            plane.append(tuple(linalg.dot(duals[k], br) for k in range(m)))
        c_quot.append(tuple(plane))
    t_quot = tuple(tuple(parent.t_pair(duals[i], duals[j]) for j in range(m)) for i in range(m))
    quotient = QuadraticLieAlgebra(
        name=f"{parent.name}/quotient{m}",
        labels=tuple(f"q{i}" for i in range(m)),
        c=tuple(c_quot),
        t=t_quot,
    )

    phi = cartan_trivector(parent)
    phi_prime = make_tensor(3, "alternating", m, {
        (i, j, k): _phi_on(phi, duals[i], duals[j], duals[k]) for i, j, k in product(range(m), repeat=3)
    })
    ann = c.annihilator()
    vanishes = all(not _phi_on(phi, a, b, g) for a, b, g in product(ann, repeat=3))
    return DescentData(
        quotient=quotient,
        quotient_basis=quotient_basis,
        dual_functionals=duals,
        t_prime=t_tensor(quotient),
        phi_prime=phi_prime,
        phi_mod_vanishes=vanishes,
    )


def _phi_on(phi: AlgTensor, a: Sequence[Fraction], b: Sequence[Fraction], g: Sequence[Fraction]) -> Fraction:
    total = Fraction(0)
    for (i, j, k), value in phi.components.items():
        if a[i] and b[j] and g[k]:
            total += value * a[i] * b[j] * g[k]
    return total


def load_algebra(document: dict[str, Any]) -> QuadraticLieAlgebra:
    try:
        dim = int(document["dim"])
        labels = tuple(str(x) for x in document.get("labels") or [f"x{i}" for i in range(dim)])
        c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for i, j, k, value in document.get("brackets", []):
            c[int(i)][int(j)][int(k)] = frac(value)
        t = linalg.zeros(dim, dim)
        for i, j, value in document.get("t", []):
            t[int(i)][int(j)] = frac(value)
        model = document.get("matrix_model")
    except (KeyError, TypeError, ValueError) as exc:
        raise AlgebraError(f"Invalid algebra document: {exc}") from exc
    if len(labels) != dim:
        raise AlgebraError("labels length does not match dim")
    return QuadraticLieAlgebra(
        name=str(document.get("name", "inline")),
        labels=labels,
        c=tuple(tuple(tuple(row) for row in plane) for plane in c),
        t=tuple(tuple(row) for row in t),
        matrix_model=None if model is None else tuple(tuple(tuple(frac(x) for x in row) for row in mat) for mat in model),
    )


def dump_algebra(algebra: QuadraticLieAlgebra) -> dict[str, Any]:
    n = algebra.dim
    document: dict[str, Any] = {
        "name": algebra.name,
        "dim": n,
        "labels": list(algebra.labels),
        "brackets": [[i, j, k, fmt(algebra.c[i][j][k])] for i, j, k in product(range(n), repeat=3) if algebra.c[i][j][k]],
        "t": [[i, j, fmt(algebra.t[i][j])] for i, j in product(range(n), repeat=2) if algebra.t[i][j]],
    }
    if algebra.matrix_model is not None:
        document["matrix_model"] = [linalg.serialize_matrix(mat) for mat in algebra.matrix_model]
    return document
