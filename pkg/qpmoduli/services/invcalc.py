from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Any, Iterable, Literal, NamedTuple, Sequence

from qpmoduli.services import linalg
from qpmoduli.services.linalg import Matrix, Vector, fmt
from qpmoduli.services.qla import AlgTensor, QuadraticLieAlgebra, t_tensor

logger = logging.getLogger(__name__)

Chirality = Literal["L", "R"]
GroupModel = Literal["SL", "GL"]


class LayoutError(ValueError):
    pass


class Generator(NamedTuple):
    site: int
    chirality: str
    index: int

    def label(self, algebra: QuadraticLieAlgebra) -> str:
        return f"{algebra.labels[self.index]}^{self.chirality}{self.site}"


Key = tuple[Generator, ...]


def _canonical(key: Sequence[Generator]) -> tuple[int, Key]:
    """Sort generators, returning the permutation sign; sign 0 for repeated generators."""
    items = list(key)
    sign = 1
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] > items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(items, items[1:]):
        if a == b:
            return 0, tuple(items)
    return sign, tuple(items)


@dataclass(frozen=True)
class Multivector:
    """Alternating invariant multivector: coefficient c on sorted (X1..Xk) means c X1∧...∧Xk."""

    degree: int
    terms: dict[Key, Fraction] = field(default_factory=dict)

    @classmethod
    def from_items(cls, degree: int, items: Iterable[tuple[Sequence[Generator], Fraction]]) -> "Multivector":
        acc: dict[Key, Fraction] = {}
        for key, coeff in items:
            if not coeff:
                continue
            if len(key) != degree:
                raise LayoutError(f"Term of degree {len(key)} in a degree {degree} multivector.")
            sign, canon = _canonical(key)
            if sign:
                acc[canon] = acc.get(canon, Fraction(0)) + sign * coeff
        return cls(degree, {k: v for k, v in sorted(acc.items()) if v})

    @classmethod
    def zero(cls, degree: int) -> "Multivector":
        return cls(degree, {})

    @classmethod
    def generator(cls, site: int, chirality: str, index: int, coeff: Fraction = Fraction(1)) -> "Multivector":
        return cls.from_items(1, [((Generator(site, chirality, index),), coeff)])

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "Multivector") -> "Multivector":
        if self.degree != other.degree:
            raise LayoutError("Degree mismatch in addition.")
        return Multivector.from_items(self.degree, [*self.terms.items(), *other.terms.items()])

    def __neg__(self) -> "Multivector":
        return Multivector(self.degree, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "Multivector") -> "Multivector":
        return self + (-other)

    def scale(self, factor: Fraction) -> "Multivector":
        if not factor:
            return Multivector.zero(self.degree)
        return Multivector(self.degree, {k: factor * v for k, v in self.terms.items()})

    def wedge(self, other: "Multivector") -> "Multivector":
        return Multivector.from_items(
            self.degree + other.degree,
            ((ka + kb, va * vb) for ka, va in self.terms.items() for kb, vb in other.terms.items()),
        )

    def sites(self) -> set[int]:
        return {g.site for key in self.terms for g in key}

    def as_dict(self, algebra: QuadraticLieAlgebra | None = None) -> dict[str, str]:
        def name(g: Generator) -> str:
            return g.label(algebra) if algebra is not None else f"{g.index}^{g.chirality}{g.site}"

        return {"∧".join(name(g) for g in key): fmt(v) for key, v in self.terms.items()}


def wedge_all(factors: Sequence[Multivector]) -> Multivector:
    out = Multivector.from_items(0, [((), Fraction(1))])
    for factor in factors:
        out = out.wedge(factor)
    return out


@dataclass(frozen=True)
class Tensor2:
    """Degree-2 tensor in invariant generators, stored on ordered pairs (not alternating)."""

    terms: dict[tuple[Generator, Generator], Fraction] = field(default_factory=dict)

    @classmethod
    def from_items(cls, items: Iterable[tuple[tuple[Generator, Generator], Fraction]]) -> "Tensor2":
        acc: dict[tuple[Generator, Generator], Fraction] = {}
        for key, coeff in items:
            if coeff:
                acc[key] = acc.get(key, Fraction(0)) + coeff
        return cls({k: v for k, v in sorted(acc.items()) if v})

    @classmethod
    def from_bivector(cls, pi: Multivector) -> "Tensor2":
        if pi.degree != 2:
            raise LayoutError("Only bivectors embed as degree-2 tensors.")
        items = []
        for (a, b), v in pi.terms.items():
            items.append(((a, b), v))
            items.append(((b, a), -v))
        return cls.from_items(items)

    @classmethod
    def outer(cls, left: Multivector, right: Multivector, coeff: Fraction = Fraction(1)) -> "Tensor2":
        return cls.from_items(
            ((ka[0], kb[0]), coeff * va * vb) for ka, va in left.terms.items() for kb, vb in right.terms.items()
        )

    def __add__(self, other: "Tensor2") -> "Tensor2":
        return Tensor2.from_items([*self.terms.items(), *other.terms.items()])

    def __neg__(self) -> "Tensor2":
        return Tensor2({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "Tensor2") -> "Tensor2":
        return self + (-other)

    def scale(self, factor: Fraction) -> "Tensor2":
        return Tensor2.from_items((k, factor * v) for k, v in self.terms.items())

    def skew(self) -> Multivector:
        """Alternating part as a bivector: pairs (a,b) and (b,a) contribute (T_ab - T_ba)/2 on a∧b."""
        return Multivector.from_items(2, (((a, b), v / 2) for (a, b), v in self.terms.items()))

    def transpose(self) -> "Tensor2":
        return Tensor2.from_items(((b, a), v) for (a, b), v in self.terms.items())

    def is_zero(self) -> bool:
        return not self.terms


def generator_bracket(a: Generator, b: Generator, algebra: QuadraticLieAlgebra) -> Multivector:
    """[u^L,v^L]=[u,v]^L, [u^R,v^R]=-[u,v]^R, mixed chiralities and distinct sites commute."""
    if a.site != b.site or a.chirality != b.chirality:
        return Multivector.zero(1)
    sign = Fraction(1) if a.chirality == "L" else Fraction(-1)
    row = algebra.c[a.index][b.index]
    return Multivector.from_items(1, (((Generator(a.site, a.chirality, k),), sign * ck) for k, ck in enumerate(row)))


def schouten(first: Multivector, second: Multivector, algebra: QuadraticLieAlgebra) -> Multivector:
    """Schouten bracket of invariant multivectors with constant coefficients."""
    k, l = first.degree, second.degree
    if k == 0 or l == 0:
        return Multivector.zero(max(k + l - 1, 0))
    items: list[tuple[Key, Fraction]] = []
    for xkey, xv in first.terms.items():
        for ykey, yv in second.terms.items():
            coeff = xv * yv
            for i, xi in enumerate(xkey):
                for j, yj in enumerate(ykey):
                    br = generator_bracket(xi, yj, algebra)
                    if br.is_zero():
                        continue
                    sign = 1 if (i + j) % 2 == 0 else -1
                    rest = xkey[:i] + xkey[i + 1 :] + ykey[:j] + ykey[j + 1 :]
                    for (z,), zv in br.terms.items():
                        items.append(((z, *rest), sign * coeff * zv))
    return Multivector.from_items(k + l - 1, items)


def action_extend(rho: Sequence[Multivector], tensor: AlgTensor) -> Multivector:
    """Push an alternating algebra tensor through the action: sum over sorted indices of T^I rho(e_I)."""
    if tensor.symmetry != "alternating":
        raise LayoutError("action_extend needs an alternating tensor; use action_extend_tensor2.")
    if len(rho) != tensor.dim:
        raise LayoutError(f"Action defined on {len(rho)} basis elements, tensor has dim {tensor.dim}.")
    out = Multivector.zero(tensor.degree)
    for index, value in tensor.components.items():
        if list(index) != sorted(set(index)):
            continue
        out = out + wedge_all([rho[i] for i in index]).scale(value)
    return out


def action_extend_tensor2(rho: Sequence[Multivector], tensor: AlgTensor) -> Tensor2:
    if tensor.degree != 2:
        raise LayoutError("Degree-2 tensor expected.")
    out = Tensor2()
    for (a, b), value in tensor.components.items():
        out = out + Tensor2.outer(rho[a], rho[b], value)
    return out


def pair_extend(left: Sequence[Multivector], right: Sequence[Multivector], matrix: Sequence[Sequence[Fraction]]) -> Tensor2:
    """(rho1 ⊗ rho2)(T) for T = sum T^{ab} e_a ⊗ e_b."""
    out = Tensor2()
    for a, row in enumerate(matrix):
        for b, value in enumerate(row):
            if value:
                out = out + Tensor2.outer(left[a], right[b], value)
    return out


def pair_wedge(left: Sequence[Multivector], right: Sequence[Multivector], matrix: Sequence[Sequence[Fraction]]) -> Multivector:
    """(rho1 ∧ rho2)(T) = sum T^{ab} rho1(e_a) ∧ rho2(e_b)."""
    out = Multivector.zero(2)
    for a, row in enumerate(matrix):
        for b, value in enumerate(row):
            if value:
                out = out + left[a].wedge(right[b]).scale(value)
    return out


def sigma_of(pi: Multivector, rho: Sequence[Multivector], t: AlgTensor) -> Tensor2:
    """sigma = pi + 1/2 rho⊗rho(t)."""
    if pi.degree != 2:
        raise LayoutError("pi must be a bivector.")
    return Tensor2.from_bivector(pi) + action_extend_tensor2(rho, t).scale(Fraction(1, 2))


@dataclass(frozen=True)
class GroupPoint:
    sites: tuple[tuple[tuple[Fraction, ...], ...], ...]
    group: GroupModel = "SL"

    def matrix(self, site: int) -> Matrix:
        return [list(row) for row in self.sites[site]]

    def as_dict(self) -> dict[str, Any]:
        return {"group": self.group, "sites": [linalg.serialize_matrix(m) for m in self.sites]}


def group_point(matrices: Sequence[Sequence[Sequence[Fraction]]], group: GroupModel = "SL") -> GroupPoint:
    sites = []
    for pos, mat in enumerate(matrices):
        det = linalg.determinant(mat)
        if not det:
            raise LayoutError(f"Singular matrix at site {pos}.")
        if group == "SL" and det != 1:
            raise LayoutError(f"Site {pos} has determinant {fmt(det)}, expected 1 for SL.")
        sites.append(tuple(tuple(row) for row in mat))
    return GroupPoint(sites=tuple(sites), group=group)


def identity_point(n_sites: int, size: int = 2, group: GroupModel = "SL") -> GroupPoint:
    ident = tuple(tuple(row) for row in linalg.identity(size))
    return GroupPoint(sites=tuple(ident for _ in range(n_sites)), group=group)


class PointFrame:
    """Left-trivialized frame at a point: u^L -> u, u^R -> Ad_{g^-1} u."""

    def __init__(self, algebra: QuadraticLieAlgebra, point: GroupPoint) -> None:
        self.algebra = algebra
        self.point = point
        self.dim = algebra.dim
        self.n_sites = len(point.sites)

    @property
    def size(self) -> int:
        return self.n_sites * self.dim

    @cached_property
    def _ad_inverse(self) -> list[list[Vector]]:
        out = []
        for site in range(self.n_sites):
            g = self.point.matrix(site)
            ginv = linalg.inverse(g)
            columns = []
            assert self.algebra.matrix_model is not None
            for mat in self.algebra.matrix_model:
                columns.append(self.algebra.coordinates(linalg.matmul(linalg.matmul(ginv, [list(r) for r in mat]), g)))
            out.append(columns)
        return out

    def ad_inverse(self, site: int) -> Matrix:
        """Matrix of Ad_{g^-1} in basis coordinates (columns are images of basis vectors)."""
        return linalg.transpose(self._ad_inverse[site])

    def vector(self, gen: Generator) -> dict[int, Fraction]:
        if not 0 <= gen.site < self.n_sites or not 0 <= gen.index < self.dim:
            raise LayoutError(f"Generator {gen} out of range for {self.n_sites} sites.")
        base = gen.site * self.dim
        if gen.chirality == "L":
            return {base + gen.index: Fraction(1)}
        coords = self._ad_inverse[gen.site][gen.index]
        return {base + k: v for k, v in enumerate(coords) if v}

    def dense(self, vec: Multivector) -> Vector:
        if vec.degree != 1:
            raise LayoutError("Only vectors have a dense frame image.")
        out = [Fraction(0)] * self.size
        for (g,), coeff in vec.terms.items():
            for k, v in self.vector(g).items():
                out[k] += coeff * v
        return out


@dataclass(frozen=True)
class PointTensor:
    degree: int
    size: int
    symmetry: Literal["alternating", "none"]
    components: dict[tuple[int, ...], Fraction] = field(default_factory=dict)

    def is_zero(self) -> bool:
        return not any(self.components.values())

    def __sub__(self, other: "PointTensor") -> "PointTensor":
        acc = dict(self.components)
        for k, v in other.components.items():
            acc[k] = acc.get(k, Fraction(0)) - v
        return PointTensor(self.degree, self.size, self.symmetry, {k: v for k, v in acc.items() if v})

    def matrix(self) -> Matrix:
        if self.degree != 2:
            raise LayoutError("Only degree-2 point tensors have a matrix.")
        out = linalg.zeros(self.size, self.size)
        for (i, j), v in self.components.items():
            out[i][j] += v
            if self.symmetry == "alternating":
                out[j][i] -= v
        return out

    def as_dict(self) -> dict[str, Any]:
        return {
            "degree": self.degree,
            "symmetry": self.symmetry,
            "components": {",".join(map(str, k)): fmt(v) for k, v in sorted(self.components.items()) if v},
        }


def evaluate_at(tensor: Multivector | Tensor2, frame: PointFrame) -> PointTensor:
    if isinstance(tensor, Tensor2):
        acc: dict[tuple[int, ...], Fraction] = {}
        for (a, b), coeff in tensor.terms.items():
            for i, vi in frame.vector(a).items():
                for j, vj in frame.vector(b).items():
                    acc[(i, j)] = acc.get((i, j), Fraction(0)) + coeff * vi * vj
        return PointTensor(2, frame.size, "none", {k: v for k, v in sorted(acc.items()) if v})

    acc = {}
    for key, coeff in tensor.terms.items():
        images = [list(frame.vector(g).items()) for g in key]
        for combo in product(*images):
            sign, canon_idx = _canonical_indices([i for i, _ in combo])
            if not sign:
                continue
            value = coeff * sign
            for _, v in combo:
                value *= v
            acc[canon_idx] = acc.get(canon_idx, Fraction(0)) + value
    return PointTensor(tensor.degree, frame.size, "alternating", {k: v for k, v in sorted(acc.items()) if v})


def _canonical_indices(indices: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    items = list(indices)
    sign = 1
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] > items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    if len(set(items)) != len(items):
        return 0, tuple(items)
    return sign, tuple(items)


def pairing_matrix(
    tensor: Multivector | Tensor2,
    frame: PointFrame,
    covectors_a: Sequence[Sequence[Fraction]],
    covectors_b: Sequence[Sequence[Fraction]],
) -> Matrix:
    """out[i][j] = S(alpha_i, beta_j) with covectors in the dual left-trivialized frame."""
    for cov in [*covectors_a, *covectors_b]:
        if len(cov) != frame.size:
            raise LayoutError(f"Covector of length {len(cov)} does not match frame size {frame.size}.")
    full = evaluate_at(tensor, frame).matrix()
    return linalg.restrict_form(full, covectors_a, covectors_b)


def full_pairing(tensor: Multivector | Tensor2, frame: PointFrame) -> Matrix:
    """S[i][j] = S(eps_i, eps_j) on the dual frame."""
    return evaluate_at(tensor, frame).matrix()


@dataclass
class QuasiPoissonData:
    """A product of group sites with an action of `acting` and a bivector pi."""

    algebra: QuadraticLieAlgebra
    n_sites: int
    acting: QuadraticLieAlgebra
    rho: list[Multivector]
    pi: Multivector
    group: GroupModel = "SL"

    def __post_init__(self) -> None:
        if len(self.rho) != self.acting.dim:
            raise LayoutError(f"rho has {len(self.rho)} entries for an acting algebra of dim {self.acting.dim}.")
        for item in [*self.rho, self.pi]:
            bad = [s for s in item.sites() if not 0 <= s < self.n_sites]
            if bad:
                raise LayoutError(f"Site {bad[0]} outside layout of {self.n_sites} sites.")

    @property
    def dim(self) -> int:
        return self.n_sites * self.algebra.dim

    @cached_property
    def sigma(self) -> Tensor2:
        return sigma_of(self.pi, self.rho, t_tensor(self.acting))

    def frame(self, point: GroupPoint) -> PointFrame:
        if len(point.sites) != self.n_sites:
            raise LayoutError(f"Point has {len(point.sites)} sites, layout has {self.n_sites}.")
        return PointFrame(self.algebra, point)

    def rho_matrix(self, frame: PointFrame) -> Matrix:
        """Columns are rho(e_a) in the frame (rows indexed by frame coordinates)."""
        return linalg.transpose([frame.dense(r) for r in self.rho]) if self.rho else linalg.zeros(frame.size, 0)

    def rho_vectors(self, frame: PointFrame) -> Matrix:
        return [frame.dense(r) for r in self.rho]


@dataclass
class IdentityDefect:
    name: str
    ok: bool
    witness: dict[str, Any] | None = None

    def as_dict(self) -> dict[str, Any]:
        return {"name": self.name, "ok": self.ok, "witness": self.witness}


def jacobiator_defect(data: QuasiPoissonData, phi: AlgTensor, frame: PointFrame, rho: Sequence[Multivector] | None = None) -> PointTensor:
    """evaluate([pi,pi] - 2 rho⊗3(phi)) at the frame point."""
    bracket = schouten(data.pi, data.pi, data.algebra)
    target = action_extend(rho if rho is not None else data.rho, phi).scale(Fraction(2))
    return evaluate_at(bracket, frame) - evaluate_at(target, frame)


def invariance_defects(data: QuasiPoissonData, frame: PointFrame) -> list[tuple[int, PointTensor]]:
    """Nonzero evaluations of [rho(u), pi] for basis u."""
    out = []
    for index, vec in enumerate(data.rho):
        value = evaluate_at(schouten(vec, data.pi, data.algebra), frame)
        if not value.is_zero():
            out.append((index, value))
    return out
