"""Intersection-pairing model of sigma on graph-supported relative chains with coadjoint coefficients."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Mapping, Sequence

from qpmoduli.services import linalg
from qpmoduli.services.invcalc import GroupPoint, full_pairing
from qpmoduli.services.linalg import Matrix, Vector
from qpmoduli.services.moduli import (
    HolonomyWord,
    ModuliSpace,
    adjoint_matrix,
    central_maps,
    class_function_differentials,
    evaluate_word,
    invariant_covectors,
)
from qpmoduli.services.points import group_inverse
from qpmoduli.services.qla import AlgebraError, QuadraticLieAlgebra

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocalSystem:
    """Coadjoint flat bundle determined by edge holonomies at a point."""

    algebra: QuadraticLieAlgebra
    point: GroupPoint

    def holonomy(self, word: HolonomyWord) -> Matrix:
        return evaluate_word(word, self.point)

    def coadjoint(self, word: HolonomyWord) -> Matrix:
        """Matrix acting on row covectors: xi -> xi ∘ Ad_W."""
        return adjoint_matrix(self.algebra, self.holonomy(word))

    def transport(self, word: HolonomyWord, covector: Sequence[Fraction]) -> Vector:
        return linalg.vec_mat(covector, self.coadjoint(word))


def inverse_word(word: HolonomyWord) -> HolonomyWord:
    return tuple((site, -exp) for site, exp in reversed(word))


def _end_maps(space: ModuliSpace, system: LocalSystem) -> dict[tuple[int, str], Matrix]:
    """C for each edge end: A = alpha C in g*, identity block at a head, -Ad_{h^-1} block at a tail."""
    dim = space.algebra.dim
    n = space.dim
    out: dict[tuple[int, str], Matrix] = {}
    for edge in space.edges:
        site = space.site(edge)
        head = linalg.zeros(n, dim)
        tail = linalg.zeros(n, dim)
        ad = adjoint_matrix(space.algebra, group_inverse(system.point.matrix(site)))
        for k in range(dim):
            head[site * dim + k][k] = Fraction(1)
            for x in range(dim):
                tail[site * dim + k][x] = -ad[k][x]
        out[(edge, "h")] = head
        out[(edge, "t")] = tail
    return out


def intersection_sigma(
    space: ModuliSpace,
    system: LocalSystem,
    signs: Mapping[str, str] | None = None,
) -> Matrix:
    """Shifted intersection pairing; `signs` overrides the split of marked points."""
    t = space.algebra.t_matrix
    n = space.dim
    ends = _end_maps(space, system)
    total = linalg.zeros(n, n)
    for vertex in space.surface.vertices:
        sign = signs.get(vertex.name, vertex.sign) if signs else vertex.sign
        maps = [ends[(e.edge, e.side)] for e in vertex.ends]
        for i, j in product(range(len(maps)), repeat=2):
            if sign == "+":
                weight = Fraction(1) if i < j else Fraction(1, 2) if i == j else Fraction(0)
            else:
                weight = Fraction(-1) if i > j else Fraction(-1, 2) if i == j else Fraction(0)
            if not weight:
                continue
            block = linalg.matmul(linalg.matmul(maps[i], t), linalg.transpose(maps[j], n))
            for r in range(n):
                row = block[r]
                for c in range(n):
                    if row[c]:
                        total[r][c] += weight * row[c]
    return total


def skew_pi(space: ModuliSpace, system: LocalSystem, signs: Mapping[str, str] | None = None) -> Matrix:
    return linalg.skew_part(intersection_sigma(space, system, signs))


@dataclass
class SplitReport:
    splits_checked: int
    invariant: bool
    witness: dict[str, str] | None = None

    def as_dict(self) -> dict[str, Any]:
        return {"splits_checked": self.splits_checked, "invariant": self.invariant, "witness": self.witness}


def resplit_invariance(space: ModuliSpace, system: LocalSystem) -> SplitReport:
    names = [v.name for v in space.surface.vertices]
    reference = skew_pi(space, system)
    count = 0
    for choice in product("+-", repeat=len(names)):
        signs = dict(zip(names, choice))
        count += 1
        if skew_pi(space, system, signs) != reference:
            return SplitReport(count, False, signs)
    return SplitReport(count, True)


def arc_chain(system: LocalSystem, word: HolonomyWord, covector: Sequence[Fraction], n_sites: int) -> Vector:
    """Relative cycle along a word with coefficient based at its endpoint, in (g*)^E coordinates."""
    dim = system.algebra.dim
    out = [Fraction(0)] * (n_sites * dim)
    for k, (site, exp) in enumerate(word):
        suffix = word[k if exp < 0 else k + 1 :]
        coefficient = system.transport(inverse_word(suffix), covector)
        for i, value in enumerate(coefficient):
            out[site * dim + i] += exp * value
    return out


def annihilator_image(space: ModuliSpace, system: LocalSystem) -> Matrix:
    if not space.algebra.nondegenerate:
        raise AlgebraError("annihilator image needs nondegenerate t")
    dim = space.algebra.dim
    maps = central_maps(space)
    rows: Matrix = []
    for arc in maps.mu_l:
        for i in range(dim):
            rows.append(arc_chain(system, arc.word, space.algebra.basis_vector(i), space.n_sites))
    for circle in maps.uncut:
        for gamma in invariant_covectors(space.algebra, system.holonomy(circle.word)):
            rows.append(arc_chain(system, circle.word, gamma, space.n_sites))
    return linalg.span_basis(rows, space.dim) if rows else []


@dataclass
class CrossCheck:
    sigma_matches: bool
    kernel_matches: bool
    generic: bool
    annihilator_dim: int
    witness: dict[str, Any] | None = None

    @property
    def ok(self) -> bool:
        return self.sigma_matches and (self.kernel_matches or not self.generic)

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "sigma_matches": self.sigma_matches,
            "kernel_matches": self.kernel_matches,
            "generic": self.generic,
            "annihilator_dim": self.annihilator_dim,
            "witness": self.witness,
        }


def cross_check(space: ModuliSpace, point: GroupPoint) -> CrossCheck:
    system = LocalSystem(space.algebra, point)
    local = intersection_sigma(space, system)
    formal = full_pairing(space.sigma, space.frame(point))
    witness = None
    if local != formal:
        r, c = next((r, c) for r in range(space.dim) for c in range(space.dim) if local[r][c] != formal[r][c])
        witness = {"entry": [r, c], "intersection": linalg.fmt(local[r][c]), "invariant": linalg.fmt(formal[r][c])}
    n = space.dim
    generic = True
    for circle in central_maps(space).uncut:
        holonomy = system.holonomy(circle.word)
        rank = linalg.rank(class_function_differentials(space.algebra, holonomy), space.algebra.dim)
        generic = generic and rank == len(invariant_covectors(space.algebra, holonomy))
    kernel_matches = True
    ann: Matrix = []
    if space.algebra.nondegenerate:
        ann = annihilator_image(space, system)
        kernel = linalg.left_nullspace(local, n, n)
        kernel_matches = linalg.same_span(kernel, ann, n) if (kernel or ann) else True
    if witness is not None:
        logger.warning("Intersection pairing differs from invariant sigma at %s", witness["entry"])
    return CrossCheck(local == formal, kernel_matches, generic, len(ann), witness)
