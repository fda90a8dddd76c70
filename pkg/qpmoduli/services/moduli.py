from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from itertools import permutations
from typing import Any, Iterable, Sequence

from qpmoduli.services import linalg
from qpmoduli.services.invcalc import (
    Generator,
    GroupModel,
    GroupPoint,
    LayoutError,
    Multivector,
    PointFrame,
    QuasiPoissonData,
    Tensor2,
    full_pairing,
    pair_wedge,
)
from qpmoduli.services.linalg import Matrix, Vector
from qpmoduli.services.points import gen_points, group_inverse, matrix_power, product_of
from qpmoduli.services.qla import QuadraticLieAlgebra, Subalgebra, compose, coisotropy_report, direct_sum, subspace
from qpmoduli.services.surface import (
    MarkedSurface,
    RecipeError,
    SurfaceAnalysis,
    SurfaceRecipe,
    analyze,
    corner_glue,
    disks,
    forget_point,
    plan_contraction,
)

logger = logging.getLogger(__name__)

HolonomyWord = tuple[tuple[int, int], ...]


class FusionError(ValueError):
    pass


@dataclass(frozen=True)
class ActingCopy:
    """One summand of the acting algebra: g at a + point, bar(g) at a - point."""

    name: str
    algebra: QuadraticLieAlgebra
    rho: tuple[Multivector, ...]


def acting_algebra(copies: Sequence[ActingCopy]) -> QuadraticLieAlgebra:
    if not copies:
        raise LayoutError("No acting copies.")
    return direct_sum([c.algebra for c in copies], name="+".join(c.algebra.name for c in copies))


def to_data(
    algebra: QuadraticLieAlgebra,
    n_sites: int,
    pi: Multivector,
    copies: Sequence[ActingCopy],
    group: GroupModel = "SL",
) -> QuasiPoissonData:
    return QuasiPoissonData(
        algebra=algebra,
        n_sites=n_sites,
        acting=acting_algebra(copies),
        rho=[r for c in copies for r in c.rho],
        pi=pi,
        group=group,
    )


def internal_fusion(
    pi: Multivector, copies: Sequence[ActingCopy], a: int, b: int
) -> tuple[Multivector, list[ActingCopy]]:
    """Fuse copy b into copy a: pi - 1/2 (rho_a ∧ rho_b)(t), rho(u) = rho_a(u) + rho_b(u)."""
    if a == b:
        raise FusionError("Cannot fuse a copy with itself.")
    first, second = copies[a], copies[b]
    if first.algebra.c != second.algebra.c or first.algebra.t != second.algebra.t:
        raise FusionError(f"Incompatible copies {first.name} and {second.name}.")
    fused_pi = pi - pair_wedge(first.rho, second.rho, first.algebra.t_matrix).scale(Fraction(1, 2))
    fused = ActingCopy(
        name=f"{first.name}|{second.name}",
        algebra=first.algebra,
        rho=tuple(x + y for x, y in zip(first.rho, second.rho)),
    )
    out = [fused if i == a else c for i, c in enumerate(copies) if i != b]
    return fused_pi, out


def shift_sites(vec: Multivector, offset: int) -> Multivector:
    return Multivector.from_items(
        vec.degree,
        ((tuple(Generator(g.site + offset, g.chirality, g.index) for g in key), v) for key, v in vec.terms.items()),
    )


def disjoint_union(
    first: tuple[int, Multivector, Sequence[ActingCopy]],
    second: tuple[int, Multivector, Sequence[ActingCopy]],
) -> tuple[int, Multivector, list[ActingCopy]]:
    """(n_sites, pi, copies) of the product; sites of the second factor are shifted."""
    n1, pi1, copies1 = first
    n2, pi2, copies2 = second
    shifted = [ActingCopy(c.name, c.algebra, tuple(shift_sites(r, n1) for r in c.rho)) for c in copies2]
    return n1 + n2, pi1 + shift_sites(pi2, n1), [*copies1, *shifted]


@dataclass(frozen=True)
class CentralWord:
    start: str
    end: str
    word: HolonomyWord

    def as_dict(self) -> dict[str, Any]:
        return {"from": self.start, "to": self.end, "word": [list(x) for x in self.word]}


@dataclass
class CentralMaps:
    mu_l: list[CentralWord]
    mu_r: list[CentralWord]
    uncut: list[CentralWord]

    def as_dict(self) -> dict[str, Any]:
        return {
            "mu_L": [w.as_dict() for w in self.mu_l],
            "mu_R": [w.as_dict() for w in self.mu_r],
            "uncut": [w.as_dict() for w in self.uncut],
        }


@dataclass
class ModuliSpace:
    surface: MarkedSurface
    algebra: QuadraticLieAlgebra
    group: GroupModel
    edges: tuple[int, ...]
    copies: list[ActingCopy]
    pi: Multivector
    recipe: SurfaceRecipe | None = None

    @property
    def n_sites(self) -> int:
        return len(self.edges)

    @property
    def dim(self) -> int:
        return self.n_sites * self.algebra.dim

    def site(self, edge: int) -> int:
        return self.edges.index(edge)

    def copy_index(self, name: str) -> int:
        for i, c in enumerate(self.copies):
            if c.name == name:
                return i
        raise RecipeError(f"No acting copy at {name!r}.")

    @cached_property
    def data(self) -> QuasiPoissonData:
        return to_data(self.algebra, self.n_sites, self.pi, self.copies, self.group)

    @cached_property
    def analysis(self) -> SurfaceAnalysis:
        return analyze(self.surface)

    @property
    def sigma(self) -> Tensor2:
        return self.data.sigma

    def frame(self, point: GroupPoint) -> PointFrame:
        return self.data.frame(point)

    def points(self, seed: int, n: int) -> list[GroupPoint]:
        return gen_points(seed, self.n_sites, n, self.group)

    def as_dict(self) -> dict[str, Any]:
        return {
            "surface": self.surface.as_dict(),
            "algebra": self.algebra.name,
            "group": self.group,
            "dim": self.dim,
            "acting": [c.name for c in self.copies],
            "acting_dim": self.data.acting.dim,
            "pi": self.pi.as_dict(),
        }


def _disk_copies(algebra: QuadraticLieAlgebra, count: int) -> list[ActingCopy]:
    bar = compose(algebra, mode="bar")
    copies: list[ActingCopy] = []
    for k in range(count):
        copies.append(
            ActingCopy(f"+{k + 1}", algebra, tuple(Multivector.generator(k, "L", i) for i in range(algebra.dim)))
        )
        copies.append(
            ActingCopy(
                f"-{k + 1}",
                bar,
                tuple(Multivector.generator(k, "R", i, Fraction(-1)) for i in range(algebra.dim)),
            )
        )
    return copies


def build(recipe: SurfaceRecipe, algebra: QuadraticLieAlgebra, group: GroupModel = "SL") -> ModuliSpace:
    if algebra.matrix_model is None:
        raise LayoutError(f"{algebra.name} needs a matrix model to build a moduli space.")
    space = ModuliSpace(
        surface=disks(recipe.disks),
        algebra=algebra,
        group=group,
        edges=tuple(range(1, recipe.disks + 1)),
        copies=_disk_copies(algebra, recipe.disks),
        pi=Multivector.zero(2),
        recipe=recipe,
    )
    for pos, step in enumerate(recipe.steps):
        try:
            if step.op == "glue":
                assert step.y is not None
                space = glue(space, step.x, step.y)
            else:
                space = forget(space, step.x)
        except RecipeError as exc:
            raise RecipeError(f"Step {pos} ({step.op} {step.x}): {exc}") from exc
    logger.info("Built moduli space: %d sites, %d acting copies", space.n_sites, len(space.copies))
    return space


def glue(space: ModuliSpace, x: str, y: str) -> ModuliSpace:
    surface = corner_glue(space.surface, x, y)
    a = space.copy_index(space.surface.vertex(x).name)
    b = space.copy_index(space.surface.vertex(y).name)
    pi, copies = internal_fusion(space.pi, space.copies, a, b)
    return replace(space, surface=surface, copies=copies, pi=pi)


def forget(space: ModuliSpace, x: str) -> ModuliSpace:
    """Quotient by the copy at x, gauge-fixed by contracting one edge at x to the identity."""
    plan = plan_contraction(space.surface, x)
    surface = forget_point(space.surface, x)
    dim = space.algebra.dim
    sign = Fraction(1) if plan.x_is_tail else Fraction(-1)
    edges = tuple(e for e in space.edges if e != plan.edge)
    new_site = {e: edges.index(e) for e in edges}

    def image(index: int) -> Multivector:
        items: list[tuple[tuple[Generator, ...], Fraction]] = []
        for f in plan.heads:
            items.append(((Generator(new_site[f], "L", index),), sign))
        for g in plan.tails:
            items.append(((Generator(new_site[g], "R", index),), -sign))
        for loop in plan.loops:
            items.append(((Generator(new_site[loop], "L", index),), sign))
            items.append(((Generator(new_site[loop], "R", index),), -sign))
        return Multivector.from_items(1, items)

    contracted = [image(i) for i in range(dim)]
    old_edges = space.edges

    def substitute(vec: Multivector) -> Multivector:
        out = Multivector.zero(vec.degree)
        for key, coeff in vec.terms.items():
            factors = []
            for g in key:
                edge = old_edges[g.site]
                if edge == plan.edge:
                    factors.append(contracted[g.index])
                else:
                    factors.append(Multivector.generator(new_site[edge], g.chirality, g.index))
            term = Multivector.from_items(0, [((), coeff)])
            for factor in factors:
                term = term.wedge(factor)
            out = out + term
        return out

    x_name = space.surface.vertex(x).name
    copies = [
        ActingCopy(c.name, c.algebra, tuple(substitute(r) for r in c.rho)) for c in space.copies if c.name != x_name
    ]
    return replace(space, surface=surface, edges=edges, copies=copies, pi=substitute(space.pi))


def central_maps(space: ModuliSpace) -> CentralMaps:
    def convert(word: Iterable[tuple[int, int]]) -> HolonomyWord:
        return tuple((space.site(e), exp) for e, exp in word)

    analysis = space.analysis
    return CentralMaps(
        mu_l=[CentralWord(a.start, a.end, convert(a.word)) for a in analysis.left],
        mu_r=[CentralWord(a.start, a.end, convert(a.word)) for a in analysis.right],
        uncut=[CentralWord(c.base, c.base, convert(c.word)) for c in analysis.uncut],
    )


def evaluate_word(word: HolonomyWord, point: GroupPoint) -> Matrix:
    size = len(point.sites[0]) if point.sites else 2
    factors = []
    for site, exp in word:
        mat = point.matrix(site)
        factors.append(mat if exp > 0 else group_inverse(mat))
    return product_of(factors, size)


def adjoint(algebra: QuadraticLieAlgebra, g: Sequence[Sequence[Fraction]], coords: Sequence[Fraction]) -> Vector:
    """Ad_g u = g u g^-1 in basis coordinates."""
    u = algebra.from_coordinates(coords)
    return algebra.coordinates(linalg.matmul(linalg.matmul(g, u), group_inverse(g)))


def adjoint_matrix(algebra: QuadraticLieAlgebra, g: Sequence[Sequence[Fraction]]) -> Matrix:
    return linalg.transpose([adjoint(algebra, g, algebra.basis_vector(i)) for i in range(algebra.dim)])


def word_differential(algebra: QuadraticLieAlgebra, word: HolonomyWord, point: GroupPoint) -> Matrix:
    """Left-trivialized derivative of the holonomy, dim g rows by frame columns."""
    dim = algebra.dim
    n_sites = len(point.sites)
    columns = [[Fraction(0)] * dim for _ in range(n_sites * dim)]
    size = len(point.sites[0])
    for k, (site, exp) in enumerate(word):
        tail = product_of(
            [point.matrix(s) if e > 0 else group_inverse(point.matrix(s)) for s, e in word[k if exp < 0 else k + 1 :]],
            size,
        )
        ad = adjoint_matrix(algebra, group_inverse(tail))
        for i in range(dim):
            col = columns[site * dim + i]
            for r in range(dim):
                if ad[r][i]:
                    col[r] += exp * ad[r][i]
    return linalg.transpose(columns, dim) if columns else linalg.zeros(dim, 0)


def invariant_covectors(algebra: QuadraticLieAlgebra, holonomy: Sequence[Sequence[Fraction]]) -> Matrix:
    """Covectors gamma with gamma ∘ Ad_W = gamma."""
    ad = adjoint_matrix(algebra, holonomy)
    shifted = [[ad[i][j] - (1 if i == j else 0) for j in range(algebra.dim)] for i in range(algebra.dim)]
    return linalg.left_nullspace(shifted, algebra.dim, algebra.dim)


def class_function_differentials(algebra: QuadraticLieAlgebra, holonomy: Sequence[Sequence[Fraction]]) -> Matrix:
    """Rows k tr(W^k B_b) for k = 1..matrix size, in left trivialization."""
    assert algebra.matrix_model is not None
    size = len(holonomy)
    rows = []
    for k in range(1, size + 1):
        power = matrix_power(holonomy, k)
        rows.append(
            [k * sum(linalg.matmul(power, [list(r) for r in b])[i][i] for i in range(size)) for b in algebra.matrix_model]
        )
    return rows


def pullback(covectors: Sequence[Sequence[Fraction]], differential: Sequence[Sequence[Fraction]]) -> Matrix:
    return [linalg.vec_mat(c, differential) for c in covectors]


@dataclass
class Witness:
    point_index: int
    point: dict[str, Any]
    detail: dict[str, Any]

    def as_dict(self) -> dict[str, Any]:
        return {"point_index": self.point_index, "point": self.point, **self.detail}


@dataclass
class CentralityReport:
    ok: bool
    left_checked: int
    right_checked: int
    witness: dict[str, Any] | None = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "left_checked": self.left_checked,
            "right_checked": self.right_checked,
            "witness": self.witness,
        }


def check_centrality(space: ModuliSpace, point: GroupPoint, sigma: Tensor2 | None = None) -> CentralityReport:
    frame = space.frame(point)
    s = full_pairing(sigma if sigma is not None else space.sigma, frame)
    maps = central_maps(space)
    left = right = 0
    for pos, arc in enumerate(maps.mu_l):
        for k, alpha in enumerate(word_differential(space.algebra, arc.word, point)):
            left += 1
            row = linalg.vec_mat(alpha, s)
            if any(row):
                return CentralityReport(False, left, right, _cov_witness("left", pos, k, alpha, row))
    for pos, arc in enumerate(maps.mu_r):
        for k, beta in enumerate(word_differential(space.algebra, arc.word, point)):
            right += 1
            col = linalg.mat_vec(s, beta)
            if any(col):
                return CentralityReport(False, left, right, _cov_witness("right", pos, k, beta, col))
    return CentralityReport(True, left, right)


def _cov_witness(side: str, arc: int, k: int, covector: Sequence[Fraction], image: Sequence[Fraction]) -> dict[str, Any]:
    return {
        "side": side,
        "arc": arc,
        "component": k,
        "covector": [linalg.fmt(x) for x in covector],
        "image": [linalg.fmt(x) for x in image],
    }


def annihilator_image(space: ModuliSpace, point: GroupPoint) -> tuple[Matrix, bool]:
    """Left-arc pullbacks of g* plus pulled-back invariant covectors of uncut holonomies; flag genericity."""
    maps = central_maps(space)
    rows: Matrix = []
    generic = True
    for arc in maps.mu_l:
        rows.extend(word_differential(space.algebra, arc.word, point))
    for circle in maps.uncut:
        holonomy = evaluate_word(circle.word, point)
        gammas = invariant_covectors(space.algebra, holonomy)
        class_rank = linalg.rank(class_function_differentials(space.algebra, holonomy), space.algebra.dim)
        if class_rank != len(gammas):
            generic = False
        rows.extend(pullback(gammas, word_differential(space.algebra, circle.word, point)))
    return rows, generic


@dataclass
class LeafRanks:
    rank_left: int
    rank_right: int
    rank_big: int
    rank_action: int
    sum_rule: bool
    kernel_matches: bool
    expected_left: int
    generic: bool

    @property
    def theorem_holds(self) -> bool:
        if not self.generic:
            return self.sum_rule and self.rank_left == self.rank_right
        return self.sum_rule and self.kernel_matches and self.rank_left == self.expected_left

    def as_dict(self) -> dict[str, Any]:
        return {
            "rank_T_L": self.rank_left,
            "rank_T_R": self.rank_right,
            "rank_T_big": self.rank_big,
            "rank_rho": self.rank_action,
            "sum_rule": self.sum_rule,
            "kernel_matches_annihilator": self.kernel_matches,
            "expected_rank_T_L": self.expected_left,
            "generic": self.generic,
            "theorem_comparison": self.theorem_holds,
        }


def leaf_ranks(space: ModuliSpace, point: GroupPoint) -> LeafRanks:
    frame = space.frame(point)
    n = space.dim
    s = full_pairing(space.sigma, frame)
    pi = full_pairing(space.pi, frame)
    tl = linalg.column_space(s, n, n)
    tr = linalg.column_space(linalg.transpose(s, n), n, n)
    action = space.data.rho_vectors(frame)
    big = linalg.sum_spaces(action, linalg.column_space(pi, n, n), ncols=n)
    sum_rule = linalg.same_span(linalg.sum_spaces(tl, action, ncols=n), big, n) and linalg.same_span(
        linalg.sum_spaces(tr, action, ncols=n), big, n
    )
    ann, generic = annihilator_image(space, point)
    kernel = linalg.left_nullspace(s, n, n)
    kernel_matches = linalg.same_span(kernel, ann, n) if (kernel or ann) else True
    uncut_rank = 0
    for circle in central_maps(space).uncut:
        holonomy = evaluate_word(circle.word, point)
        uncut_rank += linalg.rank(class_function_differentials(space.algebra, holonomy), space.algebra.dim)
    expected = n - len(space.analysis.left) * space.algebra.dim - uncut_rank
    return LeafRanks(
        rank_left=len(tl),
        rank_right=len(tr),
        rank_big=len(big),
        rank_action=linalg.rank(action, n) if action else 0,
        sum_rule=sum_rule,
        kernel_matches=kernel_matches,
        expected_left=expected,
        generic=generic,
    )


@dataclass
class LeafPairing:
    matrix: Matrix
    nondegenerate: bool
    choice_independent: bool

    def as_dict(self) -> dict[str, Any]:
        return {
            "matrix": linalg.serialize_matrix(self.matrix),
            "leaf_dim": len(self.matrix),
            "nondegenerate": self.nondegenerate,
            "choice_independent": self.choice_independent,
        }


def leaf_pairing(s: Sequence[Sequence[Fraction]], n: int) -> LeafPairing:
    """Pairing induced by sigma on T*M/V_L x T*M/V_R, with representatives shifted by each kernel vector."""
    left_kernel = linalg.left_nullspace(s, n, n)
    right_kernel = linalg.nullspace(s, n)
    identity = linalg.identity(n)
    alphas = linalg.complement_basis(left_kernel, identity, n) if left_kernel else identity
    betas = linalg.complement_basis(right_kernel, identity, n) if right_kernel else identity
    matrix = [[linalg.bilinear(alpha, s, beta) for alpha in alphas] for beta in betas]
    size = linalg.rank(matrix, len(alphas)) if matrix else 0
    nondegenerate = len(alphas) == len(betas) == size == linalg.rank(s, n)

    independent = True
    for kernel_vec in left_kernel:
        for a, alpha in enumerate(alphas):
            shifted = [x + y for x, y in zip(alpha, kernel_vec)]
            if any(linalg.bilinear(shifted, s, beta) != matrix[b][a] for b, beta in enumerate(betas)):
                independent = False
    for kernel_vec in right_kernel:
        for b, beta in enumerate(betas):
            shifted = [x + y for x, y in zip(beta, kernel_vec)]
            if any(linalg.bilinear(alpha, s, shifted) != matrix[b][a] for a, alpha in enumerate(alphas)):
                independent = False
    return LeafPairing(matrix=matrix, nondegenerate=nondegenerate, choice_independent=independent)


def sigma_inverse_on_leaves(space: ModuliSpace, point: GroupPoint) -> LeafPairing:
    """sigma^-1(u, v) = sigma(alpha, beta) with v = sigma(alpha, .), u = sigma(., beta)."""
    return leaf_pairing(full_pairing(space.sigma, space.frame(point)), space.dim)


def arc_action_rows(
    space: ModuliSpace, arcs: Sequence[CentralWord], point: GroupPoint
) -> Matrix:
    """Rows of the infinitesimal acting-algebra action on the arc targets: u_b - Ad_{W^-1} u_a."""
    dim = space.algebra.dim
    total = len(space.copies) * dim
    rows: Matrix = []
    for arc in arcs:
        a = space.copy_index(arc.start)
        b = space.copy_index(arc.end)
        ad = adjoint_matrix(space.algebra, group_inverse(evaluate_word(arc.word, point)))
        for r in range(dim):
            row = [Fraction(0)] * total
            row[b * dim + r] += 1
            for i in range(dim):
                row[a * dim + i] -= ad[r][i]
            rows.append(row)
    return rows


@dataclass
class StabilizerReport:
    side: str
    rank: int
    acting_dim: int
    coisotropic: bool
    lagrangian: bool | None

    def as_dict(self) -> dict[str, Any]:
        return {
            "side": self.side,
            "rank": self.rank,
            "acting_dim": self.acting_dim,
            "coisotropic": self.coisotropic,
            "lagrangian": self.lagrangian,
        }


def leaf_stabilizer_report(space: ModuliSpace, point: GroupPoint) -> list[StabilizerReport]:
    maps = central_maps(space)
    acting = space.data.acting
    out = []
    for side, arcs in (("left", maps.mu_l), ("right", maps.mu_r)):
        rows = arc_action_rows(space, arcs, point)
        basis = linalg.nullspace(rows, acting.dim) if rows else linalg.identity(acting.dim)
        stab: Subalgebra = subspace(acting, basis)
        report = coisotropy_report(stab)
        out.append(StabilizerReport(side, stab.rank, acting.dim, report.is_coisotropic, report.is_lagrangian))
    return out


def point_with(point: GroupPoint, site: int, matrix: Sequence[Sequence[Fraction]]) -> GroupPoint:
    sites = list(point.sites)
    sites[site] = tuple(tuple(row) for row in matrix)
    return GroupPoint(sites=tuple(sites), group=point.group)


def _solving_plan(words: Sequence[HolonomyWord]) -> list[tuple[int, int]] | None:
    for order in permutations(range(len(words))):
        plan: list[tuple[int, int]] = []
        used: set[int] = set()
        for pos in order:
            word = words[pos]
            counts = Counter(s for s, _ in word)
            free = [k for k, (s, _) in enumerate(word) if counts[s] == 1 and s not in used]
            if not free:
                break
            plan.append((pos, free[0]))
            used.update(s for s, _ in word)
        else:
            return plan
    return None


def solve_words(point: GroupPoint, words: Sequence[HolonomyWord]) -> GroupPoint:
    """Overwrite one edge per word, in an order where no solved word is disturbed, so every word evaluates to 1."""
    plan = _solving_plan(words)
    if plan is None:
        raise LayoutError("No edge assignment solves every word.")
    for pos, k in plan:
        word = words[pos]
        site, exp = word[k]
        before = evaluate_word(word[:k], point)
        after = evaluate_word(word[k + 1 :], point)
        if exp > 0:
            value = linalg.matmul(group_inverse(before), group_inverse(after))
        else:
            value = linalg.matmul(after, before)
        point = point_with(point, site, value)
    return point


def slice_points(space: ModuliSpace, words: Sequence[HolonomyWord], n: int, seed: int) -> list[GroupPoint]:
    """Seeded points where every word evaluates to the identity."""
    return [solve_words(point, words) for point in space.points(seed, n)]
