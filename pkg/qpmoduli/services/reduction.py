from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from typing import Any, Sequence

from qpmoduli.services import linalg
from qpmoduli.services.invcalc import (
    GroupPoint,
    PointFrame,
    PointTensor,
    QuasiPoissonData,
    evaluate_at,
    full_pairing,
    schouten,
)
from qpmoduli.services.kernels import PreimageKernelReport, preimage_kernel
from qpmoduli.services.linalg import Matrix
from qpmoduli.services.moduli import (
    CentralWord,
    ModuliSpace,
    arc_action_rows,
    central_maps,
    disjoint_union,
    internal_fusion,
    leaf_ranks,
    leaf_stabilizer_report,
    solve_words,
    to_data,
    word_differential,
)
from qpmoduli.services.points import gen_points
from qpmoduli.services.qla import (
    DescentData,
    HypothesisError,
    Subalgebra,
    coisotropy_report,
    descend_data,
)

logger = logging.getLogger(__name__)


class TransversalityError(ValueError):
    def __init__(self, expected: int, actual: int, where: str = "") -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(f"transversality fails at p{where}: rank {actual} < {expected}")

    def as_dict(self) -> dict[str, Any]:
        return {"expected_rank": self.expected, "actual_rank": self.actual, "deficit": self.expected - self.actual}


def invariant_covectors_at(data: QuasiPoissonData, frame: PointFrame, sub: Subalgebra) -> Matrix:
    """Ann(sub . p): covectors killing rho(u) for u in sub."""
    vectors = data.rho_vectors(frame)
    action = [
        [sum((u[k] * vectors[k][col] for k in range(len(u)) if u[k]), Fraction(0)) for col in range(frame.size)]
        for u in sub.basis
    ]
    if not action:
        return linalg.identity(frame.size)
    return linalg.nullspace(action, frame.size)


@dataclass
class ReducedPointData:
    dim: int
    cotangent_basis: Matrix
    matrix: Matrix
    nondegenerate: bool
    checks: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict[str, Any]:
        return {
            "dim": self.dim,
            "matrix": linalg.serialize_matrix(self.matrix),
            "nondegenerate": self.nondegenerate,
            "checks": dict(sorted(self.checks.items())),
            "notes": self.notes,
        }


def _require_coisotropic(c: Subalgebra) -> None:
    if not coisotropy_report(c).is_coisotropic:
        raise HypothesisError("not coisotropic", f"rank {c.rank} subspace of {c.parent.name}")


def _is_nondegenerate(matrix: Matrix) -> bool:
    return not matrix or linalg.rank(matrix, len(matrix)) == len(matrix)


def reduced_bivector_at(data: QuasiPoissonData, c: Subalgebra, point: GroupPoint) -> ReducedPointData:
    _require_coisotropic(c)
    frame = data.frame(point)
    basis = invariant_covectors_at(data, frame, c)
    pi = full_pairing(data.pi, frame)
    sigma = full_pairing(data.sigma, frame)
    reduced = linalg.restrict_form(pi, basis, basis)
    via_sigma = linalg.restrict_form(sigma, basis, basis)
    descent = descend_data(c, c)
    return ReducedPointData(
        dim=len(basis),
        cotangent_basis=basis,
        matrix=reduced,
        nondegenerate=_is_nondegenerate(reduced),
        checks={
            "skew": reduced == linalg.skew_part(reduced),
            "pi_equals_sigma": reduced == via_sigma,
            "phi_vanishes_mod_c": descent.phi_mod_vanishes,
        },
        notes=["quotient smoothness replaced by exact ranks at the sampled point"],
    )


def target_conormal(space: ModuliSpace, c: Subalgebra, target: CentralWord, point: GroupPoint) -> Matrix:
    """Pulled-back covectors conormal to the c-orbit through the target value."""
    rows = arc_action_rows(space, [target], point)
    tangents = [[linalg.dot(row, u) for u in c.basis] for row in rows]
    dim = space.algebra.dim
    conormal = linalg.left_nullspace(tangents, dim, c.rank) if c.rank else linalg.identity(dim)
    differential = word_differential(space.algebra, target.word, point)
    return [linalg.vec_mat(xi, differential) for xi in conormal]


def _targets(space: ModuliSpace, include_uncut: bool) -> list[CentralWord]:
    maps = central_maps(space)
    return [*maps.mu_l, *maps.mu_r, *(maps.uncut if include_uncut else [])]


def central_reduction_at(
    space: ModuliSpace, c: Subalgebra, point: GroupPoint, include_uncut: bool = True
) -> ReducedPointData:
    _require_coisotropic(c)
    data = space.data
    frame = data.frame(point)
    n = space.dim
    invariant = invariant_covectors_at(data, frame, c)
    conormal: Matrix = []
    for target in _targets(space, include_uncut):
        conormal.extend(target_conormal(space, c, target, point))
    actual = linalg.rank(conormal, n) if conormal else 0
    if actual < len(conormal):
        logger.warning("Transversality fails: rank %d of %d conormal rows", actual, len(conormal))
        raise TransversalityError(len(conormal), actual)

    pi = full_pairing(space.pi, frame)
    contained = linalg.span_contains(invariant, conormal, n) if conormal else True
    mechanism = linalg.is_zero_matrix(linalg.restrict_form(pi, conormal, invariant)) if conormal else True
    basis = linalg.complement_basis(conormal, invariant, n)
    reduced = linalg.restrict_form(pi, basis, basis)
    return ReducedPointData(
        dim=len(basis),
        cotangent_basis=basis,
        matrix=reduced,
        nondegenerate=_is_nondegenerate(reduced),
        checks={
            "skew": reduced == linalg.skew_part(reduced),
            "conormal_invariant": contained,
            "poisson_submanifold": mechanism,
        },
        notes=["quotient smoothness replaced by exact ranks at the sampled point"],
    )


@dataclass
class LeafVerdict:
    reduced_dim: int
    nondegenerate: bool
    kernel: PreimageKernelReport
    matches_central_reduction: bool

    @property
    def ok(self) -> bool:
        return self.nondegenerate and self.kernel.equal and self.matches_central_reduction

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "reduced_dim": self.reduced_dim,
            "nondegenerate": self.nondegenerate,
            "kernel": self.kernel.as_dict(),
            "matches_central_reduction": self.matches_central_reduction,
        }


def symplectic_leaf_check(space: ModuliSpace, c: Subalgebra, point: GroupPoint) -> LeafVerdict:
    """Kernel of sigma on rho*^{-1}(Ann c), on T*M modulo the uncut class differentials."""
    report = coisotropy_report(c)
    if not report.is_lagrangian:
        raise HypothesisError("c not Lagrangian", f"rank {c.rank} in {c.parent.name}")
    ranks = leaf_ranks(space, point)
    n = space.dim
    frame = space.frame(point)
    uncut: Matrix = []
    for circle in central_maps(space).uncut:
        uncut.extend(target_conormal(space, space_full_algebra(space), circle, point))
    if ranks.rank_big != n - (linalg.rank(uncut, n) if uncut else 0):
        raise HypothesisError("not one big leaf", f"rank T^big = {ranks.rank_big}")
    if not all(s.lagrangian for s in leaf_stabilizer_report(space, point)):
        raise HypothesisError("stabilizers not Lagrangian")

    quotient = linalg.complement_basis(uncut, linalg.identity(n), n) if uncut else linalg.identity(n)
    sigma = linalg.restrict_form(full_pairing(space.sigma, frame), quotient, quotient)
    rho = space.data.rho_vectors(frame)
    f = [[linalg.dot(v, r) for v in quotient] for r in rho]
    t = space.data.acting.t_matrix
    kernel = preimage_kernel(sigma, t, f, c.annihilator())
    reduced_dim = len(kernel.domain) - len(kernel.oracle)
    central = central_reduction_at(space, c, point, include_uncut=True)
    return LeafVerdict(
        reduced_dim=reduced_dim,
        nondegenerate=kernel.reduced_nondegenerate,
        kernel=kernel,
        matches_central_reduction=central.dim == reduced_dim and central.nondegenerate,
    )


def space_full_algebra(space: ModuliSpace) -> Subalgebra:
    acting = space.data.acting
    return Subalgebra(acting, tuple(tuple(row) for row in linalg.identity(acting.dim)))


def _trivector_value(tensor: PointTensor, a: Sequence[Fraction], b: Sequence[Fraction], c: Sequence[Fraction]) -> Fraction:
    total = Fraction(0)
    for index, value in tensor.components.items():
        for perm in permutations(range(3)):
            i, j, k = (index[p] for p in perm)
            if a[i] and b[j] and c[k]:
                sign = 1 if perm in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1
                total += sign * value * a[i] * b[j] * c[k]
    return total


@dataclass
class PartialReduction:
    descent: DescentData
    dim: int
    free_action: bool
    jacobiator_matches: bool
    poisson: bool

    @property
    def ok(self) -> bool:
        return self.free_action and self.jacobiator_matches

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "dim": self.dim,
            "free_action": self.free_action,
            "jacobiator_matches": self.jacobiator_matches,
            "poisson": self.poisson,
            "descent": self.descent.as_dict(),
        }


def partial_reduction_at(data: QuasiPoissonData, c: Subalgebra, h: Subalgebra, point: GroupPoint) -> PartialReduction:
    """M/h as a c/h-quasi-Poisson space, checked on h-invariant covectors at p."""
    descent = descend_data(c, h)
    frame = data.frame(point)
    basis = invariant_covectors_at(data, frame, h)
    free = frame.size - len(basis) == h.rank
    bracket = evaluate_at(schouten(data.pi, data.pi, data.algebra), frame)
    rho = data.rho_vectors(frame)
    images = []
    for alpha in basis:
        on_d = [linalg.dot(alpha, r) for r in rho]
        images.append([linalg.dot(on_d, q) for q in descent.quotient_basis])
    matches = True
    poisson = True
    for x, y, z in product(range(len(basis)), repeat=3):
        if not x < y < z:
            continue
        lhs = _trivector_value(bracket, basis[x], basis[y], basis[z])
        rhs = Fraction(0)
        for (i, j, k), value in descent.phi_prime.components.items():
            rhs += value * images[x][i] * images[y][j] * images[z][k]
        if lhs != 2 * rhs:
            matches = False
        if lhs:
            poisson = False
    return PartialReduction(descent, len(basis), free, matches, poisson)


@dataclass
class FusionPairReport:
    transverse: bool
    identity_holds: bool
    outer_central: bool
    checked: int
    witness: dict[str, Any] | None = None

    @property
    def ok(self) -> bool:
        return self.transverse and self.identity_holds and self.outer_central

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "transverse": self.transverse,
            "identity_holds": self.identity_holds,
            "outer_central": self.outer_central,
            "checked": self.checked,
            "witness": self.witness,
        }


@dataclass
class FusedPair:
    data: QuasiPoissonData
    mu_r: CentralWord
    nu_l: CentralWord
    mu_l: list[CentralWord]
    nu_r: list[CentralWord]


def fuse_pair_data(first: ModuliSpace, second: ModuliSpace) -> FusedPair:
    """M1 ⊛ M2 fusing copies pairwise; the second factor's sites are shifted."""
    if [c.algebra.t for c in first.copies] != [c.algebra.t for c in second.copies]:
        raise HypothesisError("incompatible acting algebras")
    n1 = first.n_sites
    n_sites, pi, copies = disjoint_union((n1, first.pi, first.copies), (second.n_sites, second.pi, second.copies))
    k = len(first.copies)
    for i in range(k):
        pi, copies = internal_fusion(pi, copies, i, k)
    m1, m2 = central_maps(first), central_maps(second)
    if len(m1.mu_r) != 1 or len(m2.mu_l) != 1:
        raise HypothesisError("single-arc targets required", "fibre product needs one right and one left arc")

    def shifted(word: CentralWord) -> CentralWord:
        return CentralWord(word.start, word.end, tuple((s + n1, e) for s, e in word.word))

    data = to_data(first.algebra, n_sites, pi, copies, first.group)
    return FusedPair(
        data=data,
        mu_r=m1.mu_r[0],
        nu_l=shifted(m2.mu_l[0]),
        mu_l=list(m1.mu_l),
        nu_r=[shifted(w) for w in m2.mu_r],
    )


def fibre_points(first: ModuliSpace, second: ModuliSpace, n: int, seed: int) -> list[GroupPoint]:
    """Points with mu_R(p1) nu_L(p2) = 1 on the product layout."""
    fused = fuse_pair_data(first, second)
    word = fused.mu_r.word + fused.nu_l.word
    return [solve_words(p, [word]) for p in gen_points(seed, fused.data.n_sites, n, first.group)]


def fuse_central_pairs(first: ModuliSpace, second: ModuliSpace, point: GroupPoint) -> FusionPairReport:
    fused = fuse_pair_data(first, second)
    algebra = first.algebra
    frame = fused.data.frame(point)
    n = frame.size
    dim = algebra.dim
    mu = word_differential(algebra, fused.mu_r.word, point)
    inverse_nu = tuple((s, -e) for s, e in reversed(fused.nu_l.word))
    nu = word_differential(algebra, inverse_nu, point)
    joint = [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(mu, nu)]
    transverse = linalg.rank(joint, n) == dim
    s = full_pairing(fused.data.sigma, frame)
    identity = True
    witness = None
    for k, row in enumerate(joint):
        image = linalg.vec_mat(row, s)
        if any(image):
            identity = False
            witness = {"component": k, "image": [linalg.fmt(x) for x in image]}
            break
    outer = True
    for word in fused.mu_l:
        for alpha in word_differential(algebra, word.word, point):
            outer = outer and not any(linalg.vec_mat(alpha, s))
    for word in fused.nu_r:
        for beta in word_differential(algebra, word.word, point):
            outer = outer and not any(linalg.mat_vec(s, beta))
    return FusionPairReport(transverse, identity, outer, dim, witness)
