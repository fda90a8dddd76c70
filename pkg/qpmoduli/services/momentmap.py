"""Manin-pair twists, slices of central pairs and group-valued moment maps.

A split of the acting double d = h ⊕ h* into Lagrangian pieces turns a
d-quasi-Poisson space into an (h, d)-structure by subtracting the twist
tau = 1/2 sum e_i ∧ e^i. Left slices of split central pairs carry that
structure together with a moment map to D/H, and conversely every such
space induces a central pair.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Any, Literal, Sequence

from qpmoduli.services import linalg
from qpmoduli.services.catalog import antidiagonal, diagonal
from qpmoduli.services.invcalc import (
    GroupModel,
    GroupPoint,
    LayoutError,
    Multivector,
    PointFrame,
    QuasiPoissonData,
    Tensor2,
    action_extend,
    evaluate_at,
    full_pairing,
    group_point,
    pair_extend,
    schouten,
)
from qpmoduli.services.linalg import Matrix
from qpmoduli.services.moduli import (
    ActingCopy,
    CentralWord,
    HolonomyWord,
    ModuliSpace,
    adjoint_matrix,
    arc_action_rows,
    build,
    central_maps,
    disjoint_union,
    evaluate_word,
    internal_fusion,
    shift_sites,
    to_data,
    word_differential,
)
from qpmoduli.services.points import group_inverse
from qpmoduli.services.qla import (
    AlgTensor,
    HypothesisError,
    QuadraticLieAlgebra,
    Subalgebra,
    coisotropy_report,
    compose,
    direct_sum,
    make_tensor,
    subspace,
)
from qpmoduli.services.reduction import fuse_pair_data
from qpmoduli.services.surface import named_recipe

logger = logging.getLogger(__name__)

Side = Literal["left", "right"]


@dataclass(frozen=True)
class ManinPair:
    """d = h ⊕ h* with both summands Lagrangian; `dual` holds e^i with <e^i, e_j> = delta_ij."""

    double: QuadraticLieAlgebra
    h: Subalgebra
    h_star: Subalgebra
    basis: tuple[tuple[Fraction, ...], ...]
    dual: tuple[tuple[Fraction, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.basis)

    def pairing(self, u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
        return linalg.bilinear(u, self.double.metric, v)

    @cached_property
    def tau_matrix(self) -> Matrix:
        n = self.double.dim
        out = linalg.zeros(n, n)
        for e, f in zip(self.basis, self.dual):
            for a, b in product(range(n), repeat=2):
                out[a][b] += (e[a] * f[b] - f[a] * e[b]) / 2
        return out

    @cached_property
    def tau(self) -> AlgTensor:
        n = self.double.dim
        return make_tensor(2, "alternating", n, {(a, b): self.tau_matrix[a][b] for a in range(n) for b in range(n)})

    @cached_property
    def phi(self) -> AlgTensor:
        """phi^{ijk} = <[e^i, e^j], e^k>."""
        m = self.rank
        components = {}
        for i, j, k in product(range(m), repeat=3):
            components[(i, j, k)] = self.pairing(self.double.bracket(self.dual[i], self.dual[j]), self.dual[k])
        return make_tensor(3, "alternating", m, components)

    def delta(self, k: int) -> AlgTensor:
        """delta(e_k)^{ij} = <[e^i, e^j], e_k>."""
        m = self.rank
        components = {}
        for i, j in product(range(m), repeat=2):
            components[(i, j)] = self.pairing(self.double.bracket(self.dual[i], self.dual[j]), self.basis[k])
        return make_tensor(2, "alternating", m, components)

    @property
    def bialgebra_trivial(self) -> bool:
        return all(self.delta(k).is_zero() for k in range(self.rank))

    def as_dict(self) -> dict[str, Any]:
        return {
            "double": self.double.name,
            "rank": self.rank,
            "h": linalg.serialize_matrix(self.basis),
            "h_star": linalg.serialize_matrix(self.h_star.rows()),
            "dual": linalg.serialize_matrix(self.dual),
            "phi_h": self.phi.as_dict(),
            "cobracket_vanishes": self.bialgebra_trivial,
        }


def manin_pair_data(double: QuadraticLieAlgebra, h: Subalgebra, h_star: Subalgebra) -> ManinPair:
    if not double.nondegenerate:
        raise HypothesisError("degenerate pairing", f"t on {double.name} is not invertible")
    for u, v in product(h.basis, repeat=2):
        if not h.contains([double.bracket(u, v)]):
            raise HypothesisError("not a subalgebra", "h is not closed under the bracket")
    for label, sub in (("h", h), ("h*", h_star)):
        if not coisotropy_report(sub).is_lagrangian:
            raise HypothesisError("not Lagrangian", f"{label} of rank {sub.rank} in {double.name}")
    if linalg.rank([*h.rows(), *h_star.rows()], double.dim) != double.dim:
        raise HypothesisError("not complementary", "h + h* does not span d")
    basis = h.rows()
    gram = [[linalg.bilinear(f, double.metric, e) for e in basis] for f in h_star.rows()]
    coeffs = linalg.inverse(gram)
    dual = [
        [sum((coeffs[i][k] * h_star.basis[k][a] for k in range(h_star.rank)), Fraction(0)) for a in range(double.dim)]
        for i in range(len(basis))
    ]
    return ManinPair(
        double=double,
        h=h,
        h_star=h_star,
        basis=tuple(tuple(r) for r in basis),
        dual=tuple(tuple(r) for r in dual),
    )


def double_of(algebra: QuadraticLieAlgebra) -> QuadraticLieAlgebra:
    return direct_sum([algebra, compose(algebra, mode="bar")], name=f"{algebra.name}+bar({algebra.name})")


def diagonal_pair(algebra: QuadraticLieAlgebra, complement: Subalgebra | None = None) -> ManinPair:
    """(g_diag, g ⊕ bar g); the antidiagonal complement unless another one is given."""
    double = double_of(algebra)
    h_star = complement if complement is not None else antidiagonal(double)
    if h_star.parent != double:
        h_star = subspace(double, h_star.rows())
    return manin_pair_data(double, diagonal(double), h_star)


def conjugate_pair(pair: ManinPair) -> ManinPair:
    bar = compose(pair.double, mode="bar")
    return manin_pair_data(bar, subspace(bar, pair.h.rows()), subspace(bar, pair.h_star.rows()))


def _combine(rho: Sequence[Multivector], coeffs: Sequence[Fraction]) -> Multivector:
    out = Multivector.zero(1)
    for vec, c in zip(rho, coeffs):
        if c:
            out = out + vec.scale(c)
    return out


@dataclass
class RestrictedStructure:
    """pi' = pi - rho(tau) together with the actions of the basis and dual basis."""

    data: QuasiPoissonData
    pair: ManinPair
    pi_prime: Multivector
    rho_h: list[Multivector]
    rho_dual: list[Multivector]

    def sigma_from_twist(self) -> Tensor2:
        out = Tensor2.from_bivector(self.pi_prime)
        for e, f in zip(self.rho_h, self.rho_dual):
            out = out + Tensor2.outer(e, f)
        return out


def restrict_structure(data: QuasiPoissonData, pair: ManinPair) -> RestrictedStructure:
    if data.acting.t != pair.double.t or data.acting.c != pair.double.c:
        raise HypothesisError("acting algebra mismatch", f"{data.acting.name} is not {pair.double.name}")
    return RestrictedStructure(
        data=data,
        pair=pair,
        pi_prime=data.pi - action_extend(data.rho, pair.tau),
        rho_h=[_combine(data.rho, e) for e in pair.basis],
        rho_dual=[_combine(data.rho, f) for f in pair.dual],
    )


@dataclass
class TwistedIdentityReport:
    jacobiator: bool
    invariance: bool
    sigma_reconstructed: bool
    witness: dict[str, Any] | None = None

    @property
    def ok(self) -> bool:
        return self.jacobiator and self.invariance and self.sigma_reconstructed

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "jacobiator": self.jacobiator,
            "invariance": self.invariance,
            "sigma_reconstructed": self.sigma_reconstructed,
            "witness": self.witness,
        }


def check_twisted_identities(structure: RestrictedStructure, point: GroupPoint) -> TwistedIdentityReport:
    """[pi', pi'] = 2 rho_h(phi_h), [rho(e_k), pi'] = -rho_h(delta(e_k)), and pi' + rho(e_i)⊗rho(e^i) = sigma."""
    data = structure.data
    frame = data.frame(point)
    pi_prime = structure.pi_prime
    bracket = evaluate_at(schouten(pi_prime, pi_prime, data.algebra), frame)
    target = evaluate_at(action_extend(structure.rho_h, structure.pair.phi).scale(Fraction(2)), frame)
    jac = bracket - target
    if not jac.is_zero():
        return TwistedIdentityReport(False, False, False, {"identity": "jacobiator", "defect": jac.as_dict()})
    for k, vec in enumerate(structure.rho_h):
        lhs = evaluate_at(schouten(vec, pi_prime, data.algebra), frame)
        rhs = evaluate_at(-action_extend(structure.rho_h, structure.pair.delta(k)), frame)
        defect = lhs - rhs
        if not defect.is_zero():
            return TwistedIdentityReport(True, False, False, {"identity": "invariance", "k": k, "defect": defect.as_dict()})
    rebuilt = evaluate_at(structure.sigma_from_twist(), frame) - evaluate_at(data.sigma, frame)
    if not rebuilt.is_zero():
        return TwistedIdentityReport(True, True, False, {"identity": "sigma", "defect": rebuilt.as_dict()})
    return TwistedIdentityReport(True, True, True)


@dataclass
class TwistChange:
    in_wedge_h: bool
    relation_holds: bool

    def as_dict(self) -> dict[str, Any]:
        return {"tau_difference_in_wedge2_h": self.in_wedge_h, "pi_prime_relation": self.relation_holds}


def change_complement(data: QuasiPoissonData, first: ManinPair, second: ManinPair) -> TwistChange:
    """Swap h* for another Lagrangian complement of the same h."""
    if not first.h.same_as(second.h):
        raise HypothesisError("different h", "both pairs must share the subalgebra h")
    n = first.double.dim
    diff = [[second.tau_matrix[a][b] - first.tau_matrix[a][b] for b in range(n)] for a in range(n)]
    in_h = all(not any(linalg.vec_mat(alpha, diff)) for alpha in first.h.annihilator())
    twist = make_tensor(2, "alternating", n, {(a, b): diff[a][b] for a in range(n) for b in range(n)})
    before = restrict_structure(data, first).pi_prime
    after = restrict_structure(data, second).pi_prime
    relation = (after - (before - action_extend(data.rho, twist))).is_zero()
    return TwistChange(in_h, relation)


def conjugate_data(data: QuasiPoissonData) -> QuasiPoissonData:
    """Reversed bivector with the opposite pairing on the acting algebra."""
    return replace(data, acting=compose(data.acting, mode="bar"), pi=-data.pi)


def slice_pair(space: ModuliSpace, side: Side = "left") -> ManinPair:
    """h = diagonal over each arc of `side` (u_a = u_b), h* = antidiagonal; needs every copy on exactly one arc."""
    maps = central_maps(space)
    arcs = maps.mu_l if side == "left" else maps.mu_r
    dim = space.algebra.dim
    acting = space.data.acting
    seen: list[str] = []
    for arc in arcs:
        seen.extend([arc.start, arc.end])
    if sorted(seen) != sorted(c.name for c in space.copies):
        raise HypothesisError("alternating marked points", f"{side} arcs do not pair off the acting copies")
    h_rows: Matrix = []
    h_star_rows: Matrix = []
    for arc in arcs:
        a, b = space.copy_index(arc.start), space.copy_index(arc.end)
        plus = b if space.copies[b].name.startswith("+") else a
        for i in range(dim):
            row = [Fraction(0)] * acting.dim
            row[a * dim + i] = row[b * dim + i] = Fraction(1)
            h_rows.append(row)
            anti = [Fraction(0)] * acting.dim
            anti[a * dim + i] = anti[b * dim + i] = Fraction(-1)
            anti[plus * dim + i] = Fraction(1)
            h_star_rows.append(anti)
    return manin_pair_data(acting, subspace(acting, h_rows), subspace(acting, h_star_rows))


def _slice_residual(words: Sequence[CentralWord], point: GroupPoint) -> bool:
    size = len(point.sites[0])
    return all(evaluate_word(w.word, point) == linalg.identity(size) for w in words)


def _stacked_differential(space: ModuliSpace, words: Sequence[CentralWord], point: GroupPoint) -> Matrix:
    rows: Matrix = []
    for w in words:
        rows.extend(word_differential(space.algebra, w.word, point))
    return rows


@dataclass
class LeafStructureReport:
    on_slice: bool
    pi_tangent: bool
    action_tangent: bool
    nondegenerate: bool
    slice_dim: int
    twisted: bool

    @property
    def ok(self) -> bool:
        return self.on_slice and self.pi_tangent and self.action_tangent and self.nondegenerate

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "on_slice": self.on_slice,
            "pi_tangent": self.pi_tangent,
            "action_tangent": self.action_tangent,
            "nondegenerate": self.nondegenerate,
            "slice_dim": self.slice_dim,
            "twisted": self.twisted,
        }


def leaf_structure_check(space: ModuliSpace, point: GroupPoint, twisted: bool = True) -> LeafStructureReport:
    """At a point of mu_L^-1(1): pi' and rho(h) are tangent and together span the slice."""
    if space.analysis.uncut:
        raise HypothesisError("not split-symplectic", f"{len(space.analysis.uncut)} uncut circles leave more than one leaf")
    pair = slice_pair(space, "left")
    structure = restrict_structure(space.data, pair)
    left = central_maps(space).mu_l
    frame = space.frame(point)
    n = frame.size
    bivector = full_pairing(structure.pi_prime if twisted else space.pi, frame)
    conormal = _stacked_differential(space, left, point)
    action = [frame.dense(v) for v in structure.rho_h]
    pi_tangent = all(not any(linalg.vec_mat(alpha, bivector)) for alpha in conormal)
    action_tangent = all(not linalg.dot(alpha, v) for alpha in conormal for v in action)
    tangent = linalg.nullspace(conormal, n) if conormal else linalg.identity(n)
    spanned = linalg.sum_spaces(action, linalg.column_space(bivector, n, n), ncols=n)
    return LeafStructureReport(
        on_slice=_slice_residual(left, point),
        pi_tangent=pi_tangent,
        action_tangent=action_tangent,
        nondegenerate=linalg.same_span(spanned, tangent, n),
        slice_dim=len(tangent),
        twisted=twisted,
    )


@dataclass
class MomentReport:
    equivariant: bool
    moment_identity: bool
    quasi_symplectic: bool
    symmetric_part_matches: bool | None
    witness: dict[str, Any] | None = None

    @property
    def ok(self) -> bool:
        return self.equivariant and self.moment_identity and self.symmetric_part_matches is not False

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "equivariant": self.equivariant,
            "moment_identity": self.moment_identity,
            "quasi_symplectic": self.quasi_symplectic,
            "symmetric_part_matches": self.symmetric_part_matches,
            "witness": self.witness,
        }


def _moment_identity(
    structure: RestrictedStructure, frame: PointFrame, covectors: Sequence[Sequence[Fraction]]
) -> dict[str, Any] | None:
    """pi'(., gamma) = -sum_i gamma(rho(e^i)) rho(e_i) for gamma pulled back from the target."""
    bivector = full_pairing(structure.pi_prime, frame)
    basis = [frame.dense(v) for v in structure.rho_h]
    duals = [frame.dense(v) for v in structure.rho_dual]
    for k, gamma in enumerate(covectors):
        lhs = linalg.mat_vec(bivector, gamma)
        rhs = [Fraction(0)] * frame.size
        for e, f in zip(basis, duals):
            weight = linalg.dot(gamma, f)
            if weight:
                rhs = [r - weight * x for r, x in zip(rhs, e)]
        if lhs != rhs:
            return {"component": k, "lhs": [linalg.fmt(x) for x in lhs], "rhs": [linalg.fmt(x) for x in rhs]}
    return None


def _block_diagonal(block: Sequence[Sequence[Fraction]], copies: int) -> Matrix:
    dim = len(block)
    out = linalg.zeros(dim * copies, dim * copies)
    for c in range(copies):
        for i, j in product(range(dim), repeat=2):
            out[c * dim + i][c * dim + j] = block[i][j]
    return out


def moment_condition_check(space: ModuliSpace, point: GroupPoint) -> MomentReport:
    """The right holonomies as a moment map on the left slice through `point`."""
    pair = slice_pair(space, "left")
    structure = restrict_structure(space.data, pair)
    maps = central_maps(space)
    frame = space.frame(point)
    n = frame.size
    dim = space.algebra.dim
    right = _stacked_differential(space, maps.mu_r, point)

    rho = space.data.rho_matrix(frame)
    target_action = arc_action_rows(space, maps.mu_r, point)
    equivariant = linalg.matmul(right, rho) == target_action if right else True
    witness = _moment_identity(structure, frame, right)

    left = _stacked_differential(space, maps.mu_l, point)
    tangent = linalg.nullspace(left, n) if left else linalg.identity(n)
    quasi_symplectic = False
    matches: bool | None = None
    if tangent:
        # covectors dual to the tangent basis, extended by zero on its orthogonal complement
        gram = linalg.matmul(tangent, linalg.transpose(tangent, n))
        duals = linalg.matmul(linalg.inverse(gram), tangent)
        t_h = _block_diagonal(space.algebra.t_matrix, len(maps.mu_l))
        sigma_x = Tensor2.from_bivector(structure.pi_prime) + pair_extend(structure.rho_h, structure.rho_h, t_h).scale(
            Fraction(1, 2)
        )
        restricted = linalg.restrict_form(full_pairing(sigma_x, frame), duals, duals)
        quasi_symplectic = linalg.determinant(restricted) != 0
        if quasi_symplectic:
            lhs = linalg.sym_part(linalg.inverse(restricted))
            pushed = linalg.matmul(right, linalg.transpose(tangent, n))
            metric = _block_diagonal(space.algebra.metric, len(maps.mu_r))
            rhs = linalg.matmul(linalg.matmul(linalg.transpose(pushed, len(tangent)), metric), pushed)
            rhs = [[x / 2 for x in row] for row in rhs]
            matches = lhs == rhs
    logger.debug("moment check: equivariant=%s identity=%s symmetric=%s", equivariant, witness is None, matches)
    return MomentReport(equivariant, witness is None, quasi_symplectic, matches, witness)


@dataclass(frozen=True)
class MomentSpace:
    """An (h, d)-space over h = g_diag: pi', the g-action and a moment word into D/H = G."""

    algebra: QuadraticLieAlgebra
    n_sites: int
    pi: Multivector
    rho: tuple[Multivector, ...]
    mu: HolonomyWord
    group: GroupModel = "SL"
    side: Side = "left"

    def frame(self, point: GroupPoint) -> PointFrame:
        if len(point.sites) != self.n_sites:
            raise LayoutError(f"Point has {len(point.sites)} sites, space has {self.n_sites}.")
        return PointFrame(self.algebra, point)


def _invert(word: HolonomyWord) -> HolonomyWord:
    return tuple((s, -e) for s, e in reversed(word))


def disk_space(algebra: QuadraticLieAlgebra, pair: ManinPair | None = None, group: GroupModel = "SL") -> MomentSpace:
    """D/H itself: G under conjugation with moment map the identity."""
    pair = pair or diagonal_pair(algebra)
    dim = algebra.dim
    rho = [Multivector.generator(0, "L", i) for i in range(dim)]
    rho += [Multivector.generator(0, "R", i, Fraction(-1)) for i in range(dim)]
    diag = tuple(Multivector.generator(0, "L", i) - Multivector.generator(0, "R", i) for i in range(dim))
    return MomentSpace(algebra, 1, -action_extend(rho, pair.tau), diag, ((0, 1),), group)


def point_space(algebra: QuadraticLieAlgebra, group: GroupModel = "SL") -> MomentSpace:
    """The one-point space with moment map onto 1; the unit for fusion."""
    zero = tuple(Multivector.zero(1) for _ in range(algebra.dim))
    return MomentSpace(algebra, 0, Multivector.zero(2), zero, (), group)


def conjugate(space: MomentSpace) -> MomentSpace:
    """Reverse the bivector and the moment word; the slice moves to the other side."""
    return replace(
        space,
        pi=-space.pi,
        mu=_invert(space.mu),
        side="right" if space.side == "left" else "left",
    )


@dataclass
class InducedPair:
    """G x X with site 0 the D/H coordinate y; mu_L = y and mu_R = mu(x) y."""

    algebra: QuadraticLieAlgebra
    n_sites: int
    pi: Multivector
    copies: list[ActingCopy]
    mu_l: HolonomyWord
    mu_r: HolonomyWord
    group: GroupModel = "SL"

    @property
    def data(self) -> QuasiPoissonData:
        return to_data(self.algebra, self.n_sites, self.pi, self.copies, self.group)


def induce_central_pair(space: MomentSpace, pair: ManinPair | None = None) -> InducedPair:
    pair = pair or diagonal_pair(space.algebra)
    if space.side != "left":
        raise HypothesisError("left slice required", "conjugate the space first")
    dim = space.algebra.dim
    inner = [shift_sites(v, 1) for v in space.rho]
    plus = tuple(Multivector.generator(0, "L", i) for i in range(dim))
    minus = tuple(Multivector.generator(0, "R", i, Fraction(-1)) + inner[i] for i in range(dim))
    # the twist is pushed through the action with u^L replaced by u^R at the new site
    twisted = [Multivector.generator(0, "R", i) for i in range(dim)] + list(minus)
    pi = shift_sites(space.pi, 1) + action_extend(twisted, pair.tau)
    bar = compose(space.algebra, mode="bar")
    return InducedPair(
        algebra=space.algebra,
        n_sites=space.n_sites + 1,
        pi=pi,
        copies=[ActingCopy("+", space.algebra, plus), ActingCopy("-", bar, minus)],
        mu_l=((0, 1),),
        mu_r=tuple((s + 1, e) for s, e in space.mu) + ((0, 1),),
        group=space.group,
    )


def _with_base(point: GroupPoint, base: Sequence[Sequence[Fraction]]) -> GroupPoint:
    return GroupPoint(sites=(tuple(tuple(r) for r in base), *point.sites), group=point.group)


@dataclass
class RoundTripReport:
    pi_matches: bool
    action_matches: bool
    moment_matches: bool

    @property
    def ok(self) -> bool:
        return self.pi_matches and self.action_matches and self.moment_matches

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "pi_matches": self.pi_matches,
            "action_matches": self.action_matches,
            "moment_matches": self.moment_matches,
        }


def induction_round_trip(space: MomentSpace, point: GroupPoint, pair: ManinPair | None = None) -> RoundTripReport:
    """Slice the induced pair at y = 1 and compare with the space it came from."""
    pair = pair or diagonal_pair(space.algebra)
    induced = induce_central_pair(space, pair)
    size = len(point.sites[0])
    lifted = _with_base(point, linalg.identity(size))
    structure = restrict_structure(induced.data, pair)
    big = full_pairing(structure.pi_prime, induced.data.frame(lifted))
    small = full_pairing(space.pi, space.frame(point))
    dim = space.algebra.dim
    n = len(small)
    expected = linalg.zeros(n + dim, n + dim)
    for i, j in product(range(n), repeat=2):
        expected[dim + i][dim + j] = small[i][j]
    frame_big = induced.data.frame(lifted)
    frame_small = space.frame(point)
    action = all(
        frame_big.dense(structure.rho_h[i]) == [Fraction(0)] * dim + frame_small.dense(space.rho[i]) for i in range(dim)
    )
    moment = evaluate_word(induced.mu_r, lifted) == evaluate_word(space.mu, point)
    return RoundTripReport(big == expected, action, moment)


def _fibre_embedding(dim: int, n_sites: int, repeated: int) -> Matrix:
    """Frame map from n_sites sites into n_sites + 1 sites duplicating site `repeated`."""
    rows: Matrix = []
    for target in range(n_sites + 1):
        source = target if target <= repeated else target - 1
        for r in range(dim):
            row = [Fraction(0)] * (n_sites * dim)
            row[source * dim + r] = Fraction(1)
            rows.append(row)
    return rows


def _pushforward(jacobian: Sequence[Sequence[Fraction]], form: Sequence[Sequence[Fraction]]) -> Matrix:
    return linalg.matmul(linalg.matmul(jacobian, form), linalg.transpose(jacobian))


@dataclass
class ComparisonReport:
    on_target: bool
    pi_matches: bool
    action_matches: bool

    @property
    def ok(self) -> bool:
        return self.on_target and self.pi_matches and self.action_matches

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "on_target": self.on_target,
            "pi_matches": self.pi_matches,
            "action_matches": self.action_matches,
        }


def annulus_comparison(algebra: QuadraticLieAlgebra, point: GroupPoint, group: GroupModel = "SL") -> ComparisonReport:
    """The pair induced from D/H against the annulus, through (y, x) -> (y, x y)."""
    pair = diagonal_pair(algebra)
    induced = induce_central_pair(disk_space(algebra, pair, group), pair)
    annulus = build(named_recipe("annulus"), algebra, group)
    y, x = point.matrix(0), point.matrix(1)
    image = group_point([y, linalg.matmul(x, y)], group)
    dim = algebra.dim
    ad = adjoint_matrix(algebra, group_inverse(y))
    jacobian = linalg.zeros(2 * dim, 2 * dim)
    for i in range(dim):
        jacobian[i][i] = Fraction(1)
        jacobian[dim + i][i] = Fraction(1)
        for j in range(dim):
            jacobian[dim + i][dim + j] = ad[i][j]
    source = induced.data.frame(point)
    target = annulus.frame(image)
    pi_ok = _pushforward(jacobian, full_pairing(induced.pi, source)) == full_pairing(annulus.pi, target)
    pushed = linalg.matmul(jacobian, induced.data.rho_matrix(source))
    action_ok = pushed == annulus.data.rho_matrix(target)
    on_target = evaluate_word(induced.mu_r, point) == linalg.matmul(x, y)
    return ComparisonReport(on_target, pi_ok, action_ok)


def triple_fusion_check(algebra: QuadraticLieAlgebra, point: GroupPoint, group: GroupModel = "SL") -> ComparisonReport:
    """Two fused annuli restricted to the fibre (a, b, b, c) against the three-disk fusion at (a, b, c)."""
    annulus = build(named_recipe("annulus"), algebra, group)
    pants = build(named_recipe("pants"), algebra, group)
    fused = fuse_pair_data(annulus, annulus)
    a, b, c = point.matrix(0), point.matrix(1), point.matrix(2)
    lifted = group_point([a, b, b, c], group)
    size = len(a)
    on_fibre = evaluate_word(fused.mu_r.word + fused.nu_l.word, lifted) == linalg.identity(size)
    jacobian = _fibre_embedding(algebra.dim, 3, 1)
    ambient = fused.data.frame(lifted)
    small = pants.frame(point)
    pi_ok = _pushforward(jacobian, full_pairing(pants.pi, small)) == full_pairing(fused.data.pi, ambient)
    action_ok = linalg.matmul(jacobian, pants.data.rho_matrix(small)) == fused.data.rho_matrix(ambient)
    return ComparisonReport(on_fibre, pi_ok, action_ok)


@dataclass
class FusedMoment:
    """Fusion of two induced pairs over D/H, sliced at y1 = 1."""

    data: QuasiPoissonData
    pair: ManinPair
    first: MomentSpace
    second: MomentSpace
    offset: int

    @property
    def moment(self) -> HolonomyWord:
        """mu2(x2) mu1(x1) once y2 = mu1(x1)."""
        return tuple((s + self.offset + 1, e) for s, e in self.second.mu) + ((self.offset, 1),)

    @property
    def slice_words(self) -> list[HolonomyWord]:
        shifted = tuple((s + 1, e) for s, e in self.first.mu)
        return [((0, 1),), ((self.offset, 1),) + _invert(shifted)]

    def point(self, first: GroupPoint, second: GroupPoint) -> GroupPoint:
        size = len(first.sites[0])
        base = linalg.identity(size)
        image = evaluate_word(self.first.mu, first)
        sites = [base, *first.sites, image, *second.sites]
        return GroupPoint(sites=tuple(tuple(tuple(r) for r in s) for s in sites), group=first.group)


def fuse_moment_maps(first: MomentSpace, second: MomentSpace, pair: ManinPair | None = None) -> FusedMoment:
    if first.algebra != second.algebra:
        raise HypothesisError("incompatible algebras", f"{first.algebra.name} and {second.algebra.name}")
    pair = pair or diagonal_pair(first.algebra)
    one, two = induce_central_pair(first, pair), induce_central_pair(second, pair)
    n_sites, pi, copies = disjoint_union((one.n_sites, one.pi, one.copies), (two.n_sites, two.pi, two.copies))
    for i in range(len(one.copies)):
        pi, copies = internal_fusion(pi, copies, i, len(one.copies))
    data = to_data(first.algebra, n_sites, pi, copies, first.group)
    return FusedMoment(data, pair, first, second, one.n_sites)


@dataclass
class FusedMomentReport:
    identities: TwistedIdentityReport
    tangent: bool
    moment_identity: bool
    witness: dict[str, Any] | None = None

    @property
    def ok(self) -> bool:
        return self.identities.ok and self.tangent and self.moment_identity

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "identities": self.identities.as_dict(),
            "tangent": self.tangent,
            "moment_identity": self.moment_identity,
            "witness": self.witness,
        }


def check_fused_moment(fused: FusedMoment, point: GroupPoint) -> FusedMomentReport:
    structure = restrict_structure(fused.data, fused.pair)
    identities = check_twisted_identities(structure, point)
    frame = fused.data.frame(point)
    bivector = full_pairing(structure.pi_prime, frame)
    conormal: Matrix = []
    for word in fused.slice_words:
        conormal.extend(word_differential(fused.data.algebra, word, point))
    action = [frame.dense(v) for v in structure.rho_h]
    tangent = all(not any(linalg.vec_mat(alpha, bivector)) for alpha in conormal) and all(
        not linalg.dot(alpha, v) for alpha in conormal for v in action
    )
    witness = _moment_identity(structure, frame, word_differential(fused.data.algebra, fused.moment, point))
    return FusedMomentReport(identities, tangent, witness is None, witness)


def conjugation_check(space: ModuliSpace, point: GroupPoint) -> TwistedIdentityReport:
    """The reversed moduli space with the conjugate split satisfies the twisted identities."""
    pair = slice_pair(space, "left")
    return check_twisted_identities(restrict_structure(conjugate_data(space.data), conjugate_pair(pair)), point)
