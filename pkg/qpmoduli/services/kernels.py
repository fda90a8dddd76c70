"""Kernel formulas for restricted pairings, each checked against a brute-force nullspace."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from qpmoduli.services import linalg
from qpmoduli.services.linalg import Matrix

logger = logging.getLogger(__name__)


class LagrangianError(ValueError):
    pass


def _restricted_kernel(form: Matrix, basis: Matrix, ncols: int) -> Matrix:
    """Vectors of span(basis) pairing to zero with all of span(basis) under a skew form."""
    if not basis:
        return []
    gram = linalg.restrict_form(form, basis, basis)
    coeffs = linalg.nullspace(gram, len(basis))
    vectors = [linalg.vec_mat(c, basis) for c in coeffs]
    return linalg.span_basis(vectors, ncols) if vectors else []


@dataclass
class LagrangianKernelReport:
    formula: Matrix
    oracle: Matrix
    equal: bool

    def as_dict(self) -> dict[str, Any]:
        return {"formula_dim": len(self.formula), "oracle_dim": len(self.oracle), "equal": self.equal}


def pairing_forms(pairing: Sequence[Sequence[Fraction]]) -> tuple[Matrix, Matrix]:
    """(sym, skew) forms on U ⊕ U' for <u, beta> = u^T P beta."""
    k = len(pairing)
    sym = linalg.zeros(2 * k, 2 * k)
    skew = linalg.zeros(2 * k, 2 * k)
    for i in range(k):
        for j in range(k):
            value = pairing[i][j]
            sym[i][k + j] = value
            sym[k + j][i] = value
            skew[i][k + j] = value
            skew[k + j][i] = -value
    return sym, skew


def lagrangian_kernel(pairing: Sequence[Sequence[Fraction]], lagrangian: Sequence[Sequence[Fraction]]) -> LagrangianKernelReport:
    k = len(pairing)
    n = 2 * k
    if linalg.rank(pairing, k) != k:
        raise LagrangianError("pairing is degenerate")
    basis = linalg.span_basis(lagrangian, n)
    sym, skew = pairing_forms(pairing)
    orth = linalg.nullspace(linalg.matmul(basis, sym), n) if basis else linalg.identity(n)
    if not linalg.same_span(orth, basis, n):
        raise LagrangianError("L not Lagrangian")
    u = [[Fraction(int(i == j)) for j in range(n)] for i in range(k)]
    u_dual = [[Fraction(int(i + k == j)) for j in range(n)] for i in range(k)]
    parts = [*linalg.intersect(basis, u, n), *linalg.intersect(basis, u_dual, n)]
    formula = linalg.span_basis(parts, n) if parts else []
    oracle = _restricted_kernel(skew, basis, n)
    return LagrangianKernelReport(formula, oracle, linalg.same_span(formula, oracle, n) if (formula or oracle) else True)


@dataclass
class PreimageKernelReport:
    domain: Matrix
    formula: Matrix
    oracle: Matrix
    equal: bool
    reduced_nondegenerate: bool
    hypotheses: dict[str, bool] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return {
            "domain_dim": len(self.domain),
            "formula_dim": len(self.formula),
            "oracle_dim": len(self.oracle),
            "equal": self.equal,
            "reduced_nondegenerate": self.reduced_nondegenerate,
            "hypotheses": dict(sorted(self.hypotheses.items())),
        }


def preimage_kernel(
    sigma: Sequence[Sequence[Fraction]],
    t: Sequence[Sequence[Fraction]],
    f: Sequence[Sequence[Fraction]],
    c_basis: Sequence[Sequence[Fraction]],
) -> PreimageKernelReport:
    """Kernel of sigma on f^-1(C); f maps V (columns) to W (rows)."""
    n = len(sigma)
    m = len(t)
    quadratic = [[value / 2 for value in row] for row in linalg.matmul(linalg.transpose(f, n), linalg.matmul(t, f))] if m else linalg.zeros(n, n)
    c_rows = linalg.span_basis(c_basis, m) if c_basis else []
    v_left = linalg.left_nullspace(sigma, n, n)
    v_right = linalg.nullspace(sigma, n)
    ker_f = linalg.nullspace(f, n) if m else linalg.identity(n)
    hypotheses = {
        "quadratic_identity": linalg.sym_part(sigma) == quadratic,
        "t_nondegenerate": linalg.rank(t, m) == m,
        "c_lagrangian": 2 * len(c_rows) == m and linalg.is_zero_matrix(linalg.restrict_form(t, c_rows, c_rows)),
        "v_left_half_dim": 2 * len(v_left) == m,
        "v_left_meets_ker_f": bool(v_left and ker_f and linalg.intersect(v_left, ker_f, n)),
    }
    if not hypotheses["quadratic_identity"]:
        raise LagrangianError("quadratic identity sigma(v,v) = t(f v, f v)/2 fails")
    if not hypotheses["t_nondegenerate"]:
        raise LagrangianError("t is degenerate")
    if not hypotheses["c_lagrangian"]:
        raise LagrangianError("C not t-Lagrangian")
    if not hypotheses["v_left_half_dim"]:
        raise LagrangianError(f"dim V_L != dim W / 2 ({len(v_left)} vs {m // 2})")
    if hypotheses["v_left_meets_ker_f"]:
        raise LagrangianError("V_L meets ker f")

    ann_c = linalg.nullspace(c_rows, m) if c_rows else linalg.identity(m)
    constraint = linalg.matmul(ann_c, f) if ann_c else []
    domain = linalg.nullspace(constraint, n) if constraint else linalg.identity(n)
    parts = []
    if domain:
        parts = [*linalg.intersect(v_left, domain, n), *linalg.intersect(v_right, domain, n)]
    formula = linalg.span_basis(parts, n) if parts else []
    oracle = _restricted_kernel(linalg.skew_part(sigma), domain, n) if domain else []
    complement = linalg.complement_basis(oracle, domain, n) if domain else []
    reduced = linalg.restrict_form(sigma, complement, complement)
    nondegenerate = not reduced or linalg.rank(reduced, len(reduced)) == len(reduced)
    equal = linalg.same_span(formula, oracle, n) if (formula or oracle) else True
    return PreimageKernelReport(
        domain=domain,
        formula=formula,
        oracle=oracle,
        equal=equal,
        reduced_nondegenerate=nondegenerate,
        hypotheses=hypotheses,
    )


def _rational(rng: np.random.Generator, bound: int = 5) -> Fraction:
    return Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, 4)))


def _random_matrix(rng: np.random.Generator, rows: int, cols: int) -> Matrix:
    return [[_rational(rng) for _ in range(cols)] for _ in range(rows)]


def _random_invertible(rng: np.random.Generator, n: int) -> Matrix:
    while True:
        mat = _random_matrix(rng, n, n)
        if linalg.rank(mat, n) == n:
            return mat


def _random_skew(rng: np.random.Generator, n: int) -> Matrix:
    out = linalg.zeros(n, n)
    for i in range(n):
        for j in range(i + 1, n):
            value = _rational(rng)
            out[i][j] = value
            out[j][i] = -value
    return out


@dataclass
class LagrangianInstance:
    pairing: Matrix
    lagrangian: Matrix


def random_lagrangian_instance(rng: np.random.Generator, max_dim: int) -> LagrangianInstance:
    """Lagrangian for the symmetric form: pieces of U, of U', and a skew graph, mixed by GL(U)."""
    k = int(rng.integers(1, max(max_dim // 2, 1) + 1))
    r1 = int(rng.integers(0, k + 1))
    r2 = int(rng.integers(0, k - r1 + 1))
    rest = list(range(r1 + r2, k))
    x = _random_skew(rng, len(rest))
    rows: Matrix = []
    for i in range(r1):
        rows.append([Fraction(int(j == i)) for j in range(2 * k)])
    for i in range(r1, r1 + r2):
        rows.append([Fraction(int(j == k + i)) for j in range(2 * k)])
    for a, i in enumerate(rest):
        row = [Fraction(0)] * (2 * k)
        row[i] = Fraction(1)
        for b, j in enumerate(rest):
            row[k + j] = x[b][a]
        rows.append(row)
    g = _random_invertible(rng, k)
    g_dual = linalg.transpose(linalg.inverse(g))
    pairing = _random_invertible(rng, k)
    # identity-pairing model -> (G u, P^-1 G^-T alpha)
    dual_map = linalg.matmul(linalg.inverse(pairing), g_dual)
    mixed = []
    for row in rows:
        u, alpha = row[:k], row[k:]
        mixed.append([*linalg.mat_vec(g, u), *linalg.mat_vec(dual_map, alpha)])
    return LagrangianInstance(pairing, mixed)


@dataclass
class PreimageInstance:
    sigma: Matrix
    t: Matrix
    f: Matrix
    c_basis: Matrix


def random_preimage_instance(rng: np.random.Generator, max_dim: int) -> PreimageInstance:
    """Draw until the left kernel of sigma is exactly K and meets ker f trivially."""
    while True:
        instance = _draw_preimage_instance(rng, max_dim)
        n = len(instance.sigma)
        v_left = linalg.left_nullspace(instance.sigma, n, n)
        ker_f = linalg.nullspace(instance.f, n)
        if 2 * len(v_left) != len(instance.t):
            continue
        if not (v_left and ker_f and linalg.intersect(v_left, ker_f, n)):
            return instance


def _draw_preimage_instance(rng: np.random.Generator, max_dim: int) -> PreimageInstance:
    """sigma = S + f^T t f / 2 with a prescribed h-dimensional left kernel K mapped by f onto an isotropic subspace."""
    h = int(rng.integers(1, max(max_dim // 2, 1) + 1))
    m = 2 * h
    n = int(rng.integers(h, max(max_dim, h) + 1))
    k1 = h
    t0 = linalg.zeros(m, m)
    for i in range(h):
        t0[i][h + i] = Fraction(1)
        t0[h + i][i] = Fraction(1)
    g = _random_invertible(rng, m)
    g_inv = linalg.inverse(g)
    t = linalg.matmul(linalg.transpose(g), linalg.matmul(t0, g))
    c_basis = [linalg.mat_vec(g_inv, [Fraction(int(j == i)) for j in range(m)]) for i in range(h)]

    # f in the t0 frame: K -> span(e_h .. e_{h+k1-1}) injectively, the rest random
    f0 = _random_matrix(rng, m, n)
    for col in range(k1):
        for row in range(m):
            f0[row][col] = Fraction(int(row == h + col))
    f = linalg.matmul(g_inv, f0)
    quad = [[v / 2 for v in row] for row in linalg.matmul(linalg.transpose(f, n), linalg.matmul(t, f))]
    s = _random_skew(rng, n)
    for i in range(k1):
        for j in range(n):
            s[i][j] = -quad[i][j]
            s[j][i] = quad[i][j]
    for i in range(k1):
        for j in range(k1):
            s[i][j] = Fraction(0)
    sigma = [[s[i][j] + quad[i][j] for j in range(n)] for i in range(n)]
    b = _random_invertible(rng, n)
    sigma = linalg.matmul(linalg.transpose(b), linalg.matmul(sigma, b))
    f = linalg.matmul(f, b)
    return PreimageInstance(sigma, t, f, c_basis)


@dataclass
class KernelSuite:
    instances: int
    lagrangian_failures: list[int]
    preimage_failures: list[int]

    @property
    def ok(self) -> bool:
        return not self.lagrangian_failures and not self.preimage_failures

    def as_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "instances": self.instances,
            "lagrangian_failures": self.lagrangian_failures,
            "preimage_failures": self.preimage_failures,
        }


def run_kernel_suite(seed: int, instances: int, max_dim: int) -> KernelSuite:
    rng = np.random.default_rng(seed)
    lagrangian_misses: list[int] = []
    preimage_misses: list[int] = []
    for index in range(instances):
        lagrangian = random_lagrangian_instance(rng, max_dim)
        if not lagrangian_kernel(lagrangian.pairing, lagrangian.lagrangian).equal:
            lagrangian_misses.append(index)
        preimage = random_preimage_instance(rng, max_dim)
        try:
            if not preimage_kernel(preimage.sigma, preimage.t, preimage.f, preimage.c_basis).equal:
                preimage_misses.append(index)
        except LagrangianError as exc:
            logger.warning("Instance %d violates a hypothesis: %s", index, exc)
            preimage_misses.append(index)
    return KernelSuite(instances, lagrangian_misses, preimage_misses)
