"""Seeded exact points on products of SL(2) / GL(2)."""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Sequence

import numpy as np

from qpmoduli.config import get_settings
from qpmoduli.services import linalg
from qpmoduli.services.invcalc import GroupModel, GroupPoint, group_point
from qpmoduli.services.linalg import Matrix

logger = logging.getLogger(__name__)


def _shear(upper: bool, value: Fraction) -> Matrix:
    if upper:
        return [[Fraction(1), value], [Fraction(0), Fraction(1)]]
    return [[Fraction(1), Fraction(0)], [value, Fraction(1)]]


def _rational(rng: np.random.Generator, bound: int, nonzero: bool = True) -> Fraction:
    num = 0
    while num == 0:
        num = int(rng.integers(-bound, bound + 1))
        if not nonzero:
            break
    den = int(rng.integers(1, bound + 1))
    return Fraction(num, den)


def random_matrix(
    rng: np.random.Generator,
    group: GroupModel = "SL",
    shear_min: int | None = None,
    shear_max: int | None = None,
    bound: int | None = None,
) -> Matrix:
    """Product of alternating upper/lower shears; GL points get an extra diagonal factor."""
    settings = get_settings()
    lo = shear_min if shear_min is not None else settings.shear_min
    hi = shear_max if shear_max is not None else settings.shear_max
    bnd = bound if bound is not None else settings.shear_bound
    count = int(rng.integers(lo, hi + 1))
    upper = bool(rng.integers(0, 2))
    out = linalg.identity(2)
    for _ in range(count):
        out = linalg.matmul(out, _shear(upper, _rational(rng, bnd)))
        upper = not upper
    if group == "GL":
        scale = _rational(rng, bnd)
        out = linalg.matmul(out, [[scale, Fraction(0)], [Fraction(0), Fraction(1)]])
    return out


def gen_points(seed: int, n_sites: int, n: int, group: GroupModel = "SL") -> list[GroupPoint]:
    rng = np.random.default_rng(seed)
    points = [group_point([random_matrix(rng, group) for _ in range(n_sites)], group) for _ in range(n)]
    logger.debug("Generated %d points on %d sites (seed=%d)", n, n_sites, seed)
    return points


def group_inverse(mat: Sequence[Sequence[Fraction]]) -> Matrix:
    return linalg.inverse(mat)


def product_of(factors: Sequence[Sequence[Sequence[Fraction]]], size: int = 2) -> Matrix:
    out = linalg.identity(size)
    for factor in factors:
        out = linalg.matmul(out, factor)
    return out


def matrix_power(mat: Sequence[Sequence[Fraction]], k: int) -> Matrix:
    out = linalg.identity(len(mat))
    for _ in range(k):
        out = linalg.matmul(out, mat)
    return out


def trace(mat: Sequence[Sequence[Fraction]]) -> Fraction:
    return sum((mat[i][i] for i in range(len(mat))), Fraction(0))


def is_regular_semisimple(mat: Sequence[Sequence[Fraction]]) -> bool:
    """2x2 test: distinct eigenvalues, i.e. nonzero discriminant."""
    tr = trace(mat)
    det = linalg.determinant(mat)
    return tr * tr - 4 * det != 0
