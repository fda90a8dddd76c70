from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from pydantic import ValidationError

from qpmoduli import schemas
from qpmoduli.config import get_settings
from qpmoduli.services import linalg
from qpmoduli.services.kernels import run_kernel_suite
from qpmoduli.services.catalog import diagonal, get_algebra, get_subspace
from qpmoduli.services.homology import LocalSystem, cross_check, resplit_invariance
from qpmoduli.services.invcalc import GroupPoint, LayoutError, invariance_defects, jacobiator_defect
from qpmoduli.services.moduli import (
    ModuliSpace,
    build,
    central_maps,
    check_centrality,
    leaf_ranks,
    leaf_stabilizer_report,
    sigma_inverse_on_leaves,
    slice_points,
)
from qpmoduli.services.momentmap import (
    annulus_comparison,
    change_complement,
    check_fused_moment,
    check_twisted_identities,
    conjugation_check,
    disk_space,
    fuse_moment_maps,
    induction_round_trip,
    leaf_structure_check,
    ManinPair,
    manin_pair_data,
    moment_condition_check,
    restrict_structure,
    slice_pair,
    triple_fusion_check,
)
from qpmoduli.services.points import gen_points
from qpmoduli.services.qla import (
    AlgebraError,
    HypothesisError,
    QuadraticLieAlgebra,
    cartan_trivector,
    load_algebra,
    validate_algebra,
)
from qpmoduli.services.reduction import (
    TransversalityError,
    central_reduction_at,
    partial_reduction_at,
    symplectic_leaf_check,
)
from qpmoduli.services.surface import RecipeError, SurfaceRecipe, named_recipe, parse_recipe

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """A suite config that cannot be parsed or whose references do not resolve."""


@dataclass
class Suite:
    config: schemas.SuiteConfig
    algebra: QuadraticLieAlgebra
    space: ModuliSpace
    seed: int
    points: int

    def sample(self) -> list[GroupPoint]:
        return self.space.points(self.seed, self.points)


def load_config(path: Path) -> schemas.SuiteConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(document, str(path))


def parse_config(document: Any, where: str = "config") -> schemas.SuiteConfig:
    try:
        return schemas.SuiteConfig.model_validate(document)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(x) for x in first["loc"])
        raise ConfigError(f"{where}: {location}: {first['msg']}") from exc


def resolve_algebra(ref: str | dict[str, Any]) -> QuadraticLieAlgebra:
    try:
        return get_algebra(ref) if isinstance(ref, str) else load_algebra(ref)
    except AlgebraError as exc:
        raise ConfigError(str(exc)) from exc


def resolve_recipe(ref: str | schemas.RecipeIn) -> SurfaceRecipe:
    try:
        return named_recipe(ref) if isinstance(ref, str) else parse_recipe(ref.model_dump(exclude_none=True))
    except RecipeError as exc:
        raise ConfigError(str(exc)) from exc


def prepare(
    config: schemas.SuiteConfig,
    seed: int | None = None,
    points: int | None = None,
    checks: list[str] | None = None,
) -> Suite:
    settings = get_settings()
    algebra = resolve_algebra(config.algebra)
    try:
        space = build(resolve_recipe(config.surface), algebra, config.group)
    except (RecipeError, LayoutError) as exc:
        raise ConfigError(str(exc)) from exc
    if checks:
        unknown = [c for c in checks if c not in CHECKS]
        if unknown:
            raise ConfigError(f"Unknown checks: {', '.join(unknown)}")
        config = config.model_copy(update={"checks": checks})
    return Suite(
        config=config,
        algebra=algebra,
        space=space,
        seed=seed if seed is not None else (config.seed if config.seed is not None else settings.default_seed),
        points=points or config.points or settings.points_per_check,
    )


def _witness(suite: Suite, index: int, point: GroupPoint, **detail: Any) -> dict[str, Any]:
    return {"seed": suite.seed, "point_index": index, "point": point.as_dict(), **detail}


def _result(name: str, checked: int, witness: dict[str, Any] | None = None, **detail: Any) -> schemas.CheckResult:
    return schemas.CheckResult(name=name, ok=witness is None, points_checked=checked, detail=detail, witness=witness)


def check_quasi_poisson(suite: Suite) -> schemas.CheckResult:
    validation = validate_algebra(suite.algebra)
    if not validation.ok:
        return _result("quasi_poisson", 0, {"seed": suite.seed, "algebra": validation.as_dict()})
    data = suite.space.data
    phi = cartan_trivector(data.acting)
    for index, point in enumerate(suite.sample()):
        frame = data.frame(point)
        defect = jacobiator_defect(data, phi, frame)
        if not defect.is_zero():
            return _result("quasi_poisson", index + 1, _witness(suite, index, point, jacobiator=defect.as_dict()))
        broken = invariance_defects(data, frame)
        if broken:
            k, value = broken[0]
            return _result("quasi_poisson", index + 1, _witness(suite, index, point, basis=k, invariance=value.as_dict()))
    return _result("quasi_poisson", suite.points, terms=len(data.pi.terms))


def check_centrality_suite(suite: Suite) -> schemas.CheckResult:
    counts = {"left": 0, "right": 0}
    for index, point in enumerate(suite.sample()):
        report = check_centrality(suite.space, point)
        counts["left"] += report.left_checked
        counts["right"] += report.right_checked
        if not report.ok:
            return _result("centrality", index + 1, _witness(suite, index, point, **(report.witness or {})))
    return _result("centrality", suite.points, covectors=counts)


def check_leaves(suite: Suite) -> schemas.CheckResult:
    ranks: list[dict[str, Any]] = []
    for index, point in enumerate(suite.sample()):
        report = leaf_ranks(suite.space, point)
        ranks.append(report.as_dict())
        if not report.theorem_holds:
            return _result("leaves", index + 1, _witness(suite, index, point, ranks=report.as_dict()))
        stabilizers = leaf_stabilizer_report(suite.space, point)
        if not all(s.coisotropic for s in stabilizers):
            return _result(
                "leaves", index + 1, _witness(suite, index, point, stabilizers=[s.as_dict() for s in stabilizers])
            )
        try:
            pairing = sigma_inverse_on_leaves(suite.space, point)
        except ValueError as exc:
            return _result("leaves", index + 1, _witness(suite, index, point, error=str(exc)))
        if not (pairing.nondegenerate and pairing.choice_independent):
            return _result("leaves", index + 1, _witness(suite, index, point, pairing=pairing.as_dict()))
    return _result("leaves", suite.points, ranks=ranks)


def check_homology(suite: Suite) -> schemas.CheckResult:
    points = suite.sample()
    for index, point in enumerate(points):
        report = cross_check(suite.space, point)
        if not report.ok:
            return _result("homology_crosscheck", index + 1, _witness(suite, index, point, **report.as_dict()))
    split = resplit_invariance(suite.space, LocalSystem(suite.algebra, points[0]))
    if not split.invariant:
        return _result("homology_crosscheck", len(points), _witness(suite, 0, points[0], resplit=split.as_dict()))
    return _result("homology_crosscheck", len(points), splits_checked=split.splits_checked)


def check_reduce(suite: Suite) -> schemas.CheckResult:
    options = suite.config.reduction or schemas.ReductionOptions()
    acting = suite.space.data.acting
    try:
        c = get_subspace(options.subalgebra, acting)
    except AlgebraError as exc:
        raise ConfigError(str(exc)) from exc
    if options.ideal is not None:
        h = get_subspace(options.ideal, acting)
        for index, point in enumerate(suite.sample()):
            partial = partial_reduction_at(suite.space.data, c, h, point)
            if not partial.ok:
                return _result("reduce", index + 1, _witness(suite, index, point, partial=partial.as_dict()))
        return _result("reduce", suite.points, partial=partial.as_dict())
    dims: list[int] = []
    for index, point in enumerate(suite.sample()):
        try:
            reduced = central_reduction_at(suite.space, c, point, options.include_uncut)
        except TransversalityError as exc:
            return _result("reduce", index + 1, _witness(suite, index, point, transversality=exc.as_dict()))
        dims.append(reduced.dim)
        expected = options.expect_dim
        if not reduced.ok or (expected is not None and reduced.dim != expected):
            return _result("reduce", index + 1, _witness(suite, index, point, reduced=reduced.as_dict()))
        if options.leaf_check:
            verdict = symplectic_leaf_check(suite.space, c, point)
            if not verdict.ok:
                return _result("reduce", index + 1, _witness(suite, index, point, leaf=verdict.as_dict()))
    return _result("reduce", suite.points, reduced_dims=dims)


def _momentmap_pair(suite: Suite, complement: str) -> tuple[ManinPair, bool]:
    space = suite.space
    if not space.analysis.uncut:
        try:
            return slice_pair(space, "left"), True
        except HypothesisError:
            pass
    acting = space.data.acting
    if acting.dim != 2 * suite.algebra.dim:
        raise HypothesisError("no Manin pair", f"acting algebra of dim {acting.dim} is not a double")
    return manin_pair_data(acting, diagonal(acting), get_subspace(complement, acting)), False


def check_momentmap(suite: Suite) -> schemas.CheckResult:
    options = suite.config.momentmap or schemas.MomentMapOptions()
    space = suite.space
    try:
        pair, sliced = _momentmap_pair(suite, options.complement)
    except (HypothesisError, AlgebraError) as exc:
        raise ConfigError(f"momentmap: {exc}") from exc
    structure = restrict_structure(space.data, pair)
    if sliced:
        words = [w.word for w in central_maps(space).mu_l]
        points = slice_points(space, words, suite.points, suite.seed)
    else:
        points = suite.sample()
    for index, point in enumerate(points):
        identities = check_twisted_identities(structure, point)
        if not identities.ok:
            return _result("momentmap", index + 1, _witness(suite, index, point, identities=identities.as_dict()))
        if not sliced:
            continue
        leaf = leaf_structure_check(space, point)
        moment = moment_condition_check(space, point)
        conjugate = conjugation_check(space, point)
        if not (leaf.ok and moment.ok and conjugate.ok):
            detail = {"leaf": leaf.as_dict(), "moment": moment.as_dict(), "conjugate": conjugate.as_dict()}
            return _result("momentmap", index + 1, _witness(suite, index, point, **detail))
    detail: dict[str, Any] = {"pair": pair.as_dict(), "sliced": sliced}
    if options.second_complement is not None:
        other = manin_pair_data(pair.double, pair.h, get_subspace(options.second_complement, pair.double))
        change = change_complement(space.data, pair, other)
        detail["complement_change"] = change.as_dict()
        if not (change.in_wedge_h and change.relation_holds):
            return _result("momentmap", len(points), {"seed": suite.seed, **detail})
    if options.induction:
        induction = _induction_checks(suite)
        detail["induction"] = induction
        if not all(entry["ok"] for entry in induction.values()):
            return _result("momentmap", len(points), {"seed": suite.seed, "induction": induction})
    return _result("momentmap", len(points), **detail)


def _induction_checks(suite: Suite) -> dict[str, dict[str, Any]]:
    algebra, group, seed = suite.algebra, suite.config.group, suite.seed
    base = disk_space(algebra, group=group)
    out: dict[str, dict[str, Any]] = {}
    for point in gen_points(seed, 1, suite.points, group):
        report = induction_round_trip(base, point)
        out["round_trip"] = report.as_dict()
        if not report.ok:
            return out
    for point in gen_points(seed, 2, suite.points, group):
        report = annulus_comparison(algebra, point, group)
        out["annulus"] = report.as_dict()
        if not report.ok:
            return out
    for point in gen_points(seed, 3, suite.points, group):
        report = triple_fusion_check(algebra, point, group)
        out["triple_fusion"] = report.as_dict()
        if not report.ok:
            return out
    fused = fuse_moment_maps(base, base)
    for first, second in zip(gen_points(seed, 1, suite.points, group), gen_points(seed + 1, 1, suite.points, group)):
        report = check_fused_moment(fused, fused.point(first, second))
        out["fused"] = report.as_dict()
        if not report.ok:
            return out
    return out


def check_appendix(suite: Suite) -> schemas.CheckResult:
    settings = get_settings()
    report = run_kernel_suite(suite.seed, settings.appendix_instances, settings.appendix_max_dim)
    witness = None if report.ok else {"seed": suite.seed, **report.as_dict()}
    return schemas.CheckResult(
        name="appendix", ok=report.ok, points_checked=report.instances, detail=report.as_dict(), witness=witness
    )


CHECKS: dict[str, Callable[[Suite], schemas.CheckResult]] = {
    "quasi_poisson": check_quasi_poisson,
    "centrality": check_centrality_suite,
    "leaves": check_leaves,
    "homology_crosscheck": check_homology,
    "reduce": check_reduce,
    "momentmap": check_momentmap,
    "appendix": check_appendix,
}


def run_suite(suite: Suite, timing: bool = False) -> schemas.Report:
    settings = get_settings()
    started = time.perf_counter()
    results: list[schemas.CheckResult] = []
    for name in sorted(set(suite.config.checks)):
        if name not in settings.enabled_checks:
            logger.info("Skipping disabled check %s", name)
            continue
        logger.info("Running %s on %s (%d points, seed=%d)", name, suite.config.name, suite.points, suite.seed)
        result = CHECKS[name](suite)
        if not result.ok:
            logger.warning("Check %s failed: %s", name, sorted((result.witness or {}).keys()))
        results.append(result)
    expected = set(suite.config.expect_failure)
    ok = all(r.ok != (r.name in expected) for r in results)
    return schemas.Report(
        config=suite.config.name,
        algebra=suite.algebra.name,
        surface=suite.space.analysis.as_dict(),
        seed=suite.seed,
        points=suite.points,
        ok=ok,
        checks=results,
        elapsed_ms=int((time.perf_counter() - started) * 1000) if timing else None,
    )


def dump_report(report: schemas.Report) -> str:
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2)


def describe(suite: Suite) -> dict[str, Any]:
    space = suite.space
    return {
        "config": suite.config.name,
        "space": space.as_dict(),
        "analysis": space.analysis.as_dict(),
        "central_maps": central_maps(space).as_dict(),
        "acting_rank": linalg.rank(space.data.acting.t_matrix, space.data.acting.dim),
    }
