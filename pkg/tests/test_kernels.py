from fractions import Fraction

import numpy as np
import pytest

from qpmoduli.services import linalg
from qpmoduli.services.kernels import (
    LagrangianError,
    lagrangian_kernel,
    preimage_kernel,
    random_lagrangian_instance,
    random_preimage_instance,
    run_kernel_suite,
)

F = Fraction


def test_graph_lagrangian_kernel() -> None:
    # L = span(u1, beta2) in U ⊕ U' with the identity pairing
    lagrangian = [[F(1), F(0), F(0), F(0)], [F(0), F(0), F(0), F(1)]]
    report = lagrangian_kernel(linalg.identity(2), lagrangian)
    assert report.equal
    assert len(report.formula) == 2


def test_non_lagrangian_is_rejected() -> None:
    with pytest.raises(LagrangianError, match="not Lagrangian"):
        lagrangian_kernel(linalg.identity(2), [[F(1), F(0), F(1), F(0)], [F(0), F(1), F(0), F(0)]])
    with pytest.raises(LagrangianError, match="degenerate"):
        lagrangian_kernel([[F(1), F(1)], [F(1), F(1)]], [])


def test_preimage_kernel_checks_the_quadratic_identity() -> None:
    sigma = [[F(1)]]
    t = [[F(0), F(1)], [F(1), F(0)]]
    f = [[F(1)], [F(0)]]
    with pytest.raises(LagrangianError, match="quadratic identity"):
        preimage_kernel(sigma, t, f, [[F(1), F(0)]])


def test_random_instances_satisfy_both_formulas() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(10):
        one = random_lagrangian_instance(rng, 6)
        assert lagrangian_kernel(one.pairing, one.lagrangian).equal
        two = random_preimage_instance(rng, 6)
        report = preimage_kernel(two.sigma, two.t, two.f, two.c_basis)
        assert report.equal, report.as_dict()


def test_kernel_suite_is_reproducible() -> None:
    first = run_kernel_suite(7, 12, 6)
    assert first.ok, first.as_dict()
    assert first.as_dict() == run_kernel_suite(7, 12, 6).as_dict()


def test_preimage_kernel_needs_a_half_dimensional_left_kernel() -> None:
    # sigma = 0 on a line mapped onto an isotropic line of a 2-dim W: V_L = V has dim 1
    t = [[F(0), F(1)], [F(1), F(0)]]
    report = preimage_kernel([[F(0)]], t, [[F(1)], [F(0)]], [[F(1), F(0)]])
    assert report.hypotheses["v_left_half_dim"]
    # a 2-dim V with sigma of rank 2 has no left kernel
    sigma = [[F(0), F(1)], [F(-1), F(0)]]
    with pytest.raises(LagrangianError, match=r"dim V_L != dim W / 2"):
        preimage_kernel(sigma, t, [[F(0), F(0)], [F(0), F(0)]], [[F(1), F(0)]])


def test_random_preimage_instances_meet_every_hypothesis() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(40):
        instance = random_preimage_instance(rng, 6)
        n = len(instance.sigma)
        assert 2 * len(linalg.left_nullspace(instance.sigma, n, n)) == len(instance.t)
        report = preimage_kernel(instance.sigma, instance.t, instance.f, instance.c_basis)
        assert all(value for key, value in report.hypotheses.items() if key != "v_left_meets_ker_f")
        assert not report.hypotheses["v_left_meets_ker_f"]
        assert report.equal, report.as_dict()
