import math

import numpy as np
import pytest

from muntzkit.errors import (InvalidArgument, OutOfScopeError, PhaseSeparationError,
                             PreconditionViolation)
from muntzkit.funcrep import IntervalFunction, integrate
from muntzkit.indexsets import Arithmetic, Explicit, PowerOfIndex, Union
from muntzkit.modulation import (ModulatedSystem, branch_transport, build_modulated_annihilator,
                                 cos_sin_residuals, density_verdict_modulated, exact_annihilator,
                                 residuals_csv, singularity_exponent, two_system_residuals)
from muntzkit.muntz import annihilation_residuals, pushforward
from muntzkit.psipower import named_map
from muntzkit.realnum import Rational

EVENS = Explicit(tuple(range(0, 21, 2)))


def fn(a, b, ev, **kw):
    return IntervalFunction(a, b, ev, **kw)


def cos_system(family=Arithmetic(0, 1), family_mod=Arithmetic(0, 1), alpha=Rational(1, 4), **kw):
    return ModulatedSystem(named_map("cos_pi", -0.5, 0.5), family, family_mod, alpha=alpha, **kw)


def test_system_preconditions():
    with pytest.raises(OutOfScopeError):
        cos_system(p=1)
    with pytest.raises(OutOfScopeError):
        cos_system(p=0.5)
    assert cos_system(p="Sup").p == "Sup"
    with pytest.raises(PreconditionViolation):
        ModulatedSystem(named_map("cos_pi", 0, 1), Arithmetic(0, 1), Arithmetic(0, 1), alpha=0.25)
    with pytest.raises(InvalidArgument):
        ModulatedSystem(named_map("cos_pi", -0.5, 0.5), Arithmetic(0, 1), Arithmetic(0, 1))


def test_branch_transport_moment_identity():
    sys_ = cos_system()
    for f in (fn(-0.5, 0.5, lambda t: np.cos(2 * np.pi * t)), fn(-0.5, 0.5, lambda t: np.exp(t) + t * t)):
        g, gt = branch_transport(f, sys_)
        for lam in range(11):
            lhs = integrate(fn(-0.5, 0.5, lambda t: f(t) * np.cos(np.pi * t) ** lam)).value
            rhs = integrate(fn(g.a, g.b, lambda y: g(y) * y ** lam, singularities=g.singularities)).value
            assert abs(lhs - rhs) < 1e-9
            lhs = integrate(fn(-0.5, 0.5, lambda t: f(t) * np.exp(0.25j * t)
                               * np.cos(np.pi * t) ** lam)).value
            rhs = integrate(fn(g.a, g.b, lambda y: gt(y) * y ** lam,
                               singularities=gt.singularities)).value
            assert abs(lhs - rhs) < 1e-9


def test_branch_transport_special_cases():
    y = np.linspace(0.05, 0.95, 19)
    f = fn(-0.5, 0.5, lambda t: 1 + t)
    g, gt = branch_transport(f, cos_system(alpha=0))
    assert np.max(np.abs(g(y) - gt(y))) < 1e-15
    # support in the right branch: g is the pushforward of that branch alone
    right = fn(-0.5, 0.5, lambda t: np.where(t > 0, np.sin(3 * t), 0.0))
    g, _ = branch_transport(right, cos_system())
    single = pushforward(fn(0, 0.5, lambda t: np.sin(3 * t)), named_map("cos_pi", 0, 0.5))
    assert np.max(np.abs(g(y) - single(y))) < 1e-12


def test_two_system_residual_examples():
    sys_ = cos_system()
    odd = fn(-0.5, 0.5, lambda t: np.sin(2 * np.pi * t))
    r1, r2 = two_system_residuals(odd, sys_, 20)
    assert max(abs(v) for v in r1.values()) < 1e-15
    assert max(abs(v) for v in r2.values()) > 1e-3
    r1, r2 = two_system_residuals(fn(-0.5, 0.5, np.zeros_like), sys_, 20)
    assert all(v == 0 for v in list(r1.values()) + list(r2.values()))
    cube = fn(-0.5, 0.5, lambda t: np.cos(np.pi * t) ** 3)
    r1, _ = two_system_residuals(cube, sys_, 20)
    # int cos**6(pi t) over [-1/2, 1/2] = 5/16
    assert abs(r1[3] - 5 / 16) < 1e-14


def test_alpha_zero_sides_coincide():
    sys_ = cos_system(alpha=0)
    f = fn(-0.5, 0.5, lambda t: np.exp(t) * np.cos(5 * t))
    r1, r2 = two_system_residuals(f, sys_, 30)
    assert max(abs(r1[k] - r2[k]) for k in r1) < 1e-13


def test_cos_sin_variant_matches_real_and_imaginary_parts():
    sys_ = cos_system()
    f = fn(-0.5, 0.5, lambda t: 1 + t - t ** 3)
    _, r2 = two_system_residuals(f, sys_, 12)
    c, s = cos_sin_residuals(f, sys_, 12)
    assert max(abs(c[k] - r2[k].real) for k in c) < 1e-15
    assert max(abs(s[k] - r2[k].imag) for k in s) < 1e-15


def test_modulated_annihilator_from_even_annihilator():
    sys_ = cos_system(family=EVENS)
    g = exact_annihilator(EVENS.members, 0, 1)
    assert max(abs(v) for v in annihilation_residuals(g, EVENS.members).values()) < 1e-10
    w = build_modulated_annihilator(sys_, g, None)
    worst = max(abs(v) for v in list(w.residuals.values()) + list(w.residuals_mod.values()))
    assert worst < 1e-9
    assert w.norm_l1 > 0.01 * w.source_norm_l1


def test_round_trip_recovers_branch_data():
    sys_ = cos_system(family=EVENS)
    g = exact_annihilator(EVENS.members, 0, 1)
    w = build_modulated_annihilator(sys_, g, None)
    g2, gt2 = branch_transport(w.f, sys_)
    y = np.linspace(0.002, 0.998, 400)
    y = y[np.abs(y - 1.0) > 1e-3]
    assert np.max(np.abs(g2(y) - g(y))) < 1e-8
    assert np.max(np.abs(gt2(y))) < 1e-8


def test_annihilator_preconditions():
    sys_ = cos_system()
    g = exact_annihilator([0, 1], 0, 1)
    with pytest.raises(PreconditionViolation):
        build_modulated_annihilator(sys_, None, None)
    with pytest.raises(PreconditionViolation):
        build_modulated_annihilator(sys_, g, g)
    with pytest.raises(PhaseSeparationError):
        build_modulated_annihilator(cos_system(alpha=2 * math.pi), g, None)
    with pytest.raises(PhaseSeparationError):
        build_modulated_annihilator(cos_system(alpha=0), g, None)


def test_general_phase_separation_check():
    sys_ = ModulatedSystem(named_map("cos_pi", -0.5, 0.5), Arithmetic(0, 1), Arithmetic(0, 1),
                           phase=lambda t: 0.4 * t + 0.1 * t ** 3)
    sys_.require_separation()
    even = ModulatedSystem(named_map("cos_pi", -0.5, 0.5), Arithmetic(0, 1), Arithmetic(0, 1),
                           phase=lambda t: t * t)
    with pytest.raises(PhaseSeparationError):
        even.require_separation()


def test_singularity_exponent_near_minus_half():
    cases = [cos_system(), cos_system(alpha=-0.7),
             ModulatedSystem(named_map("neg_square:0.3", -1, 1), Arithmetic(0, 1), Arithmetic(0, 1),
                             alpha=0.3),
             ModulatedSystem(named_map("cos_pi_quad", -0.5, 0.5), Arithmetic(0, 1),
                             Arithmetic(0, 1), alpha=0.5)]
    for sys_ in cases:
        assert -0.55 <= singularity_exponent(sys_, 2.0).slope <= -0.45
    with pytest.raises(PreconditionViolation):
        singularity_exponent(cos_system(alpha=0))


def test_density_verdict_examples():
    assert density_verdict_modulated(cos_system()).dense
    squares = Union((Explicit((0,)), PowerOfIndex(2)))
    rep = density_verdict_modulated(cos_system(family=squares))
    assert not rep.dense and rep.verdict.reason.value == "reciprocal-sum-convergent"
    rep = density_verdict_modulated(cos_system(family=PowerOfIndex(2)))
    assert not rep.dense and rep.verdict.reason.value == "missing-zero"
    assert rep.witness is None
    rep = density_verdict_modulated(cos_system(family_mod=Explicit((0, 1, 2))))
    assert not rep.dense and rep.witness_side == "modulated"
    assert "witness_max_residual" in rep.text()


def test_verdict_table_on_twenty_pairs():
    # on J = [0, 1] a family is MS iff it contains 0 and its reciprocal sum diverges
    fams = [(Arithmetic(0, 1), True), (Arithmetic(0, 3), True), (PowerOfIndex(2), False),
            (Arithmetic(1, 1), False), (Explicit((0, 1)), False)]
    count = 0
    for i, (f1, ms1) in enumerate(fams):
        for j, (f2, ms2) in enumerate(fams):
            if i == j == 4 or (i == 4 and j < 4):
                continue
            rep = density_verdict_modulated(cos_system(family=f1, family_mod=f2))
            assert rep.dense == (ms1 and ms2)
            count += 1
    assert count == 20


def test_residuals_csv():
    text = residuals_csv({0: 1e-3, 2: 0.5}, {0: 2j})
    assert text.splitlines() == ["lambda,abs_residual_family,abs_residual_modulated",
                                 "0,0.001,2.0", "2,0.5,"]
