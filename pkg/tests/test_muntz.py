import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muntzkit.errors import DegenerateSystemError, HypothesisViolation, InvalidArgument
from muntzkit.funcrep import IntervalFunction, integrate
from muntzkit.indexsets import Arithmetic, Explicit
from muntzkit.muntz import (MuntzSystem, annihilation_residuals, best_approx_L2, error_curve,
                            exact_annihilator_poly, exact_exp_projection, exact_projection,
                            pushforward)
from muntzkit.psipower import named_map


def fn(a, b, ev, **kw):
    return IntervalFunction(a, b, ev, **kw)


def test_best_approx_examples():
    r = best_approx_L2(fn(0, 1, lambda x: x), [0])
    assert abs(r.coefficients[0] - 0.5) < 1e-14
    assert abs(r.error_L2 - 1 / math.sqrt(12)) < 1e-14
    r = best_approx_L2(fn(0, 1, lambda x: x * x), [0, 1, 2])
    assert r.error_L2 < 1e-14 and abs(r.coefficients[2] - 1) < 1e-12
    r = best_approx_L2(fn(0, 1, np.exp), [0, 1])
    exact = exact_exp_projection([0, 1])
    assert abs(r.error_L2 - math.sqrt(float(exact.error_sq))) < 1e-6 * r.error_L2
    assert abs(r.coefficients[0] - float(exact.coefficients[0])) < 1e-12


def test_annihilation_residual_examples():
    sign = fn(-1, 1, np.sign, breakpoints=(0.0,))
    res = annihilation_residuals(sign, MuntzSystem((0, 2, 4), -1, 1))
    assert max(abs(v) for v in res.values()) < 1e-15
    assert abs(annihilation_residuals(fn(0, 1, np.ones_like), [3])[3] - 0.25) < 1e-15
    assert abs(annihilation_residuals(fn(0, 1, lambda x: x - 0.5), [0])[0]) < 1e-15


def test_error_curve_frozen_values():
    # stages 1, 2, 3 of e**x on [0, 1]; values from the exact rational solve
    curve = error_curve(fn(0, 1, np.exp), Arithmetic(0, 1), 3)
    frozen = [0.49197114493917765, 0.0627711950151414, 0.005275930674892310]
    for (_, e), v in zip(curve.points, frozen):
        assert abs(e - v) < 1e-9 * v
    assert curve.verdict.is_ms
    assert curve.to_csv().startswith("stage_size,error_L2\n1,")


def test_error_curve_is_nonincreasing():
    rng = np.random.default_rng(11)
    for _ in range(5):
        c = rng.normal(size=6)
        f = fn(0, 1, lambda x, c=c: np.cos(np.polynomial.Polynomial(c)(x)))
        errs = [e for _, e in error_curve(f, Arithmetic(0, 1), 8).points]
        assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def test_odd_target_against_even_exponents_is_untouched():
    f = fn(-1, 1, lambda x: x ** 3 - x / 2)
    nf = math.sqrt(2 / 7 - 2 / 5 + 1 / 6)
    for _, e in error_curve(f, Arithmetic(0, 2), 6).points:
        assert abs(e - nf) < 1e-13


def test_projection_identity_and_orthogonality():
    rng = np.random.default_rng(5)
    for a, b in ((0, 1), (-1, 1), (1, 2)):
        c = rng.normal(size=4)
        f = fn(a, b, lambda x, c=c: np.exp(c[0] * x) * np.sin(c[1] + c[2] * x) + c[3])
        r = best_approx_L2(f, MuntzSystem((0, 1, 3, 4), a, b))
        assert abs(r.error_L2 ** 2 + r.norm_approx ** 2 - r.norm_f ** 2) < 1e-12 * r.norm_f ** 2
        assert r.residual_orthogonality < 1e-10 * r.norm_f


def _abs_half_moment(lam):
    c = Fraction(1, 2)
    left = c * c ** (lam + 1) / (lam + 1) - c ** (lam + 2) / (lam + 2)
    right = Fraction(1, lam + 2) - Fraction(1, lam + 2) * c ** (lam + 2) \
        - c * (Fraction(1, lam + 1) - c ** (lam + 1) / (lam + 1))
    return left + right


# targets whose moments against x**lam on [0, 1] are rational in closed form
RATIONAL_TARGETS = [
    (fn(0, 1, np.sqrt, singularities=(0.0,)), lambda lam: Fraction(2, 2 * lam + 3), Fraction(1, 2)),
    (fn(0, 1, np.cbrt, singularities=(0.0,)), lambda lam: Fraction(3, 3 * lam + 4), Fraction(3, 5)),
    (fn(0, 1, lambda x: np.abs(x - 0.5), breakpoints=(0.5,)), _abs_half_moment, Fraction(1, 12)),
]


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(0, 8), min_size=1, max_size=9), st.integers(0, 2))
def test_oracle_equivalence_exact_moments(exps, which):
    f, moment, norm_sq = RATIONAL_TARGETS[which]
    exps = sorted(exps)
    exact = exact_projection(exps, 0, 1, [moment(lam) for lam in exps], norm_sq)
    ref = math.sqrt(exact.error_sq)
    r = best_approx_L2(f, exps)
    assert abs(r.error_L2 - ref) < 1e-8 * ref


def test_abs_half_moment_oracle():
    f = RATIONAL_TARGETS[2][0]
    for lam in range(6):
        assert abs(annihilation_residuals(f, [lam])[lam] - float(_abs_half_moment(lam))) < 1e-15


@settings(max_examples=20, deadline=None)
@given(st.sets(st.integers(0, 8), min_size=1, max_size=6))
def test_oracle_equivalence_exponential(exps):
    exps = sorted(exps)
    ref = math.sqrt(float(exact_exp_projection(exps).error_sq))
    r = best_approx_L2(fn(0, 1, np.exp), exps)
    assert abs(r.error_L2 - ref) < 1e-8 * ref


def test_exact_annihilator_poly_is_annihilator():
    mu, poly = exact_annihilator_poly([0, 2, 3])
    assert mu == 1
    for lam in (0, 2, 3):
        assert sum(c / (i + lam + 1) for i, c in enumerate(poly)) == 0


def test_pushforward_examples():
    ident = named_map("poly:0,1", 0, 1)
    f = fn(0, 1, lambda x: np.exp(x))
    g = pushforward(f, ident)
    t = np.linspace(0, 1, 9)
    assert np.max(np.abs(g(t) - np.exp(t))) < 1e-14
    g = pushforward(fn(0, 1, np.ones_like), named_map("poly:0,2", 0, 1))
    assert (g.a, g.b) == (0.0, 2.0) and np.max(np.abs(g(np.linspace(0, 2, 7)) - 0.5)) < 1e-15
    with pytest.raises(HypothesisViolation):
        named_map("cube", 0, 1)


def test_pushforward_moment_transport():
    f = fn(0, 1, lambda x: np.cos(3 * x) + x)
    for spec, a, b in (("square", 0, 1), ("cos_pi", 0, 1), ("poly:1,-2,0.5", 0, 1)):
        psi = named_map(spec, a, b)
        g = pushforward(f, psi)
        for lam in range(0, 21, 4):
            lhs = integrate(fn(a, b, lambda x: f(x) * psi(x) ** lam)).value
            rhs = integrate(fn(g.a, g.b, lambda t: g(t) * t ** lam,
                               singularities=g.singularities)).value
            assert abs(lhs - rhs) < 1e-10


def test_degenerate_system_and_argument_errors():
    with pytest.raises(DegenerateSystemError):
        best_approx_L2(fn(0, 1, np.exp), list(range(21)))
    with pytest.raises(InvalidArgument):
        MuntzSystem((), 0, 1)
    with pytest.raises(InvalidArgument):
        best_approx_L2(fn(0, 1, np.exp), [41])
    with pytest.raises(InvalidArgument):
        best_approx_L2(fn(0, 1, np.exp), MuntzSystem((0,), 0, 2))


def test_approx_csv_and_evaluation():
    r = best_approx_L2(fn(-1, 1, np.exp), Explicit((0, 1, 2, 3)).take(4))
    lines = r.to_csv().splitlines()
    assert lines[0] == "exponent,re,im" and lines[1].startswith("0,")
    x = np.linspace(-1, 1, 11)
    assert np.max(np.abs(r(x) - np.exp(x))) <= r.error_sup_grid + 1e-15
