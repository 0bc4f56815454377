import numpy as np
import pytest

from muntzkit.errors import (CertificationError, HypothesisViolation, InvalidArgument,
                             MultiFoldError, PreconditionViolation)
from muntzkit.funcrep import IntervalFunction, QuadratureRule
from muntzkit.indexsets import Arithmetic, parse_family
from muntzkit.muntz import orthogonal_projection, pushforward
from muntzkit.psipower import (Fold, Injective, SmoothMap, build_annihilator, density_verdict,
                               detect_injectivity, fold_map, named_map, psi_moments)


def fn(a, b, ev, **kw):
    return IntervalFunction(a, b, ev, **kw)


def one(a, b):
    return fn(a, b, np.ones_like)


def test_detect_injectivity_examples():
    det = detect_injectivity(named_map("square", -1, 1))
    assert isinstance(det, Fold) and abs(det.x0) < 1e-13 and det.kind == "min"
    assert detect_injectivity(named_map("cos_pi", 0, 1)) == Injective(-1)
    det = detect_injectivity(named_map("cos_2pi", 0, 1))
    assert isinstance(det, Fold) and abs(det.x0 - 0.5) < 1e-13 and det.kind == "min"
    with pytest.raises(MultiFoldError):
        detect_injectivity(named_map("cos_2pi", 0, 2))


def test_hypothesis_violations():
    with pytest.raises(HypothesisViolation):
        named_map("cube", -1, 1)
    with pytest.raises(HypothesisViolation):
        named_map("poly:0,0,0,0,1", -1, 1)
    with pytest.raises(InvalidArgument):
        named_map("nonsense", 0, 1)


def test_fold_map_examples():
    fs = fold_map(named_map("square", -1, 1))
    x = np.linspace(-1, 0, 33)
    assert np.max(np.abs(fs.phi(x) + x)) < 1e-14
    assert np.max(np.abs(fs.dphi(x) + 1)) < 1e-12
    fs = fold_map(named_map("cos_2pi", 0, 1))
    x = np.linspace(0, 0.5, 33)
    assert np.max(np.abs(fs.phi(x) - (1 - x))) < 1e-13
    with pytest.raises(PreconditionViolation):
        fold_map(named_map("cos_pi", 0, 1))


def test_fold_defects_and_monotonicity():
    for spec, a, b in (("square", -1, 1), ("square", -0.3, 1), ("cos_2pi", 0, 1),
                       ("cos_pi_quad", -0.5, 0.5), ("neg_square:0.3", -1, 1)):
        fs = fold_map(named_map(spec, a, b))
        d = fs.defects()
        assert d["psi_defect"] < 1e-12
        assert d["involution_defect"] < 1e-12
        assert d["fixed_point_defect"] < 1e-12 and d["endpoint_defect"] < 1e-12
        y = fs.phi(np.linspace(fs.a_left, fs.x0, 257))
        assert np.all(np.diff(y) < 0)


def test_fold_shared_range_is_maximal():
    fs = fold_map(named_map("square", -0.3, 1))
    assert fs.a_left == -0.3 and abs(fs.b_right - 0.3) < 1e-14
    assert fs.shared_range() == pytest.approx((0.0, 0.09), abs=1e-15)


def test_annihilator_square_constant_seed():
    psi = named_map("square", -1, 1)
    fs = fold_map(psi)
    w = build_annihilator(psi, fs, one(0, 1))
    assert w.sign == 1
    x = np.array([-0.7, -0.2, 0.2, 0.7])
    assert np.allclose(w.f(x), [-1, -1, 1, 1], atol=1e-12)
    assert max(w.residuals.values()) < 1e-14
    # the rejected sign leaves the even function 1, with ∫ x**(2*lam) = 2/(2*lam+1)
    assert abs(w.other_residuals[0] - 2) < 1e-13


def test_annihilator_certificates_across_maps():
    cases = [("square", -1, 1, lambda x: x), ("cos_2pi", 0, 1, np.ones_like),
             ("cos_pi_quad", -0.5, 0.5, lambda x: np.cos(3 * x)),
             ("neg_square:0.3", -1, 1, lambda x: 1 + x * x)]
    for spec, a, b, seed in cases:
        psi = named_map(spec, a, b)
        fs = fold_map(psi)
        w = build_annihilator(psi, fs, fn(fs.x0, fs.b_right, seed))
        scale = max(1.0, psi.sup() ** 20)
        assert max(w.residuals.values()) < 1e-10 * w.norm_l2 * scale
        assert w.norm_l2 >= 0.1 * w.seed_norm_l2
        # independent recomputation on a finer rule
        rule = w.f.rule(n_panels=96)
        again = psi_moments(w.f, psi, 20, rule)
        assert max(abs(v) for v in again.values()) < 1e-10 * w.norm_l2 * scale
        assert max(w.other_residuals.values()) > 1e-6


def test_annihilator_rejects_bad_seeds():
    psi = named_map("square", -1, 1)
    fs = fold_map(psi)
    with pytest.raises(InvalidArgument):
        build_annihilator(psi, fs, one(0, 0.5))
    with pytest.raises(PreconditionViolation):
        build_annihilator(psi, fs, fn(0, 1, np.zeros_like))
    with pytest.raises(CertificationError):
        build_annihilator(psi, fs, one(0, 1), tol=0.0)


def test_witness_csv_has_1024_samples():
    psi = named_map("square", -1, 1)
    w = build_annihilator(psi, fold_map(psi), one(0, 1))
    lines = w.samples_csv().splitlines()
    assert lines[0] == "x,f" and len(lines) == 1025


def test_density_verdict_examples():
    rep = density_verdict(named_map("cos_pi", 0, 1), Arithmetic(0, 1))
    assert rep.injective and rep.dense and rep.witness is None
    assert rep.J == (-1.0, 1.0)
    rep = density_verdict(named_map("square", -1, 1), Arithmetic(0, 1))
    assert not rep.dense and rep.witness is not None and rep.ms_on_J.is_ms
    rep = density_verdict(named_map("cos_pi", 0, 1), parse_family("union:[explicit:[0];arith:2,2]"))
    assert not rep.dense and rep.ms_on_J.reason.value == "odd-part-fails"
    assert "dense = no" in rep.text()


def _composed_error(f, psi, exps):
    rule = f.rule(n_panels=48)
    sw = np.sqrt(rule.w)
    cols = np.stack([sw * psi(rule.x) ** lam for lam in exps], axis=1)
    return orthogonal_projection(cols, sw * f(rule.x), exps).error


def _transported_error(f, psi, exps):
    g, weight = pushforward(f, psi), pushforward(one(psi.a, psi.b), psi)
    rule = QuadratureRule.build(g.a, g.b, n_panels=48)
    sw = np.sqrt(rule.w * weight(rule.x))
    cols = np.stack([sw * rule.x ** lam for lam in exps], axis=1)
    return orthogonal_projection(cols, sw * g(rule.x) / weight(rule.x), exps).error


def test_composed_basis_matches_pushforward_route():
    f = fn(0, 1, lambda x: np.exp(np.sin(3 * x)))
    maps = [named_map("poly:0,1,0.5", 0, 1), named_map("poly:2,-1,0.3", 0, 1),
            SmoothMap(0, 1, lambda t: np.cos(0.8 * np.pi * t + 0.1),
                      lambda t: -0.8 * np.pi * np.sin(0.8 * np.pi * t + 0.1),
                      lambda t: -(0.8 * np.pi) ** 2 * np.cos(0.8 * np.pi * t + 0.1))]
    for psi in maps:
        for exps in ((0,), (0, 1, 2), (0, 2, 3, 5)):
            assert abs(_composed_error(f, psi, exps) - _transported_error(f, psi, exps)) < 1e-9
