import math

import mpmath
import numpy as np
import pytest

from muntzkit.cosinesys import ShiftPair, rational_counterexample
from muntzkit.errors import InvalidArgument
from muntzkit.funcrep import PeriodicFunction, named_periodic
from muntzkit.hup import (CircleMeasure, hup_verdict, line_restriction, moment_derivative_check,
                          mu_hat, rotation_defect, standard_r_grid)
from muntzkit.realnum import Rational, parse_real, sqrt

R2 = sqrt(2) / 2
ONE = CircleMeasure(PeriodicFunction.from_dict({0: 1.0}, real=True))


def trig(d):
    return CircleMeasure(PeriodicFunction.from_dict(d, real=True))


def test_mu_hat_examples():
    assert abs(mu_hat(ONE, 0, 0) - 1) < 1e-15
    assert abs(mu_hat(ONE, 1, 0) - 0.22027690853993446) < 1e-13
    with mpmath.workdps(30):
        for eta, xi in ((0.3, 0.0), (1.7, -2.1), (0.0, 4.5), (6.0, 8.0)):
            rho = 2 * mpmath.pi * mpmath.sqrt(mpmath.mpf(eta) ** 2 + mpmath.mpf(xi) ** 2)
            assert abs(mu_hat(ONE, eta, xi) - float(mpmath.besselj(0, rho))) < 1e-11
            # cos 2pi t against the plane wave gives i J1 along the eta axis
        for eta in (0.4, 2.5):
            val = mu_hat(trig({1: 0.5, -1: 0.5}), eta, 0)
            assert abs(val - 1j * float(mpmath.besselj(1, 2 * mpmath.pi * eta))) < 1e-11


def test_odd_density_vanishes_on_its_line():
    sin1 = trig({1: -0.5j, -1: 0.5j})
    lr = line_restriction(sin1, 0)
    assert lr.max_modulus < 1e-14
    odd_about = CircleMeasure(sin1.density.shifted(Rational(1, 8)))
    assert line_restriction(odd_about, Rational(1, 8)).max_modulus < 1e-14
    assert line_restriction(odd_about, 0).max_modulus > 1e-2


def test_line_restriction_grid_and_csv():
    r = standard_r_grid()
    assert len(r) == 31 and r[0] == 0 and r[-1] == 3.0 and r[1] == 0.1
    lr = line_restriction(ONE, R2, [0.0, 0.5])
    assert abs(lr.values[0] - 1) < 1e-15
    lines = lr.to_csv().splitlines()
    assert lines[0] == "r,re,im" and len(lines) == 3
    r0, re0, im0 = map(float, lines[1].split(","))
    assert r0 == 0.0 and abs(re0 - 1) < 1e-15 and abs(im0) < 1e-15


def test_rotation_covariance():
    for spec in ("exp_sin", "trigpoly:const=0.3,cos1=1,sin2=0.5,cos3=-0.2"):
        mu = CircleMeasure(named_periodic(spec, 24))
        for theta in (R2, Rational(1, 7), parse_real("(sqrt(5)-1)/2")):
            for eta, xi in ((0.5, 0.2), (-1.3, 2.0), (3.0, 0.0)):
                assert rotation_defect(mu, theta, eta, xi) < 1e-10


def test_moment_derivative_examples():
    rows = moment_derivative_check(ONE, 0, lam_cap=0)
    assert abs(rows[0].finite_difference - 1) < 1e-15 and abs(rows[0].moment_side - 1) < 1e-15
    theta = Rational(1, 5)
    f = CircleMeasure(named_periodic("trigpoly:cos1=1", 2).shifted(theta))
    rows = moment_derivative_check(f, theta, lam_cap=1)
    assert abs(rows[1].moment_side - 1j * math.pi) < 1e-14
    assert rows[1].discrepancy < 1e-6
    rows = moment_derivative_check(CircleMeasure(named_periodic("exp_sin", 24)), R2, lam_cap=4)
    assert max(r.discrepancy for r in rows) < 1e-4
    with pytest.raises(InvalidArgument):
        moment_derivative_check(ONE, 0, lam_cap=7)


def test_verdict_rational_differences():
    for t1, t2 in ((0, Rational(1, 3)), (Rational(1, 2), 0), (R2 / 2 + Rational(1, 4), R2 / 2)):
        rep = hup_verdict(t1, t2)
        assert rep.is_hup is False and rep.witness is not None
        assert max(r.max_modulus for r in rep.restrictions) < 1e-8
        assert rep.witness.density.l2_norm() >= 0.5
        assert "hup = no" in rep.text()


def test_witness_matches_counterexample():
    pair = ShiftPair(0, Rational(1, 3))
    rep = hup_verdict(0, Rational(1, 3))
    ce = rational_counterexample(pair)
    assert np.array_equal(rep.witness.density.coeffs, ce.f.coeffs)


def test_verdict_irrational_and_float():
    rep = hup_verdict(0, R2)
    assert rep.is_hup is True and rep.witness is None
    with mpmath.workdps(40):
        oracle = min(abs(2 * mpmath.sin(2 * mpmath.pi * k * mpmath.sqrt(2) / 2)) for k in range(1, 33))
    assert abs(rep.band_determinant - float(oracle)) < 1e-13
    assert rep.certificate.d1 < 1e-15 and rep.certificate.d2 > 0.1
    assert "not a proof" in rep.text()
    rep = hup_verdict(sqrt(2) - 1, sqrt(3) - 1)
    assert rep.is_hup is True
    rep = hup_verdict(0.1, 0.35)
    assert rep.is_hup is None and "cannot certify" in rep.caveat


def test_verdict_rejects_equal_lines():
    for t in (0, R2, Rational(1, 3)):
        with pytest.raises(InvalidArgument):
            hup_verdict(t, t)
    with pytest.raises(InvalidArgument):
        hup_verdict(0.25, 0.25)
