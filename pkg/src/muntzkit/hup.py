"""Fourier transforms of absolutely continuous measures on the unit circle.

A density f on [0, 1) defines mu_hat(eta, xi) = int_0^1 f(t) exp(2 i pi (eta cos 2pi t
+ xi sin 2pi t)) dt.  Restricted to the line through the origin at angle
2 pi theta this becomes int f(t) exp(2 i pi r cos 2pi(t - theta)) dt, whose r-derivatives
at 0 are (2 i pi)**lam times the cosine-power moments about theta.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cosinesys import (AnnihilationDefect, ShiftPair, cos_power_moments, rational_counterexample,
                        two_shift_fourier_annihilation)
from .errors import CertificationError, InvalidArgument
from .funcrep import PeriodicFunction, periodic_trapezoid
from .realnum import as_real

MU_HAT_TOL = 1e-11
FD_STEP = 1e-2
NULL_LINE_TOL = 1e-8


def standard_r_grid() -> np.ndarray:
    return np.round(np.arange(31) * 0.1, 12)


@dataclass(frozen=True)
class CircleMeasure:
    density: PeriodicFunction

    def __post_init__(self):
        if not np.all(np.isfinite(self.density.coeffs)):
            raise InvalidArgument("density coefficients must be finite")

    def samples(self, M: int) -> np.ndarray:
        return np.asarray(self.density(np.arange(M) / M))


def _trapezoid_mu_hat(mu: CircleMeasure, eta: float, xi: float, M: int) -> complex:
    t = np.arange(M) / M
    phase = eta * np.cos(2 * np.pi * t) + xi * np.sin(2 * np.pi * t)
    return complex(periodic_trapezoid(mu.samples(M) * np.exp(2j * np.pi * phase)))


def mu_hat(mu: CircleMeasure, eta: float, xi: float, tol: float = MU_HAT_TOL) -> complex:
    """Periodic trapezoid rule, doubled until two successive values agree to tol."""
    rho = math.hypot(eta, xi)
    M = max(64 + 16 * math.ceil(rho), 4 * mu.density.K + 4)
    prev = _trapezoid_mu_hat(mu, eta, xi, M)
    for _ in range(12):
        M *= 2
        cur = _trapezoid_mu_hat(mu, eta, xi, M)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return cur


def _direction(theta) -> tuple[float, float]:
    from .funcrep import unit_phase
    e = unit_phase(as_real(theta), 1)
    return e.real, e.imag


@dataclass(frozen=True)
class LineRestriction:
    theta: object
    r: np.ndarray
    values: np.ndarray

    @property
    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,re,im\n")
        for r, v in zip(self.r, self.values):
            buf.write(f"{float(r)!r},{float(v.real)!r},{float(v.imag)!r}\n")
        return buf.getvalue()


def line_restriction(mu: CircleMeasure, theta, r_grid: Optional[Sequence[float]] = None) -> LineRestriction:
    """mu_hat along (r cos 2pi theta, r sin 2pi theta)."""
    r = standard_r_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    c, s = _direction(theta)
    vals = np.array([mu_hat(mu, ri * c, ri * s) for ri in r], dtype=complex)
    return LineRestriction(as_real(theta), r, vals)


# ---- derivatives at r = 0 ----------------------------------------------------

# central-difference stencils for the lam-th derivative on points -m..m
_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
    5: {-3: -0.5, -2: 2.0, -1: -2.5, 1: 2.5, 2: -2.0, 3: 0.5},
    6: {-3: 1.0, -2: -6.0, -1: 15.0, 0: -20.0, 1: 15.0, 2: -6.0, 3: 1.0},
}


@dataclass(frozen=True)
class MomentDerivativeRow:
    lam: int
    finite_difference: complex
    moment_side: complex
    discrepancy: float


def _line_value(mu: CircleMeasure, c: float, s: float, r: float) -> complex:
    return mu_hat(mu, r * c, r * s, tol=1e-15)


def moment_derivative_check(mu: CircleMeasure, theta, lam_cap: int = 4,
                            h: float = FD_STEP) -> list[MomentDerivativeRow]:
    """Compare d^lam/dr^lam of the line restriction at 0 with (2 i pi)**lam times the moment."""
    if not 0 <= lam_cap <= 6:
        raise InvalidArgument("lam_cap must lie in [0, 6]")
    c, s = _direction(theta)
    cache: dict[float, complex] = {}

    def F(r):
        if r not in cache:
            cache[r] = _line_value(mu, c, s, r)
        return cache[r]

    def D(lam, step):
        return sum(w * F(j * step) for j, w in _STENCILS[lam].items()) / step ** lam

    moments = cos_power_moments(mu.density, as_real(theta), range(lam_cap + 1))
    rows = []
    for lam in range(lam_cap + 1):
        if lam == 0:
            fd = F(0.0)
        else:
            # one Richardson step removes the h**2 error term
            fd = (4 * D(lam, h / 2) - D(lam, h)) / 3
        rhs = (2j * np.pi) ** lam * moments[lam]
        rows.append(MomentDerivativeRow(lam, complex(fd), complex(rhs), float(abs(fd - rhs))))
    return rows


def rotation_defect(mu: CircleMeasure, theta, eta: float, xi: float) -> float:
    """|mu_hat[f(. - theta)](eta, xi) - mu_hat[f](R_{-2 pi theta}(eta, xi))|."""
    c, s = _direction(theta)
    shifted = CircleMeasure(mu.density.shifted(as_real(theta)))
    lhs = mu_hat(shifted, eta, xi)
    rhs = mu_hat(mu, c * eta + s * xi, -s * eta + c * xi)
    return abs(lhs - rhs)


# ---- verdict ----------------------------------------------------------------

@dataclass(frozen=True)
class HUPReport:
    shifts: ShiftPair
    is_hup: Optional[bool]
    witness: Optional[CircleMeasure]
    restrictions: tuple
    certificate: Optional[AnnihilationDefect]
    band_determinant: Optional[float] = None
    caveat: str = ""

    def text(self) -> str:
        verdict = {True: "yes", False: "no", None: "indeterminate"}[self.is_hup]
        lines = [f"theta1 = {self.shifts.theta1}", f"theta2 = {self.shifts.theta2}",
                 f"difference = {self.shifts.kind}", f"hup = {verdict}"]
        if self.witness is not None:
            lines.append(f"witness = {self.witness.density.name}")
            lines.append(f"witness_l2 = {float(self.witness.density.l2_norm())!r}")
            for lr in self.restrictions:
                lines.append(f"max_modulus_line[{lr.theta}] = {float(lr.max_modulus)!r}")
        if self.certificate is not None:
            lines.append(f"probe_defects = {float(self.certificate.d1)!r}, {float(self.certificate.d2)!r}")
            lines.append(f"min_band_determinant = {float(self.band_determinant)!r}")
            lines.append("basis = uniqueness holds exactly when the shift difference is irrational; "
                         "the band check is a finite certificate, not a proof")
        if self.caveat:
            lines.append(f"caveat = {self.caveat}")
        return "\n".join(lines)


def hup_verdict(theta1, theta2, band: int = 32) -> HUPReport:
    """Whether the circle with the two lines at angles 2 pi theta_j is a uniqueness pair."""
    shifts = ShiftPair(theta1, theta2)
    kind = shifts.kind
    if kind == "rational":
        m, _ = shifts.rational()
        if m == 0:
            raise InvalidArgument("the two lines must be distinct")
        ce = rational_counterexample(shifts)
        mu = CircleMeasure(ce.f)
        rs = (line_restriction(mu, shifts.theta1), line_restriction(mu, shifts.theta2))
        worst = max(r.max_modulus for r in rs)
        if worst >= NULL_LINE_TOL:
            raise CertificationError(f"witness transform reaches {worst:.3e} on a line",
                                     residuals=[r.values for r in rs])
        return HUPReport(shifts, False, mu, rs, None)
    if kind == "irrational-exact":
        # each band frequency pairs (c_k, c_{-k}) through a 2x2 system with determinant
        # 2 i sin 2 pi k (theta1 - theta2); a probe odd about theta1 must fail at theta2
        det = min(abs(2 * math.sin(2 * math.pi * shifts.difference_phase(k)))
                  for k in range(1, band + 1))
        probe = PeriodicFunction.from_dict({1: -0.5j, -1: 0.5j}, real=True).shifted(shifts.theta1)
        return HUPReport(shifts, True, None, (), two_shift_fourier_annihilation(probe, shifts), det)
    if float(shifts.theta1) == float(shifts.theta2):
        raise InvalidArgument("the two lines must be distinct")
    return HUPReport(shifts, None, None, (), None,
                     caveat="float shifts cannot certify whether the difference is rational")
