"""Translated cosine-power systems {cos**lam 2pi(t - theta)} on the circle.

A 1-periodic P is even about theta when c_{-k}(P) = c_k(P) exp(4 i pi k theta).
Splitting P = P1 + P2 with P_j even about theta_j is a 2x2 solve per
frequency with determinant exp(4 i pi k theta1) - exp(4 i pi k theta2); it is
solvable for every k exactly when theta1 - theta2 is irrational.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import (CertificationError, DegreeError, InvalidArgument, PreconditionViolation,
                     ResonanceError)
from .funcrep import IntervalFunction, PeriodicFunction, fejer_sum, periodic_trapezoid, unit_phase
from .indexsets import LambdaFamily, MSVerdict, classify_ms
from .muntz import MuntzSystem, best_approx_L2
from .realnum import DifferenceClass, SymbolicReal, as_real, difference_class, phase_mod1

RESIDUAL_GRID = 1024


@dataclass(frozen=True)
class ShiftPair:
    theta1: SymbolicReal
    theta2: SymbolicReal
    difference: DifferenceClass = field(init=False)

    def __post_init__(self):
        t1, t2 = as_real(self.theta1), as_real(self.theta2)
        for t in (t1, t2):
            if not (0 <= t < 1):
                raise InvalidArgument(f"shift {t} is not in [0, 1)")
        object.__setattr__(self, "theta1", t1)
        object.__setattr__(self, "theta2", t2)
        object.__setattr__(self, "difference", difference_class(t1, t2))

    @property
    def kind(self) -> str:
        return self.difference.kind

    def rational(self) -> Optional[tuple[int, int]]:
        if self.kind != "rational":
            return None
        r = self.difference.ratio
        return r.numerator, r.denominator

    def difference_phase(self, m: int) -> float:
        """frac(m (theta1 - theta2)), with each shift reduced exactly before subtracting."""
        d = phase_mod1(self.theta1, m) - phase_mod1(self.theta2, m)
        return d % 1.0

    def resonant_k(self) -> Optional[int]:
        """Smallest k >= 1 with 2k(theta1 - theta2) an integer, for exact rational differences."""
        r = self.rational()
        if r is None:
            return None
        m, n = r
        if m == 0:
            return 1
        return n // math.gcd(n, 2)


def _moment_grid(K: int, cap: int) -> int:
    return max(4 * (K + cap) + 4, 512)


def cos_power_moments(f: PeriodicFunction, theta, exponents, M: Optional[int] = None) -> dict:
    """int_0^1 f(t) cos**lam 2pi(t - theta) dt by the periodic trapezoid rule."""
    exps = list(exponents)
    M = M or _moment_grid(f.K, max(exps, default=0))
    t = np.arange(M) / M
    vals = np.asarray(f(t))
    c = np.cos(2 * np.pi * ((t - float(theta)) % 1.0))
    return {lam: periodic_trapezoid(vals * c ** lam) for lam in exps}


# ---- one shift -----------------------------------------------------------

def pushforward_circle(f: PeriodicFunction, theta) -> IntervalFunction:
    """g on [-1, 1] with int_0^1 f(t) cos**l 2pi(t - theta) dt = int g(u) u**l du."""
    th = float(as_real(theta))

    def ev(u):
        u = np.asarray(u, dtype=float)
        s = np.arccos(np.clip(u, -1.0, 1.0)) / (2 * np.pi)
        root = np.sqrt((1.0 - u) * (1.0 + u))
        return (np.asarray(f(th + s)) + np.asarray(f(th - s))) / (2 * np.pi * root)

    return IntervalFunction(-1.0, 1.0, ev, singularities=(-1.0, 1.0),
                            name=f"circle_pushforward({f.name})")


def circle_moment_check(f: PeriodicFunction, theta, cap: int = 10) -> float:
    """Largest discrepancy between the two sides of the pushforward moment identity."""
    from .muntz import annihilation_residuals
    g = pushforward_circle(f, theta)
    rhs = annihilation_residuals(g, range(cap + 1))
    lhs = cos_power_moments(f, theta, range(cap + 1))
    return max(abs(lhs[k] - rhs[k]) for k in range(cap + 1))


@dataclass(frozen=True)
class OneShiftResiduals:
    theta: SymbolicReal
    moments: dict
    symmetry_defect: float

    @property
    def max_residual(self) -> float:
        return max((abs(v) for v in self.moments.values()), default=0.0)


def odd_symmetry_defect(f: PeriodicFunction, theta, n: int = RESIDUAL_GRID) -> float:
    """max over a grid of |f(theta + t) + f(theta - t)|."""
    th = float(as_real(theta))
    t = np.arange(n) / n
    return float(np.max(np.abs(np.asarray(f(th + t)) + np.asarray(f(th - t)))))


def one_shift_residuals(f: PeriodicFunction, theta, family: LambdaFamily, cap: int = 20) -> OneShiftResiduals:
    if cap > 40:
        raise InvalidArgument("cap is at most 40")
    exps = []
    for n in family.iter():
        if n > cap:
            break
        exps.append(n)
    return OneShiftResiduals(as_real(theta), cos_power_moments(f, theta, exps),
                             odd_symmetry_defect(f, theta))


# ---- symmetry defects on coefficients -------------------------------------

def even_defect(P: PeriodicFunction, theta) -> float:
    """max_k |c_{-k} exp(-2 i pi k theta) - c_k exp(2 i pi k theta)|; zero iff P is even about theta."""
    return max((abs(P.c(-k) * unit_phase(theta, -k) - P.c(k) * unit_phase(theta, k))
                for k in range(1, P.K + 1)), default=0.0)


def odd_defect(P: PeriodicFunction, theta) -> float:
    """max_k |c_{-k} exp(-2 i pi k theta) + c_k exp(2 i pi k theta)|; zero iff P is odd about theta."""
    return max(abs(P.c(-k) * unit_phase(theta, -k) + P.c(k) * unit_phase(theta, k))
               for k in range(0, P.K + 1))


# ---- two shifts ---------------------------------------------------------------

@dataclass(frozen=True)
class ParityDecomposition:
    P1: PeriodicFunction
    P2: PeriodicFunction
    reconstruction_defect: float
    symmetry_defects: tuple[float, float]
    smallest_denominator: float
    denominators: dict
    mode: str
    caveat: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,re_P1,im_P1,re_P2,im_P2\n")
        for k in self.P1.ks:
            a, b = self.P1.c(int(k)), self.P2.c(int(k))
            buf.write(f"{int(k)},{float(a.real)!r},{float(a.imag)!r},{float(b.real)!r},{float(b.imag)!r}\n")
        return buf.getvalue()


FLOAT_DENOMINATOR_GUARD = 1e-9


def _decompose_coeffs(P: PeriodicFunction, shifts: ShiftPair, guard: float):
    K = P.K
    c1 = np.zeros(2 * K + 1, dtype=complex)
    c2 = np.zeros(2 * K + 1, dtype=complex)
    c1[K] = P.c(0)  # the mean is even about every centre; it goes to P1
    dens = {}
    for k in range(1, K + 1):
        e1 = unit_phase(shifts.theta1, 2 * k)
        e2 = unit_phase(shifts.theta2, 2 * k)
        den = e1 - e2
        dens[k] = abs(den)
        cp, cm = P.c(k), P.c(-k)
        if dens[k] < guard:
            raise ResonanceError(k, f"|exp(4 i pi k theta1) - exp(4 i pi k theta2)| = "
                                    f"{dens[k]:.3e} at k = {k}")
        x = (cm - cp * e2) / den
        y = cp - x
        c1[K + k], c2[K + k] = x, y
        c1[K - k], c2[K - k] = x * e1, y * e2
    return c1, c2, dens


def parity_decompose_trig(P: PeriodicFunction, shifts: ShiftPair, mode: str = "irrational",
                          certify: bool = True) -> ParityDecomposition:
    """Split P into parts even about theta1 and theta2."""
    if mode not in ("irrational", "rational-capped"):
        raise InvalidArgument(f"unknown mode {mode!r}")
    caveat = ""
    guard = 0.0
    kind = shifts.kind
    if mode == "irrational":
        if kind == "rational":
            k = shifts.resonant_k()
            m, n = shifts.rational()
            raise ResonanceError(k, f"theta1 - theta2 = {m}/{n} is rational: the 2x2 system "
                                    f"is singular at k = {k}")
        if kind == "float-unknown":
            guard = FLOAT_DENOMINATOR_GUARD
            caveat = "float shifts: irrationality not certified; denominator guard 1e-9 applied"
    else:
        r = shifts.rational()
        if r is not None:
            degree = max((abs(int(k)) for k, v in zip(P.ks, P.coeffs) if v != 0), default=0)
            n = r[1]
            cap_ok = degree < n / 2 if n % 2 == 0 else degree < n
            if not cap_ok:
                raise DegreeError(f"degree {degree} exceeds the cap for difference "
                                  f"{r[0]}/{n} (need < {n / 2 if n % 2 == 0 else n})",
                                  degree=degree, n=n)
        elif kind == "float-unknown":
            guard = FLOAT_DENOMINATOR_GUARD
    c1, c2, dens = _decompose_coeffs(P, shifts, guard)
    real = P.real
    P1 = PeriodicFunction(c1, real=real, name="P1")
    P2 = PeriodicFunction(c2, real=real, name="P2")
    recon = (P - P1 - P2).l2_norm()
    sym = (even_defect(P1, shifts.theta1), even_defect(P2, shifts.theta2))
    smallest = min(dens.values(), default=float("inf"))
    out = ParityDecomposition(P1, P2, recon, sym, smallest, dens, mode, caveat)
    if certify:
        scale = max(P.l2_norm(), np.finfo(float).tiny)
        if recon >= 1e-10 * scale or max(sym) >= 1e-10 * scale:
            raise CertificationError("parity decomposition defects exceed 1e-10 relative",
                                     residuals={"reconstruction": recon, "symmetry": sym})
    return out


# ---- Sobolev-scale decomposition -----------------------------------------

@dataclass(frozen=True)
class SobolevDiagnostics:
    s: float
    j: int
    a: float
    sobolev_norm_sq: float
    sobolev_tail_fraction: float
    denominators: dict
    lower_bounds: dict
    bound_violations: list
    l2_tail_fraction: float
    l1_tail_fraction: float
    l2_indicator: bool
    l1_indicator: bool
    theory_l2: bool  # s >= a
    theory_l1: bool  # s > a + 1/2 + j


def _tail_fraction(weights: np.ndarray, ks: np.ndarray, K: int) -> float:
    total = math.fsum(weights)
    if total == 0:
        return 0.0
    return math.fsum(weights[np.abs(ks) > 3 * K / 4]) / total


def sobolev_decompose(f: PeriodicFunction, shifts: ShiftPair, s: float, j: int = 0,
                      a: float = 1.0, indicator_tol: float = 0.05):
    """Band-wise parity decomposition with summability diagnostics.

    Returns (f1, f2, diagnostics).  The indicators test whether the
    weighted l2 / l1 sums over the stored band look convergent: the last
    quarter of the band must carry less than ``indicator_tol`` of the total.
    """
    if shifts.kind == "rational":
        k = shifts.resonant_k()
        raise ResonanceError(k)
    if shifts.kind != "irrational-exact":
        raise PreconditionViolation("Sobolev decomposition needs an exactly irrational difference")
    K = f.K
    ks = f.ks
    weights = (1.0 + np.abs(ks)) ** (2 * s) * np.abs(f.coeffs) ** 2
    sob = math.fsum(weights)
    sob_tail = _tail_fraction(weights, ks, K)
    c1, c2, dens = _decompose_coeffs(f, shifts, 0.0)
    lower = {}
    for k in dens:
        ph = shifts.difference_phase(2 * k)
        lower[k] = 4 * min(ph, 1.0 - ph)
    violations = [k for k in dens if dens[k] < lower[k] * (1 - 1e-12)]
    mags = np.abs(c1) + np.abs(c2)
    l2w = np.abs(c1) ** 2 + np.abs(c2) ** 2
    l1w = (1.0 + np.abs(ks)) ** j * mags
    l2_tail = _tail_fraction(l2w, ks, K)
    l1_tail = _tail_fraction(l1w, ks, K)
    diag = SobolevDiagnostics(s, j, a, sob, sob_tail, dens, lower, violations, l2_tail, l1_tail,
                              l2_tail < indicator_tol, l1_tail < indicator_tol,
                              s >= a, s > a + 0.5 + j)
    return (PeriodicFunction(c1, real=f.real, name="f1"),
            PeriodicFunction(c2, real=f.real, name="f2"), diag)


# ---- rational-shift counterexample ------------------------------------------

@dataclass(frozen=True)
class Counterexample:
    f: PeriodicFunction
    residuals1: OneShiftResiduals
    residuals2: OneShiftResiduals
    seed_norm: float


def _check_seed(seed: PeriodicFunction, n: int, tol: float = 1e-12):
    scale = max(np.max(np.abs(seed.coeffs)), np.finfo(float).tiny)
    for k in range(-seed.K, seed.K + 1):
        v = seed.c(k)
        if abs(v) > tol * scale:
            if k % n:
                raise InvalidArgument(f"seed is not 1/{n}-periodic: c_{k} = {v}")
            if abs(seed.c(-k) + v) > tol * scale:
                raise InvalidArgument(f"seed is not odd: c_{-k} != -c_{k}")


def rational_counterexample(shifts: ShiftPair, seed: Optional[PeriodicFunction] = None,
                            cap: int = 30, tol: float = 1e-11) -> Counterexample:
    """f = seed(t - theta2), odd about both shifts, annihilating both cosine-power systems."""
    r = shifts.rational()
    if r is None:
        raise PreconditionViolation(f"theta1 - theta2 must be exactly rational (got {shifts.kind})")
    m, n = r
    if m == 0:
        raise PreconditionViolation("the two shifts coincide")
    if seed is None:
        seed = PeriodicFunction.from_dict({n: -0.5j, -n: 0.5j}, real=True, name=f"sin(2pi {n} t)")
    _check_seed(seed, n)
    f = seed.shifted(shifts.theta2)
    from .indexsets import Arithmetic
    fam = Arithmetic(0, 1)
    r1 = one_shift_residuals(f, shifts.theta1, fam, cap)
    r2 = one_shift_residuals(f, shifts.theta2, fam, cap)
    worst = max(r1.max_residual, r2.max_residual)
    if worst >= tol:
        raise CertificationError(f"counterexample residual {worst:.3e} >= {tol:.0e}",
                                 residuals={"theta1": r1.moments, "theta2": r2.moments})
    return Counterexample(f, r1, r2, seed.l2_norm())


# ---- two-shift annihilation defect -----------------------------------------

@dataclass(frozen=True)
class AnnihilationDefect:
    d1: float
    d2: float
    max_coefficient: float
    kind: str

    @property
    def uniqueness_certificate(self) -> bool:
        """Vanishing defects force f = 0 on the band when the difference is irrational."""
        return self.kind == "irrational-exact"

    def text(self) -> str:
        lines = [f"defect_theta1 = {float(self.d1)!r}", f"defect_theta2 = {float(self.d2)!r}",
                 f"max_coefficient = {float(self.max_coefficient)!r}",
                 f"difference = {self.kind}"]
        if self.uniqueness_certificate:
            lines.append("certificate = zero defects force all coefficients to vanish")
        return "\n".join(lines)


def two_shift_fourier_annihilation(f: PeriodicFunction, shifts: ShiftPair) -> AnnihilationDefect:
    """Largest |exp(2 i pi k theta_j) c_k + exp(-2 i pi k theta_j) c_{-k}| over the band."""
    return AnnihilationDefect(odd_defect(f, shifts.theta1), odd_defect(f, shifts.theta2),
                              float(np.max(np.abs(f.coeffs))), shifts.kind)


# ---- constructive pipeline -------------------------------------------------

@dataclass(frozen=True)
class LedgerRow:
    stage: str
    description: str
    L1: float
    L2: float
    sup_grid: float


@dataclass(frozen=True)
class PipelineReport:
    rows: list
    combined: LedgerRow
    bound: LedgerRow
    verdicts: tuple
    convergent_by_theory: bool
    decomposition: ParityDecomposition
    approximant: object

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("stage,description,L1,L2,sup_grid\n")
        for r in list(self.rows) + [self.bound, self.combined]:
            buf.write(f"{r.stage},{r.description},{float(r.L1)!r},{float(r.L2)!r},{float(r.sup_grid)!r}\n")
        return buf.getvalue()


def _norms(r: np.ndarray) -> tuple[float, float, float]:
    a = np.abs(r)
    return (math.fsum(a) / a.size, math.sqrt(math.fsum(a * a) / a.size), float(np.max(a)))


def chebyshev_connection(Pj: PeriodicFunction, theta) -> np.ndarray:
    """Chebyshev coefficients of h with Pj(t) = h(cos 2pi(t - theta)), Pj even about theta."""
    a = np.array([Pj.c(k) * unit_phase(theta, k) for k in range(Pj.K + 1)])
    cheb = 2 * a
    cheb[0] = a[0]
    return cheb


def constructive_density_approx(target: PeriodicFunction, shifts: ShiftPair,
                                family1: LambdaFamily, family2: LambdaFamily,
                                N: int, stage: int, compensate_fejer: bool = False,
                                grid: int = 2048) -> PipelineReport:
    """Fejer sum, parity split, Chebyshev connection, Muntz projection, recomposition."""
    verdicts = (classify_ms(family1, -1, 1), classify_ms(family2, -1, 1))
    P = fejer_sum(target, N)
    if compensate_fejer:
        weights = 1.0 - np.abs(P.ks) / (N + 1.0)
        P = PeriodicFunction(P.coeffs / weights, real=P.real, name=f"dirichlet{N}")
    dec = parity_decompose_trig(P, shifts, "irrational", certify=False)

    t = np.arange(grid) / grid
    fv = np.asarray(target(t))
    Pv = P.trig(t)
    parts = []
    for Pj, theta, fam in ((dec.P1, shifts.theta1, family1), (dec.P2, shifts.theta2, family2)):
        cheb = chebyshev_connection(Pj, theta)
        if P.real:
            cheb = cheb.real
        h = IntervalFunction(-1.0, 1.0, lambda x, c=cheb: np.polynomial.chebyshev.chebval(x, c),
                             name="h")
        exps = fam.take(stage)
        approx = best_approx_L2(h, MuntzSystem(tuple(exps), -1.0, 1.0)) if exps else None
        u = np.cos(2 * np.pi * ((t - float(theta)) % 1.0))
        pj = Pj.trig(t)
        pij = approx(u) if approx is not None else np.zeros_like(u)
        parts.append((pj, pij, approx))
    (p1, pi1, a1), (p2, pi2, a2) = parts
    r_fejer = fv - Pv
    r_dec = Pv - p1 - p2
    r_m1 = p1 - pi1
    r_m2 = p2 - pi2
    rows = [LedgerRow("fejer", f"target - fejer sum (N = {N})", *_norms(r_fejer)),
            LedgerRow("decomposition", "P - P1 - P2", *_norms(r_dec)),
            LedgerRow("muntz1", f"P1 - pi1 ({stage} exponents)", *_norms(r_m1)),
            LedgerRow("muntz2", f"P2 - pi2 ({stage} exponents)", *_norms(r_m2))]
    # summing the stage residuals reproduces target - pi1 - pi2; the bound is
    # inflated by a few units of roundoff so it stays an upper bound in floats
    combined = LedgerRow("combined", "target - pi1 - pi2", *_norms(r_fejer + r_dec + r_m1 + r_m2))
    inflate = 1 + 8 * np.finfo(float).eps
    bound = LedgerRow("bound", "sum of stage errors",
                      *(float(math.fsum(getattr(r, key) for r in rows) * inflate)
                        for key in ("L1", "L2", "sup_grid")))

    def approximant(tt):
        tt = np.asarray(tt, dtype=float)
        out = np.zeros(tt.shape)
        for (_, _, ap), theta in ((parts[0], shifts.theta1), (parts[1], shifts.theta2)):
            if ap is not None:
                out = out + ap(np.cos(2 * np.pi * ((tt - float(theta)) % 1.0)))
        return out

    ok = all(v.is_ms for v in verdicts) and shifts.kind == "irrational-exact"
    return PipelineReport(rows, combined, bound, verdicts, ok, dec, approximant)
