"""Two-family systems {psi**lam} and {psi**lam * exp(i*phase)} for a folded psi.

Branch transport turns integrals over [a, b] into moments of two functions
g, g~ on J = psi([a, b]).  Writing f+- = f(x+-)/|psi'(x+-)| for the two
preimages x- <= x0 <= x+ of a level y and u+- = exp(i*phase(x+-)),

    g  = f- + f+,
    g~ = u- f- + u+ f+,

so any pair (g, g~) with separated phases comes from a unique f.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (CertificationError, DiagnosticFailure, InvalidArgument,
                     OutOfScopeError, PhaseSeparationError, PreconditionViolation)
from .funcrep import GL_ORDER, IntervalFunction, QuadratureRule, gauss_legendre, norm
from .indexsets import Explicit, LambdaFamily, MSVerdict, classify_ms
from .muntz import annihilation_residuals, exact_annihilator_poly
from .psipower import (Fold, FoldStructure, SmoothMap, detect_injectivity, fold_map,
                       level_preimage)
from .realnum import SymbolicReal, as_real

LAMBDA_CAP = 40


@dataclass(frozen=True)
class ModulatedSystem:
    """psi with a single interior fold, a phase, two exponent families and p.

    ``alpha`` gives the default linear phase t -> alpha*t; a general real
    ``phase`` callable may be given instead.  ``p`` is a float in (1, inf)
    or the string "Sup".
    """

    psi: SmoothMap
    family: LambdaFamily
    family_mod: LambdaFamily
    alpha: Optional[SymbolicReal | float] = None
    phase: Optional[Callable[[np.ndarray], np.ndarray]] = None
    p: float | str = 2.0

    def __post_init__(self):
        if (self.alpha is None) == (self.phase is None):
            raise InvalidArgument("give exactly one of alpha or phase")
        if self.p != "Sup":
            p = float(self.p)
            if not p > 1:
                raise OutOfScopeError(
                    f"p = {self.p} is outside the range p in (1, +inf] where the modulated "
                    "density criterion holds")
        det = detect_injectivity(self.psi)
        if not isinstance(det, Fold):
            raise PreconditionViolation("psi' must change sign at exactly one interior point")
        object.__setattr__(self, "_fold", fold_map(self.psi))

    @property
    def fold(self) -> FoldStructure:
        return self._fold  # type: ignore[attr-defined]

    @property
    def alpha_value(self) -> Optional[float]:
        return None if self.alpha is None else float(self.alpha)

    def phase_of(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.phase is not None:
            return np.asarray(self.phase(x), dtype=float)
        return float(self.alpha) * x

    def J(self) -> tuple[float, float]:
        return self.psi.range()

    def shared_range(self) -> tuple[float, float]:
        return self.fold.shared_range()

    def half_gap(self, xl, xr) -> np.ndarray:
        """(phase(x+) - phase(x-)) / 2."""
        return 0.5 * (self.phase_of(xr) - self.phase_of(xl))

    def separation(self, n: int = 512) -> float:
        """min |u- - u+| over levels of the shared range, the fold level excluded."""
        fs = self.fold
        xl = np.linspace(fs.a_left, fs.x0, n + 1)[:-1]
        xr = fs.phi(xl)
        return float(np.min(np.abs(2 * np.sin(self.half_gap(xl, xr)))))

    def require_separation(self):
        if self.alpha is not None:
            a, b = self.psi.a, self.psi.b
            al = float(self.alpha)
            if al == 0:
                raise PhaseSeparationError("alpha = 0 makes u- = u+ identically")
            if not abs(al) < 1 / (b - a):
                raise PhaseSeparationError(
                    f"alpha = {self.alpha} violates -1/(b-a) < alpha < 1/(b-a) "
                    f"with b - a = {b - a!r}", alpha=al)
        sep = self.separation()
        if sep < 1e-13:
            raise PhaseSeparationError(
                f"phases coincide on the two branches (min |u- - u+| = {sep:.3e})", separation=sep)


# ---- transport ---------------------------------------------------------------

def branch_transport(f: IntervalFunction, sys: ModulatedSystem) -> tuple[IntervalFunction, IntervalFunction]:
    """(g, g~) on J with int f psi**lam = int g y**lam and
    int f exp(i*phase) psi**lam = int g~ y**lam."""
    psi, fs = sys.psi, sys.fold
    if abs(f.a - psi.a) > 1e-15 or abs(f.b - psi.b) > 1e-15:
        raise InvalidArgument("f must live on the domain of psi")
    y_top = float(psi(fs.x0))
    va, vb = float(psi(psi.a)), float(psi(psi.b))
    lo, hi = sys.J()

    def preimages(y):
        y = np.asarray(y, dtype=float)
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        in_left = (y >= min(va, y_top) - tol) & (y <= max(va, y_top) + tol)
        in_right = (y >= min(vb, y_top) - tol) & (y <= max(vb, y_top) + tol)
        xl = level_preimage(psi, y, psi.a, fs.x0, fs.x0)
        xr = level_preimage(psi, y, fs.x0, psi.b, fs.x0)
        return xl, xr, in_left, in_right

    def make(weighted: bool):
        def ev(y):
            xl, xr, il, ir = preimages(y)
            dl = np.abs(np.asarray(psi.dpsi(xl), dtype=float))
            dr = np.abs(np.asarray(psi.dpsi(xr), dtype=float))
            with np.errstate(divide="ignore", invalid="ignore"):
                fl = np.where(il, f(xl) / dl, 0)
                fr = np.where(ir, f(xr) / dr, 0)
            if weighted:
                fl = fl * np.exp(1j * sys.phase_of(xl))
                fr = fr * np.exp(1j * sys.phase_of(xr))
            return fl + fr
        return ev

    sing = {y_top}
    bps = tuple(sorted({v for v in (va, vb) if lo < v < hi}))
    scale = float(np.max(np.abs(psi.dpsi(psi.grid()))))
    for xe in (psi.a, psi.b):
        if abs(float(psi.dpsi(np.array(xe)))) < 1e-12 * scale:
            sing.add(float(psi(xe)))
    sing = tuple(sorted(sing))
    g = IntervalFunction(lo, hi, make(False), singularities=sing, breakpoints=bps,
                         name=f"g({f.name})")
    gt = IntervalFunction(lo, hi, make(True), singularities=sing, breakpoints=bps,
                          name=f"g~({f.name})")
    return g, gt


def _family_members(family: LambdaFamily, cap: int) -> list[int]:
    if cap > LAMBDA_CAP:
        raise InvalidArgument(f"lambda cap is at most {LAMBDA_CAP}")
    out = []
    for n in family.iter():
        if n > cap:
            break
        out.append(n)
    return out


def two_system_residuals(f: IntervalFunction, sys: ModulatedSystem, cap: int = 20,
                         rule: Optional[QuadratureRule] = None) -> tuple[dict, dict]:
    """Moments int f psi**lam (lam in family) and int f psi**lam exp(i*phase) (lam in family_mod)."""
    rule = rule or f.rule(n_panels=32)
    vals = f(rule.nodes).ravel()
    p = sys.psi(rule.nodes).ravel()
    mod = vals * np.exp(1j * sys.phase_of(rule.nodes).ravel())
    lam1 = _family_members(sys.family, cap)
    lam2 = _family_members(sys.family_mod, cap)
    r1 = dict(zip(lam1, rule.moments(vals, p, lam1)))
    r2 = dict(zip(lam2, rule.moments(mod, p, lam2)))
    return r1, r2


def cos_sin_residuals(f: IntervalFunction, sys: ModulatedSystem, cap: int = 20,
                      rule: Optional[QuadratureRule] = None) -> tuple[dict, dict]:
    """Moments against psi**lam cos(phase) (lam in family) and psi**lam sin(phase)
    (lam in family_mod), for the cosine/sine variant of the system."""
    rule = rule or f.rule(n_panels=32)
    vals = f(rule.nodes).ravel()
    p = sys.psi(rule.nodes).ravel()
    ph = sys.phase_of(rule.nodes).ravel()
    lam1 = _family_members(sys.family, cap)
    lam2 = _family_members(sys.family_mod, cap)
    return (dict(zip(lam1, rule.moments(vals * np.cos(ph), p, lam1))),
            dict(zip(lam2, rule.moments(vals * np.sin(ph), p, lam2))))


def residuals_csv(r1: dict, r2: dict) -> str:
    buf = io.StringIO()
    buf.write("lambda,abs_residual_family,abs_residual_modulated\n")
    for lam in sorted(set(r1) | set(r2)):
        a = repr(abs(complex(r1[lam]))) if lam in r1 else ""
        b = repr(abs(complex(r2[lam]))) if lam in r2 else ""
        buf.write(f"{lam},{a},{b}\n")
    return buf.getvalue()


# ---- annihilator from (g, g~) ------------------------------------------------

def _is_zero(h: Optional[IntervalFunction]) -> bool:
    if h is None:
        return True
    x = np.linspace(h.a, h.b, 257)
    if h.singularities:
        x = x[~np.isin(x, h.singularities)]
    return not np.any(np.abs(h(x)) > 0)


@dataclass(frozen=True)
class ModulatedWitness:
    f: IntervalFunction
    residuals: dict
    residuals_mod: dict
    norm_l1: float
    source_norm_l1: float
    bound: float


def solve_branches(sys: ModulatedSystem, g: Optional[IntervalFunction],
                   gt: Optional[IntervalFunction]) -> IntervalFunction:
    """The f on [a, b] whose branch transport is (g, g~), supported on [a', b']."""
    psi, fs = sys.psi, sys.fold
    lo, hi = sys.shared_range()
    zero = lambda y: np.zeros(np.shape(y))  # noqa: E731

    def restrict(h):
        if h is None:
            return zero
        return lambda y: np.where((y >= lo) & (y <= hi), h(np.clip(y, lo, hi)), 0)

    G, Gt = restrict(g), restrict(gt)

    def ev(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        left = (x >= fs.a_left) & (x < fs.x0)
        right = (x > fs.x0) & (x <= fs.b_right)
        for mask, is_left in ((left, True), (right, False)):
            if not mask.any():
                continue
            xs = x[mask]
            if is_left:
                xl, xr = xs, fs.phi(xs)
            else:
                xl, xr = fs.phi_inverse(xs), xs
            y = psi(xs)
            ul = np.exp(1j * sys.phase_of(xl))
            ur = np.exp(1j * sys.phase_of(xr))
            # u- - u+ without cancellation
            gap = sys.half_gap(xl, xr)
            mid = 0.5 * (sys.phase_of(xl) + sys.phase_of(xr))
            den = 2j * np.sin(-gap) * np.exp(1j * mid)
            dpsi = np.abs(np.asarray(psi.dpsi(xs), dtype=float))
            if is_left:
                out[mask] = -dpsi * (ur * G(y) - Gt(y)) / den
            else:
                out[mask] = dpsi * (ul * G(y) - Gt(y)) / den
        # the fold point itself: removable 0/0, take the one-sided limit
        at = x == fs.x0
        if at.any():
            eps = 1e-9 * max(1.0, fs.b_right - fs.a_left)
            out[at] = ev(np.array([fs.x0 + eps]))[0]
        return out

    bps = tuple(sorted({p for p in (fs.a_left, fs.x0, fs.b_right) if psi.a < p < psi.b}))
    return IntervalFunction(psi.a, psi.b, ev, breakpoints=bps, name="modulated-annihilator")


def build_modulated_annihilator(sys: ModulatedSystem, g: Optional[IntervalFunction],
                                gt: Optional[IntervalFunction], cap: int = 20,
                                tol: float = 1e-9) -> ModulatedWitness:
    """Solve the branch system for f and certify both moment families."""
    if _is_zero(g) == _is_zero(gt):
        raise PreconditionViolation("exactly one of g, g~ must be identically zero")
    sys.require_separation()
    f = solve_branches(sys, g, gt)
    rule = f.rule(n_panels=64)
    r1, r2 = two_system_residuals(f, sys, cap, rule)
    worst = max([abs(v) for v in r1.values()] + [abs(v) for v in r2.values()])
    src = g if not _is_zero(g) else gt
    src_l1 = norm(src, "L1")
    f_l1 = norm(f, "L1", rule)
    if worst >= tol:
        raise CertificationError(f"modulated annihilator residual {worst:.3e} >= {tol:.1e}",
                                 residuals={"family": r1, "modulated": r2})
    if not f_l1 > 0.01 * src_l1:
        raise CertificationError("constructed f is numerically trivial",
                                 residuals={"norm_l1": f_l1, "source_l1": src_l1})
    return ModulatedWitness(f, r1, r2, f_l1, src_l1, tol)


# ---- exact annihilators for finite families ---------------------------------

def _taylor_shift(poly: Sequence[Fraction], m: Fraction, r: Fraction) -> list[Fraction]:
    """Coefficients in t of sum poly[n] (m + r t)**n."""
    out = [Fraction(0)] * len(poly)
    for n, c in enumerate(poly):
        if c == 0:
            continue
        for k in range(n + 1):
            out[k] += c * math.comb(n, k) * m ** (n - k) * r ** k
    return out


def _monomial_to_chebyshev(poly: Sequence[Fraction]) -> list[Fraction]:
    """Exact Chebyshev coefficients via Horner with t*T_k = (T_{k+1} + T_{k-1})/2."""
    acc: list[Fraction] = [Fraction(0)]
    for c in reversed(poly):
        nxt = [Fraction(0)] * (len(acc) + 1)
        for k, v in enumerate(acc):
            if v == 0:
                continue
            if k == 0:
                nxt[1] += v
            else:
                nxt[k + 1] += v / 2
                nxt[k - 1] += v / 2
        nxt[0] += c
        acc = nxt
    return acc


def exact_annihilator(exponents: Sequence[int], lo, hi) -> IntervalFunction:
    """Nonzero polynomial on [lo, hi] with exactly vanishing moments against y**lam.

    Built in rational arithmetic and evaluated through its exact Chebyshev
    expansion, scaled so its largest Chebyshev coefficient is 1.
    """
    lo_q, hi_q = Fraction(lo), Fraction(hi)
    _, poly = exact_annihilator_poly(exponents, lo_q, hi_q)
    m, r = (lo_q + hi_q) / 2, (hi_q - lo_q) / 2
    cheb = _monomial_to_chebyshev(_taylor_shift(poly, m, r))
    big = max(abs(c) for c in cheb)
    coeffs = np.array([float(c / big) for c in cheb])
    lo_f, hi_f = float(lo), float(hi)

    def ev(y):
        t = (2 * np.asarray(y, dtype=float) - (lo_f + hi_f)) / (hi_f - lo_f)
        return np.polynomial.chebyshev.chebval(t, coeffs)

    return IntervalFunction(lo_f, hi_f, ev, name=f"annihilator{list(exponents)}")


# ---- singularity diagnostic -------------------------------------------------

@dataclass(frozen=True)
class ExponentFit:
    slope: float
    residual: float
    distances: np.ndarray
    values: np.ndarray


def singularity_exponent(sys: ModulatedSystem, p_conj: float = 2.0, levels: int = 16,
                         fail_above: float = 0.1) -> ExponentFit:
    """Fit Phi(t) ~ C |t - psi(x0)|**s near the fold level and return s.

    Phi(t) = |psi'(x-)|**(p'-1) / |sin((phase(x+) - phase(x-))/2)|**p'.
    """
    if sys.alpha is not None and float(sys.alpha) == 0:
        raise PreconditionViolation("alpha = 0: the sine factor vanishes identically")
    psi, fs = sys.psi, sys.fold
    width = fs.x0 - fs.a_left
    # geometric approach to the fold from the left branch
    xl = fs.x0 - width * 0.25 * 2.0 ** -np.arange(4, 4 + levels)
    xr = fs.phi(xl)
    nodes, weights = gauss_legendre(GL_ORDER)
    seg = fs.x0 - xl
    # psi(x0) - psi(x-) as an integral of psi', free of cancellation
    dist = np.abs(seg * (np.asarray(psi.dpsi(xl[:, None] + seg[:, None] * nodes)) @ weights))
    phi_vals = (np.abs(np.asarray(psi.dpsi(xl), dtype=float)) ** (p_conj - 1)
                / np.abs(np.sin(sys.half_gap(xl, xr))) ** p_conj)
    if not np.all(np.isfinite(phi_vals)) or np.any(phi_vals <= 0):
        raise DiagnosticFailure("Phi is not finite and positive on the sample levels",
                                samples=list(zip(dist, phi_vals)))
    X, Y = np.log(dist), np.log(phi_vals)
    A = np.stack([X, np.ones_like(X)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([slope, icpt]) - Y) ** 2)))
    if resid > fail_above:
        raise DiagnosticFailure(f"log-log fit residual {resid:.3f} > {fail_above}",
                                samples=list(zip(dist, phi_vals)))
    return ExponentFit(float(slope), resid, dist, phi_vals)


# ---- density verdict ----------------------------------------------------------

@dataclass(frozen=True)
class ModulatedReport:
    J: tuple[float, float]
    verdict: MSVerdict
    verdict_mod: MSVerdict
    dense: bool
    witness: Optional[ModulatedWitness] = None
    witness_side: str = ""

    def text(self) -> str:
        lines = [f"J = [{float(self.J[0])!r}, {float(self.J[1])!r}]",
                 f"family_verdict = {self.verdict.text()}",
                 f"modulated_verdict = {self.verdict_mod.text()}",
                 f"dense = {'yes' if self.dense else 'no'}"]
        if self.witness is not None:
            w = self.witness
            worst = max([abs(v) for v in w.residuals.values()] +
                        [abs(v) for v in w.residuals_mod.values()])
            lines += [f"witness_side = {self.witness_side}",
                      f"witness_max_residual = {float(worst)!r}",
                      f"witness_norm_l1 = {float(w.norm_l1)!r}"]
        return "\n".join(lines)


def density_verdict_modulated(sys: ModulatedSystem, cap: int = 20) -> ModulatedReport:
    if sys.p != "Sup" and not float(sys.p) > 1:
        raise OutOfScopeError("p must lie in (1, +inf]")
    lo, hi = sys.J()
    v1 = classify_ms(sys.family, as_real(lo), as_real(hi))
    v2 = classify_ms(sys.family_mod, as_real(lo), as_real(hi))
    dense = v1.is_ms and v2.is_ms
    if dense:
        return ModulatedReport((lo, hi), v1, v2, True)
    s_lo, s_hi = sys.shared_range()
    for verdict, fam, side in ((v1, sys.family, "family"), (v2, sys.family_mod, "modulated")):
        if not verdict.is_ms and isinstance(fam, Explicit):
            if fam.members and fam.members[-1] > cap:
                continue
            h = exact_annihilator(fam.members, s_lo, s_hi)
            g, gt = (h, None) if side == "family" else (None, h)
            w = build_modulated_annihilator(sys, g, gt, cap=cap)
            return ModulatedReport((lo, hi), v1, v2, False, w, side)
    return ModulatedReport((lo, hi), v1, v2, False)
