"""Systems of powers of a smooth map psi: injectivity, fold maps and annihilators.

A smooth map must satisfy the standing hypothesis that psi' and psi'' never
vanish together.  When psi has a single interior extremum x0 the two
monotone branches are exchanged by a fold map phi with psi(phi(x)) = psi(x),
and any seed on the right branch extends to a function whose integrals
against every power psi**lam cancel.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union as TUnion

import numpy as np

from .errors import (CertificationError, HypothesisViolation, InvalidArgument,
                     MultiFoldError, PreconditionViolation)
from .funcrep import GL_ORDER, IntervalFunction, QuadratureRule, gauss_legendre, norm
from .indexsets import LambdaFamily, MSVerdict, classify_ms
from .realnum import as_real

Vec = Callable[[np.ndarray], np.ndarray]

HYPOTHESIS_GRID = 2048
BISECT_STEPS = 80


def _bisect(fun: Vec, lo, hi, target=0.0, tol: float = 0.0) -> np.ndarray:
    """Vectorized bisection for fun(x) = target, fun monotone on each [lo, hi]."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    target = np.broadcast_to(np.asarray(target, dtype=float), np.broadcast(lo, hi).shape)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    f_lo = fun(lo) - target
    f_hi = fun(hi) - target
    # targets a rounding error outside the bracket snap to the nearer end
    unbracketed = np.sign(f_lo) == np.sign(f_hi)
    snap = np.where(np.abs(f_lo) <= np.abs(f_hi), lo, hi)
    for _ in range(BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        f_mid = fun(mid) - target
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
        if tol and np.all(hi - lo <= tol):
            break
    return np.where(unbracketed, snap, 0.5 * (lo + hi))


def level_preimage(psi: "SmoothMap", y, lo: float, hi: float, ref: float) -> np.ndarray:
    """x in [lo, hi] (a monotone piece of psi) with psi(x) = y.

    After bisection, Newton steps on int_ref^x psi' - (y - psi(ref)) refine
    the root; this stays accurate where psi is flat, e.g. next to a fold at ref.
    """
    y = np.asarray(y, dtype=float)
    x = _bisect(psi.psi, np.full_like(y, lo), np.full_like(y, hi), target=y)
    nodes, weights = gauss_legendre(GL_ORDER)
    rhs = y - float(psi(ref))
    for _ in range(3):
        h = x - ref
        t = ref + h[..., None] * nodes
        H = h * (np.asarray(psi.dpsi(t)) @ weights) - rhs
        d = np.asarray(psi.dpsi(x), dtype=float)
        ok = np.abs(d) > 0
        step = np.where(ok, H / np.where(ok, d, 1.0), 0.0)
        step = np.where(np.abs(step) <= 1e-6 * (psi.b - psi.a), step, 0.0)
        x = np.clip(x - step, lo, hi)
    return x


@dataclass(frozen=True)
class SmoothMap:
    """psi on [a, b] with its first two derivatives (all vectorized)."""

    a: float
    b: float
    psi: Vec
    dpsi: Vec
    d2psi: Vec
    name: str = ""

    def __post_init__(self):
        if not self.a < self.b:
            raise InvalidArgument(f"empty interval [{self.a}, {self.b}]")
        bad = self._hypothesis_failure()
        if bad is not None:
            raise HypothesisViolation(
                f"psi' and psi'' both vanish near x = {bad:.15g} for {self.name or 'psi'}",
                point=bad)

    def __call__(self, x):
        return np.asarray(self.psi(np.asarray(x, dtype=float)), dtype=float)

    def grid(self, n: int = HYPOTHESIS_GRID) -> np.ndarray:
        return np.linspace(self.a, self.b, n)

    def _hypothesis_failure(self) -> Optional[float]:
        x = self.grid()
        d1 = np.asarray(self.dpsi(x), dtype=float)
        d2 = np.asarray(self.d2psi(x), dtype=float)
        s1 = max(float(np.max(np.abs(d1))), 1e-300)
        s2 = max(float(np.max(np.abs(d2))), 1e-300)
        cands = [x[0], x[-1]]
        cands += list(_sign_change_roots(self.dpsi, x, d1))
        # tangential zeros of psi' show up as local minima of |psi'|
        ad = np.abs(d1)
        for i in range(1, len(x) - 1):
            if ad[i] < ad[i - 1] and ad[i] <= ad[i + 1]:
                cands.append(_ternary_min(lambda t: abs(float(self.dpsi(np.array(t)))),
                                          x[i - 1], x[i + 1]))
        for z in cands:
            z_arr = np.array(z, dtype=float)
            if abs(float(self.dpsi(z_arr))) <= 1e-8 * s1 and abs(float(self.d2psi(z_arr))) <= 1e-8 * s2:
                return float(z)
        return None

    def range(self) -> tuple[float, float]:
        """psi([a, b]) as (min, max), using endpoints and interior critical points."""
        x = self.grid()
        pts = [self.a, self.b] + list(_sign_change_roots(self.dpsi, x, np.asarray(self.dpsi(x))))
        vals = self(np.array(pts))
        return _snap(float(np.min(vals))), _snap(float(np.max(vals)))

    def sup(self) -> float:
        lo, hi = self.range()
        return max(abs(lo), abs(hi))


def _snap(v: float) -> float:
    return 0.0 if abs(v) < 1e-12 else v


def _ternary_min(fun, lo: float, hi: float, steps: int = 200) -> float:
    for _ in range(steps):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if fun(m1) <= fun(m2):
            hi = m2
        else:
            lo = m1
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


def _sign_change_roots(d: Vec, x: np.ndarray, dx: np.ndarray) -> list[float]:
    """Interior zeros of d located from grid sign changes and refined by bisection."""
    s = np.sign(dx)
    roots = []
    for i in range(1, len(x) - 1):
        if s[i] == 0 and s[i - 1] * s[i + 1] < 0:
            roots.append(float(x[i]))
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        roots.append(float(_bisect(d, x[i], x[i + 1], tol=1e-15)))
    return sorted(roots)


# ---- injectivity -----------------------------------------------------------

@dataclass(frozen=True)
class Injective:
    direction: int  # +1 increasing, -1 decreasing

    def text(self) -> str:
        return "injective (" + ("increasing" if self.direction > 0 else "decreasing") + ")"


@dataclass(frozen=True)
class Fold:
    x0: float
    kind: str  # "max" or "min"

    def text(self) -> str:
        return f"fold at x0 = {float(self.x0)!r} ({self.kind})"


def critical_points(psi: SmoothMap) -> list[float]:
    x = psi.grid()
    return _sign_change_roots(psi.dpsi, x, np.asarray(psi.dpsi(x)))


def detect_injectivity(psi: SmoothMap) -> TUnion[Injective, Fold]:
    crit = critical_points(psi)
    if len(crit) > 1:
        raise MultiFoldError(crit)
    if not crit:
        return Injective(1 if psi(psi.b) > psi(psi.a) else -1)
    x0 = crit[0]
    kind = "max" if float(psi.d2psi(np.array(x0))) < 0 else "min"
    return Fold(x0, kind)


# ---- fold structure -------------------------------------------------------

@dataclass(frozen=True)
class FoldStructure:
    psi: SmoothMap
    x0: float
    a_left: float  # a'
    b_right: float  # b'
    kind: str
    orientation: int = -1

    def phi(self, x) -> np.ndarray:
        """Right-branch partner of left-branch points x in [a', x0]."""
        x = np.asarray(x, dtype=float)
        u = _bisect(self.psi.psi, np.full_like(x, self.x0), np.full_like(x, self.b_right),
                    target=self.psi(x))
        return self._polish(x, u, self.x0, self.b_right)

    def phi_inverse(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        u = _bisect(self.psi.psi, np.full_like(y, self.a_left), np.full_like(y, self.x0),
                    target=self.psi(y))
        return self._polish(y, u, self.a_left, self.x0)

    def _polish(self, x, u, lo, hi):
        # psi is flat near x0, so matching psi values fixes u only to about
        # sqrt(eps) there.  H(u) = (1/(u-x)) int_x^u psi' is the mean slope on
        # [x, u]; its root is the partner with the trivial root u = x divided
        # out, and H'(u) = int_0^1 s psi''(x + s(u-x)) ds stays away from zero
        # near the fold.
        nodes, weights = gauss_legendre(GL_ORDER)
        for _ in range(4):
            h = u - x
            t = x[..., None] + h[..., None] * nodes
            H = np.asarray(self.psi.dpsi(t), dtype=float) @ weights
            dH = (np.asarray(self.psi.d2psi(t), dtype=float) * nodes) @ weights
            ok = np.abs(dH) > 0
            step = np.where(ok, H / np.where(ok, dH, 1.0), 0.0)
            # bisection is already accurate where psi' is not small; ignore
            # wild steps near a critical endpoint
            step = np.where(np.abs(step) <= 1e-6 * (self.psi.b - self.psi.a), step, 0.0)
            u = np.clip(u - step, lo, hi)
        return np.where(x == self.x0, self.x0, u)

    def dphi(self, x) -> np.ndarray:
        """phi'(x) = psi'(x) / psi'(phi(x)), with the limit -1 at the fold point."""
        x = np.asarray(x, dtype=float)
        num = np.asarray(self.psi.dpsi(x), dtype=float)
        den = np.asarray(self.psi.dpsi(self.phi(x)), dtype=float)
        near = np.abs(x - self.x0) < 1e-12 * max(1.0, abs(self.x0))
        safe = np.where(near | (den == 0), 1.0, den)
        return np.where(near, -1.0, num / safe)

    def shared_range(self) -> tuple[float, float]:
        v = float(self.psi(self.a_left))
        top = float(self.psi(self.x0))
        return (min(v, top), max(v, top))

    def defects(self, n: int = 512) -> dict[str, float]:
        x = np.linspace(self.a_left, self.x0, n)
        y = self.phi(x)
        return {
            "psi_defect": float(np.max(np.abs(self.psi(y) - self.psi(x)))),
            "involution_defect": float(np.max(np.abs(self.phi_inverse(y) - x))),
            "fixed_point_defect": abs(float(self.phi(np.array(self.x0))) - self.x0),
            "endpoint_defect": abs(float(self.phi(np.array(self.a_left))) - self.b_right),
        }


def fold_map(psi: SmoothMap, x0: Optional[float] = None) -> FoldStructure:
    """Fold structure around the interior extremum, with maximal shared range."""
    det = detect_injectivity(psi)
    if not isinstance(det, Fold):
        raise PreconditionViolation("psi is injective; there is no fold to build")
    if x0 is not None and abs(x0 - det.x0) > 1e-8 * max(1.0, abs(x0)):
        raise PreconditionViolation(f"no critical point at {x0}; found {det.x0}", x0=det.x0)
    x0 = det.x0
    va, vb = float(psi(psi.a)), float(psi(psi.b))
    is_max = det.kind == "max"
    # the shared range ends at the less extreme endpoint value
    cut = max(va, vb) if is_max else min(va, vb)
    if va == cut:
        a_left = psi.a
        b_right = float(_bisect(psi.psi, x0, psi.b, target=cut)) if vb != cut else psi.b
    else:
        b_right = psi.b
        a_left = float(_bisect(psi.psi, psi.a, x0, target=cut))
    fs = FoldStructure(psi, x0, a_left, b_right, det.kind)
    d = fs.defects()
    if d["psi_defect"] > 1e-12 * max(1.0, psi.sup()):
        raise CertificationError("fold map does not preserve psi", residuals=d)
    return fs


# ---- annihilator ----------------------------------------------------------

@dataclass(frozen=True)
class AnnihilatorWitness:
    f: IntervalFunction
    sign: int
    residuals: dict[int, float]
    other_residuals: dict[int, float]
    bound: float
    norm_l2: float
    seed_norm_l2: float

    def samples_csv(self, n: int = 1024) -> str:
        x = np.linspace(self.f.a, self.f.b, n)
        y = np.real_if_close(self.f(x))
        buf = io.StringIO()
        buf.write("x,f\n")
        for xi, yi in zip(x, y):
            buf.write(f"{float(xi)!r},{float(np.real(yi))!r}\n")
        return buf.getvalue()


def psi_moments(f: IntervalFunction, psi: SmoothMap, cap: int,
                rule: Optional[QuadratureRule] = None) -> dict[int, complex | float]:
    """int_a^b f(x) psi(x)**lam dx for lam = 0..cap."""
    rule = rule or f.rule()
    vals = f(rule.nodes).ravel()
    p = psi(rule.nodes).ravel()
    return dict(zip(range(cap + 1), rule.moments(vals, p, range(cap + 1))))


def _extension(fs: FoldStructure, seed: IntervalFunction, sign: int) -> IntervalFunction:
    a, b, x0, al, br = fs.psi.a, fs.psi.b, fs.x0, fs.a_left, fs.b_right

    def ev(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        right = (x >= x0) & (x <= br)
        left = (x >= al) & (x < x0)
        if right.any():
            out[right] = seed(x[right])
        if left.any():
            xl = x[left]
            out[left] = sign * fs.dphi(xl) * seed(fs.phi(xl))
        return out if np.iscomplexobj(seed(np.array([x0]))) else out.real

    bps = tuple(sorted({p for p in (al, x0, br) if a < p < b}))
    return IntervalFunction(a, b, ev, breakpoints=bps, name=f"annihilator({seed.name})")


def build_annihilator(psi: SmoothMap, fold: FoldStructure, seed: IntervalFunction,
                      cap: int = 20, tol: float = 1e-10) -> AnnihilatorWitness:
    """Extend a seed on [x0, b'] across the fold so that all psi-moments vanish.

    Both extension signs are tried; the one passing the moment certificate
    is returned together with the residual table of the rejected sign.
    """
    if abs(seed.a - fold.x0) > 1e-12 * max(1.0, abs(fold.x0)) or abs(seed.b - fold.b_right) > 1e-12 * max(1.0, abs(fold.b_right)):
        raise InvalidArgument(f"seed must live on [x0, b'] = [{fold.x0}, {fold.b_right}]")
    seed_norm = norm(seed, "L2")
    if seed_norm == 0:
        raise PreconditionViolation("seed is identically zero")
    tables, norms = {}, {}
    for s in (1, -1):
        f = _extension(fold, seed, s)
        rule = f.rule(n_panels=32)
        tables[s] = {k: abs(v) for k, v in psi_moments(f, psi, cap, rule).items()}
        norms[s] = norm(f, "L2", rule)
    scale = max(1.0, psi.sup() ** cap)
    chosen = None
    for s in (1, -1):
        bound = tol * norms[s] * scale
        if max(tables[s].values()) < bound and norms[s] >= 0.1 * seed_norm:
            chosen = s
            break
    if chosen is None:
        raise CertificationError("no extension sign annihilates the psi-powers",
                                 residuals={"+1": tables[1], "-1": tables[-1]})
    return AnnihilatorWitness(_extension(fold, seed, chosen), chosen, tables[chosen],
                              tables[-chosen], tol * norms[chosen] * scale,
                              norms[chosen], seed_norm)


# ---- density verdict -------------------------------------------------------

@dataclass(frozen=True)
class DensityReport:
    injective: bool
    detection: TUnion[Injective, Fold]
    J: tuple[float, float]
    ms_on_J: MSVerdict
    dense: bool
    witness: Optional[AnnihilatorWitness] = None

    def text(self) -> str:
        lines = [
            f"injectivity = {self.detection.text()}",
            f"J = [{float(self.J[0])!r}, {float(self.J[1])!r}]",
            f"ms_on_J = {self.ms_on_J.text()}",
            f"dense = {'yes' if self.dense else 'no'}",
        ]
        if self.witness is not None:
            w = self.witness
            lines += [f"witness_sign = {w.sign:+d}",
                      f"witness_max_residual = {float(max(w.residuals.values()))!r}",
                      f"witness_bound = {float(w.bound)!r}",
                      f"witness_norm_l2 = {float(w.norm_l2)!r}"]
        return "\n".join(lines)


def density_verdict(psi: SmoothMap, family: LambdaFamily,
                    seed: Optional[IntervalFunction] = None, cap: int = 20) -> DensityReport:
    det = detect_injectivity(psi)
    lo, hi = psi.range()
    verdict = classify_ms(family, as_real(lo), as_real(hi))
    if isinstance(det, Injective):
        return DensityReport(True, det, (lo, hi), verdict, verdict.is_ms)
    fs = fold_map(psi)
    seed = seed or IntervalFunction(fs.x0, fs.b_right, lambda x: np.ones_like(x), name="one")
    witness = build_annihilator(psi, fs, seed, cap=cap)
    return DensityReport(False, det, (lo, hi), verdict, False, witness)


# ---- named maps ------------------------------------------------------------

def _poly_map(a, b, coeffs, name):
    P = np.polynomial.Polynomial(coeffs)
    d1, d2 = P.deriv(1), P.deriv(2)
    return SmoothMap(a, b, P, d1, d2, name)


def named_map(spec: str, a: float, b: float) -> SmoothMap:
    """Builtin maps: ``square``, ``cube``, ``cos_pi``, ``cos_2pi``,
    ``cos_pi_quad`` (cos(pi t) + t**2/10), ``neg_square:c`` (-(x-c)**2),
    ``poly:c0,c1,...``."""
    spec = spec.strip()
    pi = math.pi
    if spec == "square":
        return _poly_map(a, b, [0, 0, 1], spec)
    if spec == "cube":
        return _poly_map(a, b, [0, 0, 0, 1], spec)
    if spec == "cos_pi":
        return SmoothMap(a, b, lambda t: np.cos(pi * t), lambda t: -pi * np.sin(pi * t),
                         lambda t: -pi * pi * np.cos(pi * t), spec)
    if spec == "cos_2pi":
        w = 2 * pi
        return SmoothMap(a, b, lambda t: np.cos(w * t), lambda t: -w * np.sin(w * t),
                         lambda t: -w * w * np.cos(w * t), spec)
    if spec == "cos_pi_quad":
        return SmoothMap(a, b, lambda t: np.cos(pi * t) + t * t / 10,
                         lambda t: -pi * np.sin(pi * t) + t / 5,
                         lambda t: -pi * pi * np.cos(pi * t) + 0.2 + 0 * t, spec)
    kind, _, body = spec.partition(":")
    if kind == "neg_square":
        c = float(body)
        return _poly_map(a, b, [-c * c, 2 * c, -1], spec)
    if kind == "poly":
        return _poly_map(a, b, [float(v) for v in body.split(",") if v.strip()], spec)
    raise InvalidArgument(f"unknown map {spec!r}")
