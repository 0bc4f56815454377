"""Function representations, composite Gauss-Legendre quadrature and Fourier tools.

Interval functions carry vectorized evaluators.  Quadrature is composite
Gauss-Legendre of order 16 on panels; declared singularities get geometric
panel refinement (ratio 1/2) and the innermost panel is graded with the
substitution x = s + eps*u**2, which makes inverse-square-root endpoint
behaviour smooth in u.

Fourier coefficients follow c_k = int_0^1 f(t) exp(-2 i pi k t) dt.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidArgument
from .realnum import SymbolicReal, as_real, phase_mod1

GL_ORDER = 16
REFINE_DEPTH = 40

_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    if order not in _gl_cache:
        x, w = np.polynomial.legendre.leggauss(order)
        _gl_cache[order] = ((x + 1.0) / 2.0, w / 2.0)
    return _gl_cache[order]


class Smoothness(enum.Enum):
    CONTINUOUS = "continuous"
    PIECEWISE = "piecewise-continuous"
    SINGULAR = "has-integrable-singularity"


@dataclass(frozen=True)
class IntervalFunction:
    """A real or complex function on [a, b].

    ``breakpoints`` are interior points where the function may jump or kink;
    ``singularities`` are points (interior or endpoint) where it may blow up
    integrably.  The evaluator is never called at a declared singularity by
    the quadrature rules built here.
    """

    a: float
    b: float
    evaluator: Callable[[np.ndarray], np.ndarray]
    smoothness: Smoothness = Smoothness.CONTINUOUS
    singularities: tuple[float, ...] = ()
    breakpoints: tuple[float, ...] = ()
    name: str = ""

    def __post_init__(self):
        if not self.a < self.b:
            raise InvalidArgument(f"empty interval [{self.a}, {self.b}]")
        if self.singularities and self.smoothness is not Smoothness.SINGULAR:
            object.__setattr__(self, "smoothness", Smoothness.SINGULAR)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.evaluator(x))

    def rule(self, n_panels: int = 16, order: int = GL_ORDER,
             depth: int = REFINE_DEPTH) -> "QuadratureRule":
        """Quadrature rule adapted to this function's breakpoints and singularities."""
        return QuadratureRule.build(self.a, self.b, n_panels=n_panels, order=order,
                                    breakpoints=self.breakpoints,
                                    singularities=self.singularities, depth=depth)


# panel kinds: plain Gauss, graded toward left end, graded toward right end
_PLAIN, _GRADE_LEFT, _GRADE_RIGHT = 0, 1, 2


@dataclass(frozen=True)
class QuadratureRule:
    a: float
    b: float
    panels: np.ndarray  # (n, 2) panel endpoints, left to right
    kinds: np.ndarray  # (n,) panel kind
    order: int = GL_ORDER
    singularities: tuple[float, ...] = ()
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        u, w = gauss_legendre(self.order)
        lo = self.panels[:, :1]
        h = self.panels[:, 1:] - lo
        nodes = lo + h * u
        weights = h * w * np.ones_like(lo)
        left = self.kinds == _GRADE_LEFT
        right = self.kinds == _GRADE_RIGHT
        if left.any():
            nodes[left] = lo[left] + h[left] * u ** 2
            weights[left] = h[left] * 2.0 * u * w
        if right.any():
            hi = self.panels[right, 1:]
            nodes[right] = hi - h[right] * u ** 2
            weights[right] = h[right] * 2.0 * u * w
        # keep nodes increasing inside right-graded panels
        nodes[right] = nodes[right][:, ::-1]
        weights[right] = weights[right][:, ::-1]
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def total_node_count(self) -> int:
        return self.nodes.size

    @property
    def exactness_degree(self) -> int:
        """Polynomial degree integrated exactly on every panel."""
        if (self.kinds != _PLAIN).any():
            return self.order - 1
        return 2 * self.order - 1

    @property
    def x(self) -> np.ndarray:
        return self.nodes.ravel()

    @property
    def w(self) -> np.ndarray:
        return self.weights.ravel()

    @classmethod
    def build(cls, a: float, b: float, n_panels: int = 16, order: int = GL_ORDER,
              breakpoints: Sequence[float] = (), singularities: Sequence[float] = (),
              depth: int = REFINE_DEPTH) -> "QuadratureRule":
        if not a < b:
            raise InvalidArgument(f"empty interval [{a}, {b}]")
        if depth > REFINE_DEPTH:
            raise InvalidArgument(f"refinement depth is capped at {REFINE_DEPTH}")
        cuts = {float(a), float(b)}
        sing = sorted({float(s) for s in singularities if a <= s <= b})
        cuts.update(float(p) for p in breakpoints if a < p < b)
        cuts.update(sing)
        edges = sorted(cuts)
        panels = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            m = max(1, round(n_panels * (hi - lo) / (b - a)))
            grid = np.linspace(lo, hi, m + 1)
            grid[0], grid[-1] = lo, hi
            panels.extend(zip(grid[:-1], grid[1:]))
        kinds = [_PLAIN] * len(panels)
        for s in sing:
            panels, kinds = _refine_toward(panels, kinds, s, depth)
        return cls(float(a), float(b), np.array(panels, dtype=float),
                   np.array(kinds, dtype=int), order, tuple(sing))

    def halved(self) -> "QuadratureRule":
        panels, kinds = [], []
        for (lo, hi), kind in zip(self.panels, self.kinds):
            mid = 0.5 * (lo + hi)
            panels += [(lo, mid), (mid, hi)]
            kinds += [kind if kind == _GRADE_LEFT else _PLAIN,
                      kind if kind == _GRADE_RIGHT else _PLAIN]
        return QuadratureRule(self.a, self.b, np.array(panels), np.array(kinds),
                              self.order, self.singularities)

    def apply(self, values) -> complex | float:
        """Compensated weighted sum of values sampled at ``self.nodes``."""
        return fsum_dot(self.w, np.asarray(values).ravel())

    def moments(self, values, powers: np.ndarray, exponents: Sequence[int]) -> np.ndarray:
        """int values * powers**lam for each exponent, one compensated sum each."""
        v = np.asarray(values).ravel()
        p = np.asarray(powers, dtype=float).ravel()
        return np.array([fsum_dot(self.w, v * p ** lam) for lam in exponents])


def _usable_depth(s: float, h: float, depth: int) -> int:
    # graded nodes sit about 3e-5 * width from s; keep them many ulps away so
    # that evaluators see distinct points and 1 - x stays meaningful
    floor = 2.0 ** 34 * math.ulp(abs(s)) / 2.8e-5 if s != 0 else 0.0
    while depth > 0 and h * 2.0 ** -depth < floor:
        depth -= 1
    return depth


def _refine_toward(panels, kinds, s, depth):
    out_p, out_k = [], []
    for (lo, hi), kind in zip(panels, kinds):
        if lo == s and kind == _PLAIN:
            # geometric panels [s + h 2^-(j+1), s + h 2^-j], innermost graded
            h = hi - lo
            depth = _usable_depth(s, h, depth)
            seq = [(s + h * 2.0 ** -(j + 1), s + h * 2.0 ** -j) for j in range(depth)]
            out_p += [(s, s + h * 2.0 ** -depth)] + seq[::-1]
            out_k += [_GRADE_LEFT] + [_PLAIN] * depth
        elif hi == s and kind == _PLAIN:
            h = hi - lo
            depth = _usable_depth(s, h, depth)
            seq = [(s - h * 2.0 ** -j, s - h * 2.0 ** -(j + 1)) for j in range(depth)]
            out_p += seq + [(s - h * 2.0 ** -depth, s)]
            out_k += [_PLAIN] * depth + [_GRADE_RIGHT]
        else:
            out_p.append((lo, hi))
            out_k.append(kind)
    return out_p, out_k


def fsum_dot(weights: np.ndarray, values: np.ndarray):
    prod = weights * values
    if np.iscomplexobj(prod):
        return complex(math.fsum(prod.real), math.fsum(prod.imag))
    return math.fsum(prod)


class Integral(NamedTuple):
    value: complex | float
    error: float


def _check_rule(f: IntervalFunction, rule: QuadratureRule):
    if not (math.isclose(f.a, rule.a, abs_tol=1e-15) and math.isclose(f.b, rule.b, abs_tol=1e-15)):
        raise InvalidArgument(
            f"rule on [{rule.a}, {rule.b}] does not tile the domain [{f.a}, {f.b}]")
    missing = [s for s in f.singularities if s not in rule.singularities]
    if missing:
        raise InvalidArgument(f"rule is not refined toward singularities {missing}")


def integrate(f: IntervalFunction, rule: Optional[QuadratureRule] = None) -> Integral:
    """Integral of f with an error estimate from one panel-halving comparison."""
    rule = rule or f.rule()
    _check_rule(f, rule)
    vals = f(rule.nodes)
    coarse = rule.apply(vals)
    fine_rule = rule.halved()
    fine = fine_rule.apply(f(fine_rule.nodes))
    roundoff = 8 * np.finfo(float).eps * math.fsum(np.abs(rule.w * vals.ravel()))
    # the halved rule is the more accurate value; the difference bounds its error
    return Integral(fine, abs(fine - coarse) + roundoff)


def norm(f: IntervalFunction, p: str = "L2", rule: Optional[QuadratureRule] = None,
         grid_size: int = 1025) -> float:
    """L1 or L2 norm by quadrature, or a grid maximum for ``p='Sup'``.

    The grid maximum is a lower bound for the true supremum.
    """
    p = p.upper() if p.lower() != "sup" else "Sup"
    if p == "Sup":
        if grid_size < 64:
            raise InvalidArgument("sup-norm grid needs at least 64 points")
        x = np.linspace(f.a, f.b, grid_size)
        if f.singularities:
            x = x[~np.isin(x, f.singularities)]
        return float(np.max(np.abs(f(x))))
    rule = rule or f.rule()
    _check_rule(f, rule)
    vals = np.abs(f(rule.nodes))
    if p == "L1":
        return float(rule.apply(vals))
    if p == "L2":
        return math.sqrt(max(rule.apply(vals ** 2), 0.0))
    raise InvalidArgument(f"unknown norm {p!r}")


# ---- periodic functions ----------------------------------------------

def unit_phase(theta, m: int = 1) -> complex:
    """exp(2 i pi m theta), with the argument reduced mod 1 exactly when possible."""
    if isinstance(theta, SymbolicReal):
        return complex(np.exp(2j * np.pi * phase_mod1(theta, m)))
    return complex(np.exp(2j * np.pi * ((m * float(theta)) % 1.0)))


@dataclass(frozen=True)
class PeriodicFunction:
    """1-periodic function given by coefficients c_{-K..K}, optionally with an evaluator.

    When an evaluator is present it is the function; the table is then its
    band-limited truncation.
    """

    coeffs: np.ndarray
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None
    real: bool = False
    name: str = ""

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise InvalidArgument("coefficient table must have odd length 2K+1")
        if self.real:
            c = 0.5 * (c + np.conj(c[::-1]))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def K(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @classmethod
    def from_dict(cls, table: dict[int, complex], K: Optional[int] = None, real: bool = False,
                  name: str = "") -> "PeriodicFunction":
        K = max((abs(k) for k in table), default=0) if K is None else K
        c = np.zeros(2 * K + 1, dtype=complex)
        for k, v in table.items():
            if abs(k) > K:
                raise InvalidArgument(f"coefficient index {k} exceeds bandwidth {K}")
            c[k + K] = v
        return cls(c, real=real, name=name)

    @classmethod
    def zero(cls, K: int = 0) -> "PeriodicFunction":
        return cls(np.zeros(2 * K + 1), real=True, name="zero")

    def c(self, k: int) -> complex:
        return complex(self.coeffs[k + self.K]) if abs(k) <= self.K else 0j

    def trig(self, t) -> np.ndarray:
        """Evaluate the coefficient table as a trigonometric polynomial."""
        t = np.asarray(t, dtype=float)
        phases = np.exp(2j * np.pi * np.multiply.outer(t % 1.0, self.ks))
        vals = phases @ self.coeffs
        return vals.real if self.real else vals

    def __call__(self, t) -> np.ndarray:
        if self.evaluator is not None:
            return np.asarray(self.evaluator(np.asarray(t, dtype=float)))
        return self.trig(t)

    def with_bandwidth(self, K: int) -> "PeriodicFunction":
        c = np.zeros(2 * K + 1, dtype=complex)
        m = min(K, self.K)
        c[K - m:K + m + 1] = self.coeffs[self.K - m:self.K + m + 1]
        return PeriodicFunction(c, real=self.real, name=self.name)

    def _aligned(self, other: "PeriodicFunction"):
        K = max(self.K, other.K)
        return self.with_bandwidth(K).coeffs, other.with_bandwidth(K).coeffs

    def __add__(self, other: "PeriodicFunction") -> "PeriodicFunction":
        a, b = self._aligned(other)
        return PeriodicFunction(a + b, real=self.real and other.real)

    def __sub__(self, other: "PeriodicFunction") -> "PeriodicFunction":
        a, b = self._aligned(other)
        return PeriodicFunction(a - b, real=self.real and other.real)

    def scaled(self, s: complex) -> "PeriodicFunction":
        return PeriodicFunction(self.coeffs * s, real=self.real and complex(s).imag == 0)

    def shifted(self, theta) -> "PeriodicFunction":
        """t -> f(t - theta) on the coefficient table."""
        phases = np.array([unit_phase(theta, -k) for k in self.ks])
        ev = None
        if self.evaluator is not None:
            th = float(theta)
            base = self.evaluator
            ev = lambda t: base(np.asarray(t) - th)  # noqa: E731
        return PeriodicFunction(self.coeffs * phases, ev, self.real, self.name)

    def l2_norm(self) -> float:
        """L2 norm of the coefficient table (Plancherel)."""
        return math.sqrt(math.fsum(np.abs(self.coeffs) ** 2))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "re", "im"])
        for k, v in zip(self.ks, self.coeffs):
            w.writerow([int(k), repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, real: bool = False) -> "PeriodicFunction":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        if rows and rows[0][0] == "k":
            rows = rows[1:]
        table = {int(k): complex(float(re), float(im)) for k, re, im in rows}
        return cls.from_dict(table, real=real)


def fourier_coeffs(f: Callable[[np.ndarray], np.ndarray], K: int, M: Optional[int] = None,
                   name: str = "") -> PeriodicFunction:
    """Trapezoidal Fourier coefficients |k| <= K from M equispaced samples."""
    M = 4 * K + 4 if M is None else M
    if M < 4 * K + 4:
        raise InvalidArgument(f"M = {M} samples alias bandwidth {K}; need M >= {4 * K + 4}")
    t = np.arange(M) / M
    vals = np.asarray(f(t))
    spec = np.fft.fft(vals) / M
    coeffs = np.concatenate([spec[M - K:], spec[:K + 1]])
    real = not np.iscomplexobj(vals) or not np.any(np.imag(vals))
    return PeriodicFunction(coeffs, evaluator=f, real=bool(real), name=name)


def fejer_sum(f: PeriodicFunction, N: int) -> PeriodicFunction:
    """Cesaro mean sigma_N f: coefficients weighted by 1 - |k|/(N+1)."""
    if N < 0:
        raise InvalidArgument("Fejer degree must be nonnegative")
    g = f.with_bandwidth(N)
    weights = 1.0 - np.abs(g.ks) / (N + 1.0)
    return PeriodicFunction(g.coeffs * weights, real=f.real, name=f"fejer{N}({f.name})")


def periodic_trapezoid(values: np.ndarray) -> complex | float:
    """Mean of equispaced samples over one period, compensated."""
    v = np.asarray(values).ravel()
    return fsum_dot(np.full(v.size, 1.0 / v.size), v)


# ---- named builtins (config files never carry code) ------------------

def _parse_floats(body: str) -> list[float]:
    return [float(x) for x in body.split(",") if x.strip()]


def _trigpoly(body: str) -> PeriodicFunction:
    """``cos1=1,sin2=0.5,const=0.2,cos1@sqrt(2)/2=1`` (``@theta`` shifts the term)."""
    table: dict[int, complex] = {}
    for term in body.split(","):
        if not term.strip():
            continue
        key, _, val = term.partition("=")
        key = key.strip()
        amp = float(val) if val.strip() else 1.0
        shift = None
        if "@" in key:
            key, shift_text = key.split("@", 1)
            shift = as_real(shift_text)
        if key == "const":
            table[0] = table.get(0, 0) + amp
            continue
        if key[:3] not in ("cos", "sin") or not key[3:].isdigit():
            raise InvalidArgument(f"unknown trigpoly term {term!r}")
        k = int(key[3:])
        ph = unit_phase(shift, -k) if shift is not None else 1.0
        if key.startswith("cos"):
            cp, cm = amp / 2, amp / 2
        else:
            cp, cm = amp / 2j, -amp / 2j
        table[k] = table.get(k, 0) + cp * ph
        table[-k] = table.get(-k, 0) + cm * np.conj(ph)
    return PeriodicFunction.from_dict(table, real=True, name=f"trigpoly:{body}")


def _poly_eval(coeffs: list[float]):
    def ev(x):
        return np.polynomial.polynomial.polyval(x, coeffs)
    return ev


_NAMED = {
    "one": lambda x: np.ones_like(x),
    "zero": lambda x: np.zeros_like(x),
    "x": lambda x: x,
    "exp": np.exp,
    "sign": np.sign,
    "exp_sin": lambda t: np.exp(np.sin(2 * np.pi * t)),
    "abs_cos": lambda t: np.abs(np.cos(2 * np.pi * t)),
}


def named_function(spec: str) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized evaluator for a builtin name, ``poly:c0,c1,...`` or ``trigpoly:...``."""
    spec = spec.strip()
    if spec in _NAMED:
        return _NAMED[spec]
    kind, _, body = spec.partition(":")
    if kind == "poly":
        return _poly_eval(_parse_floats(body))
    if kind == "trigpoly":
        return _trigpoly(body)
    raise InvalidArgument(f"unknown function {spec!r}")


def named_periodic(spec: str, K: int = 32) -> PeriodicFunction:
    """Periodic builtin; trig polynomials keep their exact table, others are sampled."""
    spec = spec.strip()
    if spec.startswith("trigpoly:"):
        return _trigpoly(spec.partition(":")[2])
    return fourier_coeffs(named_function(spec), K, M=max(4 * K + 4, 256), name=spec)
