"""Exact reals in Q(sqrt d) and the Diophantine helpers built on them.

Three kinds of value are supported: rationals, quadratic surds
``(p + q*sqrt(d)) / r`` and binary64 literals.  Arithmetic between exact
values stays exact as long as only one radicand is involved; anything
touching a float degrades to a :class:`FloatLiteral`.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional, Union

from .errors import InvalidArgument, NormalizationError

Number = Union[int, Fraction, "SymbolicReal", float]

# extra bits used when rounding surds to binary64
_GUARD_BITS = 96


def _squarefree_split(d: int) -> tuple[int, int]:
    """Return (s, c) with d = s**2 * c and c squarefree."""
    s, c = 1, d
    f = 2
    while f * f <= c:
        while c % (f * f) == 0:
            c //= f * f
            s *= f
        f += 1
    return s, c


def _is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def _field_sign(a: Fraction, b: Fraction, d: int) -> int:
    """Exact sign of a + b*sqrt(d)."""
    sa = (a > 0) - (a < 0)
    sb = (b > 0) - (b < 0)
    if sb == 0 or d == 0:
        return sa
    if sa == 0:
        return sb
    if sa == sb:
        return sa
    # opposite signs: compare magnitudes through squares
    diff = a * a - b * b * d
    if diff == 0:
        return 0
    return sa if diff > 0 else sb


def _field_floor(a: Fraction, b: Fraction, d: int) -> int:
    if b == 0:
        return math.floor(a)
    num, den = b.numerator, b.denominator
    root = math.isqrt(num * num * d)
    est = a + (root if num > 0 else -root) / Fraction(den)
    n = math.floor(est)
    while _field_sign(a - n, b, d) < 0:
        n -= 1
    while _field_sign(a - (n + 1), b, d) >= 0:
        n += 1
    return n


def _field_to_float(a: Fraction, b: Fraction, d: int) -> float:
    if b == 0:
        return float(a)
    num, den = b.numerator, b.denominator
    scale = 1 << _GUARD_BITS
    root = math.isqrt(num * num * d * scale * scale)
    # root/scale approximates |num|*sqrt(d) from below to 2**-96
    approx = a + Fraction(root if num > 0 else -root, scale * den)
    return float(approx)


@dataclass(frozen=True)
class SymbolicReal:
    """Common behaviour of the three real-number variants."""

    @property
    def exact(self) -> bool:
        return True

    def field(self) -> tuple[Fraction, Fraction, int]:
        """Coordinates (a, b, d) with value a + b*sqrt(d)."""
        raise NotImplementedError

    # ---- arithmetic -------------------------------------------------
    def _combine(self, other, op):
        other = as_real(other)
        if not (self.exact and other.exact):
            return FloatLiteral(op(float(self), float(other)))
        a1, b1, d1 = self.field()
        a2, b2, d2 = other.field()
        if b1 == 0:
            d = d2
        elif b2 == 0 or d1 == d2:
            d = d1
        else:
            raise InvalidArgument(
                f"sqrt({d1}) and sqrt({d2}) do not live in a common quadratic field")
        return op((a1, b1, d), (a2, b2, d))

    def __add__(self, other):
        def op(x, y):
            if isinstance(x, float):
                return x + y
            return from_field(x[0] + y[0], x[1] + y[1], x[2])
        return self._combine(other, op)

    __radd__ = __add__

    def __neg__(self):
        if not self.exact:
            return FloatLiteral(-float(self))
        a, b, d = self.field()
        return from_field(-a, -b, d)

    def __sub__(self, other):
        return self + (-as_real(other))

    def __rsub__(self, other):
        return as_real(other) + (-self)

    def __mul__(self, other):
        def op(x, y):
            if isinstance(x, float):
                return x * y
            (a1, b1, d), (a2, b2, _) = x, y
            return from_field(a1 * a2 + b1 * b2 * d, a1 * b2 + a2 * b1, d)
        return self._combine(other, op)

    __rmul__ = __mul__

    def reciprocal(self) -> "SymbolicReal":
        if not self.exact:
            return FloatLiteral(1.0 / float(self))
        a, b, d = self.field()
        norm = a * a - b * b * d
        if norm == 0:
            raise ZeroDivisionError("division by an exact zero")
        return from_field(a / norm, -b / norm, d)

    def __truediv__(self, other):
        return self * as_real(other).reciprocal()

    def __rtruediv__(self, other):
        return as_real(other) * self.reciprocal()

    # ---- comparisons ------------------------------------------------
    def sign(self) -> int:
        if not self.exact:
            v = float(self)
            return (v > 0) - (v < 0)
        return _field_sign(*self.field())

    def _cmp(self, other) -> int:
        return (self - as_real(other)).sign()

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except (TypeError, InvalidArgument):
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash(float(self))

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __floor__(self) -> int:
        if not self.exact:
            return math.floor(float(self))
        return _field_floor(*self.field())

    def frac(self) -> "SymbolicReal":
        """Fractional part in [0, 1), exact for exact inputs."""
        return self - math.floor(self)

    def dist_to_int(self) -> "SymbolicReal":
        f = self.frac()
        g = 1 - f
        return f if f <= g else g

    def round_nearest(self) -> int:
        return math.floor(self + Fraction(1, 2))


@dataclass(frozen=True, eq=False)
class Rational(SymbolicReal):
    numerator: int
    denominator: int = 1

    def __post_init__(self):
        if self.denominator == 0:
            raise InvalidArgument("zero denominator")
        f = Fraction(self.numerator, self.denominator)
        object.__setattr__(self, "numerator", f.numerator)
        object.__setattr__(self, "denominator", f.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def field(self):
        return self.value, Fraction(0), 1

    def __float__(self):
        return float(self.value)

    def __str__(self):
        if self.denominator == 1:
            return str(self.numerator)
        return f"{self.numerator}/{self.denominator}"


@dataclass(frozen=True, eq=False)
class QuadraticSurd(SymbolicReal):
    """(p + q*sqrt(d)) / r with q != 0, d squarefree > 1, r > 0, gcd(p, q, r) = 1."""

    p: int
    q: int
    d: int
    r: int = 1

    def __post_init__(self):
        p, q, d, r = self.p, self.q, self.d, self.r
        if r == 0:
            raise InvalidArgument("zero denominator")
        if d <= 0:
            raise InvalidArgument(f"radicand must be positive, got {d}")
        if q == 0 or _is_square(d):
            raise NormalizationError(
                f"({p}+{q}*sqrt({d}))/{r} is rational; use Rational instead")
        s, d = _squarefree_split(d)
        q *= s
        if r < 0:
            p, q, r = -p, -q, -r
        g = math.gcd(math.gcd(p, q), r)
        object.__setattr__(self, "p", p // g)
        object.__setattr__(self, "q", q // g)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "r", r // g)

    def field(self):
        return Fraction(self.p, self.r), Fraction(self.q, self.r), self.d

    def __float__(self):
        return _field_to_float(*self.field())

    def __str__(self):
        rad = f"sqrt({self.d})" if abs(self.q) == 1 else f"{abs(self.q)}*sqrt({self.d})"
        sign = "-" if self.q < 0 else "+"
        if self.p == 0:
            num = rad if self.q > 0 else f"-{rad}"
        else:
            num = f"{self.p}{sign}{rad}"
        if self.r == 1:
            return num
        return f"{num}/{self.r}" if self.p == 0 else f"({num})/{self.r}"


@dataclass(frozen=True, eq=False)
class FloatLiteral(SymbolicReal):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise InvalidArgument("non-finite float literal")

    @property
    def exact(self) -> bool:
        return False

    def field(self):
        # the binary64 value is itself a dyadic rational
        return Fraction(self.value), Fraction(0), 1

    def __float__(self):
        return self.value

    def __str__(self):
        return repr(self.value)


def from_field(a: Fraction, b: Fraction, d: int) -> SymbolicReal:
    """Build the normalized value a + b*sqrt(d)."""
    if b == 0 or d == 1:
        v = Fraction(a) + (Fraction(b) if d == 1 else 0)
        return Rational(v.numerator, v.denominator)
    s, c = _squarefree_split(d)
    if c == 1:
        v = Fraction(a) + Fraction(b) * s
        return Rational(v.numerator, v.denominator)
    a, b = Fraction(a), Fraction(b)
    r = a.denominator * b.denominator // math.gcd(a.denominator, b.denominator)
    return QuadraticSurd(int(a * r), int(b * r), d, r)


def sqrt(n: int) -> SymbolicReal:
    if n < 0:
        raise InvalidArgument("sqrt of a negative integer")
    if _is_square(n):
        return Rational(math.isqrt(n))
    return QuadraticSurd(0, 1, n, 1)


def as_real(x: Number) -> SymbolicReal:
    if isinstance(x, SymbolicReal):
        return x
    if isinstance(x, bool):
        raise InvalidArgument("booleans are not reals")
    if isinstance(x, int):
        return Rational(x)
    if isinstance(x, Fraction):
        return Rational(x.numerator, x.denominator)
    if isinstance(x, float):
        return FloatLiteral(x)
    if isinstance(x, str):
        return parse_real(x)
    raise TypeError(f"cannot interpret {x!r} as a real number")


# ---- text syntax ------------------------------------------------------

def parse_real(text: str) -> SymbolicReal:
    """Parse ``p/q``, ``sqrt(d)``, ``(p+q*sqrt(d))/r`` or a decimal literal.

    Any +, -, *, / combination of integers and ``sqrt(int)`` is accepted and
    evaluated exactly.  Decimal literals become :class:`FloatLiteral`.
    """
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise InvalidArgument(f"cannot parse real {text!r} (column {exc.offset})") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and not isinstance(node.value, bool):
            if isinstance(node.value, int):
                return Rational(node.value)
            if isinstance(node.value, float):
                return FloatLiteral(node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)):
            lhs, rhs = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return lhs + rhs
            if isinstance(node.op, ast.Sub):
                return lhs - rhs
            if isinstance(node.op, ast.Mult):
                return lhs * rhs
            return lhs / rhs
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id == "sqrt" and len(node.args) == 1 and not node.keywords):
            arg = ev(node.args[0])
            if not isinstance(arg, Rational) or arg.denominator != 1:
                raise InvalidArgument(f"sqrt() takes a nonnegative integer in {text!r}")
            return sqrt(arg.numerator)
        col = getattr(node, "col_offset", 0) + 1
        raise InvalidArgument(f"unsupported syntax in real {text!r} at column {col}")

    return ev(tree)


# ---- continued fractions ---------------------------------------------

@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients [a0; a1, a2, ...] with optional detected period.

    ``period`` holds the repeating block of a quadratic surd and
    ``preperiod`` the number of leading quotients before it starts.
    ``truncated`` flags expansions computed from a binary64 literal.
    """

    partial_quotients: tuple[int, ...]
    period: Optional[tuple[int, ...]] = None
    preperiod: int = 0
    terminated: bool = False
    truncated: bool = False

    def convergents(self) -> Iterator[tuple[int, int]]:
        p_prev, q_prev, p, q = 1, 0, self.partial_quotients[0], 1
        yield p, q
        for a in self.partial_quotients[1:]:
            p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
            yield p, q


def continued_fraction(x: Number, depth: int) -> ContinuedFraction:
    if depth < 1:
        raise InvalidArgument("depth must be at least 1")
    x = as_real(x)
    if isinstance(x, QuadraticSurd):
        return _surd_cf(x, depth)
    value = x.field()[0]
    quotients = []
    terminated = False
    while len(quotients) < depth:
        a = math.floor(value)
        quotients.append(a)
        rest = value - a
        if rest == 0:
            terminated = True
            break
        value = 1 / rest
    return ContinuedFraction(tuple(quotients), terminated=terminated, truncated=not x.exact)


def _surd_cf(x: QuadraticSurd, depth: int) -> ContinuedFraction:
    # write x = (P + sqrt(D)) / Q with Q | D - P^2
    D = x.q * x.q * x.d
    P, Q = (x.p, x.r) if x.q > 0 else (-x.p, -x.r)
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    root = math.isqrt(D)
    seen: dict[tuple[int, int], int] = {}
    quotients: list[int] = []
    period = None
    preperiod = 0
    i = 0
    while len(quotients) < depth or period is None:
        state = (P, Q)
        if state in seen:
            start = seen[state]
            period = tuple(quotients[start:i])
            preperiod = start
            break
        seen[state] = i
        # floor((P + sqrt D)/Q) for irrational sqrt D
        a = (P + root) // Q if Q > 0 else -((P + root) // -Q) - 1
        quotients.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
        i += 1
    # extend by periodicity if the period was found before `depth`
    out = list(quotients)
    while len(out) < depth:
        out.append(period[(len(out) - preperiod) % len(period)])
    return ContinuedFraction(tuple(out[:depth]), period=period, preperiod=preperiod)


# ---- rationality of differences ---------------------------------------

class DifferenceClass(NamedTuple):
    kind: str  # "rational", "irrational-exact" or "float-unknown"
    ratio: Optional[Fraction]
    inexact: bool


def difference_class(theta1: Number, theta2: Number) -> DifferenceClass:
    """Classify theta1 - theta2.

    A difference involving a float is reported as ``float-unknown``; its
    ``ratio`` still carries the exact dyadic value of the binary64 difference.
    """
    t1, t2 = as_real(theta1), as_real(theta2)
    if not (t1.exact and t2.exact):
        diff = Fraction(float(t1)) - Fraction(float(t2))
        return DifferenceClass("float-unknown", diff, True)
    try:
        diff = t1 - t2
    except InvalidArgument:
        # distinct squarefree radicands: sqrt(d1), sqrt(d2), 1 are Q-independent
        return DifferenceClass("irrational-exact", None, False)
    if isinstance(diff, Rational):
        return DifferenceClass("rational", diff.value, False)
    return DifferenceClass("irrational-exact", None, False)


def rational_difference(theta1: Number, theta2: Number) -> Optional[tuple[int, int]]:
    """(m, n) in lowest terms with theta1 - theta2 = m/n, or None if irrational.

    For float inputs the binary64 values are compared exactly, so the
    answer is always a dyadic rational; use :func:`difference_class` to see
    the inexact flag.
    """
    cls = difference_class(theta1, theta2)
    if cls.ratio is None:
        return None
    return cls.ratio.numerator, cls.ratio.denominator


# ---- Diophantine scans -----------------------------------------------

def _exact_bound(C, a, n: int) -> Fraction:
    """C * n**(-a) as a fraction; exact when a is an integer and C is rational."""
    a_r, c_r = as_real(a), as_real(C)
    if isinstance(a_r, Rational) and a_r.denominator == 1 and isinstance(c_r, Rational):
        return c_r.value / Fraction(n) ** a_r.numerator
    return Fraction(float(c_r) * float(n) ** (-float(a_r)))


def approximability_witnesses(theta: Number, a, C, n_max: int) -> list[tuple[int, int]]:
    """All (m, n), 1 <= n <= n_max, m = round(n*theta), with |m - n*theta| < C * n**(-a)."""
    t = as_real(theta)
    if isinstance(t, Rational):
        raise InvalidArgument("approximability is a property of irrational numbers")
    if n_max < 1:
        raise InvalidArgument("n_max must be at least 1")
    out = []
    for n in range(1, n_max + 1):
        nt = n * t
        m = nt.round_nearest()
        if abs(m - nt) < _exact_bound(C, a, n):
            out.append((m, n))
    return out


def min_half_integer_distance(theta: Number, K: int) -> tuple[int, float]:
    """min over 1 <= |k| <= K of dist(2*k*theta, Z) and the smallest k > 0 attaining it."""
    if K < 1:
        raise InvalidArgument("K must be at least 1")
    t = as_real(theta)
    best_k, best = 1, (2 * t).dist_to_int()
    for k in range(2, K + 1):
        d = (2 * k * t).dist_to_int()
        if d < best:
            best_k, best = k, d
    return best_k, float(best)


def phase_mod1(theta: Number, m: int) -> float:
    """frac(m * theta) rounded to binary64 after exact reduction."""
    return float((m * as_real(theta)).frac())
