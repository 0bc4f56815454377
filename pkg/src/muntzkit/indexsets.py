"""Symbolic index sets of nonnegative integers and the Muntz-Szasz case analysis.

Families are infinite or finite sets described symbolically so that the
divergence of sum 1/lambda is decided exactly rather than observed.
"""

from __future__ import annotations

import enum
import heapq
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional

from .errors import InvalidArgument
from .realnum import SymbolicReal, as_real


class Sum(enum.Enum):
    DIVERGES = "diverges"
    CONVERGES = "converges"


class LambdaFamily:
    """Base class; subclasses are frozen dataclasses."""

    def __contains__(self, n) -> bool:
        raise NotImplementedError

    def iter(self) -> Iterator[int]:
        raise NotImplementedError

    def is_finite(self) -> bool:
        raise NotImplementedError

    def reciprocal_sum(self) -> Sum:
        raise NotImplementedError

    def text(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.text()

    @property
    def contains_zero(self) -> bool:
        return 0 in self

    def take(self, n: int) -> list[int]:
        """The first n members in increasing order (fewer if the family is finite)."""
        return list(itertools.islice(self.iter(), n))

    def parity(self, odd: bool) -> "LambdaFamily":
        """Nonzero members of one parity."""
        return Filtered(self, 1 if odd else 0)


def _is_int(n) -> bool:
    return isinstance(n, int) and not isinstance(n, bool)


@dataclass(frozen=True)
class Explicit(LambdaFamily):
    members: tuple[int, ...]

    def __post_init__(self):
        vals = sorted(set(int(m) for m in self.members))
        if vals and vals[0] < 0:
            raise InvalidArgument("exponents must be nonnegative integers")
        object.__setattr__(self, "members", tuple(vals))

    def __contains__(self, n):
        return _is_int(n) and n in self.members

    def iter(self):
        return iter(self.members)

    def is_finite(self):
        return True

    def reciprocal_sum(self):
        return Sum.CONVERGES

    def text(self):
        return "explicit:[" + ",".join(map(str, self.members)) + "]"


@dataclass(frozen=True)
class Arithmetic(LambdaFamily):
    first: int
    step: int

    def __post_init__(self):
        if self.first < 0 or self.step < 1:
            raise InvalidArgument("arithmetic family needs first >= 0 and step >= 1")

    def __contains__(self, n):
        return _is_int(n) and n >= self.first and (n - self.first) % self.step == 0

    def iter(self):
        return itertools.count(self.first, self.step)

    def is_finite(self):
        return False

    def reciprocal_sum(self):
        return Sum.DIVERGES

    def text(self):
        return f"arith:{self.first},{self.step}"


@dataclass(frozen=True)
class Geometric(LambdaFamily):
    first: int
    ratio: int

    def __post_init__(self):
        if self.first < 1 or self.ratio < 2:
            raise InvalidArgument("geometric family needs first >= 1 and ratio >= 2")

    def __contains__(self, n):
        if not _is_int(n) or n < self.first or n % self.first:
            return False
        q = n // self.first
        while q % self.ratio == 0:
            q //= self.ratio
        return q == 1

    def iter(self):
        n = self.first
        while True:
            yield n
            n *= self.ratio

    def is_finite(self):
        return False

    def reciprocal_sum(self):
        return Sum.CONVERGES

    def text(self):
        return f"geom:{self.first},{self.ratio}"


def _iroot(n: int, e: int) -> int:
    r = round(n ** (1.0 / e))
    while r ** e > n:
        r -= 1
    while (r + 1) ** e <= n:
        r += 1
    return r


@dataclass(frozen=True)
class PowerOfIndex(LambdaFamily):
    """{k**exponent : k >= 1}."""

    exponent: int

    def __post_init__(self):
        if self.exponent < 2:
            raise InvalidArgument("power family needs exponent >= 2")

    def __contains__(self, n):
        return _is_int(n) and n >= 1 and _iroot(n, self.exponent) ** self.exponent == n

    def iter(self):
        return (k ** self.exponent for k in itertools.count(1))

    def is_finite(self):
        return False

    def reciprocal_sum(self):
        return Sum.CONVERGES

    def text(self):
        return f"powers:{self.exponent}"


@dataclass(frozen=True)
class Union(LambdaFamily):
    parts: tuple[LambdaFamily, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def __contains__(self, n):
        return any(n in p for p in self.parts)

    def iter(self):
        last = None
        for n in heapq.merge(*(p.iter() for p in self.parts)):
            if n != last:
                yield n
                last = n

    def is_finite(self):
        return all(p.is_finite() for p in self.parts)

    def reciprocal_sum(self):
        if any(p.reciprocal_sum() is Sum.DIVERGES for p in self.parts):
            return Sum.DIVERGES
        return Sum.CONVERGES

    def text(self):
        return "union:[" + ";".join(p.text() for p in self.parts) + "]"


@dataclass(frozen=True)
class Filtered(LambdaFamily):
    """Nonzero members of ``base`` with the given residue mod 2, optionally plus 0.

    Divergence is decided per variant: an arithmetic progression meets a
    parity class in an infinite progression or in at most one point.
    """

    base: LambdaFamily
    residue: int
    with_zero: bool = False

    def __contains__(self, n):
        if self.with_zero and n == 0:
            return True
        return _is_int(n) and n != 0 and n % 2 == self.residue and n in self.base

    def iter(self):
        if self.with_zero:
            yield 0
        if self.is_finite():
            yield from _parity_finite(self.base, self.residue)
            return
        yield from _parity_iter(self.base, self.residue)

    def is_finite(self):
        return _parity_sum(self.base, self.residue) is None

    def reciprocal_sum(self):
        return _parity_sum(self.base, self.residue) or Sum.CONVERGES

    def text(self):
        kind = "odd" if self.residue else "even"
        z = "+0" if self.with_zero else ""
        return f"{kind}{z}({self.base.text()})"


def _parity_iter(base: LambdaFamily, residue: int) -> Iterator[int]:
    for n in base.iter():
        if n != 0 and n % 2 == residue:
            yield n


def _parity_finite(base: LambdaFamily, residue: int) -> list[int]:
    """Members of a parity class already known to be finite."""
    if base.is_finite():
        return [n for n in base.iter() if n != 0 and n % 2 == residue]
    if isinstance(base, Geometric):
        return [base.first] if base.first % 2 == residue else []
    if isinstance(base, Union):
        return sorted(set().union(*(_parity_finite(p, residue) for p in base.parts)))
    # arithmetic with even step of the other parity, or a mismatched filter
    return []


def _parity_sum(base: LambdaFamily, residue: int) -> Optional[Sum]:
    """Reciprocal-sum verdict of the nonzero parity class; None if that class is finite."""
    if isinstance(base, Explicit):
        return None
    if isinstance(base, Arithmetic):
        if base.step % 2 == 0:
            return Sum.DIVERGES if base.first % 2 == residue else None
        return Sum.DIVERGES
    if isinstance(base, Geometric):
        if base.ratio % 2 == 0:
            # first * ratio^j is even for j >= 1; odd only possibly at j = 0
            return Sum.CONVERGES if residue == 0 else None
        return Sum.CONVERGES if base.first % 2 == residue else None
    if isinstance(base, PowerOfIndex):
        return Sum.CONVERGES
    if isinstance(base, Filtered):
        if base.residue != residue:
            return None
        return _parity_sum(base.base, residue)
    if isinstance(base, Union):
        verdicts = [_parity_sum(p, residue) for p in base.parts]
        if Sum.DIVERGES in verdicts:
            return Sum.DIVERGES
        if Sum.CONVERGES in verdicts:
            return Sum.CONVERGES
        return None
    raise InvalidArgument(f"unsupported family {base!r}")


def reciprocal_sum_diverges(family: LambdaFamily) -> Sum:
    """Verdict on sum of 1/lambda over the nonzero members."""
    return family.reciprocal_sum()


class Parts(NamedTuple):
    even: LambdaFamily
    odd: LambdaFamily
    zero_rule: str


def split_even_odd(family: LambdaFamily, zero: str = "if-present") -> Parts:
    """Nonzero even members, and odd members together with 0.

    ``zero='if-present'`` adjoins 0 to the odd part only when 0 belongs to
    the family; ``zero='always'`` adjoins it unconditionally.
    """
    if zero not in ("if-present", "always"):
        raise InvalidArgument(f"unknown zero rule {zero!r}")
    with_zero = zero == "always" or family.contains_zero
    return Parts(Filtered(family, 0), Filtered(family, 1, with_zero), zero)


class IntervalCase(enum.Enum):
    TOUCHES_ZERO = "touches-zero"
    AWAY_FROM_ZERO = "away-from-zero"
    STRADDLES_ZERO = "straddles-zero"


class Reason(enum.Enum):
    HARMONIC_DIVERGENT = "harmonic-divergent"
    RECIPROCAL_SUM_CONVERGENT = "reciprocal-sum-convergent"
    MISSING_ZERO = "missing-zero"
    EVEN_PART_FAILS = "even-part-fails"
    ODD_PART_FAILS = "odd-part-fails"
    BOTH_PARTS_OK = "both-parts-ok"


class MSVerdict(NamedTuple):
    is_ms: bool
    reason: Reason
    interval_case: IntervalCase

    def text(self) -> str:
        return f"{'yes' if self.is_ms else 'no'} ({self.reason.value}; {self.interval_case.value})"


def interval_case(a, b) -> IntervalCase:
    a, b = as_real(a), as_real(b)
    if not a < b:
        raise InvalidArgument(f"empty interval [{a}, {b}]")
    if a == 0 or b == 0:
        return IntervalCase.TOUCHES_ZERO
    if a > 0 or b < 0:
        return IntervalCase.AWAY_FROM_ZERO
    return IntervalCase.STRADDLES_ZERO


def classify_ms(family: LambdaFamily, a, b) -> MSVerdict:
    """Whether the family is a Muntz-Szasz sequence for the interval [a, b]."""
    case = interval_case(a, b)
    if case is IntervalCase.AWAY_FROM_ZERO:
        ok = family.reciprocal_sum() is Sum.DIVERGES
        return MSVerdict(ok, Reason.HARMONIC_DIVERGENT if ok else Reason.RECIPROCAL_SUM_CONVERGENT, case)
    if not family.contains_zero:
        return MSVerdict(False, Reason.MISSING_ZERO, case)
    if case is IntervalCase.TOUCHES_ZERO:
        ok = family.reciprocal_sum() is Sum.DIVERGES
        return MSVerdict(ok, Reason.HARMONIC_DIVERGENT if ok else Reason.RECIPROCAL_SUM_CONVERGENT, case)
    parts = split_even_odd(family)
    if parts.even.reciprocal_sum() is not Sum.DIVERGES:
        return MSVerdict(False, Reason.EVEN_PART_FAILS, case)
    if parts.odd.reciprocal_sum() is not Sum.DIVERGES:
        return MSVerdict(False, Reason.ODD_PART_FAILS, case)
    return MSVerdict(True, Reason.BOTH_PARTS_OK, case)


# ---- config syntax -------------------------------------------------------

def _split_top(body: str, sep: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in body:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out if s.strip()]


def _ints(body: str) -> list[int]:
    try:
        return [int(x) for x in body.split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidArgument(f"expected integers in {body!r}") from exc


def parse_family(text: str) -> LambdaFamily:
    """``explicit:[0,1,2]``, ``arith:first,step``, ``geom:first,ratio``,
    ``powers:e``, ``union:[fam;fam;...]``."""
    text = text.strip()
    kind, sep, body = text.partition(":")
    if not sep:
        raise InvalidArgument(f"family {text!r} lacks a kind prefix")
    kind = kind.strip()
    body = body.strip()
    if kind == "explicit":
        if not (body.startswith("[") and body.endswith("]")):
            raise InvalidArgument("explicit family must be written explicit:[...]")
        return Explicit(tuple(_ints(body[1:-1])))
    if kind == "arith":
        args = _ints(body)
        if len(args) != 2:
            raise InvalidArgument("arith needs first,step")
        return Arithmetic(*args)
    if kind == "geom":
        args = _ints(body)
        if len(args) != 2:
            raise InvalidArgument("geom needs first,ratio")
        return Geometric(*args)
    if kind == "powers":
        args = _ints(body)
        if len(args) != 1:
            raise InvalidArgument("powers needs a single exponent")
        return PowerOfIndex(args[0])
    if kind == "union":
        if not (body.startswith("[") and body.endswith("]")):
            raise InvalidArgument("union must be written union:[a;b;...]")
        return Union(tuple(parse_family(p) for p in _split_top(body[1:-1], ";")))
    raise InvalidArgument(f"unknown family kind {kind!r}")


def family_interval_text(a: SymbolicReal | Fraction | int, b) -> str:
    return f"[{as_real(a)}, {as_real(b)}]"
