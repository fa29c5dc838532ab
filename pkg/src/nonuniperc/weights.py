"""Exact relative weights as doubled prime-exponent vectors.

A weight is stored as ``{p: e}`` meaning ``prod p ** (e / 2)``.  Vertex weights of
every shipped family are rational, so their exponents are even; odd exponents
appear only for square roots (the sqrt(w)-biased walk).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering

FLOAT_EXPONENT_CAP = 900


class WeightOverflow(OverflowError):
    """Raised when a weight is too large or too small for a double."""


@lru_cache(maxsize=4096)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    if n < 1:
        raise ValueError(f"cannot factorize {n}")
    out = []
    p = 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out.append((p, e))
        p += 1
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def _normalize(d: dict[int, int]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted((p, e) for p, e in d.items() if e))


@total_ordering
@dataclass(frozen=True)
class LogWeight:
    exps: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_ratio(cls, q: Fraction | int) -> LogWeight:
        q = Fraction(q)
        if q <= 0:
            raise ValueError("weights are positive")
        d: dict[int, int] = {}
        for p, e in factorize(q.numerator):
            d[p] = d.get(p, 0) + 2 * e
        for p, e in factorize(q.denominator):
            d[p] = d.get(p, 0) - 2 * e
        return cls(_normalize(d))

    def __add__(self, other: LogWeight) -> LogWeight:
        d = dict(self.exps)
        for p, e in other.exps:
            d[p] = d.get(p, 0) + e
        return LogWeight(_normalize(d))

    def __neg__(self) -> LogWeight:
        return LogWeight(tuple((p, -e) for p, e in self.exps))

    def __sub__(self, other: LogWeight) -> LogWeight:
        return self + (-other)

    def __bool__(self) -> bool:
        return bool(self.exps)

    def squared(self) -> Fraction:
        """Exact value of the weight squared."""
        num, den = 1, 1
        for p, e in self.exps:
            if e > 0:
                num *= p**e
            else:
                den *= p ** (-e)
        return Fraction(num, den)

    @property
    def is_rational(self) -> bool:
        return all(e % 2 == 0 for _, e in self.exps)

    def value(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self} is irrational")
        return LogWeight(tuple((p, e // 2) for p, e in self.exps)).squared()

    def sqrt(self) -> LogWeight:
        if not self.is_rational:
            raise ValueError("only rational weights have a representable square root")
        return LogWeight(tuple((p, e // 2) for p, e in self.exps))

    def log(self) -> float:
        return sum(e * math.log(p) for p, e in self.exps) / 2.0

    def to_float(self) -> float:
        if any(abs(e) > FLOAT_EXPONENT_CAP for _, e in self.exps):
            raise WeightOverflow(f"exponent beyond {FLOAT_EXPONENT_CAP}; use log()")
        try:
            return math.prod(float(p) ** (e / 2) for p, e in self.exps)
        except OverflowError as exc:
            raise WeightOverflow(str(exc)) from exc

    def level(self, primes: tuple[int, ...]) -> tuple[int, ...]:
        """Integer exponent vector over ``primes`` (undoubled)."""
        d = dict(self.exps)
        if set(d) - set(primes):
            raise ValueError(f"{self} has primes outside {primes}")
        if not self.is_rational:
            raise ValueError("levels are defined for rational weights only")
        return tuple(d.get(p, 0) // 2 for p in primes)

    def __lt__(self, other: LogWeight) -> bool:
        return self.squared() < other.squared()

    def __str__(self) -> str:
        if not self.exps:
            return "1"
        return "*".join(f"{p}^({e}/2)" for p, e in self.exps)


ONE = LogWeight()
