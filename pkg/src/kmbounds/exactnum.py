"""Exact rational scalars and univariate polynomials over them.

Every quantity in the package (weight rows, transport values, fitted
polynomials, residual bounds) is carried as a `fractions.Fraction`:
arbitrary-precision integers underneath, canonical form on construction,
so equality is structural and no rounding ever happens.  Floating point
exists only in the large-n table mode and never enters this module.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import RationalParseError

# The universal scalar of the package.
Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)

_RATIONAL_RE = re.compile(r"^(-?\d+)(?:/(\d+))?$")


def parse_rational(text: str) -> Fraction:
    """Parse `p` or `p/q` (q > 0) into a canonical Fraction.

    Deliberately stricter than Fraction's own parser: no decimals,
    exponents or whitespace, so file formats stay unambiguous.
    """
    match = _RATIONAL_RE.match(text)
    if match is None:
        raise RationalParseError(f"not a rational literal: {text!r}")
    numerator = int(match.group(1))
    den_text = match.group(2)
    if den_text is None:
        return Fraction(numerator)
    denominator = int(den_text)
    if denominator == 0:
        raise RationalParseError(f"zero denominator in {text!r}")
    return Fraction(numerator, denominator)


def format_rational(x: Fraction) -> str:
    """Render as `p` or `p/q`, the inverse of parse_rational."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def harmonic(n: int) -> Fraction:
    """n-th harmonic number 1 + 1/2 + ... + 1/n, exactly (H_0 = 0)."""
    if n < 0:
        raise ValueError("harmonic() requires n >= 0")
    total = ZERO
    for k in range(1, n + 1):
        total += Fraction(1, k)
    return total


@dataclass(frozen=True)
class Poly:
    """Univariate polynomial; coeffs[k] multiplies x**k, trailing zeros trimmed.

    The empty coefficient tuple is the zero polynomial (degree -1).
    """

    coeffs: tuple[Fraction, ...]

    @staticmethod
    def of(values: Iterable[Fraction | int]) -> "Poly":
        cs = [Fraction(v) for v in values]
        while cs and cs[-1] == 0:
            cs.pop()
        return Poly(tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: Fraction) -> Fraction:
        # Horner; exact for rational x.
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            term = format_rational(c) if k == 0 else (
                f"{format_rational(c)}*x^{k}" if k > 1 else f"{format_rational(c)}*x")
            parts.append(term)
        return " + ".join(parts)


class NewtonInterpolator:
    """Incremental exact interpolation via Newton divided differences.

    Points can be added one at a time; each addition costs O(k) divided
    differences, so adaptive degree growth never re-solves from scratch.
    """

    def __init__(self) -> None:
        self._xs: list[Fraction] = []
        self._cs: list[Fraction] = []  # cs[k] = divided difference f[x_0..x_k]

    def __len__(self) -> int:
        return len(self._xs)

    @property
    def abscissae(self) -> tuple[Fraction, ...]:
        return tuple(self._xs)

    def add_point(self, x: Fraction, y: Fraction) -> None:
        if any(x == seen for seen in self._xs):
            raise ValueError(f"duplicate abscissa {format_rational(Fraction(x))}")
        value = Fraction(y)
        for k, xk in enumerate(self._xs):
            value = (value - self._cs[k]) / (x - xk)
        self._xs.append(Fraction(x))
        self._cs.append(value)

    def __call__(self, x: Fraction) -> Fraction:
        # Evaluate the Newton form without expanding it.
        acc = ZERO
        for xk, ck in zip(reversed(self._xs[:-1]), reversed(self._cs[1:])):
            acc = (acc + ck) * (x - xk)
        return acc + (self._cs[0] if self._cs else ZERO)

    def polynomial(self) -> Poly:
        """Expand the Newton form into monomial coefficients."""
        if not self._cs:
            return Poly.of([])
        coeffs: list[Fraction] = [ZERO]
        for xk, ck in zip(reversed(self._xs[:-1]), reversed(self._cs[1:])):
            # coeffs <- (coeffs + ck) * (x - xk), mirroring the eval fold
            coeffs[0] += ck
            shifted = [ZERO] + coeffs
            for idx in range(len(coeffs)):
                shifted[idx] -= xk * coeffs[idx]
            coeffs = shifted
        coeffs[0] += self._cs[0]
        return Poly.of(coeffs)


def interpolate(points: Sequence[tuple[Fraction, Fraction]]) -> Poly:
    """The unique polynomial of degree < len(points) through all points.

    Raises ValueError on duplicate abscissae or an empty sample set.
    """
    if not points:
        raise ValueError("need at least one sample")
    newton = NewtonInterpolator()
    for x, y in points:
        newton.add_point(x, y)
    return newton.polynomial()
