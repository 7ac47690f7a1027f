"""Parametric analysis: exact polynomial forms in the step weight alpha.

Distances and residual bounds of the one-parameter families are polynomials
in alpha on [1/2, 1).  They are recovered by sampling the exact table at
rational abscissae strictly inside (1/2, 1) and interpolating, then
validated at fresh abscissae; nothing symbolic ever enters the transport
solver.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import NonPolynomialError, UnsupportedError
from .exactnum import ONE, ZERO, NewtonInterpolator, Poly
from .metric import EXACT, FLOAT64, build_table, residual_bounds
from .schemes import KrasScheme, PairScheme, Scheme

_DEGREE_CAP = 128

# Certified brackets: 314159/100000 = 3.14159 < pi and
# pi < 3.14159292... = 355/113 (the classical upper convergent), so an exact
# comparison against either side decides the irrational inequality.
PI_LOWER = Fraction(314159, 100000)
PI_UPPER = Fraction(355, 113)


@dataclass(frozen=True)
class ParamFamily:
    """A scheme family with one free weight alpha, sampled on (1/2, 1)."""

    kind: str  # "pair" | "kras"

    def scheme_at(self, alpha: Fraction) -> Scheme:
        if self.kind == "pair":
            return PairScheme(alpha)
        if self.kind == "kras":
            return KrasScheme.constant(alpha)
        raise ValueError(f"unknown family {self.kind!r}")


@dataclass(frozen=True)
class Target:
    """What to fit: the distance d(m, n) or the residual bound R(n)."""

    kind: str  # "d" | "R"
    n: int
    m: int | None = None

    def describe(self) -> str:
        return f"d({self.m},{self.n})" if self.kind == "d" else f"R({self.n})"


@dataclass(frozen=True)
class PolyResult:
    target: Target
    poly: Poly
    samples_used: int
    validated_at: tuple[Fraction, ...]


def residual_degree_formula(n: int) -> int:
    """Observed degree of the constant-step residual polynomials,
    floor((n^2 + 6n + 1) / 4); trusted only as an interpolation hint."""
    return (n * n + 6 * n + 1) // 4


def default_degree_hint(family: ParamFamily, target: Target) -> int | None:
    if target.kind == "d" and family.kind == "pair":
        assert target.m is not None
        return min(target.m, target.n) + 1
    if target.kind == "R" and family.kind == "kras":
        return residual_degree_formula(target.n)
    return None


def _target_value(family: ParamFamily, target: Target, alpha: Fraction) -> Fraction:
    scheme = family.scheme_at(alpha)
    if target.kind == "d":
        assert target.m is not None
        table = build_table(scheme, max(target.m, target.n), mode=EXACT)
        return table.d(target.m, target.n)
    table = build_table(scheme, target.n, mode=EXACT)
    return residual_bounds(table).values[target.n]


def _sample_grid(degree: int) -> list[Fraction]:
    # alpha_t = 1/2 + t / (2 (D + 2)): distinct rationals strictly inside
    # (1/2, 1), clear of the boundary where the polynomial claims begin.
    return [Fraction(1, 2) + Fraction(t, 2 * (degree + 2)) for t in range(1, degree + 2)]


def _validation_points(degree: int, taken: set[Fraction], count: int = 3) -> list[Fraction]:
    points = []
    s = 1
    while len(points) < count:
        candidate = Fraction(1, 2) + Fraction(2 * s - 1, 4 * (degree + 2))
        if candidate < 1 and candidate not in taken:
            points.append(candidate)
        s += 1
    return points


def fit_polynomial(family: ParamFamily, target: Target,
                   degree_hint: int | None = None, threads: int = 1) -> PolyResult:
    """Sample-and-interpolate the target as an exact polynomial in alpha.

    Samples at degree_hint + 1 grid abscissae (each one a full exact table
    build), interpolates, then demands exact agreement at three fresh
    abscissae.  On disagreement the degree hint doubles, reusing every
    point already evaluated, up to a hard cap.
    """
    hint = degree_hint if degree_hint is not None else default_degree_hint(family, target)
    if hint is None:
        raise ValueError(
            f"no default degree hint for {target.describe()} under {family.kind!r}; "
            "pass degree_hint explicitly")
    if hint < 0:
        raise ValueError("degree_hint must be >= 0")
    newton = NewtonInterpolator()
    evaluated: dict[Fraction, Fraction] = {}

    def ensure(points: Sequence[Fraction]) -> None:
        fresh = [x for x in points if x not in evaluated]
        if threads > 1 and len(fresh) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                values = list(pool.map(
                    lambda x: _target_value(family, target, x), fresh))
        else:
            values = [_target_value(family, target, x) for x in fresh]
        for x, y in zip(fresh, values):
            evaluated[x] = y
            newton.add_point(x, y)

    while True:
        ensure(_sample_grid(hint))
        validators = _validation_points(hint, set(evaluated))
        poly = newton.polynomial()
        ok = True
        for x in validators:
            direct = _target_value(family, target, x)
            if poly(x) != direct:
                ok = False
            evaluated[x] = direct
            newton.add_point(x, direct)
        if ok:
            return PolyResult(target, poly, len(evaluated), tuple(validators))
        if hint >= _DEGREE_CAP:
            raise NonPolynomialError(
                f"{target.describe()} failed validation at degree cap {_DEGREE_CAP}: "
                "non-polynomial on sampled region")
        hint = min(2 * hint if hint > 0 else 2, _DEGREE_CAP)


@dataclass(frozen=True)
class DegreeProfile:
    degrees: tuple[int, ...]
    expected: tuple[int, ...]

    @property
    def mismatches(self) -> tuple[int, ...]:
        return tuple(n + 1 for n, (got, want) in
                     enumerate(zip(self.degrees, self.expected)) if got != want)


def degree_profile(n_max: int, threads: int = 1) -> DegreeProfile:
    """Degrees of the fitted constant-step residual polynomials R_1..R_n_max,
    against the closed-form prediction."""
    family = ParamFamily("kras")
    degrees = []
    for n in range(1, n_max + 1):
        result = fit_polynomial(family, Target("R", n), threads=threads)
        degrees.append(result.poly.degree)
    expected = tuple(residual_degree_formula(n) for n in range(1, n_max + 1))
    return DegreeProfile(tuple(degrees), expected)


def hypergeom_bound(n: int, alpha: Fraction) -> Fraction:
    """Exact value of the terminating Gauss series 2F1(-n, 1/2; 2; x) at
    x = 4 alpha (1 - alpha); an upper bound for the constant-step residual."""
    if n < 1:
        raise ValueError("the bound is stated for n >= 1")
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    x = 4 * alpha * (ONE - alpha)
    total = ONE
    term = ONE
    for k in range(n):
        # term_{k+1} / term_k = ((-n + k)(1/2 + k)) / ((2 + k)(1 + k)) * x
        term = term * Fraction(-(n - k) * (2 * k + 1), 2 * (k + 2) * (k + 1)) * x
        total += term
    return total


@dataclass(frozen=True)
class SqrtBoundResult:
    verdict: str  # "certified" | "violated" | "inconclusive"
    residual: Fraction
    weight_sum: Fraction

    def __bool__(self) -> bool:
        return self.verdict == "certified"


def sqrt_bound_check(scheme: Scheme, n: int,
                     weight_sum: Fraction | None = None) -> SqrtBoundResult:
    """Decide R_n <= 1 / sqrt(pi * sum_k a_k (1 - a_k)) by exact comparison.

    Squaring removes the square root; the rational pi brackets make the
    comparison decidable without irrational arithmetic.  certified implies
    the true bound holds, violated refutes it, inconclusive is the narrow
    band between the brackets (or a vacuous n = 0 / zero-sum case).
    """
    if weight_sum is None:
        alphas = [scheme.kras_alpha(k) for k in range(1, n + 1)]
        if any(a is None for a in alphas):
            raise UnsupportedError(
                f"scheme {scheme.label!r} is not a one-step averaging family")
        weight_sum = sum((a * (ONE - a) for a in alphas), ZERO)
    table = build_table(scheme, n, mode=EXACT)
    residual = residual_bounds(table).values[n]
    if n == 0 or weight_sum == 0:
        return SqrtBoundResult("inconclusive", residual, weight_sum)
    squared = residual * residual * weight_sum
    if squared * PI_UPPER <= 1:
        return SqrtBoundResult("certified", residual, weight_sum)
    if squared * PI_LOWER > 1:
        return SqrtBoundResult("violated", residual, weight_sum)
    return SqrtBoundResult("inconclusive", residual, weight_sum)


def asymptotics(scheme: Scheme, n_max: int, mode: str = FLOAT64,
                ) -> list[tuple[int, object, float, float]]:
    """Plot-ready residual asymptotics: rows (n, R_n, R_n ln(n+1),
    R_n sqrt(ln(n+1))) for n = 1..n_max."""
    if mode == EXACT and n_max > 64:
        raise UnsupportedError(
            "exact tables beyond n = 64 grow factorially; use float64 mode")
    table = build_table(scheme, n_max, mode=mode)
    series = residual_bounds(table).values
    rows = []
    for n in range(1, n_max + 1):
        r = series[n]
        log_term = math.log(n + 1)
        rows.append((n, r, float(r) * log_term, float(r) * math.sqrt(log_term)))
    return rows
