import random
from fractions import Fraction as F

import pytest

from kmbounds.errors import NonPolynomialError, UnsupportedError
from kmbounds.exactnum import Poly
from kmbounds.metric import FLOAT64, build_table, residual_bounds
from kmbounds.parametric import (ParamFamily, Target, asymptotics,
                                 default_degree_hint, degree_profile,
                                 fit_polynomial, hypergeom_bound,
                                 residual_degree_formula, sqrt_bound_check)
from kmbounds.schemes import parse_scheme

PAIR = ParamFamily("pair")
KRAS = ParamFamily("kras")


def direct_distance(family, alpha, m, n):
    table = build_table(family.scheme_at(alpha), max(m, n))
    return table.d(m, n)


def direct_residual(family, alpha, n):
    table = build_table(family.scheme_at(alpha), n)
    return residual_bounds(table).values[n]


class TestFitPolynomial:
    def test_pair_quartic(self):
        result = fit_polynomial(PAIR, Target("d", 3, 7))
        assert result.poly == Poly.of([0, 4, -6, 4, -1])

    def test_kras_residual_quartic(self):
        result = fit_polynomial(KRAS, Target("R", 2))
        assert result.poly == Poly.of([1, -2, 4, -4, 2])

    def test_pair_constant_outside_window(self):
        # beyond twice the smaller index the rows stop interacting
        result = fit_polynomial(PAIR, Target("d", 15, 7))
        inside = fit_polynomial(PAIR, Target("d", 16, 7))
        assert result.poly.degree == 8
        assert inside.poly == Poly.of([1])

    def test_diagonal_is_zero_polynomial(self):
        result = fit_polynomial(PAIR, Target("d", 7, 7))
        assert result.poly == Poly.of([])

    def test_five_samples_recover_quartic(self):
        # straight interpolation of exact table values, no fitting machinery
        from kmbounds.exactnum import interpolate
        xs = [F(5, 8), F(11, 16), F(3, 4), F(13, 16), F(7, 8)]
        pts = [(x, direct_distance(PAIR, x, 7, 3)) for x in xs]
        assert interpolate(pts) == Poly.of([0, 4, -6, 4, -1])

    def test_fit_agrees_with_fresh_direct_evaluations(self):
        result = fit_polynomial(KRAS, Target("R", 3))
        rng = random.Random(31)
        for _ in range(3):
            alpha = F(rng.randint(101, 199), 200)
            assert result.poly(alpha) == direct_residual(KRAS, alpha, 3)

    def test_low_hint_grows_until_valid(self):
        result = fit_polynomial(KRAS, Target("R", 2), degree_hint=1)
        assert result.poly == Poly.of([1, -2, 4, -4, 2])

    def test_degree_hints(self):
        assert default_degree_hint(PAIR, Target("d", 5, 9)) == 6
        assert default_degree_hint(KRAS, Target("R", 4)) == 10
        assert default_degree_hint(KRAS, Target("d", 2, 4)) is None
        with pytest.raises(ValueError, match="degree_hint"):
            fit_polynomial(KRAS, Target("d", 2, 4))

    def test_threads_give_identical_result(self):
        sequential = fit_polynomial(PAIR, Target("d", 4, 7))
        threaded = fit_polynomial(PAIR, Target("d", 4, 7), threads=4)
        assert sequential.poly == threaded.poly


class TestPairDegreeWindow:
    def test_degree_structure_small(self):
        # inside floor(m/2) <= n < 2(m+1) with m != n the degree is
        # min(m, n) + 1; outside the polynomial is the constant 1
        m = 5
        for n in range(0, 13):
            poly = fit_polynomial(PAIR, Target("d", n, m)).poly
            if n == m:
                assert poly.degree == -1
            elif m // 2 <= n < 2 * (m + 1):
                assert poly.degree == min(m, n) + 1, n
            else:
                assert poly == Poly.of([1]), n


class TestDegreeProfile:
    def test_first_three(self):
        profile = degree_profile(3)
        assert profile.degrees == (2, 4, 7)
        assert profile.expected == (2, 4, 7)
        assert profile.mismatches == ()

    def test_formula_values(self):
        assert [residual_degree_formula(n) for n in range(1, 9)] == \
            [2, 4, 7, 10, 14, 18, 23, 28]


class TestHypergeomBound:
    def test_n1_equals_residual_polynomial(self):
        r1 = Poly.of([1, -1, 1])
        for alpha in [F(1, 2), F(5, 8), F(3, 4), F(7, 8)]:
            assert hypergeom_bound(1, alpha) == r1(alpha)

    def test_alpha_one_gives_one(self):
        assert hypergeom_bound(5, F(1)) == 1

    def test_dominates_table_residual(self):
        alpha = F(3, 4)
        bound = hypergeom_bound(3, alpha)
        assert bound >= direct_residual(KRAS, alpha, 3)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            hypergeom_bound(0, F(1, 2))
        with pytest.raises(ValueError):
            hypergeom_bound(2, F(0))


class TestSqrtBound:
    def test_kras_half_certified(self):
        assert sqrt_bound_check(parse_scheme("kras:a=1/2"), 10).verdict == "certified"

    def test_uniform_certified(self):
        assert sqrt_bound_check(parse_scheme("uniform"), 20).verdict == "certified"

    def test_degenerate_inconclusive(self):
        result = sqrt_bound_check(parse_scheme("kras:a=1/2"), 0)
        assert result.verdict == "inconclusive"

    def test_explicit_weight_sum(self):
        scheme = parse_scheme("kras:a=1/2")
        implied = sqrt_bound_check(scheme, 5)
        explicit = sqrt_bound_check(scheme, 5, weight_sum=F(5, 4))
        assert implied.weight_sum == F(5, 4)
        assert implied.verdict == explicit.verdict

    def test_non_averaging_unsupported(self):
        with pytest.raises(UnsupportedError):
            sqrt_bound_check(parse_scheme("pair:a=3/4"), 4)


class TestAsymptotics:
    def test_small_series_values(self):
        import math
        rows = asymptotics(parse_scheme("uniform"), 3, mode=FLOAT64)
        assert [r[0] for r in rows] == [1, 2, 3]
        n, r, phi, varphi = rows[0]
        assert phi == pytest.approx(r * math.log(2))
        assert varphi == pytest.approx(r * math.sqrt(math.log(2)))

    def test_exact_mode_small(self):
        rows = asymptotics(parse_scheme("kras:a=1/2"), 4, mode="exact")
        assert rows[0][1] == F(3, 4)

    def test_exact_mode_refused_for_large_n(self):
        with pytest.raises(UnsupportedError, match="float64"):
            asymptotics(parse_scheme("uniform"), 65, mode="exact")

    def test_dirac_series_well_defined(self):
        rows = asymptotics(parse_scheme("dirac"), 5, mode=FLOAT64)
        assert all(r[1] == 1.0 for r in rows)
