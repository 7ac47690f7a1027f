"""Independent oracles used by the test suite.

`brute_force_optimum` exhaustively minimizes over all basic feasible
transport plans: every basic solution arises from some sequence of
row-or-column saturations (peel a leaf of its basis tree), so recursing
over all (supply, demand) saturation choices and memoizing on the residual
marginals visits every vertex of the transportation polytope.  It never
touches the simplex code it is used to check.
"""

from fractions import Fraction as F

ZERO = F(0)


def brute_force_optimum(mu, nu, cost_fn):
    C = [[cost_fn(i, j) for j in range(len(nu))] for i in range(len(mu))]
    memo = {}

    def best(s, d):
        key = (s, d)
        cached = memo.get(key)
        if cached is not None:
            return cached
        live_i = [i for i, v in enumerate(s) if v > 0]
        if not live_i:
            return ZERO
        live_j = [j for j, v in enumerate(d) if v > 0]
        res = None
        for i in live_i:
            for j in live_j:
                a = s[i] if s[i] < d[j] else d[j]
                s2 = list(s)
                d2 = list(d)
                s2[i] -= a
                d2[j] -= a
                c = a * C[i][j] + best(tuple(s2), tuple(d2))
                if res is None or c < res:
                    res = c
        memo[key] = res
        return res

    return best(tuple(mu), tuple(nu))


def random_weight_row(rng, n):
    """A random exact probability row on {0..n} with positive top mass."""
    weights = [rng.randint(0, 6) for _ in range(n)] + [rng.randint(1, 6)]
    total = sum(weights)
    return tuple(F(w, total) for w in weights)
