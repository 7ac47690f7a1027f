"""Worst-case orbit witness: iterates in the truncated cube that attain
every distance and residual bound with equality.

Coordinates are indexed by the pairs (m, n) with 0 <= m <= n <= N.  The
orbit points stack one optimal dual potential per pair; the iterates are
the scheme's convex combinations of them.  Equality at the pair's own
coordinate is forced by dual optimality, and the coordinate-wise bound by
the Lipschitz property of the extended potentials, so both sides of the
construction are checkable in exact arithmetic on the orbit alone.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .errors import UnsupportedError
from .exactnum import ONE, ZERO
from .metric import (EXACT, DistanceTable, PropertyReport, ResidualSeries,
                     Witness, residual_bounds)
from .schemes import Scheme, check_drift
from .transport import DualPotential, mcshane_extend, solve_dual


@dataclass(frozen=True)
class OrbitWitness:
    """Orbit points y^k, iterates x^k, and the dual potentials behind them.

    Every vector lives in [0, 1]^pairs; the potentials are extended to the
    index N + 1 so the step-(N) image point is still well defined.
    """

    N: int
    pairs: tuple[tuple[int, int], ...]
    duals: dict[tuple[int, int], DualPotential]
    y: tuple[tuple[Fraction, ...], ...]  # y[k][c] for k = 0..N+1
    x: tuple[tuple[Fraction, ...], ...]  # x[k][c] for k = 0..N
    drift_holds: bool

    def pair_index(self, pair: tuple[int, int]) -> int:
        return self.pairs.index(pair)


def build_witness(scheme: Scheme, N: int, table: DistanceTable,
                  threads: int = 1) -> OrbitWitness:
    """Assemble the witness from one optimal dual per coordinate pair.

    Under the mass-drift condition the consecutive pairs (n, n+1) use the
    closed-form potentials u_i = 1 - d(i-1, n), which are the ones that
    make the residual bound tight; all other pairs take the solver's
    deterministic optimum.  Every potential is extended to index N + 1.
    """
    if table.mode != EXACT:
        raise UnsupportedError("the witness is verified exactly; build an exact table")
    if table.n_max < N + 1:
        raise ValueError(f"need a table built to at least {N + 1}, have {table.n_max}")
    drift = check_drift(scheme, N + 1).holds
    pairs = tuple((m, n) for m in range(N + 1) for n in range(m, N + 1))
    cost = table.node_cost

    def dual_for(pair: tuple[int, int]) -> DualPotential:
        m, n = pair
        if m == n:
            return DualPotential((ZERO,) * (N + 2))
        if drift and n == m + 1:
            u = tuple(ONE - table.d(i - 1, m) for i in range(m + 2))
            return mcshane_extend(DualPotential(u), N + 1, cost)
        base = solve_dual(scheme.row(m), scheme.row(n), cost, table.d(m, n))
        return mcshane_extend(base, N + 1, cost)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            extended = list(pool.map(dual_for, pairs))
    else:
        extended = [dual_for(pair) for pair in pairs]
    duals = dict(zip(pairs, extended))

    y = tuple(tuple(duals[pair].u[k] for pair in pairs) for k in range(N + 2))
    x = []
    for k in range(N + 1):
        probs = scheme.row(k).probs
        vec = [ZERO] * len(pairs)
        for i in range(k + 1):
            p = probs[i]
            if p == 0:
                continue
            yi = y[i]
            for c in range(len(pairs)):
                vec[c] += p * yi[c]
        x.append(tuple(vec))
    return OrbitWitness(N, pairs, duals, y, tuple(x), drift)


def verify_distance_tightness(witness: OrbitWitness, table: DistanceTable,
                              ) -> PropertyReport:
    """Equality |x^m - x^n| = d(m, n) at each pair's own coordinate, and the
    bound |x^m_c - x^n_c| <= d(m, n) at every coordinate, both exact."""
    witnesses = []
    for idx, (m, n) in enumerate(witness.pairs):
        expected = table.d(m, n)
        xm, xn = witness.x[m], witness.x[n]
        own = abs(xm[idx] - xn[idx])
        if own != expected:
            witnesses.append(Witness((m, n), own, expected, "=="))
        for c, (cm, cn) in enumerate(witness.pairs):
            gap = abs(xm[c] - xn[c])
            if gap > expected:
                witnesses.append(Witness((m, n, cm, cn), gap, expected, "<="))
    return PropertyReport("distance-tightness", not witnesses, tuple(witnesses))


def verify_residual_tightness(witness: OrbitWitness, table: DistanceTable,
                              residuals: ResidualSeries | None = None,
                              ) -> PropertyReport:
    """With the step image Tx^n = y^{n+1}: the sup-norm gap equals R_n for
    every n < N, the maximum sitting at coordinate (n, n+1).

    Defined only under the mass-drift condition (sharpness is open without
    it), and relies on the consecutive pairs carrying the closed-form
    potentials."""
    if not witness.drift_holds:
        raise UnsupportedError(
            "residual tightness requires the mass-drift condition; "
            "sharpness without it is open")
    series = residuals if residuals is not None else residual_bounds(table)
    witnesses = []
    for n in range(witness.N):
        expected = series.values[n]
        xn = witness.x[n]
        image = witness.y[n + 1]
        gaps = [abs(a - b) for a, b in zip(xn, image)]
        top = max(gaps)
        if top != expected:
            witnesses.append(Witness((n,), top, expected, "=="))
        at_consecutive = gaps[witness.pair_index((n, n + 1))]
        if at_consecutive != expected:
            witnesses.append(Witness((n, n + 1), at_consecutive, expected, "=="))
    return PropertyReport("residual-tightness", not witnesses, tuple(witnesses))
