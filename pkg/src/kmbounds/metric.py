"""The recursive distance table, residual bounds, and structural verifiers.

The distance between steps m and n is the optimal cost of moving row pi^m
onto row pi^n when shipping unit mass from i to j costs the already-known
distance between steps i-1 and j-1 (border: distance 1 to the virtual
step -1, which is 0 from itself).  Under the mass-drift condition the
greedy inside-out construction is optimal and fills a cell in linear time;
otherwise each cell is an exact linear program.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import CertificationError, SchemeError, UnsupportedError
from .exactnum import ONE, ZERO, format_rational
from .schemes import Scheme, WeightRow, check_distinct, check_drift
from .transport import Cost, TransportPlan

EXACT = "exact"
FLOAT64 = "float64"
INSIDE_OUT = "inside_out"
LP = "lp"


@dataclass(frozen=True)
class Witness:
    """A concrete violation: the indices involved and both exact sides."""

    indices: tuple[int, ...]
    lhs: Fraction
    rhs: Fraction
    relation: str  # the relation that was expected but failed, e.g. "<="

    def render(self) -> str:
        idx = ",".join(str(i) for i in self.indices)
        return (f"({idx}): {format_rational(self.lhs)} !{self.relation} "
                f"{format_rational(self.rhs)}")


@dataclass(frozen=True)
class PropertyReport:
    name: str
    holds: bool
    witnesses: tuple[Witness, ...] = ()
    note: str = ""

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class ResidualSeries:
    """Fixed-point residual bounds R_0..R_{n_max} for one scheme."""

    values: tuple
    mode: str


class DistanceTable:
    """Triangular store of the recursive distances for one scheme.

    Only m <= n is stored; queries mirror.  The virtual border row -1
    (distance 1 to every step, 0 to itself) is held explicitly so cost
    lookups never special-case it.
    """

    def __init__(self, scheme: Scheme, n_max: int, mode: str, method: str,
                 cols: list[list], method_used: list[str]) -> None:
        self.scheme = scheme
        self.n_max = n_max
        self.mode = mode
        self.method = method
        self.method_used = method_used
        # cols[b + 1][a + 1] = d(a, b) for -1 <= a <= b <= n_max
        self._cols = cols

    def d(self, m: int, n: int):
        if not (-1 <= m <= self.n_max and -1 <= n <= self.n_max):
            raise IndexError(f"pair ({m},{n}) outside the built range [-1,{self.n_max}]")
        if m > n:
            m, n = n, m
        return self._cols[n + 1][m + 1]

    def node_cost(self, i: int, j: int):
        """Cost oracle in supply/demand node space: d(i-1, j-1)."""
        return self.d(i - 1, j - 1)

    def row_probs(self, n: int) -> tuple:
        return self.scheme.row(n).probs

    def pairs(self) -> Iterable[tuple[int, int]]:
        for m in range(self.n_max + 1):
            for n in range(m, self.n_max + 1):
                yield m, n


def _validate_rows(scheme: Scheme, n_max: int) -> list[tuple[Fraction, ...]]:
    rows = []
    for n in range(n_max + 1):
        row = scheme.row(n)
        if len(row.trimmed()) > n + 1:
            raise SchemeError(
                f"row {n} of {scheme.label!r} has support beyond {n}; "
                "the recursive table is not defined for it")
        probs = list(row.probs[: n + 1])
        probs += [ZERO] * (n + 1 - len(probs))
        rows.append(tuple(probs))
    return rows


def _greedy_cell_cost(mu, nu, m, n, cols, zero):
    """Cost of the greedy simple-and-nested plan for one cell (m < n).

    Diagonal shipments are free and skipped; each source i = m..0 sends its
    surplus to the unmet demands j = m+1..n in order, resuming where the
    previous source stopped.  cols[j][i] is the shifted cost d(i-1, j-1).
    """
    total = zero
    j = m
    rem = zero
    for i in range(m, -1, -1):
        s = mu[i] - nu[i]
        while s > zero:
            if rem <= zero:
                j += 1
                if j > n:  # float dust past the last bucket
                    break
                rem = nu[j]
                continue
            colj = cols[j]
            if s < rem:
                total += s * colj[i]
                rem -= s
                break
            total += rem * colj[i]
            s -= rem
            rem = zero
    return total


def build_table(scheme: Scheme, n_max: int, method: str = "auto",
                mode: str = EXACT) -> DistanceTable:
    """Fill the distance table row by row in increasing n.

    method "auto" picks the greedy fill iff the mass-drift condition holds
    on the whole range (it is a global hypothesis, so the choice is made
    once per table); "inside_out" insists and refuses when it fails; "lp"
    always solves exact transport programs.
    """
    if mode not in (EXACT, FLOAT64):
        raise ValueError(f"unknown mode {mode!r}")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    exact_rows = _validate_rows(scheme, n_max)
    drift = check_drift(scheme, n_max)
    if method == "auto":
        resolved = INSIDE_OUT if drift.holds else LP
    elif method == INSIDE_OUT:
        if not drift.holds:
            raise UnsupportedError(
                f"inside_out requires the mass-drift condition; violated at {drift.witness}: "
                f"{drift.detail}")
        resolved = INSIDE_OUT
    elif method == LP:
        resolved = LP
    else:
        raise ValueError(f"unknown method {method!r}")

    if mode == EXACT:
        zero, one = ZERO, ONE
        rows = exact_rows
    else:
        zero, one = 0.0, 1.0
        rows = [tuple(float(p) for p in row) for row in exact_rows]

    cols: list[list] = [[zero]]  # column b = -1 holds only d(-1,-1) = 0
    tol = zero if mode == EXACT else 1e-12

    def cost(i: int, j: int):
        if i > j:
            i, j = j, i
        return cols[j][i]  # cols index j means column b = j-1; entry a = i-1

    for b in range(n_max + 1):
        col: list = [one] * (b + 2)
        col[b + 1] = zero
        for m in range(b):
            if resolved == INSIDE_OUT:
                col[m + 1] = _greedy_cell_cost(rows[m], rows[b], m, b, cols, zero)
            else:
                col[m + 1] = _lp_cell_cost(rows[m], rows[b], cost, zero, tol)
        cols.append(col)
    method_used = [resolved] * (n_max + 1)
    return DistanceTable(scheme, n_max, mode, resolved, cols, method_used)


def _lp_cell_cost(mu, nu, cost, zero, tol):
    from .transport import _transport_simplex
    C = [[cost(i, j) for j in range(len(nu))] for i in range(len(mu))]
    _, value, _, _ = _transport_simplex(mu, nu, C, zero, tol)
    return value


def inside_out(supply: WeightRow, demand: WeightRow, cost: Cost) -> TransportPlan:
    """The unique simple-and-nested plan for mass-drifting rows (m <= n).

    Diagonal entries take the demand mass; residual supplies are dispatched
    in decreasing source order to the unmet demands in increasing order,
    partially-filled buckets carried over between sources.
    """
    m, n = supply.n, demand.n
    if m > n:
        raise ValueError(f"inside_out needs m <= n, got ({m},{n})")
    mu = [supply.mass(i) for i in range(m + 1)]
    nu = [demand.mass(j) for j in range(n + 1)]
    for i in range(m + 1):
        if mu[i] < nu[i]:
            raise ValueError(
                f"negative residual supply at i={i}: "
                f"{format_rational(mu[i])} < {format_rational(nu[i])}")
    entries: dict[tuple[int, int], Fraction] = {}
    for i in range(m + 1):
        if nu[i] > 0:
            entries[(i, i)] = nu[i]
    j = m
    rem = ZERO
    for i in range(m, -1, -1):
        surplus = mu[i] - nu[i]
        while surplus > 0:
            if rem == 0:
                j += 1
                rem = nu[j]
                continue
            amount = surplus if surplus < rem else rem
            entries[(i, j)] = entries.get((i, j), ZERO) + amount
            surplus -= amount
            rem -= amount
    return TransportPlan(m, n, entries)


def residual_bounds(table: DistanceTable) -> ResidualSeries:
    """R_n = sum_i pi_i^n d(i-1, n): the universal fixed-point residual bound.

    Exact in exact mode; compensated summation in float mode since rows can
    carry hundreds of terms.
    """
    values = []
    for n in range(table.n_max + 1):
        probs = table.row_probs(n)
        if table.mode == EXACT:
            total = ZERO
            for i in range(n + 1):
                total += probs[i] * table.d(i - 1, n)
        else:
            total = 0.0
            comp = 0.0
            for i in range(n + 1):
                term = float(probs[i]) * table.d(i - 1, n)
                y = term - comp
                t = total + y
                comp = (t - total) - y
                total = t
        values.append(total)
    return ResidualSeries(tuple(values), table.mode)


def _require_exact(table: DistanceTable, what: str) -> None:
    if table.mode != EXACT:
        raise UnsupportedError(f"{what} requires an exact-mode table")


def kras_residual_identity(table: DistanceTable) -> PropertyReport:
    """d(n, n+1) = alpha_{n+1} R_n for one-step averaging schemes."""
    _require_exact(table, "the step-size residual identity")
    scheme = table.scheme
    alphas = [scheme.kras_alpha(n) for n in range(1, table.n_max + 1)]
    if any(a is None for a in alphas):
        raise UnsupportedError(
            f"scheme {scheme.label!r} is not a one-step averaging family")
    series = residual_bounds(table).values
    witnesses = []
    for n in range(table.n_max):
        lhs = table.d(n, n + 1)
        rhs = alphas[n] * series[n]
        if lhs != rhs:
            witnesses.append(Witness((n, n + 1), lhs, rhs, "=="))
    return PropertyReport("kras-residual", not witnesses, tuple(witnesses))


def halpern_recursion_check(table: DistanceTable) -> PropertyReport:
    """Check R_n = (1-b_n)^2 + b_n R_{n-1} and its product-form solution
    for anchored schemes with non-decreasing anchor weights."""
    _require_exact(table, "the anchored-residual recursion")
    scheme = table.scheme
    betas = [ZERO]  # b_0 = 0 by convention
    for n in range(1, table.n_max + 1):
        beta = scheme.halpern_beta(n)
        if beta is None:
            raise UnsupportedError(f"scheme {scheme.label!r} is not an anchored family")
        betas.append(beta)
    for n in range(1, table.n_max + 1):
        if betas[n] < betas[n - 1]:
            raise UnsupportedError(
                "the recursion is derived only for non-decreasing anchor weights; "
                f"b_{n} < b_{n - 1}")
    series = residual_bounds(table).values
    witnesses = []
    for n in range(1, table.n_max + 1):
        expected = (ONE - betas[n]) ** 2 + betas[n] * series[n - 1]
        if series[n] != expected:
            witnesses.append(Witness((n,), series[n], expected, "=="))
    # closed form: R_n = sum_i (1-b_i)^2 prod_{k=i+1..n} b_k
    for n in range(table.n_max + 1):
        total = ZERO
        suffix = ONE  # prod_{k=i+1}^n b_k, built from i = n downwards
        for i in range(n, -1, -1):
            total += (ONE - betas[i]) ** 2 * suffix
            suffix *= betas[i]
        if series[n] != total:
            witnesses.append(Witness((n,), series[n], total, "=="))
    return PropertyReport("halpern-recursion", not witnesses, tuple(witnesses))


def verify_metric(table: DistanceTable) -> PropertyReport:
    """Metric axioms on [-1, n_max]: zero diagonal, symmetry by query,
    positivity off the diagonal (when rows are distinct), and the triangle
    inequality over all ordered triples."""
    _require_exact(table, "metric verification")
    witnesses = []
    note = ""
    rng = range(-1, table.n_max + 1)
    for n in rng:
        if table.d(n, n) != 0:
            witnesses.append(Witness((n, n), table.d(n, n), ZERO, "=="))
    for m in rng:
        for n in rng:
            if table.d(m, n) != table.d(n, m):
                witnesses.append(Witness((m, n), table.d(m, n), table.d(n, m), "=="))
    distinct = check_distinct(table.scheme, table.n_max)
    if distinct.holds:
        for m in rng:
            for n in rng:
                if m != n and not table.d(m, n) > 0:
                    witnesses.append(Witness((m, n), table.d(m, n), ZERO, ">"))
    else:
        note = (f"duplicate rows {distinct.witness}: positivity not asserted "
                "(pseudometric)")
    for m in rng:
        for p in rng:
            dmp = table.d(m, p)
            for n in rng:
                if table.d(m, n) > dmp + table.d(p, n):
                    witnesses.append(Witness(
                        (m, n, p), table.d(m, n), dmp + table.d(p, n), "<="))
    return PropertyReport("metric", not witnesses, tuple(witnesses), note)


def verify_monotone(table: DistanceTable) -> PropertyReport:
    """In the region m <= n the distance must shrink when m grows and grow
    when n grows.  Scanned in increasing n so the widest-gap violations of
    a row surface in index order."""
    _require_exact(table, "monotonicity verification")
    witnesses = []
    for n in range(table.n_max + 1):
        for m in range(n + 1):
            here = table.d(m, n)
            if here > table.d(m - 1, n):
                witnesses.append(Witness((m, n), here, table.d(m - 1, n), "<="))
            if n < table.n_max and here > table.d(m, n + 1):
                witnesses.append(Witness((m, n), here, table.d(m, n + 1), "<="))
    return PropertyReport("monotone", not witnesses, tuple(witnesses))


def verify_quadrangle(table: DistanceTable, raw_limit: int = 12) -> PropertyReport:
    """Convex quadrangle inequality in forward-difference form, plus the raw
    four-index form on small tables; the two verdicts must agree."""
    _require_exact(table, "quadrangle verification")
    witnesses = []
    # Forward differences D(m, j) = d(m, j+1) - d(m, j) must grow with m.
    for j in range(table.n_max):
        for m in range(-1, j):
            lhs = table.d(m, j + 1) - table.d(m, j)
            rhs = table.d(m + 1, j + 1) - table.d(m + 1, j)
            if lhs > rhs:
                witnesses.append(Witness((m, j), lhs, rhs, "<="))
    delta_holds = not witnesses
    if table.n_max <= raw_limit:
        raw_witnesses = []
        rng = range(-1, table.n_max + 1)
        for i in rng:
            for j in range(i, table.n_max + 1):
                for k in range(j, table.n_max + 1):
                    djk = table.d(j, k)
                    dik = table.d(i, k)
                    for l in range(k, table.n_max + 1):
                        lhs = table.d(i, l) + djk
                        rhs = dik + table.d(j, l)
                        if lhs > rhs:
                            raw_witnesses.append(Witness((i, j, k, l), lhs, rhs, "<="))
        if delta_holds != (not raw_witnesses):
            raise CertificationError(
                "forward-difference and four-index quadrangle verdicts disagree")
        witnesses.extend(raw_witnesses)
    return PropertyReport("quadrangle", delta_holds, tuple(witnesses))


def float_agreement(exact: DistanceTable, approx: DistanceTable,
                    rel_tol: float = 1e-9) -> float:
    """Largest relative deviation between an exact table and its float twin."""
    if exact.mode != EXACT or approx.mode != FLOAT64:
        raise ValueError("expects an exact table and a float64 table")
    worst = 0.0
    for m, n in exact.pairs():
        e = float(exact.d(m, n))
        f = approx.d(m, n)
        err = abs(f - e) / e if e else abs(f)
        worst = max(worst, err)
    return worst


def table_to_rows(table: DistanceTable) -> list[tuple[int, int, object]]:
    """Upper-triangle listing (m <= n, border excluded) in m-major order."""
    return [(m, n, table.d(m, n)) for m, n in table.pairs()]


def table_from_values(scheme: Scheme, n_max: int, mode: str, method: str,
                      values: dict[tuple[int, int], object]) -> DistanceTable:
    """Rebuild a table from serialized upper-triangle values."""
    zero, one = (ZERO, ONE) if mode == EXACT else (0.0, 1.0)
    cols: list[list] = [[zero]]
    for b in range(n_max + 1):
        col: list = [one] * (b + 2)
        col[b + 1] = zero
        for m in range(b):
            try:
                col[m + 1] = values[(m, b)]
            except KeyError:
                raise ValueError(f"serialized table is missing the ({m},{b}) entry")
        cols.append(col)
    return DistanceTable(scheme, n_max, mode, method, cols, [method] * (n_max + 1))
