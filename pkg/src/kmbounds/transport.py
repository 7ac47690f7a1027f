"""Exact solution of the finite transportation problem and its dual.

The primal solver is a transportation simplex on the bipartite basis tree:
northwest-corner start, Bland's smallest-index rule for both the entering
and the leaving cell (so termination needs no perturbation), every pivot in
exact rationals.  The dual potential is recovered as the min-plus envelope
of the final row potentials, which is always feasible and optimal for the
shortest-path (Kantorovich-Rubinstein) form of the dual because the cost is
a metric; the result is certified before it is returned.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from .errors import CertificationError, InfeasibleError
from .exactnum import ZERO, format_rational
from .schemes import WeightRow

# Node-space cost: cost(i, j) is the price of moving unit mass from supply
# node i to demand node j.  Symmetric, zero diagonal, values in [0, 1].
Cost = Callable[[int, int], Fraction]

Cell = tuple[int, int]

_PIVOT_CAP = 200_000  # safety net; Bland's rule terminates long before this


@dataclass(frozen=True)
class TransportPlan:
    """Sparse feasible transport: entries[(i, j)] > 0, marginals preserved."""

    m: int
    n: int
    entries: Mapping[Cell, Fraction]

    def row_sums(self) -> list[Fraction]:
        sums = [ZERO] * (self.m + 1)
        for (i, _), z in self.entries.items():
            sums[i] += z
        return sums

    def col_sums(self) -> list[Fraction]:
        sums = [ZERO] * (self.n + 1)
        for (_, j), z in self.entries.items():
            sums[j] += z
        return sums

    def cost(self, cost: Cost) -> Fraction:
        return sum((z * cost(i, j) for (i, j), z in self.entries.items()), ZERO)

    def sorted_entries(self) -> list[tuple[int, int, Fraction]]:
        return [(i, j, z) for (i, j), z in sorted(self.entries.items())]


@dataclass(frozen=True)
class DualPotential:
    """Potential u over node indices 0..K with |u_i - u_j| <= cost(i, j)."""

    u: tuple[Fraction, ...]

    @property
    def declared_range(self) -> int:
        return len(self.u) - 1

    def is_feasible(self, cost: Cost) -> bool:
        top = len(self.u)
        for i in range(top):
            for j in range(top):
                if self.u[j] - self.u[i] > cost(i, j):
                    return False
        return True

    def objective(self, supply: WeightRow, demand: WeightRow) -> Fraction:
        """sum_j (demand_j - supply_j) u_j over the declared range."""
        total = ZERO
        for j in range(len(self.u)):
            total += (demand.mass(j) - supply.mass(j)) * self.u[j]
        return total


def _northwest_corner(mu, nu, zero):
    """Initial basis tree: exactly len(mu) + len(nu) - 1 cells, degenerate
    zero-flow cells kept explicitly."""
    flow: dict[Cell, object] = {}
    s = list(mu)
    d = list(nu)
    i = j = 0
    last_i, last_j = len(mu) - 1, len(nu) - 1
    while True:
        a = s[i] if s[i] < d[j] else d[j]
        flow[(i, j)] = a
        s[i] -= a
        d[j] -= a
        if i == last_i and j == last_j:
            break
        if s[i] == zero and i < last_i:
            i += 1
        elif j < last_j:
            j += 1
        else:
            i += 1
    return flow


def _tree_potentials(flow, n_rows, n_cols, C, zero):
    a = [None] * n_rows
    b = [None] * n_cols
    row_adj: list[list[int]] = [[] for _ in range(n_rows)]
    col_adj: list[list[int]] = [[] for _ in range(n_cols)]
    for (i, j) in flow:
        row_adj[i].append(j)
        col_adj[j].append(i)
    a[0] = zero
    stack = [(True, 0)]
    while stack:
        is_row, k = stack.pop()
        if is_row:
            for j in row_adj[k]:
                if b[j] is None:
                    b[j] = C[k][j] - a[k]
                    stack.append((False, j))
        else:
            for i in col_adj[k]:
                if a[i] is None:
                    a[i] = C[i][k] - b[k]
                    stack.append((True, i))
    return a, b, row_adj, col_adj


def _basis_cycle(enter: Cell, row_adj, col_adj):
    """Unique cycle closed by the entering cell: the tree path from its row
    to its column, as a list of basic cells.  Even positions lose flow."""
    ei, ej = enter
    parent: dict[tuple[bool, int], tuple[bool, int] | None] = {(True, ei): None}
    queue = deque([(True, ei)])
    target = (False, ej)
    while queue and target not in parent:
        node = queue.popleft()
        is_row, k = node
        neighbors = row_adj[k] if is_row else col_adj[k]
        for nxt_idx in neighbors:
            nxt = (not is_row, nxt_idx)
            if nxt not in parent:
                parent[nxt] = node
                queue.append(nxt)
    nodes = [target]
    while parent[nodes[-1]] is not None:
        nodes.append(parent[nodes[-1]])
    nodes.reverse()  # row ei ... col ej
    edges = []
    for left, right in zip(nodes, nodes[1:]):
        (l_row, l_idx), (_, r_idx) = left, right
        edges.append((l_idx, r_idx) if l_row else (r_idx, l_idx))
    return edges


def _transport_simplex(mu, nu, C, zero, tol):
    """Core solver; returns (basic flow incl. zeros, value, row/col potentials)."""
    total_in = sum(mu[1:], mu[0])
    total_out = sum(nu[1:], nu[0])
    if tol == zero:
        if total_in != total_out:
            raise InfeasibleError(
                f"marginals do not balance: {total_in} vs {total_out}")
    elif abs(total_in - total_out) > tol:
        raise InfeasibleError(f"marginals do not balance: {total_in} vs {total_out}")
    n_rows, n_cols = len(mu), len(nu)
    flow = _northwest_corner(mu, nu, zero)
    for _ in range(_PIVOT_CAP):
        a, b, row_adj, col_adj = _tree_potentials(flow, n_rows, n_cols, C, zero)
        enter = None
        for i in range(n_rows):
            ai = a[i]
            Ci = C[i]
            for j in range(n_cols):
                if Ci[j] - ai - b[j] < -tol and (i, j) not in flow:
                    enter = (i, j)
                    break
            if enter is not None:
                break
        if enter is None:
            value = zero
            for (i, j), z in flow.items():
                if z != zero:
                    value += z * C[i][j]
            return flow, value, a, b
        path = _basis_cycle(enter, row_adj, col_adj)
        minus = path[::2]
        theta = min(flow[cell] for cell in minus)
        leaving = min(cell for cell in minus if flow[cell] == theta)
        for idx, cell in enumerate(path):
            flow[cell] = flow[cell] - theta if idx % 2 == 0 else flow[cell] + theta
        del flow[leaving]
        flow[enter] = theta
    raise CertificationError("pivot cap exceeded; anti-cycling rule broken")


def solve_transport(supply: WeightRow, demand: WeightRow, cost: Cost,
                    ) -> tuple[TransportPlan, Fraction]:
    """Exact optimum of the transport problem between two weight rows.

    Returns a vertex plan and its cost; the value is the exact minimum.
    """
    mu, nu = supply.probs, demand.probs
    C = [[cost(i, j) for j in range(len(nu))] for i in range(len(mu))]
    flow, value, _, _ = _transport_simplex(mu, nu, C, ZERO, ZERO)
    entries = {cell: z for cell, z in flow.items() if z > 0}
    return TransportPlan(len(mu) - 1, len(nu) - 1, entries), value


def solve_dual(supply: WeightRow, demand: WeightRow, cost: Cost,
               primal_value: Fraction) -> DualPotential:
    """A deterministic optimal potential for the shortest-path dual.

    The envelope u_j = min_i (cost(i, j) - a_i) of the final simplex row
    potentials is 1-Lipschitz for the cost metric (triangle inequality) and
    closes the duality gap; both facts are certified exactly before return.
    Normalized so that min u = 0, which puts every entry in [0, 1].
    """
    mu, nu = supply.probs, demand.probs
    if len(mu) > len(nu):
        raise InfeasibleError("dual form expects the supply index range within the demand's")
    C = [[cost(i, j) for j in range(len(nu))] for i in range(len(mu))]
    _, value, a, _ = _transport_simplex(mu, nu, C, ZERO, ZERO)
    if value != primal_value:
        raise ValueError(
            f"primal_value {format_rational(primal_value)} is not the optimum "
            f"{format_rational(value)}")
    u = [min(C[i][j] - a[i] for i in range(len(mu))) for j in range(len(nu))]
    shift = min(u)
    u = [v - shift for v in u]
    potential = DualPotential(tuple(u))
    _certify_dual(potential, supply, demand, cost, value)
    return potential


def _certify_dual(potential: DualPotential, supply: WeightRow, demand: WeightRow,
                  cost: Cost, value: Fraction) -> None:
    if not potential.is_feasible(cost):
        raise CertificationError("dual envelope violates a Lipschitz constraint")
    if potential.objective(supply, demand) != value:
        raise CertificationError("dual objective does not close the duality gap")
    if any(v < 0 or v > 1 for v in potential.u):
        raise CertificationError("normalized potential left [0, 1]")


def verify_complementary_slackness(plan: TransportPlan, dual: DualPotential,
                                   cost: Cost) -> bool:
    """True iff every positive flow runs along a tight dual constraint."""
    for (i, j), z in plan.entries.items():
        if z == 0:
            continue
        if dual.u[j] - dual.u[i] != cost(i, j):
            return False
    return True


def mcshane_extend(dual: DualPotential, up_to: int, cost: Cost) -> DualPotential:
    """Extend a feasible potential to indices up to `up_to` by the min-plus
    envelope u_i = min_k (u_k + cost(k, i)) over the original range.

    Preserves the Lipschitz property for all pairs and agrees with the
    input on its declared range.
    """
    base = dual.declared_range
    if up_to < base:
        raise ValueError(f"cannot extend down: have 0..{base}, asked for 0..{up_to}")
    u = list(dual.u)
    for i in range(base + 1, up_to + 1):
        u.append(min(u[k] + cost(k, i) for k in range(base + 1)))
    return DualPotential(tuple(u))


def make_simple(plan: TransportPlan, cost: Cost) -> TransportPlan:
    """Push each diagonal entry up to min(row marginal, column marginal).

    Each move reroutes flow (j,i),(i,k) -> (i,i),(j,k); the triangle
    inequality of the cost metric guarantees the cost never increases.
    """
    entries = dict(plan.entries)
    mu = plan.row_sums()
    nu = plan.col_sums()
    for i in range(min(plan.m, plan.n) + 1):
        target = mu[i] if mu[i] < nu[i] else nu[i]
        while entries.get((i, i), ZERO) < target:
            k = min(kk for (ii, kk) in entries if ii == i and kk != i)
            j = min(jj for (jj, kk) in entries if kk == i and jj != i)
            eps = min(entries[(i, k)], entries[(j, i)])
            _shift(entries, (i, i), eps)
            _shift(entries, (j, k), eps)
            _shift(entries, (i, k), -eps)
            _shift(entries, (j, i), -eps)
    return TransportPlan(plan.m, plan.n, entries)


def uncross(plan: TransportPlan, cost: Cost) -> TransportPlan:
    """Remove flow crossings by recirculating mass along each offending cycle.

    A crossing is a pair of flows (i,k), (j,l) with i < j < k < l; the move
    replaces it with (i,l), (j,k).  Under the quadrangle inequality of the
    underlying table (the caller's responsibility) the cost never increases.
    """
    entries = dict(plan.entries)
    while True:
        crossing = _first_crossing(entries)
        if crossing is None:
            break
        i, j, k, l = crossing
        eps = min(entries[(i, k)], entries[(j, l)])
        _shift(entries, (i, l), eps)
        _shift(entries, (j, k), eps)
        _shift(entries, (i, k), -eps)
        _shift(entries, (j, l), -eps)
    return TransportPlan(plan.m, plan.n, entries)


def _shift(entries: dict[Cell, Fraction], cell: Cell, delta: Fraction) -> None:
    value = entries.get(cell, ZERO) + delta
    if value < 0:
        raise CertificationError(f"flow at {cell} driven negative")
    if value == 0:
        entries.pop(cell, None)
    else:
        entries[cell] = value


def _first_crossing(entries: dict[Cell, Fraction]):
    cells = sorted(entries)
    for a, b in cells:
        for c, d in cells:
            if a < c < b < d:
                return a, c, b, d
    return None


@dataclass(frozen=True)
class PlanProperties:
    is_simple: bool
    is_nested: bool
    cost: Fraction


def plan_properties(plan: TransportPlan, cost: Cost) -> PlanProperties:
    """Simplicity (maximal diagonal), nestedness (no crossings), exact cost."""
    mu = plan.row_sums()
    nu = plan.col_sums()
    simple = all(
        plan.entries.get((i, i), ZERO) == min(mu[i], nu[i])
        for i in range(min(plan.m, plan.n) + 1))
    nested = _first_crossing(dict(plan.entries)) is None
    return PlanProperties(simple, nested, plan.cost(cost))
