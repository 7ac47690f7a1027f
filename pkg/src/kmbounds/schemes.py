"""Weight-row generators for the supported averaging/iteration families.

A scheme produces, for every step n, a probability row pi^n on {0,...,n}
(exact rationals, summing to one).  Composite multi-step iterations are
flattened to the same one-row-per-step form.  Structural checks (the mass
drift condition, stochastic dominance, pairwise distinctness) live here
as well since they are pure row comparisons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from .errors import SchemeError, SchemeRangeError
from .exactnum import ONE, ZERO, format_rational, parse_rational


@dataclass(frozen=True)
class WeightRow:
    """The probability row pi^n: probs[i] is the mass placed at i.

    Builtin families always produce len(probs) == n + 1; rows loaded from
    custom files may carry a longer support, which the table builder
    rejects but the row checks below still accept.
    """

    n: int
    probs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.probs):
            raise SchemeError(f"row {self.n} has a negative entry")
        if sum(self.probs, ZERO) != ONE:
            raise SchemeError(f"row {self.n} does not sum to 1")

    def mass(self, i: int) -> Fraction:
        return self.probs[i] if 0 <= i < len(self.probs) else ZERO

    def trimmed(self) -> tuple[Fraction, ...]:
        """Entries with trailing zeros removed; rows equal as measures
        compare equal in this form."""
        probs = list(self.probs)
        while probs and probs[-1] == 0:
            probs.pop()
        return tuple(probs)

    def tail_sum(self, k: int) -> Fraction:
        return sum((p for p in self.probs[k:]), ZERO)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a row-level structural check."""

    name: str
    holds: bool
    witness: tuple[int, ...] | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.holds


class Scheme:
    """Base class: caches rows; subclasses provide _probs(n)."""

    label: str = ""
    max_n: int | None = None  # inclusive; None means unbounded

    def __init__(self) -> None:
        self._cache: dict[int, WeightRow] = {}

    def row(self, n: int) -> WeightRow:
        if n < 0:
            raise SchemeRangeError(f"row index {n} is negative")
        if self.max_n is not None and n > self.max_n:
            raise SchemeRangeError(
                f"scheme {self.label!r} defines rows only up to n={self.max_n}, got {n}")
        cached = self._cache.get(n)
        if cached is None:
            # Read-through fill: idempotent, so concurrent callers are fine.
            cached = WeightRow(n, tuple(self._probs(n)))
            self._cache[n] = cached
        return cached

    def _probs(self, n: int) -> Sequence[Fraction]:
        raise NotImplementedError

    def kras_alpha(self, n: int) -> Fraction | None:
        """Step size alpha_n when the scheme is a one-step averaging
        iteration pi^n = (1-alpha_n) pi^{n-1} + alpha_n delta^n; else None."""
        return None

    def halpern_beta(self, n: int) -> Fraction | None:
        """Anchor weight beta_n when the scheme is an anchored iteration
        pi^n = (1-beta_n) delta^0 + beta_n delta^n; else None."""
        return None

    def __repr__(self) -> str:
        return f"<Scheme {self.label}>"


def _check_open_unit(value: Fraction, name: str, *, closed_top: bool = False) -> Fraction:
    top_ok = value <= 1 if closed_top else value < 1
    if not (value > 0 and top_ok):
        rng = "(0,1]" if closed_top else "(0,1)"
        raise SchemeError(f"{name} must lie in {rng}, got {format_rational(value)}")
    return value


class DiracScheme(Scheme):
    """pi^n is the point mass at n."""

    label = "dirac"

    def _probs(self, n: int) -> Sequence[Fraction]:
        return [ZERO] * n + [ONE]

    def kras_alpha(self, n: int) -> Fraction | None:
        return None  # alpha_n = 1 sits on the excluded boundary


class PairScheme(Scheme):
    """pi^n splits its mass between n-1 and n: (1-a) at n-1 and a at n."""

    def __init__(self, alpha: Fraction) -> None:
        super().__init__()
        self.alpha = _check_open_unit(alpha, "pair weight a", closed_top=True)
        self.label = f"pair:a={format_rational(self.alpha)}"

    def _probs(self, n: int) -> Sequence[Fraction]:
        if n == 0:
            return [ONE]
        return [ZERO] * (n - 1) + [ONE - self.alpha, self.alpha]


# Named step-size rules: a closed enumeration keeps the CLI grammar testable;
# arbitrary sequences enter programmatically or through custom files.
NAMED_RULES: dict[str, Callable[[int], Fraction]] = {
    "harmonic": lambda n: Fraction(1, n + 1),
    "n/(n+1)": lambda n: Fraction(n, n + 1),
    "n/(n+2)": lambda n: Fraction(n, n + 2),
}


class KrasScheme(Scheme):
    """One-step averaging rows pi^n = (1-alpha_n) pi^{n-1} + alpha_n delta^n."""

    def __init__(self, alpha_of: Callable[[int], Fraction], label: str) -> None:
        super().__init__()
        self._alpha_of = alpha_of
        self.label = label

    @staticmethod
    def constant(alpha: Fraction) -> "KrasScheme":
        _check_open_unit(alpha, "step size a")
        return KrasScheme(lambda n: alpha, f"kras:a={format_rational(alpha)}")

    @staticmethod
    def named(rule: str) -> "KrasScheme":
        if rule not in NAMED_RULES:
            raise SchemeError(f"unknown step rule {rule!r}; known: {sorted(NAMED_RULES)}")
        return KrasScheme(NAMED_RULES[rule], f"kras:rule={rule}")

    def kras_alpha(self, n: int) -> Fraction | None:
        if n < 1:
            return None
        alpha = self._alpha_of(n)
        _check_open_unit(alpha, f"step size a_{n}")
        return alpha

    def _probs(self, n: int) -> Sequence[Fraction]:
        if n == 0:
            return [ONE]
        alpha = self.kras_alpha(n)
        assert alpha is not None
        prev = self.row(n - 1).probs
        return [(ONE - alpha) * p for p in prev] + [alpha]


class UniformScheme(Scheme):
    """pi^n uniform on {0,...,n}; a one-step averaging with alpha_n = 1/(n+1)."""

    label = "uniform"

    def _probs(self, n: int) -> Sequence[Fraction]:
        return [Fraction(1, n + 1)] * (n + 1)

    def kras_alpha(self, n: int) -> Fraction | None:
        return Fraction(1, n + 1) if n >= 1 else None


class HalpernScheme(Scheme):
    """Anchored rows: mass 1-beta_n stays at 0, beta_n sits at n."""

    def __init__(self, beta_of: Callable[[int], Fraction], label: str) -> None:
        super().__init__()
        self._beta_of = beta_of
        self.label = label

    @staticmethod
    def constant(beta: Fraction) -> "HalpernScheme":
        _check_open_unit(beta, "anchor weight b")
        return HalpernScheme(lambda n: beta, f"halpern:b={format_rational(beta)}")

    @staticmethod
    def named(rule: str) -> "HalpernScheme":
        if rule not in NAMED_RULES:
            raise SchemeError(f"unknown anchor rule {rule!r}; known: {sorted(NAMED_RULES)}")
        return HalpernScheme(NAMED_RULES[rule], f"halpern:rule={rule}")

    def halpern_beta(self, n: int) -> Fraction | None:
        if n < 1:
            return ZERO if n == 0 else None
        beta = self._beta_of(n)
        _check_open_unit(beta, f"anchor weight b_{n}")
        return beta

    def _probs(self, n: int) -> Sequence[Fraction]:
        if n == 0:
            return [ONE]
        beta = self.halpern_beta(n)
        assert beta is not None
        return [ONE - beta] + [ZERO] * (n - 1) + [beta]


_COUNTEREXAMPLE_ROWS: tuple[tuple[str, ...], ...] = (
    ("1",),
    ("4/5", "1/5"),
    ("1/2", "1/4", "1/4"),
    ("1/2", "1/4", "0", "1/4"),
    ("0", "1/2", "1/4", "0", "1/4"),
    ("0", "0", "1/2", "0", "0", "1/2"),
)


class Remark4Scheme(Scheme):
    """Builtin six-row counterexample: dominance-ordered but not mass-drifting,
    so monotonicity and the quadrangle inequality both fail on its table."""

    label = "remark4"
    max_n = 5

    def _probs(self, n: int) -> Sequence[Fraction]:
        return [parse_rational(t) for t in _COUNTEREXAMPLE_ROWS[n]]


class CustomScheme(Scheme):
    """Rows supplied verbatim (e.g. from a JSON file).

    Support beyond index n is tolerated here so that the row checks can
    exercise pathological inputs; the table builder validates support.
    """

    def __init__(self, rows: Sequence[Sequence[Fraction]], label: str = "custom") -> None:
        super().__init__()
        self._rows = [tuple(Fraction(p) for p in row) for row in rows]
        if not self._rows:
            raise SchemeError("custom scheme needs at least one row")
        self.label = label
        self.max_n = len(self._rows) - 1

    def _probs(self, n: int) -> Sequence[Fraction]:
        return self._rows[n]


@dataclass(frozen=True)
class CompositeRule:
    """Per-step mixing data for a multi-step iteration.

    steps[k] describes step n = k+1: `prev_coeffs` are the weights c_{n,0..}
    on earlier iterates (padded with zeros up to x^{n-1}) and `step_weight`
    is the weight t_n on the freshly mapped point.  Convexity is required:
    c >= 0, t > 0, sum + t = 1.
    """

    steps: tuple[tuple[tuple[Fraction, ...], Fraction], ...]

    def __post_init__(self) -> None:
        for idx, (coeffs, t) in enumerate(self.steps):
            n = idx + 1
            if len(coeffs) > n:
                raise SchemeError(f"step {n}: {len(coeffs)} coefficients for {n} earlier iterates")
            if any(c < 0 for c in coeffs):
                raise SchemeError(f"step {n}: negative mixing coefficient")
            if t <= 0:
                raise SchemeError(f"step {n}: weight on the mapped point must be positive")
            if sum(coeffs, ZERO) + t != ONE:
                raise SchemeError(f"step {n}: coefficients do not sum to 1")


def flatten_composite(rule: CompositeRule, n: int) -> WeightRow:
    """Flatten a multi-step iteration to its one-row form.

    pi^n = sum_k c_{n,k} pi^k + t_n delta^n, seeded with pi^0 = delta^0;
    forced by linearity of the recursion in the mapped-point basis.
    """
    if n < 0:
        raise SchemeRangeError(f"row index {n} is negative")
    if n > len(rule.steps):
        raise SchemeRangeError(f"composite rule defines steps up to n={len(rule.steps)}, got {n}")
    rows: list[list[Fraction]] = [[ONE]]
    for step in range(1, n + 1):
        coeffs, t = rule.steps[step - 1]
        probs = [ZERO] * (step + 1)
        for k, c in enumerate(coeffs):
            if c == 0:
                continue
            for i, p in enumerate(rows[k]):
                probs[i] += c * p
        probs[step] += t
        rows.append(probs)
    return WeightRow(n, tuple(rows[n]))


class CompositeScheme(Scheme):
    def __init__(self, rule: CompositeRule, label: str = "composite") -> None:
        super().__init__()
        self.rule = rule
        self.label = label
        self.max_n = len(rule.steps)

    def _probs(self, n: int) -> Sequence[Fraction]:
        return flatten_composite(self.rule, n).probs


def check_drift(scheme: Scheme, n_max: int) -> Verdict:
    """Mass-drift condition: every row keeps positive mass at its top index
    and no earlier coordinate gains mass from one row to the next.

    Witness is the first violating (n, i); i == n flags a vanishing top mass.
    """
    prev = scheme.row(0)
    for n in range(1, n_max + 1):
        cur = scheme.row(n)
        if cur.mass(n) <= 0:
            return Verdict("drift", False, (n, n), f"pi[{n}][{n}] = 0")
        for i in range(n):
            if cur.mass(i) > prev.mass(i):
                return Verdict(
                    "drift", False, (n, i),
                    f"pi[{n}][{i}]={format_rational(cur.mass(i))} > "
                    f"{format_rational(prev.mass(i))}=pi[{n - 1}][{i}]")
        prev = cur
    return Verdict("drift", True)


def check_dominance(scheme: Scheme, n_max: int) -> Verdict:
    """First-order stochastic dominance of consecutive rows: every tail sum
    may only grow from row n to row n+1."""
    for n in range(n_max):
        cur, nxt = scheme.row(n), scheme.row(n + 1)
        top = max(len(cur.probs), len(nxt.probs))
        for k in range(top):
            lhs, rhs = cur.tail_sum(k), nxt.tail_sum(k)
            if lhs > rhs:
                return Verdict(
                    "dominance", False, (n, k),
                    f"tail sum from {k}: {format_rational(lhs)} at row {n} > "
                    f"{format_rational(rhs)} at row {n + 1}")
    return Verdict("dominance", True)


def check_distinct(scheme: Scheme, n_max: int) -> Verdict:
    """Pairwise distinctness of the rows as measures (trailing zeros ignored);
    needed for strict positivity of the induced distance."""
    seen: dict[tuple[Fraction, ...], int] = {}
    for n in range(n_max + 1):
        key = scheme.row(n).trimmed()
        if key in seen:
            return Verdict("distinct", False, (seen[key], n),
                           f"rows {seen[key]} and {n} are the same distribution")
        seen[key] = n
    return Verdict("distinct", True)


# --- parsing: CLI grammar and JSON files ---------------------------------

def _parse_rows_json(data: object, label: str) -> CustomScheme:
    if not isinstance(data, dict) or data.get("type") != "custom":
        raise SchemeError(f"{label}: expected an object with \"type\": \"custom\"")
    raw_rows = data.get("rows")
    if not isinstance(raw_rows, list) or not raw_rows:
        raise SchemeError(f"{label}: \"rows\" must be a non-empty list")
    rows = []
    for idx, raw in enumerate(raw_rows):
        if not isinstance(raw, list):
            raise SchemeError(f"{label}: row {idx} is not a list")
        rows.append([parse_rational(str(entry)) for entry in raw])
    return CustomScheme(rows, label=label)


def _parse_composite_json(data: object, label: str) -> CompositeScheme:
    if not isinstance(data, dict) or data.get("type") != "composite":
        raise SchemeError(f"{label}: expected an object with \"type\": \"composite\"")
    raw_steps = data.get("steps")
    if not isinstance(raw_steps, list) or not raw_steps:
        raise SchemeError(f"{label}: \"steps\" must be a non-empty list")
    steps = []
    for idx, raw in enumerate(raw_steps):
        if not isinstance(raw, dict) or "t" not in raw:
            raise SchemeError(f"{label}: step {idx + 1} needs \"c\" and \"t\"")
        coeffs = tuple(parse_rational(str(c)) for c in raw.get("c", []))
        steps.append((coeffs, parse_rational(str(raw["t"]))))
    return CompositeScheme(CompositeRule(tuple(steps)), label=label)


def load_scheme_file(path: str | Path) -> Scheme:
    """Load a custom or composite scheme JSON file."""
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemeError(f"cannot read scheme file {p}: {exc}") from exc
    kind = data.get("type") if isinstance(data, dict) else None
    if kind == "custom":
        return _parse_rows_json(data, f"custom:{p}")
    if kind == "composite":
        return _parse_composite_json(data, f"composite:{p}")
    raise SchemeError(f"{p}: unknown scheme file type {kind!r}")


def parse_scheme(text: str) -> Scheme:
    """Parse the scheme grammar used on the command line.

    dirac | pair:a=<rat> | kras:a=<rat> | kras:rule=<name> |
    halpern:b=<rat> | halpern:rule=<name> | uniform | remark4 |
    custom:<path> | composite:<path>
    """
    head, _, rest = text.partition(":")
    if head == "dirac":
        _require_no_arg(text, rest)
        return DiracScheme()
    if head == "uniform":
        _require_no_arg(text, rest)
        return UniformScheme()
    if head == "remark4":
        _require_no_arg(text, rest)
        return Remark4Scheme()
    if head == "custom" or head == "composite":
        if not rest:
            raise SchemeError(f"{head}: missing file path")
        scheme = load_scheme_file(rest)
        expected = CustomScheme if head == "custom" else CompositeScheme
        if not isinstance(scheme, expected):
            raise SchemeError(f"{rest}: file does not define a {head} scheme")
        return scheme
    if head == "pair":
        return PairScheme(_param_value(text, rest, "a"))
    if head == "kras":
        key, value = _param(text, rest)
        if key == "a":
            return KrasScheme.constant(parse_rational(value))
        if key == "rule":
            return KrasScheme.named(value)
        raise SchemeError(f"kras takes a=<rat> or rule=<name>, got {key!r}")
    if head == "halpern":
        key, value = _param(text, rest)
        if key == "b":
            return HalpernScheme.constant(parse_rational(value))
        if key == "rule":
            return HalpernScheme.named(value)
        raise SchemeError(f"halpern takes b=<rat> or rule=<name>, got {key!r}")
    raise SchemeError(f"unknown scheme {text!r}")


def _require_no_arg(text: str, rest: str) -> None:
    if rest:
        raise SchemeError(f"scheme {text!r} takes no parameters")


def _param(text: str, rest: str) -> tuple[str, str]:
    key, sep, value = rest.partition("=")
    if not sep or not value:
        raise SchemeError(f"malformed scheme parameter in {text!r}")
    return key, value


def _param_value(text: str, rest: str, expected_key: str) -> Fraction:
    key, value = _param(text, rest)
    if key != expected_key:
        raise SchemeError(f"scheme {text!r}: expected parameter {expected_key!r}")
    return parse_rational(value)


def builtin_drift_schemes() -> list[Scheme]:
    """The builtin schemes satisfying the mass-drift condition, used by the
    structural-property and tightness test suites."""
    return [
        DiracScheme(),
        PairScheme(Fraction(3, 4)),
        KrasScheme.constant(Fraction(1, 2)),
        KrasScheme.constant(Fraction(3, 4)),
        UniformScheme(),
        HalpernScheme.named("n/(n+1)"),
        HalpernScheme.named("n/(n+2)"),
    ]
