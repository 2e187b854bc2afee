"""Continued fractions, denominator sequences and exact rotation points."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .arith import is_prime
from .errors import BudgetExceeded, PrecisionError


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients ``[a0; a1, a2, ...]`` with exact convergents.

    ``p[n] / q[n]`` is the n-th convergent, so ``q[0] == 1``.
    """

    quotients: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]

    def __len__(self):
        return len(self.q)

    def convergent(self, n: int) -> Fraction:
        return Fraction(self.p[n], self.q[n])

    @property
    def denominators(self) -> tuple[int, ...]:
        return self.q

    def value(self) -> Fraction:
        """The last convergent, the best rational stand-in for alpha on hand."""
        return self.convergent(len(self) - 1)

    def to_mpf(self, dps: int = 50):
        import mpmath

        with mpmath.workdps(dps):
            return mpmath.mpf(self.p[-1]) / self.q[-1]


def convergents_from_quotients(a, count: int | None = None) -> ContinuedFraction:
    a = [int(v) for v in a]
    if not a:
        raise ValueError("need at least a0")
    if any(v < 1 for v in a[1:]):
        raise ValueError("partial quotients after a0 must be >= 1")
    if count is not None:
        if count > len(a):
            raise ValueError(f"asked for {count} convergents from {len(a)} quotients")
        a = a[:count]
    p = [a[0]]
    q = [1]
    pm, qm = 1, 0
    for v in a[1:]:
        p_new, q_new = v * p[-1] + pm, v * q[-1] + qm
        pm, qm = p[-1], q[-1]
        p.append(p_new)
        q.append(q_new)
    return ContinuedFraction(tuple(a), tuple(p), tuple(q))


def cf_from_denominators(qs, a0: int = 0) -> ContinuedFraction:
    """Rebuild quotients from a denominator sequence starting at ``q0 = 1``."""
    qs = [int(v) for v in qs]
    if not qs or qs[0] != 1:
        raise ValueError("denominator sequences start at q0 = 1")
    a = [a0]
    prev2 = 0
    for i in range(1, len(qs)):
        k, rem = divmod(qs[i] - prev2, qs[i - 1])
        if rem or k < 1:
            raise ValueError(f"q[{i}] = {qs[i]} breaks the recurrence")
        a.append(k)
        prev2 = qs[i - 1]
    return convergents_from_quotients(a)


# --- denominator construction ----------------------------------------------

Predicate = Callable[[int, list[int]], bool]


def _named_constraint(spec) -> Predicate:
    if callable(spec):
        return spec
    if isinstance(spec, str):
        name, arg = spec, None
    else:
        name, arg = spec["name"], spec.get("C")
    if name == "none":
        return lambda c, hist: True
    if name == "prime":
        return lambda c, hist: is_prime(c)
    if name == "coprime":
        return lambda c, hist: all(math.gcd(c, h) == 1 for h in hist)
    if name == "odd":
        return lambda c, hist: c % 2 == 1
    if name == "1modC":
        if not arg:
            raise ValueError("constraint 1modC needs C")
        return lambda c, hist: c % arg == 1
    raise ValueError(f"unknown constraint {name!r}")


def construct_denominators(length: int, constraints=(), q0: int = 1, q1: int = 2,
                           budget: int = 10**6) -> list[int]:
    """Denominators with ``q[n+2] = q[n] + k q[n+1]`` for the least admissible ``k >= 1``.

    Constraints apply to every constructed term (from index 2 on).
    """
    if length < 2:
        raise ValueError("length must be >= 2")
    if q0 != 1 or q1 < 1:
        raise ValueError("need q0 = 1 and q1 >= 1")
    preds = [_named_constraint(c) for c in constraints]
    qs = [q0, q1]
    steps = 0
    while len(qs) < length:
        k = 1
        while True:
            steps += 1
            if steps > budget:
                raise BudgetExceeded(f"denominator search exhausted its budget at index {len(qs)}")
            cand = qs[-2] + k * qs[-1]
            if all(p(cand, qs) for p in preds):
                break
            k += 1
        qs.append(cand)
    return qs


def power_rule(exponent: float, terms: int, seed=(0, 1)) -> ContinuedFraction:
    """Quotients so that ``q[n+1]`` is about ``q[n] ** exponent`` after the seed."""
    a = [int(v) for v in seed]
    if len(a) < 2:
        raise ValueError("seed needs a0 and at least one more quotient")
    cf = convergents_from_quotients(a)
    q = list(cf.q)
    while len(a) < terms:
        k = max(1, _int_power(q[-1], exponent - 1))
        a.append(k)
        q.append(k * q[-1] + q[-2])
    return convergents_from_quotients(a[:terms])


def _int_power(base: int, e: float) -> int:
    if float(e).is_integer():
        return base ** int(e)
    import mpmath

    with mpmath.workdps(30 + int(math.log10(base + 1) * e)):
        return int(mpmath.nint(mpmath.mpf(base) ** e))


def cf_from_spec(spec) -> ContinuedFraction:
    """Build a CF from a JSON spec (dict or JSON text).

    ``{"quotients": [...]}``, ``{"rule": "power", "exponent": 6, "terms": 6,
    "seed": [0, 1]}``, ``{"rule": "golden", "terms": n}``, ``{"rule": "sqrt2",
    "terms": n}`` or ``{"rule": "denominators", "length": n, "constraints": [...]}``.
    """
    if isinstance(spec, str):
        spec = json.loads(spec)
    if "quotients" in spec:
        return convergents_from_quotients(spec["quotients"])
    rule = spec.get("rule")
    terms = int(spec.get("terms", 20))
    if rule == "power":
        return power_rule(spec.get("exponent", 5), terms, spec.get("seed", (0, 1)))
    if rule == "golden":
        return convergents_from_quotients([0] + [1] * (terms - 1))
    if rule == "sqrt2":
        return convergents_from_quotients([1] + [2] * (terms - 1))
    if rule == "denominators":
        qs = construct_denominators(int(spec["length"]), spec.get("constraints", ()), 1,
                                    int(spec.get("q1", 2)), int(spec.get("budget", 10**6)))
        return cf_from_denominators(qs)
    raise ValueError(f"unrecognized cf spec {spec!r}")


# --- distances and rotation points -----------------------------------------


def nearest_int_dist(x):
    """``min_a |x - a|``; exact for Fraction and int input."""
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return abs(x - round(x))
    try:
        import mpmath

        if isinstance(x, mpmath.mpf):
            return abs(x - mpmath.nint(x))
    except ImportError:  # pragma: no cover
        pass
    return abs(x - round(x))


def frac_part(x: Fraction) -> Fraction:
    return x - math.floor(x)


def required_index(cf: ContinuedFraction, i: int, eps) -> int:
    """Least M with ``|i| / (q_M q_{M+1}) < eps / 2``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    eps = Fraction(eps)
    i = abs(int(i))
    for M in range(len(cf) - 1):
        if Fraction(i, cf.q[M] * cf.q[M + 1]) < eps / 2:
            return M
    raise PrecisionError(
        f"need q_M q_(M+1) > {float(2 * i / eps):.3g}; only {len(cf)} convergents available "
        f"(largest product {cf.q[-2] * cf.q[-1]})"
    )


def rotation_point(cf: ContinuedFraction, i: int, eps=Fraction(1, 10**12)) -> Fraction:
    """``{i * alpha}`` within eps, as the exact fraction ``{i p_M / q_M}``."""
    i = int(i)
    if i == 0:
        return Fraction(0)
    M = required_index(cf, i, eps)
    return Fraction((i * cf.p[M]) % cf.q[M], cf.q[M])


def badly_approximable_proxy(cf: ContinuedFraction) -> Fraction:
    """``min q_n / q_{n+1}`` over the available consecutive pairs."""
    if len(cf) < 2:
        raise ValueError("need at least two convergents")
    return min(Fraction(cf.q[n], cf.q[n + 1]) for n in range(len(cf) - 1))


def pairs_proxy(qs) -> Fraction:
    return min(Fraction(qs[n], qs[n + 1]) for n in range(len(qs) - 1))
