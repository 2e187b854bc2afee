"""Rotations, skew products and special flows over a continued-fraction alpha.

Alpha is only ever known through a finite continued fraction, so every
system works with the last convergent ``p_L / q_L`` as an exact rational
surrogate and carries the bound ``|alpha - p_L/q_L| < 1 / q_L**2``.  Orbit
coordinates in the base are exact fractions; fibre coordinates are floats.

Birkhoff sums of ``g(x) = sum_k a_k cos(2 pi q_k x)`` use the geometric sum

    sum_{i<n} e(i theta) = e((phi - theta) / 2) sin(pi phi) / sin(pi theta),

where ``theta = q_k alpha`` and ``phi = n theta`` are reduced mod 1 exactly in
integer arithmetic before anything touches floating point.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import mpmath
import numpy as np

from .diophantine import ContinuedFraction, nearest_int_dist
from .errors import BudgetExceeded, PrecisionError

DIRECT_BUDGET = 10**9
RIGIDITY_BUDGET = 10**8
MP_DPS = 30
TWO_PI = 2 * math.pi


def as_fraction(x) -> Fraction:
    """Exact rational for ints, Fractions, decimal strings and floats (binary value)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    return Fraction(float(x))


def _centered(num: int, den: int) -> int:
    """Representative of ``num mod den`` in ``(-den/2, den/2]``."""
    r = num % den
    if 2 * r > den:
        r -= den
    return r


# --- geometric sums ----------------------------------------------------------


def dirichlet_kernel(n: int, num: int, den: int) -> complex:
    """``sum_{i<n} e(i * num/den)`` in double precision."""
    if n == 0:
        return 0j
    t = _centered(num, den)
    if t == 0:
        return complex(n)
    nt = n * t
    if 2 * abs(nt) <= den:
        # n*theta needs no reduction; Taylor-expand when both angles are tiny
        x = math.pi * (abs(nt) / den)
        if x < 1e-4:
            s = math.pi * (abs(t) / den)
            ratio = n * (1 - (x * x - s * s) / 6)
        else:
            ratio = math.sin(math.pi * (nt / den)) / math.sin(math.pi * (t / den))
        half = (n - 1) * t / (2 * den)
    else:
        f = _centered(nt, den)
        ratio = math.sin(math.pi * (f / den)) / math.sin(math.pi * (t / den))
        half = (f - t) / (2 * den)
    return ratio * cmath.exp(1j * TWO_PI * half)


def dirichlet_kernel_mp(n: int, num: int, den: int):
    """Same sum as :func:`dirichlet_kernel` as an mpmath complex (unbounded exponent range)."""
    if n == 0:
        return mpmath.mpc(0)
    t = _centered(num, den)
    if t == 0:
        return mpmath.mpc(n)
    f = _centered(n * t, den)
    theta = mpmath.mpf(t) / den
    phi = mpmath.mpf(f) / den
    ratio = mpmath.sin(mpmath.pi * phi) / mpmath.sin(mpmath.pi * theta)
    return ratio * mpmath.expjpi(phi - theta)


# --- alpha surrogate ---------------------------------------------------------


@dataclass(frozen=True)
class Alpha:
    """Exact rational stand-in ``num/den`` for alpha with an error bound."""

    num: int
    den: int
    err: Fraction

    @classmethod
    def from_cf(cls, cf: ContinuedFraction) -> "Alpha":
        L = len(cf) - 1
        err = Fraction(1, cf.q[L] ** 2) if L >= 1 else Fraction(1)
        return cls(cf.p[L] % cf.q[L], cf.q[L], err)

    @classmethod
    def exact(cls, value) -> "Alpha":
        v = as_fraction(value) % 1
        return cls(v.numerator, v.denominator, Fraction(0))

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den)

    def times(self, n: int) -> Fraction:
        """``{n * alpha}`` for the surrogate, exact."""
        return Fraction((n * self.num) % self.den, self.den)


# --- cocycles ----------------------------------------------------------------


@dataclass(frozen=True)
class FourierCocycle:
    """``g(x) = sum_k a_k cos(2 pi q_k x)`` with exact integer frequencies.

    Amplitudes are mpmath numbers because the rigid constructions produce
    values far below the double-precision range.
    """

    freqs: tuple[int, ...]
    amps: tuple
    alpha: Alpha
    indices: tuple[int, ...] = ()
    tight: frozenset = frozenset()
    decays: tuple = ()
    omitted_tail: float = 0.0

    def __post_init__(self):
        if len(self.freqs) != len(self.amps):
            raise ValueError("freqs and amps differ in length")
        if any(q < 0 for q in self.freqs):
            raise ValueError("frequencies must be non-negative")
        object.__setattr__(self, "amps", tuple(mpmath.mpf(a) for a in self.amps))

    @classmethod
    def from_terms(cls, terms, alpha) -> "FourierCocycle":
        """Hand-built cocycle; ``alpha`` is a ContinuedFraction or an :class:`Alpha`."""
        if isinstance(alpha, ContinuedFraction):
            alpha = Alpha.from_cf(alpha)
        terms = list(terms)
        return cls(tuple(int(q) for q, _ in terms), tuple(a for _, a in terms), alpha)

    @property
    def float_amps(self) -> np.ndarray:
        return np.array([float(a) for a in self.amps])

    @property
    def l1(self) -> float:
        return float(mpmath.fsum(abs(a) for a in self.amps))

    def weighted_l1(self):
        """``sum q_k |a_k|``, the Lipschitz constant of g."""
        return mpmath.fsum(q * abs(a) for q, a in zip(self.freqs, self.amps))

    def __call__(self, x) -> float:
        return eval_cocycle(self, x)[0]


def _amp_tight(qn: int, qn1: int):
    return 1 / (mpmath.mpf(qn) ** mpmath.mpf(0.8) * qn1)


def _amp_decay(n: int, qn: int, qn1: int):
    return 1 / (n * qn * mpmath.mpf(qn1) ** mpmath.mpf(0.8))


def build_cocycle(cf: ContinuedFraction, S=(), offset: int = 0, terms: int | None = None,
                  budget: float = 1.0) -> FourierCocycle:
    """Amplitudes for the rigid-cocycle schedule on indices ``1..K``.

    ``a_n = 1 / (q_n^{4/5} q_{n+1})`` for n in S (``S="all"`` allowed) and
    ``a_n = 1 / ((n + offset) q_n q_{n+1}^{4/5})`` otherwise.  Index n needs
    ``q_{n+1}``, so K is at most ``len(cf) - 2``.
    """
    K = len(cf) - 2 if terms is None else terms
    if K < 1 or K > len(cf) - 2:
        raise ValueError(f"need 1 <= terms <= {len(cf) - 2} for a cf with {len(cf)} convergents")
    idx = tuple(range(1, K + 1))
    S = frozenset(idx) if S == "all" else frozenset(int(k) for k in S)
    if not S <= set(idx):
        raise ValueError(f"schedule indices {sorted(S - set(idx))} outside 1..{K}")
    if 1 + offset <= 0:
        raise ValueError("offset must keep n + offset positive")
    q = cf.q
    for n in sorted(S):
        # both bounds can hold only when q_n / q_{n+1} is small; require
        # (q_n/q_{n+1})^{1/5} <= min(1/q_n, 1/2)
        if q[n + 1] < q[n] ** 6 or q[n + 1] < 32 * q[n]:
            raise ValueError(
                f"index {n}: q_n={q[n]}, q_(n+1)={q[n + 1]} too close; the tight lower bound "
                "needs q_n/q_(n+1) -> 0 along the schedule (liminf q_n/q_(n+1) = 0)"
            )
    amps, decays = [], []
    for n in idx:
        a = _amp_tight(q[n], q[n + 1]) if n in S else _amp_decay(n + offset, q[n], q[n + 1])
        amps.append(a)
        decays.append(a * q[n] * mpmath.mpf(q[n + 1]) ** mpmath.mpf(0.8))
    if any(dc > 1 for dc in decays):
        raise ValueError("amplitude above 1/(q_n q_(n+1)^(4/5))")
    if K >= 2 and not decays[-1] < max(decays):
        raise ValueError("decay factors do not fall along the built range")
    total = mpmath.fsum(qq * a for qq, a in zip(q[1 : K + 1], amps))
    if total > budget:
        raise ValueError(f"sum q_k |a_k| = {float(total):.4g} exceeds the continuity budget {budget}")
    # omitted terms obey |a_k| <= q_k^{-9/5} and q_{k+2} >= 2 q_k
    tail = float(3 / mpmath.mpf(q[K + 1]) ** mpmath.mpf(1.8))
    return FourierCocycle(tuple(q[1 : K + 1]), tuple(amps), Alpha.from_cf(cf), idx, S, tuple(decays), tail)


def eval_cocycle(g: FourierCocycle, x, eps: float = 0.0) -> tuple[float, float]:
    """``(value, tail)`` where tail bounds the absolute sum of skipped amplitudes.

    Terms are summed in order until the remaining amplitudes total less than
    eps (eps = 0 keeps every term).  ``g.omitted_tail`` is included in tail.
    """
    x = as_fraction(x)
    abs_amps = [abs(a) for a in g.amps]
    # suffix[i] = sum of |a_k| for k >= i
    suffix = [mpmath.fsum(abs_amps[i:]) for i in range(len(abs_amps))] + [mpmath.mpf(0)]
    vals = []
    used = 0
    for q, a in zip(g.freqs, g.amps):
        if eps > 0 and suffix[used] < eps:
            break
        r = (q * x.numerator) % x.denominator
        vals.append(float(a) * math.cos(TWO_PI * (r / x.denominator)))
        used += 1
    tail = float(suffix[used]) + g.omitted_tail
    return math.fsum(vals), tail


# --- Birkhoff sums -----------------------------------------------------------


def _thetas(g: FourierCocycle) -> list[int]:
    """Numerators of ``q_k alpha`` over ``alpha.den``."""
    return [(q * g.alpha.num) % g.alpha.den for q in g.freqs]


def birkhoff_coefficients(g: FourierCocycle, n: int, precise: bool = False, thetas=None) -> list:
    """``c_k`` with ``S_n(g)(x) = sum_k Re(c_k e(q_k x))``.

    The double-precision path drops terms whose contribution is provably
    below 1e-300; ``precise=True`` keeps everything in mpmath.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be >= 0")
    den = g.alpha.den
    thetas = _thetas(g) if thetas is None else thetas
    out = []
    if precise:
        with mpmath.workdps(MP_DPS):
            for a, th in zip(g.amps, thetas):
                out.append(a * dirichlet_kernel_mp(n, th, den))
        return out
    for a, th in zip(g.amps, thetas):
        af = float(a)
        if af == 0.0 or abs(af) * n < 1e-300:
            out.append(0j)
            continue
        out.append(af * dirichlet_kernel(n, th, den))
    return out


def _phases(freqs, x: Fraction) -> list[complex]:
    return [cmath.exp(1j * TWO_PI * (((q * x.numerator) % x.denominator) / x.denominator)) for q in freqs]


def birkhoff_error_bound(g: FourierCocycle, n: int) -> float:
    """Effect of replacing alpha by its surrogate: ``pi n^2 |alpha err| sum q_k|a_k|``."""
    if g.alpha.err == 0:
        return 0.0
    return float(mpmath.pi * mpmath.mpf(n) ** 2 * mpmath.mpf(g.alpha.err.numerator) / g.alpha.err.denominator
                 * g.weighted_l1())


def birkhoff_sum(g: FourierCocycle, x, n: int, mode: str = "closed_form",
                 budget: int = DIRECT_BUDGET) -> float:
    """``S_n(g)(x) = sum_{i<n} g(x + i alpha)`` over the alpha surrogate."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be >= 0")
    x = as_fraction(x)
    if n == 0:
        return 0.0
    if mode == "closed_form":
        cs = birkhoff_coefficients(g, n)
        ph = _phases(g.freqs, x)
        return math.fsum((c * e).real for c, e in zip(cs, ph))
    if mode != "direct":
        raise ValueError(f"unknown mode {mode!r}")
    if n * len(g.freqs) > budget:
        raise BudgetExceeded(f"direct Birkhoff sum needs {n * len(g.freqs)} evaluations > budget {budget}")
    al = g.alpha
    D = math.lcm(x.denominator, al.den)
    X = x.numerator * (D // x.denominator) % D
    step = al.num * (D // al.den) % D
    amps = [float(a) for a in g.amps]
    vals = []
    for _ in range(n):
        for q, a in zip(g.freqs, amps):
            vals.append(a * math.cos(TWO_PI * (((q * X) % D) / D)))
        X = (X + step) % D
    return math.fsum(vals)


# --- systems -----------------------------------------------------------------


@dataclass(frozen=True)
class TorusPoint:
    x: Fraction
    y: float = 0.0


FlowPoint = TorusPoint


class Rotation:
    """``x -> x + alpha`` on the circle."""

    space = "T"

    def __init__(self, cf: ContinuedFraction | None = None, alpha: Alpha | None = None):
        if alpha is None:
            if cf is None:
                raise ValueError("need cf or alpha")
            alpha = Alpha.from_cf(cf)
        self.cf = cf
        self.alpha = alpha

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(alpha=Alpha.exact(0))

    def iterate(self, p: TorusPoint, n: int) -> TorusPoint:
        return TorusPoint((p.x + self.alpha.times(n)) % 1, p.y)


class SkewProductSystem:
    """``(x, y) -> (x + alpha, y + g(x))`` on the 2-torus."""

    space = "T2"

    def __init__(self, g: FourierCocycle, cf: ContinuedFraction | None = None):
        self.g = g
        self.cf = cf
        self.alpha = g.alpha
        self._thetas = _thetas(g)

    def iterate(self, p: TorusPoint, n: int) -> TorusPoint:
        return skew_iterate(self, p, n)


def skew_iterate(sys: SkewProductSystem, p: TorusPoint, n: int) -> TorusPoint:
    """``T^n`` through one closed-form Birkhoff sum per frequency."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be >= 0")
    x = as_fraction(p.x)
    if n == 0:
        return TorusPoint(x, p.y)
    cs = birkhoff_coefficients(sys.g, n, thetas=sys._thetas)
    s = math.fsum((c * e).real for c, e in zip(cs, _phases(sys.g.freqs, x)))
    return TorusPoint((x + sys.alpha.times(n)) % 1, (p.y + s) % 1.0)


def skew_orbit(sys: SkewProductSystem, p: TorusPoint, times: Iterable[int]) -> tuple[np.ndarray, np.ndarray]:
    """Float coordinates of ``T^t p`` for each t, sharing the exact base arithmetic."""
    x = as_fraction(p.x)
    al = sys.alpha
    D = math.lcm(x.denominator, al.den)
    X0 = x.numerator * (D // x.denominator)
    step = al.num * (D // al.den)
    ph = _phases(sys.g.freqs, x)
    xs, ys = [], []
    for t in times:
        t = int(t)
        cs = birkhoff_coefficients(sys.g, t, thetas=sys._thetas)
        s = math.fsum((c * e).real for c, e in zip(cs, ph))
        xs.append(((X0 + t * step) % D) / D)
        ys.append((p.y + s) % 1.0)
    return np.array(xs), np.array(ys)


class SpecialFlowSystem:
    """Vertical unit-speed flow under ``roof = c0 + g`` over the rotation.

    ``c0`` defaults to ``1 + sum |a_k|`` so the roof stays above 1.  The
    discrete map of the system is the time-``step`` map.
    """

    space = "flow"

    def __init__(self, g: FourierCocycle, c0: float | None = None, step: float = 1.0,
                 max_error: float = 1e-6):
        l1 = g.l1
        self.g = g
        self.alpha = g.alpha
        self.c0 = 1.0 + l1 if c0 is None else float(c0)
        if self.c0 <= l1:
            raise ValueError(f"offset {self.c0} does not keep the roof positive (sum |a_k| = {l1})")
        if step <= 0:
            raise ValueError("time step must be positive")
        self.step = float(step)
        self.max_error = max_error
        self.roof_min = self.c0 - l1
        self.roof_max = self.c0 + l1
        self._thetas = _thetas(g)

    def roof(self, x) -> float:
        return self.c0 + eval_cocycle(self.g, x)[0]

    def roof_sum(self, x: Fraction, a: int) -> float:
        """``S_a(roof)(x)``."""
        if a == 0:
            return 0.0
        cs = birkhoff_coefficients(self.g, a, thetas=self._thetas)
        return a * self.c0 + math.fsum((c * e).real for c, e in zip(cs, _phases(self.g.freqs, x)))

    def iterate(self, p: TorusPoint, n: int) -> TorusPoint:
        return special_flow_map(self, p, n * self.step)


def special_flow_map(sys: SpecialFlowSystem, p: TorusPoint, t: float) -> TorusPoint:
    """Flow p for time t and return the canonical representative under the roof.

    A landing point within rounding of a fibre top is the identified point
    at the bottom of the next fibre.  If the rounding bound itself exceeds
    ``sys.max_error`` a PrecisionError is raised instead.
    """
    if t < 0:
        raise ValueError("flow time must be >= 0")
    x = as_fraction(p.x) % 1
    y = float(p.y)
    if not 0 <= y < sys.roof(x):
        raise ValueError(f"point ({x}, {y}) is not under the roof")
    if t == 0:
        return TorusPoint(x, y)
    target = y + t
    lo = max(0, math.floor(target / sys.roof_max) - 1)
    hi = math.floor(target / sys.roof_min) + 1
    # largest a with S_a <= target
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if sys.roof_sum(x, mid) <= target:
            lo = mid
        else:
            hi = mid - 1
    a = lo
    tol = 1e-12 * max(1.0, target) + birkhoff_error_bound(sys.g, a + 1)
    if tol > sys.max_error:
        raise PrecisionError(f"flow time {t}: error bound {tol:.3g} exceeds {sys.max_error:.3g}")
    s_a = sys.roof_sum(x, a)
    s_next = sys.roof_sum(x, a + 1)
    if s_next - target <= tol:
        a += 1
        s_a = s_next
    y_new = max(target - s_a, 0.0) if target - s_a > -tol else None
    if y_new is None:
        raise PrecisionError(f"flow time {t}: fibre search inconsistent at a={a}")
    if y_new <= tol:
        y_new = 0.0
    x_new = (x + sys.alpha.times(a)) % 1
    if not y_new < sys.roof(x_new):
        raise PrecisionError(f"flow time {t}: landing height {y_new} not separated from the roof")
    return TorusPoint(x_new, y_new)


# --- metric and rigidity -----------------------------------------------------


def _circle(a, b) -> float:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return float(nearest_int_dist(a - b))
    d = (float(a) - float(b)) % 1.0
    return min(d, 1.0 - d)


def metric(space: str, p1, p2, sys: SpecialFlowSystem | None = None) -> float:
    """Distance on ``T``, ``T2`` or the special-flow space.

    Circle points may be passed as bare numbers.  The flow distance is the
    least over the representatives of p2 shifted by at most one fibre.
    """
    if space == "T":
        a = p1.x if isinstance(p1, TorusPoint) else p1
        b = p2.x if isinstance(p2, TorusPoint) else p2
        return _circle(a, b)
    if space == "T2":
        return max(_circle(p1.x, p2.x), _circle(p1.y, p2.y))
    if space != "flow":
        raise ValueError(f"unknown space {space!r}")
    if sys is None:
        raise ValueError("flow metric needs the system for its roof")
    x2 = as_fraction(p2.x)
    reps = [(x2, p2.y), ((x2 + sys.alpha.value) % 1, p2.y - sys.roof(x2))]
    xm = (x2 - sys.alpha.value) % 1
    reps.append((xm, p2.y + sys.roof(xm)))
    x1 = as_fraction(p1.x)
    return min(max(_circle(x1, rx), abs(p1.y - ry)) for rx, ry in reps)


@dataclass
class RigidityResult:
    """Grid-approximate ``max_t sup_x d(x, T^{t q} x)``.

    ``value`` is an mpmath number (it can be far below double range);
    ``sampled`` tells whether t was enumerated or sampled.
    """

    value: object
    t_at_max: int
    q: int
    t_max: int
    grid_size: int
    sampled: bool
    error_bound: float = 0.0
    per_t: list = field(default_factory=list)

    def __float__(self):
        return float(self.value)


def _t_values(t_max: int, samples: int) -> tuple[list[int], bool]:
    if t_max <= samples:
        return list(range(1, t_max + 1)), False
    # geometric spread plus the endpoints; the dominant terms grow with t
    ts = {1, t_max}
    for k in range(samples):
        ts.add(max(1, int(mpmath.nint(mpmath.mpf(t_max) ** (mpmath.mpf(k) / (samples - 1))))))
    ts.update(t_max - j for j in range(min(8, t_max)))
    return sorted(ts), True


def _grid_sup_skew(sys: SkewProductSystem, n: int, G: int):
    """``sup_j ||S_n(g)(j/G)||`` (circle norm) as an mpmath number."""
    with mpmath.workdps(MP_DPS):
        cs = birkhoff_coefficients(sys.g, n, precise=True, thetas=sys._thetas)
        scale = max((abs(c) for c in cs), default=mpmath.mpf(0))
        if scale == 0:
            return mpmath.mpf(0)
        j = np.arange(G, dtype=np.int64)
        acc = np.zeros(G)
        for q, c in zip(sys.g.freqs, cs):
            rel = complex(c / scale)
            if rel == 0:
                continue
            ph = np.exp(1j * TWO_PI * (((q % G) * j) % G) / G)
            acc += (rel * ph).real
        if scale > 1e-200:
            v = float(scale) * acc
            return mpmath.mpf(float(np.max(np.abs(v - np.round(v)))))
        # far below 1/2, so the circle norm is the absolute value
        return scale * mpmath.mpf(float(np.max(np.abs(acc))))


def rigidity_profile(sys, q: int, t_max: int, grid_size: int = 1000, samples: int = 256,
                     budget: int = RIGIDITY_BUDGET) -> RigidityResult:
    """Grid stand-in for ``max_{1 <= t <= t_max} sup_x d(x, T^{t q} x)``.

    t runs over ``1..t_max`` (so t_max = 1 gives the single step ``T^q``);
    long ranges are sampled as described in :class:`RigidityResult`.
    """
    q, t_max = int(q), int(t_max)
    if grid_size < 1 or t_max < 1:
        raise ValueError("need grid_size >= 1 and t_max >= 1")
    ts, sampled = _t_values(t_max, samples)
    G = grid_size
    cost = len(ts) * (G * G if sys.space == "flow" else G)
    if cost > budget:
        raise BudgetExceeded(f"rigidity profile needs {cost} evaluations > budget {budget}")
    best, best_t, per_t = mpmath.mpf(0), 0, []
    err = 0.0
    for t in ts:
        n = t * q
        base = nearest_int_dist(sys.alpha.times(n))
        d = mpmath.mpf(base.numerator) / base.denominator
        if sys.space == "T2":
            d = max(d, _grid_sup_skew(sys, n, G))
            err = max(err, birkhoff_error_bound(sys.g, n))
        elif sys.space == "flow":
            d = mpmath.mpf(_flow_sup(sys, n * sys.step, G))
        err = max(err, float(n * sys.alpha.err))
        per_t.append((t, d))
        if d > best:
            best, best_t = d, t
    return RigidityResult(best, best_t, q, t_max, G, sampled, err, per_t)


def _flow_sup(sys: SpecialFlowSystem, t: float, G: int) -> float:
    worst = 0.0
    for i in range(G):
        x = Fraction(i, G)
        r = sys.roof(x)
        for j in range(G):
            p = TorusPoint(x, r * j / G)
            worst = max(worst, metric("flow", p, special_flow_map(sys, p, t), sys))
    return worst
