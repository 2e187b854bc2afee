"""Sparse and Pow-weighted ergodic averages, plus discrepancy reporting."""

from __future__ import annotations

import csv
import io
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import (
    Rotation,
    SkewProductSystem,
    SpecialFlowSystem,
    TorusPoint,
    as_fraction,
    skew_orbit,
    special_flow_map,
)
from .errors import BudgetExceeded
from .powres import PROFILE_LIMIT, ScaledCharacter, approximate_pow, pow_profile

ORBIT_BUDGET = 10**7
TWO_PI = 2 * math.pi
SCHEMA = 1


# --- test functions ----------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """``e(k1 x + k2 y)``, optionally times a triangular bump in the fibre.

    A bump ``(center, width)`` gives ``max(0, 1 - |y - center| / width)``
    in place of ``e(k2 y)``.  On circle systems the single coordinate plays
    both x and y.
    """

    __test__ = False  # not a pytest class

    k1: int = 0
    k2: int = 0
    bump: tuple[float, float] | None = None

    @property
    def name(self) -> str:
        if self.bump is not None:
            return f"e({self.k1}x)*bump({self.bump[0]:g},{self.bump[1]:g})"
        if self.k1 == 0 and self.k2 == 0:
            return "1"
        return f"e({self.k1}x+{self.k2}y)"

    def sup(self) -> float:
        return 1.0

    def __call__(self, xs, ys=None) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        ys = xs if ys is None else np.asarray(ys, dtype=float)
        if self.bump is not None:
            c, w = self.bump
            return np.exp(1j * TWO_PI * self.k1 * xs) * np.maximum(0.0, 1 - np.abs(ys - c) / w)
        if self.k1 == 0 and self.k2 == 0:
            return np.ones(xs.shape, dtype=complex)
        return np.exp(1j * TWO_PI * ((self.k1 * xs) % 1.0 + (self.k2 * ys) % 1.0))


_CHAR_RE = re.compile(r"^e\((.*)\)$")
_TERM_RE = re.compile(r"([+-]?\d*)\s*([xy])")


def parse_test_function(spec) -> TestFunction:
    """``"1"``, ``"e(x)"``, ``"e(y)"``, ``"e(2x-3y)"`` or a ``(k1, k2)`` pair."""
    if isinstance(spec, TestFunction):
        return spec
    if isinstance(spec, (tuple, list)):
        return TestFunction(int(spec[0]), int(spec[1]))
    s = str(spec).replace(" ", "")
    if s in ("1", "one"):
        return TestFunction()
    m = _CHAR_RE.match(s)
    if not m:
        raise ValueError(f"unknown test function {spec!r}")
    body = m.group(1)
    ks = {"x": 0, "y": 0}
    pos = 0
    for t in _TERM_RE.finditer(body):
        if t.start() != pos:
            raise ValueError(f"cannot parse {spec!r}")
        c = t.group(1)
        ks[t.group(2)] += int(c + "1") if c in ("", "+", "-") else int(c)
        pos = t.end()
    if pos != len(body):
        raise ValueError(f"cannot parse {spec!r}")
    return TestFunction(ks["x"], ks["y"])


def character_dictionary(K: int) -> list[TestFunction]:
    """Nontrivial characters up to sign: ``0 < max(|k1|, |k2|) <= K``."""
    out = []
    for k1 in range(-K, K + 1):
        for k2 in range(0, K + 1):
            if k2 == 0 and k1 <= 0:
                continue
            out.append(TestFunction(k1, k2))
    return out


# --- orbits ------------------------------------------------------------------


def _start(sys, x0) -> TorusPoint:
    if isinstance(x0, TorusPoint):
        return x0
    if isinstance(x0, (tuple, list)):
        return TorusPoint(as_fraction(x0[0]), float(x0[1]))
    return TorusPoint(as_fraction(x0), 0.0)


def orbit_points(sys, x0, times) -> tuple[np.ndarray, np.ndarray | None]:
    """Float coordinates of ``T^t x0`` for each t (ys is None on the circle)."""
    p = _start(sys, x0)
    times = [int(t) for t in times]
    if isinstance(sys, Rotation):
        x = p.x
        D = math.lcm(x.denominator, sys.alpha.den)
        X0 = x.numerator * (D // x.denominator)
        step = sys.alpha.num * (D // sys.alpha.den)
        return np.array([((X0 + t * step) % D) / D for t in times]), None
    if isinstance(sys, SkewProductSystem):
        return skew_orbit(sys, p, times)
    if isinstance(sys, SpecialFlowSystem):
        xs, ys = [], []
        for t in times:
            q = special_flow_map(sys, p, t * sys.step)
            xs.append(float(q.x))
            ys.append(q.y)
        return np.array(xs), np.array(ys)
    raise TypeError(f"unsupported system {type(sys).__name__}")


def _mean(vals: np.ndarray, weights=None) -> complex:
    if weights is not None:
        vals = vals * weights
    n = len(vals) if weights is None else None
    re_, im_ = math.fsum(vals.real), math.fsum(vals.imag)
    if n is None:
        return complex(re_, im_)
    return complex(re_ / n, im_ / n)


def sparse_average(sys, x0, f, C: int, N: int, budget: int = ORBIT_BUDGET) -> complex:
    """``(1/N) sum_{i<N} f(T^{i^C} x0)``."""
    if N < 1 or C < 1:
        raise ValueError("need N >= 1 and C >= 1")
    if N > budget:
        raise BudgetExceeded(f"sparse average over {N} points exceeds budget {budget}")
    f = parse_test_function(f)
    if f.k1 == 0 and f.k2 == 0 and f.bump is None:
        return 1 + 0j
    xs, ys = orbit_points(sys, x0, (i**C for i in range(N)))
    return _mean(f(xs, ys))


def weighted_pow_average(sys, x0, f, C: int, n: int, budget: int = ORBIT_BUDGET) -> complex:
    """``(1/n) sum_{i<n} Pow_n(i) f(T^i x0)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > min(budget, PROFILE_LIMIT):
        raise BudgetExceeded(f"weighted average over {n} points exceeds budget")
    f = parse_test_function(f)
    if f.k1 == 0 and f.k2 == 0 and f.bump is None:
        return 1 + 0j
    counts = pow_profile(n, C).counts.astype(float)
    xs, ys = orbit_points(sys, x0, range(n))
    s = _mean(f(xs, ys), counts)
    return s / n


def pow_exp_sum_expansion(n: int, C: int, num: int, den: int) -> complex:
    """``sum_{i<n} Pow_n(i) e(i num/den)`` through the scaled-character expansion.

    Independent of :func:`pow_profile`: ``Pow_n`` is rebuilt as the full
    divisor sum of scaled characters and each piece is summed on its own
    support.
    """
    combo, _ = approximate_pow(n, C, n)
    total = []
    for t in combo.terms:
        s = t.f.scale
        js = range(-(-n // s))
        chi_vals = t.f.chi.values(np.array([j % t.f.chi.modulus for j in js], dtype=np.int64))
        ph = np.array([((j * s * num) % den) / den for j in js])
        piece = chi_vals * np.exp(1j * TWO_PI * ph)
        total.append(t.weight * t.coeff * complex(math.fsum(piece.real), math.fsum(piece.imag)))
    return complex(math.fsum(z.real for z in total), math.fsum(z.imag for z in total))


# --- scaled-character averages -----------------------------------------------


def scaled_char_average(g_seq, f: ScaledCharacter, n: int, m: int, L: int,
                        eps: float | None = None) -> tuple[float, float, float]:
    """``(value, bound, eps)`` for ``(1/n)|sum_{x<n} g(x) f(x)|``.

    The bound is ``(1/d)(sqrt(m/L) + 2mL/n + eps)`` with d the scale of f.
    When eps is not given it is measured from the sequence: the largest
    shift defect ``|g(x + t m) - g(x)|`` (t < L) and the largest progression
    mean ``(1/r)|sum_{x<r} g(x m + t)|`` (t < m, r = n // m), over the
    indices the sequence covers.
    """
    g = np.asarray(g_seq, dtype=float)
    d = f.scale
    if n < 1 or m < 1 or L < 1:
        raise ValueError("need n, m, L >= 1")
    if m % d or n % d:
        raise ValueError(f"scale d={d} must divide m={m} and n={n}")
    if f.modulus != n // d:
        raise ValueError(f"f has modulus {f.modulus}, expected n/d = {n // d}")
    r = n // m
    if r < 1:
        raise ValueError("need m <= n")
    if len(g) < n:
        raise ValueError(f"sequence has {len(g)} samples, need n = {n}")
    if np.any(np.abs(g) > 1 + 1e-12):
        raise ValueError("sequence must take values in [-1, 1]")
    if eps is None:
        shift = 0.0
        for t in range(1, L):
            if t * m < len(g):
                shift = max(shift, float(np.max(np.abs(g[t * m :] - g[: len(g) - t * m]))))
        prog = 0.0
        for t in range(m):
            idx = t + m * np.arange(r)
            if idx[-1] < len(g):
                prog = max(prog, abs(math.fsum(g[idx])) / r)
        eps = max(shift, prog)
    vals = f.values(np.arange(n)) * g[:n]
    value = abs(complex(math.fsum(vals.real), math.fsum(vals.imag))) / n
    bound = (math.sqrt(m / L) + 2 * m * L / n + eps) / d
    return value, bound, eps


# --- discrepancy -------------------------------------------------------------


def discrepancy_report(xs, ys=None, K: int = 5) -> float:
    """Largest ``|mean e(k1 x + k2 y)|`` over ``0 < max(|k1|, |k2|) <= K``.

    With ys None the points live on the circle and only ``0 < |k| <= K``
    is scanned.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    xs = np.asarray(xs, dtype=float)
    if len(xs) == 0:
        raise ValueError("no points")
    ex = np.exp(1j * TWO_PI * xs)
    if ys is None:
        return max(abs(np.mean(ex**k)) for k in range(1, K + 1))
    ey = np.exp(1j * TWO_PI * np.asarray(ys, dtype=float))
    xp = [ex**k for k in range(K + 1)]
    best = 0.0
    for k2 in range(K + 1):
        yk = ey**k2
        for k1 in range(-K, K + 1):
            if k2 == 0 and k1 <= 0:
                continue
            a = xp[k1] if k1 >= 0 else np.conj(xp[-k1])
            best = max(best, abs(np.mean(a * yk)))
    return float(best)


def _tri_integral(R: np.ndarray, c: float, w: float) -> np.ndarray:
    """``int_0^R max(0, 1 - |y - c|/w) dy``."""
    def F(y):
        # antiderivative from the left end of the support
        u = np.clip(y, c - w, c + w) - c
        left = np.minimum(u, 0)
        right = np.maximum(u, 0)
        return (left + w) + (left**2 - w**2) / (2 * w) + right - right**2 / (2 * w)

    return F(R) - F(np.zeros_like(R))


def flow_integral(sys: SpecialFlowSystem, f: TestFunction, tol: float = 1e-9) -> complex:
    """``int f dmu`` for normalized Lebesgue measure under the roof.

    The fibre integral is exact; the base integral is a periodic trapezoid
    rule doubled until two successive values agree within tol.
    """
    prev = None
    G = 64
    while True:
        x = np.arange(G) / G
        roof = np.array([sys.roof(Fraction(i, G)) for i in range(G)])
        if f.bump is None:
            if f.k2 != 0:
                inner = (np.exp(1j * TWO_PI * f.k2 * roof) - 1) / (1j * TWO_PI * f.k2)
            else:
                inner = roof.astype(complex)
        else:
            inner = _tri_integral(roof, *f.bump).astype(complex)
        val = np.mean(np.exp(1j * TWO_PI * f.k1 * x) * inner) / np.mean(roof)
        if prev is not None and abs(val - prev) < tol:
            return complex(val)
        if G > 2**16:
            raise ArithmeticError("flow quadrature did not settle")
        prev = val
        G *= 2


def flow_dictionary(sys: SpecialFlowSystem, K: int) -> list[TestFunction]:
    w = sys.roof_min / 4
    out = [TestFunction(k, 0) for k in range(1, K + 1)]
    for k in range(0, K + 1):
        for j in (1, 2, 3):
            out.append(TestFunction(k, 0, (j * w, w)))
    return out


def flow_discrepancy(sys: SpecialFlowSystem, xs, ys, K: int = 3) -> float:
    """Largest deviation of test-function averages from their integrals."""
    xs, ys = np.asarray(xs), np.asarray(ys)
    best = 0.0
    for f in flow_dictionary(sys, K):
        best = max(best, abs(_mean(f(xs, ys)) - flow_integral(sys, f)))
    return best


# --- trend reports -----------------------------------------------------------


@dataclass
class Checkpoint:
    N: int
    averages: dict
    discrepancy: float


@dataclass
class AverageReport:
    system: str
    start: str
    sequence: str
    checkpoints: list[Checkpoint] = field(default_factory=list)

    def __post_init__(self):
        Ns = [c.N for c in self.checkpoints]
        if any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise ValueError("checkpoints must be strictly increasing")

    @property
    def trend(self) -> bool:
        return self.checkpoints[-1].discrepancy < self.checkpoints[0].discrepancy

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema={SCHEMA}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["system", "start", "sequence", "N", "function", "re", "im", "abs", "discrepancy"])
        for c in self.checkpoints:
            for name in sorted(c.averages):
                z = c.averages[name]
                w.writerow([self.system, self.start, self.sequence, c.N, name,
                            repr(z.real), repr(z.imag), repr(abs(z)), repr(c.discrepancy)])
        return buf.getvalue()

    def to_json(self) -> str:
        d = asdict(self)
        for c in d["checkpoints"]:
            c["averages"] = {k: [v.real, v.imag] for k, v in sorted(c["averages"].items())}
        d["trend"] = self.trend
        d["schema"] = SCHEMA
        return json.dumps(d, indent=2, sort_keys=True)


def equidistribution_trend(sys, x0, C: int, checkpoints, K: int = 5, functions=None,
                           system_id: str = "", threads: int = 1,
                           budget: int = ORBIT_BUDGET) -> AverageReport:
    """Discrepancy and test-function averages of the orbit ``T^{i^C} x0`` at each checkpoint."""
    cps = [int(N) for N in checkpoints]
    if not cps or cps[0] < 1 or any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be positive and strictly increasing")
    if cps[-1] > budget:
        raise BudgetExceeded(f"orbit of length {cps[-1]} exceeds budget {budget}")
    funcs = [parse_test_function(f) for f in (functions or ["1", "e(x)", "e(y)"])]
    xs, ys = orbit_points(sys, x0, (i**C for i in range(cps[-1])))
    is_flow = isinstance(sys, SpecialFlowSystem)

    def one(N):
        ysN = None if ys is None else ys[:N]
        if is_flow:
            disc = flow_discrepancy(sys, xs[:N], ysN, K)
        else:
            disc = discrepancy_report(xs[:N], ysN, K)
        avgs = {f.name: _mean(f(xs[:N], ysN)) for f in funcs}
        return Checkpoint(N, avgs, float(disc))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(one, cps))
    else:
        rows = [one(N) for N in cps]
    p = _start(sys, x0)
    return AverageReport(system_id or type(sys).__name__, f"{p.x}|{p.y!r}", f"n^{C}", rows)
