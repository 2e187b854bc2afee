"""Complete exponential sums with integer polynomial phases."""

from __future__ import annotations

import math
import re
from functools import lru_cache

import numpy as np

from .characters import phase_sum, roots_of_unity
from .errors import BudgetExceeded

DIFF_BUDGET = 10**8
COUNT_BUDGET = 10**9


class IntPolynomial:
    """Integer polynomial, coefficients constant term first."""

    def __init__(self, coeffs):
        cs = [int(c) for c in coeffs] or [0]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1]

    def __repr__(self):
        return f"IntPolynomial({list(self.coeffs)})"

    def __eq__(self, other):
        return isinstance(other, IntPolynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    @classmethod
    def monomial(cls, k: int, c: int = 1) -> "IntPolynomial":
        return cls([0] * k + [c])

    @classmethod
    def parse(cls, text: str) -> "IntPolynomial":
        """Parse strings like ``n^2``, ``3x^3 - x + 7`` or ``2*n^2+1``."""
        s = text.replace(" ", "").replace("**", "^").replace("*", "")
        if not s:
            raise ValueError("empty polynomial")
        coeffs: dict[int, int] = {}
        for sign, body in re.findall(r"([+-]?)([^+-]+)", s):
            m = re.fullmatch(r"(\d*)(?:([a-z])(?:\^(\d+))?)?", body)
            if not m or (not m.group(1) and not m.group(2)):
                raise ValueError(f"cannot parse term {body!r} in {text!r}")
            c = int(m.group(1)) if m.group(1) else 1
            k = 0 if not m.group(2) else int(m.group(3) or 1)
            coeffs[k] = coeffs.get(k, 0) + (-c if sign == "-" else c)
        return cls([coeffs.get(k, 0) for k in range(max(coeffs) + 1)])

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_mod(self, xs, q: int) -> np.ndarray:
        """``P(x) mod q`` elementwise, reducing before every product."""
        if q < 2**31:
            xs = np.asarray(xs, dtype=np.int64) % q
            acc = np.zeros_like(xs)
            for c in reversed(self.coeffs):
                acc = (acc * xs + c % q) % q
            return acc
        return np.array([self(int(x)) % q for x in np.asarray(xs).ravel()], dtype=object)

    def shift(self, h: int) -> "IntPolynomial":
        """``x -> P(x + h)``."""
        out = [0] * len(self.coeffs)
        for j, c in enumerate(self.coeffs):
            for i in range(j + 1):
                out[i] += c * math.comb(j, i) * h ** (j - i)
        return IntPolynomial(out)

    def difference(self, h: int) -> "IntPolynomial":
        shifted = self.shift(h).coeffs
        return IntPolynomial([a - b for a, b in zip(shifted, self.coeffs)])


def _as_poly(P) -> IntPolynomial:
    if isinstance(P, IntPolynomial):
        return P
    if isinstance(P, str):
        return IntPolynomial.parse(P)
    return IntPolynomial(P)


def weyl_sum(P, q: int) -> complex:
    """``sum_{x<q} e(P(x)/q)`` from exact residues."""
    P = _as_poly(P)
    if q < 1:
        raise ValueError("q must be >= 1")
    return phase_sum(P.eval_mod(np.arange(q), q), q)


def _check_diff_args(deg: int, q: int, n: int):
    if q < 1:
        raise ValueError("q must be >= 1")
    if not 1 <= n <= max(deg - 1, 0):
        raise ValueError(f"need 1 <= n <= deg - 1, got n={n}, deg={deg}")
    if q ** (n + 1) > DIFF_BUDGET:
        raise BudgetExceeded(f"q^(n+1) = {q ** (n + 1)} exceeds {DIFF_BUDGET}")


def weyl_difference_avg(P, q: int, n: int) -> float:
    """Mean over ``h in [0, q)^n`` of ``|(1/q) sum_x e(D_h P(x) / q)|`` by full enumeration."""
    P = _as_poly(P)
    _check_diff_args(P.degree, q, n)
    V = P.eval_mod(np.arange(q), q)
    roots = roots_of_unity(q)
    idx = (np.arange(q)[:, None] + np.arange(q)[None, :]) % q  # idx[h, x] = x + h
    totals = []
    for h1 in range(q):
        D = (V[(np.arange(q) + h1) % q] - V) % q
        for _ in range(n - 1):
            D = (D[..., idx] - D[..., None, :]) % q
        mags = np.abs(roots[D].sum(axis=-1)) / q
        totals.append(math.fsum(mags.ravel()))
    return math.fsum(totals) / q**n


# --- batched differencing for small-degree grids ----------------------------


@lru_cache(maxsize=8)
def _cubic_table(q: int) -> np.ndarray:
    """``|(1/q) sum_x e((c1 x + c2 x^2 + c3 x^3)/q)|`` indexed by ``[c1, c2, c3]``."""
    x = np.arange(q)
    roots = roots_of_unity(q)
    E = [roots[(np.arange(q)[:, None] * (x**k % q)[None, :]) % q] for k in (1, 2, 3)]
    t = np.abs(np.einsum("ax,bx,cx->abc", E[0], E[1], E[2])) / q
    t.flags.writeable = False
    return t


@lru_cache(maxsize=64)
def _product_distribution(q: int, n: int) -> np.ndarray:
    """Counts of ``h_1 ... h_n mod q`` over ``h in [0, q)^n``."""
    dist = np.zeros(q, dtype=np.int64)
    dist[1 % q] = 1
    prods = (np.arange(q)[:, None] * np.arange(q)[None, :]) % q
    for _ in range(n):
        new = np.zeros(q, dtype=np.int64)
        np.add.at(new, prods.ravel(), np.repeat(dist, q))
        dist = new
    return dist


@lru_cache(maxsize=64)
def _difference_basis(q: int, n: int, K: int) -> np.ndarray:
    """``B[t, i, j]`` = coefficient of ``x^i`` in ``D_{h(t)} x^j`` mod q, t over ``[0, q)^n``."""
    hs = np.arange(q, dtype=np.int64)
    step = np.zeros((q, K + 1, K + 1), dtype=np.int64)
    for j in range(K + 1):
        for i in range(j):
            step[:, i, j] = math.comb(j, i) % q * (hs ** (j - i) % q) % q
    B = np.eye(K + 1, dtype=np.int64)[None]
    for _ in range(n):
        B = np.einsum("hik,tkj->thij", step, B) % q
        B = B.reshape(-1, K + 1, K + 1)
    return B


def weyl_difference_avg_batch(coeffs, q: int, n: int, chunk: int = 512) -> np.ndarray:
    """:func:`weyl_difference_avg` for many polynomials of degree <= 4 at once.

    Constant terms are irrelevant and ignored.  Rows whose degree is not
    above n return NaN.  Exact counting replaces enumeration for the
    linear case ``deg == n + 1``; otherwise differenced cubics are looked up
    in a magnitude table.
    """
    C = np.atleast_2d(np.asarray(coeffs, dtype=np.int64))
    K = C.shape[1] - 1
    if K > 4:
        raise ValueError("batch differencing supports degree <= 4")
    if q ** (n + 1) > DIFF_BUDGET:
        raise BudgetExceeded(f"q^(n+1) = {q ** (n + 1)} exceeds {DIFF_BUDGET}")
    nz = C != 0
    deg = np.where(nz.any(axis=1), K - np.argmax(nz[:, ::-1], axis=1), 0)
    out = np.full(len(C), np.nan)
    Cq = C % q
    # linear case: D_h P(x) = deg! * lead * prod(h) * x + const
    lin = deg == n + 1
    if lin.any():
        dist = _product_distribution(q, n)
        r = np.arange(q)
        for b in np.nonzero(lin)[0]:
            slope = math.factorial(int(deg[b])) * int(C[b, deg[b]]) % q
            out[b] = dist[(slope * r) % q == 0].sum() / q**n
    rest = np.nonzero(deg > n + 1)[0]
    if len(rest):
        if K - n > 3:
            raise ValueError("differenced polynomial exceeds cubic table")
        table = _cubic_table(q)
        Bm = _difference_basis(q, n, K)[:, 1:4, :]  # x^1..x^3 rows
        for s in range(0, len(rest), chunk):
            rows = rest[s : s + chunk]
            R = np.einsum("tij,bj->tbi", Bm, Cq[rows]) % q
            if R.shape[2] < 3:
                R = np.concatenate([R, np.zeros(R.shape[:2] + (3 - R.shape[2],), np.int64)], axis=2)
            mags = table[R[..., 0], R[..., 1], R[..., 2]]
            out[rows] = mags.mean(axis=0)
    return out


def weyl_sum_batch(coeffs, q: int) -> np.ndarray:
    """``|(1/q) sum_x e(P(x)/q)|`` per row of coefficients."""
    C = np.atleast_2d(np.asarray(coeffs, dtype=np.int64)) % q
    x = np.arange(q, dtype=np.int64)
    acc = np.zeros((len(C), q), dtype=np.int64)
    for k in range(C.shape[1] - 1, -1, -1):
        acc = (acc * x[None, :] + C[:, k : k + 1]) % q
    return np.abs(roots_of_unity(q)[acc].sum(axis=1)) / q


# --- van der Corput ---------------------------------------------------------


def vdc_check(seq, H: int) -> tuple[float, float]:
    """Both sides of the periodic van der Corput inequality for one period ``seq``."""
    a = np.asarray(seq, dtype=complex)
    if H < 1:
        raise ValueError("H must be >= 1")
    if a.size == 0:
        raise ValueError("empty sequence")
    if np.any(np.abs(a) > 1 + 1e-12):
        raise ValueError("sequence entries must have magnitude <= 1")
    N = a.size
    lhs = float(abs(a.mean()))
    idx = (np.arange(N)[None, :] + np.arange(H)[:, None]) % N
    corr = np.abs((a[None, :] * np.conj(a[idx])).mean(axis=1))
    rhs = math.sqrt(2 / H * math.fsum(corr))
    return lhs, rhs


# --- Gauss sums and residue counting ----------------------------------------


def gauss_G(P, ell: int, v: int, t: int, q: int) -> complex:
    """``sum_{x<q} e((ell P(x+t) + v x)/q)``."""
    P = _as_poly(P)
    if q < 1:
        raise ValueError("q must be >= 1")
    x = np.arange(q, dtype=np.int64)
    res = ((ell % q) * P.eval_mod(x + t % q, q) + (v % q) * x) % q
    return phase_sum(res, q)


def residue_count_lhs(P, q: int, r: int, a: int, x: int, M: int, N: int, t: int,
                      budget: int = COUNT_BUDGET) -> int:
    """``sum_{m == a (r), m in [x, x+M)} #{n in [t, t+N) : P(n) == m (mod q)}``.

    The n-side is tallied by residue, then each residue class mod q is
    matched with its CRT class mod ``q*r`` and counted in the m-window.
    """
    P = _as_poly(P)
    if q < 1 or r < 1:
        raise ValueError("q and r must be positive")
    if math.gcd(q, r) != 1:
        raise ValueError(f"gcd(q, r) = {math.gcd(q, r)} != 1")
    if M < 0 or N < 0:
        raise ValueError("M and N must be non-negative")
    if M * N > budget:
        raise BudgetExceeded(f"M*N = {M * N} exceeds budget {budget}")
    counts = np.bincount(P.eval_mod(np.arange(t, t + N, dtype=np.int64), q), minlength=q)
    rho = np.arange(q, dtype=np.int64)
    Q = q * r
    # s == rho (mod q), s == a (mod r)
    s = (rho + q * (((a - rho) * pow(q, -1, r)) % r)) % Q if r > 1 else rho
    hits = (x + M - 1 - s) // Q - (x - 1 - s) // Q
    return int(np.dot(counts, hits))


def residue_count_bruteforce(P, q, r, a, x, M, N, t) -> int:
    P = _as_poly(P)
    total = 0
    vals = [P(n) % q for n in range(t, t + N)]
    for m in range(x, x + M):
        if (m - a) % r == 0:
            total += sum(1 for v in vals if v == m % q)
    return total


def residue_ratio(P, q, r, a, x, M, N, t) -> tuple[int, float, float]:
    """``(lhs, main_term, ratio)`` with main term ``M N / (q r)``."""
    lhs = residue_count_lhs(P, q, r, a, x, M, N, t)
    main = M * N / (q * r)
    return lhs, main, lhs / main


def lemma_trials(P, q: int, r: int, M: int, N: int, trials: int, rng: np.random.Generator) -> list[dict]:
    """Ratios at random ``(a, x, t)``; rows ready for CSV."""
    rows = []
    for _ in range(trials):
        a = int(rng.integers(0, r))
        x = int(rng.integers(0, q * r))
        t = int(rng.integers(0, q))
        lhs, main, ratio = residue_ratio(P, q, r, a, x, M, N, t)
        rows.append(dict(q=q, r=r, M=M, N=N, a=a, x=x, t=t, lhs=lhs, main_term=main, ratio=ratio))
    return rows
