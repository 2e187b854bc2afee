"""Exact integer arithmetic: factorization, multiplicative functions, CRT."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_INPUT = 2**63 - 1
TRIAL_LIMIT = 10**6

# Deterministic for n < 3.3e24, which covers the whole 64-bit range.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


@lru_cache(maxsize=None)
def _small_primes(limit: int = TRIAL_LIMIT) -> np.ndarray:
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int, rng: random.Random) -> int:
    if n % 2 == 0:
        return 2
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


@dataclass(frozen=True)
class Factorization:
    value: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prod = 1
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1:
                raise ValueError(f"malformed factor list {self.factors!r}")
            last = p
            prod *= p**e
        if prod != self.value:
            raise ValueError(f"factors {self.factors!r} do not multiply to {self.value}")

    def as_dict(self) -> dict[int, int]:
        return dict(self.factors)

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]

    def __iter__(self):
        return iter(self.factors)


def factorize(n: int) -> Factorization:
    """Factor ``1 <= n <= 2**63 - 1``.

    Trial division by every prime below 10**6 (vectorized), then Pollard-Brent
    on whatever cofactor remains.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"factorize needs n >= 1, got {n}")
    if n > MAX_INPUT:
        raise ValueError(f"factorize supports n <= 2**63 - 1, got {n}")
    found: dict[int, int] = {}
    rest = n
    if rest > 1:
        primes = _small_primes()
        limit = min(math.isqrt(rest), TRIAL_LIMIT)
        cand = primes[: np.searchsorted(primes, limit, side="right")]
        for p in cand[rest % cand == 0].tolist():
            while rest % p == 0:
                rest //= p
                found[p] = found.get(p, 0) + 1
    if rest > 1:
        # every prime factor of rest now exceeds TRIAL_LIMIT (or rest is prime)
        stack = [rest]
        rng = random.Random(rest)
        while stack:
            m = stack.pop()
            if m == 1:
                continue
            if is_prime(m):
                found[m] = found.get(m, 0) + 1
                continue
            r = math.isqrt(m)
            if r * r == m:
                stack += [r, r]
                continue
            d = _pollard_brent(m, rng)
            stack += [d, m // d]
    return Factorization(n, tuple(sorted(found.items())))


def multiplicative_stats(f: Factorization) -> tuple[int, int, int]:
    """Return ``(phi, omega, tau)`` for a factorization."""
    phi = 1
    tau = 1
    for p, e in f.factors:
        phi *= (p - 1) * p ** (e - 1)
        tau *= e + 1
    return phi, len(f.factors), tau


def euler_phi(n: int) -> int:
    return multiplicative_stats(factorize(n))[0]


def nu(p: int, n: int) -> int:
    """p-adic valuation of a positive integer."""
    if not is_prime(p):
        raise ValueError(f"nu: {p} is not prime")
    if n == 0:
        raise ValueError("nu(p, 0) is infinite")
    n = abs(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def divisors(n: int) -> list[int]:
    f = factorize(n)
    out = [1]
    for p, e in f.factors:
        out = [d * p**k for d in out for k in range(e + 1)]
    return sorted(out)


def crt(residues: list[tuple[int, int]]) -> tuple[int, int]:
    """Combine ``[(r_i, m_i)]`` with pairwise coprime moduli into ``(r, prod m_i)``."""
    residues = [(int(r), int(m)) for r, m in residues]
    for i, (_, mi) in enumerate(residues):
        if mi < 1:
            raise ValueError(f"modulus must be positive, got {mi}")
        for _, mj in residues[i + 1 :]:
            if math.gcd(mi, mj) != 1:
                raise ValueError(f"crt: moduli {mi} and {mj} are not coprime (gcd {math.gcd(mi, mj)})")
    r, m = 0, 1
    for ri, mi in residues:
        # r + m*k == ri (mod mi)
        k = (ri - r) * pow(m, -1, mi) % mi if mi > 1 else 0
        r, m = r + m * k, m * mi
    return r % m, m


def squarefree(n: int) -> bool:
    return all(e == 1 for _, e in factorize(n).factors)


def prime_power_split(n: int) -> list[tuple[int, int, int]]:
    """``[(p, e, p**e)]`` for the prime factorization of n."""
    return [(p, e, p**e) for p, e in factorize(n).factors]
