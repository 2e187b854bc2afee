"""Power-residue counts and their expansion into scaled characters.

``Pow_N(x)`` counts ``t in [1, N]`` with ``t**C == x (mod N)``;
``Pow_N(x, d)`` adds the condition ``gcd(t, N) == d``.  A scaled character
``f in A(n, d)`` is ``x -> chi(x / d)`` on multiples of d (0 elsewhere) for a
character chi mod n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

from .arith import factorize, is_prime, multiplicative_stats
from .characters import (
    DirichletCharacter, combine_coprime, principal_character, unit_group, unit_root,
)

TABLE_LIMIT = 10**6
PROFILE_LIMIT = 10**8


def powmod_array(xs, C: int, n: int) -> np.ndarray:
    """Elementwise ``x**C mod n`` for an integer array (int64 for n < 2**31)."""
    if n < 2**31:
        base = np.asarray(xs, dtype=np.int64) % n
        out = np.ones_like(base) % n
        while C:
            if C & 1:
                out = out * base % n
            base = base * base % n
            C >>= 1
        return out
    return np.array([pow(int(x), C, n) for x in np.asarray(xs).ravel()], dtype=object).reshape(np.shape(xs))


@lru_cache(maxsize=128)
def _prime_power_table(p: int, e: int, C: int) -> np.ndarray:
    pe = p**e
    t = np.bincount(powmod_array(np.arange(pe), C, pe), minlength=pe)
    t.flags.writeable = False
    return t


def _unit_solutions(p: int, k: int, C: int, y: int) -> int:
    """Number of units u mod p**k with ``u**C == y`` (y a unit)."""
    if k == 0:
        return 1
    pk = p**k
    if p != 2:
        phi = (p - 1) * p ** (k - 1)
        g = math.gcd(phi, C)
        return g if pow(y, phi // g, pk) == 1 else 0
    if k == 1:
        return 1
    if k == 2:
        if C % 2:
            return 1
        return 2 if y % 4 == 1 else 0
    # (Z/2^k)^* = <-1> x <5>
    a = 0 if y % 4 == 1 else 1
    y1 = y if a == 0 else (-y) % pk
    count_c = 2 if C % 2 == 0 else 1
    if C % 2 == 0 and a == 1:
        return 0
    g2 = math.gcd(C, 2 ** (k - 2))
    if pow(y1, 2 ** (k - 2) // g2, pk) != 1:
        return 0
    return count_c * g2


def prime_power_count(p: int, e: int, C: int, y: int) -> int:
    """``#{t mod p**e : t**C == y}``, by table for small moduli and by group structure above."""
    pe = p**e
    y %= pe
    if pe <= TABLE_LIMIT:
        return int(_prime_power_table(p, e, C)[y])
    return _structural_count(p, e, C, y)


def _structural_count(p: int, e: int, C: int, y: int) -> int:
    pe = p**e
    if y == 0:
        return p ** (e - (-(-e // C)))
    v = 0
    while y % p == 0:
        y //= p
        v += 1
    if v % C:
        return 0
    s = v // C
    return _unit_solutions(p, e - v, C, y % p ** (e - v)) * p ** (v - s)


def _check_NC(N: int, C: int):
    if N < 1:
        raise ValueError(f"modulus must be >= 1, got {N}")
    if C < 2:
        raise ValueError(f"exponent C must be >= 2, got {C}")


def pow_count(N: int, C: int, x: int) -> int:
    _check_NC(N, C)
    out = 1
    for p, e in factorize(N).factors:
        out *= prime_power_count(p, e, C, x)
        if out == 0:
            break
    return out


def pow_count_array(N: int, C: int, xs) -> np.ndarray:
    """Vectorized :func:`pow_count`: one factorization, per-prime-power lookups."""
    _check_NC(N, C)
    xs = np.asarray(xs)
    out = np.ones(xs.shape, dtype=np.int64)
    for p, e in factorize(N).factors:
        pe = p**e
        if pe <= TABLE_LIMIT:
            out *= _prime_power_table(p, e, C)[(xs % pe).astype(np.int64)]
        else:
            flat = [_structural_count(p, e, C, int(y) % pe) for y in xs.ravel()]
            out *= np.array(flat, dtype=np.int64).reshape(xs.shape)
    return out


def pow_count_bruteforce(N: int, C: int, x: int) -> int:
    _check_NC(N, C)
    x %= N
    return sum(1 for t in range(1, N + 1) if pow(t, C, N) == x)


@dataclass(frozen=True)
class PowProfile:
    modulus: int
    exponent: int
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.counts.shape != (self.modulus,):
            raise ValueError("counts must have length N")
        if int(self.counts.sum()) != self.modulus:
            raise ValueError("counts must sum to N")
        self.counts.flags.writeable = False

    def __getitem__(self, x: int) -> int:
        return int(self.counts[x % self.modulus])


def pow_profile(N: int, C: int) -> PowProfile:
    """All of ``Pow_N(0..N-1)`` at once."""
    _check_NC(N, C)
    if N > PROFILE_LIMIT:
        raise ValueError(f"profile of length {N} exceeds limit {PROFILE_LIMIT}")
    counts = np.bincount(powmod_array(np.arange(N), C, N), minlength=N)
    return PowProfile(N, C, counts)


def _gcd_factor(p: int, e: int, f: int, C: int, y: np.ndarray) -> np.ndarray:
    """``#{t mod p**e : min(nu_p(t), e) == f, t**C == y}`` for residues y mod p**e."""
    if f == e:
        return (y == 0).astype(np.int64)
    if C * f >= e:
        return (y == 0).astype(np.int64) * ((p - 1) * p ** (e - f - 1))
    pc = p ** (C * f)
    k = e - C * f
    ok = (y % pc == 0) & ((y // pc) % p != 0)
    u = (y // pc) % p**k
    if p**k <= TABLE_LIMIT:
        # on units the table counts exactly the unit solutions
        sols = _prime_power_table(p, k, C)[u]
    else:
        sols = np.array([_unit_solutions(p, k, C, int(v)) if o else 0 for v, o in zip(u, ok)], dtype=np.int64)
    return np.where(ok, sols, 0) * p ** ((C - 1) * f)


def pow_count_gcd_array(N: int, C: int, xs, d: int) -> np.ndarray:
    """``#{t in [1, N] : gcd(t, N) == d, t**C == x (mod N)}`` for each x."""
    _check_NC(N, C)
    if d < 1 or N % d:
        raise ValueError(f"d={d} must divide N={N}")
    xs = np.asarray(xs, dtype=np.int64)
    out = np.ones(xs.shape, dtype=np.int64)
    for p, e in factorize(N).factors:
        f = 0
        while f < e and d % p ** (f + 1) == 0:
            f += 1
        out *= _gcd_factor(p, e, f, C, xs.ravel() % p**e).reshape(xs.shape)
    return out


def pow_count_gcd(N: int, C: int, x: int, d: int) -> int:
    return int(pow_count_gcd_array(N, C, np.array([x % N]), d)[0])


def sq_count(q: int, interval: tuple[int, int], m: int) -> int:
    """``#{i in [a, b) : i**2 == m (mod q)}``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    a, b = interval
    if b <= a:
        return 0
    full, rem = divmod(b - a, q)
    total = full * (pow_count(q, 2, m) if q > 1 else 1)
    if rem:
        tail = np.arange(a + full * q, b, dtype=np.int64) if abs(b) < 2**62 else range(a + full * q, b)
        total += int(np.count_nonzero(powmod_array(tail, 2, q) == m % q))
    return total


# ---------------------------------------------------------------------------
# scaled characters


@dataclass(frozen=True)
class ScaledCharacter:
    scale: int
    chi: DirichletCharacter

    def __post_init__(self):
        if self.scale < 1:
            raise ValueError("scale must be positive")

    @property
    def modulus(self) -> int:
        return self.chi.modulus

    def values(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        out = np.zeros(xs.shape, dtype=complex)
        hit = xs % self.scale == 0
        out[hit] = self.chi.values(xs[hit] // self.scale)
        return out

    def __call__(self, x: int) -> complex:
        return scaled_eval(self, x)

    def in_class(self, n: int, d: int) -> bool:
        return self.modulus == n and self.scale == d


def scaled_eval(f: ScaledCharacter, x: int) -> complex:
    if x % f.scale:
        return 0j
    return f.chi(x // f.scale)


def _char_phase(chi: DirichletCharacter, a: int) -> Fraction:
    ph = chi.phase(a)
    if ph is None:
        raise ValueError(f"{a} is not a unit mod {chi.modulus}")
    return Fraction(ph, chi.denominator)


def scaled_product(fs: list[ScaledCharacter]) -> tuple[Fraction, ScaledCharacter]:
    """Multiply scaled characters with pairwise coprime ``n_i * d_i``.

    Returns ``(phase, f)`` where ``e(phase) * f`` equals the pointwise product.
    """
    if not fs:
        raise ValueError("need at least one scaled character")
    for i, a in enumerate(fs):
        for b in fs[i + 1 :]:
            g = math.gcd(a.modulus * a.scale, b.modulus * b.scale)
            if g != 1:
                raise ValueError(
                    f"A({a.modulus},{a.scale}) and A({b.modulus},{b.scale}) share factor {g}"
                )
    phase = Fraction(0)
    acc = fs[0]
    for f in fs[1:]:
        # f1 f2 (d1 d2 y) = chi1(d2) chi2(d1) (chi1 chi2)(y)
        phase += _char_phase(acc.chi, f.scale) + _char_phase(f.chi, acc.scale)
        acc = ScaledCharacter(acc.scale * f.scale, combine_coprime([acc.chi, f.chi]))
    return phase % 1, acc


def decompose_coprime_prime_power(p: int, e: int, C: int) -> list[DirichletCharacter]:
    """The characters mod p**e with ``chi**C`` principal; they sum to ``Pow_{p^e}(., 1)``."""
    if not is_prime(p) or e < 1:
        raise ValueError(f"need a prime power, got p={p}, e={e}")
    g = unit_group(p**e)
    steps = [o // math.gcd(o, C) for o in g.orders]
    return [
        DirichletCharacter(p**e, tuple(k * s for k, s in zip(ks, steps)))
        for ks in product(*[range(math.gcd(o, C)) for o in g.orders])
    ]


@dataclass(frozen=True)
class Term:
    """``weight * e(phase) * f``; weight is a positive integer multiplier."""

    phase: Fraction
    weight: int
    f: ScaledCharacter

    @property
    def coeff(self) -> complex:
        return unit_root(self.phase.numerator, self.phase.denominator)


def decompose_prime_power(p: int, e: int, f: int, C: int) -> list[Term]:
    """Terms summing to ``Pow_{p^e}(., p^f)``."""
    if not 0 <= f <= e:
        raise ValueError(f"need 0 <= f <= e, got f={f}, e={e}")
    pe = p**e
    if f == e:
        return [Term(Fraction(0), 1, ScaledCharacter(pe, principal_character(1)))]
    if C * f >= e:
        return [Term(Fraction(0), (p - 1) * p ** (e - f - 1), ScaledCharacter(pe, principal_character(1)))]
    k = e - C * f
    w = p ** ((C - 1) * f)
    return [Term(Fraction(0), w, ScaledCharacter(p ** (C * f), chi)) for chi in decompose_coprime_prime_power(p, k, C)]


@dataclass
class ScaledCharCombo:
    modulus: int
    exponent: int
    d: int
    terms: list[Term]

    def values(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        out = np.zeros(xs.shape, dtype=complex)
        for t in self.terms:
            out += t.weight * t.coeff * t.f.values(xs)
        return out

    @property
    def multiplicity(self) -> int:
        """Term count with integer weights expanded into repeated unit terms."""
        return sum(t.weight for t in self.terms)

    def size_bound(self) -> int:
        omega = len(factorize(self.modulus).factors)
        return (2 * self.exponent) ** omega * self.d ** (self.exponent + 1)

    def to_json(self) -> str:
        terms = []
        for t in self.terms:
            c = t.coeff
            terms.append(
                {
                    "coeff_re": c.real,
                    "coeff_im": c.imag,
                    "phase": [t.phase.numerator, t.phase.denominator],
                    "weight": t.weight,
                    "scale": t.f.scale,
                    "char_modulus": t.f.modulus,
                    "char_exponents": list(t.f.chi.exponents),
                }
            )
        return json.dumps({"modulus": self.modulus, "exponent": self.exponent, "d": self.d, "terms": terms}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ScaledCharCombo":
        obj = json.loads(text)
        terms = [
            Term(
                Fraction(*t["phase"]),
                t["weight"],
                ScaledCharacter(t["scale"], DirichletCharacter(t["char_modulus"], tuple(t["char_exponents"]))),
            )
            for t in obj["terms"]
        ]
        return cls(obj["modulus"], obj["exponent"], obj["d"], terms)


def l1_bound(N: int, d: int) -> float:
    """Normalized error bound ``sum_{p | N, nu_p(N) > nu_p(d)} p**-nu_p(d)``."""
    total = 0.0
    for p, e in factorize(N).factors:
        f = 0
        while d % p ** (f + 1) == 0:
            f += 1
        if e > f:
            total += p ** (-f)
    return total


def approximate_pow(N: int, C: int, d: int) -> tuple[ScaledCharCombo, float]:
    """Expand ``h = sum_{d' | d} Pow_N(., d')`` into scaled characters.

    Divisors of d that do not divide N contribute nothing, so any d >= 1 is
    accepted.  Returns the combination and the normalized L1 error bound.
    """
    _check_NC(N, C)
    if d < 1:
        raise ValueError("d must be >= 1")
    per_prime = []
    for p, e in factorize(N).factors:
        fmax = 0
        while fmax < e and d % p ** (fmax + 1) == 0:
            fmax += 1
        per_prime.append([t for f in range(fmax + 1) for t in decompose_prime_power(p, e, f, C)])
    terms = []
    for combo in product(*per_prime):
        if not combo:
            terms.append(Term(Fraction(0), 1, ScaledCharacter(1, principal_character(1))))
            continue
        phase, f = scaled_product([t.f for t in combo])
        phase = (phase + sum(t.phase for t in combo)) % 1
        terms.append(Term(phase, math.prod(t.weight for t in combo), f))
    return ScaledCharCombo(N, C, d, terms), l1_bound(N, d)


def h_direct(N: int, C: int, d: int) -> np.ndarray:
    """Oracle for :func:`approximate_pow`: enumerate t and keep gcd(t, N) | d."""
    t = np.arange(1, N + 1, dtype=np.int64)
    keep = d % np.gcd(t, N) == 0
    return np.bincount(powmod_array(t[keep], C, N), minlength=N).astype(float)


def sparsify_residues(n: int, C: int) -> tuple[np.ndarray, np.ndarray, float]:
    """C-th power residues A coprime to squarefree n and the subset A'.

    ``A' = union_{1 <= i <= omega(n)} A & (A - i)`` with shifts taken mod n;
    every pair in ``A \\ A'`` is then at cyclic distance > omega(n).
    Returns ``(A, A_prime, bound)``.
    """
    f = factorize(n)
    if any(e > 1 for _, e in f.factors):
        raise ValueError(f"n={n} is not squarefree")
    bad = [p for p in f.primes if p % C != 1]
    if bad:
        raise ValueError(f"prime factors {bad} of n are not 1 mod {C}")
    omega = len(f.factors)
    # x is a unit C-th power mod n iff it is one mod every prime factor
    member = np.ones(n, dtype=bool)
    for p in f.primes:
        local = np.zeros(p, dtype=bool)
        local[powmod_array(np.arange(1, p), C, p)] = True
        member &= np.tile(local, n // p)
    if n == 1:
        member[0] = True
    A = np.nonzero(member)[0]
    hit = np.zeros(n, dtype=bool)
    for i in range(1, omega + 1):
        hit |= member & np.roll(member, -i)
    A_prime = np.nonzero(hit)[0]
    bound = len(A) * omega * (7 / 8) ** (omega / 3 - 4 * C**4)
    return A, A_prime, bound


def omega(n: int) -> int:
    return multiplicative_stats(factorize(n))[1]
