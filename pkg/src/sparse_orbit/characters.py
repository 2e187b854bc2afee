"""Dirichlet characters with exact phases.

A character of modulus ``m`` is stored as one integer exponent per cyclic
factor of ``(Z/mZ)^*``.  The group is split over prime powers; an odd prime
power is cyclic on a primitive root, ``4`` is cyclic on ``3`` and ``2**e``
(``e >= 3``) is ``<-1> x <5>``.  Values are ``e(num / D)`` where ``D`` is the
group exponent and ``num`` is an exact integer, so full-period sums cancel
exactly up to the final complex conversion.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from itertools import product

import numpy as np

from .arith import factorize, is_prime

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class CyclicFactor:
    prime: int
    prime_power: int
    generator: int
    order: int


def _primitive_root_prime_power(p: int, e: int) -> int:
    phi = p - 1
    qs = [q for q, _ in factorize(phi).factors] if phi > 1 else []
    for g in range(2, p + 1):
        if all(pow(g, phi // q, p) != 1 for q in qs):
            break
    else:  # p == 2
        g = 1
    if e > 1 and pow(g, p - 1, p * p) == 1:
        g += p
    return g


@lru_cache(maxsize=None)
def _prime_power_factors(p: int, e: int) -> tuple[CyclicFactor, ...]:
    pe = p**e
    if p == 2:
        if e == 1:
            return ()
        if e == 2:
            return (CyclicFactor(2, 4, 3, 2),)
        return (CyclicFactor(2, pe, pe - 1, 2), CyclicFactor(2, pe, 5, 2 ** (e - 2)))
    g = _primitive_root_prime_power(p, e)
    return (CyclicFactor(p, pe, g, (p - 1) * p ** (e - 1)),)


@lru_cache(maxsize=256)
def _prime_power_logs(p: int, e: int) -> np.ndarray:
    """Discrete logs per cyclic factor; shape ``(n_factors, p**e)``, -1 off units."""
    pe = p**e
    factors = _prime_power_factors(p, e)
    logs = np.full((len(factors), pe), -1, dtype=np.int64)
    if not factors:
        logs = np.full((0, pe), -1, dtype=np.int64)
        return logs
    if len(factors) == 1:
        f = factors[0]
        x = 1
        idx = np.empty(f.order, dtype=np.int64)
        for k in range(f.order):
            idx[k] = x
            x = x * f.generator % pe
        logs[0, idx] = np.arange(f.order)
    else:
        half = factors[1].order
        fives = np.empty(half, dtype=np.int64)
        x = 1
        for b in range(half):
            fives[b] = x
            x = x * 5 % pe
        for a, sign in ((0, 1), (1, pe - 1)):
            idx = fives * sign % pe
            logs[0, idx] = a
            logs[1, idx] = np.arange(half)
    logs.flags.writeable = False
    return logs


class UnitGroup:
    """Cyclic decomposition of ``(Z/mZ)^*`` assembled over prime powers."""

    def __init__(self, m: int):
        if m < 1:
            raise ValueError(f"modulus must be positive, got {m}")
        self.modulus = m
        self.prime_powers = [(p, e) for p, e in factorize(m).factors]
        self.factors: list[CyclicFactor] = []
        for p, e in self.prime_powers:
            self.factors.extend(_prime_power_factors(p, e))
        self.orders = tuple(f.order for f in self.factors)
        self.exponent = reduce(math.lcm, self.orders, 1)
        self.size = math.prod(self.orders)

    def logs(self, xs: np.ndarray) -> np.ndarray:
        """Discrete logs of ``xs`` (shape ``(n_factors, len(xs))``), -1 when not a unit."""
        xs = np.asarray(xs, dtype=np.int64)
        rows = []
        for p, e in self.prime_powers:
            table = _prime_power_logs(p, e)
            r = xs % p**e
            rows.extend(table[j][r] for j in range(table.shape[0]))
        if not rows:
            return np.zeros((0, xs.size), dtype=np.int64)
        return np.vstack(rows)

    def units_mask(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        mask = np.ones(xs.shape, dtype=bool)
        for p, _ in self.prime_powers:
            mask &= xs % p != 0
        return mask

    def log_of(self, a: int) -> tuple[int, ...] | None:
        if math.gcd(a, self.modulus) != 1:
            return None
        return tuple(int(v) for v in self.logs(np.array([a % self.modulus]))[:, 0])


@lru_cache(maxsize=512)
def unit_group(m: int) -> UnitGroup:
    return UnitGroup(m)


@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    exponents: tuple[int, ...]

    def __post_init__(self):
        g = unit_group(self.modulus)
        if len(self.exponents) != len(g.orders):
            raise ValueError(
                f"modulus {self.modulus} has {len(g.orders)} cyclic factors, got exponents {self.exponents}"
            )
        reduced = tuple(k % o for k, o in zip(self.exponents, g.orders))
        object.__setattr__(self, "exponents", reduced)

    @property
    def group(self) -> UnitGroup:
        return unit_group(self.modulus)

    @property
    def denominator(self) -> int:
        return self.group.exponent

    def _weights(self) -> np.ndarray:
        D = self.denominator
        return np.array([k * (D // o) for k, o in zip(self.exponents, self.group.orders)], dtype=object)

    def phase(self, a: int) -> int | None:
        """Exact phase numerator over ``denominator``; None where the value is 0."""
        logs = self.group.log_of(int(a))
        if logs is None:
            return None
        D = self.denominator
        return sum(k * (D // o) * l for k, o, l in zip(self.exponents, self.group.orders, logs)) % D

    def __call__(self, a: int) -> complex:
        ph = self.phase(a)
        if ph is None:
            return 0j
        return unit_root(ph, self.denominator)

    def phases(self, xs) -> np.ndarray:
        """Vectorized :meth:`phase`, -1 marking zeros."""
        xs = np.asarray(xs, dtype=np.int64)
        g = self.group
        D = g.exponent
        mask = g.units_mask(xs.ravel())
        if not g.orders:
            return np.where(mask, 0, -1).reshape(xs.shape)
        logs = g.logs(xs.ravel())
        w = np.array([k * (D // o) % D for k, o in zip(self.exponents, g.orders)], dtype=np.int64)
        # D stays small for desk-scale moduli, so int64 is safe after reduction.
        num = np.zeros(xs.size, dtype=np.int64)
        for j in range(len(w)):
            num = (num + (w[j] * (logs[j] % D)) % D) % D
        num[~mask] = -1
        return num.reshape(xs.shape)

    def values(self, xs) -> np.ndarray:
        ph = self.phases(xs)
        out = np.exp(1j * TWO_PI * ph / self.denominator)
        out[ph < 0] = 0
        return out

    def is_principal(self) -> bool:
        return all(k == 0 for k in self.exponents)

    def conj(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, tuple(-k for k in self.exponents))

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.modulus != self.modulus:
            raise ValueError("use combine_coprime for characters of different moduli")
        return DirichletCharacter(self.modulus, tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def __pow__(self, k: int) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, tuple(a * k for a in self.exponents))

    def is_periodic(self, period: int) -> bool:
        """True when ``chi(x + period) == chi(x)`` for every integer x."""
        xs = np.arange(self.modulus)
        a = self.phases(xs)
        b = self.phases((xs + period) % self.modulus)
        return bool(np.array_equal(a, b))

    def is_induced_from(self, period: int) -> bool:
        """True when chi comes from a character of modulus ``gcd(period, modulus)``.

        Equivalently ``chi(u) == 1`` for every unit ``u == 1 (mod d)``.  These
        are the characters whose progression sums of step ``period`` need not
        cancel; principal characters and characters periodic with period
        ``period`` always qualify.
        """
        n = self.modulus
        d = math.gcd(period, n)
        us = [u for u in range(1 % d, n, d) if math.gcd(u, n) == 1]
        return bool(np.all(self.phases(us) == 0))

    def prime_power_parts(self) -> dict[int, "DirichletCharacter"]:
        """Split into characters modulo each prime-power factor of the modulus."""
        out = {}
        pos = 0
        for p, e in self.group.prime_powers:
            n = len(_prime_power_factors(p, e))
            out[p] = DirichletCharacter(p**e, self.exponents[pos : pos + n])
            pos += n
        return out


def unit_root(num: int, den: int) -> complex:
    """``e(num/den)`` with the phase reduced exactly before conversion."""
    num %= den
    if num == 0:
        return 1 + 0j
    if 2 * num == den:
        return -1 + 0j
    if 4 * num == den:
        return 1j
    if 4 * num == 3 * den:
        return -1j
    return cmath.exp(1j * TWO_PI * (num / den))


@lru_cache(maxsize=64)
def roots_of_unity(den: int) -> np.ndarray:
    """``e(k/den)`` for ``k < den``; quarter turns are exact."""
    k = np.arange(den)
    out = np.exp(1j * TWO_PI * k / den)
    for num, val in ((0, 1), (2, -1), (1, 1j), (3, -1j)):
        if (num * den) % 4 == 0:
            out[num * den // 4] = val
    out.flags.writeable = False
    return out


def phase_sum(phases: np.ndarray, den: int) -> complex:
    """Sum of ``e(ph/den)`` over integer phases (-1 entries count as 0).

    Phases are tallied first so opposite roots cancel in exact integer
    arithmetic, and the remaining sum is rounded once with ``math.fsum``.
    """
    ph = np.asarray(phases).ravel()
    counts = np.bincount(ph[ph >= 0], minlength=den)
    roots = roots_of_unity(den)
    if den % 2 == 0:
        half = den // 2
        counts = counts[:half] - counts[half:]
        roots = roots[:half]
    nz = np.nonzero(counts)[0]
    terms = counts[nz] * roots[nz]
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def principal_character(m: int) -> DirichletCharacter:
    return DirichletCharacter(m, (0,) * len(unit_group(m).orders))


def enumerate_characters(m: int) -> list[DirichletCharacter]:
    """All ``phi(m)`` characters modulo m, principal first."""
    g = unit_group(m)
    return [DirichletCharacter(m, ks) for ks in product(*[range(o) for o in g.orders])]


def character_table(m: int) -> np.ndarray:
    """Values of every character mod m on ``0..m-1``; row order as in :func:`enumerate_characters`."""
    g = unit_group(m)
    xs = np.arange(m)
    mask = g.units_mask(xs)
    if not g.orders:
        return mask[None, :].astype(complex)
    D = g.exponent
    logs = g.logs(xs)
    ks = np.array(list(product(*[range(o) for o in g.orders])), dtype=np.int64)
    w = ks * np.array([D // o for o in g.orders], dtype=np.int64)
    num = (w @ np.where(mask, logs, 0)) % D
    out = np.exp(1j * TWO_PI * num / D)
    out[:, ~mask] = 0
    return out


def combine_coprime(chars: list[DirichletCharacter]) -> DirichletCharacter:
    """The character mod ``prod n_i`` that restricts to each input (moduli pairwise coprime)."""
    parts: dict[int, DirichletCharacter] = {}
    m = 1
    for chi in chars:
        if math.gcd(m, chi.modulus) != 1:
            raise ValueError(f"moduli not coprime: {m} and {chi.modulus}")
        m *= chi.modulus
        parts.update(chi.prime_power_parts())
    exps: list[int] = []
    for p in sorted(parts):
        exps.extend(parts[p].exponents)
    return DirichletCharacter(m, tuple(exps))


def char_order(chi: DirichletCharacter) -> int:
    return reduce(math.lcm, (o // math.gcd(k, o) for k, o in zip(chi.exponents, chi.group.orders)), 1)


def legendre_character(p: int) -> DirichletCharacter:
    if p == 2 or not is_prime(p):
        raise ValueError(f"Legendre character needs an odd prime, got {p}")
    return DirichletCharacter(p, ((p - 1) // 2,))


def character_of_order(p: int, k: int) -> DirichletCharacter:
    """The character mod prime p sending the fixed primitive root to ``e(1/k)``."""
    if not is_prime(p) or (p - 1) % k:
        raise ValueError(f"need prime p with k | p - 1, got p={p}, k={k}")
    if p == 2:
        return principal_character(2)
    return DirichletCharacter(p, ((p - 1) // k,))


def indicator_via_orthogonality(m: int, t: int, x: int) -> int:
    """``round((1/phi(m)) sum_chi chi(x) conj(chi(t)))``: 1 iff x == t (mod m)."""
    if math.gcd(t, m) != 1:
        raise ValueError(f"t={t} is not coprime to m={m}")
    table = character_table(m)
    avg = np.sum(table[:, x % m] * np.conj(table[:, t % m])) / table.shape[0]
    val = round(avg.real)
    if abs(avg - val) > 1e-9:
        raise ArithmeticError(f"character average {avg} is not an integer")
    return int(val)


def progression_sum(chi: DirichletCharacter, x: int, step: int, length: int) -> complex:
    if length < 1:
        raise ValueError("length must be >= 1")
    xs = (x + step * np.arange(length, dtype=np.int64)) % chi.modulus
    return phase_sum(chi.phases(xs), chi.denominator)


def progression_l1(chi: DirichletCharacter, step: int, length: int) -> float:
    """``sum_{x<n} |sum_{i<L} chi(x + i*step)|`` for n the modulus."""
    n = chi.modulus
    vals = chi.values(np.arange(n))
    idx = (np.arange(n)[:, None] + step * np.arange(length)[None, :]) % n
    return float(np.abs(vals[idx].sum(axis=1)).sum())


def window_energy(vals: np.ndarray, h: int) -> float:
    """``sum_x |sum_{i<h} v[x+i]|^2`` for a periodic value vector."""
    m = vals.shape[-1]
    reps = -(-(m + h) // m)
    ext = np.concatenate([np.zeros(vals.shape[:-1] + (1,), complex), np.tile(vals, reps)], axis=-1)
    cs = np.cumsum(ext, axis=-1)
    win = cs[..., h : h + m] - cs[..., :m]
    return np.sum(np.abs(win) ** 2, axis=-1)


def burgess_stat(m: int, chi: DirichletCharacter, h: int) -> float:
    """``sum_{x<m} |sum_{i<h} chi(x+i)|^2``; strictly below ``m*h`` for nonprincipal chi."""
    if chi.modulus != m:
        raise ValueError(f"character modulus {chi.modulus} != {m}")
    if chi.is_principal():
        raise ValueError("burgess_stat needs a nonprincipal character")
    if h < 1:
        raise ValueError("h must be >= 1")
    return float(window_energy(chi.values(np.arange(m)), h))


def pair_count(p: int, chi: DirichletCharacter, eps1: complex, eps2: complex, i: int) -> int:
    """``|{x in F_p: chi(x) = eps1, chi(x+i) = eps2}|``."""
    if chi.modulus != p or not is_prime(p):
        raise ValueError(f"need a character modulo the prime p={p}")
    if chi.is_principal():
        raise ValueError("pair_count needs a nontrivial character")
    if i % p == 0:
        raise ValueError("shift i must be nonzero mod p")
    k = char_order(chi)
    for eps in (eps1, eps2):
        if abs(complex(eps) ** k - 1) > 1e-9:
            raise ValueError(f"{eps} is not a {k}-th root of unity")
    vals = chi.values(np.arange(p))
    shifted = np.roll(vals, -i)
    hit = (np.abs(vals - eps1) < 1e-9) & (np.abs(shifted - eps2) < 1e-9)
    return int(hit.sum())


def progression_l1_all(n: int, step: int, length: int) -> tuple[np.ndarray, np.ndarray]:
    """:func:`progression_l1` for every character mod n at once.

    Returns ``(l1, excluded)`` where ``excluded[j]`` flags characters induced
    from modulus ``gcd(step, n)`` (see :meth:`DirichletCharacter.is_induced_from`);
    the ``n*sqrt(step*L)`` bound only applies to the others.
    """
    table = character_table(n)
    xs = np.arange(n)
    idx = (xs[:, None] + step * np.arange(length)[None, :]) % n
    l1 = np.abs(table[:, idx].sum(axis=2)).sum(axis=1)
    d = math.gcd(step, n)
    us = [u for u in range(1 % d, n, d) if math.gcd(u, n) == 1]
    excluded = np.all(np.abs(table[:, us] - 1) < 1e-9, axis=1)
    return l1, excluded
