import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparse_orbit.arith import euler_phi, is_prime
from sparse_orbit.characters import (
    DirichletCharacter, burgess_stat, char_order, character_of_order, character_table,
    combine_coprime, enumerate_characters, indicator_via_orthogonality, legendre_character,
    pair_count, principal_character, progression_l1_all, progression_sum, unit_group,
)


def legendre_oracle(a, p):
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def test_enumerate_examples():
    assert len(enumerate_characters(5)) == 4
    chars8 = enumerate_characters(8)
    assert len(chars8) == 4
    assert unit_group(8).orders == (2, 2)
    one = enumerate_characters(1)
    assert len(one) == 1 and all(one[0](a) == 1 for a in range(-5, 6))


@pytest.mark.parametrize("m", [1, 2, 3, 4, 8, 9, 12, 16, 32, 45, 60, 64, 97, 100, 210])
def test_enumerate_distinct_and_principal_first(m):
    chars = enumerate_characters(m)
    assert len(chars) == euler_phi(m)
    assert chars[0].is_principal()
    table = character_table(m)
    assert len({tuple(np.round(row, 9)) for row in table}) == len(chars)
    # row orthogonality
    gram = table @ table.conj().T
    assert np.allclose(gram, euler_phi(m) * np.eye(len(chars)))


def test_char_order_examples():
    assert char_order(principal_character(7)) == 1
    assert char_order(legendre_character(5)) == 2
    gen = DirichletCharacter(7, (1,))
    assert char_order(gen) == 6
    powers = [gen**d for d in range(1, 7)]
    assert [p.is_principal() for p in powers].index(True) + 1 == 6


@pytest.mark.parametrize("m", [5, 8, 12, 15, 16, 24, 63])
def test_char_order_brute_force(m):
    for chi in enumerate_characters(m):
        d = 1
        while not (chi**d).is_principal():
            d += 1
        assert char_order(chi) == d


def test_legendre_matches_euler_criterion():
    for p in [3, 5, 7, 11, 101, 997]:
        chi = legendre_character(p)
        vals = chi.values(np.arange(p))
        assert np.allclose(vals, [legendre_oracle(a, p) for a in range(p)])


def test_indicator_examples():
    assert indicator_via_orthogonality(5, 2, 7) == 1
    assert indicator_via_orthogonality(5, 2, 8) == 0
    assert indicator_via_orthogonality(12, 5, 17) == 1
    with pytest.raises(ValueError):
        indicator_via_orthogonality(12, 4, 4)


def test_orthogonality_exhaustive_m_le_200():
    for m in range(1, 201):
        table = character_table(m)
        units = [t for t in range(m) if math.gcd(t, m) == 1]
        avg = (table.T @ table[:, units].conj()) / table.shape[0]  # (x, t)
        expected = np.zeros((m, len(units)))
        for j, t in enumerate(units):
            expected[t, j] = 1
        assert np.all(np.abs(avg - expected) < 1e-9), m


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 400), st.data())
def test_multiplicative_and_periodic(m, data):
    chars = enumerate_characters(m)
    chi = chars[data.draw(st.integers(0, len(chars) - 1))]
    for _ in range(20):
        a = data.draw(st.integers(-10**6, 10**6))
        b = data.draw(st.integers(-10**6, 10**6))
        assert abs(chi(a * b) - chi(a) * chi(b)) < 1e-12
        assert abs(chi(a + m) - chi(a)) < 1e-12
        if math.gcd(a, m) == 1:
            assert abs(abs(chi(a)) - 1) < 1e-12
        else:
            assert chi(a) == 0


def test_combine_coprime_restricts():
    c3 = enumerate_characters(3)[1]
    c8 = enumerate_characters(8)[3]
    c = combine_coprime([c3, c8])
    for x in range(24):
        assert abs(c(x) - c3(x) * c8(x)) < 1e-12
    with pytest.raises(ValueError):
        combine_coprime([c3, enumerate_characters(9)[1]])


def test_progression_examples():
    assert progression_sum(principal_character(3), 1, 3, 4) == 4
    L5 = legendre_character(5)
    assert progression_sum(L5, 0, 1, 5) == 0
    assert progression_sum(L5, 1, 1, 2) == 0


def test_burgess_examples():
    L5 = legendre_character(5)
    assert burgess_stat(5, L5, 2) == pytest.approx(6)
    assert burgess_stat(5, L5, 1) == pytest.approx(4)
    with pytest.raises(ValueError):
        burgess_stat(5, principal_character(5), 2)
    for chi in enumerate_characters(13):
        if char_order(chi) == 3:
            assert burgess_stat(13, chi, 3) < 39


def test_burgess_matches_direct_sum():
    chi = enumerate_characters(21)[5]
    direct = sum(abs(sum(chi(x + i) for i in range(7))) ** 2 for x in range(21))
    assert burgess_stat(21, chi, 7) == pytest.approx(direct)


def test_pair_count_examples():
    chi3 = character_of_order(13, 3)
    n = pair_count(13, chi3, 1, 1, 1)
    assert n == sum(1 for x in range(13) if x and (x + 1) % 13 and pow(x, 4, 13) == 1 and pow(x + 1, 4, 13) == 1)
    assert n == 0 and abs(n - 13 / 9) < math.sqrt(13) + 1
    # both x and x+1 nonzero squares mod 5: 4 -> 0 fails, so nothing qualifies
    assert pair_count(5, legendre_character(5), 1, 1, 1) == 0
    n7 = pair_count(7, legendre_character(7), 1, -1, 1)
    assert n7 == sum(1 for x in range(7) if legendre_oracle(x, 7) == 1 and legendre_oracle(x + 1, 7) == -1)
    assert abs(n7 - 7 / 4) < math.sqrt(7) + 1


def test_pair_count_errors():
    with pytest.raises(ValueError):
        pair_count(7, principal_character(7), 1, 1, 1)
    with pytest.raises(ValueError):
        pair_count(7, legendre_character(7), 1, 1, 7)
    with pytest.raises(ValueError):
        pair_count(7, legendre_character(7), 1j, 1, 1)


def test_progression_l1_all_matches_single():
    n, step, L = 45, 6, 4
    l1, excluded = progression_l1_all(n, step, L)
    for j, chi in enumerate(enumerate_characters(n)):
        direct = sum(abs(progression_sum(chi, x, step, L)) for x in range(n))
        assert l1[j] == pytest.approx(direct)
        assert excluded[j] == chi.is_induced_from(step)


def test_unit_periodic_means_induced_from_gcd():
    # oracle: chi is induced from modulus d = gcd(step, n) iff chi(u) = 1 for every unit u = 1 mod d
    for n in (12, 15, 45, 60, 63):
        for step in (1, 2, 3, 5, 6, 9):
            d = math.gcd(step, n)
            ones = [u for u in range(n) if math.gcd(u, n) == 1 and u % d == 1 % d]
            for chi in enumerate_characters(n):
                induced = all(abs(chi(u) - 1) < 1e-9 for u in ones)
                assert chi.is_induced_from(step) == induced
                if chi.is_periodic(step):
                    assert chi.is_induced_from(step)


def test_progression_bound_needs_unit_periodic_exclusion():
    # not periodic as functions, yet no cancellation: the bound fails for them
    for n, step, L, j in ((2, 1, 5, 0), (15, 3, 13, 4)):
        chi = enumerate_characters(n)[j]
        assert not chi.is_periodic(step) and chi.is_induced_from(step)
        l1, excluded = progression_l1_all(n, step, L)
        assert excluded[j] and l1[j] > n * math.sqrt(step * L)
