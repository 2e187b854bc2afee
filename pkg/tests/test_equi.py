import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_orbit.arith import is_prime
from sparse_orbit.characters import enumerate_characters, principal_character
from sparse_orbit.diophantine import convergents_from_quotients, power_rule
from sparse_orbit.dynamics import FourierCocycle, Rotation, SkewProductSystem, SpecialFlowSystem, TorusPoint
from sparse_orbit.equi import (
    AverageReport,
    Checkpoint,
    TestFunction,
    discrepancy_report,
    equidistribution_trend,
    flow_discrepancy,
    flow_integral,
    parse_test_function,
    pow_exp_sum_expansion,
    scaled_char_average,
    sparse_average,
    weighted_pow_average,
)
from sparse_orbit.errors import BudgetExceeded
from sparse_orbit.powres import ScaledCharacter, pow_profile

GOLDEN = convergents_from_quotients([0] + [1] * 80)
ROT = Rotation(GOLDEN)


def skew():
    g = FourierCocycle.from_terms([(1, 0.2), (3, 0.05)], GOLDEN)
    return SkewProductSystem(g, GOLDEN)


def test_parse_test_function():
    assert parse_test_function("1") == TestFunction()
    assert parse_test_function("e(x)") == TestFunction(1, 0)
    assert parse_test_function("e(y)") == TestFunction(0, 1)
    assert parse_test_function("e(2x-3y)") == TestFunction(2, -3)
    assert parse_test_function((1, -1)) == TestFunction(1, -1)
    for bad in ("cos(x)", "e(2z)", "e(x**2)"):
        with pytest.raises(ValueError):
            parse_test_function(bad)


@pytest.mark.parametrize("system", [ROT, skew()], ids=["rotation", "skew"])
def test_constant_function_averages_one(system):
    for N in (1, 7, 100):
        assert sparse_average(system, Fraction(1, 5), "1", 2, N) == 1
        assert weighted_pow_average(system, Fraction(1, 5), "1", 2, N) == 1


def test_sparse_average_n1_is_f_at_start():
    x0 = Fraction(2, 7)
    assert sparse_average(ROT, x0, "e(x)", 2, 1) == pytest.approx(np.exp(2j * np.pi * 2 / 7))


def test_sparse_average_rotation_is_weyl_sum():
    x0 = Fraction(1, 9)
    N = 500
    al = ROT.alpha
    want = sum(np.exp(2j * np.pi * (x0 + Fraction(i * i * al.num % al.den, al.den))) for i in range(N)) / N
    assert sparse_average(ROT, x0, "e(x)", 2, N) == pytest.approx(want, abs=1e-12)
    small = [abs(sparse_average(ROT, x0, "e(x)", 2, N)) for N in (10**2, 10**4)]
    assert small[1] < small[0]


def test_weighted_pow_n1():
    x0 = Fraction(3, 10)
    assert weighted_pow_average(ROT, x0, "e(x)", 2, 1) == pytest.approx(np.exp(2j * np.pi * 0.3))


def test_weighted_pow_direct_small():
    x0 = Fraction(1, 4)
    al = ROT.alpha
    for n in (5, 12, 30):
        counts = pow_profile(n, 3).counts
        want = sum(counts[i] * np.exp(2j * np.pi * (x0 + Fraction(i * al.num % al.den, al.den))) for i in range(n)) / n
        assert weighted_pow_average(ROT, x0, "e(x)", 3, n) == pytest.approx(want, abs=1e-12)


def test_weighted_pow_expansion_crosscheck_primes():
    al = ROT.alpha
    for n in [p for p in range(2, 1001) if is_prime(p)]:
        a = weighted_pow_average(ROT, 0, "e(y)", 2, n)
        b = pow_exp_sum_expansion(n, 2, al.num, al.den) / n
        assert abs(a - b) < 1e-8


def test_weighted_pow_budget():
    with pytest.raises(BudgetExceeded):
        weighted_pow_average(ROT, 0, "e(x)", 2, 10**6, budget=10**5)


def test_weighted_pow_trend_rigid_sequence():
    cf = power_rule(2, 6, seed=(0, 2))
    rot = Rotation(cf)
    vals = [abs(weighted_pow_average(rot, Fraction(1, 3), "e(y)", 2, q)) for q in cf.q[1:6]]
    assert vals[-1] < 0.2
    assert vals[-1] < vals[0]


# --- scaled-character averages -------------------------------------------------


def test_scaled_char_zero_sequence():
    f = ScaledCharacter(1, enumerate_characters(15)[3])
    v, b, _ = scaled_char_average(np.zeros(15), f, 15, 5, 2)
    assert v == 0 and v <= b


def test_scaled_char_degenerate_fixture():
    n = 12
    f = ScaledCharacter(1, principal_character(n))
    g = np.ones(n)
    v, b, eps = scaled_char_average(g, f, n, 1, 1)
    # principal character on 1s: mean of the unit indicator
    assert v == pytest.approx(4 / 12)
    # the progression-mean hypothesis fails (eps = 1), so the bound is vacuous
    assert eps == 1 and b > 1


def test_scaled_char_full_support_value_one():
    # n = 1 gives the value 1 exactly; the hypotheses fail and the bound exceeds 1
    f = ScaledCharacter(1, principal_character(1))
    v, b, eps = scaled_char_average(np.ones(1), f, 1, 1, 1)
    assert v == 1 and b > 1


def test_scaled_char_rotation_orbit():
    # g(x) = cos(2 pi (x0 + x alpha)) with a nonprincipal character mod n = q m'
    for q, mp in ((5, 7), (8, 3), (13, 4)):
        n = q * mp
        al = float(ROT.alpha.value)
        g = np.cos(2 * np.pi * (0.1 + np.arange(3 * n) * al))
        for chi in enumerate_characters(n)[1:]:
            f = ScaledCharacter(1, chi)
            for m, L in ((q, 2), (mp, 3)):
                v, b, _ = scaled_char_average(g, f, n, m, L)
                assert v <= b


def test_scaled_char_hypotheses_hold_fixture():
    # g(x) = cos(2 pi x / n): small shift defect and exact progression cancellation
    n, m, L = 2**14, 8, 4
    g = np.cos(2 * np.pi * np.arange(n) / n)
    for d in (1, 2, 4):
        chis = [c for c in enumerate_characters(n // d)[1:5]]
        for chi in chis:
            v, b, eps = scaled_char_average(g, ScaledCharacter(d, chi), n, m, L)
            assert eps < 0.1
            assert v <= b


def test_scaled_char_divisibility():
    f = ScaledCharacter(3, principal_character(5))
    with pytest.raises(ValueError):
        scaled_char_average(np.ones(15), f, 15, 4, 1)


# --- discrepancy ---------------------------------------------------------------


def test_discrepancy_single_point():
    xs = np.full(100, 0.3)
    assert discrepancy_report(xs, np.full(100, 0.7), 3) == pytest.approx(1.0)


def test_discrepancy_one_dimensional_grid():
    N = 1000
    xs = np.arange(N) / N
    assert discrepancy_report(xs, np.zeros(N), 5) == pytest.approx(1.0)
    assert discrepancy_report(xs, None, 5) < 1e-12


def test_discrepancy_halton():
    def vdc(i, b):
        out, f = 0.0, 1.0 / b
        while i:
            out += f * (i % b)
            i //= b
            f /= b
        return out

    xs = np.array([vdc(i, 2) for i in range(1, 10**4 + 1)])
    ys = np.array([vdc(i, 3) for i in range(1, 10**4 + 1)])
    assert discrepancy_report(xs, ys, 5) < 0.05


@settings(max_examples=50)
@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 2**32))
def test_discrepancy_translation_invariant(dx, dy, seed):
    rng = np.random.default_rng(seed)
    xs, ys = rng.random(200), rng.random(200)
    a = discrepancy_report(xs, ys, 4)
    b = discrepancy_report((xs + dx) % 1, (ys + dy) % 1, 4)
    assert abs(a - b) < 1e-9


# --- flows ---------------------------------------------------------------------


def flow():
    return SpecialFlowSystem(FourierCocycle.from_terms([(1, 0.3)], GOLDEN))


def test_flow_integral_constant_and_height():
    sys_ = flow()
    assert flow_integral(sys_, TestFunction()) == pytest.approx(1.0)
    # int e(x) roof(x) dx / int roof = (a/2) / c0 for roof = c0 + a cos(2 pi x)
    assert flow_integral(sys_, TestFunction(1, 0)) == pytest.approx(0.15 / sys_.c0)


def test_flow_discrepancy_of_uniform_samples_small():
    sys_ = flow()
    rng = np.random.default_rng(5)
    xs, ys = [], []
    while len(xs) < 40000:
        x, y = rng.random(), rng.random() * sys_.roof_max
        if y < sys_.roof(x):
            xs.append(x)
            ys.append(y)
    assert flow_discrepancy(sys_, np.array(xs), np.array(ys), 2) < 0.02


# --- reports -------------------------------------------------------------------


def test_trend_rotation_c1_decays():
    rep = equidistribution_trend(ROT, Fraction(1, 7), 1, [10, 100, 1000, 10000], K=3)
    ds = [c.discrepancy for c in rep.checkpoints]
    assert rep.trend
    assert ds[-1] < 10 * math.log(10**4) / 10**4


def test_trend_identity_flat():
    rep = equidistribution_trend(Rotation.identity(), Fraction(1, 3), 2, [10, 100, 1000])
    assert all(c.discrepancy == pytest.approx(1.0) for c in rep.checkpoints)
    assert not rep.trend


def test_trend_skew_square_orbit():
    rep = equidistribution_trend(skew(), TorusPoint(Fraction(1, 3), 0.5), 2, [100, 1000, 10000], K=3)
    assert rep.trend
    for c in rep.checkpoints:
        for z in c.averages.values():
            assert abs(z) <= 1 + 1e-12


def test_trend_flow_runs():
    rep = equidistribution_trend(flow(), TorusPoint(Fraction(1, 3), 0.5), 1, [50, 400], K=2)
    assert len(rep.checkpoints) == 2


def test_report_serialization_and_threads():
    a = equidistribution_trend(skew(), TorusPoint(Fraction(1, 3), 0.5), 2, [100, 1000], K=3)
    b = equidistribution_trend(skew(), TorusPoint(Fraction(1, 3), 0.5), 2, [100, 1000], K=3, threads=4)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().startswith("# schema=1\n")
    data = json.loads(a.to_json())
    assert data["checkpoints"][0]["N"] == 100 and data["schema"] == 1


def test_report_rejects_unsorted():
    with pytest.raises(ValueError):
        AverageReport("s", "0", "n^2", [Checkpoint(10, {}, 0.1), Checkpoint(5, {}, 0.1)])
    with pytest.raises(ValueError):
        equidistribution_trend(ROT, 0, 2, [100, 10])
