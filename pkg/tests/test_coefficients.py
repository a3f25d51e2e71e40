import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hosf.coefficients import (
    MAX_EXACT_J,
    PhysicalConstants,
    admissible_pair_q,
    alpha_coeff,
    coefficient_table,
    make_operator,
    symbol_polynomial,
    symbol_relativistic,
    validity_speed_check,
)
from hosf.grid import GridSpec


def binomial_route(j: int) -> Fraction:
    # Catalan-type form: C(2j-2, j-1) / (j 2^{2j-1})
    return Fraction(math.comb(2 * j - 2, j - 1), j * 2 ** (2 * j - 1))


def taylor_route(jmax: int) -> list[Fraction]:
    # coefficients of sqrt(1 + x) in high precision, signs folded back in
    with mpmath.workdps(60):
        series = mpmath.taylor(lambda x: mpmath.sqrt(1 + x), 0, jmax)
    out = []
    for j, c in enumerate(series):
        sign = 1 if j % 2 == 1 else -1
        out.append(Fraction(str(mpmath.nstr(sign * c, 50))).limit_denominator(2**80))
    return out


def test_anchor_values():
    assert alpha_coeff(0) == -1
    assert alpha_coeff(1) == Fraction(1, 2)
    assert alpha_coeff(2) == Fraction(1, 8)
    assert alpha_coeff(3) == Fraction(1, 16)


def test_matches_binomial_form_up_to_limit():
    for j in range(1, MAX_EXACT_J + 1):
        assert alpha_coeff(j) == binomial_route(j)


def test_matches_sqrt_taylor_series():
    series = taylor_route(12)
    for j in range(1, 13):
        assert alpha_coeff(j) == series[j]


def test_positive_and_decreasing():
    # consecutive ratio is (2j-1)/(2j+2): 1/4, 1/2, 5/8, ... -> 1
    for j in range(1, MAX_EXACT_J):
        a, b = alpha_coeff(j), alpha_coeff(j + 1)
        assert a > 0
        assert b / a == Fraction(2 * j - 1, 2 * j + 2)
        assert b < a


@pytest.mark.parametrize("bad", [-1, -7])
def test_negative_index_rejected(bad):
    with pytest.raises(ValueError):
        alpha_coeff(bad)


def test_non_integer_index_rejected():
    with pytest.raises(TypeError):
        alpha_coeff(1.5)


def test_coefficient_table_rows_and_limits():
    rows = coefficient_table(3)
    assert rows[:3] == [(0, -1, 1, -1.0), (1, 1, 2, 0.5), (2, 1, 8, 0.125)]
    assert rows[3] == (3, 1, 16, 0.0625)
    assert len(coefficient_table(MAX_EXACT_J)) == MAX_EXACT_J + 1
    with pytest.raises(ValueError):
        coefficient_table(MAX_EXACT_J + 1)
    with pytest.raises(ValueError):
        coefficient_table(-1)


def test_constants_validation():
    with pytest.raises(ValueError):
        PhysicalConstants(hbar=0.0)
    with pytest.raises(ValueError):
        PhysicalConstants(kappa=-1.0)
    c = PhysicalConstants(mass=2.0, c=3.0)
    assert c.rest_energy == 18.0
    assert c.compton_momentum == 6.0


@pytest.mark.parametrize("J", [1, 2, 5, 10])
def test_rest_energy_at_zero_momentum(J):
    consts = PhysicalConstants(mass=1.7, c=2.3)
    assert symbol_polynomial(J, 0.0, consts) == pytest.approx(1.7 * 2.3**2, rel=1e-15)


def test_low_orders_closed_form():
    consts = PhysicalConstants(mass=1.3, c=2.0)
    m, c = consts.mass, consts.c
    p = np.linspace(0, 1.5, 7)
    np.testing.assert_allclose(symbol_polynomial(1, p, consts), m * c**2 + p**2 / (2 * m), rtol=1e-14)
    np.testing.assert_allclose(
        symbol_polynomial(2, p, consts),
        m * c**2 + p**2 / (2 * m) - p**4 / (8 * m**3 * c**2),
        rtol=1e-14,
    )


def test_relativistic_identities():
    consts = PhysicalConstants(mass=1.5, c=2.0)
    assert symbol_relativistic(0.0, consts) == consts.rest_energy
    assert symbol_relativistic(consts.compton_momentum, consts) == pytest.approx(
        math.sqrt(2) * consts.rest_energy, rel=1e-15
    )


@pytest.mark.parametrize("frac", [0.1, 0.5, 0.9])
def test_truncation_error_decreases_with_order(frac):
    consts = PhysicalConstants()
    p = frac * consts.compton_momentum
    with mpmath.workdps(50):
        exact = mpmath.sqrt(1 + mpmath.mpf(frac) ** 2)
        errs = []
        partial = mpmath.mpf(1)
        for J in range(1, 11):
            a = alpha_coeff(J)
            partial += (1 if J % 2 else -1) * mpmath.mpf(a.numerator) / a.denominator * mpmath.mpf(frac) ** (2 * J)
            errs.append(abs(partial - exact))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    # double precision evaluation tracks the high-precision partial sums
    for J in (1, 2, 3):
        err = abs(symbol_polynomial(J, p, consts) - symbol_relativistic(p, consts))
        assert err == pytest.approx(float(errs[J - 1]), rel=1e-5)


@pytest.mark.parametrize("J", [1, 2, 3])
def test_truncation_error_power_law(J):
    consts = PhysicalConstants()
    us = np.geomspace(0.02, 0.1, 6)
    with mpmath.workdps(60):
        errs = []
        for u in us:
            u = mpmath.mpf(u)
            partial = 1 + sum(
                (1 if j % 2 else -1) * mpmath.mpf(alpha_coeff(j).numerator) / alpha_coeff(j).denominator * u ** (2 * j)
                for j in range(1, J + 1)
            )
            errs.append(float(abs(partial - mpmath.sqrt(1 + u**2))))
    slope = np.polyfit(np.log(us), np.log(errs), 1)[0]
    assert abs(slope - (2 * J + 2)) < 0.1


def test_speed_check_boundary():
    assert validity_speed_check(0.0)
    assert validity_speed_check(0.1)
    assert not validity_speed_check(1 / math.sqrt(2))
    assert not validity_speed_check(2.0 / math.sqrt(2), c=2.0)
    assert validity_speed_check(0.7071)
    with pytest.raises(ValueError):
        validity_speed_check(-0.1)


def rational_q(r: Fraction | None, J: int) -> Fraction | None:
    """Exact q from 2/q = (3/J)(1/2 - 1/r); r=None means infinity."""
    inv_r = Fraction(0) if r is None else 1 / r
    rhs = Fraction(3, J) * (Fraction(1, 2) - inv_r)
    return None if rhs == 0 else 2 / rhs


@pytest.mark.parametrize("J", [2, 3, 4, 7])
def test_admissible_pair_endpoints(J):
    assert admissible_pair_q(math.inf, J) == pytest.approx(4 * J / 3, rel=1e-15)
    assert admissible_pair_q(2, J) == math.inf


def test_admissible_pair_rational_oracle():
    assert admissible_pair_q(4, 2) == pytest.approx(16 / 3, rel=1e-15)
    for J in (2, 3, 5):
        for r in (Fraction(5, 2), Fraction(3), Fraction(4), Fraction(10), Fraction(101, 3)):
            assert admissible_pair_q(float(r), J) == pytest.approx(float(rational_q(r, J)), rel=1e-14)


def test_admissible_pair_rejects_bad_input():
    with pytest.raises(ValueError):
        admissible_pair_q(1.5, 2)
    with pytest.raises(ValueError):
        admissible_pair_q(4, 1)


@settings(max_examples=60, deadline=None)
@given(
    r1=st.floats(min_value=2.0, max_value=1e6),
    r2=st.floats(min_value=2.0, max_value=1e6),
    J=st.integers(min_value=2, max_value=12),
)
def test_admissible_pair_monotone_in_r(r1, r2, J):
    lo, hi = sorted((r1, r2))
    assert admissible_pair_q(lo, J) >= admissible_pair_q(hi, J)


def test_operator_symbol_properties():
    grid = GridSpec.cube(2, 16, 10.0)
    consts = PhysicalConstants(hbar=0.7, mass=1.2, c=3.0)
    op = make_operator(grid, 1, consts, subtract_rest_energy=False)
    expected = consts.rest_energy + consts.hbar**2 * grid.k2 / (2 * consts.mass)
    np.testing.assert_allclose(op.symbol, expected, rtol=1e-14)
    assert op.symbol[0, 0] == consts.rest_energy
    np.testing.assert_array_equal(op.propagation_symbol, op.symbol)
    sub = make_operator(grid, 1, consts)
    np.testing.assert_allclose(sub.propagation_symbol, expected - consts.rest_energy, atol=1e-12)
    assert sub.suggested_dt(consts.hbar) == pytest.approx(0.5 * consts.hbar / sub.max_abs_symbol())


def test_operator_kinds():
    grid = GridSpec.cube(1, 32, 8.0)
    consts = PhysicalConstants()
    mono = make_operator(grid, 2, consts, kind="monomial")
    np.testing.assert_allclose(mono.symbol, grid.k2**2)
    assert mono.rest_energy == 0.0
    rel = make_operator(grid, 1, consts, kind="relativistic")
    np.testing.assert_allclose(rel.symbol, np.sqrt(1 + grid.k2), rtol=1e-15)
    with pytest.raises(ValueError):
        make_operator(grid, 0, consts)
    with pytest.raises(ValueError):
        make_operator(grid, 1, consts, kind="cubic")
