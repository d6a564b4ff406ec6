"""Fiber integration: certified root finding, pushforward values, level scans.

Root sets are pinned against hand-derived residue arithmetic and a
planted-root generator; the change-of-variables identity runs as a seeded
random property loop with stabilized cell sums on both sides.
"""

from fractions import Fraction

import pytest

from umla.cyclo import CycloScalar
from umla.fields import FieldError, LaurentPoly, Polyball, make_field
from umla.fibers import (
    ClusterUnresolved,
    FiberProblem,
    LevelReport,
    OnDiscriminant,
    fiber_integrate,
    level_measure,
    padic_roots,
    poly_to_string,
)
from umla.polys import MultiPoly, parse_poly
from umla.schwartz import SchwartzBruhat

from conftest import FIELDS, rng_for
from test_schwartz import random_sb

Q2 = FIELDS["Q2"]
Q3 = FIELDS["Q3"]
Q5 = FIELDS["Q5"]
F3T = FIELDS["F3t"]


def unit_ball_indicator(field):
    return SchwartzBruhat.indicator(Polyball.ball(field, (field.zero(),), 0))


def scalar(field, value):
    return CycloScalar.fraction(field.p, Fraction(value))


# ---------------------------------------------------------------------------
# root finding: frozen examples
# ---------------------------------------------------------------------------


def test_roots_square_minus_four_q3():
    # [DERIVED] x^2 = 4 in Z_3: roots 2 and -2 = ...22221, truncation 7 mod 9.
    got = padic_roots("x^2 - 4", Q3, 2)
    assert [Q3.element_to_json(r) for r in got] == ["2", "7"]


def test_roots_square_minus_one_q2():
    # [DERIVED] x^2 = 1 in Z_2: 1 and -1 = ...1111, truncation 7 mod 8; at
    # precision 1 both collapse to the single truncation 1 mod 2.
    got = padic_roots("x^2 - 1", Q2, 3)
    assert [Q2.element_to_json(r) for r in got] == ["1", "7"]
    coarse = padic_roots("x^2 - 1", Q2, 1)
    assert [Q2.element_to_json(r) for r in coarse] == ["1"]


def test_roots_square_minus_two_q3_empty():
    # [DERIVED] 2 is not a square mod 3, so x^2 = 2 has no Z_3 root.
    assert padic_roots("x^2 - 2", Q3, 3) == []


def test_roots_laurent_field():
    # [DERIVED] over F_3((t)): x^2 - 4 = x^2 - 1 = (x-1)(x+1), roots 1 and 2.
    got = padic_roots("x^2 - 4", F3T, 2)
    assert [F3T._encode(r, 1) for r in got] == [1, 2]


def test_roots_with_negative_window():
    # [DERIVED] 4x^2 = 1 has roots +-1/2 of valuation -1; -1/2 = 7/2 mod 4.
    got = padic_roots("4*x^2 - 1", Q2, 2, window=-1)
    assert [Q2.element_to_json(r) for r in got] == ["1/2", "7/2"]
    # neither root is integral
    assert padic_roots("4*x^2 - 1", Q2, 2, window=0) == []


def test_roots_multiple_root_raises_cluster():
    # (x-1)^2 has a double root: no precision can certify a unique root.
    with pytest.raises(ClusterUnresolved):
        padic_roots("x^2 - 2*x + 1", Q3, 2)


def test_roots_input_forms_and_validation():
    from_string = padic_roots("x^2 - 4", Q3, 2)
    from_coeffs = padic_roots([-4, 0, 1], Q3, 2)
    from_poly = padic_roots(parse_poly("x^2 - 4", ("x",)), Q3, 2)
    assert from_string == from_coeffs == from_poly
    with pytest.raises(FieldError):
        padic_roots("x^2 - 4", Q3, 0)
    with pytest.raises(FieldError):
        padic_roots("x^2 - 4", Q3, -1, window=-1)
    with pytest.raises(FieldError):
        padic_roots([0], Q3, 2)
    with pytest.raises(FieldError):
        padic_roots(parse_poly("x*y", ("x", "y")), Q3, 2)


def test_roots_constant_and_linear():
    # [TRIVIAL] a unit constant has no roots; a linear map has exactly one.
    assert padic_roots([7], Q5, 3) == []
    got = padic_roots("3*x - 1", Q5, 2)
    assert len(got) == 1
    # 1/3 mod 25: 3*17 = 51 = 2*25 + 1
    assert Q5.element_to_json(got[0]) == "17"


# ---------------------------------------------------------------------------
# root finding: planted-root generator and two-precision consistency
# ---------------------------------------------------------------------------


def _planted_poly(field, rng, k):
    """Monic integer polynomial with known roots, pairwise distinct mod p.

    Returns (coeff list, expected truncations at level k).  A rootless
    quadratic factor (a non-residue shift) is mixed in half the time.
    """
    p = field.p
    residues = rng.sample(range(p), rng.randrange(1, min(p, 3) + 1))
    if field.kind == "p-adic":
        roots = [d + p * rng.randrange(p * p) for d in residues]
    else:
        # integer lifts collapse mod p in equal characteristic
        roots = list(residues)
    coeffs = [1]
    for r in roots:
        coeffs = [0] + coeffs
        for i in range(len(coeffs) - 1):
            coeffs[i] -= r * coeffs[i + 1]
    if rng.random() < 0.5:
        nonresidue = {2: 5, 3: 2, 5: 2}[p]
        # multiply by x^2 - nonresidue, which has no root in the field
        lifted = [0, 0] + coeffs
        for i in range(len(coeffs)):
            lifted[i] -= nonresidue * coeffs[i]
        coeffs = lifted
    if rng.random() < 0.3:
        coeffs = [c * p**2 for c in coeffs]  # content must not matter
    expected = {field.canon_trunc(field.from_int(r), k) for r in roots}
    return coeffs, expected


def test_roots_match_planted_roots():
    rng = rng_for("fibers:planted")
    k = 3
    for trial in range(60):
        field = [Q2, Q3, Q5, F3T][trial % 4]
        coeffs, expected = _planted_poly(field, rng, k)
        got = padic_roots(coeffs, field, k)
        assert set(got) == expected, (field, coeffs)


def test_roots_two_precision_consistency():
    # truncating a deeper root list must reproduce the shallow root list
    rng = rng_for("fibers:precision")
    for trial in range(40):
        field = [Q2, Q3, Q5, F3T][trial % 4]
        coeffs = [rng.randrange(-9, 10) for _ in range(rng.randrange(2, 5))]
        if all(c == 0 for c in coeffs):
            coeffs[0] = 1
        k = rng.randrange(1, 4)
        try:
            shallow = padic_roots(coeffs, field, k)
            deep = padic_roots(coeffs, field, k + 2)
        except ClusterUnresolved:
            continue  # multiple roots are legitimately unresolvable
        assert {field.canon_trunc(r, k) for r in deep} == set(shallow)
        for r in shallow:
            # every reported truncation really kills the polynomial mod pi^k
            value = sum(
                (field.mul(field.from_int(c), field.power(r, i)) for i, c in enumerate(coeffs)),
                field.zero(),
            )
            assert field.is_zero(value) or field.ord(value) >= k


def test_roots_planted_below_unit_window():
    # [DERIVED] h(px) places the planted roots at valuation -1
    rng = rng_for("fibers:window")
    for field in (Q2, Q3, Q5):
        p = field.p
        residues = rng.sample(range(1, p) if p > 2 else [1], min(p - 1, 2))
        roots = [d + p * rng.randrange(p) for d in residues]
        coeffs = [1]
        for r in roots:
            coeffs = [0] + coeffs
            for i in range(len(coeffs) - 1):
                coeffs[i] -= r * coeffs[i + 1]
        scaled = [c * p**i for i, c in enumerate(coeffs)]
        got = padic_roots(scaled, field, 2, window=-1)
        expected = {
            field.canon_trunc(Fraction(r, p), 2) for r in roots
        }
        assert set(got) == expected
        # none are integral, since every planted residue is a unit
        assert padic_roots(scaled, field, 2, window=0) == []


# ---------------------------------------------------------------------------
# fiber integration: frozen values
# ---------------------------------------------------------------------------


def test_pushforward_square_map_q3():
    # [DERIVED] f = x^2, phi = indicator of Z_3.  At y = 4 the fiber is
    # {2, -2} with |f'| = 1, total 2.  At y = 9 it is {3, -3} with
    # |f'| = 1/3, total 6.  y = 2 is a non-square: empty fiber.
    prob = FiberProblem.from_string("x^2")
    phi = unit_ball_indicator(Q3)
    assert (fiber_integrate(prob, phi, 4) - scalar(Q3, 2)).is_zero()
    assert (fiber_integrate(prob, phi, 9) - scalar(Q3, 6)).is_zero()
    assert fiber_integrate(prob, phi, 2).is_zero()


def test_pushforward_rejects_critical_value():
    prob = FiberProblem.from_string("x^2")
    phi = unit_ball_indicator(Q3)
    with pytest.raises(OnDiscriminant):
        fiber_integrate(prob, phi, 0)
    assert prob.is_critical_value(Q3, Q3.zero())
    assert not prob.is_critical_value(Q3, Q3.one())


def test_pushforward_square_map_laurent():
    # [DERIVED] same square-map values over F_3((t)), plus a Hensel lift:
    # 1 + t is a unit square, both roots have |f'| = 1.
    prob = FiberProblem.from_string("x^2")
    phi = unit_ball_indicator(F3T)
    assert (fiber_integrate(prob, phi, F3T.from_int(4)) - scalar(F3T, 2)).is_zero()
    t2 = F3T.pow_uniformizer(2)
    assert (fiber_integrate(prob, phi, t2) - scalar(F3T, 6)).is_zero()
    assert fiber_integrate(prob, phi, F3T.uniformizer()).is_zero()
    one_plus_t = LaurentPoly(3, [(0, 1), (1, 1)])
    assert (fiber_integrate(prob, phi, one_plus_t) - scalar(F3T, 2)).is_zero()


def test_pushforward_square_map_negative_support():
    # [DERIVED] phi = indicator of B_{-1}(0) in Q_3; fiber over 1/9 is
    # {1/3, -1/3} with |f'(x)| = |2/3| = 3, each contributing 1/3.
    prob = FiberProblem.from_string("x^2")
    phi = SchwartzBruhat.indicator(Polyball.ball(Q3, (Q3.zero(),), -1))
    y = Q3.element_from_json("1/9")
    got = fiber_integrate(prob, phi, y)
    assert (got - scalar(Q3, Fraction(2, 3))).is_zero()
    assert (fiber_integrate(prob, phi, 4) - scalar(Q3, 2)).is_zero()
    # roots of valuation -2 fall outside the support
    assert fiber_integrate(prob, phi, Q3.element_from_json("1/81")).is_zero()


def test_pushforward_cube_map():
    # [DERIVED] x^3 = 1 has the single Q_3 root 1 (the quadratic cofactor
    # x^2 + x + 1 has discriminant -3, not a square); |f'(1)| = |3| = 1/3.
    prob = FiberProblem.from_string("x^3")
    phi = unit_ball_indicator(Q3)
    assert (fiber_integrate(prob, phi, 1) - scalar(Q3, 3)).is_zero()
    assert (fiber_integrate(prob, phi, 8) - scalar(Q3, 3)).is_zero()


def test_pushforward_inseparable_map_is_all_critical():
    # x^3 over F_3((t)) has identically vanishing derivative: every base
    # point is critical and the pushforward density is nowhere defined.
    prob = FiberProblem.from_string("x^3")
    phi = unit_ball_indicator(F3T)
    with pytest.raises(OnDiscriminant):
        fiber_integrate(prob, phi, F3T.one())


def test_pushforward_zero_function():
    # [TRIVIAL]
    prob = FiberProblem.from_string("x^2")
    zero = SchwartzBruhat(Q3, 1, (0,), {})
    assert fiber_integrate(prob, zero, 1).is_zero()


def test_pushforward_dimension_check():
    prob = FiberProblem.from_string("x^2")
    two_dim = SchwartzBruhat.indicator(
        Polyball.ball(Q3, (Q3.zero(), Q3.zero()), 0)
    )
    with pytest.raises(FieldError):
        fiber_integrate(prob, two_dim, 1)


def test_problem_requires_nonconstant_map():
    with pytest.raises(FieldError):
        FiberProblem.from_string("7")


# ---------------------------------------------------------------------------
# change of variables: integral of g(f(x)) phi(x) dx equals
# integral of g(y) f_!(phi)(y) dy, both sides by stabilized cell sums
# ---------------------------------------------------------------------------


def _cell_sum_left(problem, phi, g, level):
    field = phi.field
    flat = phi.refine((level,))
    total = CycloScalar.zero(field.p)
    for (c,), coef in flat.cells.items():
        y = problem.f.eval_field(field, (c,))
        total = total + coef * g.eval_at((y,))
    return total.q_shift(-2 * level)


def _cell_sum_right(problem, phi, g, level):
    field = phi.field
    flat = g.refine((level,))
    total = CycloScalar.zero(field.p)
    for (c,), coef in flat.cells.items():
        total = total + coef * fiber_integrate(problem, phi, c)
    return total.q_shift(-2 * level)


def _stabilized(summand, start, cap=8):
    level = start
    value = summand(level)
    for _ in range(cap):
        nxt = summand(level + 1)
        if (nxt - value).is_zero():
            return value
        value = nxt
        level += 1
    raise AssertionError("cell sums failed to stabilize")


def _away_from_critical(problem, g):
    """Drop the cells of g whose closure meets the critical-value set."""
    field = g.field
    if g.is_zero():
        return g
    support, _ = g.alpha_bounds()
    level = g.levels[0]
    try:
        critical = padic_roots(
            problem.disc, field, level + 1, window=min(support, 0)
        )
    except FieldError:
        critical = []  # a unit-constant locus polynomial has no roots
    cells = {
        (c,): coef
        for (c,), coef in g.cells.items()
        if all(field.ord(field.sub(c, z)) < level for z in critical)
    }
    return SchwartzBruhat(field, 1, g.levels, cells)


def test_change_of_variables_random():
    rng = rng_for("fibers:change-of-variables")
    fields = [Q2, Q3, Q5, F3T]
    maps = [FiberProblem.from_string("x^2"), FiberProblem.from_string("x^3 - x")]
    checked = 0
    for trial in range(32):
        field = fields[trial % 4]
        problem = maps[trial % 2]
        phi = random_sb(field, rng, sizes=(0, 1, 0))
        g = _away_from_critical(problem, random_sb(field, rng, sizes=(0, 1, 0)))
        start = max(phi.levels[0], g.levels[0], 1)
        left = _stabilized(lambda L: _cell_sum_left(problem, phi, g, L), start)
        right = _stabilized(lambda L: _cell_sum_right(problem, phi, g, L), start)
        assert (left - right).is_zero(), (field, poly_to_string(problem.f))
        if not left.is_zero():
            checked += 1
    assert checked >= 8  # the loop must exercise nontrivial instances


def test_change_of_variables_shifted_supports():
    # same identity with phi and g living on shifted balls
    rng = rng_for("fibers:change-of-variables-shift")
    problem = FiberProblem.from_string("x^2")
    for field in (Q2, Q3, F3T):
        shift = field.from_int(1 + field.p)
        ball = Polyball.ball(field, (shift,), 1)
        phi = SchwartzBruhat.indicator(ball)
        g = _away_from_critical(problem, random_sb(field, rng, sizes=(0, 1, 0)))
        left = _stabilized(lambda L: _cell_sum_left(problem, phi, g, L), 2)
        right = _stabilized(lambda L: _cell_sum_right(problem, phi, g, L), 2)
        assert (left - right).is_zero()


# ---------------------------------------------------------------------------
# level scans
# ---------------------------------------------------------------------------


def test_level_measure_square_map_small_grid():
    # [DERIVED] f = x^2 on Z_3.  At eps = 0 the scan sees only unit y,
    # where square/non-square is decided mod 3: mu = 1.  At eps = 2 the
    # cells 9 mod 27 (value 6) and 18 mod 27 (value 0) force mu = 3.
    # Restricting phi to B_1(1) makes the density the indicator of B_1(1)
    # (the square map is a bijection there): mu = 1 on every eps row.
    prob = FiberProblem.from_string("x^2")
    phi = unit_ball_indicator(Q3)
    rep = level_measure(prob, phi, eps_values=(0, 1, 2), m_values=(0, 1))
    assert [rep.mu(e, 0) for e in (0, 1, 2)] == [1, 1, 3]
    assert [rep.mu(e, 1) for e in (0, 1, 2)] == [1, 1, 1]
    a, b, c = rep.fit
    assert (a, b, c) == (Fraction(2), Fraction(0), Fraction(1))
    assert rep.fit_dominates()
    assert rep.window == 0
    # the eps = 2 region strictly contains the eps = 0 region
    assert rep.cells[(2, 0)] > rep.cells[(0, 0)]


def test_level_measure_rows_monotone_in_eps():
    # shrinking the excluded neighborhood can only refine the level
    prob = FiberProblem.from_string("x^2")
    phi = unit_ball_indicator(Q3)
    rep = level_measure(prob, phi, eps_values=(0, 1, 2, 3), m_values=(0,))
    mus = [rep.mu(e, 0) for e in (0, 1, 2, 3)]
    assert mus == sorted(mus)


def test_level_measure_json_round_trip():
    prob = FiberProblem.from_string("x^2")
    phi = unit_ball_indicator(Q3)
    rep = level_measure(prob, phi, eps_values=(0, 1), m_values=(0, 1))
    back = LevelReport.from_json(rep.to_json())
    assert back.rows == rep.rows
    assert back.cells == rep.cells
    assert back.fit == rep.fit
    assert back.f_text == rep.f_text == "x^2"
    assert back.field is rep.field
    assert back.fit_dominates()


def test_level_measure_validation():
    prob = FiberProblem.from_string("x^2")
    phi = unit_ball_indicator(Q3)
    with pytest.raises(FieldError):
        level_measure(prob, phi, eps_values=())
    with pytest.raises(FieldError):
        level_measure(prob, phi, eps_values=(0, 4), resolution=3)
    with pytest.raises(FieldError):
        level_measure(prob, phi, eps_values=(0,), cell_budget=10)
    two_dim = SchwartzBruhat.indicator(
        Polyball.ball(Q3, (Q3.zero(), Q3.zero()), 0)
    )
    with pytest.raises(FieldError):
        level_measure(prob, two_dim, eps_values=(0,))


def test_level_measure_etale_map_is_flat():
    # [DERIVED] f = x^3 - x over F_3((t)) has unit derivative everywhere
    # (f' = -1), so the density is determined at level max(1, m) and no
    # eps dependence appears.
    prob = FiberProblem.from_string("x^3 - x")
    phi = unit_ball_indicator(F3T)
    rep = level_measure(prob, phi, eps_values=(0, 1, 2), m_values=(0,))
    mus = [rep.mu(e, 0) for e in (0, 1, 2)]
    assert mus[0] == mus[1] == mus[2]
    a, _, _ = rep.fit
    assert a == 0


# ---------------------------------------------------------------------------
# problem serialization and rendering
# ---------------------------------------------------------------------------


def test_problem_json_round_trip():
    prob = FiberProblem.from_string("x^3 - x")
    back = FiberProblem.from_json(prob.to_json())
    assert back.f == prob.f
    assert back.disc == prob.disc


def test_poly_rendering_round_trip():
    rng = rng_for("fibers:poly-text")
    for _ in range(50):
        coeffs = {
            (e,): rng.randrange(-9, 10)
            for e in range(rng.randrange(1, 5))
            if rng.random() < 0.8
        }
        poly = MultiPoly(1, coeffs)
        text = poly_to_string(poly)
        assert parse_poly(text, ("x",)) == poly, text


def test_poly_rendering_examples():
    # [TRIVIAL]
    assert poly_to_string(parse_poly("x^2", ("x",))) == "x^2"
    assert poly_to_string(parse_poly("x^3 - x", ("x",))) == "x^3 - x"
    assert poly_to_string(parse_poly("0 - x", ("x",))) == "-x"
    assert poly_to_string(parse_poly("2*x^2 - 3*x + 7", ("x",))) == "2*x^2 - 3*x + 7"
    assert poly_to_string(parse_poly("x - x", ("x",))) == "0"
