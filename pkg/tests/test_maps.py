"""Affine-map calculus: pullback, pushforward, products, conormal guards."""

from __future__ import annotations

import pytest

from conftest import rng_for, sample_element, sample_nonzero
from umla.cyclo import CycloScalar
from umla.distribution import MixedCellDistribution
from umla.fields import FieldError, Polyball, make_field
from umla.microlocal import (
    AffineMap,
    NfIntersectsWF,
    NotProperOnSupport,
    UnsupportedMap,
    WFCollision,
    normal_cone,
    product_dist,
    pullback,
    pushforward,
    wavefront_exact,
)
from umla.schwartz import CellBudgetError, SchwartzBruhat


def compose(g: AffineMap, f: AffineMap) -> AffineMap:
    fld = g.field
    rows = tuple(
        tuple(
            _dot(fld, g.rows[i], [f.rows[j][k] for j in range(f.n_out)])
            for k in range(f.n_in)
        )
        for i in range(g.n_out)
    )
    return AffineMap(fld, rows, g.apply(f.shift))


def _dot(fld, xs, ys):
    acc = fld.zero()
    for x, y in zip(xs, ys):
        acc = fld.add(acc, fld.mul(x, y))
    return acc


def indicator(field, center, r):
    return SchwartzBruhat.indicator(Polyball.ball(field, center, r))


def scale_shift_map(field, e: int, shift) -> AffineMap:
    return AffineMap(
        field, ((field.pow_uniformizer(e),),), (shift,)
    )


def mixed_sample(field):
    f = field
    a = f.pow_uniformizer(-1)
    return (
        MixedCellDistribution.delta(f, (f.one(),))
        + MixedCellDistribution.modulated_constant(f, (a,)).mul_by_sb(
            indicator(f, (f.zero(),), 0)
        )
        + MixedCellDistribution.from_sb(indicator(f, (f.uniformizer(),), 1))
    )


class TestAffineMapBasics:
    def test_apply_and_from_ints(self, field):
        f = field
        m = scale_shift_map(f, 1, f.one())
        got = m.apply((f.one(),))
        assert f.is_zero(f.sub(got[0], f.add(f.uniformizer(), f.one())))
        m2 = AffineMap.from_ints(f, [[1, 1], [0, 1]], [0, 0])
        y = m2.apply((f.one(), f.one()))
        assert f.is_zero(f.sub(y[0], f.from_int(2)))

    def test_classification(self, field):
        f = field
        one, zero = f.one(), f.zero()
        assert scale_shift_map(f, 2, zero).classify() == "iso"
        assert AffineMap(f, ((one, zero),), (zero,)).classify() == "projection"
        assert AffineMap(f, ((one,), (zero,)), (zero, one)).classify() == "inclusion"
        assert AffineMap(f, ((zero,),), (one,)).classify() == "constant"
        with pytest.raises(UnsupportedMap):
            AffineMap(f, ((one, one), (one, one)), (zero, zero)).classify()
        with pytest.raises(UnsupportedMap):
            AffineMap(f, ((f.uniformizer(), zero),), (zero,)).classify()

    def test_monomial_inverse_round_trip(self, field):
        f = field
        rng = rng_for("maps-inverse")
        m = AffineMap(
            f,
            ((f.zero(), f.pow_uniformizer(2)), (f.pow_uniformizer(-1), f.zero())),
            (f.one(), f.uniformizer()),
        )
        inv = m.inverse()
        for _ in range(10):
            x = (sample_element(f, rng), sample_element(f, rng))
            back = inv.apply(m.apply(x))
            assert all(f.is_zero(f.sub(a, b)) for a, b in zip(back, x))

    def test_general_inverse_rational_prime_field(self):
        f = make_field("p-adic", 3)
        rng = rng_for("maps-geninv")
        m = AffineMap.from_ints(f, [[1, 1], [0, 3]], [2, 1])
        assert f.is_zero(f.sub(m.det(), f.from_int(3)))
        inv = m.inverse()
        for _ in range(10):
            x = (sample_element(f, rng), sample_element(f, rng))
            back = inv.apply(m.apply(x))
            assert all(f.is_zero(f.sub(a, b)) for a, b in zip(back, x))

    def test_general_inverse_rejected_equal_characteristic(self):
        f = make_field("equal-characteristic", 3)
        one, zero = f.one(), f.zero()
        m = AffineMap(f, ((one, one), (zero, one)), (zero, zero))
        with pytest.raises(UnsupportedMap):
            m.inverse()

    def test_json_round_trip(self, field):
        f = field
        m = AffineMap(
            f,
            ((f.uniformizer(), f.one()), (f.zero(), f.one())),
            (f.one(), f.zero()),
        )
        back = AffineMap.from_json(f, m.to_json())
        assert back == m


class TestPullback:
    def test_atom_gains_jacobian_modulus(self, field):
        f = field
        m = scale_shift_map(f, 1, f.zero())
        got = pullback(m, MixedCellDistribution.delta(f, (f.zero(),)))
        want = MixedCellDistribution.delta(f, (f.zero(),)).scale(
            CycloScalar.q_pow(f.p, 2)
        )
        assert (got - want).is_zero()

    def test_atom_pullback_matches_density_approximation(self, field):
        # delta is the pairing limit of q^r 1_{B_r}; the pullback of the
        # approximants stabilizes to the pullback of the atom
        f = field
        m = scale_shift_map(f, 1, f.zero())
        atom = pullback(m, MixedCellDistribution.delta(f, (f.zero(),)))
        for s in (0, 1, 2):
            phi = indicator(f, (f.zero(),), s)
            want = atom.evaluate(phi)
            for r in range(s + 1, s + 4):
                approx = MixedCellDistribution.from_sb(
                    indicator(f, (f.zero(),), r)
                ).scale(CycloScalar.q_pow(f.p, 2 * r))
                assert pullback(m, approx).evaluate(phi) == want

    def test_density_pullback_is_composition(self, field):
        f = field
        rng = rng_for("maps-comp")
        m = scale_shift_map(f, 1, f.one())
        u = MixedCellDistribution.from_sb(indicator(f, (f.zero(),), 1)) + (
            MixedCellDistribution.modulated_constant(f, (f.pow_uniformizer(-2),))
        )
        v = pullback(m, u)
        for _ in range(20):
            x = (sample_element(f, rng),)
            assert v.pointwise_eval(x) == u.pointwise_eval(m.apply(x))

    def test_projection_pullback_tensors_full_line(self, field):
        f = field
        proj = AffineMap(f, ((f.one(), f.zero()),), (f.zero(),))
        v = pullback(proj, MixedCellDistribution.delta(f, (f.zero(),)))
        for r in range(4):
            assert v.b_function((f.zero(), f.zero()), r) == CycloScalar.q_pow(
                f.p, -2 * r
            )

    def test_inclusion_pullback_restricts(self, field):
        f = field
        zero, one = f.zero(), f.one()
        incl = AffineMap(f, ((one,), (zero,)), (zero, zero))
        sq = MixedCellDistribution.from_sb(
            SchwartzBruhat.indicator(Polyball(f, (zero, zero), (0, 0)))
        )
        got = pullback(incl, sq)
        want = MixedCellDistribution.from_sb(indicator(f, (zero,), 0))
        assert (got - want).is_zero()
        # a ball in the dropped coordinate that misses the section dies
        off = MixedCellDistribution.from_sb(
            SchwartzBruhat.indicator(Polyball(f, (zero, one), (0, 1)))
        )
        assert pullback(incl, off).is_zero()

    def test_inclusion_pullback_of_off_section_atom_is_zero(self, field):
        f = field
        zero, one = f.zero(), f.one()
        incl = AffineMap(f, ((one,), (zero,)), (zero, zero))
        u = MixedCellDistribution.delta(f, (one, one))
        assert pullback(incl, u).is_zero()

    def test_inclusion_pullback_of_on_section_atom_rejected(self, field):
        f = field
        zero, one = f.zero(), f.one()
        incl = AffineMap(f, ((one,), (zero,)), (zero, zero))
        u = MixedCellDistribution.delta(f, (one, zero))
        with pytest.raises(NfIntersectsWF):
            pullback(incl, u)

    def test_constant_pullback_evaluates_at_point(self, field):
        f = field
        cmap = AffineMap(f, ((f.zero(),),), (f.one(),))
        u = MixedCellDistribution.from_sb(indicator(f, (f.zero(),), 0)) + (
            MixedCellDistribution.modulated_constant(f, (f.uniformizer(),))
        )
        got = pullback(cmap, u)
        val = u.pointwise_eval((f.one(),))
        want = MixedCellDistribution.constant(f, 1).scale(val)
        assert (got - want).is_zero()
        with pytest.raises(NfIntersectsWF):
            pullback(cmap, MixedCellDistribution.delta(f, (f.one(),)))

    def test_general_matrix_pullback(self):
        f = make_field("p-adic", 3)
        rng = rng_for("maps-general")
        m = AffineMap.from_ints(f, [[3, 1], [0, 1]], [0, 0])
        u = MixedCellDistribution.from_sb(
            SchwartzBruhat.indicator(Polyball(f, (f.zero(), f.zero()), (0, 0)))
        )
        v = pullback(m, u)
        cover = SchwartzBruhat.indicator(
            Polyball(f, (f.zero(), f.zero()), (-1, 0))
        )
        assert v.evaluate(cover) == CycloScalar.fraction(3, 3)
        for _ in range(20):
            x = (sample_element(f, rng), sample_element(f, rng))
            assert v.pointwise_eval(x) == u.pointwise_eval(m.apply(x))
        with pytest.raises(CellBudgetError):
            pullback(m, u, budget=1)

    def test_general_matrix_rejected_equal_characteristic(self):
        f = make_field("equal-characteristic", 3)
        one, zero = f.one(), f.zero()
        m = AffineMap(f, ((one, one), (zero, one)), (zero, zero))
        u = MixedCellDistribution.from_sb(
            SchwartzBruhat.indicator(Polyball(f, (zero, zero), (0, 0)))
        )
        with pytest.raises(UnsupportedMap):
            pullback(m, u)

    def test_pullback_transports_wavefront(self, field):
        f = field
        rng = rng_for("maps-wf")
        m = scale_shift_map(f, 1, f.one())
        s = f.uniformizer()
        u = MixedCellDistribution.delta(f, (f.one(),))
        wf_u = wavefront_exact(u)
        wf_v = wavefront_exact(pullback(m, u))
        for x in (f.zero(), f.one(), f.uniformizer()):
            for _ in range(5):
                eta = sample_nonzero(f, rng)
                assert wf_v.contains((x,), (f.mul(s, eta),)) == wf_u.contains(
                    m.apply((x,)), (eta,)
                )


class TestPushforward:
    def test_monomial_atom_moves_without_jacobian(self, field):
        f = field
        m = scale_shift_map(f, 1, f.one())
        got = pushforward(m, MixedCellDistribution.delta(f, (f.zero(),)))
        want = MixedCellDistribution.delta(f, (f.one(),))
        assert (got - want).is_zero()

    def test_monomial_density_gains_jacobian(self, field):
        f = field
        m = scale_shift_map(f, 1, f.one())
        got = pushforward(
            m, MixedCellDistribution.from_sb(indicator(f, (f.zero(),), 0))
        )
        want = MixedCellDistribution.from_sb(indicator(f, (f.one(),), 1)).scale(
            CycloScalar.q_pow(f.p, 2)
        )
        assert (got - want).is_zero()

    def test_projection_integrates_dropped_coordinate(self, field):
        f = field
        zero, one = f.zero(), f.one()
        proj = AffineMap(f, ((one, zero),), (zero,))
        got = pushforward(proj, MixedCellDistribution.delta(f, (one, f.uniformizer())))
        assert (got - MixedCellDistribution.delta(f, (one,))).is_zero()
        sq = MixedCellDistribution.from_sb(
            SchwartzBruhat.indicator(Polyball(f, (zero, zero), (0, 0)))
        )
        assert (
            pushforward(proj, sq)
            - MixedCellDistribution.from_sb(indicator(f, (zero,), 0))
        ).is_zero()

    def test_projection_conductor_rule_on_dropped_modulation(self, field):
        f = field
        zero = f.zero()
        proj = AffineMap(f, ((f.one(), zero),), (zero,))
        box = SchwartzBruhat.indicator(Polyball(f, (zero, zero), (0, 1)))
        alive = MixedCellDistribution.modulated_constant(
            f, (zero, f.one())
        ).mul_by_sb(box)
        got = pushforward(proj, alive)
        want = MixedCellDistribution.from_sb(indicator(f, (zero,), 0)).scale(
            CycloScalar.q_pow(f.p, -2)
        )
        assert (got - want).is_zero()
        dead = MixedCellDistribution.modulated_constant(
            f, (zero, f.pow_uniformizer(-5))
        ).mul_by_sb(box)
        assert pushforward(proj, dead).is_zero()

    def test_projection_full_line_not_proper(self, field):
        f = field
        proj = AffineMap(f, ((f.one(), f.zero()),), (f.zero(),))
        with pytest.raises(NotProperOnSupport):
            pushforward(proj, MixedCellDistribution.constant(f, 2))

    def test_inclusion_places_atoms(self, field):
        f = field
        zero, one = f.zero(), f.one()
        incl = AffineMap(f, ((one,), (zero,)), (zero, one))
        got = pushforward(
            incl, MixedCellDistribution.from_sb(indicator(f, (zero,), 0))
        )
        for r in range(3):
            assert got.b_function((zero, one), r) == CycloScalar.q_pow(f.p, -2 * r)
        atom = pushforward(incl, MixedCellDistribution.delta(f, (zero,)))
        assert (atom - MixedCellDistribution.delta(f, (zero, one))).is_zero()

    def test_constant_map_collects_mass(self, field):
        f = field
        cmap = AffineMap(f, ((f.zero(),),), (f.one(),))
        got = pushforward(
            cmap, MixedCellDistribution.from_sb(indicator(f, (f.zero(),), 2))
        )
        want = MixedCellDistribution.delta(f, (f.one(),)).scale(
            CycloScalar.q_pow(f.p, -4)
        )
        assert (got - want).is_zero()
        with pytest.raises(NotProperOnSupport):
            pushforward(cmap, MixedCellDistribution.constant(f, 1))

    def test_functoriality_of_composition(self, field):
        f = field
        w = mixed_sample(f)
        fm = scale_shift_map(f, 1, f.one())
        gm = scale_shift_map(f, 2, f.uniformizer())
        hm = compose(gm, fm)
        # pullback is contravariant
        lhs = pullback(hm, pullback_target := mixed_sample(f))
        rhs = pullback(fm, pullback(gm, pullback_target))
        assert (lhs - rhs).is_zero()
        # pushforward is covariant
        lhs = pushforward(hm, w)
        rhs = pushforward(gm, pushforward(fm, w))
        assert (lhs - rhs).is_zero()

    def test_round_trip_scales_by_jacobian_modulus(self, field):
        f = field
        m = scale_shift_map(f, 1, f.one())
        w = mixed_sample(f)
        want = w.scale(CycloScalar.q_pow(f.p, 2))  # |det|^{-1} = q
        assert (pullback(m, pushforward(m, w)) - want).is_zero()
        assert (pushforward(m, pullback(m, w)) - want).is_zero()

    def test_general_round_trip_via_pairings(self):
        f = make_field("p-adic", 3)
        m = AffineMap.from_ints(f, [[3, 1], [0, 1]], [0, 0])
        u = MixedCellDistribution.from_sb(
            SchwartzBruhat.indicator(Polyball(f, (f.zero(), f.zero()), (0, 0)))
        )
        want = u.scale(CycloScalar.fraction(3, 3))
        probes = [
            SchwartzBruhat.indicator(Polyball(f, (f.zero(), f.zero()), (-1, -1)))
        ]
        for c1 in f.cell_reps(f.zero(), 0, 1):
            for c2 in f.cell_reps(f.zero(), 0, 1):
                probes.append(
                    SchwartzBruhat.indicator(Polyball(f, (c1, c2), (1, 1)))
                )
        for got in (
            pullback(m, pushforward(m, u)),
            pushforward(m, pullback(m, u)),
        ):
            for phi in probes:
                assert got.evaluate(phi) == want.evaluate(phi)


class TestProducts:
    def test_modulations_multiply_to_sum_frequency(self, field):
        f = field
        a, b = f.pow_uniformizer(-1), f.one()
        got = product_dist(
            MixedCellDistribution.modulated_constant(f, (a,)),
            MixedCellDistribution.modulated_constant(f, (b,)),
        )
        want = MixedCellDistribution.modulated_constant(f, (f.add(a, b),))
        assert (got - want).is_zero()

    def test_atom_times_density(self, field):
        f = field
        d0 = MixedCellDistribution.delta(f, (f.zero(),))
        inside = MixedCellDistribution.from_sb(indicator(f, (f.zero(),), 0))
        assert (product_dist(d0, inside) - d0).is_zero()
        outside = MixedCellDistribution.from_sb(indicator(f, (f.one(),), 1))
        assert product_dist(d0, outside).is_zero()

    def test_opposing_singularities_collide(self, field):
        f = field
        d0 = MixedCellDistribution.delta(f, (f.zero(),))
        with pytest.raises(WFCollision):
            product_dist(d0, d0)

    def test_separated_atoms_multiply_to_zero(self, field):
        f = field
        d0 = MixedCellDistribution.delta(f, (f.zero(),))
        d1 = MixedCellDistribution.delta(f, (f.one(),))
        assert product_dist(d0, d1).is_zero()

    def test_dimension_mismatch_rejected(self, field):
        f = field
        with pytest.raises(FieldError):
            product_dist(
                MixedCellDistribution.delta(f, (f.zero(),)),
                MixedCellDistribution.delta(f, (f.zero(), f.zero())),
            )


class TestNormalCone:
    def test_iso_and_projection_are_conormal_free(self, field):
        f = field
        assert normal_cone(scale_shift_map(f, 2, f.one())).is_empty()
        proj = AffineMap(f, ((f.one(), f.zero()),), (f.zero(),))
        assert normal_cone(proj).is_empty()

    def test_constant_map_conormal_is_full_fiber(self, field):
        f = field
        cmap = AffineMap(f, ((f.zero(),),), (f.one(),))
        cone = normal_cone(cmap)
        assert cone.contains((f.one(),), (f.uniformizer(),))
        assert not cone.contains((f.zero(),), (f.one(),))

    def test_inclusion_conormal_pins_kept_codirections(self, field):
        f = field
        zero, one = f.zero(), f.one()
        incl = AffineMap(f, ((one,), (zero,)), (zero, zero))
        cone = normal_cone(incl)
        assert cone.contains((f.uniformizer(), zero), (zero, one))
        assert not cone.contains((zero, one), (zero, one))
        assert not cone.contains((zero, zero), (one, zero))
