"""Oscillatory integrals and certified stationary-phase support bounds."""

from __future__ import annotations

from fractions import Fraction

import pytest

from conftest import rng_for
from umla.cyclo import CycloScalar
from umla.fields import FieldError, Polyball
from umla.microlocal import (
    PhaseCertificationError,
    oscillatory_integral,
    stationary_phase_bound,
)
from umla.polys import parse_poly
from umla.schwartz import SchwartzBruhat


def indicator(field, center, r):
    return SchwartzBruhat.indicator(Polyball.ball(field, center, r))


def unit_eta_ball(field):
    return Polyball.ball(field, (field.one(),), 1)


def brute_integral(field, p, center, r, level, eta, lam):
    """Riemann refinement: exact once the phase is locally constant."""
    total = CycloScalar.zero(field.p)
    vol = CycloScalar.q_pow(field.p, -2 * level * len(center))
    from itertools import product as iproduct

    axes = [field.cell_reps(c, r, level) for c in center]
    for point in iproduct(*axes):
        val = p.eval_field(field, tuple(point) + tuple(eta))
        total = total + vol * field.psi(field.mul(lam, val))
    return total


class TestOscillatoryIntegral:
    def test_linear_phase_follows_conductor_rule(self, field):
        f = field
        p = parse_poly("x*e", ("x", "e"))
        rng = rng_for("phase-linear")
        for _ in range(30):
            r = rng.randrange(0, 3)
            c = f.mul(f.pow_uniformizer(rng.randrange(-1, 2)), f.from_int(1 + rng.randrange(3)))
            lam = f.mul(
                f.pow_uniformizer(rng.randrange(-2, 3)),
                f.residue_lift(rng.choice(f.unit_classes(1))),
            )
            eta = f.residue_lift(rng.choice(f.unit_classes(1)))
            got = oscillatory_integral(p, indicator(f, (c,), r), (eta,), lam)
            if f.ord(f.mul(lam, eta)) >= 1 - r:
                want = CycloScalar.q_pow(f.p, -2 * r) * f.psi(
                    f.mul(lam, f.mul(c, eta))
                )
            else:
                want = CycloScalar.zero(f.p)
            assert got == want

    def test_matches_riemann_refinement(self, field):
        f = field
        rng = rng_for("phase-riemann")
        pool = [
            parse_poly("x^2*e + x", ("x", "e")),
            parse_poly("x^3", ("x", "e")),
            parse_poly("x^2 + x*e", ("x", "e")),
        ]
        for _ in range(8):
            p = pool[rng.randrange(len(pool))]
            r = rng.randrange(0, 2)
            c = f.pow_uniformizer(rng.randrange(0, 2))
            lam = f.pow_uniformizer(rng.randrange(-2, 2))
            eta = f.residue_lift(rng.choice(f.unit_classes(1)))
            got = oscillatory_integral(p, indicator(f, (c,), r), (eta,), lam)
            deep = brute_integral(f, p, (c,), r, r + 3, (eta,), lam)
            deeper = brute_integral(f, p, (c,), r, r + 4, (eta,), lam)
            assert deep == deeper  # refinement has stabilized
            assert got == deep

    def test_two_dimensional_riemann_agreement(self, field):
        f = field
        p = parse_poly("x^2 + x*y + y*e", ("x", "y", "e"))
        phi = SchwartzBruhat.indicator(
            Polyball(f, (f.zero(), f.one()), (0, 0))
        )
        lam = f.pow_uniformizer(-1)
        eta = f.one()
        got = oscillatory_integral(p, phi, (eta,), lam)
        from itertools import product as iproduct

        total = CycloScalar.zero(f.p)
        vol = CycloScalar.q_pow(f.p, -2 * 3 * 2)
        for x, y in iproduct(
            f.cell_reps(f.zero(), 0, 3), f.cell_reps(f.one(), 0, 3)
        ):
            val = p.eval_field(f, (x, y, eta))
            total = total + vol * f.psi(f.mul(lam, val))
        assert got == total

    def test_zero_scale_reduces_to_volume(self, field):
        f = field
        p = parse_poly("x^2*e", ("x", "e"))
        phi = indicator(f, (f.one(),), 2)
        got = oscillatory_integral(p, phi, (f.one(),), f.zero())
        assert got == phi.integrate()

    def test_wrong_arity_rejected(self, field):
        f = field
        p = parse_poly("x^2", ("x",))
        with pytest.raises(FieldError):
            oscillatory_integral(p, indicator(f, (f.zero(),), 0), (f.one(),), f.one())

    def test_budget_guard(self, field):
        f = field
        p = parse_poly("x^2*e", ("x", "e"))
        phi = indicator(f, (f.zero(),), 0)
        with pytest.raises(FieldError):
            oscillatory_integral(
                p, phi, (f.one(),), f.pow_uniformizer(-8), budget=2
            )


class TestStationaryPhaseBound:
    def test_linear_phase_unit_ball(self, field):
        f = field
        p = parse_poly("x*e", ("x", "e"))
        rep = stationary_phase_bound(p, indicator(f, (f.zero(),), 0), unit_eta_ball(f), 1)
        assert rep.threshold == 1
        assert rep.r == -1
        assert rep.grad_ord_bound == 0
        assert rep.verification["all_zero"] is True
        assert rep.verification["integrals_checked"] > 0
        # tight: at the threshold order the integral is nonzero
        lam = f.uniformizer()
        assert not oscillatory_integral(p, indicator(f, (f.zero(),), 0), (f.one(),), lam).is_zero()

    def test_deeper_support_shifts_window(self, field):
        f = field
        p = parse_poly("x*e", ("x", "e"))
        phi = indicator(f, (f.zero(),), 2)
        rep = stationary_phase_bound(p, phi, unit_eta_ball(f), 1)
        assert rep.threshold == -1
        assert rep.r == 1
        assert not oscillatory_integral(p, phi, (f.one(),), f.pow_uniformizer(-1)).is_zero()
        assert oscillatory_integral(p, phi, (f.one(),), f.pow_uniformizer(-2)).is_zero()

    def test_quadratic_phase_tight_threshold(self, field):
        f = field
        p = parse_poly("x^2*e", ("x", "e"))
        phi = indicator(f, (f.one(),), 1)  # units congruent to 1
        two_ord = f.ord(f.from_int(2))  # the gradient carries a factor 2
        delta = Fraction(1, f.q**two_ord)
        rep = stationary_phase_bound(p, phi, unit_eta_ball(f), delta)
        assert rep.grad_ord_bound == two_ord
        want_threshold = 1 - max(1, two_ord + 1) - two_ord
        assert rep.threshold == want_threshold
        # tightness on both sides of the certified threshold
        at = f.pow_uniformizer(rep.threshold)
        below = f.pow_uniformizer(rep.threshold - 1)
        assert not oscillatory_integral(p, phi, (f.one(),), at).is_zero()
        assert oscillatory_integral(p, phi, (f.one(),), below).is_zero()

    def test_two_dimensional_linear_phase(self, field):
        f = field
        p = parse_poly("x*e + y*e", ("x", "y", "e"))
        phi = SchwartzBruhat.indicator(Polyball(f, (f.zero(), f.zero()), (0, 0)))
        rep = stationary_phase_bound(p, phi, unit_eta_ball(f), 1)
        assert rep.r == -1
        lam = f.uniformizer()
        assert not oscillatory_integral(p, phi, (f.one(),), lam).is_zero()

    def test_vanishing_gradient_cannot_certify(self, field):
        f = field
        p = parse_poly("x^2*e", ("x", "e"))
        phi = indicator(f, (f.zero(),), 0)  # support contains the critical point
        with pytest.raises(PhaseCertificationError) as exc:
            stationary_phase_bound(p, phi, unit_eta_ball(f), Fraction(1, f.q**3), budget=60)
        assert exc.value.witness is not None

    def test_constant_phase_rejected(self, field):
        f = field
        p = parse_poly("e", ("x", "e"))
        with pytest.raises(PhaseCertificationError):
            stationary_phase_bound(p, indicator(f, (f.zero(),), 0), unit_eta_ball(f), 1)

    def test_nonpositive_delta_rejected(self, field):
        f = field
        p = parse_poly("x*e", ("x", "e"))
        with pytest.raises(FieldError):
            stationary_phase_bound(p, indicator(f, (f.zero(),), 0), unit_eta_ball(f), 0)

    def test_certified_window_spot_checks(self, field):
        # independent re-check of the certificate: random scalings strictly
        # below the threshold integrate to zero for every sampled parameter
        f = field
        rng = rng_for("phase-window")
        p = parse_poly("x^2*e", ("x", "e"))
        phi = indicator(f, (f.one(),), 1)
        two_ord = f.ord(f.from_int(2))
        rep = stationary_phase_bound(
            p, phi, unit_eta_ball(f), Fraction(1, f.q**two_ord)
        )
        for _ in range(10):
            e = rep.threshold - 1 - rng.randrange(3)
            lam = f.mul(
                f.pow_uniformizer(e),
                f.residue_lift(rng.choice(f.unit_classes(1))),
            )
            eta = f.add(f.one(), f.mul(f.uniformizer(), f.from_int(rng.randrange(3))))
            assert oscillatory_integral(p, phi, (eta,), lam).is_zero()

    def test_report_serialization(self, field):
        f = field
        p = parse_poly("x*e", ("x", "e"))
        rep = stationary_phase_bound(p, indicator(f, (f.zero(),), 0), unit_eta_ball(f), 1)
        obj = rep.to_json()
        assert obj["r"] == rep.r
        assert obj["threshold"] == rep.threshold
        assert obj["verification"]["all_zero"] is True
        assert isinstance(obj["rest_profile"], list)
