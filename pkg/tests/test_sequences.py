"""Cone-aware convergence diagnostics on finite sequence windows."""

from __future__ import annotations

import pytest

from umla.cyclo import CycloScalar
from umla.distribution import MixedCellDistribution
from umla.fields import FieldError, Polyball, make_field
from umla.microlocal import (
    AffineMap,
    BasePoint,
    LambdaCone,
    LambdaSubgroup,
    OrbitRayCell,
    TaggedCell,
    pullback,
    sgamma_convergence_check,
)
from umla.schwartz import SchwartzBruhat


def indicator(field, center, r):
    return SchwartzBruhat.indicator(Polyball.ball(field, center, r))


def creeping_indicators(field, count):
    """q**(r/2) 1_{B_r(0)} for r = 0..count-1: pairs to zero, decay drifts."""
    return [
        MixedCellDistribution.from_sb(indicator(field, (field.zero(),), r)).scale(
            CycloScalar.q_pow(field.p, r)
        )
        for r in range(count)
    ]


def full_ray_cone(field):
    sub = LambdaSubgroup.full(field, m=1)
    return LambdaCone(
        field, 1, (OrbitRayCell(field, (field.zero(),), (field.one(),), sub),)
    )


def origin_fiber_cone(field):
    """All codirections over the origin, in the tagged-cell presentation."""
    return LambdaCone(
        field, 1, (TaggedCell(field, (BasePoint(field.zero()),), (True,)),)
    )


class TestClassicalCounterexample:
    """The sequence that converges distributionally but not cone-aware."""

    def test_pairings_tend_to_limit(self, field):
        f = field
        members = creeping_indicators(f, 11)
        rep = sgamma_convergence_check(
            members,
            LambdaCone.empty(f, 1),
            LambdaSubgroup.full(f, m=1),
            test_functions=[indicator(f, (f.zero(),), 0)],
        )
        assert all(rep.membership)
        probe = rep.pairings[0]
        assert probe.diagnosis == "tends_to_limit"
        for r, v in enumerate(probe.values):
            assert v == CycloScalar.q_pow(f.p, -r)

    def test_uniform_decay_fails_with_drifting_thresholds(self):
        f = make_field("p-adic", 2)
        members = creeping_indicators(f, 11)
        rep = sgamma_convergence_check(
            members,
            LambdaCone.empty(f, 1),
            LambdaSubgroup.full(f, m=1),
            test_functions=[indicator(f, (f.zero(),), 0)],
            ray_probes=[((f.zero(),), (f.one(),))],
        )
        assert rep.verdict == "fails_uniform_decay"
        ray = rep.rays[0]
        assert ray.diagnosis == "fails_in_window"
        assert ray.uniform_level is None
        rows = {row["level"]: row for row in ray.levels}
        # at localization level 3 the member thresholds drift past the level:
        # 1 - max(r, 3) freezes at -2 for r <= 3 and then falls with r
        assert rows[3]["verdict"] == "drifting"
        assert rows[3]["thresholds"] == [-2, -2, -2, -2, -3, -4, -5, -6, -7, -8, -9]
        assert all(rows[s]["verdict"] == "drifting" for s in rows)

    def test_deep_localization_hides_drift_in_finite_window(self):
        # the honesty caveat: localizing below every support radius in the
        # window makes the thresholds agree, so a deep search reports
        # uniformity that a longer sequence window would break
        f = make_field("p-adic", 2)
        members = creeping_indicators(f, 11)
        rep = sgamma_convergence_check(
            members,
            LambdaCone.empty(f, 1),
            LambdaSubgroup.full(f, m=1),
            ray_probes=[((f.zero(),), (f.one(),))],
            search_depth=12,
        )
        ray = rep.rays[0]
        assert ray.diagnosis == "holds_in_window"
        assert ray.uniform_level == 10
        assert ray.uniform_threshold == -9

    def test_pullback_under_constant_map_diverges(self, field):
        f = field
        cmap = AffineMap(f, ((f.zero(),),), (f.zero(),))
        members = [pullback(cmap, u) for u in creeping_indicators(f, 9)]
        rep = sgamma_convergence_check(
            members,
            LambdaCone.empty(f, 1),
            LambdaSubgroup.full(f, m=1),
            test_functions=[indicator(f, (f.zero(),), 0)],
        )
        probe = rep.pairings[0]
        assert probe.diagnosis == "diverges"
        for r, v in enumerate(probe.values):
            assert v == CycloScalar.q_pow(f.p, r)
        assert rep.verdict == "fails_pairings"


class TestConvergingSequences:
    def test_constant_atom_sequence_converges(self, field):
        f = field
        d0 = MixedCellDistribution.delta(f, (f.zero(),))
        rep = sgamma_convergence_check(
            [d0] * 8,
            origin_fiber_cone(f),
            LambdaSubgroup.full(f, m=1),
            test_functions=[indicator(f, (f.zero(),), 0)],
            ray_probes=[((f.one(),), (f.one(),))],
            limit=d0,
        )
        assert rep.verdict == "converges_in_window"
        assert all(rep.membership)
        assert rep.pairings[0].diagnosis == "constant_equal"
        ray = rep.rays[0]
        assert ray.diagnosis == "holds_in_window"
        assert ray.uniform_level == 1
        assert ray.uniform_threshold is None  # localizations are vacuous

    def test_eventually_constant_sequence_stabilizes(self, field):
        f = field
        bump = MixedCellDistribution.from_sb(indicator(f, (f.one(),), 1))
        tail = MixedCellDistribution.from_sb(indicator(f, (f.zero(),), 0))
        members = [bump + tail] + [tail] * 7
        rep = sgamma_convergence_check(
            members,
            LambdaCone.empty(f, 1),
            LambdaSubgroup.full(f, m=1),
            test_functions=[indicator(f, (f.zero(),), 0)],
            limit=tail,
        )
        assert rep.pairings[0].diagnosis == "stabilizes"
        assert rep.verdict == "converges_in_window"

    def test_wrong_limit_reported_off_limit(self, field):
        f = field
        tail = MixedCellDistribution.from_sb(indicator(f, (f.zero(),), 0))
        rep = sgamma_convergence_check(
            [tail] * 6,
            LambdaCone.empty(f, 1),
            LambdaSubgroup.full(f, m=1),
            test_functions=[indicator(f, (f.zero(),), 0)],
        )
        assert rep.pairings[0].diagnosis == "stabilizes_off_limit"
        assert rep.verdict == "fails_pairings"


class TestFailureCombinations:
    def test_both_conditions_fail_together(self, field):
        f = field
        members = [
            MixedCellDistribution.from_sb(indicator(f, (f.zero(),), r)).scale(
                CycloScalar.q_pow(f.p, 2 * r)
            )
            for r in range(9)
        ]
        rep = sgamma_convergence_check(
            members,
            LambdaCone.empty(f, 1),
            LambdaSubgroup.full(f, m=1),
            test_functions=[indicator(f, (f.zero(),), 0)],
            ray_probes=[((f.zero(),), (f.one(),))],
        )
        assert rep.pairings[0].diagnosis == "stabilizes_off_limit"
        assert rep.rays[0].diagnosis == "fails_in_window"
        assert rep.verdict == "fails_both"

    def test_nonvanishing_ray_witness(self, field):
        f = field
        d0 = MixedCellDistribution.delta(f, (f.zero(),))
        rep = sgamma_convergence_check(
            [d0] * 4,
            LambdaCone.empty(f, 1),
            LambdaSubgroup.full(f, m=1),
            ray_probes=[((f.zero(),), (f.one(),))],
        )
        assert not any(rep.membership)  # the atom is not in the empty cone
        ray = rep.rays[0]
        assert ray.diagnosis == "fails_in_window"
        assert all(row["verdict"] == "nonvanishing" for row in ray.levels)
        assert rep.verdict == "fails_uniform_decay"

    def test_no_probes_verdict(self, field):
        f = field
        rep = sgamma_convergence_check(
            [MixedCellDistribution.constant(f, 1)] * 3,
            LambdaCone.empty(f, 1),
            LambdaSubgroup.full(f, m=1),
        )
        assert rep.verdict == "no_probes"


class TestValidation:
    def test_empty_window_rejected(self, field):
        with pytest.raises(FieldError):
            sgamma_convergence_check(
                [], LambdaCone.empty(field, 1), LambdaSubgroup.full(field, m=1)
            )

    def test_mixed_spaces_rejected(self, field):
        f = field
        with pytest.raises(FieldError):
            sgamma_convergence_check(
                [
                    MixedCellDistribution.constant(f, 1),
                    MixedCellDistribution.constant(f, 2, 1),
                ],
                LambdaCone.empty(f, 1),
                LambdaSubgroup.full(f, m=1),
            )

    def test_probe_inside_cone_rejected(self, field):
        f = field
        d0 = MixedCellDistribution.delta(f, (f.zero(),))
        with pytest.raises(FieldError):
            sgamma_convergence_check(
                [d0] * 3,
                full_ray_cone(f),
                LambdaSubgroup.full(f, m=1),
                ray_probes=[((f.zero(),), (f.one(),))],
            )

    def test_report_serialization(self, field):
        f = field
        members = creeping_indicators(f, 5)
        rep = sgamma_convergence_check(
            members,
            LambdaCone.empty(f, 1),
            LambdaSubgroup.full(f, m=1),
            test_functions=[indicator(f, (f.zero(),), 0)],
            ray_probes=[((f.zero(),), (f.one(),))],
        )
        obj = rep.to_json(f)
        assert set(obj) == {"membership", "pairings", "rays", "verdict"}
        assert obj["verdict"] == rep.verdict
        assert obj["rays"][0]["levels"][0]["level"] == 1
