"""Distributions on K^n closed under transform, product, and convolution.

A distribution here is a finite sum of *modulated mixed cells*

    coef * psi(<a, x>) * prod_i factor_i(x_i)

where each per-coordinate factor is the indicator density of a ball, the
constant density on the whole line, or a unit point mass.  The class is closed
under the additive-character transform, multiplication by cell functions,
convolution (away from divergent constant*constant pairs), tensor products,
translation and reflection, and pairing with cell functions — all with exact
cyclotomic scalars.

Canonical form: point-mass coordinates absorb their modulation into the
coefficient; ball coordinates truncate the modulation to the conductor of the
ball; terms with identical factor/modulation data merge.  Zero tests on the
scalars make the merge exact, so e.g. a point mass minus itself is the empty
sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .cyclo import CycloScalar
from .fields import FieldError, LocalField, Polyball, ball_intersect_1d, vec_neg
from .schwartz import SchwartzBruhat, coerce_scalar


class ConvolutionDivergence(FieldError):
    """Both convolution operands have infinite mass in some coordinate."""


class NonCompactSupport(FieldError):
    """The operation requires a compactly supported distribution."""


@dataclass(frozen=True, slots=True)
class BallF:
    """Indicator density of the one-dimensional ball B_r(center)."""

    center: object
    r: int


@dataclass(frozen=True, slots=True)
class FullF:
    """Constant density 1 on the whole coordinate line."""


@dataclass(frozen=True, slots=True)
class DeltaF:
    """Unit point mass at a fixed coordinate value."""

    point: object


FULL = FullF()


class MixedCellDistribution:
    """Finite sum of modulated mixed cells on K^n."""

    __slots__ = ("field", "n", "terms")

    def __init__(self, field: LocalField, n: int, raw_terms):
        """raw_terms: iterable of (coef, mod_vector, factor_tuple)."""
        if n < 1:
            raise FieldError("dimension must be at least 1")
        self.field = field
        self.n = n
        merged: dict = {}
        for coef, mod, factors in raw_terms:
            coef, mod, factors = self._canonical_term(field, n, coef, mod, factors)
            if coef.is_zero():
                continue
            key = (mod, factors)
            if key in merged:
                merged[key] = merged[key] + coef
            else:
                merged[key] = coef
        self.terms = tuple(
            (coef, mod, factors)
            for (mod, factors), coef in merged.items()
            if not coef.is_zero()
        )

    @staticmethod
    def _canonical_term(field, n, coef, mod, factors):
        if len(mod) != n or len(factors) != n:
            raise FieldError("term has wrong dimension")
        coef = coerce_scalar(field.p, coef)
        new_mod = []
        new_factors = []
        angle = Fraction(0)
        for a, f in zip(mod, factors):
            if isinstance(f, DeltaF):
                # the character is a constant on a point mass
                angle += field.psi_angle(field.mul(a, f.point))
                new_mod.append(field.zero())
                new_factors.append(f)
            elif isinstance(f, BallF):
                z = field.canon_trunc(f.center, f.r)
                a2 = field.canon_trunc(a, 1 - f.r)
                angle += field.psi_angle(field.mul(field.sub(a, a2), z))
                new_mod.append(a2)
                new_factors.append(BallF(z, f.r))
            elif isinstance(f, FullF):
                new_mod.append(a)
                new_factors.append(f)
            else:
                raise FieldError(f"unknown factor {f!r}")
        return coef.rotate(angle), tuple(new_mod), tuple(new_factors)

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, field: LocalField, n: int) -> "MixedCellDistribution":
        return cls(field, n, [])

    @classmethod
    def delta(cls, field: LocalField, point: Sequence) -> "MixedCellDistribution":
        point = tuple(point)
        n = len(point)
        zero_mod = (field.zero(),) * n
        factors = tuple(DeltaF(c) for c in point)
        return cls(field, n, [(CycloScalar.one(field.p), zero_mod, factors)])

    @classmethod
    def constant(cls, field: LocalField, n: int, coef=1) -> "MixedCellDistribution":
        zero_mod = (field.zero(),) * n
        return cls(field, n, [(coef, zero_mod, (FULL,) * n)])

    @classmethod
    def modulated_constant(cls, field, a: Sequence, coef=1) -> "MixedCellDistribution":
        a = tuple(a)
        return cls(field, len(a), [(coef, a, (FULL,) * len(a))])

    @classmethod
    def from_sb(cls, phi: SchwartzBruhat) -> "MixedCellDistribution":
        field = phi.field
        zero_mod = (field.zero(),) * phi.n
        raw = [
            (
                coef,
                zero_mod,
                tuple(BallF(c, r) for c, r in zip(center, phi.levels)),
            )
            for center, coef in phi.cells.items()
        ]
        return cls(field, phi.n, raw)

    # -- structure -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_density(self) -> bool:
        """No point-mass factors: the distribution is a locally constant function."""
        return all(
            not isinstance(f, DeltaF) for _, _, fs in self.terms for f in fs
        )

    def is_compact(self) -> bool:
        return all(
            not isinstance(f, FullF) for _, _, fs in self.terms for f in fs
        )

    def __add__(self, other: "MixedCellDistribution") -> "MixedCellDistribution":
        if self.field != other.field or self.n != other.n:
            raise FieldError("operands live on different spaces")
        return MixedCellDistribution(
            self.field, self.n, list(self.terms) + list(other.terms)
        )

    def scale(self, value) -> "MixedCellDistribution":
        c = coerce_scalar(self.field.p, value)
        return MixedCellDistribution(
            self.field, self.n,
            [(coef * c, mod, fs) for coef, mod, fs in self.terms],
        )

    def __neg__(self) -> "MixedCellDistribution":
        return self.scale(-1)

    def __sub__(self, other: "MixedCellDistribution") -> "MixedCellDistribution":
        return self + other.scale(-1)

    def reflect(self) -> "MixedCellDistribution":
        """Pullback along x -> -x."""
        field = self.field
        out = []
        for coef, mod, fs in self.terms:
            nfs = tuple(
                BallF(field.neg(f.center), f.r)
                if isinstance(f, BallF)
                else DeltaF(field.neg(f.point))
                if isinstance(f, DeltaF)
                else f
                for f in fs
            )
            out.append((coef, vec_neg(field, mod), nfs))
        return MixedCellDistribution(field, self.n, out)

    def translate(self, v: Sequence) -> "MixedCellDistribution":
        """Shift support by +v (pullback along x -> x - v)."""
        field = self.field
        out = []
        for coef, mod, fs in self.terms:
            nfs = tuple(
                BallF(field.add(f.center, w), f.r)
                if isinstance(f, BallF)
                else DeltaF(field.add(f.point, w))
                if isinstance(f, DeltaF)
                else f
                for f, w in zip(fs, v)
            )
            # psi(<a, x>) composed with x -> x - v picks up psi(-<a, v>)
            pair = field.zero()
            for a, w in zip(mod, v):
                pair = field.add(pair, field.mul(a, w))
            rot = field.psi_angle(field.neg(pair))
            out.append((coef.rotate(rot), mod, nfs))
        return MixedCellDistribution(field, self.n, out)

    # -- pairing ----------------------------------------------------------------

    def evaluate(self, phi: SchwartzBruhat) -> CycloScalar:
        """Exact pairing with a cell function."""
        if phi.field != self.field or phi.n != self.n:
            raise FieldError("test function lives on a different space")
        field, p = self.field, self.field.p
        raw = []
        for coef, mod, fs in self.terms:
            for center, cphi in phi.cells.items():
                qexp = 0
                angle = Fraction(0)
                dead = False
                for i in range(self.n):
                    a, f = mod[i], fs[i]
                    z, lev = center[i], phi.levels[i]
                    if isinstance(f, DeltaF):
                        if field.ord(field.sub(f.point, z)) < lev:
                            dead = True
                            break
                        # canonical terms carry no modulation on point coords
                    elif isinstance(f, BallF):
                        got = ball_intersect_1d(field, z, lev, f.center, f.r)
                        if got is None:
                            dead = True
                            break
                        w, big = got
                        if not field.is_zero(a) and field.ord(a) < 1 - big:
                            dead = True
                            break
                        qexp -= big
                        angle += field.psi_angle(field.mul(a, w))
                    else:  # FullF
                        if not field.is_zero(a) and field.ord(a) < 1 - lev:
                            dead = True
                            break
                        qexp -= lev
                        angle += field.psi_angle(field.mul(a, z))
                if dead:
                    continue
                for e2, ang, c in coef * cphi:
                    raw.append((e2 + 2 * qexp, ang + angle, c))
        return CycloScalar(p, raw)

    def pointwise_eval(self, xs: Sequence) -> CycloScalar:
        """Value at a point; only densities have one."""
        if not self.is_density():
            raise FieldError("pointwise values need a density")
        field = self.field
        total = CycloScalar.zero(field.p)
        for coef, mod, fs in self.terms:
            inside = True
            for x, f in zip(xs, fs):
                if isinstance(f, BallF) and field.ord(field.sub(x, f.center)) < f.r:
                    inside = False
                    break
            if inside:
                total = total + coef * field.psi_pair(mod, xs)
        return total

    def b_function(self, xs: Sequence, r: int) -> CycloScalar:
        """Pairing against the indicator of the radius-r polyball at xs."""
        ball = Polyball.ball(self.field, tuple(xs), r)
        return self.evaluate(SchwartzBruhat.indicator(ball))

    def wavelet(self, xs: Sequence, r: int) -> CycloScalar:
        """Volume-normalized ball pairing q^(r n) <u, 1_{B_r(xs)}>."""
        return self.b_function(xs, r).q_shift(2 * r * self.n)

    # -- calculus ------------------------------------------------------------------

    def fourier_dist(self) -> "MixedCellDistribution":
        """Additive-character transform, term by term.

        Per coordinate: a modulated ball maps to a modulated ball with
        reciprocal radius, a modulated constant to a point mass at minus the
        modulation, and a point mass to a modulated constant.
        """
        field = self.field
        out = []
        for coef, mod, fs in self.terms:
            qexp = 0
            angle = Fraction(0)
            nmod = []
            nfs = []
            for a, f in zip(mod, fs):
                if isinstance(f, BallF):
                    qexp -= f.r
                    angle += field.psi_angle(field.mul(f.center, a))
                    nfs.append(BallF(field.neg(a), 1 - f.r))
                    nmod.append(f.center)
                elif isinstance(f, FullF):
                    qexp -= 1
                    nfs.append(DeltaF(field.neg(a)))
                    nmod.append(field.zero())
                else:  # DeltaF
                    nfs.append(FULL)
                    nmod.append(f.point)
            out.append(
                (coef.q_shift(2 * qexp).rotate(angle), tuple(nmod), tuple(nfs))
            )
        return MixedCellDistribution(field, self.n, out)

    def mul_by_sb(self, phi: SchwartzBruhat) -> "MixedCellDistribution":
        """Localize by a cell function (exact product)."""
        if phi.field != self.field or phi.n != self.n:
            raise FieldError("cell function lives on a different space")
        field = self.field
        out = []
        for coef, mod, fs in self.terms:
            for center, cphi in phi.cells.items():
                nfs = []
                dead = False
                for i in range(self.n):
                    f = fs[i]
                    z, lev = center[i], phi.levels[i]
                    if isinstance(f, DeltaF):
                        if field.ord(field.sub(f.point, z)) < lev:
                            dead = True
                            break
                        nfs.append(f)
                    elif isinstance(f, BallF):
                        got = ball_intersect_1d(field, z, lev, f.center, f.r)
                        if got is None:
                            dead = True
                            break
                        nfs.append(BallF(got[0], got[1]))
                    else:
                        nfs.append(BallF(z, lev))
                if not dead:
                    out.append((coef * cphi, mod, tuple(nfs)))
        return MixedCellDistribution(field, self.n, out)

    def convolve_dist(self, other: "MixedCellDistribution") -> "MixedCellDistribution":
        """Exact convolution; diverges only for constant*constant coordinates."""
        if self.field != other.field or self.n != other.n:
            raise FieldError("operands live on different spaces")
        field = self.field
        out = []
        for coef1, mod1, fs1 in self.terms:
            for coef2, mod2, fs2 in other.terms:
                coef = coef1 * coef2
                qexp = 0
                angle = Fraction(0)
                nmod = []
                nfs = []
                dead = False
                for a, f, b, g in zip(mod1, fs1, mod2, fs2):
                    c = field.sub(a, b)
                    if isinstance(f, DeltaF) or isinstance(g, DeltaF):
                        if isinstance(g, DeltaF) and not isinstance(f, DeltaF):
                            # swap so f is the point mass, flipping the sign of c
                            f, g, a, b, c = g, f, b, a, field.neg(c)
                        angle += field.psi_angle(field.mul(c, f.point))
                        nmod.append(b)
                        if isinstance(g, DeltaF):
                            nfs.append(DeltaF(field.add(f.point, g.point)))
                        elif isinstance(g, BallF):
                            nfs.append(BallF(field.add(g.center, f.point), g.r))
                        else:
                            nfs.append(FULL)
                    elif isinstance(f, FullF) and isinstance(g, FullF):
                        raise ConvolutionDivergence(
                            "both operands have infinite mass in a coordinate"
                        )
                    elif isinstance(f, FullF) or isinstance(g, FullF):
                        if isinstance(f, FullF):
                            f, g, a, b, c = g, f, b, a, field.neg(c)
                        # f is a ball, g the constant: mass of the modulated ball
                        if not field.is_zero(c) and field.ord(c) < 1 - f.r:
                            dead = True
                            break
                        qexp -= f.r
                        angle += field.psi_angle(field.mul(c, f.center))
                        nmod.append(b)
                        nfs.append(FULL)
                    else:
                        # two balls; the finer one contributes its mass
                        if g.r > f.r:
                            f, g, a, b, c = g, f, b, a, field.neg(c)
                        if not field.is_zero(c) and field.ord(c) < 1 - f.r:
                            dead = True
                            break
                        qexp -= f.r
                        angle += field.psi_angle(field.mul(c, f.center))
                        nmod.append(b)
                        nfs.append(BallF(field.add(f.center, g.center), g.r))
                if dead:
                    continue
                out.append(
                    (coef.q_shift(2 * qexp).rotate(angle), tuple(nmod), tuple(nfs))
                )
        return MixedCellDistribution(field, self.n, out)

    def tensor(self, other: "MixedCellDistribution") -> "MixedCellDistribution":
        if self.field != other.field:
            raise FieldError("operands live over different fields")
        out = []
        for coef1, mod1, fs1 in self.terms:
            for coef2, mod2, fs2 in other.terms:
                out.append((coef1 * coef2, mod1 + mod2, fs1 + fs2))
        return MixedCellDistribution(self.field, self.n + other.n, out)

    # -- support data ---------------------------------------------------------------

    def support_regions(self) -> list[tuple]:
        """Per-term support descriptors (exact up to cancellation between
        differently shaped decompositions of the same density)."""
        out = []
        for _, _, fs in self.terms:
            region = tuple(
                ("point", f.point)
                if isinstance(f, DeltaF)
                else ("ball", f.center, f.r)
                if isinstance(f, BallF)
                else ("full",)
                for f in fs
            )
            out.append(region)
        return out

    def singular_regions(self) -> list[tuple]:
        """Support descriptors of the point-mass-carrying terms."""
        out = []
        for _, _, fs in self.terms:
            if any(isinstance(f, DeltaF) for f in fs):
                region = tuple(
                    ("point", f.point)
                    if isinstance(f, DeltaF)
                    else ("ball", f.center, f.r)
                    if isinstance(f, BallF)
                    else ("full",)
                    for f in fs
                )
                out.append(region)
        return out

    def singular_points(self) -> set:
        """Exact point set for purely atomic distributions."""
        if not all(
            isinstance(f, DeltaF) for _, _, fs in self.terms for f in fs
        ):
            raise FieldError("singular point set needs a purely atomic distribution")
        return {tuple(f.point for f in fs) for _, _, fs in self.terms}

    def paley_wiener(self) -> "MixedCellDistribution":
        """Transform of a compactly supported distribution, as a function.

        The result carries no point masses, so pointwise_eval is available.
        """
        if not self.is_compact():
            raise NonCompactSupport(
                "the transform is a function only for compact support"
            )
        return self.fourier_dist()

    # -- serialization ---------------------------------------------------------------

    def to_json(self) -> dict:
        field = self.field
        terms = []
        for coef, mod, fs in self.terms:
            factors = []
            for f in fs:
                if isinstance(f, BallF):
                    factors.append(
                        {
                            "type": "ball",
                            "center": field.element_to_json(f.center),
                            "radius": f.r,
                        }
                    )
                elif isinstance(f, DeltaF):
                    factors.append(
                        {"type": "delta", "point": field.element_to_json(f.point)}
                    )
                else:
                    factors.append({"type": "full"})
            terms.append(
                {
                    "coef": coef.to_json(),
                    "mod": [field.element_to_json(a) for a in mod],
                    "factors": factors,
                }
            )
        return {"field": field.to_json(), "n": self.n, "terms": terms}

    @classmethod
    def from_json(cls, field: LocalField, obj: dict) -> "MixedCellDistribution":
        raw = []
        for t in obj["terms"]:
            coef = CycloScalar.from_json(field.p, t["coef"])
            mod = tuple(field.element_from_json(a) for a in t["mod"])
            factors = []
            for f in t["factors"]:
                if f["type"] == "ball":
                    factors.append(
                        BallF(field.element_from_json(f["center"]), int(f["radius"]))
                    )
                elif f["type"] == "delta":
                    factors.append(DeltaF(field.element_from_json(f["point"])))
                elif f["type"] == "full":
                    factors.append(FULL)
                else:
                    raise FieldError(f"unknown factor type {f['type']!r}")
            raw.append((coef, mod, tuple(factors)))
        return cls(field, int(obj["n"]), raw)

    def __repr__(self) -> str:
        return (
            f"MixedCellDistribution({self.field!r}, n={self.n}, "
            f"terms={len(self.terms)})"
        )


class SeriesDistribution:
    """Lazily summed series of mixed-cell terms with exact finite pairings.

    ``term_fn(k)`` returns the k-th summand; ``active_fn(phi)`` returns the
    finite set of indices that can pair nonzero with the cell function phi.
    Pairings are therefore finite sums of exact pairings.
    """

    __slots__ = ("field", "n", "term_fn", "active_fn")

    def __init__(self, field: LocalField, n: int, term_fn, active_fn):
        self.field = field
        self.n = n
        self.term_fn = term_fn
        self.active_fn = active_fn

    def evaluate(self, phi: SchwartzBruhat) -> CycloScalar:
        total = CycloScalar.zero(self.field.p)
        for k in self.active_fn(phi):
            total = total + self.term_fn(k).evaluate(phi)
        return total

    def b_function(self, xs: Sequence, r: int) -> CycloScalar:
        ball = Polyball.ball(self.field, tuple(xs), r)
        return self.evaluate(SchwartzBruhat.indicator(ball))

    def partial_sum(self, count: int) -> MixedCellDistribution:
        out = MixedCellDistribution.zero(self.field, self.n)
        for k in range(count):
            out = out + self.term_fn(k)
        return out


class BFunctionView:
    """A distribution presented through its ball function.

    ``fn(xs, r)`` must return the pairing of the underlying distribution
    with the indicator of the radius-r polyball at xs; it therefore has to
    depend only on the ball (not on the chosen center) and be additive
    across a partition of the ball into cosets.  ``additivity_check``
    verifies the latter for a concrete ball; ``evaluate`` extends the view
    to arbitrary cell functions by refining them to a single level and
    summing the per-cell ball values.
    """

    __slots__ = ("field", "n", "fn", "label")

    def __init__(self, field: LocalField, n: int, fn, label: str = ""):
        self.field = field
        self.n = int(n)
        self.fn = fn
        self.label = label

    def b_function(self, xs: Sequence, r: int) -> CycloScalar:
        xs = tuple(xs)
        if len(xs) != self.n:
            raise FieldError(f"expected {self.n} coordinates, got {len(xs)}")
        return coerce_scalar(self.field.p, self.fn(xs, int(r)))

    def wavelet(self, xs: Sequence, r: int) -> CycloScalar:
        """Volume-normalized ball pairing q^(r n) <u, 1_{B_r(xs)}>."""
        return self.b_function(xs, r).q_shift(2 * int(r) * self.n)

    def evaluate(self, phi: SchwartzBruhat) -> CycloScalar:
        """Pair with a cell function cell by cell at its finest level."""
        if phi.field != self.field or phi.n != self.n:
            raise FieldError("test function lives on a different space")
        total = CycloScalar.zero(self.field.p)
        if not phi.cells:
            return total
        level = max(phi.levels)
        flat = phi.refine(level)
        for center, coef in flat.cells.items():
            total = total + coerce_scalar(self.field.p, coef) * self.fn(
                center, level
            )
        return total

    def __repr__(self) -> str:
        tag = f" {self.label!r}" if self.label else ""
        return f"<ball-function view{tag} on {self.field!r}^{self.n}>"


def additivity_check(u, ball: Polyball) -> bool:
    """Does the ball function split across the coset partition of the ball?

    Compares the value on the ball with the sum of the values on its
    q^n immediate subcells.  ``u`` is anything with a ``b_function``
    method; the ball must have equal radii in all coordinates so that the
    subcells are again polyballs of a single radius.
    """
    radii = set(ball.radii)
    if len(radii) != 1:
        raise FieldError("additivity check needs a ball with uniform radii")
    r = next(iter(radii))
    parent = u.b_function(ball.centers, r)
    total = CycloScalar.zero(ball.field.p)
    for child in ball.children():
        total = total + u.b_function(child.centers, r + 1)
    return (parent - total).is_zero()
