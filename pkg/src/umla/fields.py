"""Local fields of the two classical kinds: Q_p and F_p((t)), with exact elements.

Elements of Q_p are plain `Fraction`s (every rational embeds, and every value
produced by the operations here stays rational).  Elements of F_p((t)) are
`LaurentPoly` instances: finite Laurent polynomials over Z/p, which is the
exact fragment all operations below stay inside.

Conventions (shared by everything downstream):
  * ord is the normalized valuation, ord(uniformizer) = 1, ord(0) = +inf;
  * |x| = q^(-ord x) with q = p the residue cardinality;
  * the ball B_r(c) is {x : ord(x - c) >= r}, "valuative radius" r, so larger
    r means a smaller ball and vol(B_r) = q^(-r);
  * the additive character psi is trivial on the maximal ideal and nontrivial
    on the ring of integers: psi(x) = e^(2 pi i frac(x/p)) on Q_p with frac the
    p-part fractional part, and psi(sum a_i t^i) = e^(2 pi i a_0 / p) on
    F_p((t)).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence, Union

from .cyclo import CycloScalar

__all__ = [
    "INF",
    "FieldError",
    "FieldDivisionError",
    "LaurentPoly",
    "LocalField",
    "PAdicField",
    "LaurentField",
    "make_field",
    "field_from_json",
    "parse_field_spec",
    "Polyball",
]

INF = float("inf")


class FieldError(ValueError):
    """Bad element or operation for a local field."""


class FieldDivisionError(FieldError):
    """Division result is not representable exactly."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _vp(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


class LaurentPoly:
    """Finite Laurent polynomial over Z/p; immutable and hashable."""

    __slots__ = ("p", "coeffs")

    def __init__(self, p: int, coeffs: Iterable[tuple[int, int]] = ()):
        cleaned = {}
        for e, c in coeffs:
            c %= p
            if c:
                cleaned[int(e)] = (cleaned.get(int(e), 0) + c) % p
        object.__setattr__(self, "p", p)
        object.__setattr__(
            self, "coeffs", tuple(sorted((e, c) for e, c in cleaned.items() if c))
        )

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("LaurentPoly is immutable")

    def is_zero(self) -> bool:
        return not self.coeffs

    def ord(self):
        return self.coeffs[0][0] if self.coeffs else INF

    def coeff(self, e: int) -> int:
        for ee, c in self.coeffs:
            if ee == e:
                return c
        return 0

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        return LaurentPoly(self.p, list(self.coeffs) + list(other.coeffs))

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly(self.p, [(e, -c) for e, c in self.coeffs])

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return self + (-other)

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        out: dict[int, int] = {}
        for e1, c1 in self.coeffs:
            for e2, c2 in other.coeffs:
                e = e1 + e2
                out[e] = (out.get(e, 0) + c1 * c2) % self.p
        return LaurentPoly(self.p, out.items())

    def shift(self, e: int) -> "LaurentPoly":
        """Multiply by t^e."""
        return LaurentPoly(self.p, [(ee + e, c) for ee, c in self.coeffs])

    def truncate(self, r: int) -> "LaurentPoly":
        """Drop all terms of exponent >= r."""
        return LaurentPoly(self.p, [(e, c) for e, c in self.coeffs if e < r])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LaurentPoly)
            and self.p == other.p
            and self.coeffs == other.coeffs
        )

    def __hash__(self) -> int:
        return hash((self.p, self.coeffs))

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        return "+".join(
            (f"{c}" if e == 0 else f"{c}*t^{e}" if c != 1 else f"t^{e}")
            for e, c in self.coeffs
        )


Element = Union[Fraction, LaurentPoly]


class LocalField:
    """Base class; subclasses fix the element representation."""

    kind: str
    p: int

    @property
    def q(self) -> int:
        return self.p

    # -- element constructors -------------------------------------------

    def zero(self) -> Element:
        raise NotImplementedError

    def one(self) -> Element:
        return self.from_int(1)

    def from_int(self, n: int) -> Element:
        raise NotImplementedError

    def uniformizer(self) -> Element:
        raise NotImplementedError

    def pow_uniformizer(self, e: int) -> Element:
        raise NotImplementedError

    # -- arithmetic -------------------------------------------------------

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def is_zero(self, a) -> bool:
        raise NotImplementedError

    def invert(self, a) -> Element:
        raise NotImplementedError

    def power(self, a, e: int) -> Element:
        if e < 0:
            return self.power(self.invert(a), -e)
        out, base = self.one(), a
        while e:
            if e & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            e >>= 1
        return out

    # -- valuation, angular component, truncation -------------------------

    def ord(self, a):
        raise NotImplementedError

    def ac(self, a, m: int) -> int:
        """Angular component mod uniformizer^m, encoded as an int in [0, q^m).

        For Q_p the encoding is the integer residue; for F_p((t)) the residue
        polynomial c_0 + c_1 t + ... is encoded as sum c_i p^i.
        """
        raise NotImplementedError

    def canon_trunc(self, a, r: int) -> Element:
        """Canonical representative of a modulo uniformizer^r (digits below r)."""
        raise NotImplementedError

    # -- additive character ------------------------------------------------

    def psi_angle(self, a) -> Fraction:
        raise NotImplementedError

    def psi(self, a) -> CycloScalar:
        return CycloScalar.root(self.p, self.psi_angle(a))

    def psi_pair(self, xs: Sequence, ys: Sequence) -> CycloScalar:
        """psi of the standard pairing sum x_i y_i."""
        acc = self.zero()
        for x, y in zip(xs, ys, strict=True):
            acc = self.add(acc, self.mul(x, y))
        return self.psi(acc)

    # -- residue classes ----------------------------------------------------

    def unit_classes(self, m: int) -> list[int]:
        """Encodings of (O/uniformizer^m)^*, sorted."""
        raise NotImplementedError

    def residue_mul(self, a: int, b: int, m: int) -> int:
        raise NotImplementedError

    def residue_lift(self, a: int) -> Element:
        """Canonical element representing an encoded residue."""
        raise NotImplementedError

    def unit_inverse_mod(self, a, m: int) -> Element:
        """Inverse of the unit a modulo uniformizer^m (exact representative)."""
        raise NotImplementedError

    # -- cells --------------------------------------------------------------

    def cell_reps(self, center, r: int, level: int) -> list[Element]:
        """Canonical centers of the level-`level` subcells of B_r(center)."""
        if level < r:
            raise ValueError("refinement level must be at least the radius")
        c0 = self.canon_trunc(center, level)
        reps = []
        for k in range(self.q ** (level - r)):
            offset = self.zero()
            kk, e = k, r
            while kk:
                offset = self.add(
                    offset, self.mul(self.from_digit(kk % self.q), self.pow_uniformizer(e))
                )
                kk //= self.q
                e += 1
            reps.append(self.canon_trunc(self.add(c0, offset), level))
        return reps

    def from_digit(self, d: int) -> Element:
        return self.from_int(d)

    # -- serialization -------------------------------------------------------

    def element_to_json(self, a):
        raise NotImplementedError

    def element_from_json(self, obj) -> Element:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"kind": self.kind, "p": self.p}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LocalField)
            and self.kind == other.kind
            and self.p == other.p
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.p))

    def __repr__(self) -> str:
        return f"Q_{self.p}" if self.kind == "p-adic" else f"F_{self.p}((t))"


class PAdicField(LocalField):
    kind = "p-adic"

    def __init__(self, p: int):
        if not _is_prime(p):
            raise FieldError(f"residue cardinality {p} is not prime")
        self.p = p

    def zero(self) -> Fraction:
        return Fraction(0)

    def from_int(self, n: int) -> Fraction:
        return Fraction(n)

    def uniformizer(self) -> Fraction:
        return Fraction(self.p)

    def pow_uniformizer(self, e: int) -> Fraction:
        return Fraction(self.p) ** e

    def is_zero(self, a: Fraction) -> bool:
        return a == 0

    def invert(self, a: Fraction) -> Fraction:
        if a == 0:
            raise FieldDivisionError("division by zero")
        return 1 / a

    def ord(self, a: Fraction):
        if a == 0:
            return INF
        return _vp(a.numerator, self.p) - _vp(a.denominator, self.p)

    def _unit_parts(self, a: Fraction) -> tuple[int, int, int]:
        """(v, num, den) with a = p^v * num/den and p dividing neither."""
        v = self.ord(a)
        u = a / Fraction(self.p) ** v
        return v, u.numerator, u.denominator

    def ac(self, a: Fraction, m: int) -> int:
        if a == 0:
            raise FieldError("ac of zero undefined")
        if m < 1:
            raise ValueError("ac level must be positive")
        _, num, den = self._unit_parts(a)
        mod = self.p**m
        return num * pow(den, -1, mod) % mod

    def canon_trunc(self, a: Fraction, r: int) -> Fraction:
        if a == 0:
            return Fraction(0)
        v = self.ord(a)
        if v >= r:
            return Fraction(0)
        m = r - v
        _, num, den = self._unit_parts(a)
        w = num * pow(den, -1, self.p**m) % self.p**m
        return w * Fraction(self.p) ** v

    def psi_angle(self, a: Fraction) -> Fraction:
        y = a / self.p
        if y == 0:
            return Fraction(0)
        v = self.ord(y)
        if v >= 0:
            return Fraction(0)
        m = -v
        z = y * self.p**m
        mod = self.p**m
        return Fraction(z.numerator * pow(z.denominator, -1, mod) % mod, mod)

    def unit_classes(self, m: int) -> list[int]:
        return [a for a in range(1, self.p**m) if a % self.p]

    def residue_mul(self, a: int, b: int, m: int) -> int:
        return a * b % self.p**m

    def residue_lift(self, a: int) -> Fraction:
        return Fraction(a)

    def unit_inverse_mod(self, a: Fraction, m: int) -> Fraction:
        if self.ord(a) != 0:
            raise FieldDivisionError("unit inversion needs a unit")
        return Fraction(pow(self.ac(a, m), -1, self.p**m))

    def element_to_json(self, a: Fraction) -> str:
        return str(a)

    def element_from_json(self, obj) -> Fraction:
        if isinstance(obj, int):
            return Fraction(obj)
        if isinstance(obj, str):
            return Fraction(obj)
        raise FieldError(f"cannot read p-adic element from {obj!r}")


class LaurentField(LocalField):
    kind = "equal-characteristic"

    def __init__(self, p: int):
        if not _is_prime(p):
            raise FieldError(f"residue cardinality {p} is not prime")
        self.p = p

    def zero(self) -> LaurentPoly:
        return LaurentPoly(self.p)

    def from_int(self, n: int) -> LaurentPoly:
        return LaurentPoly(self.p, [(0, n)])

    def uniformizer(self) -> LaurentPoly:
        return LaurentPoly(self.p, [(1, 1)])

    def pow_uniformizer(self, e: int) -> LaurentPoly:
        return LaurentPoly(self.p, [(e, 1)])

    def is_zero(self, a: LaurentPoly) -> bool:
        return a.is_zero()

    def invert(self, a: LaurentPoly) -> LaurentPoly:
        if a.is_zero():
            raise FieldDivisionError("division by zero")
        if len(a.coeffs) != 1:
            raise FieldDivisionError(
                "only monomials are exactly invertible in the Laurent-polynomial fragment"
            )
        e, c = a.coeffs[0]
        return LaurentPoly(self.p, [(-e, pow(c, -1, self.p))])

    def ord(self, a: LaurentPoly):
        return a.ord()

    def ac(self, a: LaurentPoly, m: int) -> int:
        if a.is_zero():
            raise FieldError("ac of zero undefined")
        if m < 1:
            raise ValueError("ac level must be positive")
        v = a.ord()
        return sum(c * self.p ** (e - v) for e, c in a.coeffs if e - v < m)

    def canon_trunc(self, a: LaurentPoly, r: int) -> LaurentPoly:
        return a.truncate(r)

    def psi_angle(self, a: LaurentPoly) -> Fraction:
        return Fraction(a.coeff(0), self.p)

    def unit_classes(self, m: int) -> list[int]:
        out = []
        for code in range(self.p**m):
            if code % self.p:
                out.append(code)
        return out

    def _decode(self, code: int, m: int) -> LaurentPoly:
        digits = []
        for i in range(m):
            digits.append((i, code % self.p))
            code //= self.p
        return LaurentPoly(self.p, digits)

    def _encode(self, a: LaurentPoly, m: int) -> int:
        return sum(c * self.p**e for e, c in a.coeffs if 0 <= e < m)

    def residue_mul(self, a: int, b: int, m: int) -> int:
        prod = self._decode(a, m) * self._decode(b, m)
        return self._encode(prod.truncate(m), m)

    def residue_lift(self, a: int) -> LaurentPoly:
        digits = []
        i = 0
        while a:
            digits.append((i, a % self.p))
            a //= self.p
            i += 1
        return LaurentPoly(self.p, digits)

    def unit_inverse_mod(self, a: LaurentPoly, m: int) -> LaurentPoly:
        if a.ord() != 0:
            raise FieldDivisionError("unit inversion needs a unit")
        a = a.truncate(m)
        inv = LaurentPoly(self.p, [(0, pow(a.coeff(0), -1, self.p))])
        # Newton iteration: inv <- inv*(2 - a*inv), doubling correct digits.
        prec = 1
        two = self.from_int(2)
        while prec < m:
            prec *= 2
            inv = (inv * (two - (a * inv).truncate(prec))).truncate(prec)
        return inv.truncate(m)

    def element_to_json(self, a: LaurentPoly) -> dict:
        return {"coeffs": {str(e): c for e, c in a.coeffs}}

    def element_from_json(self, obj) -> LaurentPoly:
        if isinstance(obj, int):
            return self.from_int(obj)
        if isinstance(obj, dict) and "coeffs" in obj:
            return LaurentPoly(
                self.p, [(int(e), int(c)) for e, c in obj["coeffs"].items()]
            )
        raise FieldError(f"cannot read Laurent element from {obj!r}")


_FIELDS: dict[tuple[str, int], LocalField] = {}


def make_field(kind: str, p: int) -> LocalField:
    key = (kind, p)
    if key not in _FIELDS:
        if kind == "p-adic":
            _FIELDS[key] = PAdicField(p)
        elif kind == "equal-characteristic":
            _FIELDS[key] = LaurentField(p)
        else:
            raise FieldError(f"unknown field kind {kind!r}")
    return _FIELDS[key]


def field_from_json(obj: dict) -> LocalField:
    return make_field(obj["kind"], int(obj["p"]))


def field_spec(field: LocalField) -> str:
    """Inverse of parse_field_spec: the Qp:<p> / Fpt:<p> descriptor."""
    tag = "Qp" if field.kind == "p-adic" else "Fpt"
    return f"{tag}:{field.p}"


def parse_field_spec(spec: str) -> LocalField:
    """Parse a CLI field descriptor: Qp:<p> or Fpt:<p>."""
    try:
        tag, pstr = spec.split(":")
        p = int(pstr)
    except ValueError:
        raise FieldError(f"bad field spec {spec!r}; expected Qp:<p> or Fpt:<p>")
    if tag == "Qp":
        return make_field("p-adic", p)
    if tag == "Fpt":
        return make_field("equal-characteristic", p)
    raise FieldError(f"bad field kind {tag!r}; expected Qp or Fpt")


# -- vectors ----------------------------------------------------------------


def vec_add(field: LocalField, xs: Sequence, ys: Sequence) -> tuple:
    return tuple(field.add(x, y) for x, y in zip(xs, ys, strict=True))


def vec_sub(field: LocalField, xs: Sequence, ys: Sequence) -> tuple:
    return tuple(field.sub(x, y) for x, y in zip(xs, ys, strict=True))


def vec_neg(field: LocalField, xs: Sequence) -> tuple:
    return tuple(field.neg(x) for x in xs)


def vec_scale(field: LocalField, a, xs: Sequence) -> tuple:
    return tuple(field.mul(a, x) for x in xs)


def vec_ord(field: LocalField, xs: Sequence):
    return min((field.ord(x) for x in xs), default=INF)


def vec_is_zero(field: LocalField, xs: Sequence) -> bool:
    return all(field.is_zero(x) for x in xs)


# -- balls -------------------------------------------------------------------


def ball_intersect_1d(field: LocalField, c1, r1: int, c2, r2: int):
    """Intersection of two balls in one coordinate: None, or the smaller ball."""
    if field.ord(field.sub(c1, c2)) >= min(r1, r2):
        return (c1, r1) if r1 >= r2 else (c2, r2)
    return None


@dataclass(frozen=True)
class Polyball:
    """Product of one-dimensional balls, one per coordinate; canonical centers."""

    field: LocalField
    centers: tuple
    radii: tuple[int, ...]

    def __post_init__(self):
        if len(self.centers) != len(self.radii):
            raise ValueError("centers and radii must have equal length")
        canon = tuple(
            self.field.canon_trunc(c, r) for c, r in zip(self.centers, self.radii)
        )
        object.__setattr__(self, "centers", canon)
        object.__setattr__(self, "radii", tuple(int(r) for r in self.radii))

    @classmethod
    def ball(cls, field: LocalField, center: Sequence, r: int) -> "Polyball":
        center = tuple(center)
        return cls(field, center, (r,) * len(center))

    @property
    def n(self) -> int:
        return len(self.radii)

    def contains(self, xs: Sequence) -> bool:
        return all(
            self.field.ord(self.field.sub(x, c)) >= r
            for x, c, r in zip(xs, self.centers, self.radii, strict=True)
        )

    def intersect(self, other: "Polyball") -> Optional["Polyball"]:
        cs, rs = [], []
        for c1, r1, c2, r2 in zip(
            self.centers, self.radii, other.centers, other.radii, strict=True
        ):
            got = ball_intersect_1d(self.field, c1, r1, c2, r2)
            if got is None:
                return None
            cs.append(got[0])
            rs.append(got[1])
        return Polyball(self.field, tuple(cs), tuple(rs))

    def is_subset(self, other: "Polyball") -> bool:
        got = self.intersect(other)
        return got == self

    def children(self) -> list["Polyball"]:
        """The q^n disjoint sub-polyballs with every radius increased by one."""
        field = self.field
        per_coord = [
            field.cell_reps(c, r, r + 1) for c, r in zip(self.centers, self.radii)
        ]
        out = []
        radii = tuple(r + 1 for r in self.radii)
        stack = [()]
        for reps in per_coord:
            stack = [pref + (rep,) for pref in stack for rep in reps]
        for centers in stack:
            out.append(Polyball(field, centers, radii))
        return out

    def cells_at_level(self, level: int) -> Iterator[tuple]:
        """Canonical center tuples of the level-`level` cells covering self."""
        per_coord = [
            self.field.cell_reps(c, r, level)
            for c, r in zip(self.centers, self.radii)
        ]
        idx = [0] * len(per_coord)
        if any(not reps for reps in per_coord):
            return
        while True:
            yield tuple(per_coord[i][idx[i]] for i in range(len(per_coord)))
            i = len(per_coord) - 1
            while i >= 0:
                idx[i] += 1
                if idx[i] < len(per_coord[i]):
                    break
                idx[i] = 0
                i -= 1
            if i < 0:
                return

    def volume(self) -> CycloScalar:
        return CycloScalar.q_pow(self.field.p, -2 * sum(self.radii))

    def to_json(self) -> dict:
        return {
            "center": [self.field.element_to_json(c) for c in self.centers],
            "radius": list(self.radii),
        }

    @classmethod
    def from_json(cls, field: LocalField, obj: dict) -> "Polyball":
        centers = tuple(field.element_from_json(c) for c in obj["center"])
        radius = obj["radius"]
        if isinstance(radius, int):
            radii = (radius,) * len(centers)
        else:
            radii = tuple(int(r) for r in radius)
        return cls(field, centers, radii)
