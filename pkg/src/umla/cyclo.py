"""Exact scalars for character sums: rational combinations of q-powers and p-power roots of unity.

A CycloScalar over a residue cardinality q = p represents the complex number

    sum over stored terms of  coef * q^(e/2) * exp(2*pi*i*angle)

with coef rational, e an integer (so q-exponents are half-integers), and angle
a rational with p-power denominator (a root of unity of p-power order).

Values are kept in a canonical form.  Integer q-powers are folded into the
rational coefficient, leaving at most two slices: the rational one and a
formal sqrt(q) one.  Within each slice the roots of unity are rewritten on
the Q-basis {zeta^j : 0 <= j < phi(p^K)} of Q(zeta_{p^K}) using the relation
sum_{i=0}^{p-1} zeta^{i*p^(K-1)} = 0; on that basis the zero test is an exact
emptiness check.  sqrt(q) stays a formal symbol: identities that relate
sqrt(p) to Gauss sums of p-power roots are (deliberately) not recognized, so
the zero test is complete on each slice and sound overall.
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from typing import Iterable, Iterator

__all__ = ["CycloScalar"]


def _ppow_denominator_exp(p: int, ang: Fraction) -> int:
    """Exponent k with ang.denominator == p**k, or raise if not a p-power."""
    d, k = ang.denominator, 0
    while d % p == 0:
        d //= p
        k += 1
    if d != 1:
        raise ValueError(f"angle {ang} is not of p-power order for p={p}")
    return k


def _canonical(p: int, raw: Iterable[tuple[int, Fraction, Fraction]]) -> tuple:
    """Reduce (e2, angle, coef) triples to the canonical sorted term tuple.

    Integer powers of q are folded into the rational coefficient, so the only
    surviving exponents are e2 = 0 and e2 = 1 (a formal factor sqrt(q)).
    """
    slices: dict[int, dict[Fraction, Fraction]] = {}
    for e2, ang, coef in raw:
        if not coef:
            continue
        k, r = divmod(int(e2), 2)
        coef = Fraction(coef) * Fraction(p) ** k
        ang = ang % 1
        slices.setdefault(r, {})
        slices[r][ang] = slices[r].get(ang, Fraction(0)) + coef
    out = []
    for e2 in sorted(slices):
        angs = slices[e2]
        K = max((_ppow_denominator_exp(p, a) for a in angs), default=0)
        if K == 0:
            c = sum(angs.values(), Fraction(0))
            if c:
                out.append((e2, Fraction(0), c))
            continue
        pK = p**K
        phi = pK // p * (p - 1)
        vec: dict[int, Fraction] = {}
        for ang, c in angs.items():
            j = int(ang * pK)
            vec[j] = vec.get(j, Fraction(0)) + c
        for j in [j for j in vec if j >= phi]:
            c = vec.pop(j)
            if not c:
                continue
            t = j - phi
            for i in range(p - 1):
                jj = t + i * (pK // p)
                vec[jj] = vec.get(jj, Fraction(0)) - c
        for j in sorted(vec):
            if vec[j]:
                out.append((e2, Fraction(j, pK), vec[j]))
    return tuple(out)


class CycloScalar:
    """Immutable exact scalar; supports +, -, *, equality and a sound zero test."""

    __slots__ = ("p", "terms", "_hash")

    def __init__(self, p: int, raw: Iterable[tuple[int, Fraction, Fraction]] = ()):
        if p < 2:
            raise ValueError("residue cardinality must be at least 2")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "terms", _canonical(p, raw))
        object.__setattr__(self, "_hash", None)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, p: int) -> "CycloScalar":
        return cls(p)

    @classmethod
    def one(cls, p: int) -> "CycloScalar":
        return cls.fraction(p, Fraction(1))

    @classmethod
    def fraction(cls, p: int, c) -> "CycloScalar":
        return cls(p, [(0, Fraction(0), Fraction(c))])

    @classmethod
    def q_pow(cls, p: int, e2: int, coef=Fraction(1)) -> "CycloScalar":
        """coef * q^(e2/2); e2 counts half-integer steps."""
        return cls(p, [(int(e2), Fraction(0), Fraction(coef))])

    @classmethod
    def root(cls, p: int, angle: Fraction, coef=Fraction(1)) -> "CycloScalar":
        """coef * exp(2*pi*i*angle), angle of p-power order."""
        return cls(p, [(0, Fraction(angle), Fraction(coef))])

    # -- ring structure ----------------------------------------------------

    def __add__(self, other: "CycloScalar") -> "CycloScalar":
        self._check(other)
        return CycloScalar(self.p, list(self.terms) + list(other.terms))

    def __sub__(self, other: "CycloScalar") -> "CycloScalar":
        return self + (-other)

    def __neg__(self) -> "CycloScalar":
        return CycloScalar(self.p, [(e2, a, -c) for e2, a, c in self.terms])

    def __mul__(self, other: "CycloScalar") -> "CycloScalar":
        self._check(other)
        raw = [
            (e2 + f2, a + b, c * d)
            for e2, a, c in self.terms
            for f2, b, d in other.terms
        ]
        return CycloScalar(self.p, raw)

    def times(self, c) -> "CycloScalar":
        c = Fraction(c)
        return CycloScalar(self.p, [(e2, a, k * c) for e2, a, k in self.terms])

    def rotate(self, angle: Fraction) -> "CycloScalar":
        """Multiply by the root of unity with the given angle."""
        if not angle:
            return self
        return CycloScalar(self.p, [(e2, a + angle, c) for e2, a, c in self.terms])

    def q_shift(self, e2: int) -> "CycloScalar":
        """Multiply by q^(e2/2)."""
        return CycloScalar(self.p, [(f2 + e2, a, c) for f2, a, c in self.terms])

    def conj(self) -> "CycloScalar":
        return CycloScalar(self.p, [(e2, -a, c) for e2, a, c in self.terms])

    def inverse(self) -> "CycloScalar":
        """Inverse of a monomial scalar coef*q^(e/2)*zeta; raises otherwise."""
        if len(self.terms) != 1:
            raise ArithmeticError("only monomial scalars are invertible here")
        e2, a, c = self.terms[0]
        return CycloScalar(self.p, [(-e2, -a, 1 / c)])

    # -- predicates and conversions ----------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_rational(self) -> bool:
        return all(a == 0 and e2 == 0 for e2, a, _ in self.terms)

    def as_fraction(self) -> Fraction:
        """Exact rational value; raises if the scalar is not rational."""
        if not self.is_rational():
            raise ArithmeticError(f"{self} is not rational")
        total = Fraction(0)
        for e2, _, c in self.terms:
            total += c * Fraction(self.p) ** (e2 // 2)
        return total

    def to_json(self) -> list:
        return [
            {"qpow": e2, "angle": str(a), "coef": str(c)} for e2, a, c in self.terms
        ]

    @classmethod
    def from_json(cls, p: int, obj: list) -> "CycloScalar":
        return cls(
            p,
            [
                (int(t["qpow"]), Fraction(t["angle"]), Fraction(t["coef"]))
                for t in obj
            ],
        )

    def approx(self) -> complex:
        """Floating approximation, for diagnostics only (never for zero tests)."""
        z = 0j
        for e2, a, c in self.terms:
            z += float(c) * self.p ** (e2 / 2) * cmath.exp(2j * cmath.pi * float(a))
        return z

    def __eq__(self, other) -> bool:
        if not isinstance(other, CycloScalar):
            return NotImplemented
        return self.p == other.p and self.terms == other.terms

    def __hash__(self) -> int:
        h = object.__getattribute__(self, "_hash")
        if h is None:
            h = hash((self.p, self.terms))
            object.__setattr__(self, "_hash", h)
        return h

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __iter__(self) -> Iterator[tuple[int, Fraction, Fraction]]:
        return iter(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e2, a, c in self.terms:
            s = str(c)
            if e2:
                s += f"*q^({e2}/2)" if e2 % 2 else f"*q^{e2 // 2}"
            if a:
                s += f"*e({a})"
            parts.append(s)
        return " + ".join(parts)

    def _check(self, other: "CycloScalar") -> None:
        if self.p != other.p:
            raise ValueError(f"mixed residue cardinalities {self.p} and {other.p}")
