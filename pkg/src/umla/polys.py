"""Exact polynomial utilities over the integers and over a local field.

``MultiPoly`` is a sparse multivariate polynomial with integer coefficients.
It supports the pieces the analytic layers need: formal derivatives, the
Taylor expansion of p(c + e) as polynomials-in-c indexed by e-monomials, exact
evaluation over a local field, and ultrametric lower bounds for the valuation
of the values taken over a polyball.

``FieldPoly`` is a dense univariate polynomial with local-field coefficients.
``sylvester_resultant`` works over the ring Z[y] (one-variable ``MultiPoly``
entries) via exact Laplace expansion, which is plenty for the small degrees
used here.
"""

from __future__ import annotations

from math import comb, prod
from typing import Sequence

from .fields import INF, FieldError, LocalField, Polyball


class MultiPoly:
    """Sparse polynomial in n variables with integer coefficients."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: dict | None = None):
        self.n = n
        clean = {}
        for expo, c in (coeffs or {}).items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != n or any(e < 0 for e in expo):
                raise ValueError(f"bad exponent {expo} for {n} variables")
            c = int(c)
            if c:
                clean[expo] = clean.get(expo, 0) + c
        self.coeffs = {e: c for e, c in clean.items() if c}

    @classmethod
    def zero(cls, n: int) -> "MultiPoly":
        return cls(n, {})

    @classmethod
    def const(cls, n: int, c: int) -> "MultiPoly":
        return cls(n, {(0,) * n: int(c)})

    @classmethod
    def var(cls, n: int, i: int) -> "MultiPoly":
        expo = [0] * n
        expo[i] = 1
        return cls(n, {tuple(expo): 1})

    def is_zero(self) -> bool:
        return not self.coeffs

    def total_degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def degree_in(self, i: int) -> int:
        return max((e[i] for e in self.coeffs), default=0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiPoly)
            and self.n == other.n
            and self.coeffs == other.coeffs
        )

    def __hash__(self) -> int:
        return hash((self.n, tuple(sorted(self.coeffs.items()))))

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly(self.n, out)

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.n, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other: "MultiPoly") -> "MultiPoly":
        out: dict = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                out[key] = out.get(key, 0) + c1 * c2
        return MultiPoly(self.n, out)

    def scale(self, c: int) -> "MultiPoly":
        return MultiPoly(self.n, {e: v * c for e, v in self.coeffs.items()})

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise ValueError("negative polynomial power")
        out = MultiPoly.const(self.n, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def derivative(self, i: int) -> "MultiPoly":
        out: dict = {}
        for e, c in self.coeffs.items():
            if e[i]:
                key = e[:i] + (e[i] - 1,) + e[i + 1 :]
                out[key] = out.get(key, 0) + c * e[i]
        return MultiPoly(self.n, out)

    def taylor(self) -> dict[tuple, "MultiPoly"]:
        """Expansion of p(c + e) as sum over e-monomials of coeff polys in c.

        Returns {alpha: q_alpha} with p(c + e) = sum q_alpha(c) e^alpha,
        expanded exactly over the integers.
        """
        out: dict[tuple, MultiPoly] = {}
        for beta, c in self.coeffs.items():
            ranges = [range(b + 1) for b in beta]
            idx = [0] * self.n
            while True:
                alpha = tuple(idx)
                weight = c * prod(comb(b, a) for b, a in zip(beta, alpha))
                cexp = tuple(b - a for b, a in zip(beta, alpha))
                bucket = out.setdefault(alpha, MultiPoly.zero(self.n))
                out[alpha] = bucket + MultiPoly(self.n, {cexp: weight})
                j = self.n - 1
                while j >= 0:
                    idx[j] += 1
                    if idx[j] <= beta[j]:
                        break
                    idx[j] = 0
                    j -= 1
                if j < 0:
                    break
        return {a: q for a, q in out.items() if not q.is_zero()}

    def eval_field(self, field: LocalField, xs: Sequence):
        """Exact value at a point with local-field coordinates."""
        if len(xs) != self.n:
            raise FieldError("wrong number of coordinates")
        total = field.zero()
        for e, c in self.coeffs.items():
            term = field.from_int(c)
            for x, k in zip(xs, e):
                if k:
                    term = field.mul(term, field.power(x, k))
            total = field.add(total, term)
        return total

    def ord_lower_bound(self, field: LocalField, ball: Polyball):
        """A valid lower bound for ord(p(x)) over all x in the polyball."""
        if ball.n != self.n:
            raise FieldError("polyball has wrong dimension")
        coord_lo = [
            min(field.ord(c), r) if not field.is_zero(c) else r
            for c, r in zip(ball.centers, ball.radii)
        ]
        best = INF
        for e, c in self.coeffs.items():
            base = field.ord(field.from_int(c))
            if base == INF:
                continue
            bound = base + sum(k * lo for k, lo in zip(e, coord_lo))
            best = min(best, bound)
        return best

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for e, c in sorted(self.coeffs.items()):
            vars_part = "*".join(
                f"x{i}^{k}" if k > 1 else f"x{i}"
                for i, k in enumerate(e)
                if k
            )
            parts.append(f"{c}*{vars_part}" if vars_part else str(c))
        return " + ".join(parts)


def parse_poly(src: str, var_names: Sequence[str]) -> MultiPoly:
    """Parse +, -, *, ^ integer-coefficient polynomials over named variables."""
    n = len(var_names)
    pos = 0

    def error(msg):
        return FieldError(f"polynomial syntax error at offset {pos}: {msg}")

    def skip_ws():
        nonlocal pos
        while pos < len(src) and src[pos].isspace():
            pos += 1

    def parse_sum():
        nonlocal pos
        total = parse_product()
        while True:
            skip_ws()
            if pos < len(src) and src[pos] in "+-":
                op = src[pos]
                pos += 1
                rhs = parse_product()
                total = total + rhs if op == "+" else total - rhs
            else:
                return total

    def parse_product():
        nonlocal pos
        total = parse_power()
        while True:
            skip_ws()
            if pos < len(src) and src[pos] == "*":
                pos += 1
                total = total * parse_power()
            else:
                return total

    def parse_power():
        nonlocal pos
        base = parse_atom()
        skip_ws()
        if pos < len(src) and src[pos] == "^":
            pos += 1
            skip_ws()
            start = pos
            while pos < len(src) and src[pos].isdigit():
                pos += 1
            if start == pos:
                raise error("expected an integer exponent")
            return base ** int(src[start:pos])
        return base

    def parse_atom():
        nonlocal pos
        skip_ws()
        if pos >= len(src):
            raise error("unexpected end of input")
        ch = src[pos]
        if ch == "(":
            pos += 1
            inner = parse_sum()
            skip_ws()
            if pos >= len(src) or src[pos] != ")":
                raise error("expected ')'")
            pos += 1
            return inner
        if ch == "-":
            pos += 1
            return -parse_atom()
        if ch.isdigit():
            start = pos
            while pos < len(src) and src[pos].isdigit():
                pos += 1
            return MultiPoly.const(n, int(src[start:pos]))
        for i, name in enumerate(var_names):
            if src.startswith(name, pos):
                follow = pos + len(name)
                if follow >= len(src) or not (
                    src[follow].isalnum() or src[follow] == "_"
                ):
                    pos = follow
                    return MultiPoly.var(n, i)
        raise error(f"expected a variable ({', '.join(var_names)}) or number")

    result = parse_sum()
    skip_ws()
    if pos != len(src):
        raise error("trailing input")
    return result


class FieldPoly:
    """Dense univariate polynomial with local-field coefficients."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: LocalField, coeffs: Sequence):
        self.field = field
        cs = list(coeffs)
        while cs and field.is_zero(cs[-1]):
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def from_ints(cls, field: LocalField, coeffs: Sequence[int]) -> "FieldPoly":
        return cls(field, [field.from_int(c) for c in coeffs])

    @classmethod
    def from_multipoly(cls, field: LocalField, poly: MultiPoly) -> "FieldPoly":
        if poly.n != 1:
            raise FieldError("expected a univariate polynomial")
        deg = poly.degree_in(0)
        cs = [field.zero()] * (deg + 1)
        for (k,), c in poly.coeffs.items():
            cs[k] = field.from_int(c)
        return cls(field, cs)

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def eval(self, x):
        field = self.field
        total = field.zero()
        for c in reversed(self.coeffs):
            total = field.add(field.mul(total, x), c)
        return total

    def derivative(self) -> "FieldPoly":
        field = self.field
        return FieldPoly(
            field,
            [
                field.mul(field.from_int(k), c)
                for k, c in enumerate(self.coeffs)
            ][1:],
        )

    def shift(self, a) -> "FieldPoly":
        """The polynomial x -> p(a + x)."""
        field = self.field
        out = [field.zero()] * len(self.coeffs)
        for k, c in enumerate(self.coeffs):
            # expand c*(a+x)^k
            for j in range(k + 1):
                w = field.mul(
                    field.from_int(comb(k, j)), field.power(a, k - j)
                )
                out[j] = field.add(out[j], field.mul(c, w))
        return FieldPoly(field, out)

    def __repr__(self) -> str:
        return f"FieldPoly({self.field!r}, deg={self.degree()})"


def _poly_det(rows: list[list[MultiPoly]]) -> MultiPoly:
    """Exact determinant over a polynomial ring by memoized Laplace expansion."""
    size = len(rows)
    n_vars = rows[0][0].n if size else 0
    memo: dict = {}

    def minor(row: int, cols: frozenset) -> MultiPoly:
        if row == size:
            return MultiPoly.const(n_vars, 1)
        key = cols
        if key in memo:
            return memo[key]
        total = MultiPoly.zero(n_vars)
        sign = 1
        for col in sorted(cols):
            entry = rows[row][col]
            if not entry.is_zero():
                sub = minor(row + 1, cols - {col})
                total = total + (entry * sub).scale(sign)
            sign = -sign
        memo[key] = total
        return total

    return minor(0, frozenset(range(size)))


def sylvester_resultant(a: list[MultiPoly], b: list[MultiPoly]) -> MultiPoly:
    """Resultant of two polynomials given by coefficient lists over Z[y].

    ``a`` and ``b`` list coefficients from degree 0 upward; entries are
    one-variable integer polynomials in the parameter y.
    """
    while a and a[-1].is_zero():
        a = a[:-1]
    while b and b[-1].is_zero():
        b = b[:-1]
    if not a or not b:
        raise FieldError("resultant of the zero polynomial")
    m, k = len(a) - 1, len(b) - 1
    n_vars = a[0].n
    size = m + k
    if size == 0:
        return MultiPoly.const(n_vars, 1)
    rows = []
    for i in range(k):
        row = [MultiPoly.zero(n_vars)] * size
        for j, c in enumerate(reversed(a)):
            row[i + j] = c
        rows.append(row)
    for i in range(m):
        row = [MultiPoly.zero(n_vars)] * size
        for j, c in enumerate(reversed(b)):
            row[i + j] = c
        rows.append(row)
    return _poly_det(rows)


def critical_value_locus(f: MultiPoly) -> MultiPoly:
    """Polynomial in y whose roots are the critical values of x -> f(x).

    Built as the resultant of f(x) - y and f'(x) with respect to x; the
    result is a one-variable integer polynomial in y (up to a nonzero integer
    factor, which does not change the zero locus).
    """
    if f.n != 1:
        raise FieldError("expected a univariate polynomial")
    deg = f.degree_in(0)
    if deg < 1:
        raise FieldError("the map must be non-constant")
    a = []
    for kx in range(deg + 1):
        c = f.coeffs.get((kx,), 0)
        poly = MultiPoly.const(1, c)
        if kx == 0:
            poly = poly - MultiPoly.var(1, 0)  # the parameter y
        a.append(poly)
    fp = f.derivative(0)
    b = [
        MultiPoly.const(1, fp.coeffs.get((kx,), 0))
        for kx in range(max(deg - 1, 0) + 1)
    ]
    return sylvester_resultant(a, b)
