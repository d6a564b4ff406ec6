"""Fiber integration along one-variable polynomial maps.

For a polynomial map f: K -> K and a cell function phi, the pushforward
density at a regular value y is the finite sum

    f_!(phi)(y) = sum over the fiber f(x) = y of phi(x) / |f'(x)|,

the density of the image measure of phi |dx| under f with respect to |dy|.
The engine behind it finds fiber points by exhaustive residue search at low
level followed by certified Newton lifting, with exact valuations of f' at
every reported root.

The critical-value set of f (zeros of the discriminant of f(x) - y in y) is
where fibers collide; ``fiber_integrate`` refuses those y exactly.  Away
from it, f_!(phi) is locally constant, and ``level_measure`` measures how
the level of local constancy depends on the distance to the critical values
and on the refinement of phi, reporting the measurements together with a
dominating affine bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .cyclo import CycloScalar
from .fields import INF, FieldError, LocalField, Polyball, field_from_json
from .polys import FieldPoly, MultiPoly, critical_value_locus, parse_poly
from .schwartz import SchwartzBruhat

__all__ = [
    "ClusterUnresolved",
    "OnDiscriminant",
    "FiberProblem",
    "LevelReport",
    "padic_roots",
    "fiber_integrate",
    "level_measure",
    "poly_to_string",
]

DEFAULT_CELL_BUDGET = 30_000
_NEWTON_CAP = 64


class ClusterUnresolved(FieldError):
    """A residue cell may hold several roots at the requested precision."""

    def __init__(self, field: LocalField, center, level: int):
        super().__init__(
            f"cannot separate roots inside the level-{level} cell at "
            f"{field.element_to_json(center)}; raise the precision"
        )
        self.center = center
        self.level = level


class OnDiscriminant(FieldError):
    """The requested base point is a critical value of the map."""

    def __init__(self, field: LocalField, y):
        super().__init__(
            f"base point {field.element_to_json(y)} is a critical value; "
            "the fiber is not simple there"
        )
        self.y = y


def poly_to_string(f: MultiPoly, var: str = "x") -> str:
    """One-variable rendering compatible with the polynomial parser."""
    if f.n != 1:
        raise FieldError("only one-variable polynomials have a chart rendering")
    parts = []
    for exps, coef in sorted(f.coeffs.items(), reverse=True):
        e = exps[0]
        body = var if e == 1 else f"{var}^{e}" if e else ""
        mag = abs(coef)
        head = str(mag) if (mag != 1 or not body) else ""
        sep = "*" if head and body else ""
        text = f"{head}{sep}{body}"
        parts.append(("- " if coef < 0 else "+ ") + text)
    if not parts:
        return "0"
    first = parts[0].replace("+ ", "", 1).replace("- ", "-", 1)
    return " ".join([first] + parts[1:])


# ---------------------------------------------------------------------------
# root finding: residue search + certified Newton lifting
# ---------------------------------------------------------------------------


def _elem_sort_key(x):
    """Deterministic ordering key for canonical field elements."""
    return x.coeffs if hasattr(x, "coeffs") else x


def _approx_invert(field: LocalField, a, prec: int):
    """Inverse of a nonzero element, exact modulo uniformizer^prec."""
    if field.kind == "p-adic":
        return field.invert(a)
    e = field.ord(a)
    unit = field.mul(a, field.pow_uniformizer(-e))
    inv_unit = field.unit_inverse_mod(unit, max(prec, 1))
    return field.mul(inv_unit, field.pow_uniformizer(-e))


def _unit_window_roots(field: LocalField, coeffs, k: int):
    """Roots in the ring of integers, as (truncation, ord of derivative).

    ``coeffs`` are field elements (degree order, any valuations, not all
    zero).  Returns the level-k truncation of every integral root together
    with the exact valuation of the derivative of the input polynomial
    there; raises ClusterUnresolved when a surviving residue cell cannot be
    certified to hold a unique root.
    """
    if k < 1:
        raise FieldError("root precision must be at least 1")
    if all(field.is_zero(c) for c in coeffs):
        raise FieldError("the zero polynomial has no root locus")
    # scale to an integral polynomial with unit content; roots are unchanged
    content = min(field.ord(c) for c in coeffs if not field.is_zero(c))
    scaled = [field.mul(c, field.pow_uniformizer(-content)) for c in coeffs]
    g = FieldPoly(field, scaled)
    gp = g.derivative()

    # survivors at level L are the residue cells with ord g >= L; every
    # cell containing a root survives because g is integral
    classes = [field.zero()]
    for level in range(1, k + 1):
        nxt = []
        for c in classes:
            for d in range(field.q):
                cand = field.canon_trunc(
                    field.add(
                        c,
                        field.mul(
                            field.from_digit(d), field.pow_uniformizer(level - 1)
                        ),
                    ),
                    level,
                )
                if field.ord(g.eval(cand)) >= level:
                    nxt.append(cand)
        classes = nxt

    found: dict = {}
    unresolved = []
    for a in classes:
        va = field.ord(g.eval(a))
        vpa = field.ord(gp.eval(a))
        if not (vpa != INF and va > 2 * vpa):
            unresolved.append(a)
            continue
        # Newton iteration contracts quadratically inside the certified
        # cell; stop once g's valuation pins the root modulo uniformizer^k
        prec = k + 2 * vpa + 4
        x = a
        for _ in range(_NEWTON_CAP):
            gx = g.eval(x)
            if field.ord(gx) >= k + vpa:
                break
            step = field.mul(gx, _approx_invert(field, gp.eval(x), prec))
            x = field.canon_trunc(field.sub(x, step), prec)
        else:  # pragma: no cover - certified iterations always land
            unresolved.append(a)
            continue
        trunc = field.canon_trunc(x, k)
        found[trunc] = vpa + content  # derivative order of the input coeffs
    if unresolved:
        raise ClusterUnresolved(field, unresolved[0], k)
    return sorted(found.items(), key=lambda item: _elem_sort_key(item[0]))


def _window_roots(field: LocalField, coeffs, window: int, k: int):
    """Roots of valuation >= window, truncated at level k (> window)."""
    if k <= window:
        raise FieldError("precision must exceed the search window")
    if window == 0:
        return _unit_window_roots(field, coeffs, k)
    # substitute x = uniformizer^window * u and search over integral u
    shifted = [
        field.mul(c, field.pow_uniformizer(window * i))
        for i, c in enumerate(coeffs)
    ]
    out = []
    for trunc_u, dorder in _unit_window_roots(field, shifted, k - window):
        root = field.canon_trunc(
            field.mul(trunc_u, field.pow_uniformizer(window)), k
        )
        # the substituted derivative picks up one factor of the shift
        out.append((root, dorder - window))
    return out


def _coerce_poly(g) -> MultiPoly:
    if isinstance(g, MultiPoly):
        if g.n != 1:
            raise FieldError("root search expects a one-variable polynomial")
        return g
    if isinstance(g, str):
        return parse_poly(g, ("x",))
    coeffs = {(i,): int(c) for i, c in enumerate(g) if int(c)}
    return MultiPoly(1, coeffs)


def padic_roots(g, field: LocalField, k: int, window: int = 0) -> list:
    """All roots of g with valuation >= window, truncated at level k.

    ``g`` is a one-variable polynomial over the integers (a ``MultiPoly``,
    a parseable string, or a coefficient sequence).  The result lists the
    canonical level-k truncations, deduplicated and deterministically
    ordered.  Raises ClusterUnresolved when the requested precision cannot
    separate a cluster of roots (e.g. at a multiple root).
    """
    poly = _coerce_poly(g)
    fp = FieldPoly.from_multipoly(field, poly)
    return [root for root, _ in _window_roots(field, list(fp.coeffs), window, k)]


# ---------------------------------------------------------------------------
# the fiber problem and exact pushforward values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberProblem:
    """A one-variable polynomial map with its critical-value data.

    ``f`` maps the line to the line; both sides carry the standard additive
    volume form.  ``disc`` is a polynomial in the base coordinate whose
    zeros are exactly the critical values of f — the set away from which
    every fiber is finite with f' nonzero at each point.
    """

    f: MultiPoly
    disc: MultiPoly = dc_field(init=False, compare=False)

    def __post_init__(self):
        coerced = _coerce_poly(self.f)
        object.__setattr__(self, "f", coerced)
        object.__setattr__(self, "disc", critical_value_locus(coerced))

    @classmethod
    def from_string(cls, src: str) -> "FiberProblem":
        return cls(parse_poly(src, ("x",)))

    def is_critical_value(self, field: LocalField, y) -> bool:
        return field.is_zero(self.disc.eval_field(field, (y,)))

    def to_json(self) -> dict:
        return {"f": poly_to_string(self.f)}

    @classmethod
    def from_json(cls, obj: dict) -> "FiberProblem":
        return cls.from_string(obj["f"])


def _fiber_points(problem: FiberProblem, phi: SchwartzBruhat, y, k: int):
    """(truncated root, ord f' there) for fiber points inside phi's window."""
    field = phi.field
    window, _ = phi.alpha_bounds()
    fp = FieldPoly.from_multipoly(field, problem.f)
    coeffs = list(fp.coeffs)
    if not coeffs:
        coeffs = [field.zero()]
    coeffs[0] = field.sub(coeffs[0], y)
    return _window_roots(field, coeffs, min(window, 0), max(k, min(window, 0) + 1))


def fiber_integrate(
    problem: FiberProblem, phi: SchwartzBruhat, y, escalations: int = 6
) -> CycloScalar:
    """Exact value of f_!(phi) at a regular value y.

    Sums phi(x)/|f'(x)| over the fiber points x with f(x) = y inside the
    support of phi.  Raises OnDiscriminant when y is a critical value.
    Root precision starts at the constancy level of phi (so phi and |f'|
    are both exact on the truncations) and escalates past root clusters.
    """
    if phi.n != 1:
        raise FieldError("fiber integration works along one-variable charts")
    field = phi.field
    if isinstance(y, int):
        y = field.from_int(y)
    if problem.is_critical_value(field, y):
        raise OnDiscriminant(field, y)
    if phi.is_zero():
        return CycloScalar.zero(field.p)
    support, constancy = phi.alpha_bounds()
    k = max(constancy, support + 1, 1)
    for attempt in range(escalations + 1):
        try:
            points = _fiber_points(problem, phi, y, k + 2 * attempt)
            break
        except ClusterUnresolved:
            if attempt == escalations:
                raise
    total = CycloScalar.zero(field.p)
    for root, dorder in points:
        value = phi.eval_at((root,))
        if value.is_zero():
            continue
        # 1/|f'(x)| = q^(ord f'(x)), with the doubled-exponent encoding
        total = total + value * CycloScalar.q_pow(field.p, 2 * dorder)
    return total


# ---------------------------------------------------------------------------
# local-constancy levels against distance from the critical values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelReport:
    """Measured local-constancy levels of f_!(phi) with an affine bound.

    ``rows`` maps (eps, m) to the minimal level mu such that the
    pushforward of phi restricted to the level-m ball at the probe center
    is constant on every level-mu cell of the scanned region at valuative
    distance at least q^-eps from the critical values.  The fitted
    (a, b, c) satisfy mu <= a*eps + b*m + c on every measured row.
    """

    f_text: str
    field: LocalField
    x0_json: object
    resolution: int
    window: int
    eps_values: tuple[int, ...]
    m_values: tuple[int, ...]
    rows: dict
    cells: dict
    fit: tuple[Fraction, Fraction, Fraction]

    def mu(self, eps: int, m: int) -> int:
        return self.rows[(eps, m)]

    def fit_dominates(self) -> bool:
        a, b, c = self.fit
        return all(
            Fraction(mu) <= a * eps + b * m + c
            for (eps, m), mu in self.rows.items()
        )

    def to_json(self) -> dict:
        a, b, c = self.fit
        return {
            "f": self.f_text,
            "field": self.field.to_json(),
            "x0": self.x0_json,
            "resolution": self.resolution,
            "window": self.window,
            "eps": list(self.eps_values),
            "m": list(self.m_values),
            "rows": [
                {
                    "eps": eps,
                    "m": m,
                    "mu": self.rows[(eps, m)],
                    "cells": self.cells[(eps, m)],
                }
                for eps in self.eps_values
                for m in self.m_values
            ],
            "fit": {"a": str(a), "b": str(b), "c": str(c)},
            "fit_dominates": self.fit_dominates(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LevelReport":
        rows = {}
        cells = {}
        for row in obj["rows"]:
            key = (int(row["eps"]), int(row["m"]))
            rows[key] = int(row["mu"])
            cells[key] = int(row["cells"])
        fit = obj["fit"]
        return cls(
            f_text=obj["f"],
            field=field_from_json(obj["field"]),
            x0_json=obj["x0"],
            resolution=int(obj["resolution"]),
            window=int(obj["window"]),
            eps_values=tuple(int(e) for e in obj["eps"]),
            m_values=tuple(int(m) for m in obj["m"]),
            rows=rows,
            cells=cells,
            fit=(
                Fraction(fit["a"]),
                Fraction(fit["b"]),
                Fraction(fit["c"]),
            ),
        )


def _affine_fit(rows: dict) -> tuple[Fraction, Fraction, Fraction]:
    """Small dominating affine bound: slopes from the grid, then the offset."""
    zero = Fraction(0)
    a = zero
    b = zero
    eps_values = sorted({eps for eps, _ in rows})
    m_values = sorted({m for _, m in rows})
    for m in m_values:
        col = [(eps, rows[(eps, m)]) for eps in eps_values if (eps, m) in rows]
        for (e1, mu1), (e2, mu2) in zip(col, col[1:]):
            a = max(a, Fraction(mu2 - mu1, e2 - e1))
    for eps in eps_values:
        row = [(m, rows[(eps, m)]) for m in m_values if (eps, m) in rows]
        for (m1, mu1), (m2, mu2) in zip(row, row[1:]):
            b = max(b, Fraction(mu2 - mu1, m2 - m1))
    c = max(Fraction(mu) - a * eps - b * m for (eps, m), mu in rows.items())
    return a, b, max(c, zero)


def level_measure(
    problem: FiberProblem,
    phi: SchwartzBruhat,
    eps_values,
    m_values=(0,),
    x0=None,
    resolution: int | None = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> LevelReport:
    """Measure local-constancy levels of the pushforward on shrinking regions.

    For each eps, the scanned region consists of the base points y with
    ord(y) at least the image window bound of phi and valuative proximity
    to every critical value at most eps; for each m, phi is restricted to
    the level-m ball at ``x0`` (the unit point by default).  The measured
    mu is the minimal level at which the pushforward is constant per cell
    across the region, checked exhaustively at the working resolution.
    """
    if phi.n != 1:
        raise FieldError("level measurement works along one-variable charts")
    field = phi.field
    eps_values = tuple(sorted(set(int(e) for e in eps_values)))
    m_values = tuple(sorted(set(int(m) for m in m_values)))
    if not eps_values or not m_values:
        raise FieldError("need at least one eps and one m value")
    if x0 is None:
        x0 = field.one()

    support, _ = phi.alpha_bounds()
    # ord f(x) >= window on the support of phi, so the pushforward
    # vanishes at any y below this valuation window
    window = min(
        _int_ord(field, coef) + exps[0] * support
        for exps, coef in problem.f.coeffs.items()
    )
    if resolution is None:
        resolution = max(
            3, eps_values[-1] + max(m_values[-1], 0) + 2, window + 1
        )
    if resolution <= max(eps_values[-1], window):
        raise FieldError(
            "resolution must exceed the largest eps and the image window"
        )
    count = field.q ** (resolution - window)
    if count > cell_budget:
        raise FieldError(
            f"scan of {count} cells exceeds the budget of {cell_budget}"
        )

    # critical values at the working precision; only those of valuation
    # above some eps can exclude scanned cells
    disc_fp = FieldPoly.from_multipoly(field, problem.disc)
    critical = [
        z
        for z, _ in _window_roots(
            field, list(disc_fp.coeffs), min(window, 0), resolution
        )
    ]

    region = Polyball.ball(field, (field.zero(),), window)
    centers = [c for (c,) in region.cells_at_level(resolution)]
    prox = {}
    for c in centers:
        best = None
        for z in critical:
            d = field.ord(field.sub(c, z))
            best = d if best is None else max(best, d)
        prox[c] = best

    restricted = {
        m: phi.restrict(Polyball.ball(field, (x0,), m)) for m in m_values
    }
    values: dict = {m: {} for m in m_values}
    rows = {}
    cells = {}
    for eps in eps_values:
        included = [
            c for c in centers if prox[c] is None or prox[c] <= eps
        ]
        for m in m_values:
            table = values[m]
            for c in included:
                if c not in table:
                    table[c] = fiber_integrate(problem, restricted[m], c)
            mu = resolution
            for cand in range(min(window, 0), resolution + 1):
                groups: dict = {}
                pure = True
                for c in included:
                    parent = field.canon_trunc(c, cand)
                    value = table[c]
                    if parent in groups:
                        if not (groups[parent] - value).is_zero():
                            pure = False
                            break
                    else:
                        groups[parent] = value
                if pure:
                    mu = cand
                    break
            rows[(eps, m)] = mu
            cells[(eps, m)] = len(included)

    return LevelReport(
        f_text=poly_to_string(problem.f),
        field=field,
        x0_json=field.element_to_json(x0),
        resolution=resolution,
        window=window,
        eps_values=eps_values,
        m_values=m_values,
        rows=rows,
        cells=cells,
        fit=_affine_fit(rows),
    )


def _int_ord(field: LocalField, coef: int):
    return field.ord(field.from_int(coef))
