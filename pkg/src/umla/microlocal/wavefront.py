"""Exact wavefront cones of mixed-cell distributions.

``wavefront_exact`` reads the singular pairs (base point, codirection) off
the canonical term list:

* a purely atomic term (every factor a point mass) is singular at its point
  in every codirection;
* a mixed term (point masses in some coordinates, densities in the others)
  whose density-coordinate modulations are all zero is singular over its
  support, in exactly the codirections supported on its point-mass
  coordinates;
* density factors are locally constant, so purely density terms contribute
  nothing; and a mixed term with a nonzero canonical modulation on a density
  coordinate contributes nothing either, because a localization coarser than
  the modulation's conductor kills the term entirely along every ray.

This reading is exact term by term.  Distinct terms sharing a base point can
conspire to cancel along special codirections, which would make the true
wavefront set strictly smaller than the returned cone; the directional
checker in ``smoothness`` detects such cancellations exactly, and the two
are asserted against each other in the test suite.
"""

from __future__ import annotations

from ..distribution import BallF, DeltaF, MixedCellDistribution
from ..fields import FieldError
from .cones import BaseBall, BaseFull, BasePoint, LambdaCone, TaggedCell

__all__ = ["wavefront_exact", "tensor_bound_cone", "zero_section_cells"]


def _base_of_factor(fac):
    if isinstance(fac, DeltaF):
        return BasePoint(fac.point)
    if isinstance(fac, BallF):
        return BaseBall(fac.center, fac.r)
    return BaseFull()


def _term_cell(field, mod, fs) -> TaggedCell | None:
    """The wavefront cell of one canonical term, or None if it has none."""
    delta_coords = [isinstance(f, DeltaF) for f in fs]
    if not any(delta_coords):
        return None  # pure density: locally constant, smooth everywhere
    for is_delta, a, fac in zip(delta_coords, mod, fs):
        if not is_delta and not field.is_zero(a):
            # a modulated density coordinate: a coarse localization keeps the
            # modulation unabsorbed and the transformed ball misses zero, so
            # the term sustains no singular ray on its own
            return None
    base = tuple(_base_of_factor(f) for f in fs)
    cofree = tuple(delta_coords)
    return TaggedCell(field, base, cofree)


def wavefront_exact(u: MixedCellDistribution) -> LambdaCone:
    """The wavefront cone read off the canonical terms (see module docstring)."""
    cells = []
    for _, mod, fs in u.terms:
        cell = _term_cell(u.field, mod, fs)
        if cell is not None:
            cells.append(cell)
    return LambdaCone(u.field, u.n, tuple(cells))


def zero_section_cells(u: MixedCellDistribution) -> list:
    """Support-over-zero-codirection cells, one per term.

    These are the degenerate cells pairing the term's support with the pinned
    codirection 0; they are empty as cone cells (a codirection must be
    nonzero) but serve as concatenation factors for product bounds.
    """
    out = []
    for _, _, fs in u.terms:
        base = tuple(_base_of_factor(f) for f in fs)
        out.append(TaggedCell(u.field, base, tuple(False for _ in fs)))
    return out


def tensor_bound_cone(
    u1: MixedCellDistribution, u2: MixedCellDistribution
) -> LambdaCone:
    """The product bound for the wavefront of a tensor product.

    The wavefront of ``u1 (x) u2`` is contained in the set of pairs whose
    first block lies in the wavefront of ``u1`` or over its support with
    codirection zero, and likewise for the second block, excluding the zero
    section.  The returned cone is the union of all concatenations of such
    cell pairs.
    """
    if u1.field != u2.field:
        raise FieldError("tensor factors live on different fields")
    f = u1.field
    left = list(wavefront_exact(u1).cells) + zero_section_cells(u1)
    right = list(wavefront_exact(u2).cells) + zero_section_cells(u2)
    cells = []
    for a in left:
        for b in right:
            if not any(a.cofree) and not any(b.cofree):
                continue  # both blocks pinned to zero: the excluded zero section
            cells.append(
                TaggedCell(f, a.base + b.base, a.cofree + b.cofree)
            )
    return LambdaCone(f, u1.n + u2.n, tuple(cells))
