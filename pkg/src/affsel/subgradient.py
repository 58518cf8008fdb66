"""Subgradient selection at a base point for parameter-dependent convex
sections, by reduction to linear selection on the negated values.

The exact backend asks the feasibility oracle for a zero-residual answer;
the cone backend runs the lift-based linear selection and inherits its
certified residual.  Sections are grouped by shape (identical shifted
point/value data), so equal sections get bitwise-equal answers for free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from .numerics import EXACT, AffselError, Point, Scalar, origin_point
from .hyperplane import Instance
from .conelift import LinearConfig, select_linear
from .oracle import exact_linear_select


class NotNormalizedError(AffselError):
    pass


class ShiftDomainError(AffselError):
    pass


@dataclass(frozen=True)
class ConvexSectionInstance:
    """Value table g with per-parameter base points y0 (default: the origin).

    Convexity of the sections is a promise of the generator, not re-verified
    here; ``check_midpoint_convexity`` exists for spot checks.
    """

    instance: Instance
    y0: Optional[Mapping[str, Point]] = None

    def base_point(self, x: str) -> Point:
        if self.y0 is None:
            return origin_point(self.instance.n, self.instance.mode)
        return self.y0[x]


@dataclass(frozen=True)
class ShiftGroup:
    instance: Instance            # single shared section shape, one or more xs
    xs: Tuple[str, ...]


@dataclass(frozen=True)
class ShiftedSections:
    groups: Tuple[ShiftGroup, ...]

    def single(self) -> Instance:
        if len(self.groups) != 1:
            raise AffselError("shifted sections with non-uniform base points")
        return self.groups[0].instance


def shift_to_origin(csi: ConvexSectionInstance) -> ShiftedSections:
    """Translate each section so its base point is the origin and its value
    there is zero.  Sections with identical shifted data share one group."""
    inst = csi.instance
    groups: Dict[tuple, list] = {}
    order: List[tuple] = []
    for x in inst.xs:
        base = csi.base_point(x)
        j0 = inst.ys.index_of(base)
        if j0 is None:
            raise ShiftDomainError(f"base point of x={x} is not a sample point")
        g0 = inst.values[x][j0]
        shifted = []
        for j, p in enumerate(inst.ys.points):
            shifted.append((p.sub(base), inst.values[x][j] - g0))
        shifted.sort(key=lambda t: t[0].raw())
        key = tuple((p.raw(), v.value) for p, v in shifted)
        if key not in groups:
            groups[key] = [shifted, []]
            order.append(key)
        groups[key][1].append(x)

    out = []
    for key in order:
        shifted, xs = groups[key]
        points = [p for p, _ in shifted]
        rows = {x: [v for _, v in shifted] for x in xs}
        out.append(ShiftGroup(
            instance=Instance.build(inst.n, xs, points, rows, inst.mode),
            xs=tuple(xs),
        ))
    return ShiftedSections(groups=tuple(out))


@dataclass(frozen=True)
class SubgradientConfig:
    backend: str = "exact"        # "exact" | "cone"
    linear: LinearConfig = LinearConfig()
    check_convexity: bool = False


@dataclass
class SubgradientSelector:
    xs: Tuple[str, ...]
    p: Mapping[str, Point]
    epsilon: Mapping[str, Scalar]
    backend: str
    exact: Mapping[str, bool] = field(default_factory=dict)

    def serialize(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "subgradient",
            "X": list(self.xs),
            "p": [self.p[x].serialize() for x in self.xs],
            "epsilon": [self.epsilon[x].serialize() for x in self.xs],
            "backend": self.backend,
        }


def check_midpoint_convexity(inst: Instance) -> List[tuple]:
    """Midpoint convexity on sample triples: whenever the midpoint of two
    sample points is itself a sample point, its value may not exceed the
    average.  Returns the violations found."""
    violations = []
    half = Scalar(inst.mode, 0.5) if inst.mode != EXACT else Scalar.exact(1, 2)
    pts = inst.ys.points
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            mid = Point((a + b) * half for a, b in zip(pts[i].coords, pts[j].coords))
            k = inst.ys.index_of(mid)
            if k is None:
                continue
            for x in inst.xs:
                avg = (inst.values[x][i] + inst.values[x][j]) * half
                if not inst.values[x][k].le_bound(avg):
                    violations.append((x, pts[i], mid, pts[j],
                                       inst.values[x][k], avg))
    return violations


def _negate(inst: Instance) -> Instance:
    rows = {x: [-v for v in inst.values[x]] for x in inst.xs}
    return Instance(n=inst.n, xs=inst.xs, ys=inst.ys, values=rows)


def select_subgradient(csi: ConvexSectionInstance,
                       config: SubgradientConfig = SubgradientConfig(),
                       shift: Optional[bool] = None) -> SubgradientSelector:
    """Select p(x) with g(x, y) >= p(x).y - epsilon(x) at the (shifted) origin.

    Without shifting, each section must already be normalized: the origin is
    a sample point with value zero.  With shifting, sections are translated
    to their base points first, which normalizes them by construction.
    """
    inst = csi.instance
    mode = inst.mode
    if shift is None:
        origin = origin_point(inst.n, mode)
        shift = csi.y0 is not None and any(csi.base_point(x) != origin for x in inst.xs)

    if shift:
        sections = shift_to_origin(csi)
    else:
        origin = origin_point(inst.n, mode)
        j0 = inst.ys.index_of(origin)
        if j0 is None:
            raise NotNormalizedError("not normalized: origin is not a sample point")
        for x in inst.xs:
            if inst.values[x][j0].value != 0:
                raise NotNormalizedError(f"not normalized: g({x}, 0) != 0")
        sections = shift_to_origin(
            ConvexSectionInstance(instance=inst, y0=None))

    if config.check_convexity:
        for group in sections.groups:
            bad = check_midpoint_convexity(group.instance)
            if bad:
                x, a, m, b, got, avg = bad[0]
                raise AffselError(
                    f"midpoint convexity fails for x={x}: value {got.serialize()} at "
                    f"{m!r} exceeds average {avg.serialize()}")

    p_map: Dict[str, Point] = {}
    eps_map: Dict[str, Scalar] = {}
    exact_map: Dict[str, bool] = {}
    zero = Scalar.zero(mode)
    for group in sections.groups:
        neg = _negate(group.instance)
        if config.backend == "exact":
            witnesses = exact_linear_select(neg)
            rep = group.xs[0]
            p_rep = Point(-c for c in witnesses[rep].coords)
            for x in group.xs:
                p_map[x] = p_rep
                eps_map[x] = zero
                exact_map[x] = True
        elif config.backend == "cone":
            single = Instance(n=neg.n, xs=(group.xs[0],), ys=neg.ys,
                              values={group.xs[0]: neg.values[group.xs[0]]})
            sel = select_linear(single, config.linear)
            rep = group.xs[0]
            p_rep = Point(-c for c in sel.a[rep].coords)
            for x in group.xs:
                p_map[x] = p_rep
                eps_map[x] = sel.epsilon[rep]
                exact_map[x] = sel.exact[rep]
        else:
            raise AffselError(f"unknown backend {config.backend!r}")
    return SubgradientSelector(xs=inst.xs, p=p_map, epsilon=eps_map,
                               backend=config.backend, exact=exact_map)
