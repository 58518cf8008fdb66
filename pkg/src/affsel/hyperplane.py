"""Per-parameter dominating affine functionals by recursion on the dimension.

Each level extends the value table by -|y|^2 off the sample, splits the
working set by the sign of the last coordinate, collapses crossing chords
into an envelope on the separating hyperplane, recurses one dimension down,
and finally inserts the last coefficient inside the bracket [U, L] implied
by the lower-dimensional solution.  All choices are deterministic functions
of the value section, so equal sections always produce equal selectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from .numerics import (
    EXACT,
    FLOAT,
    AffselError,
    Point,
    PointSet,
    PointTableBuilder,
    Scalar,
    drop_last,
    split_by_last_coordinate,
)
from .sandwich import FiniteFunction, SandwichConfig, ceiling_cover, sandwich

ORIGINAL = "original"
GENERATED = "generated"

# above this many crossing pairs at dimension one, the single envelope value
# is taken from the upper hull bridge instead of the full pair enumeration
_HULL_CUTOFF = 64


class SignConditionError(AffselError):
    pass


class InvariantBreachError(AffselError):
    def __init__(self, message: str, detail: Optional[dict] = None):
        super().__init__(message)
        self.detail = detail or {}


@dataclass(frozen=True)
class Instance:
    """Finite selection instance: parameter ids, a point cloud, and a value table.

    Rows are aligned with the canonical order of ``ys``; duplicate points
    supplied at build time are merged by pointwise max.
    """

    n: int
    xs: Tuple[str, ...]
    ys: PointSet
    values: Mapping[str, Tuple[Scalar, ...]]

    @property
    def mode(self) -> str:
        return self.ys.mode

    @classmethod
    def build(cls, n: int, xs, points, rows: Mapping, mode: str = EXACT) -> "Instance":
        """Canonicalize: dedup/sort points, realign rows, merge duplicates by max."""
        xs = tuple(xs)
        points = list(points)
        builder = PointTableBuilder(n, xs, mode)
        for j, p in enumerate(points):
            builder.insert(p, {x: rows[x][j] for x in xs})
        ps, aligned = builder.freeze()
        return cls(n=n, xs=xs, ys=ps, values=aligned)

    def value(self, x: str, index: int) -> Scalar:
        return self.values[x][index]

    def section_fingerprint(self, x: str) -> tuple:
        return tuple(s.value for s in self.values[x])

    def to_mode(self, mode: str) -> "Instance":
        if mode == self.mode:
            return self
        conv = lambda s: Scalar(mode, s.value)
        points = [Point(conv(c) for c in p.coords) for p in self.ys.points]
        rows = {x: [conv(s) for s in self.values[x]] for x in self.xs}
        return Instance.build(self.n, self.xs, points, rows, mode)


@dataclass
class EnvelopeStats:
    n_plus: int = 0
    n_minus: int = 0
    n_zero: int = 0
    n_intersections: int = 0


@dataclass
class WorkingTable:
    """One recursion level: a working set with per-parameter values and origin tags.

    Off-set queries fall back to -|w|^2 in the current level's coordinates.
    """

    dim: int
    ys: PointSet
    values: Mapping[str, Tuple[Scalar, ...]]
    tags: Tuple[str, ...]
    mode: str = EXACT
    envelope_stats: Optional[EnvelopeStats] = None

    def extended_value(self, x: str, point: Point) -> Scalar:
        idx = self.ys.index_of(point)
        if idx is not None:
            return self.values[x][idx]
        return -point.norm_sq()


def extend_domain(inst: Instance) -> WorkingTable:
    """Wrap an instance as the top working table; every point is original."""
    return WorkingTable(
        dim=inst.n,
        ys=inst.ys,
        values=inst.values,
        tags=tuple(ORIGINAL for _ in inst.ys.points),
        mode=inst.mode,
    )


def intersection_point(y: Point, yprime: Point) -> Point:
    """Where the segment from yprime (last coord < 0) to y (last coord > 0)
    crosses the hyperplane {last coordinate = 0}; the last coordinate of the
    result cancels exactly."""
    if y.coords[-1].sign() <= 0 or yprime.coords[-1].sign() >= 0:
        raise SignConditionError(
            "intersection requires last coordinates of opposite strict signs")
    yn = y.coords[-1].value
    ypn = yprime.coords[-1].value
    den = yn - ypn
    coords = []
    for a, b in zip(y.coords, yprime.coords):
        coords.append(Scalar(a.mode, (yn * b.value - ypn * a.value) / den))
    return Point(coords)


def _chord_raw(yn, ypn, fy, fyp):
    return (yn * fyp - ypn * fy) / (yn - ypn)


def chord_value(fx: Mapping[Point, Scalar], y: Point, yprime: Point) -> Scalar:
    """Value at the crossing point of the affine chord through (y, fx[y]) and
    (yprime, fx[yprime])."""
    if y.coords[-1].sign() <= 0 or yprime.coords[-1].sign() >= 0:
        raise SignConditionError(
            "chord requires last coordinates of opposite strict signs")
    fy, fyp = fx[y], fx[yprime]
    yn, ypn = y.coords[-1], yprime.coords[-1]
    mode = FLOAT if FLOAT in (fy.mode, fyp.mode, yn.mode) else EXACT
    return Scalar(mode, _chord_raw(yn.value, ypn.value, fy.value, fyp.value))


def _cross_nonneg_int(o, a, b) -> bool:
    """Whether (a.c - o.c)(b.v - o.v) - (a.v - o.v)(b.c - o.c) >= 0 for points
    given as (cn, cd, vn, vd) integer quadruples with positive denominators.
    Pure integer arithmetic: no rational normalization in the hull loop."""
    ocn, ocd, ovn, ovd = o
    acn, acd, avn, avd = a
    bcn, bcd, bvn, bvd = b
    d1 = acn * ocd - ocn * acd
    d2 = bvn * ovd - ovn * bvd
    d3 = avn * ovd - ovn * avd
    d4 = bcn * ocd - ocn * bcd
    # shared positive factor ocd*ovd cancels from both sides
    return d1 * d2 * avd * bcd >= d3 * d4 * acd * bvd


def _upper_hull_value_at_zero(pts_sorted):
    """Max crossing-chord value at coordinate 0 for 1-d points (coord, value).

    Equals the upper convex hull of the 2-d cloud evaluated at abscissa zero;
    the hull edge spanning zero joins one point of each sign, so the bridge
    realizes the pairwise maximum exactly.
    """
    exact = pts_sorted and isinstance(pts_sorted[0][0], Fraction)
    if exact:
        quads = [(c.numerator, c.denominator,
                  Fraction(v).numerator, Fraction(v).denominator)
                 for c, v in pts_sorted]
        hull_idx: list = []
        for i in range(len(quads)):
            while len(hull_idx) >= 2 and _cross_nonneg_int(
                    quads[hull_idx[-2]], quads[hull_idx[-1]], quads[i]):
                hull_idx.pop()
            hull_idx.append(i)
        hull = [pts_sorted[i] for i in hull_idx]
    else:
        hull = []
        for c, v in pts_sorted:
            while len(hull) >= 2:
                (ox, oy), (ax, ay) = hull[-2], hull[-1]
                if (ax - ox) * (v - oy) - (ay - oy) * (c - ox) >= 0:
                    hull.pop()
                else:
                    break
            hull.append((c, v))
    for (px, pv), (qx, qv) in zip(hull, hull[1:]):
        if px < 0 and qx > 0:
            return _chord_raw(qx, px, qv, pv)
    raise AffselError("hull does not span zero")  # unreachable with both signs present


def build_envelope(table: WorkingTable) -> WorkingTable:
    """Collapse one dimension: chord envelope at crossing points, merged with
    the extended values, on the dropped-coordinate point set."""
    if table.dim < 1:
        raise AffselError("cannot build an envelope at dimension zero")
    split = split_by_last_coordinate(table.ys)
    xs = tuple(table.values)
    raw_rows = {x: [s.value for s in table.values[x]] for x in xs}
    mode = table.mode

    # child accumulator: raw key -> [point, {x: raw value}, tag]
    acc: Dict[tuple, list] = {}

    def merge(point: Point, vals: dict, tag: str):
        key = point.raw()
        entry = acc.get(key)
        if entry is None:
            acc[key] = [point, vals, tag]
            return
        stored = entry[1]
        for x, v in vals.items():
            if x not in stored or stored[x] < v:
                stored[x] = v
        if tag == ORIGINAL:
            entry[2] = ORIGINAL

    for dropped in split.zero.points:
        src = split.zero_to_source[dropped]
        i = table.ys.index_of(src)
        merge(dropped, {x: raw_rows[x][i] for x in xs}, table.tags[i])

    n_pairs = len(split.plus) * len(split.minus)
    stats = EnvelopeStats(n_plus=len(split.plus), n_minus=len(split.minus),
                          n_zero=len(split.zero))

    if n_pairs:
        if table.dim == 1 and n_pairs > _HULL_CUTOFF:
            stats.n_intersections = 1
            _envelope_dim1_hull(table, split, raw_rows, merge)
        else:
            stats.n_intersections = _envelope_pairs(table, split, raw_rows, merge)

    child_points = [entry[0] for entry in acc.values()]
    child_ps = PointSet(table.dim - 1, child_points, mode)
    rows = {x: [] for x in xs}
    tags = []
    for p in child_ps.points:
        entry = acc[p.raw()]
        tags.append(entry[2])
        for x in xs:
            rows[x].append(Scalar(mode, entry[1][x]))
    return WorkingTable(
        dim=table.dim - 1,
        ys=child_ps,
        values={x: tuple(rows[x]) for x in xs},
        tags=tuple(tags),
        mode=mode,
        envelope_stats=stats,
    )


def _envelope_pairs(table, split, raw_rows, merge) -> int:
    xs = tuple(raw_rows)
    plus_idx = [(p, table.ys.index_of(p)) for p in split.plus.points]
    minus_idx = [(q, table.ys.index_of(q)) for q in split.minus.points]
    seen = set()
    zero = Scalar.zero(table.mode)
    for y, iy in plus_idx:
        yn = y.coords[-1].value
        for yp, ip in minus_idx:
            ypn = yp.coords[-1].value
            den = yn - ypn
            tpoint = drop_last(intersection_point(y, yp))
            seen.add(tpoint.raw())
            full = Point(list(tpoint.coords) + [zero])
            stored = table.ys.index_of(full)
            if stored is None:
                ext_base = -tpoint.norm_sq().value   # shared across sections
            chords = {}
            for x in xs:
                row = raw_rows[x]
                chord = (yn * row[ip] - ypn * row[iy]) / den
                ext = row[stored] if stored is not None else ext_base
                chords[x] = ext if ext > chord else chord
            merge(tpoint, chords, GENERATED)
    return len(seen)


def _envelope_dim1_hull(table, split, raw_rows, merge) -> None:
    # at dimension one every crossing pair meets the hyperplane at the same
    # point, so the envelope is a single max taken from the hull bridge
    xs = tuple(raw_rows)
    coords = []
    for p in list(split.plus.points) + list(split.minus.points):
        coords.append((p.coords[0].value, table.ys.index_of(p)))
    coords.sort(key=lambda t: t[0])
    zero = Point([Scalar.zero(table.mode)])
    stored = table.ys.index_of(zero)
    child = Point(())
    vals = {}
    for x in xs:
        row = raw_rows[x]
        h = _upper_hull_value_at_zero([(c, row[i]) for c, i in coords])
        ext = row[stored] if stored is not None else -zero.norm_sq().value
        vals[x] = h if h > ext else ext
    merge(child, vals, GENERATED)


@dataclass(frozen=True)
class SelectConfig:
    sandwich_mode: str = "midpoint"   # "midpoint" | "staged"
    depth: int = 24
    base: str = "novikov"             # "novikov" | "tight"


@dataclass(frozen=True)
class AffineSelector:
    """Per-parameter dominating affine functional y -> B(x)·y + C(x)."""

    n: int
    xs: Tuple[str, ...]
    b: Mapping[str, Point]
    c: Mapping[str, Scalar]

    def evaluate(self, x: str, point: Point) -> Scalar:
        total = self.c[x]
        for coeff, coord in zip(self.b[x].coords, point.coords):
            total = total + coeff * coord
        return total

    def serialize(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "affine",
            "n": self.n,
            "X": list(self.xs),
            "B": [self.b[x].serialize() for x in self.xs],
            "C": [self.c[x].serialize() for x in self.xs],
        }


@dataclass
class LevelRecord:
    """Diagnostics for one recursion node."""

    dim: int
    n_points: int
    n_plus: int = 0
    n_minus: int = 0
    n_zero: int = 0
    n_intersections: int = 0
    points: Optional[PointSet] = None
    tags: Tuple[str, ...] = ()
    values: Optional[Mapping[str, Tuple[Scalar, ...]]] = None
    upper: Optional[Dict[str, Optional[Scalar]]] = None   # U per x (None: no positive side)
    lower: Optional[Dict[str, Optional[Scalar]]] = None   # L per x (None: no negative side)
    rule: str = ""                                        # sandwich | lower-only | upper-only | zero | base
    sandwich_mode: Optional[str] = None
    base_rule: Optional[str] = None
    base_c: Optional[Dict[str, Scalar]] = None

    def summary(self) -> dict:
        out = {"dim": self.dim, "points": self.n_points}
        if self.dim >= 1:
            out.update({
                "plus": self.n_plus, "minus": self.n_minus, "zero": self.n_zero,
                "intersections": self.n_intersections, "rule": self.rule,
            })
        else:
            out["base_rule"] = self.base_rule
        return out


@dataclass
class RecursionTrace:
    levels: List[LevelRecord] = field(default_factory=list)

    def summary(self) -> dict:
        return {"levels": [rec.summary() for rec in self.levels]}


def select_affine(inst: Instance, config: SelectConfig = SelectConfig()):
    """Select a dominating affine functional per parameter.

    Returns (selector, trace); domination holds with zero slack on the full
    working closure in exact mode.
    """
    working = extend_domain(inst)
    trace = RecursionTrace()
    b_rows, c_map = _select_level(working, config, trace.levels)
    selector = AffineSelector(
        n=inst.n,
        xs=inst.xs,
        b={x: Point(b_rows[x]) for x in inst.xs},
        c=c_map,
    )
    return selector, trace


def _base_case(working: WorkingTable, config: SelectConfig, levels) -> Dict[str, Scalar]:
    xs = tuple(working.values)
    mode = working.mode
    record = LevelRecord(dim=0, n_points=len(working.ys), points=working.ys,
                        tags=working.tags, values=working.values,
                        rule="base", base_rule=config.base)
    if len(working.ys):
        base_vals = FiniteFunction(xs, {x: working.values[x][0] for x in xs})
        if config.base == "tight":
            c_map = dict(base_vals.values)
        else:
            c_map = dict(ceiling_cover(base_vals).values)
    else:
        fallback = Scalar.one(mode) if config.base != "tight" else Scalar.zero(mode)
        c_map = {x: fallback for x in xs}
    record.base_c = c_map
    levels.append(record)
    return c_map


def _select_level(working: WorkingTable, config: SelectConfig, levels):
    k = working.dim
    xs = tuple(working.values)
    if k == 0:
        c_map = _base_case(working, config, levels)
        return {x: [] for x in xs}, c_map

    child = build_envelope(working)
    stats = child.envelope_stats
    record = LevelRecord(
        dim=k, n_points=len(working.ys), points=working.ys, tags=working.tags,
        values=working.values, n_plus=stats.n_plus, n_minus=stats.n_minus,
        n_zero=stats.n_zero, n_intersections=stats.n_intersections,
    )
    levels.append(record)
    b_rows, c_map = _select_level(child, config, levels)

    split = split_by_last_coordinate(working.ys)
    plus_idx = [(p, working.ys.index_of(p)) for p in split.plus.points]
    minus_idx = [(p, working.ys.index_of(p)) for p in split.minus.points]
    mode = working.mode

    upper: Dict[str, Optional[Scalar]] = {}
    lower: Dict[str, Optional[Scalar]] = {}
    for x in xs:
        row = [s.value for s in working.values[x]]
        bc = [s.value for s in b_rows[x]]
        cval = c_map[x].value

        def residual_slope(point: Point, idx: int):
            rest = cval
            for coeff, coord in zip(bc, point.coords):
                rest = rest + coeff * coord.value
            return (row[idx] - rest) / point.coords[-1].value

        u_val: Optional[Scalar] = None
        if plus_idx:
            u_val = Scalar(mode, max(residual_slope(p, i) for p, i in plus_idx))
        l_val: Optional[Scalar] = None
        if minus_idx:
            l_val = Scalar(mode, min(residual_slope(p, i) for p, i in minus_idx))
        if u_val is not None and l_val is not None and not u_val.le_bound(l_val):
            raise InvariantBreachError(
                f"invariant breach: bracket violated at x={x} (dim {k})",
                detail={"x": x, "dim": k, "U": u_val.serialize(), "L": l_val.serialize(),
                        "levels": [rec.summary() for rec in levels]},
            )
        upper[x] = u_val
        lower[x] = l_val
    record.upper = upper
    record.lower = lower

    if plus_idx and minus_idx:
        record.rule = "sandwich"
        record.sandwich_mode = config.sandwich_mode
        u_fn = FiniteFunction(xs, {x: upper[x] for x in xs})
        l_fn = FiniteFunction(xs, {x: lower[x] for x in xs})
        last = sandwich(u_fn, l_fn, SandwichConfig(config.sandwich_mode, config.depth))
        picks = {x: last(x) for x in xs}
    elif minus_idx:
        record.rule = "lower-only"
        picks = {x: lower[x] for x in xs}
    elif plus_idx:
        record.rule = "upper-only"
        picks = {x: upper[x] for x in xs}
    else:
        record.rule = "zero"
        picks = {x: Scalar.zero(mode) for x in xs}

    for x in xs:
        b_rows[x].append(picks[x])
    return b_rows, c_map
