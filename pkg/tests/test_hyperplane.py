import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from affsel.hyperplane import (
    GENERATED,
    ORIGINAL,
    Instance,
    SelectConfig,
    SignConditionError,
    _envelope_dim1_hull,
    _envelope_pairs,
    build_envelope,
    chord_value,
    extend_domain,
    intersection_point,
    select_affine,
)
from affsel.numerics import EXACT, FLOAT, Point, Scalar, split_by_last_coordinate
from affsel.oracle import verify_domination, verify_working_closure


def exact(v):
    return Scalar(EXACT, Fraction(v))


def make_instance(n, points, rows, xs=None):
    xs = xs or sorted(rows)
    return Instance.build(n, xs, points, rows)


WORKED = make_instance(1, [Point.of(-1), Point.of(2)], {"x0": [exact(0), exact(1)]})


class TestExtendDomain:
    def test_origin_off_domain(self):
        t = extend_domain(make_instance(1, [Point.of(-1), Point.of(2)],
                                        {"x0": [exact(3), exact(1)]}))
        assert t.extended_value("x0", Point.of(0)) == exact(0)

    def test_off_domain_negative_norm(self):
        t = extend_domain(make_instance(2, [Point.of(1, 1)], {"x0": [exact(7)]}))
        assert t.extended_value("x0", Point.of(2, 0)) == exact(-4)

    def test_original_points_win(self):
        t = extend_domain(make_instance(1, [Point.of(2)], {"x0": [exact(9)]}))
        assert t.extended_value("x0", Point.of(2)) == exact(9)
        assert all(tag == ORIGINAL for tag in t.tags)


class TestIntersectionPoint:
    def test_symmetric_midpoint(self):
        assert intersection_point(Point.of(1, 1), Point.of(1, -1)) == Point.of(1, 0)

    def test_formula(self):
        assert intersection_point(Point.of(0, 2), Point.of(3, -1)) == Point.of(2, 0)

    def test_dim_one(self):
        assert intersection_point(Point.of(2), Point.of(-1)) == Point.of(0)

    def test_sign_errors(self):
        with pytest.raises(SignConditionError):
            intersection_point(Point.of(1, -1), Point.of(1, 1))
        with pytest.raises(SignConditionError):
            intersection_point(Point.of(1, 0), Point.of(1, -1))

    @given(st.fractions(min_value="1/8", max_value=9, max_denominator=12),
           st.fractions(min_value=-9, max_value="-1/8", max_denominator=12),
           st.fractions(min_value=-9, max_value=9, max_denominator=12),
           st.fractions(min_value=-9, max_value=9, max_denominator=12))
    def test_on_segment_with_zero_last(self, yn, ypn, a, b):
        y, yp = Point.of(a, yn), Point.of(b, ypn)
        t = intersection_point(y, yp)
        assert t.coords[-1] == exact(0)
        # t = yp + s (y - yp) with s = -ypn / (yn - ypn) in (0, 1)
        s = -ypn / (yn - ypn)
        assert 0 < s < 1
        assert t.coords[0].value == ypn * (a - b) / (ypn - yn) + b


class TestChordValue:
    def test_worked(self):
        fx = {Point.of(2): exact(1), Point.of(-1): exact(0)}
        assert chord_value(fx, Point.of(2), Point.of(-1)) == exact("1/3")

    def test_constant(self):
        fx = {Point.of(1, 5): exact(7), Point.of(0, -2): exact(7)}
        assert chord_value(fx, Point.of(1, 5), Point.of(0, -2)) == exact(7)

    def test_linear_section(self):
        alpha = Fraction(3, 2)
        y, yp = Point.of(4), Point.of(-2)
        fx = {y: exact(alpha * 4), yp: exact(alpha * -2)}
        t = intersection_point(y, yp)
        assert chord_value(fx, y, yp).value == alpha * t.coords[0].value


class TestBuildEnvelope:
    def test_worked_dim1(self):
        child = build_envelope(extend_domain(WORKED))
        assert child.dim == 0
        assert list(child.ys.points) == [Point.of()]
        assert child.values["x0"] == (exact("1/3"),)
        assert child.tags == (GENERATED,)

    def test_empty_positive_side(self):
        inst = make_instance(1, [Point.of(-1), Point.of(0)], {"x0": [exact(2), exact(5)]})
        child = build_envelope(extend_domain(inst))
        assert list(child.ys.points) == [Point.of()]
        assert child.values["x0"] == (exact(5),)   # only the zero point descends
        assert child.tags == (ORIGINAL,)

    def test_colliding_pairs_take_max(self):
        # two symmetric pairs both cross at the origin of the hyperplane
        inst = make_instance(
            2,
            [Point.of(0, 1), Point.of(0, -1), Point.of(0, 2), Point.of(0, -2)],
            {"x0": [exact(1), exact(0), exact(-2), exact(3)]},
        )
        child = build_envelope(extend_domain(inst))
        idx = child.ys.index_of(Point.of(0))
        # chords at the shared crossing: 1/2, 5/3, -2/3, 1/2; extension value 0
        assert child.values["x0"][idx] == exact("5/3")

    def test_hull_matches_pair_enumeration(self):
        rng = random.Random(5)
        pts, rows = [], {"x0": [], "x1": []}
        seen = set()
        for _ in range(40):
            c = Fraction(rng.randint(-60, 60), rng.randint(1, 6))
            if c == 0 or c in seen:
                continue
            seen.add(c)
            pts.append(Point.of(c))
            rows["x0"].append(exact(Fraction(rng.randint(-40, 40), rng.randint(1, 4))))
            rows["x1"].append(exact(rng.randint(-5, 5)))
        inst = make_instance(1, pts, rows)
        table = extend_domain(inst)
        split = split_by_last_coordinate(table.ys)
        raw = {x: [s.value for s in table.values[x]] for x in inst.xs}

        results = {}
        for impl in (_envelope_pairs, _envelope_dim1_hull):
            acc = {}

            def merge(point, vals, tag, acc=acc):
                entry = acc.setdefault(point.raw(), {})
                for x, v in vals.items():
                    if x not in entry or entry[x] < v:
                        entry[x] = v

            impl(table, split, raw, merge)
            results[impl.__name__] = acc
        assert results["_envelope_pairs"] == results["_envelope_dim1_hull"]


class TestSelectAffine:
    def test_worked_trace(self):
        selector, trace = select_affine(WORKED)
        assert selector.b["x0"] == Point.of("1/2")
        assert selector.c["x0"] == exact(1)
        top = trace.levels[0]
        assert (top.n_plus, top.n_minus, top.n_zero, top.n_intersections) == (1, 1, 0, 1)
        assert top.upper["x0"] == exact(0)
        assert top.lower["x0"] == exact(1)
        base = trace.levels[-1]
        assert base.base_c["x0"] == exact(1)
        assert base.values["x0"] == (exact("1/3"),)

    def test_base_case_ceiling(self):
        inst = make_instance(0, [Point.of()], {"x0": [exact("23/10")]})
        selector, _ = select_affine(inst)
        assert selector.c["x0"] == exact(3)
        assert selector.b["x0"].dim == 0

    def test_base_case_tight(self):
        inst = make_instance(0, [Point.of()], {"x0": [exact("23/10")]})
        selector, _ = select_affine(inst, SelectConfig(base="tight"))
        assert selector.c["x0"] == exact("23/10")

    def test_linear_sections_dominated(self):
        alpha = Fraction(-7, 3)
        pts = [Point.of(v) for v in (-3, "-1/2", 0, 2, 5)]
        inst = make_instance(1, pts, {"x0": [exact(alpha * p.coords[0].value) for p in pts]})
        selector, trace = select_affine(inst)
        assert verify_domination(inst, selector).passed
        assert verify_working_closure(trace, selector).passed

    def test_one_sided_bracket(self):
        inst = make_instance(1, [Point.of(3)], {"x0": [exact(6)]})
        selector, trace = select_affine(inst)
        assert trace.levels[0].rule == "upper-only"
        # binding at the only sample point: zero slack
        rep = verify_domination(inst, selector)
        assert rep.passed and rep.min_slack["x0"] == exact(0)

    def test_empty_sides_zero_rule(self):
        inst = make_instance(1, [Point.of(0)], {"x0": [exact(-2)]})
        selector, trace = select_affine(inst)
        assert trace.levels[0].rule == "zero"
        assert selector.b["x0"] == Point.of(0)
        assert verify_domination(inst, selector).passed

    def test_staged_config_still_exact(self):
        selector, trace = select_affine(WORKED, SelectConfig(sandwich_mode="staged", depth=8))
        assert verify_domination(WORKED, selector).passed
        assert verify_working_closure(trace, selector).passed

    def test_permutation_equivariance(self):
        pts = [Point.of(2, 1), Point.of(-1, -1), Point.of(0, 3), Point.of(1, -2)]
        vals = [exact(1), exact(0), exact(-2), exact("5/2")]
        a = make_instance(2, pts, {"x0": vals})
        order = [2, 0, 3, 1]
        b = make_instance(2, [pts[i] for i in order], {"x0": [vals[i] for i in order]})
        sa, _ = select_affine(a)
        sb, _ = select_affine(b)
        assert sa.b["x0"] == sb.b["x0"] and sa.c["x0"] == sb.c["x0"]

    def test_section_functoriality(self):
        pts = [Point.of(-1, 2), Point.of(1, 1), Point.of(0, -3)]
        row = [exact("1/2"), exact(-1), exact(4)]
        inst = make_instance(2, pts, {"x0": row, "x1": [exact(9), exact(0), exact(0)],
                                      "x2": row})
        selector, _ = select_affine(inst)
        assert selector.b["x0"] == selector.b["x2"]
        assert selector.c["x0"] == selector.c["x2"]

    def test_duplicate_points_merge_by_max(self):
        inst = make_instance(1, [Point.of(1), Point.of(1)], {"x0": [exact(2), exact(7)]})
        assert len(inst.ys) == 1
        assert inst.values["x0"] == (exact(7),)

    def test_recursion_depth_and_growth(self):
        rng = random.Random(11)
        pts = []
        seen = set()
        while len(pts) < 9:
            p = Point.of(rng.randint(-4, 4), rng.randint(-4, 4), rng.randint(-4, 4))
            if p.raw() not in seen:
                seen.add(p.raw())
                pts.append(p)
        inst = make_instance(3, pts, {"x0": [exact(rng.randint(-5, 5)) for _ in pts]})
        _, trace = select_affine(inst)
        dims = [rec.dim for rec in trace.levels]
        assert dims == [3, 2, 1, 0]
        for rec in trace.levels:
            if rec.dim >= 1:
                assert rec.n_intersections <= rec.n_plus * rec.n_minus

    def test_float_mode(self):
        inst = WORKED.to_mode(FLOAT)
        selector, _ = select_affine(inst)
        assert verify_domination(inst, selector).passed
        assert abs(float(selector.b["x0"].coords[0].value) - 0.5) < 1e-9


class TestDegenerateInstances:
    def test_empty_sample_dim2(self):
        inst = Instance.build(2, ("x0",), [], {"x0": []})
        selector, trace = select_affine(inst)
        assert selector.b["x0"] == Point.of(0, 0)
        assert selector.c["x0"] == exact(1)
        assert [rec.dim for rec in trace.levels] == [2, 1, 0]

    def test_empty_sample_dim0_tight(self):
        inst = Instance.build(0, ("x0",), [], {"x0": []})
        selector, _ = select_affine(inst, SelectConfig(base="tight"))
        assert selector.c["x0"] == exact(0)

    def test_positive_side_only_feeds_empty_base(self):
        inst = make_instance(1, [Point.of(2), Point.of(5)], {"x0": [exact(1), exact(3)]})
        selector, trace = select_affine(inst)
        assert trace.levels[-1].n_points == 0
        assert verify_domination(inst, selector).passed


def test_chord_sign_error():
    fx = {Point.of(2): exact(1), Point.of(-1): exact(0)}
    with pytest.raises(SignConditionError):
        chord_value(fx, Point.of(-1), Point.of(2))
