"""Dominating affine/linear functional selection on finite instances,
with exact-arithmetic verification and an independent feasibility oracle."""

from .numerics import (
    EXACT,
    FLOAT,
    AffselError,
    Point,
    PointSet,
    PointTableBuilder,
    Scalar,
    dedup_insert,
    drop_last,
    origin_point,
    split_by_last_coordinate,
)
from .sandwich import (
    FiniteFunction,
    SandwichConfig,
    ceiling_cover,
    dyadic_lower,
    insert_simple,
    sandwich,
    separate,
    staged_parameters,
)
from .hyperplane import (
    AffineSelector,
    Instance,
    RecursionTrace,
    SelectConfig,
    WorkingTable,
    build_envelope,
    chord_value,
    extend_domain,
    intersection_point,
    select_affine,
)
from .conelift import (
    ConeInstance,
    LinearConfig,
    LinearSelector,
    feature_select,
    lift_to_cone,
    power_ladder,
    push_through_features,
    select_linear,
)
from .subgradient import (
    ConvexSectionInstance,
    SubgradientConfig,
    SubgradientSelector,
    check_midpoint_convexity,
    select_subgradient,
    shift_to_origin,
)
from .oracle import (
    FeasibilityResult,
    exact_linear_select,
    fm_feasible,
    verify_domination,
    verify_working_closure,
)
from .instances import (
    GenRanges,
    InstanceFile,
    gen_affine_dominated,
    gen_convex_sections,
    gen_meager_linear,
    load_instance_file,
    save_instance_file,
)

__version__ = "0.1.0"
