"""Session-scoped fixtures: each bundled problem is solved exactly once.

Hierarchy runs, certification reports, efficient-point walks and the
per-order value tables are cached here and shared by the unit tests and
the acceptance suite.
"""

from __future__ import annotations

import numpy as np
import pytest

from fsipp import instances
from fsipp.certify import certify_point
from fsipp.multiobj import epsilon_constraint_solve, scalarize
from fsipp.relax import solve_hierarchy

# bounding boxes (per coordinate) that contain each biobjective feasible set,
# used for grid audits and image exports
AUDIT_BOXES = {
    "I": ((-2.7, 0.75), (-0.65, 2.7)),
    "II": ((-1.0, 1.0), (-1.0, 1.0)),
    "III": ((-1.6, 1.6), (-1.6, 1.6)),
    "IV": ((-1.6, 1.6), (-1.6, 1.6)),
}

PLANTED_SEEDS = tuple(range(20))


@pytest.fixture(scope="session")
def case1_run():
    prob, opts = instances.case1_problem()
    return prob, opts, solve_hierarchy(prob, opts)


@pytest.fixture(scope="session")
def case2_run():
    prob, opts = instances.case2_problem()
    return prob, opts, solve_hierarchy(prob, opts)


@pytest.fixture(scope="session")
def case3_run():
    prob, opts = instances.case3_problem()
    return prob, opts, solve_hierarchy(prob, opts, k_range=(4, 4))


@pytest.fixture(scope="session")
def case4_run():
    prob, opts = instances.case4_problem()
    return prob, opts, solve_hierarchy(prob, opts, k_range=(4, 4))


@pytest.fixture(scope="session")
def quarter_run():
    prob, opts = instances.quarter_circle_problem()
    return prob, opts, solve_hierarchy(prob, opts, k_range=(4, 4))


@pytest.fixture(scope="session")
def quarter_kkt(quarter_run):
    prob, _, trace = quarter_run
    return certify_point(trace.candidate, prob, tau=1e-3)


@pytest.fixture(scope="session")
def stage1_run():
    """First scalarized stage of the biobjective interval fixture."""
    mprob, u0, opts = instances.biobjective_case1()
    sub = scalarize(mprob, 1, u0, check_feasible=False)
    return sub, opts, solve_hierarchy(sub, opts)


@pytest.fixture(scope="session")
def bio_runs():
    makers = {
        "I": instances.biobjective_case1,
        "II": instances.biobjective_case2,
        "III": instances.biobjective_case3,
        "IV": instances.biobjective_case4,
    }
    out = {}
    for name, make in makers.items():
        mprob, u0, opts = make()
        out[name] = (mprob, u0, opts, epsilon_constraint_solve(mprob, u0, opts))
    return out


def _order_rows(make, orders):
    prob, opts = make()
    return [solve_hierarchy(prob, opts, k_range=(k, k)).rows[0] for k in orders]


@pytest.fixture(scope="session")
def sandwich_data(case1_run, case2_run, stage1_run):
    """(rows, r_star) per fixture: per-order value rows and the frozen
    reference optimum each dual value must stay below (within 1e-3)."""
    data = {
        "interval-route": (case1_run[2].rows, 0.25),
        "ball-route": (case2_run[2].rows, 0.5),
        "stage1-route": (stage1_run[2].rows, 0.47907755003264546),
        "rank-route-interval": (_order_rows(instances.case3_problem,
                                            (3, 4, 5)), -0.8745),
        "rank-route-ball": (_order_rows(instances.case4_problem,
                                        (3, 4, 5)), 0.7822589392611532),
        "general-route": (_order_rows(instances.quarter_circle_problem,
                                      (4, 5)), 0.0274),
    }
    return data


@pytest.fixture(scope="session")
def planted_runs():
    """Random convex-quadratic instances with the optimum planted at c0."""
    out = []
    for seed in PLANTED_SEEDS:
        prob, opts, c0, argmin = instances.planted_convex_quadratic(seed)
        if seed % 2 == 0:
            rows = solve_hierarchy(prob, opts).rows
        else:
            rows = [solve_hierarchy(prob, opts, k_range=(k, k)).rows[0]
                    for k in (1, 2, 3)]
        out.append((seed, prob, c0, np.asarray(argmin), rows))
    return out
