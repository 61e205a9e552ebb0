import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from windlmp.solver import (IterationLimitError, SimplexOptions, lp_certificate, resolve_fixed,
                            solve_lp, solve_mip)

from conftest import enumerate_binaries, lp, random_lp

INF = np.inf


def reference(P):
    """scipy's HiGHS on the same LP (rows split into <= pairs)."""
    A = P.A.toarray()
    fin_hi, fin_lo = np.isfinite(P.row_hi), np.isfinite(P.row_lo)
    A_ub = np.vstack([A[fin_hi], -A[fin_lo]])
    b_ub = np.concatenate([P.row_hi[fin_hi], -P.row_lo[fin_lo]])
    bounds = [(None if np.isinf(l) else l, None if np.isinf(u) else u) for l, u in zip(P.lb, P.ub)]
    r = linprog(P.c, A_ub=A_ub if A_ub.size else None, b_ub=b_ub if b_ub.size else None,
                bounds=bounds, method="highs")
    return {0: "optimal", 2: "infeasible", 3: "unbounded"}[r.status], r.fun


def test_single_bound_row():
    # max x s.t. x <= 5, x >= 0
    P = lp([[1.0]], [-1.0], [0.0], [INF], [-INF], [5.0])
    s = solve_lp(P)
    assert s.status == "optimal"
    assert s.x[0] == pytest.approx(5.0)
    assert s.objective == pytest.approx(-5.0)
    assert s.duals[0] == pytest.approx(-1.0)


def test_two_generator_dispatch():
    # min 10 g1 + 30 g2, g1 + g2 = 50, g1 <= 20
    P = lp([[1.0, 1.0], [1.0, 0.0]], [10.0, 30.0], [0, 0], [INF, INF], [50, -INF], [50, 20])
    s = solve_lp(P)
    assert s.x == pytest.approx([20.0, 30.0])
    assert s.duals[0] == pytest.approx(30.0)
    assert s.duals[1] == pytest.approx(-20.0)


def test_empty_equality_row_is_infeasible():
    P = lp(np.zeros((1, 1)), [0.0], [0.0], [1.0], [1.0], [1.0])
    assert solve_lp(P).status == "infeasible"


def test_unbounded():
    P = lp([[1.0, -1.0]], [-1.0, 0.0], [0, 0], [INF, INF], [-INF], [1.0])
    assert solve_lp(P).status == "unbounded"


def test_iteration_limit():
    rng = np.random.default_rng(3)
    P = random_lp(rng, 10, 10)
    with pytest.raises(IterationLimitError):
        solve_lp(P, options=SimplexOptions(max_iter=1, dual=False))


def test_trace_log(tmp_path):
    P = lp([[1.0, 1.0], [1.0, 0.0]], [10.0, 30.0], [0, 0], [INF, INF], [50, -INF], [50, 20])
    path = tmp_path / "trace.txt"
    solve_lp(P, options=SimplexOptions(trace=str(path)))
    lines = path.read_text().split()
    assert lines, "trace file should not be empty"


@pytest.mark.parametrize("dual", [True, False])
@settings(max_examples=120, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_matches_reference_and_certifies(seed, dual):
    rng = np.random.default_rng(seed)
    P = random_lp(rng)
    if rng.random() < 0.15:
        P.row_lo = P.row_lo + 3 * rng.random(P.row_lo.size)
    s = solve_lp(P, options=SimplexOptions(dual=dual))
    status, fun = reference(P)
    assert s.status == status
    if status == "optimal":
        assert s.objective == pytest.approx(fun, rel=1e-7, abs=1e-7)
        cert = lp_certificate(P, s)
        assert cert["primal_infeasibility"] <= 1e-8
        assert cert["dual_infeasibility"] <= 1e-8
        assert cert["complementary_slackness"] <= 1e-7
        assert cert["duality_gap"] <= 1e-6


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), nbin=st.integers(1, 6))
def test_branch_and_bound_equals_enumeration(seed, nbin):
    rng = np.random.default_rng(seed)
    P = random_lp(rng, n=int(rng.integers(nbin, nbin + 6)), nbin=nbin)
    best = enumerate_binaries(P)
    mip = solve_mip(P)
    if best == np.inf:
        assert mip.status == "infeasible"
    elif best == -np.inf:
        assert mip.status == "unbounded"
    else:
        assert mip.status == "optimal"
        assert mip.objective == pytest.approx(best, rel=1e-6, abs=1e-6)
        assert abs(mip.objective - mip.bound) <= 1e-6 * max(1.0, abs(mip.objective))


def test_branch_and_bound_twelve_binaries():
    rng = np.random.default_rng(12)
    P = random_lp(rng, m=8, n=16, nbin=12)
    assert solve_mip(P).objective == pytest.approx(enumerate_binaries(P), rel=1e-6, abs=1e-6)


def test_no_binaries_same_as_lp():
    rng = np.random.default_rng(5)
    for _ in range(10):
        P = random_lp(rng)
        s, m = solve_lp(P), solve_mip(P)
        if s.optimal:
            assert m.objective == pytest.approx(s.objective, abs=1e-9)


def test_startup_not_worth_it():
    # one unit: startup 1000, running earns 600 -> stays off
    # vars: u (binary), p ; min 1000 u - 600/100 p, p <= 100 u
    P = lp([[-100.0, 1.0]], [1000.0, -6.0], [0, 0], [1, 100], [-INF], [0.0], binary=[True, False])
    m = solve_mip(P)
    assert m.assignment == {0: 0}
    assert m.objective == pytest.approx(0.0)
    on = resolve_fixed(P, {0: 1})
    assert on.objective == pytest.approx(400.0)


def test_resolve_fixed_matches_incumbent():
    rng = np.random.default_rng(8)
    P = random_lp(rng, m=6, n=10, nbin=4)
    m = solve_mip(P)
    if m.status == "optimal":
        r = resolve_fixed(P, m.assignment)
        assert r.objective == pytest.approx(m.objective, rel=1e-8, abs=1e-8)


def test_resolve_fixed_needs_full_assignment():
    P = lp([[-100.0, 1.0]], [1000.0, -6.0], [0, 0], [1, 100], [-INF], [0.0], binary=[True, False])
    with pytest.raises(ValueError):
        resolve_fixed(P, {})


def test_deterministic():
    rng = np.random.default_rng(21)
    P = random_lp(rng, m=10, n=14, nbin=5)
    a, b = solve_mip(P), solve_mip(P)
    assert a.nodes == b.nodes
    assert np.array_equal(a.x, b.x)
    s1, s2 = solve_lp(P), solve_lp(P)
    assert np.array_equal(s1.basis.basic, s2.basis.basic)
    assert np.array_equal(s1.duals, s2.duals)
