import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from windlmp.formulation import assemble, assemble_deterministic, audit_symbols, expected_counts
from windlmp.grid import network_from_dict, network_to_dict
from windlmp.program import MarketProgram
from windlmp.scenarios import WindScenario, make_scenario_set
from windlmp.solver import resolve_fixed, solve_lp, solve_mip

from conftest import enumerate_binaries


def single(traj):
    return make_scenario_set([WindScenario(tuple(traj), 1.0)])


def edit(net, fn):
    doc = network_to_dict(net)
    fn(doc)
    return network_from_dict(doc)


def one_bus(T=1, demand=(50.0,), **gen):
    g = {"id": "G", "bus": 1, "p_min": 0.0, "p_max": 100.0,
         "blocks": [{"price": 30.0, "size": 100.0}], "initial_status": 1}
    g.update(gen)
    return network_from_dict({
        "horizon": T, "period_hours": [1.0] * T, "buses": [{"id": 1}], "lines": [],
        "generators": [g],
        "loads": [{"id": "D", "bus": 1, "demand": list(demand)}],
        "wind": {"bus": 1, "p_min": [0.0] * T, "p_max": [0.0] * T},
    })


# tiny2 counts derived by hand from the builder rules:
#   first stage per (unit, t): Ps RUg RDg RNSg CSU u + one block  -> 7 x 2 units x 2 t = 28
#   first stage per t: Ws; per (load, t): Ls RUl RDl             -> 2 + 6 = 8
#   per scenario per t: 2 x (PG r C v) + (rUl rDl Lshed Lc) + f + 2 delta = 15 -> 30
#   rows first stage per t: MKT + 7 per unit                      -> 15 x 2 = 30
#   rows per scenario per t: 2 BAL, 1 FLOW, per unit PGMIN PGMAX DEPLOY DEPUP DEPDN
#     BLKLO BLKHI VGATE SUW (9 x 2), per load LCON LRUP LRDN SHED (4)  -> 25 -> 50
TINY2_COUNTS = {"variables": 36 + 2 * 30, "rows": 30 + 2 * 50, "binaries": 12}


def test_tiny2_counts(tiny2, tiny2_scen):
    prog = assemble(tiny2, tiny2_scen)
    c = prog.counts()
    assert {k: c[k] for k in TINY2_COUNTS} == TINY2_COUNTS
    assert expected_counts(tiny2, 2) == TINY2_COUNTS
    assert c["row:BAL"] == 2 * 2 * 2


def test_rts24_counts(rts24, rts24_wind):
    prog = assemble(rts24, rts24_wind)
    c = prog.counts()
    assert {k: c[k] for k in ("variables", "rows", "binaries")} == expected_counts(rts24, 3)
    assert c["binaries"] == 12 * 4 * 4
    assert c["row:BAL"] == 24 * 4 * 3


def test_every_symbol_resolves(tiny2, tiny2_scen):
    assert audit_symbols(assemble(tiny2, tiny2_scen)) == []


def test_wind_is_free(rts24, rts24_wind):
    prog = assemble(rts24, rts24_wind)
    for j in prog.vars_of("Ws").values():
        assert prog.c[j] == 0.0


def test_market_row_one_bus():
    net = one_bus()
    prog = assemble(net, single([0.0]))
    assert prog.row_tags().count("MKT") == 1
    i = prog.row("MKT", 1)
    row = prog.A.getrow(i).toarray().ravel()
    assert row[prog.var("Ps", 1, 1)] == 1.0
    assert row[prog.var("Ls", 1, 1)] == -1.0
    assert prog.lb[prog.var("Ws", 1)] == prog.ub[prog.var("Ws", 1)] == 0.0
    assert prog.row_lo[i] == prog.row_hi[i] == 0.0


def test_single_scenario_no_reserves_is_energy_cost():
    net = one_bus(demand=(50.0,))
    mip = solve_mip(assemble(net, single([0.0])))
    assert mip.objective == pytest.approx(30.0 * 50.0)


def test_identical_scenarios_same_as_one(tiny2):
    s1 = single([5.0, 10.0])
    s2 = make_scenario_set([WindScenario((5.0, 10.0), 0.5), WindScenario((5.0, 10.0), 0.5)])
    a = solve_mip(assemble(tiny2, s1)).objective
    b = solve_mip(assemble(tiny2, s2)).objective
    assert a == pytest.approx(b, rel=1e-9)


def test_non_spinning_zero_when_on():
    net = one_bus(reserve={"ns_max": 40.0, "ns_price": 1.0})
    prog = assemble(net, single([0.0]))
    u = prog.var("u", 1, 1)
    lp = resolve_fixed(prog, {u: 1, prog.var("v", 1, 1, 1): 1})
    assert lp.x[prog.var("RNSg", 1, 1)] == pytest.approx(0.0)
    i = prog.row("RNSCAP", 1, 1)
    # R^NS + cap*u <= cap  ->  with u = 1 the cap is zero
    assert prog.row_hi[i] == 40.0 and prog.A[i, u] == 40.0


def test_startup_cost_binds():
    net = one_bus(T=2, demand=(0.0, 50.0), startup_cost=1000.0, initial_status=0)
    prog = assemble(net, single([0.0, 0.0]))
    mip = solve_mip(prog)
    assert mip.objective == pytest.approx(enumerate_binaries(prog), rel=1e-9)
    # starting in either period costs the same; exactly one start-up is paid
    csu = mip.x[prog.var("CSU", 1, 1)] + mip.x[prog.var("CSU", 1, 2)]
    assert csu == pytest.approx(1000.0)
    assert mip.objective == pytest.approx(1000.0 + 30.0 * 50.0)


def test_leaf_bus_balance_row(tiny2, tiny2_scen):
    prog = assemble(tiny2, tiny2_scen)
    i = prog.balance_row(2, 1, 1)
    row = prog.A.getrow(i).toarray().ravel()
    nz = {prog.variables[j].kind: v for j, v in enumerate(row) if v != 0}
    # bus 2: own unit, consumption, shedding and the incoming line
    assert nz == {"PG": 1.0, "Lc": -1.0, "Lshed": 1.0, "f": 1.0}
    assert prog.row_lo[i] == 0.0


def test_wind_bus_rhs(rts24, rts24_wind):
    prog = assemble(rts24, rts24_wind)
    i = prog.balance_row(2, 3, 1)
    assert prog.row_lo[i] == prog.row_hi[i] == -36.0


def test_no_reserves_freezes_dispatch(tiny2, tiny2_scen):
    def zero(doc):
        doc["lines"][0]["flow_limit_mw"] = 1000.0
        for g in doc["generators"]:
            g["reserve"].update(up_max=0.0, down_max=0.0)
        for ld in doc["loads"]:
            ld["reserve"].update(up_max=[0.0, 0.0], down_max=[0.0, 0.0])
    net = edit(tiny2, zero)
    prog = assemble(net, tiny2_scen)
    mip = solve_mip(prog)
    x = mip.x
    for w in (1, 2):
        for i in (1, 2):
            for t in (1, 2):
                assert x[prog.var("PG", i, t, w)] == pytest.approx(x[prog.var("Ps", i, t)], abs=1e-8)


def test_short_reserve_sheds_load():
    # one unit scheduled at 50 with 10 MW up reserve; the scenario loses 15 MW of wind
    net = network_from_dict({
        "horizon": 1, "period_hours": [1.0], "buses": [{"id": 1}], "lines": [],
        "generators": [{"id": "G", "bus": 1, "p_min": 0, "p_max": 100,
                        "blocks": [{"price": 10, "size": 100}], "initial_status": 1,
                        "reserve": {"up_max": 10, "up_price": 1, "down_max": 10, "down_price": 1}}],
        "loads": [{"id": "D", "bus": 1, "demand": [65.0], "voll": 2000}],
        "wind": {"bus": 1, "p_min": [15.0], "p_max": [15.0]},
    })
    prog = assemble(net, single([0.0]))
    mip = solve_mip(prog)
    x = mip.x
    assert x[prog.var("Ps", 1, 1)] == pytest.approx(50.0)
    assert x[prog.var("RUg", 1, 1)] == pytest.approx(10.0)
    assert x[prog.var("Lshed", 1, 1, 1)] == pytest.approx(5.0)
    assert mip.objective == pytest.approx(500 + 10 + 100 + 2000 * 5)


def test_deterministic_matches_single_scenario(tiny2):
    net = edit(tiny2, lambda d: d["lines"][0].update(flow_limit_mw=1000.0))
    wind = [20.0, 20.0]
    a = solve_mip(assemble(net, single(wind))).objective
    b = solve_mip(assemble_deterministic(net, wind)).objective
    assert a == pytest.approx(b, rel=1e-9)


def test_program_rejects_bad_rows():
    p = MarketProgram()
    j = p.add_var("x", (1,))
    with pytest.raises(IndexError):
        p.add_row("R", (1,), [(j + 1, 1.0)], "<=", 0.0)
    with pytest.raises(ValueError):
        p.add_row("R", (2,), [(j, 1.0)], "<", 0.0)
    with pytest.raises(KeyError):
        p.add_var("x", (1,))


def _scaled(net, k):
    def fn(doc):
        for g in doc["generators"]:
            for b in g["blocks"]:
                b["price"] *= k
            g["startup_cost"] *= k
            for key in ("up_price", "down_price", "ns_price"):
                g["reserve"][key] *= k
        for ld in doc["loads"]:
            ld["voll"] *= k
            ld["utility_bid"] *= k
            for key in ("up_price", "down_price"):
                ld["reserve"][key] *= k
    return edit(net, fn)


@settings(max_examples=8, deadline=None)
@given(k=st.floats(0.1, 10.0))
def test_price_scaling(tiny2, tiny2_scen, k):
    base = solve_mip(assemble(tiny2, tiny2_scen)).objective
    scaled = solve_mip(assemble(_scaled(tiny2, k), tiny2_scen)).objective
    assert scaled == pytest.approx(k * base, rel=1e-7)


@settings(max_examples=8, deadline=None)
@given(limit=st.floats(5.0, 200.0), extra=st.floats(0.0, 100.0))
def test_more_capacity_never_costs_more(tiny2, tiny2_scen, limit, extra):
    small = edit(tiny2, lambda d: d["lines"][0].update(flow_limit_mw=limit))
    big = edit(tiny2, lambda d: d["lines"][0].update(flow_limit_mw=limit + extra))
    a = solve_mip(assemble(small, tiny2_scen))
    b = solve_mip(assemble(big, tiny2_scen))
    assert b.objective <= a.objective + 1e-6 * max(1.0, abs(a.objective))


def test_more_reserve_never_costs_more(tiny2, tiny2_scen):
    def cut(doc):
        for g in doc["generators"]:
            g["reserve"].update(up_max=5.0, down_max=5.0)
    a = solve_mip(assemble(edit(tiny2, cut), tiny2_scen)).objective
    b = solve_mip(assemble(tiny2, tiny2_scen)).objective
    assert b <= a + 1e-6


def test_objective_components_sum(tiny2, tiny2_scen):
    prog = assemble(tiny2, tiny2_scen)
    mip = solve_mip(prog)
    comp = prog.objective_components(mip.x)
    assert sum(comp.values()) == pytest.approx(mip.objective, rel=1e-12, abs=1e-9)
    assert comp[5] == 0.0


def test_root_relaxation_bounds_mip(tiny2, tiny2_scen):
    prog = assemble(tiny2, tiny2_scen)
    assert solve_lp(prog).objective <= solve_mip(prog).objective + 1e-9
