"""Extensive-form two-stage market clearing program.

First stage (market): unit commitment ``u``, energy schedules by offer block,
scheduled wind and load, and reserve capacities from units and loads.  The
market balance is a single copper-plate row per period.

Second stage (one copy per wind scenario): actual unit output ``PG`` built from
the schedule plus per-block deployments ``r``, load reserve deployments,
load shedding and a DC power flow with nodal balance rows ``BAL``.  Scenario
commitment ``v`` may differ from ``u`` only through non-spinning reserve.

All keys are 1-based: ``i`` generator position, ``j`` load position, ``m``
offer block, ``l`` line position, ``t`` period, ``w`` scenario; ``n`` is the
bus id.
"""

import numpy as np

from .grid import incidence_and_susceptance
from .program import MarketProgram

# objective components
C_STARTUP, C_ENERGY, C_UNIT_RES, C_LOAD_RES, C_WIND = 1, 2, 3, 4, 5
C_SCEN_STARTUP, C_UNIT_DEPLOY, C_LOAD_DEPLOY, C_SHED = 6, 7, 8, 9

# model symbol -> variable kind or parameter source, used by audit_symbols
SYMBOLS = {
    "P^s_it": ("var", "Ps"), "p_Git(m)": ("var", "p"), "P^WP,s_t": ("var", "Ws"),
    "L^s_jt": ("var", "Ls"), "R^U_it": ("var", "RUg"), "R^D_it": ("var", "RDg"),
    "R^NS_it": ("var", "RNSg"), "R^U_jt": ("var", "RUl"), "R^D_jt": ("var", "RDl"),
    "C^SU_it": ("var", "CSU"), "u_it": ("var", "u"),
    "P^G_itw": ("var", "PG"), "r_Gitw(m)": ("var", "r"), "r^U_jtw": ("var", "rUl"),
    "r^D_jtw": ("var", "rDl"), "L_jtw": ("var", "Lshed"), "L^c_jtw": ("var", "Lc"),
    "f_tw(n,r)": ("var", "f"), "delta_ntw": ("var", "delta"), "v_itw": ("var", "v"),
    "C_itw": ("var", "C"),
    "pi_w": ("param", "scenario probability"), "d_t": ("param", "period_hours"),
    "lambda_Git(m)": ("param", "OfferBlock.price"), "p^max_Git(m)": ("param", "OfferBlock.size"),
    "lambda_Ljt": ("param", "LoadPoint.utility_bid"), "lambda^SU_it": ("param", "startup_offer"),
    "lambda^WP_t": ("param", "WindPlant.offer_price"), "V_jt": ("param", "LoadPoint.voll"),
    "P^min_i": ("param", "p_min"), "P^max_i": ("param", "p_max"),
    "B(n,r)": ("param", "Line.susceptance"), "f^max(n,r)": ("param", "Line.flow_limit"),
    "P^WP_tw": ("param", "scenario trajectory"), "P^loss_tw(n,r)": ("param", "zero (lossless)"),
}


def _gen_indices(net):
    return range(1, len(net.generators) + 1)


def declare_first_stage(prog, net):
    T = net.horizon
    hours = net.period_hours
    for i, g in enumerate(net.generators, 1):
        for t in range(1, T + 1):
            d = hours[t - 1]
            prog.add_var("Ps", (i, t), 0.0, g.p_max)
            for m, b in enumerate(g.blocks, 1):
                prog.add_var("p", (i, t, m), 0.0, b.size, obj=d * b.price, component=C_ENERGY)
            prog.add_var("RUg", (i, t), 0.0, g.r_up_max, obj=d * g.r_up_price, component=C_UNIT_RES)
            prog.add_var("RDg", (i, t), 0.0, g.r_dn_max, obj=d * g.r_dn_price, component=C_UNIT_RES)
            prog.add_var("RNSg", (i, t), 0.0, g.r_ns_max, obj=d * g.r_ns_price, component=C_UNIT_RES)
            prog.add_var("CSU", (i, t), 0.0, np.inf, obj=1.0, component=C_STARTUP)
    w = net.wind
    for t in range(1, T + 1):
        prog.add_var("Ws", (t,), w.p_min_offer[t - 1], w.p_max_offer[t - 1],
                     obj=hours[t - 1] * w.offer_price, component=C_WIND)
    for j, ld in enumerate(net.loads, 1):
        for t in range(1, T + 1):
            d = hours[t - 1]
            prog.add_var("Ls", (j, t), ld.demand_min[t - 1], ld.demand_max[t - 1],
                         obj=-d * ld.utility_bid, component=C_ENERGY)
            prog.add_var("RUl", (j, t), 0.0, ld.r_up_max[t - 1], obj=d * ld.r_up_price,
                         component=C_LOAD_RES)
            prog.add_var("RDl", (j, t), 0.0, ld.r_dn_max[t - 1], obj=d * ld.r_dn_price,
                         component=C_LOAD_RES)
    # binaries last within the stage block
    for i in _gen_indices(net):
        for t in range(1, T + 1):
            prog.add_var("u", (i, t), 0.0, 1.0, binary=True)


def declare_second_stage(prog, net, scen, w):
    T = net.horizon
    hours = net.period_hours
    pi = scen.scenarios[w - 1].probability
    ref = net.reference_bus
    for i, g in enumerate(net.generators, 1):
        for t in range(1, T + 1):
            d = hours[t - 1]
            prog.add_var("PG", (i, t, w), 0.0, g.p_max)
            for m, b in enumerate(g.blocks, 1):
                prog.add_var("r", (i, t, m, w), -b.size, b.size, obj=pi * d * b.price,
                             component=C_UNIT_DEPLOY)
            prog.add_var("C", (i, t, w), 0.0, np.inf, obj=pi, component=C_SCEN_STARTUP)
    for j, ld in enumerate(net.loads, 1):
        for t in range(1, T + 1):
            d = hours[t - 1]
            prog.add_var("rUl", (j, t, w), 0.0, ld.r_up_max[t - 1], obj=pi * d * ld.utility_bid,
                         component=C_LOAD_DEPLOY)
            prog.add_var("rDl", (j, t, w), 0.0, ld.r_dn_max[t - 1], obj=-pi * d * ld.utility_bid,
                         component=C_LOAD_DEPLOY)
            prog.add_var("Lshed", (j, t, w), 0.0, ld.demand_max[t - 1] + ld.r_dn_max[t - 1],
                         obj=pi * d * ld.voll, component=C_SHED)
            prog.add_var("Lc", (j, t, w), 0.0, np.inf)
    for l, ln in enumerate(net.lines, 1):
        for t in range(1, T + 1):
            prog.add_var("f", (l, t, w), -ln.flow_limit, ln.flow_limit)
    for n in net.bus_ids:
        for t in range(1, T + 1):
            if n == ref:
                prog.add_var("delta", (n, t, w), 0.0, 0.0)
            else:
                prog.add_var("delta", (n, t, w), -np.inf, np.inf)
    for i in _gen_indices(net):
        for t in range(1, T + 1):
            prog.add_var("v", (i, t, w), 0.0, 1.0, binary=True)


def build_objective(prog):
    """Objective vector of an assembled program (coefficients are set when
    variables are declared; this gathers them)."""
    return np.array([v.obj for v in prog.variables])


def build_first_stage(prog, net):
    V = prog.var
    T = net.horizon
    ng = len(net.generators)
    for t in range(1, T + 1):
        coeffs = [(V("Ps", i, t), 1.0) for i in range(1, ng + 1)]
        coeffs.append((V("Ws", t), 1.0))
        coeffs += [(V("Ls", j, t), -1.0) for j in range(1, len(net.loads) + 1)]
        prog.add_row("MKT", (t,), coeffs, "==", 0.0)
    for i, g in enumerate(net.generators, 1):
        for t in range(1, T + 1):
            ps, u = V("Ps", i, t), V("u", i, t)
            prog.add_row("GMIN", (i, t), [(ps, 1.0), (u, -g.p_min)], ">=", 0.0)
            prog.add_row("GMAX", (i, t), [(ps, 1.0), (u, -g.p_max)], "<=", 0.0)
            blocks = [(V("p", i, t, m), -1.0) for m in range(1, len(g.blocks) + 1)]
            prog.add_row("BLK", (i, t), [(ps, 1.0)] + blocks, "==", 0.0)
            prog.add_row("RUCAP", (i, t), [(V("RUg", i, t), 1.0), (u, -g.r_up_max)], "<=", 0.0)
            prog.add_row("RDCAP", (i, t), [(V("RDg", i, t), 1.0), (u, -g.r_dn_max)], "<=", 0.0)
            prog.add_row("RNSCAP", (i, t), [(V("RNSg", i, t), 1.0), (u, g.r_ns_max)], "<=",
                         g.r_ns_max)
            # C^SU >= lambda (u_t - u_{t-1}); the initial status enters the rhs
            coeffs = [(V("CSU", i, t), 1.0), (u, -g.startup_offer)]
            if t == 1:
                rhs = -g.startup_offer * g.initial_status
            else:
                coeffs.append((V("u", i, t - 1), g.startup_offer))
                rhs = 0.0
            prog.add_row("SU", (i, t), coeffs, ">=", rhs)
    # wind, load and load reserve limits are variable bounds


def build_second_stage(prog, net, scen, w):
    V = prog.var
    T = net.horizon
    inc = incidence_and_susceptance(net)
    wind = scen.scenarios[w - 1].trajectory
    gens_at = {n: [] for n in net.bus_ids}
    for i, g in enumerate(net.generators, 1):
        gens_at[g.bus].append(i)
    loads_at = {n: [] for n in net.bus_ids}
    for j, ld in enumerate(net.loads, 1):
        loads_at[ld.bus].append(j)
    for t in range(1, T + 1):
        for n in net.bus_ids:
            coeffs = [(V("PG", i, t, w), 1.0) for i in gens_at[n]]
            for j in loads_at[n]:
                coeffs += [(V("Lc", j, t, w), -1.0), (V("Lshed", j, t, w), 1.0)]
            # adjacency sign is -1 where the line leaves the bus
            coeffs += [(V("f", k + 1, t, w), float(sgn)) for k, sgn in inc.adjacency[n]]
            rhs = -wind[t - 1] if n == net.wind.bus else 0.0
            prog.add_row("BAL", (n, t, w), coeffs, "==", rhs)
        for rec in inc.records:
            l = rec.line + 1
            # f - b (delta_from - delta_to) = loss term, zero for lossless lines
            prog.add_row("FLOW", (l, t, w),
                         [(V("f", l, t, w), 1.0),
                          (V("delta", rec.from_bus, t, w), -rec.coefficient),
                          (V("delta", rec.to_bus, t, w), rec.coefficient)], "==", 0.0)
    for i, g in enumerate(net.generators, 1):
        for t in range(1, T + 1):
            pg, v = V("PG", i, t, w), V("v", i, t, w)
            prog.add_row("PGMIN", (i, t, w), [(pg, 1.0), (v, -g.p_min)], ">=", 0.0)
            prog.add_row("PGMAX", (i, t, w), [(pg, 1.0), (v, -g.p_max)], "<=", 0.0)


def build_linking(prog, net, scen, w):
    V = prog.var
    T = net.horizon
    for i, g in enumerate(net.generators, 1):
        nb = len(g.blocks)
        for t in range(1, T + 1):
            r = [V("r", i, t, m, w) for m in range(1, nb + 1)]
            prog.add_row("DEPLOY", (i, t, w),
                         [(V("PG", i, t, w), 1.0), (V("Ps", i, t), -1.0)] + [(k, -1.0) for k in r],
                         "==", 0.0)
            prog.add_row("DEPUP", (i, t, w),
                         [(k, 1.0) for k in r] + [(V("RUg", i, t), -1.0), (V("RNSg", i, t), -1.0)],
                         "<=", 0.0)
            prog.add_row("DEPDN", (i, t, w),
                         [(k, 1.0) for k in r] + [(V("RDg", i, t), 1.0)], ">=", 0.0)
            for m, b in enumerate(g.blocks, 1):
                pair = [(V("p", i, t, m), 1.0), (r[m - 1], 1.0)]
                prog.add_row("BLKLO", (i, t, m, w), pair, ">=", 0.0)
                prog.add_row("BLKHI", (i, t, m, w), pair, "<=", b.size)
            v, u = V("v", i, t, w), V("u", i, t)
            if g.r_ns_max <= 0:
                # without a non-spinning offer a unit can only run if committed
                prog.add_row("VGATE", (i, t, w), [(v, 1.0), (u, -1.0)], "<=", 0.0)
            # scenario start-up cost charges only start-ups beyond the schedule:
            # C >= lambda [(v_t - v_{t-1}) - (u_t - u_{t-1})]
            lam = g.startup_offer
            coeffs = [(V("C", i, t, w), 1.0), (v, -lam), (u, lam)]
            if t > 1:
                coeffs += [(V("v", i, t - 1, w), lam), (V("u", i, t - 1), -lam)]
            prog.add_row("SUW", (i, t, w), coeffs, ">=", 0.0)
    for j, ld in enumerate(net.loads, 1):
        for t in range(1, T + 1):
            lc, ru, rd = V("Lc", j, t, w), V("rUl", j, t, w), V("rDl", j, t, w)
            # upward load reserve lowers consumption, downward raises it
            prog.add_row("LCON", (j, t, w), [(lc, 1.0), (V("Ls", j, t), -1.0), (ru, 1.0), (rd, -1.0)],
                         "==", 0.0)
            prog.add_row("LRUP", (j, t, w), [(ru, 1.0), (V("RUl", j, t), -1.0)], "<=", 0.0)
            prog.add_row("LRDN", (j, t, w), [(rd, 1.0), (V("RDl", j, t), -1.0)], "<=", 0.0)
            prog.add_row("SHED", (j, t, w), [(V("Lshed", j, t, w), 1.0), (lc, -1.0)], "<=", 0.0)


def assemble(net, scen, name=None):
    """Full extensive-form program for ``net`` under scenario set ``scen``."""
    if scen.horizon != net.horizon:
        raise ValueError(f"scenario horizon {scen.horizon} differs from network horizon {net.horizon}")
    prog = MarketProgram(name or net.name)
    declare_first_stage(prog, net)
    for w in range(1, len(scen) + 1):
        declare_second_stage(prog, net, scen, w)
    build_first_stage(prog, net)
    for w in range(1, len(scen) + 1):
        build_second_stage(prog, net, scen, w)
        build_linking(prog, net, scen, w)
    prog.meta = {"network": net.name, "scenarios": len(scen), "horizon": net.horizon,
                 "probabilities": [float(p) for p in scen.probabilities],
                 "period_hours": list(net.period_hours)}
    return prog.finalize()


def assemble_deterministic(net, wind):
    """Single-stage clearing: commitment and DC dispatch with wind fixed to
    ``wind`` and no reserves.  Used as an oracle for the two-stage model."""
    T = net.horizon
    hours = net.period_hours
    inc = incidence_and_susceptance(net)
    prog = MarketProgram(f"{net.name}-deterministic")
    for i, g in enumerate(net.generators, 1):
        for t in range(1, T + 1):
            prog.add_var("Ps", (i, t), 0.0, g.p_max)
            for m, b in enumerate(g.blocks, 1):
                prog.add_var("p", (i, t, m), 0.0, b.size, obj=hours[t - 1] * b.price,
                             component=C_ENERGY)
            prog.add_var("CSU", (i, t), 0.0, np.inf, obj=1.0, component=C_STARTUP)
    for j, ld in enumerate(net.loads, 1):
        for t in range(1, T + 1):
            prog.add_var("Ls", (j, t), ld.demand_min[t - 1], ld.demand_max[t - 1],
                         obj=-hours[t - 1] * ld.utility_bid, component=C_ENERGY)
            prog.add_var("Lshed", (j, t), 0.0, ld.demand_max[t - 1],
                         obj=hours[t - 1] * ld.voll, component=C_SHED)
    for l, ln in enumerate(net.lines, 1):
        for t in range(1, T + 1):
            prog.add_var("f", (l, t), -ln.flow_limit, ln.flow_limit)
    for n in net.bus_ids:
        for t in range(1, T + 1):
            fixed = n == net.reference_bus
            prog.add_var("delta", (n, t), 0.0 if fixed else -np.inf, 0.0 if fixed else np.inf)
    for i in _gen_indices(net):
        for t in range(1, T + 1):
            prog.add_var("u", (i, t), 0.0, 1.0, binary=True)
    V = prog.var
    for i, g in enumerate(net.generators, 1):
        for t in range(1, T + 1):
            ps, u = V("Ps", i, t), V("u", i, t)
            prog.add_row("GMIN", (i, t), [(ps, 1.0), (u, -g.p_min)], ">=", 0.0)
            prog.add_row("GMAX", (i, t), [(ps, 1.0), (u, -g.p_max)], "<=", 0.0)
            prog.add_row("BLK", (i, t), [(ps, 1.0)] + [(V("p", i, t, m), -1.0)
                                                      for m in range(1, len(g.blocks) + 1)],
                         "==", 0.0)
            coeffs = [(V("CSU", i, t), 1.0), (u, -g.startup_offer)]
            rhs = -g.startup_offer * g.initial_status
            if t > 1:
                coeffs.append((V("u", i, t - 1), g.startup_offer))
                rhs = 0.0
            prog.add_row("SU", (i, t), coeffs, ">=", rhs)
    for t in range(1, T + 1):
        for n in net.bus_ids:
            coeffs = [(V("Ps", i, t), 1.0) for i, g in enumerate(net.generators, 1) if g.bus == n]
            for j, ld in enumerate(net.loads, 1):
                if ld.bus == n:
                    coeffs += [(V("Ls", j, t), -1.0), (V("Lshed", j, t), 1.0)]
            coeffs += [(V("f", k + 1, t), float(s)) for k, s in inc.adjacency[n]]
            rhs = -wind[t - 1] if n == net.wind.bus else 0.0
            prog.add_row("BAL", (n, t), coeffs, "==", rhs)
        for rec in inc.records:
            l = rec.line + 1
            prog.add_row("FLOW", (l, t), [(V("f", l, t), 1.0),
                                          (V("delta", rec.from_bus, t), -rec.coefficient),
                                          (V("delta", rec.to_bus, t), rec.coefficient)], "==", 0.0)
    return prog.finalize()


def audit_symbols(prog):
    """Return the model symbols whose variable kind is absent from ``prog``."""
    kinds = set(prog.var_kinds())
    return sorted(sym for sym, (what, kind) in SYMBOLS.items()
                  if what == "var" and kind not in kinds)


def expected_counts(net, n_scen):
    """Variable/row counts implied by the builder rules (used in tests)."""
    G, L, T, W = len(net.generators), len(net.loads), net.horizon, n_scen
    K, N = len(net.lines), len(net.buses)
    B = sum(len(g.blocks) for g in net.generators)
    no_ns = sum(1 for g in net.generators if g.r_ns_max <= 0)
    first_vars = T * (5 * G + B + 1 + 3 * L + G)
    scen_vars = T * (2 * G + B + 4 * L + K + N + G)
    first_rows = T * (1 + 7 * G)
    scen_rows = T * (N + K + 2 * G + 3 * G + 2 * B + no_ns + G + 4 * L)
    return {"variables": first_vars + W * scen_vars, "rows": first_rows + W * scen_rows,
            "binaries": T * G * (1 + W)}
