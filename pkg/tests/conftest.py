import itertools
from types import SimpleNamespace

import numpy as np
import pytest
import scipy.sparse as sp

from windlmp.grid import load_network
from windlmp.scenarios import load_scenarios
from windlmp.solver import solve_lp


def lp(A, c, lb, ub, lo, hi, binary=None):
    A = sp.csc_matrix(np.atleast_2d(np.asarray(A, dtype=float)))
    n = A.shape[1]
    return SimpleNamespace(A=A, c=np.asarray(c, float), lb=np.asarray(lb, float),
                           ub=np.asarray(ub, float), row_lo=np.asarray(lo, float),
                           row_hi=np.asarray(hi, float),
                           is_binary=np.zeros(n, bool) if binary is None else np.asarray(binary))


def random_lp(rng, m=None, n=None, nbin=0):
    """Random bounded LP built around a feasible point (may still be made infeasible)."""
    m = m or int(rng.integers(1, 12))
    n = n or int(rng.integers(1, 12))
    A = sp.random(m, n, density=0.5, random_state=int(rng.integers(1 << 30))).toarray()
    A *= rng.choice([-1.0, 1.0], size=(m, n))
    c = rng.normal(size=n)
    lb = np.where(rng.random(n) < 0.15, -np.inf, rng.uniform(-5, 0, n))
    ub = np.where(rng.random(n) < 0.15, np.inf, rng.uniform(0, 5, n))
    binary = np.zeros(n, bool)
    binary[:nbin] = True
    lb[:nbin], ub[:nbin] = 0.0, 1.0
    x0 = np.clip(rng.normal(size=n), np.where(np.isfinite(lb), lb, -3), np.where(np.isfinite(ub), ub, 3))
    x0[:nbin] = rng.integers(0, 2, nbin)
    act = A @ x0
    kind = rng.integers(0, 4, m)
    lo = np.where(kind == 0, act, np.where(kind == 1, act - rng.random(m), -np.inf))
    hi = np.where(kind == 0, act, np.where(kind == 2, act + rng.random(m),
                                           np.where(kind == 3, act + 1.0, np.inf)))
    return lp(A, c, lb, ub, lo, hi, binary)


def enumerate_binaries(program):
    """Best objective over every binary assignment, each solved as an LP."""
    bins = np.flatnonzero(program.is_binary)
    best = np.inf
    for bits in itertools.product((0.0, 1.0), repeat=bins.size):
        lb = np.array(program.lb, float)
        ub = np.array(program.ub, float)
        lb[bins] = ub[bins] = bits
        s = solve_lp(program, lb=lb, ub=ub)
        if s.status == "unbounded":
            return -np.inf
        if s.optimal:
            best = min(best, s.objective)
    return best


@pytest.fixture(scope="session")
def tiny2():
    return load_network("tiny2")


@pytest.fixture(scope="session")
def tiny2_scen():
    return load_scenarios("tiny2_scenarios")


@pytest.fixture(scope="session")
def rts24():
    return load_network("rts24")


@pytest.fixture(scope="session")
def rts24_wind():
    return load_scenarios("rts24_wind")


def random_network_doc(rng, n_bus=None, horizon=None, limit=None):
    """Small connected market network (spanning tree plus a chord or two).

    Each bus has at most one unit and one load.  Total capacity covers peak
    demand plus its up-reserve, so every commitment problem is feasible.
    ``limit`` fixes every line capacity; None draws random ones.
    """
    B = n_bus or int(rng.integers(1, 5))
    T = horizon or int(rng.integers(1, 3))
    lines = []
    for b in range(2, B + 1):
        lines.append((int(rng.integers(1, b)), b))
    for _ in range(int(rng.integers(0, 2)) if B > 2 else 0):
        a, b = sorted(rng.choice(np.arange(1, B + 1), 2, replace=False).tolist())
        if (a, b) not in lines:
            lines.append((a, b))
    demand = {b: rng.uniform(5, 40, T).round(2) for b in range(1, B + 1) if rng.random() < 0.7}
    if not demand:
        demand = {1: rng.uniform(5, 40, T).round(2)}
    peak = sum(d.max() for d in demand.values()) * 1.3 + 10
    gens = []
    for b in range(1, B + 1):
        if b > 1 and rng.random() < 0.4:
            continue
        cap = float(round(peak, 1))
        pmin = float(round(rng.uniform(0, 0.2) * cap, 2))
        nblk = int(rng.integers(1, 3))
        sizes = np.full(nblk, cap / nblk)
        prices = np.sort(rng.uniform(5, 60, nblk)).round(2)
        gens.append({"id": f"G{b}", "bus": b, "p_min": pmin, "p_max": cap,
                     "blocks": [{"price": float(p), "size": float(s)} for p, s in zip(prices, sizes)],
                     "startup_cost": round(float(rng.uniform(0, 200)), 1),
                     "reserve": {"up_max": cap - pmin, "up_price": round(float(rng.uniform(1, 8)), 2),
                                 "down_max": cap - pmin, "down_price": round(float(rng.uniform(1, 8)), 2),
                                 "ns_max": 0.0, "ns_price": 0.0},
                     "initial_status": int(rng.integers(0, 2))})
    loads = [{"id": f"D{b}", "bus": b, "demand": d.tolist(), "voll": 2000.0,
              "reserve": {"up_max": (0.1 * d).round(3).tolist(), "up_price": 80.0,
                          "down_max": (0.1 * d).round(3).tolist(), "down_price": 80.0}}
             for b, d in demand.items()]
    # wind cannot be spilled, so keep it below what the loads can always absorb
    low = sum(d.min() for d in demand.values())
    wcap = round(float(rng.uniform(0, 0.5 * low)), 1)
    return {
        "name": "random", "horizon": T, "period_hours": [1.0] * T,
        "buses": [{"id": b} for b in range(1, B + 1)],
        "lines": [{"from": a, "to": b, "susceptance_pu": round(float(rng.uniform(2, 20)), 2),
                   "flow_limit_mw": float(limit if limit is not None else round(float(rng.uniform(5, 60)), 1))}
                  for a, b in lines],
        "generators": gens, "loads": loads,
        "wind": {"bus": int(rng.integers(1, B + 1)), "p_min": [0.0] * T,
                 "p_max": [wcap] * T, "capacity_mw": wcap},
    }


def random_scenarios(rng, net, n=None):
    from windlmp.scenarios import WindScenario, make_scenario_set
    n = n or int(rng.integers(1, 4))
    p = rng.dirichlet(np.ones(n))
    cap = net.wind.capacity
    return make_scenario_set([WindScenario(tuple(rng.uniform(0, cap, net.horizon).round(2)), float(q))
                              for q in p], normalize=True)


# rts24 studies are expensive; each runs once per session and is shared

@pytest.fixture(scope="session")
def rts24_base(rts24, rts24_wind):
    import time
    from windlmp.experiments import clear
    t0 = time.perf_counter()
    res = clear(rts24, rts24_wind, label="base")
    return res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def rts24_sweep(tmp_path_factory):
    """The three-point uncertainty sweep through the CLI with three workers."""
    import csv
    import time
    from windlmp.cli import main
    out = tmp_path_factory.mktemp("sweep")
    t0 = time.perf_counter()
    code = main(["sweep-uncertainty", "--x", "40,50,60", "--jobs", "3", "--out", str(out)])
    elapsed = time.perf_counter() - t0
    with open(out / "series.csv") as fh:
        rows = list(csv.DictReader(fh))
    return code, rows, elapsed


@pytest.fixture(scope="session")
def rts24_congested(rts24, rts24_wind):
    from windlmp.experiments import clear
    return clear(rts24.with_line_limit(1, 2, 10.0), rts24_wind, label="override")


@pytest.fixture(scope="session")
def rts24_penetration():
    from windlmp.experiments import ExperimentConfig, run_penetration_sweep
    # on the system-peak basis these targets put 620-800 MW of unspillable wind
    # at bus 2, more than its lines can export, so the bus-peak basis is used
    cfg = ExperimentConfig(study="penetration", penetration=(35.0, 40.0, 45.0),
                           penetration_basis="bus-peak")
    return cfg, run_penetration_sweep(cfg)
