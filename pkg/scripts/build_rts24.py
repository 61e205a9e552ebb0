"""Generate src/windlmp/data/rts24.json from the unit/line tables below.

Base data: the single-area 24-bus reliability test system as tabulated in the
updated market-clearing version (Ordoudis, Pinson, Morales, Zugno 2016, DTU
technical report).  Reserve offers are derived with these rules:

* every unit offers up/down spinning reserve of p_max - p_min, priced at 25% of
  the highest energy offer in the market;
* units at buses 7, 15 and 16 also offer non-spinning reserve of p_max, priced
  at 20% of their own energy offer;
* each load may move up or down by 20% of its demand, offered at 50 $/MW;
* lost load is valued at 2000 $/MWh.

The line reactances and ratings were transcribed from the same report and
have not been verified against an independent copy.
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "windlmp" / "data" / "rts24.json"

# id: (bus, p_max, p_min, price $/MWh, startup $, initially on)
UNITS = [
    (1, 152, 30.4, 13.32, 1430.4, 1),
    (2, 152, 30.4, 13.32, 1430.4, 1),
    (7, 350, 75.0, 20.70, 1725.0, 0),
    (13, 591, 206.85, 20.93, 3056.7, 0),
    (15, 60, 12.0, 26.11, 437.0, 0),
    (15, 155, 54.25, 10.52, 312.0, 1),
    (16, 155, 54.25, 10.52, 312.0, 1),
    (18, 400, 100.0, 6.02, 0.0, 1),
    (21, 400, 100.0, 5.47, 0.0, 1),
    (22, 300, 0.0, 0.00, 0.0, 1),
    (23, 310, 108.5, 10.52, 624.0, 1),
    (23, 350, 140.0, 10.89, 2298.0, 1),
]
NS_BUSES = {7, 15, 16}

# bus: share of system demand (%)
LOAD_SHARE = {1: 3.8, 2: 3.4, 3: 6.3, 4: 2.6, 5: 2.5, 6: 4.8, 7: 4.4, 8: 6.0, 9: 6.1,
              10: 6.8, 13: 9.3, 14: 6.8, 15: 11.1, 16: 3.5, 18: 11.7, 19: 6.4, 20: 4.5}
# system demand (MW) for hours 1-4 of the reference day
SYSTEM_DEMAND = [1775.835, 1669.815, 1590.3, 1563.795]

# (from, to, reactance pu, rating MW)
LINES = [
    (1, 2, 0.0146, 175), (1, 3, 0.2253, 175), (1, 5, 0.0907, 350), (2, 4, 0.1356, 175),
    (2, 6, 0.2050, 175), (3, 9, 0.1271, 175), (3, 24, 0.0840, 400), (4, 9, 0.1110, 175),
    (5, 10, 0.0940, 350), (6, 10, 0.0642, 175), (7, 8, 0.0652, 350), (8, 9, 0.1762, 175),
    (8, 10, 0.1762, 175), (9, 11, 0.0840, 400), (9, 12, 0.0840, 400), (10, 11, 0.0840, 400),
    (10, 12, 0.0840, 400), (11, 13, 0.0488, 500), (11, 14, 0.0426, 500), (12, 13, 0.0488, 500),
    (12, 23, 0.0985, 500), (13, 23, 0.0884, 500), (14, 16, 0.0594, 500), (15, 16, 0.0172, 500),
    (15, 21, 0.0249, 1000), (15, 24, 0.0529, 500), (16, 17, 0.0263, 500), (16, 19, 0.0234, 500),
    (17, 18, 0.0143, 1000), (17, 22, 0.1069, 500), (18, 21, 0.0132, 1000), (19, 20, 0.0203, 1000),
    (20, 23, 0.0112, 1000), (21, 22, 0.0692, 500),
]

WIND_BUS = 2
WIND_CAPACITY = 50.0
VOLL = 2000.0
LOAD_RESERVE_SHARE = 0.20
LOAD_RESERVE_PRICE = 50.0
SPIN_PRICE_SHARE = 0.25
NS_PRICE_SHARE = 0.20


def build():
    top_price = max(u[3] for u in UNITS)
    gens = []
    for k, (bus, pmax, pmin, price, su, init) in enumerate(UNITS, 1):
        ns = bus in NS_BUSES
        gens.append({
            "id": f"G{k}", "bus": bus, "p_min": pmin, "p_max": pmax,
            "blocks": [{"price": price, "size": pmax}],
            "startup_cost": su,
            "reserve": {
                "up_max": round(pmax - pmin, 6), "up_price": round(SPIN_PRICE_SHARE * top_price, 6),
                "down_max": round(pmax - pmin, 6), "down_price": round(SPIN_PRICE_SHARE * top_price, 6),
                "ns_max": pmax if ns else 0.0,
                "ns_price": round(NS_PRICE_SHARE * price, 6) if ns else 0.0,
            },
            "initial_status": init,
        })
    loads = []
    for k, (bus, share) in enumerate(sorted(LOAD_SHARE.items()), 1):
        demand = [round(share / 100.0 * d, 6) for d in SYSTEM_DEMAND]
        cap = [round(LOAD_RESERVE_SHARE * v, 6) for v in demand]
        loads.append({
            "id": f"D{k}", "bus": bus, "demand": demand, "demand_min": demand,
            "demand_max": demand, "utility_bid": 0.0, "voll": VOLL,
            "reserve": {"up_max": cap, "up_price": LOAD_RESERVE_PRICE,
                        "down_max": cap, "down_price": LOAD_RESERVE_PRICE},
        })
    doc = {
        "name": "rts24",
        "source": {"units_lines_loads": "Ordoudis et al. 2016, updated 24-bus RTS (DTU report)",
                   "hours": "1-4 of the reference day", "generator": "scripts/build_rts24.py"},
        "base_mva": 100.0,
        "horizon": len(SYSTEM_DEMAND),
        "period_hours": [1.0] * len(SYSTEM_DEMAND),
        "buses": [{"id": b, "name": f"bus{b}"} for b in range(1, 25)],
        "lines": [{"from": a, "to": b, "susceptance_pu": round(1.0 / x, 6), "flow_limit_mw": lim}
                  for a, b, x, lim in LINES],
        "generators": gens,
        "loads": loads,
        "wind": {"bus": WIND_BUS, "p_min": [0.0] * 4, "p_max": [WIND_CAPACITY] * 4,
                 "capacity_mw": WIND_CAPACITY, "offer_price": 0.0},
    }
    return doc


if __name__ == "__main__":
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(build(), indent=1) + "\n")
    print(f"wrote {OUT}")
