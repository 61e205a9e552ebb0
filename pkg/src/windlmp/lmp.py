"""Locational marginal prices from the nodal balance duals.

The duals come from the LP restriction with every binary fixed to the MIP
incumbent.  In the extensive form a scenario row's dual carries the scenario
probability and the period length from the objective weighting, so both are
divided out to give $/MWh.
"""

from dataclasses import dataclass

import numpy as np


class LmpError(KeyError):
    pass


@dataclass
class LmpSurface:
    buses: list
    probabilities: np.ndarray
    values: np.ndarray        # (bus, t, scenario), NaN where the scenario has zero weight
    expected: np.ndarray      # (bus, t)
    market_price: np.ndarray  # (t,)
    labels: list | None = None

    @property
    def horizon(self):
        return self.values.shape[1]

    @property
    def n_scenarios(self):
        return self.values.shape[2]

    def bus_index(self, bus):
        try:
            return self.buses.index(bus)
        except ValueError:
            raise LmpError(f"unknown bus {bus}") from None

    def at(self, bus, t, w=None):
        """Price at ``bus`` in period ``t`` (1-based); expected when ``w`` is None."""
        k = self.bus_index(bus)
        if w is None:
            return float(self.expected[k, t - 1])
        return float(self.values[k, t - 1, w - 1])

    def spread(self):
        """Max minus min price across buses, per (t, scenario)."""
        return np.nanmax(self.values, axis=0) - np.nanmin(self.values, axis=0)


def expected_prices(values, probabilities):
    """Probability-weighted mean over scenarios, skipping zero-weight ones."""
    p = np.asarray(probabilities, dtype=float)
    keep = p > 0
    return np.tensordot(values[:, :, keep], p[keep], axes=([2], [0]))


def extract_lmps(program, mip, lp, buses=None):
    """Build the LMP surface of ``program`` from the fixed-binary LP ``lp``."""
    if lp is None or lp.status != "optimal":
        raise ValueError("LMPs need an optimal LP restriction")
    if mip is not None and mip.assignment:
        x = lp.x
        for j, val in mip.assignment.items():
            if abs(x[j] - val) > 1e-6:
                raise ValueError("LP restriction does not match the MIP incumbent's binaries")
    meta = program.meta
    probs = np.asarray(meta["probabilities"], dtype=float)
    hours = np.asarray(meta["period_hours"], dtype=float)
    T, W = len(hours), len(probs)
    rows = program.rows_of("BAL")
    if buses is None:
        buses = sorted({k[0] for k in rows})
    values = np.full((len(buses), T, W), np.nan)
    for b, n in enumerate(buses):
        for t in range(1, T + 1):
            for w in range(1, W + 1):
                i = rows.get((n, t, w))
                if i is None:
                    raise LmpError(f"no nodal balance row for bus {n}, t={t}, w={w}")
                if probs[w - 1] > 0:
                    values[b, t - 1, w - 1] = lp.duals[i] / (probs[w - 1] * hours[t - 1])
    market = np.array([lp.duals[program.row("MKT", t)] / hours[t - 1] for t in range(1, T + 1)])
    return LmpSurface(list(buses), probs, values, expected_prices(values, probs), market)


def lmp_report(surface, buses=None, periods=None, per_scenario=False):
    """Flat records ``{bus, t, scenario, price}``.

    ``buses``/``periods`` select a subset (None means all, an empty list means
    none).  Expected prices are reported unless ``per_scenario`` is set.
    """
    buses = surface.buses if buses is None else list(buses)
    periods = range(1, surface.horizon + 1) if periods is None else list(periods)
    out = []
    for n in buses:
        k = surface.bus_index(n)
        for t in periods:
            if per_scenario:
                for w in range(1, surface.n_scenarios + 1):
                    out.append({"bus": n, "t": t, "scenario": w,
                                "price": float(surface.values[k, t - 1, w - 1])})
            else:
                out.append({"bus": n, "t": t, "scenario": "expected",
                            "price": float(surface.expected[k, t - 1])})
    return out


def binding_lines(program, x, tol=1e-6):
    """(line, t, scenario) keys whose flow sits at its capacity limit."""
    out = []
    for key, j in program.vars_of("f").items():
        lim = program.ub[j]
        if np.isfinite(lim) and abs(abs(x[j]) - lim) <= tol * max(1.0, lim):
            out.append(key)
    return sorted(out)
