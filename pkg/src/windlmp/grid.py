"""Power network and market participant data.

Networks are read from a JSON document (see README for the schema), checked
against the structural rules below and then treated as immutable.
"""

from dataclasses import dataclass, field, replace
import json
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).parent / "data"


class NetworkError(ValueError):
    """Raised when a network breaks one or more structural rules."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid network:\n  " + "\n  ".join(self.violations))


class NetworkFormatError(ValueError):
    """Raised when a network document cannot be parsed."""


@dataclass(frozen=True)
class Bus:
    id: int
    name: str = ""


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    susceptance: float  # per unit on the network MVA base
    flow_limit: float   # MW

    @property
    def key(self):
        return (self.from_bus, self.to_bus)


@dataclass(frozen=True)
class OfferBlock:
    price: float
    size: float


@dataclass(frozen=True)
class GeneratorUnit:
    id: str
    bus: int
    p_min: float
    p_max: float
    blocks: tuple
    startup_offer: float = 0.0
    r_up_max: float = 0.0
    r_up_price: float = 0.0
    r_dn_max: float = 0.0
    r_dn_price: float = 0.0
    r_ns_max: float = 0.0
    r_ns_price: float = 0.0
    initial_status: int = 0

    @property
    def highest_price(self):
        return max((b.price for b in self.blocks), default=0.0)


@dataclass(frozen=True)
class LoadPoint:
    id: str
    bus: int
    demand: tuple
    demand_min: tuple
    demand_max: tuple
    utility_bid: float = 0.0
    r_up_max: tuple = ()
    r_up_price: float = 0.0
    r_dn_max: tuple = ()
    r_dn_price: float = 0.0
    voll: float = 2000.0

    @property
    def inelastic(self):
        return self.demand_min == self.demand_max


@dataclass(frozen=True)
class WindPlant:
    bus: int
    p_min_offer: tuple
    p_max_offer: tuple
    capacity: float = 0.0
    offer_price: float = 0.0


@dataclass(frozen=True)
class Network:
    name: str
    buses: tuple
    lines: tuple
    generators: tuple
    loads: tuple
    wind: WindPlant
    horizon: int
    period_hours: tuple
    base_mva: float = 100.0
    source: dict = field(default_factory=dict, compare=False)

    @property
    def bus_ids(self):
        return [b.id for b in self.buses]

    @property
    def reference_bus(self):
        return min(self.bus_ids)

    def bus_demand(self, bus):
        """Scheduled demand at ``bus`` per period."""
        d = np.zeros(self.horizon)
        for ld in self.loads:
            if ld.bus == bus:
                d += np.asarray(ld.demand, dtype=float)
        return d

    def system_demand(self):
        return sum((np.asarray(ld.demand, dtype=float) for ld in self.loads),
                   np.zeros(self.horizon))

    def line_index(self, from_bus, to_bus):
        for k, ln in enumerate(self.lines):
            if {ln.from_bus, ln.to_bus} == {from_bus, to_bus}:
                return k
        raise KeyError(f"no line between buses {from_bus} and {to_bus}")

    def with_line_limit(self, from_bus, to_bus, limit):
        k = self.line_index(from_bus, to_bus)
        lines = list(self.lines)
        lines[k] = replace(lines[k], flow_limit=float(limit))
        return replace(self, lines=tuple(lines))

    def with_wind_scale(self, factor):
        w = self.wind
        wind = replace(w,
                       p_min_offer=tuple(v * factor for v in w.p_min_offer),
                       p_max_offer=tuple(v * factor for v in w.p_max_offer),
                       capacity=w.capacity * factor)
        return replace(self, wind=wind)


# ---------------------------------------------------------------- validation

def _connected(bus_ids, lines):
    if len(bus_ids) <= 1:
        return set(bus_ids)
    adj = {b: set() for b in bus_ids}
    for ln in lines:
        if ln.from_bus in adj and ln.to_bus in adj:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
    start = min(bus_ids)
    seen = {start}
    stack = [start]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen


def validate(net):
    """Return a list of rule violations; empty when the network is valid."""
    out = []
    ids = [b.id for b in net.buses]
    idset = set(ids)
    if len(idset) != len(ids):
        out.append("buses: duplicate bus ids")
    if ids and sorted(idset) != list(range(min(ids), min(ids) + len(idset))):
        out.append("buses: ids are not contiguous")
    T = net.horizon
    if T < 1:
        out.append(f"network: horizon {T} < 1")
    if len(net.period_hours) != T or any(h <= 0 for h in net.period_hours):
        out.append("network: period_hours must give one positive duration per period")

    for k, ln in enumerate(net.lines):
        tag = f"line {ln.from_bus}-{ln.to_bus} (#{k})"
        if ln.from_bus == ln.to_bus:
            out.append(f"{tag}: from_bus equals to_bus")
        if ln.from_bus not in idset or ln.to_bus not in idset:
            out.append(f"{tag}: endpoint is not a known bus")
        if not ln.susceptance > 0:
            out.append(f"{tag}: susceptance must be > 0")
        if not ln.flow_limit > 0:
            out.append(f"{tag}: flow_limit must be > 0")
    reach = _connected(ids, net.lines)
    isolated = sorted(idset - reach)
    if isolated:
        out.append(f"network: line graph is not connected (unreached buses {isolated})")

    max_price = 0.0
    for g in net.generators:
        tag = f"generator {g.id}"
        if g.bus not in idset:
            out.append(f"{tag}: bus {g.bus} does not exist")
        if not 0 <= g.p_min <= g.p_max:
            out.append(f"{tag}: requires 0 <= p_min <= p_max")
        if any(b.size < 0 for b in g.blocks):
            out.append(f"{tag}: negative block size")
        if sum(b.size for b in g.blocks) < g.p_max - g.p_min - 1e-9:
            out.append(f"{tag}: block sizes sum below p_max - p_min")
        if any(b.price > a.price for a, b in zip(g.blocks[1:], g.blocks)):
            out.append(f"{tag}: blocks not in nondecreasing price order")
        if min(g.r_up_max, g.r_dn_max, g.r_ns_max) < 0:
            out.append(f"{tag}: negative reserve cap")
        if g.initial_status not in (0, 1):
            out.append(f"{tag}: initial_status must be 0 or 1")
        max_price = max(max_price, g.highest_price)

    for ld in net.loads:
        tag = f"load {ld.id}"
        if ld.bus not in idset:
            out.append(f"{tag}: bus {ld.bus} does not exist")
        for name in ("demand", "demand_min", "demand_max", "r_up_max", "r_dn_max"):
            if len(getattr(ld, name)) != T:
                out.append(f"{tag}: {name} needs {T} values")
        if any(lo > hi for lo, hi in zip(ld.demand_min, ld.demand_max)):
            out.append(f"{tag}: demand_min exceeds demand_max")
        if any(v < 0 for v in ld.r_up_max + ld.r_dn_max):
            out.append(f"{tag}: negative reserve cap")
        if not ld.voll > max_price:
            out.append(f"{tag}: voll {ld.voll} must exceed every generator block price")

    w = net.wind
    if w.bus not in idset:
        out.append(f"wind: bus {w.bus} does not exist")
    if w.offer_price != 0:
        out.append("wind: offer_price must be 0")
    if len(w.p_min_offer) != T or len(w.p_max_offer) != T:
        out.append(f"wind: p_min/p_max need {T} values")
    if any(lo > hi for lo, hi in zip(w.p_min_offer, w.p_max_offer)):
        out.append("wind: p_min exceeds p_max")
    return out


# ------------------------------------------------------------- DC structure

@dataclass(frozen=True)
class FlowRecord:
    line: int
    from_bus: int
    to_bus: int
    susceptance: float
    coefficient: float  # MW per radian: base_mva * susceptance


@dataclass(frozen=True)
class Incidence:
    records: tuple
    # bus -> ((line index, sign), ...); sign -1 where the flow leaves the bus
    adjacency: dict

    def signed_coefficients(self, line):
        rec = self.records[line]
        return {rec.from_bus: rec.coefficient, rec.to_bus: -rec.coefficient}


def incidence_and_susceptance(net):
    """Line records ``f = coefficient * (delta_from - delta_to)`` and bus adjacency."""
    records = []
    adj = {b.id: [] for b in net.buses}
    for k, ln in enumerate(net.lines):
        records.append(FlowRecord(k, ln.from_bus, ln.to_bus, ln.susceptance,
                                  net.base_mva * ln.susceptance))
        adj[ln.from_bus].append((k, -1))
        adj[ln.to_bus].append((k, +1))
    return Incidence(tuple(records), {b: tuple(v) for b, v in adj.items()})


# ------------------------------------------------------------------ file I/O

def _get(d, key, ctx, default=...):
    if key in d:
        return d[key]
    if default is ...:
        raise NetworkFormatError(f"{ctx}: missing field '{key}'")
    return default


def _series(value, T, ctx):
    if isinstance(value, (int, float)):
        return tuple(float(value) for _ in range(T))
    try:
        vals = tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise NetworkFormatError(f"{ctx}: expected a number or list of numbers") from exc
    if len(vals) != T:
        raise NetworkFormatError(f"{ctx}: expected {T} values, got {len(vals)}")
    return vals


def network_from_dict(doc, name=None):
    try:
        T = int(_get(doc, "horizon", "network"))
        hours = _series(doc.get("period_hours", 1.0), T, "period_hours")
        buses = tuple(Bus(int(_get(b, "id", f"buses[{i}]")), str(b.get("name", "")))
                      for i, b in enumerate(_get(doc, "buses", "network")))
        lines = []
        for i, ln in enumerate(doc.get("lines", [])):
            ctx = f"lines[{i}]"
            lines.append(Line(int(_get(ln, "from", ctx)), int(_get(ln, "to", ctx)),
                              float(_get(ln, "susceptance_pu", ctx)),
                              float(_get(ln, "flow_limit_mw", ctx))))
        gens = []
        for i, g in enumerate(_get(doc, "generators", "network")):
            ctx = f"generators[{i}]"
            blocks = [OfferBlock(float(_get(b, "price", f"{ctx}.blocks[{k}]")),
                                 float(_get(b, "size", f"{ctx}.blocks[{k}]")))
                      for k, b in enumerate(_get(g, "blocks", ctx))]
            blocks.sort(key=lambda b: b.price)
            res = g.get("reserve", {})
            gens.append(GeneratorUnit(
                id=str(_get(g, "id", ctx)), bus=int(_get(g, "bus", ctx)),
                p_min=float(_get(g, "p_min", ctx)), p_max=float(_get(g, "p_max", ctx)),
                blocks=tuple(blocks), startup_offer=float(g.get("startup_cost", 0.0)),
                r_up_max=float(res.get("up_max", 0.0)), r_up_price=float(res.get("up_price", 0.0)),
                r_dn_max=float(res.get("down_max", 0.0)), r_dn_price=float(res.get("down_price", 0.0)),
                r_ns_max=float(res.get("ns_max", 0.0)), r_ns_price=float(res.get("ns_price", 0.0)),
                initial_status=int(g.get("initial_status", 0))))
        loads = []
        for i, ld in enumerate(doc.get("loads", [])):
            ctx = f"loads[{i}]"
            demand = _series(_get(ld, "demand", ctx), T, f"{ctx}.demand")
            res = ld.get("reserve", {})
            loads.append(LoadPoint(
                id=str(_get(ld, "id", ctx)), bus=int(_get(ld, "bus", ctx)), demand=demand,
                demand_min=_series(ld.get("demand_min", demand), T, f"{ctx}.demand_min"),
                demand_max=_series(ld.get("demand_max", demand), T, f"{ctx}.demand_max"),
                utility_bid=float(ld.get("utility_bid", 0.0)),
                r_up_max=_series(res.get("up_max", 0.0), T, f"{ctx}.reserve.up_max"),
                r_up_price=float(res.get("up_price", 0.0)),
                r_dn_max=_series(res.get("down_max", 0.0), T, f"{ctx}.reserve.down_max"),
                r_dn_price=float(res.get("down_price", 0.0)),
                voll=float(ld.get("voll", 2000.0))))
        w = _get(doc, "wind", "network")
        wind = WindPlant(bus=int(_get(w, "bus", "wind")),
                         p_min_offer=_series(w.get("p_min", 0.0), T, "wind.p_min"),
                         p_max_offer=_series(_get(w, "p_max", "wind"), T, "wind.p_max"),
                         capacity=float(w.get("capacity_mw", max(_series(w["p_max"], T, "wind.p_max")))),
                         offer_price=float(w.get("offer_price", 0.0)))
    except (TypeError, AttributeError) as exc:
        raise NetworkFormatError(f"malformed network document: {exc}") from exc
    return Network(name=name or str(doc.get("name", "network")), buses=buses,
                   lines=tuple(lines), generators=tuple(gens), loads=tuple(loads),
                   wind=wind, horizon=T, period_hours=hours,
                   base_mva=float(doc.get("base_mva", 100.0)),
                   source=dict(doc.get("source", {})))


def network_to_dict(net):
    doc = {
        "name": net.name,
        "base_mva": net.base_mva,
        "horizon": net.horizon,
        "period_hours": list(net.period_hours),
        "buses": [{"id": b.id, "name": b.name} for b in net.buses],
        "lines": [{"from": ln.from_bus, "to": ln.to_bus, "susceptance_pu": ln.susceptance,
                   "flow_limit_mw": ln.flow_limit} for ln in net.lines],
        "generators": [{
            "id": g.id, "bus": g.bus, "p_min": g.p_min, "p_max": g.p_max,
            "blocks": [{"price": b.price, "size": b.size} for b in g.blocks],
            "startup_cost": g.startup_offer,
            "reserve": {"up_max": g.r_up_max, "up_price": g.r_up_price,
                        "down_max": g.r_dn_max, "down_price": g.r_dn_price,
                        "ns_max": g.r_ns_max, "ns_price": g.r_ns_price},
            "initial_status": g.initial_status} for g in net.generators],
        "loads": [{
            "id": ld.id, "bus": ld.bus, "demand": list(ld.demand),
            "demand_min": list(ld.demand_min), "demand_max": list(ld.demand_max),
            "utility_bid": ld.utility_bid, "voll": ld.voll,
            "reserve": {"up_max": list(ld.r_up_max), "up_price": ld.r_up_price,
                        "down_max": list(ld.r_dn_max), "down_price": ld.r_dn_price}}
            for ld in net.loads],
        "wind": {"bus": net.wind.bus, "p_min": list(net.wind.p_min_offer),
                 "p_max": list(net.wind.p_max_offer), "capacity_mw": net.wind.capacity,
                 "offer_price": net.wind.offer_price},
    }
    if net.source:
        doc["source"] = net.source
    return doc


def dump_network(net, path):
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1) + "\n")


def resolve_network_path(path):
    """Accept a file path or the name of a bundled dataset (``rts24``, ``tiny2``)."""
    p = Path(path)
    if p.exists():
        return p
    bundled = DATA_DIR / f"{path}.json"
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"network file not found: {path}")


def load_network(path):
    p = resolve_network_path(path)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"{p}: line {exc.lineno}: {exc.msg}") from exc
    net = network_from_dict(doc, name=doc.get("name", p.stem))
    problems = validate(net)
    if problems:
        raise NetworkError(problems)
    return net
