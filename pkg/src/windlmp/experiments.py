"""Clearing pipeline and the three studies (uncertainty, congestion, penetration)."""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, field
import hashlib
import json
import logging
from pathlib import Path
import time

import numpy as np

from .formulation import assemble
from .grid import load_network
from .lmp import binding_lines, extract_lmps, lmp_report
from .program import export_mps
from .scenarios import (DEFAULT_PROBS, load_scenarios, scale, scenarios_from_list,
                        scenarios_to_list, uncertainty_sweep)
from .solver import IterationLimitError, NumericalError, lp_certificate, resolve_fixed, solve_mip

log = logging.getLogger(__name__)

STUDIES = ("clear", "uncertainty", "congestion", "penetration")
FORECAST = (8.0, 21.0, 36.0, 9.0)


# limits every emitted LP restriction must meet
CERT_LIMITS = {"primal_infeasibility": 1e-8, "duality_gap": 1e-6, "complementary_slackness": 1e-7}


class ConfigError(ValueError):
    pass


def certificate_failures(cert, limits=CERT_LIMITS):
    """Names of the certificate measures that exceed their limit."""
    return [k for k, lim in limits.items() if not cert.get(k, np.inf) <= lim]


@dataclass
class ExperimentConfig:
    study: str = "clear"
    network: str = "rts24"
    scenarios: str | None = "rts24_wind"   # file / bundled name; ignored by the uncertainty sweep
    forecast: tuple = FORECAST
    x_values: tuple = (40.0, 50.0, 60.0)
    probs: tuple = DEFAULT_PROBS
    lines: tuple = ()                       # ((from, to, limit), ...)
    factors: tuple = ()
    penetration: tuple = ()                 # target coefficients, converted to factors
    penetration_basis: str = "system-peak"  # or "bus-peak" (peak load at the wind bus)
    out: str | None = None
    mip_gap: float = 1e-6
    jobs: int = 1
    per_scenario_lmp: bool = False
    export_mps: bool = False

    def validate(self):
        if self.study not in STUDIES:
            raise ConfigError(f"unknown study {self.study!r}")
        if self.study == "uncertainty":
            if not self.x_values:
                raise ConfigError("uncertainty sweep needs x values")
            bad = [x for x in self.x_values if not 0 <= x <= 100]
            if bad:
                raise ConfigError(f"x values outside [0, 100]: {bad}")
        if self.study == "congestion" and not self.lines:
            raise ConfigError("congestion study needs a --line override")
        if self.study == "penetration" and not (self.factors or self.penetration):
            raise ConfigError("penetration sweep needs factors or target coefficients")
        if any(f < 0 for f in self.factors):
            raise ConfigError("capacity factors must be >= 0")
        if self.penetration_basis not in ("bus-peak", "system-peak"):
            raise ConfigError(f"unknown penetration basis {self.penetration_basis!r}")
        if self.mip_gap < 0 or self.jobs < 1:
            raise ConfigError("mip_gap must be >= 0 and jobs >= 1")
        return self

    def to_dict(self):
        d = asdict(self)
        for k in ("forecast", "x_values", "probs", "factors", "penetration"):
            d[k] = [float(v) for v in d[k]]
        d["lines"] = [list(ln) for ln in self.lines]
        return d

    def digest(self):
        """Hash of everything that affects results (not paths or parallelism)."""
        d = self.to_dict()
        for k in ("out", "jobs", "export_mps"):
            d.pop(k)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class ClearingResult:
    label: str
    status: str
    objective: float
    bound: float
    gap: float
    nodes: int
    components: dict = field(default_factory=dict)
    schedule: list = field(default_factory=list)
    lmp: object = None
    certificate: dict = field(default_factory=dict)
    binding: list = field(default_factory=list)
    diagnosis: list = field(default_factory=list)
    seconds: dict = field(default_factory=dict)
    wind_capacity: float = 0.0

    @property
    def optimal(self):
        return self.status == "optimal"


# ------------------------------------------------------------------ pipeline

def _schedule_records(prog, net, x):
    rec = []
    for i, g in enumerate(net.generators, 1):
        for t in range(1, net.horizon + 1):
            for kind in ("u", "Ps", "RUg", "RDg", "RNSg"):
                rec.append({"entity": g.id, "kind": kind, "t": t, "scenario": "",
                            "value": float(x[prog.var(kind, i, t)])})
    for t in range(1, net.horizon + 1):
        rec.append({"entity": "wind", "kind": "Ws", "t": t, "scenario": "",
                    "value": float(x[prog.var("Ws", t)])})
    W = len(prog.meta["probabilities"])
    for w in range(1, W + 1):
        for i, g in enumerate(net.generators, 1):
            for t in range(1, net.horizon + 1):
                for kind in ("v", "PG"):
                    rec.append({"entity": g.id, "kind": kind, "t": t, "scenario": w,
                                "value": float(x[prog.var(kind, i, t, w)])})
        for j, ld in enumerate(net.loads, 1):
            for t in range(1, net.horizon + 1):
                rec.append({"entity": ld.id, "kind": "Lshed", "t": t, "scenario": w,
                            "value": float(x[prog.var("Lshed", j, t, w)])})
    # clean negative zeros so that the CSV text is stable
    for r in rec:
        r["value"] = r["value"] + 0.0 if abs(r["value"]) > 1e-12 else 0.0
    return rec


def diagnose_infeasible(prog, farkas, top=8):
    """Row families carrying the largest phase-1 multipliers."""
    if farkas is None:
        return []
    weight = {}
    for r, y in zip(prog.rows, np.abs(farkas)):
        if y > 1e-9:
            weight[r.tag] = weight.get(r.tag, 0.0) + float(y)
    return [tag for tag, _ in sorted(weight.items(), key=lambda kv: -kv[1])[:top]]


def clear(net, scen, mip_gap=1e-6, label="run", mps_path=None):
    """assemble -> solve_mip -> resolve_fixed -> extract_lmps."""
    t0 = time.perf_counter()
    prog = assemble(net, scen)
    t1 = time.perf_counter()
    if mps_path is not None:
        export_mps(prog, mps_path)
    try:
        mip = solve_mip(prog, mip_gap=mip_gap)
    except (IterationLimitError, NumericalError) as exc:
        log.error("%s: solver failure: %s", label, exc)
        return ClearingResult(label, "solver_error", np.nan, np.nan, np.inf, 0,
                              diagnosis=[str(exc)], wind_capacity=net.wind.capacity)
    t2 = time.perf_counter()
    if mip.x is None:
        diag = diagnose_infeasible(prog, mip.lp.farkas if mip.lp is not None else None)
        if not diag and mip.status == "infeasible":
            diag = ["LP relaxation feasible, no integral commitment found"]
        return ClearingResult(label, mip.status, np.inf, mip.bound, np.inf, mip.nodes,
                              diagnosis=diag, seconds={"assemble": t1 - t0, "mip": t2 - t1},
                              wind_capacity=net.wind.capacity)
    lp = resolve_fixed(prog, mip.assignment, basis=mip.lp.basis if mip.lp else None)
    t3 = time.perf_counter()
    cert = lp_certificate(prog.fix_binaries(mip.assignment), lp)
    lmps = extract_lmps(prog, mip, lp, buses=net.bus_ids)
    return ClearingResult(
        label=label, status=mip.status, objective=float(lp.objective), bound=float(mip.bound),
        gap=float(mip.gap), nodes=mip.nodes, components=prog.objective_components(lp.x),
        schedule=_schedule_records(prog, net, lp.x), lmp=lmps, certificate=cert,
        binding=[list(k) for k in binding_lines(prog, lp.x)],
        seconds={"assemble": t1 - t0, "mip": t2 - t1, "pricing": t3 - t2},
        wind_capacity=net.wind.capacity)


def _clear_task(args):
    return clear(*args)


def _run_points(tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [_clear_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        # map preserves submission order, so outputs do not depend on timing
        return list(pool.map(_clear_task, tasks))


# -------------------------------------------------------------------- studies

def _load_inputs(cfg):
    net = load_network(cfg.network)
    scen = None
    if cfg.scenarios is not None:
        if isinstance(cfg.scenarios, (list, tuple)):
            scen = scenarios_from_list(cfg.scenarios)
        else:
            scen = load_scenarios(cfg.scenarios)
    return net, scen


def _mps(cfg, label):
    if not (cfg.export_mps and cfg.out):
        return None
    Path(cfg.out, "mps").mkdir(parents=True, exist_ok=True)
    return str(Path(cfg.out, "mps", f"{label}.mps"))


def peak_demand(net, basis="system-peak"):
    """Denominator of the penetration coefficient: system peak or peak at the wind bus."""
    if basis == "bus-peak":
        peak = float(np.max(net.bus_demand(net.wind.bus)))
    else:
        peak = float(np.max(net.system_demand()))
    if peak <= 0:
        raise ConfigError(f"penetration basis {basis!r} has zero peak demand")
    return peak


def penetration_of(net, basis="system-peak"):
    """Installed wind capacity over peak demand."""
    return net.wind.capacity / peak_demand(net, basis)


def run_clear(cfg):
    cfg.validate()
    net, scen = _load_inputs(cfg)
    if scen is None:
        raise ConfigError("clear needs a scenario source")
    return [clear(net, scen, cfg.mip_gap, "base", _mps(cfg, "base"))]


def run_uncertainty_sweep(cfg):
    cfg.validate()
    net = load_network(cfg.network)
    tasks = []
    for x in cfg.x_values:
        scen = uncertainty_sweep(cfg.forecast, x, cfg.probs)
        label = f"x{x:g}"
        tasks.append((net, scen, cfg.mip_gap, label, _mps(cfg, label)))
    return _run_points(tasks, cfg.jobs)


def _with_lines(net, lines):
    for a, b, lim in lines:
        try:
            net = net.with_line_limit(int(a), int(b), float(lim))
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    return net


def run_congestion_study(cfg):
    cfg.validate()
    net, scen = _load_inputs(cfg)
    if scen is None:
        raise ConfigError("congestion study needs a scenario source")
    tight = _with_lines(net, cfg.lines)
    tasks = [(net, scen, cfg.mip_gap, "base", _mps(cfg, "base")),
             (tight, scen, cfg.mip_gap, "override", _mps(cfg, "override"))]
    return _run_points(tasks, cfg.jobs)


def penetration_factors(net, cfg):
    if cfg.factors:
        return [float(f) for f in cfg.factors]
    base = penetration_of(net, cfg.penetration_basis)
    return [float(p) / 100.0 / base if p > 1 else float(p) / base for p in cfg.penetration]


def run_penetration_sweep(cfg):
    cfg.validate()
    net, scen = _load_inputs(cfg)
    if scen is None:
        raise ConfigError("penetration sweep needs a scenario source")
    net = _with_lines(net, cfg.lines)
    tasks = []
    for f in penetration_factors(net, cfg):
        label = f"f{f:.6g}"
        tasks.append((net.with_wind_scale(f), scale(scen, f), cfg.mip_gap, label, _mps(cfg, label)))
    return _run_points(tasks, cfg.jobs)


RUNNERS = {"clear": run_clear, "uncertainty": run_uncertainty_sweep,
           "congestion": run_congestion_study, "penetration": run_penetration_sweep}


def run_study(cfg):
    return RUNNERS[cfg.study](cfg)


# -------------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, float):
        if np.isnan(v):
            return "nan"
        return repr(round(v, 9) + 0.0)
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[h]) for h in header])


def series_rows(cfg, results, net=None):
    if cfg.study == "uncertainty":
        return ["x", "objective", "status"], [
            {"x": float(x), "objective": r.objective, "status": r.status}
            for x, r in zip(cfg.x_values, results)]
    if cfg.study == "penetration":
        net = net or load_network(cfg.network)
        wbus = net.wind.bus
        peak = peak_demand(net, cfg.penetration_basis)
        rows = []
        for r in results:
            pen = r.wind_capacity / peak
            for t in range(1, net.horizon + 1):
                price = r.lmp.at(wbus, t) if r.lmp is not None else float("nan")
                rows.append({"label": r.label, "capacity_mw": r.wind_capacity,
                             "penetration": float(pen), "t": t, "bus": wbus,
                             "expected_lmp": price, "objective": r.objective})
        return ["label", "capacity_mw", "penetration", "t", "bus", "expected_lmp", "objective"], rows
    if cfg.study == "congestion" and len(results) == 2 and all(r.lmp is not None for r in results):
        base, over = results
        rows = []
        for n in base.lmp.buses:
            for t in range(1, base.lmp.horizon + 1):
                a, b = base.lmp.at(n, t), over.lmp.at(n, t)
                rows.append({"bus": n, "t": t, "base": a, "override": b, "delta": b - a})
        return ["bus", "t", "base", "override", "delta"], rows
    return None, None


def write_results(cfg, results, out=None):
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    conf = cfg.to_dict()
    conf["digest"] = cfg.digest()
    (out / "config.json").write_text(json.dumps(conf, indent=1, sort_keys=True) + "\n")
    _write_csv(out / "objective.csv", ["label", "status", "objective", "bound", "gap", "nodes"],
               [{"label": r.label, "status": r.status, "objective": r.objective, "bound": r.bound,
                 "gap": r.gap, "nodes": r.nodes} for r in results])
    sched, lmp = [], []
    for r in results:
        sched += [dict(s, run=r.label) for s in r.schedule]
        if r.lmp is not None:
            lmp += [dict(s, run=r.label) for s in lmp_report(r.lmp, per_scenario=cfg.per_scenario_lmp)]
    _write_csv(out / "schedule.csv", ["run", "entity", "kind", "t", "scenario", "value"], sched)
    _write_csv(out / "lmp.csv", ["run", "bus", "t", "scenario", "price"], lmp)
    header, rows = series_rows(cfg, results)
    if header is not None:
        _write_csv(out / "series.csv", header, rows)
    meta = {"digest": cfg.digest(),
            "runs": [{"label": r.label, "status": r.status, "seconds": r.seconds,
                      "components": r.components, "certificate": r.certificate,
                      "binding_lines": r.binding, "diagnosis": r.diagnosis} for r in results]}
    (out / "meta.json").write_text(json.dumps(meta, indent=1, default=float) + "\n")
    return out


def scenario_document(scen):
    return {"scenarios": scenarios_to_list(scen)}
