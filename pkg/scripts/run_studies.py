"""Run the three rts24 studies and write their CSVs under one directory.

    python3 scripts/run_studies.py --out results --jobs 3
    python3 scripts/run_studies.py --only congestion

Each study lands in its own sub-directory (same layout as the CLI's --out).
A short text summary of the trends is printed at the end.
"""

import argparse
import time

import numpy as np

from windlmp.experiments import ExperimentConfig, run_study, write_results

STUDIES = {
    "uncertainty": dict(study="uncertainty", x_values=(40.0, 50.0, 60.0)),
    "congestion": dict(study="congestion", lines=((1, 2, 10.0),)),
    # on rts24 the system-peak basis is infeasible at these levels (no wind spillage)
    "penetration": dict(study="penetration", penetration=(35.0, 40.0, 45.0),
                        penetration_basis="bus-peak"),
}


def summarize(name, results):
    for r in results:
        print(f"  {r.label:>10s}  {r.status:<10s} objective {r.objective:12.2f}  "
              f"nodes {r.nodes:4d}  mip {r.seconds.get('mip', np.nan):6.1f}s")
    ok = [r for r in results if r.lmp is not None]
    if name == "congestion" and len(ok) == 2:
        base, tight = ok
        print("  expected LMP at bus 2 per period:")
        print("    175 MW:", np.round(base.lmp.expected[base.lmp.bus_index(2)], 3))
        print("     10 MW:", np.round(tight.lmp.expected[tight.lmp.bus_index(2)], 3))
    if name == "penetration":
        print("  expected LMP at the wind bus per period:")
        for r in ok:
            print(f"    {r.wind_capacity:7.2f} MW:", np.round(r.lmp.expected[r.lmp.bus_index(2)], 3))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--only", choices=sorted(STUDIES), action="append")
    args = ap.parse_args()
    for name in args.only or STUDIES:
        cfg = ExperimentConfig(out=f"{args.out}/{name}", jobs=args.jobs, **STUDIES[name]).validate()
        t0 = time.perf_counter()
        results = run_study(cfg)
        write_results(cfg, results)
        print(f"{name}: {time.perf_counter() - t0:.1f}s -> {cfg.out}")
        summarize(name, results)


if __name__ == "__main__":
    main()
