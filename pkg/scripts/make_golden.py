"""Freeze external-solver reference values for the tiny2 MPS cross-check.

Exports the tiny2 program twice (full MIP, and the LP restriction with the
binaries fixed at our incumbent), solves both files with HiGHS through
highspy, and writes the objective and row duals to tests/golden/.  Run once;
the test suite only reads the JSON (and re-runs HiGHS when it is installed).

    python3 scripts/make_golden.py
"""

from importlib.metadata import version
import json
from pathlib import Path
import platform
import tempfile

import highspy
import numpy as np

from windlmp.formulation import assemble
from windlmp.grid import load_network
from windlmp.program import export_mps
from windlmp.scenarios import load_scenarios
from windlmp.solver import solve_mip

OUT = Path(__file__).resolve().parents[1] / "tests" / "golden" / "tiny2_highs.json"


def highs_solve(path, relax=False):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("primal_feasibility_tolerance", 1e-10)
    h.setOptionValue("dual_feasibility_tolerance", 1e-10)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.readModel(str(path))
    if relax:
        # the binaries are fixed by their bounds; solving as an LP gives duals
        n = h.getNumCol()
        h.changeColsIntegrality(n, np.arange(n, dtype=np.int32),
                                np.full(n, highspy.HighsVarType.kContinuous))
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    info = h.getInfo()
    sol = h.getSolution()
    if relax and not sol.dual_valid:
        raise RuntimeError("HiGHS returned no duals")
    lp = h.getLp()
    return {"status": status, "objective": info.objective_function_value,
            "row_names": list(lp.row_names_), "row_duals": list(sol.row_dual),
            "col_values": list(sol.col_value)}


def main():
    net, scen = load_network("tiny2"), load_scenarios("tiny2_scenarios")
    prog = assemble(net, scen)
    mip = solve_mip(prog)
    fixed = prog.fix_binaries(mip.assignment)
    with tempfile.TemporaryDirectory() as tmp:
        full = highs_solve(export_mps(prog, Path(tmp, "full.mps")))
        restr = highs_solve(export_mps(prog, Path(tmp, "fixed.mps"), lb=fixed.lb, ub=fixed.ub), relax=True)
    doc = {
        "provenance": {
            "solver": f"HiGHS via highspy {version('highspy')}",
            "python": platform.python_version(),
            "inputs": "bundled tiny2 network and tiny2_scenarios",
            "procedure": "export_mps of the full program (MIP) and of the restriction with every "
                         "binary fixed to the in-repo incumbent (LP); both read by HiGHS in free "
                         "MPS format with feasibility tolerances 1e-10 and zero MIP gap; the fixed model is solved with integrality relaxed",
            "script": "scripts/make_golden.py",
        },
        "assignment": {prog.variables[j].name: int(v) for j, v in sorted(mip.assignment.items())},
        "mip_objective": full["objective"],
        "mip_status": full["status"],
        "fixed_status": restr["status"],
        "fixed_objective": restr["objective"],
        "row_duals": dict(zip(restr["row_names"], restr["row_duals"])),
    }
    OUT.parent.mkdir(exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print(OUT, full["status"], full["objective"], restr["objective"],
          float(np.max(np.abs(restr["row_duals"]))))


if __name__ == "__main__":
    main()
