"""Regenerate tests/fixtures/quadratic_reference.json from the coupled solver.

Run from the repository root: python3 benchmarks/make_reference.py
"""

import json
import tempfile
from pathlib import Path

from hopfcole import io
from hopfcole.cli import cmd_solve

ROOT = Path(__file__).resolve().parents[1]
PROBES = (0, 64, 128, 192, 256)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        assert cmd_solve(ROOT / "benchmarks" / "quadratic.ini", "coupled", tmp) == 0
        summary = io.read_summary(Path(tmp) / "coupled.json")
        table = io.read_solution(Path(tmp) / "coupled.csv")
    ref = {
        "config": "benchmarks/quadratic.ini",
        "n": summary["n"],
        "lambda": summary["lambda"],
        "mass": summary["mass"],
        "probes": {str(i): {k: float(table[k][i]) for k in ("x", "u", "m", "phi")}
                   for i in PROBES},
        "tolerance": {"lambda": 1e-10, "nodal": 1e-10, "mass": 1e-12},
    }
    out = ROOT / "tests" / "fixtures" / "quadratic_reference.json"
    out.write_text(json.dumps(ref, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
