#!/usr/bin/env python3
"""Drive the headline experiments through the CLI into ./runs/.

Reproduces the main numerical evidence on desk scale: the functional Ito
residual refinement study for four functional classes, the quadratic
variation study across integration levels, a stochastic-exponential
integration run, and a derivative cross-check dump.  Everything is seeded:
re-running overwrites byte-identical artifacts.
"""

import pathlib
import sys

from pathwise.cli import main

ROOT = pathlib.Path(__file__).resolve().parent.parent / "runs"
SEED = "20260301"


def run(name, *argv):
    out = ROOT / name
    code = main([*argv, "--out", str(out), "--seed", SEED])
    print(f"{name}: exit {code}  ->  {out}")
    return code


def main_script() -> int:
    codes = [
        run("simulate-2d", "simulate", "--dimension", "2", "--grid-level", "10",
            "--ensemble", "4"),
        run("ito-square", "ito-check", "--functional", "square",
            "--grid-level", "14", "--levels", "8,10,12", "--ensemble", "48"),
        run("ito-doleans", "ito-check", "--functional", "doleans-dade",
            "--grid-level", "14", "--levels", "8,10,12", "--ensemble", "48"),
        run("qv-study", "qv", "--grid-level", "14", "--levels", "6,8,10",
            "--ensemble", "100"),
        run("doleans-integrate", "integrate", "--grid-level", "12",
            "--integrand", "coordinate:0"),
        run("derive-qv", "derive", "--functional", "qv:0,0", "--grid-level", "12",
            "--times", "0.1303,0.4711,0.8101"),
        run("regularity-square", "regularity", "--functional", "square",
            "--grid-level", "12", "--levels", "4,6,8", "--ensemble", "32"),
    ]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main_script())
