"""Driving the command-line front-end.

Run:  python3 demos/07_cli.py
"""
import subprocess
import sys
from pathlib import Path

model = Path(__file__).parent / "models" / "three_components.json"


def cli(*args):
    cmd = [sys.executable, "-m", "poisson_approx", *args]
    print("$ poisson-approx", " ".join(args))
    out = subprocess.run(cmd, capture_output=True, text=True)
    print(out.stdout[:600] or out.stderr, f"[exit {out.returncode}]\n")


cli("compute", "--model", str(model), "--theorem", "t2", "--g", "abs")
cli("verify", "--theorem", "t0", "--families", "5", "--seed", "42")
cli("sweep", "--model", str(model), "--format", "csv")
cli("compute", "--model", str(model), "--theorem", "lecam")
