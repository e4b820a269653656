"""
The command line, start to finish
=================================

validate -> plan -> simulate -> sweep on a generated case, reading the CSV
outputs back at the end.  Each step is the same command you would type in a
shell; they run here through ``python -m pspsplan.cli``.

Run:  python demos/cli_sweep.py [workdir]
"""

import csv
import json
import subprocess
import sys
import tempfile
from pathlib import Path

from pspsplan.synthetic import write_case

workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="pspsplan-cli-"))
config = write_case(workdir, window=((7, 1), (8, 15)))

# A small grid: batteries only versus batteries + solar + covered conductors,
# two budgets, three alphas.  Flags could override any of these; the file
# keeps the run reproducible.
cfg = json.loads(config.read_text())
cfg["sweep"] = {"scenarios": [1, 7], "budgets": [20, 60], "alphas": [0.25, 0.5, 0.75]}
cfg["lp_engine"] = "highs"  # the built-in simplex also works, just slower on these models
config.write_text(json.dumps(cfg, indent=1))


def pspsplan(*args):
    cmd = [sys.executable, "-m", "pspsplan.cli", *map(str, args)]
    print("$ pspsplan " + " ".join(map(str, args)))
    done = subprocess.run(cmd, capture_output=True, text=True)
    print(done.stdout.rstrip() or done.stderr.rstrip())
    print(f"(exit {done.returncode})\n")
    return done.returncode


out = workdir / "out"
pspsplan("validate", "--config", config)

# A bad flag is caught before any work: alpha must lie strictly inside (0, 1).
pspsplan("validate", "--config", config, "--alpha", "1.0")

pspsplan("plan", "--config", config, "--scenario", 7, "--budget", 60, "--out", out)
print(json.dumps(json.loads((out / "plan.json").read_text()), indent=1), "\n")

pspsplan("simulate", "--config", config, "--scenario", 7, "--out", out)

# Twelve cases on two worker processes.  Rows come back in grid order
# whatever order the workers finish in.
pspsplan("sweep", "--config", config, "--workers", 2, "--seed", 7, "--out", out)

with open(out / "tradeoff.csv") as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
print("scenario budget alpha  planned shed/risk   simulated shed/risk")
for r in rows:
    print(f"{r['scenario']:>8} {float(r['budget']):6.0f} {float(r['alpha']):5.2f}  "
          f"{float(r['predicted_shed']):7.4f} {float(r['predicted_risk']):7.4f}   "
          f"{float(r['simulated_shed']):7.4f} {float(r['simulated_risk']):7.4f}")

with open(out / "breakdown.csv") as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
print("\nwhere the money went (percent of budget, alpha 0.5):")
for r in rows:
    if float(r["alpha"]) == 0.5:
        print(f"  scenario {r['scenario']} ${float(r['budget']):.0f}M: battery {float(r['battery_pct']):5.1f}  "
              f"solar {float(r['solar_pct']):5.1f}  hardening {float(r['hardening_pct']):5.1f}")
