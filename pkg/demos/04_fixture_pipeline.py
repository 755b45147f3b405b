"""The whole pipeline on the bundled synthetic fixtures, through the CLI.

Equivalent to ``newsregime pipeline -o <run_dir>``. Prints the main reports.

    python3 demos/04_fixture_pipeline.py [run_dir]
"""
import csv
import sys
from pathlib import Path

from newsregime.cli import main

run = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-output/run")
code = main(["pipeline", "-o", str(run)])
if code:
    sys.exit(code)


def show(rel):
    print(f"\n== {rel}")
    with open(run / rel) as fh:
        for row in csv.reader(fh):
            print("  " + "  ".join(row))


show("breakpoints/breakpoint_eval.csv")
show("select/segment_scores.csv")
show("evaluate/cluster_quality.csv")
show("evaluate/metrics.csv")
show("ablate/ablation.csv")
