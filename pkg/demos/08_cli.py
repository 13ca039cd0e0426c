"""
The command-line workflow
=========================

``rfclust synth`` writes a fixture, ``rfclust run`` evaluates it, and
``rfclust report`` redraws the figures from the CSVs. The same commands
work from a shell; here they are called in-process.
"""

import tempfile
from pathlib import Path

from rfclust.cli import main

work = Path(tempfile.mkdtemp())
assert main(["synth", "--seed", "7", "--out", str(work / "fx")]) == 0
assert main(["run", "--features", str(work / "fx" / "features.csv"),
             "--targets", str(work / "fx" / "targets.csv"), "--algo", "DE1",
             "--thresholds", "0.5,0.7,0.9", "--out", str(work / "out")]) == 0
assert main(["report", "--out", str(work / "out")]) == 0
print(sorted(p.name for p in (work / "out").iterdir()))

# Usage errors exit with status 1.
print("exit status without --targets:", main(["run", "--features", "x.csv", "--out", "o"]))
