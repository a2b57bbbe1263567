"""
Running the command-line front end
==================================

Every computation above is also reachable from ``dialab <command>``. This
script drives the same entry point in-process, writes to a temporary
directory and shows what each command produces.
"""

import json
import tempfile
from pathlib import Path

from dialab.cli import main

work = Path(tempfile.mkdtemp(prefix="dialab_demo_"))
config = work / "green.json"
config.write_text(json.dumps({
    "oscillator": {"nu": 0.04, "sigma": 0.1, "lam": 0.1},
    "grid": {"t_max": 20.0, "n_steps": 2001},
    "n_samples": 500,
    "depths": [2, 3, 30],
}))

for command, extra in (("ou", []), ("green", ["--config", str(config)]), ("residual", [])):
    out = work / command
    code = main([command, "--out", str(out), "--seed", "1", "--quiet", *extra])
    print(f"dialab {command}: exit {code}, files {sorted(p.name for p in out.iterdir())}")

print()
print((work / "green" / "summary.txt").read_text())
