"""
Driving the benchmark harness
=============================

The ``trajopt`` command runs configs, writes CSV/JSON outputs and compares
runs. The same steps are shown here through ``trajopt.cli.main`` so the
script is self-contained. The shell equivalents are::

    trajopt init --problem cartpole --out cartpole.json
    trajopt solve --config cartpole.json --method gpm --out runs/cp_gpm
    trajopt compare --a ddp.json --b gpm.json
    trajopt plotdata runs/cp_gpm
"""
import json
import tempfile
from pathlib import Path

from trajopt.bench import RunConfig
from trajopt.cli import main

work = Path(tempfile.mkdtemp(prefix="trajopt_demo_"))

# 1. a full default config, editable by hand
main(["init", "--problem", "quadrotor", "--out", str(work / "ddp.json")])
cfg = json.loads((work / "ddp.json").read_text())
print("config sections:", sorted(cfg))

# 2. a coarser DDP step and a GPM variant of the same problem
cfg["ddp"]["dt"] = 0.05
cfg["output_dir"] = str(work / "quad_ddp")
(work / "ddp.json").write_text(json.dumps(cfg))
gpm = RunConfig.default("quadrotor", "gpm")
gpm.gpm["K"] = 12
gpm.output_dir = str(work / "quad_gpm")
(work / "gpm.json").write_text(gpm.to_json())

# 3. solve one config; the exit code is 0 on convergence
code = main(["solve", "--config", str(work / "ddp.json")])
print("solve exit code:", code)
print("files:", sorted(p.name for p in (work / "quad_ddp").iterdir()))

# 4. compare both methods side by side (prints JSON and a table)
main(["compare", "--a", str(work / "ddp.json"), "--b", str(work / "gpm.json")])

# 5. split a run into per-signal series for plotting
main(["plotdata", str(work / "quad_gpm")])
print("outputs under", work)
