"""Driving experiments from a JSON config through the command line.

The same file can be used as ``python -m zosaddle run cfg.json``; here the CLI
entry point is called in-process so the demo is self-contained.

Run: python demos/05_cli.py
"""

import json
import tempfile
from pathlib import Path

from zosaddle.harness import cli

config = {
    "benchmark": {"name": "mod_rosenbrock", "params": {"d": 2, "s": [-50.0, 1.0]}},
    "x0": [0.995, 0.995],
    "search": {
        "k": 1,
        "n_x_max": 2000,
        "alpha_x": {"kind": "constant", "value": 1e-5},
        "length": {"kind": "constant", "value": 1e-4},
        "inner": {"n_v_max": 20, "alpha_v": {"kind": "constant", "value": 2e-4}, "per_dim": True},
    },
    "replicas": 3,
    "seed_base": 0,
}

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    path = tmp / "rosenbrock.json"
    path.write_text(json.dumps(config, indent=2))

    code = cli.main(["run", str(path), "--out", str(tmp / "zo"), "--quiet"])
    summary = json.loads((tmp / "zo" / "summary.json").read_text())
    print(f"run exit code {code}; seeds {summary['seeds']}")
    print("final grad_norm_sq per replica:", [f"{g:.2e}" for g in summary["statistics"]["final_grad_norm_sq"]])

    cli.main(["baseline", str(path), "--out", str(tmp / "det")])
    print("trace header:", (tmp / "zo" / "run_000.csv").read_text().splitlines()[0])

    # exit code 2 signals a configuration problem
    (tmp / "broken.json").write_text("{}")
    print("broken config exit code:", cli.main(["run", str(tmp / "broken.json"), "--quiet"]))
