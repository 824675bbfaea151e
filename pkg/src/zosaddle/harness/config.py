"""JSON experiment configuration.

One file describes one experiment::

    {
      "benchmark": {"name": "muller_brown", "params": {}},
      "x0": [0.0, 1.0],
      "V0": null,
      "search": {
        "k": 1, "n_x_max": 1000,
        "alpha_x": {"kind": "constant", "value": 1e-4},
        "length":  {"kind": "constant", "value": 1e-3},
        "warm_start": true,
        "inner": {"n_v_max": 100, "alpha_v": {"kind": "constant", "value": 2e-4},
                  "per_dim": false, "stopping": {"kind": "fixed"}}
      },
      "replicas": 20,
      "seed_base": 0,
      "out": "runs/mb",
      "ladder": {"lengths": [0.00390625, 0.001953125], "alphas": [1e-4, 2e-4]}
    }

``ladder`` is only read by the ``table`` command; ``baseline`` reads
``search.k``, ``search.alpha_x`` and ``search.n_x_max``.  Replica i runs with
seed ``seed_base + i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

from ..saddlesearch import SaddleConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    benchmark: str
    x0: list
    search: SaddleConfig
    params: dict = field(default_factory=dict)
    V0: Optional[list] = None
    replicas: int = 1
    seed_base: int = 0
    out: Optional[str] = None
    ladder: Optional[dict] = None

    def __post_init__(self):
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")

    def seeds(self) -> list:
        return [self.seed_base + i for i in range(self.replicas)]

    def with_search(self, **changes) -> "ExperimentConfig":
        return replace(self, search=replace(self.search, **changes))

    def to_dict(self) -> dict:
        out = {
            "benchmark": {"name": self.benchmark, "params": self.params},
            "x0": list(self.x0),
            "V0": self.V0,
            "search": self.search.to_dict(),
            "replicas": self.replicas,
            "seed_base": self.seed_base,
            "out": self.out,
        }
        if self.ladder is not None:
            out["ladder"] = self.ladder
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            bench = data["benchmark"]
            if isinstance(bench, str):
                bench = {"name": bench}
            return cls(
                benchmark=bench["name"],
                params=dict(bench.get("params", {})),
                x0=[float(v) for v in data["x0"]],
                V0=data.get("V0"),
                search=SaddleConfig.from_dict(data.get("search", {})),
                replicas=int(data.get("replicas", 1)),
                seed_base=int(data.get("seed_base", 0)),
                out=data.get("out"),
                ladder=data.get("ladder"),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid experiment config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
        fh.write("\n")
