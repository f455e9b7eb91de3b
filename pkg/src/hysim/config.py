"""Run configuration: JSON round-trip and defaults < file < flags merging.

A RunConfig carries everything a command needs to be reproduced: model
coefficients (or the physical plant table they reduce from), hysteresis box,
initial condition, run lengths, noise and ensemble settings, analysis
parameters.  Commands echo the fully resolved configuration next to their
outputs as config_echo.json so any artifact can be regenerated from its echo
alone.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .dynamics import (
    CANONICAL_COEFFICIENTS,
    Mode,
    PhysicalParameters,
    ReducedCoefficients,
    State,
    reduce_physical,
)
from .hybrid import CANONICAL_BOX, Box

__all__ = ["RunConfig", "load_config", "merge_flags"]


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one simulation or analysis command."""

    coefficients: ReducedCoefficients = CANONICAL_COEFFICIENTS
    physical: PhysicalParameters | None = None
    box: Box = CANONICAL_BOX
    initial_state: State = State(2.5, 2.5, 5.0)
    initial_mode: Mode = Mode(0, 0)
    horizon: float = 1e6
    dt: float = 0.1
    eps: float = 0.1
    n_traj: int = 10
    seed: int = 0
    eps_list: tuple[float, ...] = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5)
    plane: str = "t1t2"
    bin_width: float = 0.05
    grid_bounds: tuple[tuple[float, float], tuple[float, float]] | None = None
    interval: tuple[float, float] | None = None
    dt_sync: float = 1.0
    p_ref: float = 15.23
    p_tol: float = 0.5
    detect_period: bool = False
    scheme: str = "independent"
    out: str | None = None

    def __post_init__(self) -> None:
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")
        if len(self.eps_list) == 0:
            raise ValueError("eps_list must not be empty")
        if self.plane not in ("t1t2", "t1p"):
            raise ValueError(f"plane must be 't1t2' or 't1p', got {self.plane!r}")
        if self.scheme not in ("independent", "summed"):
            raise ValueError(f"scheme must be 'independent' or 'summed', got {self.scheme!r}")
        if self.bin_width <= 0:
            raise ValueError(f"bin_width must be positive, got {self.bin_width}")

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        doc = {
            "coefficients": self.coefficients.to_dict(),
            "physical": (dataclasses.asdict(self.physical)
                         if self.physical is not None else None),
            "box": {"t_lower": self.box.t_lower, "t_upper": self.box.t_upper},
            "initial_state": {"T1": self.initial_state.T1,
                              "T2": self.initial_state.T2,
                              "P": self.initial_state.P},
            "initial_mode": list(self.initial_mode.as_tuple()),
            "horizon": self.horizon,
            "dt": self.dt,
            "eps": self.eps,
            "n_traj": self.n_traj,
            "seed": self.seed,
            "eps_list": list(self.eps_list),
            "plane": self.plane,
            "bin_width": self.bin_width,
            "grid_bounds": ([list(self.grid_bounds[0]), list(self.grid_bounds[1])]
                            if self.grid_bounds is not None else None),
            "interval": list(self.interval) if self.interval is not None else None,
            "dt_sync": self.dt_sync,
            "p_ref": self.p_ref,
            "p_tol": self.p_tol,
            "detect_period": self.detect_period,
            "scheme": self.scheme,
            "out": self.out,
        }
        return doc

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        # "command" is stamped into config_echo.json by the CLI; accepting it
        # here lets an echo file be fed straight back through --config.
        doc = {k: v for k, v in doc.items() if k != "command"}
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw: dict = {}

        physical = doc.get("physical")
        if physical is not None:
            kw["physical"] = PhysicalParameters(**physical)
        if "coefficients" in doc and doc["coefficients"] is not None:
            kw["coefficients"] = ReducedCoefficients.from_dict(doc["coefficients"])
        elif physical is not None:
            # A plant table without explicit coefficients means: reduce it.
            kw["coefficients"] = reduce_physical(kw["physical"])

        if "box" in doc and doc["box"] is not None:
            kw["box"] = Box(**doc["box"])
        if "initial_state" in doc and doc["initial_state"] is not None:
            kw["initial_state"] = State(**doc["initial_state"])
        if "initial_mode" in doc and doc["initial_mode"] is not None:
            kw["initial_mode"] = Mode(*doc["initial_mode"])
        for key in ("horizon", "dt", "eps", "bin_width", "dt_sync", "p_ref", "p_tol"):
            if key in doc and doc[key] is not None:
                kw[key] = float(doc[key])
        for key in ("n_traj", "seed"):
            if key in doc and doc[key] is not None:
                kw[key] = int(doc[key])
        if "eps_list" in doc and doc["eps_list"] is not None:
            kw["eps_list"] = tuple(float(v) for v in doc["eps_list"])
        for key in ("plane", "scheme", "out"):
            if key in doc and doc[key] is not None:
                kw[key] = str(doc[key])
        if "grid_bounds" in doc and doc["grid_bounds"] is not None:
            (xlo, xhi), (ylo, yhi) = doc["grid_bounds"]
            kw["grid_bounds"] = ((float(xlo), float(xhi)), (float(ylo), float(yhi)))
        if "interval" in doc and doc["interval"] is not None:
            a, b = doc["interval"]
            kw["interval"] = (float(a), float(b))
        if "detect_period" in doc and doc["detect_period"] is not None:
            kw["detect_period"] = bool(doc["detect_period"])
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def load_config(path=None) -> RunConfig:
    """Config file if given, else defaults."""
    return RunConfig.from_file(path) if path is not None else RunConfig()


def merge_flags(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply non-None flag overrides on top of a config (flags win)."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    if not updates:
        return cfg
    if "eps_list" in updates:
        updates["eps_list"] = tuple(float(v) for v in updates["eps_list"])
    return dataclasses.replace(cfg, **updates)
