"""Violation records shared by the falsification experiments."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class ViolationRecord:
    experiment: str
    norm: str
    params: dict[str, Any]
    lhs: float
    rhs: float
    margin: float
    violated: bool
    estimates: list[dict[str, Any]] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "norm": self.norm,
            "params": dict(self.params),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "violated": self.violated,
            "estimates": list(self.estimates),
            "provenance": dict(self.provenance),
            "details": dict(self.details),
        }


def params_block(K, N, t, rho, seed) -> dict[str, Any]:
    return {"K": K, "N": N, "t": t, "rho": rho, "seed": seed}


def named(name: str, est) -> dict[str, Any]:
    d = est.as_dict()
    d["name"] = name
    return d
