"""Numerical tolerances and run defaults."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # distance to a hull below which a point counts as a member
    membership: float = 1e-9
    # max slack in <x - P(x), v - P(x)>_W over vertices
    certificate: float = 1e-9
    # projections that move a point by less than this return the input untouched
    snap: float = 1e-12
    # global oracle stopping rule on the projected-gradient mapping
    oracle_stationarity: float = 1e-10
    oracle_match: float = 1e-6
    # negative barycentric weight still accepted as zero
    barycentric: float = 1e-12


TOL = Tolerances()

DEFAULT_CAP = 20
DEFAULT_SWEEPS = 50
DEFAULT_TOL = 1e-7


@dataclass(frozen=True)
class RunConfig:
    design: str = "neighborhood"
    method: str = "cyclic"
    max_sweeps: int = DEFAULT_SWEEPS
    tol: float = DEFAULT_TOL
    seed: int = 0
    parallel: bool = False
    cap: int = DEFAULT_CAP

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)
