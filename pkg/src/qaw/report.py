"""Residual reports shared by every identity checker."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of one identity check.

    ``scale`` is the largest summand magnitude, so ``residual_rel`` stays
    meaningful when the identity's value is itself tiny.
    """

    identity: str
    params: dict
    residual_abs: float
    scale: float
    tolerance: float = 1e-10
    residual_rel: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        if not self.scale > 0:
            object.__setattr__(self, "scale", 1e-300)
        rel = float(self.residual_abs) / float(self.scale)
        object.__setattr__(self, "residual_rel", rel)
        object.__setattr__(self, "passed", bool(rel <= self.tolerance))

    @property
    def pass_(self) -> bool:
        return self.passed

    def as_case(self) -> dict:
        return {
            "identity": self.identity,
            "params": self.params,
            "residual_rel": self.residual_rel,
            "pass": self.passed,
        }


def residual(identity: str, params: dict, terms: Iterable[complex], tolerance: float) -> ResidualReport:
    """Report ``|sum(terms)|`` normalised by ``max |term|``."""
    terms = [complex(t) for t in terms]
    scale = max((abs(t) for t in terms), default=0.0)
    return ResidualReport(identity, params, abs(sum(terms)), scale, tolerance)
