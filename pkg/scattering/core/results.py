"""Result records shared by every phase-shift method."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


@dataclass
class PhaseShiftResult:
    """A phase shift from one method, with its error estimate.

    ``order`` is 1 or 2 for a single perturbative order, or None for an
    all-orders value (exact solution, ODE oracle, renormalized iterate).
    """

    method: str
    value: float
    error_estimate: float = 0.0
    order: int | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.order not in (None, 1, 2):
            raise ValueError(f"order must be 1, 2 or None, got {self.order}")
        if self.error_estimate < 0 or math.isnan(self.error_estimate):
            raise ValueError(f"error_estimate must be non-negative, got {self.error_estimate}")
