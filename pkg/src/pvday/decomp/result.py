"""Decomposition result container shared by all methods."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    """Named components of one decomposition.

    Components are ordered: trend, seasonal_<p>... , remainder for the
    seasonal-trend methods; imf_1.., residue for sifting methods; mode_1..
    for the variational method. ``meta`` carries method-specific extras
    (periods, center frequencies, convergence flag, parameters).
    """

    method: str
    components: dict[str, np.ndarray]
    source_length: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, c in self.components.items():
            if c.shape != (self.source_length,):
                raise ValueError(f"component {name!r} length {c.shape} != {self.source_length}")

    def names(self) -> list[str]:
        return list(self.components)

    def reconstruction(self) -> np.ndarray:
        """Pointwise sum of all components."""
        total = np.zeros(self.source_length)
        for c in self.components.values():
            total = total + c
        return total

    def max_additivity_error(self, source: np.ndarray) -> float:
        """Max abs deviation between the component sum and the source."""
        return float(np.max(np.abs(self.reconstruction() - np.asarray(source))))
