"""Result containers shared by every estimator.

A fit is summarized by the variance components (sigma2, tau2), the implied
ridge penalty lambda = sigma2 / tau2, and the heritability-style
signal fraction h2 = p tau2 / (p tau2 + sigma2). Estimators that target
only one of these leave the rest unset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DataError

__all__ = ["VarianceComponents", "EstimateReport", "convert", "ROW_FIELDS"]


@dataclass(frozen=True)
class VarianceComponents:
    """Noise variance sigma2 and per-coefficient prior variance tau2.

    Values may be negative (method-of-moments keeps raw estimates and the
    owning report carries warning flags); conversions then propagate signs.
    """

    sigma2: float
    tau2: float
    p: int

    def __post_init__(self):
        if self.p < 1:
            raise DataError(f"p must be at least 1, got {self.p}")
        if math.isnan(self.sigma2) or math.isnan(self.tau2):
            raise DataError("variance components must not be NaN")

    @property
    def lam(self) -> float:
        if self.tau2 == 0.0:
            return math.inf if self.sigma2 > 0 else math.nan
        return self.sigma2 / self.tau2

    @property
    def h2(self) -> float:
        denom = self.p * self.tau2 + self.sigma2
        if denom == 0.0:
            return math.nan
        return self.p * self.tau2 / denom


def convert(components: VarianceComponents) -> tuple[float, float]:
    """(lambda, h2) implied by a pair of variance components."""
    return components.lam, components.h2


ROW_FIELDS = (
    "method",
    "sigma2",
    "tau2",
    "lambda",
    "h2",
    "converged",
    "log_objective",
    "wall_time_s",
    "seed",
    "replicate",
    "flags",
)


@dataclass(frozen=True)
class EstimateReport:
    """One estimator's answer on one dataset.

    Every quantity is stored explicitly so partial estimators can fill
    just what they estimate (penalty-only: lam; noise-only: sigma2); when
    ``components`` is present the four quantities derive from it.
    """

    method: str
    components: Optional[VarianceComponents] = None
    sigma2: Optional[float] = None
    tau2: Optional[float] = None
    lam: Optional[float] = None
    h2: Optional[float] = None
    converged: bool = True
    log_objective: Optional[float] = None
    wall_time_s: float = 0.0
    seed: Optional[int] = None
    replicate: Optional[int] = None
    flags: tuple = ()
    alpha_hat: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.components is not None:
            if self.sigma2 is None:
                object.__setattr__(self, "sigma2", self.components.sigma2)
            if self.tau2 is None:
                object.__setattr__(self, "tau2", self.components.tau2)
            if self.lam is None:
                object.__setattr__(self, "lam", self.components.lam)
            if self.h2 is None:
                object.__setattr__(self, "h2", self.components.h2)

    def with_context(self, seed: int, replicate: int) -> "EstimateReport":
        return replace(self, seed=seed, replicate=replicate)

    def to_row(self) -> dict:
        """Flat dict with the stable field names used by CSV/JSON export."""
        return {
            "method": self.method,
            "sigma2": self.sigma2,
            "tau2": self.tau2,
            "lambda": self.lam,
            "h2": self.h2,
            "converged": self.converged,
            "log_objective": self.log_objective,
            "wall_time_s": self.wall_time_s,
            "seed": self.seed,
            "replicate": self.replicate,
            "flags": ";".join(self.flags),
        }
