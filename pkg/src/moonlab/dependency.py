"""Component-dependency transforms mapping a shared covariate onto lifetimes.

All three models take the covariate lifetime x0, the independent component
lifetimes x_1..x_N and a coupling parameter p in [0, 1], and produce the
dependent lifetime vector y. p=0 leaves the components independent; p=1
collapses every component onto the covariate.

Component TTF vectors are plain 1-D float arrays (one entry per component);
batch paths use (draws, N) matrices, one row per draw.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .streams import DistributionSpec, RandomStream, weibull_inverse_cdf


class DependencyModel(str, Enum):
    """How component lifetimes couple to the covariate."""

    LINEAR = "linear"
    GLOBAL_CCF = "global-ccf"
    MARGINAL_CCF = "marginal-ccf"

    def __str__(self) -> str:  # argparse/csv friendliness
        return self.value


@dataclass(frozen=True)
class DependencyConfig:
    model: DependencyModel
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", DependencyModel(self.model))
        if not (np.isfinite(self.p) and 0.0 <= self.p <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


def linear_combine(x0: float, x: np.ndarray, p: float) -> np.ndarray:
    """Blend each component with the covariate: y_k = (1-p)*x_k + p*x0."""
    x = np.asarray(x, dtype=np.float64)
    return (1.0 - p) * x + p * x0


def global_ccf_select(x0: float, x: np.ndarray, xi: int) -> np.ndarray:
    """All-or-nothing common cause: xi=1 replaces every component with x0."""
    x = np.asarray(x, dtype=np.float64)
    if xi:
        return np.full_like(x, x0)
    return x.copy()


def marginal_ccf_select(x0: float, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Per-component common cause: y_k = x0 where xi_k=1, else x_k."""
    x = np.asarray(x, dtype=np.float64)
    xi = np.asarray(xi)
    if xi.shape != x.shape:
        raise ValueError(f"xi length {xi.shape} does not match x length {x.shape}")
    return np.where(xi.astype(bool), x0, x)


def draw_budget(model: DependencyModel, n: int) -> int:
    """Uniform draws consumed per draw_ttf_vector call, fixed per model.

    The budget is consumed in full regardless of indicator outcomes so that
    the draw index for sample i is always i * budget.
    """
    model = DependencyModel(model)
    if model is DependencyModel.LINEAR:
        return n + 1
    if model is DependencyModel.GLOBAL_CCF:
        return n + 2
    return 2 * n + 1


def draw_ttf_vector(
    cfg: DependencyConfig, dist: DistributionSpec, n: int, stream: RandomStream
) -> np.ndarray:
    """Draw one dependent component-lifetime vector of length n.

    Draw order within the fixed budget: one uniform for the covariate x0,
    then n uniforms for x_1..x_n, then the indicator uniforms the model
    needs (one for the global model, n for the marginal model).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return draw_ttf_matrix(cfg, dist, n, 1, stream)[0]


def draw_ttf_matrix(
    cfg: DependencyConfig,
    dist: DistributionSpec,
    n: int,
    count: int,
    stream: RandomStream,
) -> np.ndarray:
    """Draw `count` dependent lifetime vectors as a (count, n) matrix.

    Row i consumes uniforms [i*budget, (i+1)*budget) of the stream, in the
    same order as draw_ttf_vector, so batch and scalar paths agree exactly.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    budget = draw_budget(cfg.model, n)
    u = stream.uniform((count, budget))

    x0 = weibull_inverse_cdf(u[:, 0], dist)[:, None]
    x = weibull_inverse_cdf(u[:, 1 : n + 1], dist)

    if cfg.model is DependencyModel.LINEAR:
        return (1.0 - cfg.p) * x + cfg.p * x0
    if cfg.model is DependencyModel.GLOBAL_CCF:
        xi = u[:, n + 1 : n + 2] < cfg.p
        return np.where(xi, x0, x)
    xi = u[:, n + 1 : 2 * n + 1] < cfg.p
    return np.where(xi, x0, x)
