"""Deterministic, splittable random streams and inverse-CDF lifetime sampling.

Streams are backed by the counter-based Philox generator keyed by
``(seed, stream_id)``: creating a stream is O(1), distinct ids never overlap
by construction, and the k-th draw is a pure function of (seed, stream_id, k).
That is what makes chunked Monte Carlo runs reproducible independently of how
work is scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class DistributionSpec:
    """Weibull lifetime distribution: shape k and scale lambda (time units).

    shape == 1 is the exponential distribution with mean ``scale``, the
    default configuration throughout.
    """

    shape: float = 1.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.shape) and self.shape > 0):
            raise ValueError(f"shape must be a positive real, got {self.shape}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be a positive real, got {self.scale}")

    @property
    def is_exponential(self) -> bool:
        return self.shape == 1.0


def _check_uint64(value: int, name: str) -> int:
    value = int(value)
    if not 0 <= value <= _UINT64_MAX:
        raise ValueError(f"{name} must fit a 64-bit unsigned integer, got {value}")
    return value


class RandomStream:
    """A single-owner uniform stream identified by (seed, stream_id).

    Instances are cheap; parallel code creates one disjoint stream per work
    chunk instead of sharing one stream across threads.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = _check_uint64(seed, "seed")
        self.stream_id = _check_uint64(stream_id, "stream_id")
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform(self, size: int | tuple[int, ...] | None = None):
        """Draw u ~ U[0, 1), advancing the stream by the number of draws.

        A batch request consumes exactly the same underlying draws as the
        equivalent sequence of scalar calls, so sample indexing is stable.
        """
        if size is None:
            return float(self._gen.random())
        return self._gen.random(size)

    def bernoulli(self, p: float, size: int | tuple[int, ...] | None = None):
        """Draw indicator(s) that are 1 with probability p (realized as u < p)."""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        if size is None:
            return int(self._gen.random() < p)
        return (self._gen.random(size) < p).astype(np.uint8)

    def weibull(self, dist: DistributionSpec, size: int | tuple[int, ...] | None = None):
        """Draw Weibull(dist) lifetimes by inverse transform."""
        return weibull_inverse_cdf(self.uniform(size), dist)


def make_stream(seed: int, stream_id: int = 0) -> RandomStream:
    """Create the stream identified by (seed, stream_id)."""
    return RandomStream(seed, stream_id)


def sample_uniform(stream: RandomStream) -> float:
    """One u ~ U[0, 1) from the stream."""
    return stream.uniform()


def sample_bernoulli(stream: RandomStream, p: float) -> int:
    """One indicator that is 1 with probability p (convention: u < p)."""
    return stream.bernoulli(p)


def weibull_inverse_cdf(u, dist: DistributionSpec):
    """Map u in [0, 1) to Weibull(shape, scale) time: scale * (-ln(1-u))^(1/shape).

    Strictly increasing in u; u=0 maps to time 0. Scalars map to floats,
    arrays map elementwise.
    """
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any(u_arr < 0.0) or np.any(u_arr >= 1.0):
        raise ValueError("u must lie in [0, 1)")
    # -log1p(-u) = -ln(1-u), accurate for u near 0
    t = -np.log1p(-u_arr)
    if dist.shape != 1.0:
        t = t ** (1.0 / dist.shape)
    t = dist.scale * t
    if np.isscalar(u) or np.ndim(u) == 0:
        return float(t)
    return t
