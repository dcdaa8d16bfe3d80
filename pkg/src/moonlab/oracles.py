"""Closed-form and quadrature ground truth, independent of the Monte Carlo engine.

Exact reliabilities exist for the independent baseline and for both common
cause models; the linear-covariate model needs one conditioning integral.
Means come from E(T) = integral of R(t) dt for nonnegative T. These are the
oracles the acceptance suite checks the simulator against, so nothing here
may share code with the sampling path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .engine import ArchitectureSpec
from .streams import DistributionSpec

_MAX_EXACT_N = 64


class UnsupportedDistributionError(ValueError):
    """Raised when a closed form requires the exponential special case."""


class OracleConvergenceError(RuntimeError):
    """Raised when a quadrature fails to reach its tolerance."""


@dataclass(frozen=True)
class SurvivalFunction:
    """Weibull survival S(t) = exp(-(t/scale)^shape) for a component lifetime."""

    dist: DistributionSpec

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0):
            raise ValueError("t must be nonnegative")
        s = np.exp(-((t / self.dist.scale) ** self.dist.shape))
        return float(s) if s.ndim == 0 else s

    def pdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        k, lam = self.dist.shape, self.dist.scale
        with np.errstate(divide="ignore"):
            d = (k / lam) * (t / lam) ** (k - 1.0) * np.exp(-((t / lam) ** k))
        return float(d) if d.ndim == 0 else d

    def mean(self) -> float:
        return self.dist.scale * math.gamma(1.0 + 1.0 / self.dist.shape)


def _binom_tail(m: int, q: float, k: int) -> float:
    """P(Binomial(m, q) >= k) by direct summation; exact for the small N used here."""
    if k <= 0:
        return 1.0
    if k > m:
        return 0.0
    if m > _MAX_EXACT_N:
        raise ValueError(f"exact binomial tail limited to N <= {_MAX_EXACT_N}, got {m}")
    total = 0.0
    for i in range(k, m + 1):
        total += math.comb(m, i) * q**i * (1.0 - q) ** (m - i)
    return min(1.0, total)


def indep_moon_reliability(t, arch: ArchitectureSpec, s: SurvivalFunction):
    """Survival of an M-out-of-N system of independent components at time t."""
    st = s(t)
    n, m = arch.n_components, arch.m_required
    if np.ndim(st) == 0:
        return _binom_tail(n, float(st), m)
    return np.array([_binom_tail(n, float(q), m) for q in st])


def indep_moon_mean_exponential(
    arch: ArchitectureSpec, dist: DistributionSpec = DistributionSpec()
) -> float:
    """Mean system lifetime for independent exponential components.

    The system fails at the (N-M+1)-th component failure; summing the
    exponential spacings gives scale * sum_{i=M}^{N} 1/i.
    """
    if not dist.is_exponential:
        raise UnsupportedDistributionError(
            f"closed-form MooN mean requires shape=1 (exponential), got shape={dist.shape}"
        )
    n, m = arch.n_components, arch.m_required
    return dist.scale * sum(1.0 / i for i in range(m, n + 1))


def linear_mean_prediction(
    p: float, arch: ArchitectureSpec, dist: DistributionSpec = DistributionSpec()
) -> float:
    """Mean lifetime under the linear model: (1-p)*E(indep system) + p*E(covariate).

    The same straight line is exact for the global common cause model. The
    marginal model deliberately breaks it.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return (1.0 - p) * indep_moon_mean_exponential(arch, dist) + p * dist.scale


def global_ccf_reliability(t, p: float, arch: ArchitectureSpec, s: SurvivalFunction):
    """Exact mixture: with probability p the system is the single covariate."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return (1.0 - p) * indep_moon_reliability(t, arch, s) + p * s(t)


def marginal_ccf_reliability(t, p: float, arch: ArchitectureSpec, s: SurvivalFunction):
    """Exact reliability by conditioning on how many components share the covariate.

    With j components tied to the covariate, the system survives t if either
    the covariate survives and at least M-j of the remaining N-j independent
    components do, or the covariate fails and at least M of them do.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    n, m = arch.n_components, arch.m_required

    def _scalar(ti: float) -> float:
        st = s(ti)
        total = 0.0
        for j in range(n + 1):
            w = math.comb(n, j) * p**j * (1.0 - p) ** (n - j)
            tied_alive = _binom_tail(n - j, st, m - j)
            tied_dead = _binom_tail(n - j, st, m)
            total += w * (st * tied_alive + (1.0 - st) * tied_dead)
        return min(1.0, total)

    t_arr = np.asarray(t, dtype=np.float64)
    if t_arr.ndim == 0:
        return _scalar(float(t_arr))
    return np.array([_scalar(ti) for ti in t_arr])


def linear_model_reliability(
    t,
    p: float,
    arch: ArchitectureSpec,
    s: SurvivalFunction,
    rel_tol: float = 1e-6,
):
    """Reliability under the linear model by conditioning on the covariate value.

    Given covariate x0, each component survives t iff (1-p)*X_k + p*x0 > t,
    i.e. with probability S((t - p*x0)/(1-p)) when t > p*x0 and certainly
    otherwise. Integrating the covariate density over [0, t/p] and adding the
    covariate tail mass (where survival is certain) avoids the kink at x0=t/p.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")

    def _scalar(ti: float) -> float:
        if ti == 0.0:
            return 1.0
        if p == 1.0:
            return s(ti)
        if p == 0.0:
            return indep_moon_reliability(ti, arch, s)

        n, m = arch.n_components, arch.m_required

        def integrand(x0: float) -> float:
            sc = s((ti - p * x0) / (1.0 - p))
            return s.pdf(x0) * _binom_tail(n, sc, m)

        upper = ti / p
        value, abserr = quad(integrand, 0.0, upper, epsabs=1e-12, epsrel=rel_tol, limit=200)
        tail = s(upper)  # covariate large enough that every component outlives t
        result = value + tail
        if abserr > rel_tol * max(result, 1e-12) + 1e-10:
            raise OracleConvergenceError(
                f"covariate quadrature error {abserr:.3e} exceeds tolerance at t={ti}"
            )
        return min(1.0, result)

    t_arr = np.asarray(t, dtype=np.float64)
    if t_arr.ndim == 0:
        return _scalar(float(t_arr))
    return np.array([_scalar(ti) for ti in t_arr])


def oracle_mean(
    reliability: Callable[[float], float],
    tail_cutoff: float = 1e-10,
    abs_tol: float = 1e-5,
    t_scale: float = 1.0,
) -> float:
    """E(T) = integral of R(t) dt for a nonnegative lifetime T.

    The upper limit is pushed out by doubling until R drops below
    tail_cutoff; the truncated tail is negligible against abs_tol for the
    exponentially decaying reliabilities used here.
    """
    upper = max(t_scale, 1e-6)
    for _ in range(200):
        if reliability(upper) < tail_cutoff:
            break
        upper *= 2.0
    else:
        raise OracleConvergenceError("reliability never fell below the tail cutoff")

    value, abserr = quad(reliability, 0.0, upper, epsabs=abs_tol / 10, epsrel=1e-9, limit=400)
    if abserr > abs_tol:
        raise OracleConvergenceError(
            f"mean quadrature error {abserr:.3e} exceeds abs_tol={abs_tol}"
        )
    return value


def model_reliability_fn(
    model, p: float, arch: ArchitectureSpec, dist: DistributionSpec
) -> Callable[[float], float]:
    """The analytic reliability t -> R(t) for one dependency model."""
    from .dependency import DependencyModel

    s = SurvivalFunction(dist)
    model = DependencyModel(model)
    if model is DependencyModel.LINEAR:
        return lambda t: linear_model_reliability(t, p, arch, s)
    if model is DependencyModel.GLOBAL_CCF:
        return lambda t: global_ccf_reliability(t, p, arch, s)
    return lambda t: marginal_ccf_reliability(t, p, arch, s)


def model_mean(model, p: float, arch: ArchitectureSpec, dist: DistributionSpec) -> float:
    """Analytic mean system lifetime for one dependency model.

    Uses the exponential closed form where it is exact (linear and global
    models); otherwise integrates the exact reliability.
    """
    from .dependency import DependencyModel

    model = DependencyModel(model)
    if model in (DependencyModel.LINEAR, DependencyModel.GLOBAL_CCF) and dist.is_exponential:
        return linear_mean_prediction(p, arch, dist)
    fn = model_reliability_fn(model, p, arch, dist)
    return oracle_mean(fn, t_scale=dist.scale)
