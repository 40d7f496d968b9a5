"""Model configuration and closed-form weights of the empirical Bayes posterior.

Given ``omega``, each coordinate of ``theta`` is an independent two-point
mixture: an exact zero, or a normal draw centred at the observation ``x_i``
with variance ``sigma2 / (1 + kappa * sigma2)``.  The unnormalized mixture
weights are

    spike:  omega * exp(-kappa * x_i**2 / 2)
    slab:   (1 - omega) / sqrt(1 + kappa * sigma2)

and are handled here in log space, since ``exp(-kappa * x**2 / 2)`` underflows
double precision once ``|x|`` is a little under 40.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, InputError, UsageError

__all__ = [
    "ModelConfig",
    "FeasibilityQuery",
    "as_observations",
    "spike_logweight",
    "slab_logweight",
    "spike_probability",
    "feasible_margin",
    "default_alpha",
]


def default_alpha(n: int) -> float:
    """Return the sample-size dependent beta shape ``alpha = 50 / n``.

    Gives 0.25, 0.10 and 0.05 at n = 200, 500 and 1000.
    """
    if int(n) != n or n < 1:
        raise UsageError(f"n must be a positive integer, got {n!r}")
    return 50.0 / n


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of the empirical Bayes model.

    Parameters
    ----------
    n : int
        Problem dimension.
    kappa : float
        Fractional-likelihood power, in (0, 1).
    sigma2 : float
        Slab variance of the working prior.
    alpha : float, optional
        Shape of the ``Beta(alpha * n, 1)`` prior on ``omega``.  Defaults to
        :func:`default_alpha`.
    """

    n: int
    kappa: float = 0.99
    sigma2: float = 100.0
    alpha: float = None

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.alpha is None:
            object.__setattr__(self, "alpha", default_alpha(self.n))
        for name in ("kappa", "sigma2", "alpha"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{name} must be a real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError(f"kappa must lie in the open interval (0, 1), got {self.kappa}")
        if not (self.sigma2 > 0.0 and math.isfinite(self.sigma2)):
            raise ConfigError(f"sigma2 must be positive and finite, got {self.sigma2}")
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be positive and finite, got {self.alpha}")

    @property
    def slab_variance(self) -> float:
        """Conditional variance of a non-zero coordinate, ``sigma2 / (1 + kappa sigma2)``."""
        return self.sigma2 / (1.0 + self.kappa * self.sigma2)

    def to_dict(self) -> dict:
        return {"n": self.n, "kappa": self.kappa, "sigma2": self.sigma2, "alpha": self.alpha}


@dataclass(frozen=True)
class FeasibilityQuery:
    kappa: float
    sigma2: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError(f"kappa must lie in the open interval (0, 1), got {self.kappa}")
        if not (self.sigma2 > 0.0 and math.isfinite(self.sigma2)):
            raise ConfigError(f"sigma2 must be positive and finite, got {self.sigma2}")
        if not (self.beta > 1.0 and math.isfinite(self.beta)):
            raise ConfigError(f"beta must exceed 1, got {self.beta}")


def as_observations(x, n=None) -> np.ndarray:
    """Validate a data vector and return it as a read-only float array."""
    arr = np.array(x, dtype=float).reshape(-1) if np.ndim(x) == 0 else np.array(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("observations must be a non-empty one-dimensional vector")
    if not np.all(np.isfinite(arr)):
        raise InputError("observations must all be finite")
    if n is not None and arr.size != n:
        raise ConfigError(f"data has length {arr.size} but the model has n = {n}")
    arr.setflags(write=False)
    return arr


def _check_omega(omega):
    if not np.all((np.asarray(omega) > 0.0) & (np.asarray(omega) < 1.0)):
        raise UsageError(f"omega must lie in (0, 1), got {omega!r}")


def spike_logweight(x, omega, kappa):
    """Log of the unnormalized point-mass weight, ``log(omega) - kappa x^2 / 2``."""
    _check_omega(omega)
    x = np.asarray(x, dtype=float)
    out = np.log(omega) - 0.5 * kappa * x * x
    return float(out) if out.ndim == 0 else out


def slab_logweight(omega, kappa, sigma2):
    """Log of the unnormalized slab weight, ``log(1 - omega) - log(1 + kappa sigma2) / 2``."""
    _check_omega(omega)
    if not sigma2 > 0:
        raise UsageError(f"sigma2 must be positive, got {sigma2!r}")
    return float(np.log1p(-omega) - 0.5 * np.log1p(kappa * sigma2))


def spike_probability(x, omega, kappa, sigma2):
    """Conditional probability that a coordinate is exactly zero given ``omega``.

    Vectorized over ``x``.  The normalization uses ``logaddexp`` (a max-shifted
    log-sum-exp), so the result is in [0, 1] and never NaN for finite input.
    """
    a = spike_logweight(x, omega, kappa)
    b = slab_logweight(omega, kappa, sigma2)
    out = np.exp(a - np.logaddexp(a, b))
    return float(out) if np.ndim(out) == 0 else out


def feasible_margin(q: FeasibilityQuery) -> float:
    """Signed distance of ``(kappa, sigma2)`` inside the feasible region for ``beta``.

    Returns ``rhs - lhs`` where

        lhs = 1 / (sigma2 (1 + beta/sigma2)^(1/beta)) - 1 / (sigma2 + beta)
        rhs = kappa ((1 - kappa) beta - 1) / (beta - 1)

    A strictly positive value means the pair is feasible.
    """
    k, s2, b = q.kappa, q.sigma2, q.beta
    lhs = 1.0 / (s2 * math.exp(math.log1p(b / s2) / b)) - 1.0 / (s2 + b)
    rhs = k * ((1.0 - k) * b - 1.0) / (b - 1.0)
    return rhs - lhs
