"""Two-block Gibbs sampler for the empirical Bayes posterior.

One sweep draws every ``theta_i`` given ``omega`` (independent spike/slab
choices) and then ``omega`` given the number of exact zeros ``D``::

    omega | theta ~ Beta(alpha * n + D, 1 + n - D)

Zeros are stored as the literal value ``0.0``; ``D`` is always the exact
count of zero entries, never a tolerance-based count.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, NumericError, UsageError
from .model import ModelConfig, as_observations, slab_logweight
from .rng import check_seed, make_rng

__all__ = [
    "SamplerConfig",
    "GibbsState",
    "PosteriorChain",
    "initial_state",
    "update_theta",
    "update_omega",
    "run_chain",
]

_OMEGA_LO = np.nextafter(0.0, 1.0)
_OMEGA_HI = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class SamplerConfig:
    """Chain length, burn-in, thinning and root seed.

    The defaults (5000 sweeps, 1000 burn-in, no thinning) keep the Monte Carlo
    error well below the resolution of integer-valued MSE tables.
    """

    iterations: int = 5000
    burn_in: int = 1000
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ("iterations", "burn_in", "thin", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be positive, got {self.iterations}")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigError(
                f"burn_in must satisfy 0 <= burn_in < iterations, got {self.burn_in}"
            )
        if self.thin < 1:
            raise ConfigError(f"thin must be at least 1, got {self.thin}")
        try:
            check_seed(self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class GibbsState:
    theta: np.ndarray
    omega: float
    d_theta: int

    @classmethod
    def from_theta(cls, theta, omega):
        theta = np.asarray(theta, dtype=float)
        return cls(theta, float(omega), int(np.count_nonzero(theta == 0.0)))


@dataclass(frozen=True)
class PosteriorChain:
    """Retained draws of a Gibbs run plus per-coordinate summaries.

    ``theta_draws`` has shape ``(retained, n)``; it is an empty ``(0, n)``
    array when the chain was run with ``store_theta=False``.  The running
    summaries are always populated.
    """

    theta_draws: np.ndarray
    omega_draws: np.ndarray
    d_theta_draws: np.ndarray
    running_mean_theta: np.ndarray
    running_nonzero_freq: np.ndarray
    model: ModelConfig = None
    sampler: SamplerConfig = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.running_mean_theta.shape[0]

    @property
    def retained(self) -> int:
        return self.omega_draws.shape[0]

    @classmethod
    def from_draws(cls, omega_draws, d_theta_draws, theta_draws=None, n=None,
                   model=None, sampler=None, meta=None):
        """Build a chain from stored draws, recomputing the running summaries.

        Used when chains are read back from disk or fabricated in tests.
        """
        omega = np.asarray(omega_draws, dtype=float).reshape(-1)
        d_theta = np.asarray(d_theta_draws, dtype=np.int64).reshape(-1)
        if omega.shape != d_theta.shape:
            raise ConfigError("omega_draws and d_theta_draws must have equal length")
        if theta_draws is not None and np.size(theta_draws):
            theta = np.asarray(theta_draws, dtype=float)
            if theta.ndim != 2 or theta.shape[0] != omega.shape[0]:
                raise ConfigError("theta_draws must be a (retained, n) matrix")
            n = theta.shape[1]
            mean = theta.sum(axis=0) / theta.shape[0] if theta.shape[0] else np.zeros(n)
            freq = np.count_nonzero(theta, axis=0) / max(theta.shape[0], 1)
        else:
            if n is None:
                n = model.n if model is not None else 0
            theta = np.empty((0, n))
            mean = np.full(n, np.nan)
            freq = np.full(n, np.nan)
        return cls(theta, omega, d_theta, mean, freq, model, sampler, dict(meta or {}))

    def to_dict(self, include_theta=True) -> dict:
        out = {
            "n": self.n,
            "model": self.model.to_dict() if self.model is not None else None,
            "sampler": self.sampler.to_dict() if self.sampler is not None else None,
            "omega_draws": self.omega_draws.tolist(),
            "d_theta_draws": self.d_theta_draws.tolist(),
        }
        if include_theta and self.theta_draws.size:
            out["theta_draws"] = self.theta_draws.tolist()
        return out


def initial_state(x, model: ModelConfig) -> GibbsState:
    """Start from the universal hard-threshold estimate.

    ``omega`` starts at ``max((D + 1) / (n + 2), 1 - 1 / (n + 1))``, clipped to
    the open unit interval.
    """
    n = model.n
    t = np.sqrt(2.0 * np.log(n)) if n >= 2 else 0.0
    theta = np.where(np.abs(x) > t, x, 0.0)
    d = int(np.count_nonzero(theta == 0.0))
    omega = max((d + 1.0) / (n + 2.0), 1.0 - 1.0 / (n + 1.0))
    omega = float(np.clip(omega, _OMEGA_LO, _OMEGA_HI))
    return GibbsState(theta, omega, d)


def _theta_constants(x, model):
    # log-weight pieces that do not depend on omega
    return -0.5 * model.kappa * x * x, 0.5 * np.log1p(model.kappa * model.sigma2), \
        np.sqrt(model.slab_variance)


def _draw_theta(x, neg_half_kx2, half_log_slab, slab_sd, omega, rng):
    a = np.log(omega) + neg_half_kx2
    b = np.log1p(-omega) - half_log_slab
    p_zero = np.exp(a - np.logaddexp(a, b))
    u = rng.random(x.shape[0])
    z = rng.standard_normal(x.shape[0])
    return np.where(u < p_zero, 0.0, x + slab_sd * z)


def _draw_omega(n, alpha, d, rng):
    g1 = rng.standard_gamma(alpha * n + d)
    g2 = rng.standard_gamma(1.0 + n - d)
    return min(max(g1 / (g1 + g2), _OMEGA_LO), _OMEGA_HI)


def update_theta(state: GibbsState, x, model: ModelConfig, rng) -> GibbsState:
    """Redraw every coordinate of ``theta`` given ``omega``.

    Coordinate ``i`` is set to exactly zero with probability
    :func:`spike_probability` and otherwise drawn from
    ``N(x_i, sigma2 / (1 + kappa sigma2))``.  Consumes ``n`` uniforms and then
    ``n`` standard normals from ``rng``.
    """
    if not 0.0 < state.omega < 1.0:
        raise UsageError(f"omega must lie in (0, 1), got {state.omega}")
    x = np.asarray(x, dtype=float)
    theta = _draw_theta(x, *_theta_constants(x, model), state.omega, rng)
    return GibbsState(theta, state.omega, int(np.count_nonzero(theta == 0.0)))


def update_omega(state: GibbsState, model: ModelConfig, rng) -> GibbsState:
    """Redraw ``omega`` from ``Beta(alpha n + D, 1 + n - D)``.

    The beta variate is formed as ``G1 / (G1 + G2)`` from two gamma draws,
    which stays accurate for shapes in the tens of thousands.
    """
    if not 0 <= state.d_theta <= model.n:
        raise UsageError(f"zero count {state.d_theta} outside [0, {model.n}]")
    omega = _draw_omega(model.n, model.alpha, state.d_theta, rng)
    return GibbsState(state.theta, float(omega), state.d_theta)


def run_chain(x, model: ModelConfig, sampler: SamplerConfig = None, *,
              store_theta=True, rng=None) -> PosteriorChain:
    """Run the Gibbs sampler and return the retained chain.

    Parameters
    ----------
    x : array_like
        Observations, length ``model.n``.
    model : ModelConfig
    sampler : SamplerConfig, optional
        Defaults to ``SamplerConfig()``.
    store_theta : bool
        Keep the full ``(retained, n)`` matrix of ``theta`` draws.  Studies
        switch this off; the running mean and inclusion frequencies are kept
        either way.
    rng : numpy.random.Generator, optional
        Overrides the stream seeded from ``sampler.seed``.

    The result is a pure function of ``(x, model, sampler)``.
    """
    sampler = sampler or SamplerConfig()
    x = as_observations(x, model.n)
    if rng is None:
        rng = make_rng(sampler.seed)
    n = model.n
    # the slab weight only depends on omega; checked once so a bad config fails early
    slab_logweight(0.5, model.kappa, model.sigma2)

    retained = sampler.retained
    theta_draws = np.empty((retained if store_theta else 0, n))
    omega_draws = np.empty(retained)
    d_draws = np.empty(retained, dtype=np.int64)
    theta_sum = np.zeros(n)
    nonzero = np.zeros(n, dtype=np.int64)

    state = initial_state(x, model)
    theta, omega = state.theta, state.omega
    consts = _theta_constants(x, model)
    k = 0
    # same kernels as update_theta/update_omega, without per-sweep validation
    for it in range(sampler.iterations):
        theta = _draw_theta(x, *consts, omega, rng)
        d = int(np.count_nonzero(theta == 0.0))
        omega = _draw_omega(n, model.alpha, d, rng)
        if it >= sampler.burn_in and (it - sampler.burn_in) % sampler.thin == 0 and k < retained:
            if store_theta:
                theta_draws[k] = theta
            omega_draws[k] = omega
            d_draws[k] = d
            theta_sum += theta
            nonzero += theta != 0.0
            k += 1

    mean = theta_sum / retained
    if not np.all(np.isfinite(mean)):
        raise NumericError("non-finite posterior mean", seed=sampler.seed)
    for arr in (theta_draws, omega_draws, d_draws, mean):
        arr.setflags(write=False)
    return PosteriorChain(
        theta_draws=theta_draws,
        omega_draws=omega_draws,
        d_theta_draws=d_draws,
        running_mean_theta=mean,
        running_nonzero_freq=nonzero / retained,
        model=model,
        sampler=sampler,
    )
