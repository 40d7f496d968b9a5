"""Point estimators built from a posterior chain or directly from the data."""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateEstimateError, UsageError
from .model import as_observations, default_alpha

__all__ = [
    "EstimateReport",
    "posterior_mean",
    "inclusion_probabilities",
    "universal_threshold",
    "hard_threshold",
    "oracle_hard_threshold",
    "mom_alpha",
    "resolve_alpha",
    "estimate_report",
    "LABELS",
]

LABELS = ("EBM", "HT", "HTO")

# Recorded in study metadata so an HTO discrepancy can be traced to its definition.
HTO_DEFINITION = (
    "threshold minimizing the realized loss ||theta_hat(t) - truth||^2 over "
    "t in {0} U {|x_i|} U {sqrt(2 log n)}; ties go to the smaller t; "
    "coordinates with |x_i| > t are kept"
)


@dataclass(frozen=True)
class EstimateReport:
    theta_hat: np.ndarray
    inclusion: np.ndarray
    omega_mean: float
    alpha_used: float
    estimator_label: str = "EBM"

    def to_dict(self) -> dict:
        return {
            "estimator_label": self.estimator_label,
            "alpha_used": self.alpha_used,
            "omega_mean": self.omega_mean,
            "theta_hat": self.theta_hat.tolist(),
            "inclusion": self.inclusion.tolist(),
        }


def _require_draws(chain):
    if chain.retained < 1:
        raise UsageError("chain has no retained draws")
    if np.isnan(chain.running_mean_theta).any():
        raise UsageError("chain carries no theta draws")


def posterior_mean(chain) -> np.ndarray:
    """Coordinate-wise average of the retained ``theta`` draws."""
    _require_draws(chain)
    return np.array(chain.running_mean_theta)


def inclusion_probabilities(chain) -> np.ndarray:
    """Fraction of retained draws in which each coordinate is non-zero."""
    _require_draws(chain)
    return np.array(chain.running_nonzero_freq)


def universal_threshold(n: int) -> float:
    """Return ``sqrt(2 log n)``."""
    if n < 2:
        raise UsageError(f"universal threshold needs n >= 2, got {n}")
    return math.sqrt(2.0 * math.log(n))


def hard_threshold(x, t: float) -> np.ndarray:
    """Keep ``x_i`` where ``|x_i| > t`` and set the rest to zero."""
    if not t > 0:
        raise UsageError(f"threshold must be positive, got {t}")
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) > t, x, 0.0)


def oracle_hard_threshold(x, truth, extra_candidates=None):
    """Hard thresholding with the threshold that minimizes the realized loss.

    The candidate thresholds are ``0``, every ``|x_i|`` and (for ``n >= 2``)
    the universal threshold, plus any ``extra_candidates``.  Ties are broken
    toward the smaller threshold.

    Returns
    -------
    t_star : float
    estimate : numpy.ndarray
    """
    x = np.asarray(x, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if truth.shape != x.shape:
        raise UsageError(f"truth has shape {truth.shape}, data has shape {x.shape}")
    ax = np.abs(x)
    cands = [np.zeros(1), ax]
    if x.size >= 2:
        cands.append([universal_threshold(x.size)])
    if extra_candidates is not None:
        cands.append(np.asarray(extra_candidates, dtype=float).reshape(-1))
    cands = np.unique(np.concatenate(cands))

    order = np.argsort(ax, kind="stable")
    sorted_ax = ax[order]
    # loss(t) = sum over zeroed coords of truth^2 + sum over kept coords of (x - truth)^2
    zero_cost = np.concatenate([[0.0], np.cumsum(truth[order] ** 2)])
    keep_cost = np.concatenate([[0.0], np.cumsum((x[order] - truth[order]) ** 2)])
    n_zeroed = np.searchsorted(sorted_ax, cands, side="right")
    losses = zero_cost[n_zeroed] + (keep_cost[-1] - keep_cost[n_zeroed])
    t_star = float(cands[int(np.argmin(losses))])
    return t_star, np.where(ax > t_star, x, 0.0)


def mom_alpha(x) -> float:
    """Method-of-moments estimate ``D / (n (n - D))`` of the beta shape.

    ``D`` is the number of observations with ``|x_i| <= sqrt(2 log n)``.

    Raises
    ------
    DegenerateEstimateError
        If every observation falls under the threshold.
    """
    x = as_observations(x)
    n = x.size
    d_hat = int(np.count_nonzero(np.abs(x) <= universal_threshold(n)))
    if d_hat == n:
        raise DegenerateEstimateError(
            "no observation exceeds the universal threshold; method-of-moments alpha is undefined"
        )
    return d_hat / (n * (n - d_hat))


def resolve_alpha(alpha, x):
    """Turn an ``alpha`` setting into a number.

    ``None`` means the ``50 / n`` default; ``"auto"`` means :func:`mom_alpha`
    with the default as fallback when the estimate is degenerate or zero.
    Returns ``(alpha, source)``.
    """
    n = len(x)
    if alpha is None:
        return default_alpha(n), "default"
    if alpha == "auto":
        try:
            a = mom_alpha(x)
        except DegenerateEstimateError:
            return default_alpha(n), "default-fallback"
        if a <= 0.0:
            return default_alpha(n), "default-fallback"
        return a, "mom"
    return float(alpha), "fixed"


def estimate_report(chain) -> EstimateReport:
    return EstimateReport(
        theta_hat=posterior_mean(chain),
        inclusion=inclusion_probabilities(chain),
        omega_mean=float(np.mean(chain.omega_draws)),
        alpha_used=chain.model.alpha,
        estimator_label="EBM",
    )
