"""Empirical checks of the posterior's concentration behaviour.

These turn asymptotic statements into finite-sample numbers: where the
``omega`` posterior piles up, how much mass ``1 - omega`` puts above
``K * eps_n / n``, how closely the chain satisfies the conditional-mean identity

    E(omega | X) = (alpha + E(D | X) / n) / (alpha + 1 + 1/n),

and the realized loss measured in units of the minimax rate
``eps_n = s log(n / s)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .estimators import posterior_mean, universal_threshold
from .exceptions import UsageError

__all__ = [
    "DiagnosticsReport",
    "epsilon_n",
    "omega_concentration",
    "dimension_tail",
    "ew_identity_residual",
    "ew_identity_stderr",
    "concentration_ratio",
    "diagnose",
]

MIN_DRAWS = 100


@dataclass(frozen=True)
class DiagnosticsReport:
    omega_hist: list
    omega_mode_loc: float
    ew_identity_residual: float
    ew_identity_stderr: float
    dim_tail_prob: float
    epsilon_n: float
    delta_n: float
    k_const: float
    s: int
    s_source: str
    concentration_ratio: float = None

    def to_dict(self) -> dict:
        return {
            "omega_hist": [list(b) for b in self.omega_hist],
            "omega_mode_loc": self.omega_mode_loc,
            "ew_identity_residual": self.ew_identity_residual,
            "ew_identity_stderr": self.ew_identity_stderr,
            "dim_tail_prob": self.dim_tail_prob,
            "epsilon_n": self.epsilon_n,
            "delta_n": self.delta_n,
            "k_const": self.k_const,
            "s": self.s,
            "s_source": self.s_source,
            "concentration_ratio": self.concentration_ratio,
        }


def epsilon_n(n: int, s: int) -> float:
    """Minimax rate unit ``s log(n / s)`` for ``s``-sparse vectors in dimension ``n``."""
    if not 1 <= s < n:
        raise UsageError(f"need 1 <= s < n, got s={s}, n={n}")
    return s * math.log(n / s)


def omega_concentration(chain, bins: int = 50, min_draws: int = MIN_DRAWS):
    """Histogram of the ``omega`` draws and the midpoint of its fullest bin.

    Bins are equal-width on ``[min, max]`` of the draws.  A constant chain
    gives the single bin ``(v, v, count)`` with mode ``v``.

    Returns
    -------
    hist : list of (left, right, count)
    mode_loc : float
    """
    w = np.asarray(chain.omega_draws, dtype=float)
    if w.size < min_draws:
        raise UsageError(f"need at least {min_draws} retained draws, got {w.size}")
    if bins < 1:
        raise UsageError(f"bins must be positive, got {bins}")
    lo, hi = float(w.min()), float(w.max())
    if lo == hi:
        return [(lo, hi, int(w.size))], lo
    counts, edges = np.histogram(w, bins=bins, range=(lo, hi))
    hist = [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]
    j = int(np.argmax(counts))
    return hist, float(0.5 * (edges[j] + edges[j + 1]))


def dimension_tail(chain, s: int, k_const: float = 2.0) -> float:
    """Fraction of retained draws with ``1 - omega > k_const * eps_n / n``."""
    if not k_const > 0:
        raise UsageError(f"k_const must be positive, got {k_const}")
    n = chain.n
    delta = k_const * epsilon_n(n, s) / n
    return float(np.mean(1.0 - np.asarray(chain.omega_draws) > delta))


def _identity_terms(chain, model):
    n, a = model.n, model.alpha
    denom = a + 1.0 + 1.0 / n
    w = np.asarray(chain.omega_draws, dtype=float)
    d = np.asarray(chain.d_theta_draws, dtype=float)
    return w, a / denom + d / (n * denom)


def ew_identity_residual(chain, model) -> float:
    """``mean(omega) - [alpha/(alpha+1+1/n) + mean(D)/(n (alpha+1+1/n))]`` over retained draws."""
    w, cond = _identity_terms(chain, model)
    if w.size < 1:
        raise UsageError("chain has no retained draws")
    return float(np.mean(w) - np.mean(cond))


def ew_identity_stderr(chain, model, batches: int = 40) -> float:
    """Batch-means Monte Carlo standard error of :func:`ew_identity_residual`."""
    w, cond = _identity_terms(chain, model)
    diff = w - cond
    batches = min(batches, diff.size)
    if batches < 2:
        raise UsageError("need at least two retained draws for a standard error")
    size = diff.size // batches
    means = diff[: size * batches].reshape(batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(batches))


def concentration_ratio(theta_hat, theta_star, s: int = None) -> float:
    """Realized squared error divided by ``eps_n(n, s)``."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    if s is None:
        s = int(np.count_nonzero(theta_star))
    if s < 1:
        raise UsageError("rate is undefined for an all-zero truth")
    return float(np.sum((theta_hat - theta_star) ** 2)) / epsilon_n(theta_star.size, s)


def diagnose(chain, x=None, theta_star=None, s=None, k_const: float = 2.0,
             bins: int = 50) -> DiagnosticsReport:
    """Collect every diagnostic for one chain.

    The sparsity ``s`` is taken, in order of preference, from the argument,
    from ``theta_star``, or from universal thresholding of ``x``
    (``n - #{|x_i| <= sqrt(2 log n)}``).  Rate-based fields are ``None`` when
    ``s`` falls outside ``[1, n)``.
    """
    model = chain.model
    n = chain.n
    if s is not None:
        source = "given"
    elif theta_star is not None:
        s, source = int(np.count_nonzero(theta_star)), "truth"
    elif x is not None:
        d_hat = int(np.count_nonzero(np.abs(x) <= universal_threshold(n)))
        s, source = n - d_hat, "threshold"
    else:
        source = "unavailable"

    hist, mode = omega_concentration(chain, bins)
    resid = ew_identity_residual(chain, model)
    se = ew_identity_stderr(chain, model)
    eps = delta = tail = ratio = None
    if s is not None and 1 <= s < n:
        eps = epsilon_n(n, s)
        delta = k_const * eps / n
        tail = dimension_tail(chain, s, k_const)
        if theta_star is not None and not np.isnan(chain.running_mean_theta).any():
            ratio = concentration_ratio(posterior_mean(chain), theta_star, s)
    return DiagnosticsReport(
        omega_hist=hist,
        omega_mode_loc=mode,
        ew_identity_residual=resid,
        ew_identity_stderr=se,
        dim_tail_prob=tail,
        epsilon_n=eps,
        delta_n=delta,
        k_const=k_const,
        s=s,
        s_source=source,
        concentration_ratio=ratio,
    )
