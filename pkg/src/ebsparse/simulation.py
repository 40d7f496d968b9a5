"""Replicated simulation studies of estimator mean squared error.

Each replication ``r`` gets its own seed ``derive_seed(root_seed, r)``, from
which two child streams are split: stream 0 draws the data, stream 1 drives
the Gibbs chain.  All estimators within a replication see the same data, and
results are joined by replication index, so a study is a pure function of its
spec no matter how many worker processes run it or in which order.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .estimators import (
    LABELS,
    hard_threshold,
    oracle_hard_threshold,
    posterior_mean,
    resolve_alpha,
    universal_threshold,
)
from .exceptions import ConfigError, EBSparseError, NumericError, UsageError
from .model import ModelConfig
from .rng import check_seed, derive_seed, make_rng
from .sampler import SamplerConfig, run_chain

__all__ = [
    "TruthSpec",
    "StudySpec",
    "StudyRow",
    "StudyResult",
    "make_theta_star",
    "generate_data",
    "squared_error",
    "replication_seed",
    "run_replication",
    "run_study",
]


@dataclass(frozen=True)
class TruthSpec:
    """Ground truth as ordered ``(count, value)`` groups padded with zeros to ``n``."""

    n: int
    groups: tuple = ()

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        groups = tuple((int(c), float(v)) for c, v in self.groups)
        if any(c < 1 for c, _ in groups):
            raise ConfigError("group counts must be positive")
        object.__setattr__(self, "groups", groups)

    @property
    def s(self) -> int:
        """Number of non-zero entries."""
        return sum(c for c, v in self.groups if v != 0.0)

    def to_dict(self) -> dict:
        return {"n": self.n, "groups": [list(g) for g in self.groups]}


@dataclass(frozen=True)
class StudySpec:
    """A replicated study of one truth.

    ``auto_alpha=True`` replaces ``model.alpha`` in each replication by the
    method-of-moments estimate, falling back to ``50 / n`` when it is
    degenerate.
    """

    truth: TruthSpec
    replications: int = 100
    estimators: tuple = ("EBM",)
    model: ModelConfig = None
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    root_seed: int = 0
    auto_alpha: bool = False

    def __post_init__(self):
        if self.model is None:
            object.__setattr__(self, "model", ModelConfig(self.truth.n))
        if self.model.n != self.truth.n:
            raise ConfigError(f"model n = {self.model.n} but truth n = {self.truth.n}")
        if isinstance(self.replications, bool) or int(self.replications) != self.replications \
                or self.replications < 1:
            raise ConfigError(f"replications must be a positive integer, got {self.replications!r}")
        est = tuple(self.estimators)
        unknown = [e for e in est if e not in LABELS]
        if unknown or not est:
            raise ConfigError(f"estimators must be a non-empty subset of {LABELS}, got {est}")
        object.__setattr__(self, "estimators", tuple(e for e in LABELS if e in est))
        try:
            check_seed(self.root_seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if ("HT" in est or "HTO" in est) and self.truth.n < 2:
            raise ConfigError("thresholding estimators need n >= 2")

    def to_dict(self) -> dict:
        return {
            "truth": self.truth.to_dict(),
            "replications": self.replications,
            "estimators": list(self.estimators),
            "model": self.model.to_dict() | {"alpha": "auto" if self.auto_alpha else self.model.alpha},
            "sampler": {k: v for k, v in self.sampler.to_dict().items() if k != "seed"},
            "root_seed": self.root_seed,
        }


@dataclass(frozen=True)
class StudyRow:
    label: str
    mse: float
    mc_stderr: float  # None for a single replication


@dataclass(frozen=True)
class StudyResult:
    rows: tuple
    losses: dict  # label -> per-replication losses, index order
    replications: tuple  # per-replication audit records, execution order
    spec: StudySpec

    def row(self, label) -> StudyRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


def make_theta_star(spec: TruthSpec) -> np.ndarray:
    total = sum(c for c, _ in spec.groups)
    if total > spec.n:
        raise ConfigError(f"signal groups hold {total} entries but n = {spec.n}")
    theta = np.zeros(spec.n)
    start = 0
    for count, value in spec.groups:
        theta[start:start + count] = value
        start += count
    return theta


def generate_data(theta_star, rng) -> np.ndarray:
    """Draw ``X_i ~ N(theta_i, 1)`` independently."""
    theta_star = np.asarray(theta_star, dtype=float)
    return theta_star + rng.standard_normal(theta_star.shape)


def squared_error(theta_hat, theta_star) -> float:
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    if theta_hat.shape != theta_star.shape:
        raise UsageError(f"length mismatch: {theta_hat.shape} vs {theta_star.shape}")
    return float(np.sum((theta_hat - theta_star) ** 2))


def replication_seed(root_seed: int, r: int) -> int:
    return derive_seed(root_seed, r)


def run_replication(spec: StudySpec, r: int) -> dict:
    """Run every requested estimator on replication ``r`` and return its audit record."""
    seed = replication_seed(spec.root_seed, r)
    try:
        theta_star = make_theta_star(spec.truth)
        x = generate_data(theta_star, make_rng(derive_seed(seed, 0)))
        record = {"replication": r, "seed": seed, "losses": {}}
        if "EBM" in spec.estimators:
            model = spec.model
            if spec.auto_alpha:
                alpha, source = resolve_alpha("auto", x)
                model = replace(model, alpha=alpha)
                record["alpha_source"] = source
            record["alpha"] = model.alpha
            sampler = replace(spec.sampler, seed=derive_seed(seed, 1))
            chain = run_chain(x, model, sampler, store_theta=False)
            record["losses"]["EBM"] = squared_error(posterior_mean(chain), theta_star)
        if "HT" in spec.estimators:
            t = universal_threshold(spec.truth.n)
            record["losses"]["HT"] = squared_error(hard_threshold(x, t), theta_star)
        if "HTO" in spec.estimators:
            t_star, est = oracle_hard_threshold(x, theta_star)
            record["hto_threshold"] = t_star
            record["losses"]["HTO"] = squared_error(est, theta_star)
    except ConfigError:
        raise
    except (EBSparseError, FloatingPointError, ValueError) as exc:
        raise NumericError(f"replication {r} (seed {seed}) failed: {exc}", r, seed) from exc
    bad = [k for k, v in record["losses"].items() if not math.isfinite(v)]
    if bad:
        raise NumericError(f"replication {r} (seed {seed}) produced a non-finite loss for {bad}", r, seed)
    return record


def _run_batch(args):
    spec, indices = args
    return [run_replication(spec, r) for r in indices]


def _summarize(values):
    mse = math.fsum(values) / len(values)
    se = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else None
    return mse, se


def run_study(spec: StudySpec, threads=None, order=None) -> StudyResult:
    """Run all replications of ``spec`` and aggregate per-estimator MSE.

    Parameters
    ----------
    spec : StudySpec
    threads : int, optional
        Worker process cap; defaults to the available CPU count.  ``1`` runs
        in-process.
    order : sequence of int, optional
        Execution order of replication indices (a permutation of
        ``range(spec.replications)``).  Only the order of the audit log
        depends on it.
    """
    R = spec.replications
    order = list(range(R)) if order is None else [int(i) for i in order]
    if sorted(order) != list(range(R)):
        raise UsageError("order must be a permutation of the replication indices")
    threads = threads or os.cpu_count() or 1
    if threads <= 1 or R == 1:
        records = [run_replication(spec, r) for r in order]
    else:
        nchunks = min(R, threads * 4)
        chunks = [order[i::nchunks] for i in range(nchunks)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            done = list(pool.map(_run_batch, [(spec, c) for c in chunks]))
        by_index = {rec["replication"]: rec for batch in done for rec in batch}
        records = [by_index[r] for r in order]

    by_index = {rec["replication"]: rec for rec in records}
    losses = {}
    rows = []
    for label in spec.estimators:
        vals = np.array([by_index[r]["losses"][label] for r in range(R)])
        vals.setflags(write=False)
        losses[label] = vals
        mse, se = _summarize(vals.tolist())
        rows.append(StudyRow(label, mse, se))
    return StudyResult(tuple(rows), losses, tuple(records), spec)

