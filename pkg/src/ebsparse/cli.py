"""Command-line interface: ``ebsparse {fit,simulate,diagnose,feasible}``.

Exit codes: 0 success, 1 input error, 2 configuration error, 3 numeric failure.
"""

import argparse
import csv
import datetime
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    builtin_study,
    digest,
    dumps,
    parse_fit_config,
    parse_study,
    read_data,
    read_json,
)
from .diagnostics import diagnose, epsilon_n
from .estimators import HTO_DEFINITION, estimate_report, resolve_alpha
from .exceptions import ConfigError, InputError, NumericError, UsageError
from .model import FeasibilityQuery, ModelConfig, feasible_margin
from .sampler import PosteriorChain, run_chain
from .simulation import run_study

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
BOUNDARY_TOL = 1e-6


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def manifest(command, resolved, root_seed, started):
    return {
        "command": command,
        "config_digest": digest(resolved),
        "root_seed": root_seed,
        "tool_version": __version__,
        "started_at": started,
        "finished_at": _now(),
    }


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _document(man, result):
    # manifest and numeric payload are kept apart so payloads can be compared byte for byte
    return dumps({"manifest": man, "result": result}, indent=1) + "\n"


def _fit_chain(data_path, config_path, seed):
    x = read_data(data_path)
    doc = read_json(config_path) if config_path else {}
    model_kwargs, alpha_setting, sampler, diag = parse_fit_config(doc, x.size, seed)
    if alpha_setting == "auto" and x.size < 2:
        raise ConfigError("alpha 'auto' needs at least two observations")
    alpha, source = resolve_alpha(alpha_setting, x)
    model = ModelConfig(**model_kwargs, alpha=alpha)
    resolved = {
        "data_sha256": digest(x.tolist()),
        "model": model.to_dict(),
        "alpha_source": source,
        "sampler": sampler.to_dict(),
        "diagnostics": diag,
    }
    try:
        chain = run_chain(x, model, sampler)
    except NumericError as exc:
        raise NumericError(f"{exc} (seed {sampler.seed})", seed=sampler.seed) from exc
    return x, chain, diag, resolved


def _diagnostics(chain, x, diag):
    try:
        return diagnose(chain, x=x, s=diag.get("s"), k_const=diag.get("k_const", 2.0),
                        bins=diag.get("bins", 50))
    except UsageError as exc:
        raise ConfigError(str(exc)) from None


def cmd_fit(args):
    started = _now()
    x, chain, diag, resolved = _fit_chain(args.data, args.config, args.seed)
    report = estimate_report(chain)
    result = {"estimate": report.to_dict(), "diagnostics": _diagnostics(chain, x, diag).to_dict()}
    if args.save_chain:
        Path(args.save_chain).write_text(dumps(chain.to_dict()) + "\n")
    _emit(_document(manifest("fit", resolved, chain.sampler.seed, started), result), args.out)
    return EXIT_OK


def _load_chain(path, config_path):
    doc = read_json(path, "chain file")
    if not isinstance(doc, dict) or "omega_draws" not in doc or "d_theta_draws" not in doc:
        raise InputError(f"{path}: a chain file needs 'omega_draws' and 'd_theta_draws'")
    n = doc.get("n")
    mdoc = doc.get("model")
    if mdoc is None:
        cfg = read_json(config_path) if config_path else {}
        mdoc = dict(cfg.get("model", {}), n=n)
    try:
        model = ModelConfig(**mdoc)
        chain = PosteriorChain.from_draws(
            doc["omega_draws"], doc["d_theta_draws"], doc.get("theta_draws"),
            n=model.n, model=model,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise InputError(f"{path}: malformed chain: {exc}") from None
    if chain.n != model.n:
        raise ConfigError(f"chain has n = {chain.n} but its model says n = {model.n}")
    return chain


def cmd_diagnose(args):
    started = _now()
    path = Path(args.input)
    diag = {"bins": args.bins, "k_const": args.k_const}
    if args.s is not None:
        diag["s"] = args.s
    if path.suffix == ".json":
        chain = _load_chain(path, args.config)
        x = None
        resolved = {"chain_sha256": digest(json.loads(path.read_text())), "diagnostics": diag}
        seed = None
    else:
        x, chain, file_diag, resolved = _fit_chain(path, args.config, args.seed)
        diag = {**file_diag, **{k: v for k, v in diag.items() if v is not None}}
        resolved["diagnostics"] = diag
        seed = chain.sampler.seed
    if chain.retained < 100:
        raise InputError(f"diagnostics need at least 100 retained draws, got {chain.retained}")
    report = _diagnostics(chain, x, diag)
    result = {
        "diagnostics": report.to_dict(),
        "plots": {
            "omega_histogram": [
                {"left": lo, "right": hi, "count": c} for lo, hi, c in report.omega_hist
            ],
            "omega_mode": report.omega_mode_loc,
        },
    }
    if not np.isnan(chain.running_nonzero_freq).any():
        result["plots"]["inclusion"] = chain.running_nonzero_freq.tolist()
    _emit(_document(manifest("diagnose", resolved, seed, started), result), args.out)
    return EXIT_OK


def study_table(cells):
    """Render study results as CSV text: one row per estimator, one column per cell.

    Standard-error columns follow the MSE columns and are left empty for
    single-replication studies.
    """
    labels = [label for label, _ in cells]
    estimators = cells[0][1].spec.estimators
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["estimator", *labels, *(f"se {lab}" for lab in labels)])
    for est in estimators:
        rows = [res.row(est) for _, res in cells]
        writer.writerow([
            est,
            *(repr(r.mse) for r in rows),
            *("" if r.mc_stderr is None else repr(r.mc_stderr) for r in rows),
        ])
    return buf.getvalue()


def _cell_audit(label, result):
    spec = result.spec
    s = spec.truth.s
    rows = []
    for r in result.rows:
        row = {"estimator": r.label, "mse": r.mse, "mc_stderr": r.mc_stderr}
        if 1 <= s < spec.truth.n:
            row["rate_ratio"] = r.mse / epsilon_n(spec.truth.n, s)
        rows.append(row)
    return {
        "label": label,
        "spec": spec.to_dict(),
        "rows": rows,
        "losses": {k: v.tolist() for k, v in result.losses.items()},
        "replications": list(result.replications),
    }


def cmd_simulate(args):
    started = _now()
    if args.builtin:
        doc = builtin_study(args.study)
    else:
        doc = read_json(args.study, "study file")
    specs, root = parse_study(doc, args.seed)
    cells = []
    for label, spec in specs:
        try:
            cells.append((label, run_study(spec, threads=args.threads)))
        except NumericError as exc:
            raise NumericError(f"cell {label!r}: {exc}", exc.replication, exc.seed) from exc
    resolved = {k: v for k, v in doc.items() if k not in ("reference", "root_seed")}
    resolved["root_seed"] = root
    audit = {
        "name": doc.get("name"),
        "cells": [_cell_audit(label, res) for label, res in cells],
        "reference": doc.get("reference", {}),
    }
    if "HTO" in specs[0][1].estimators:
        audit["hto_definition"] = HTO_DEFINITION
    out = Path(args.out)
    out.write_text(study_table(cells))
    audit_path = out.with_suffix(".json")
    audit_path.write_text(_document(manifest("simulate", resolved, root, started), audit))
    return EXIT_OK


def feasibility_verdict(margin):
    if abs(margin) < BOUNDARY_TOL:
        return "boundary"
    return "feasible" if margin > 0 else "infeasible"


def cmd_feasible(args):
    q = FeasibilityQuery(args.kappa, args.sigma2, args.beta)
    margin = feasible_margin(q)
    verdict = feasibility_verdict(margin)
    lines = [f"margin {margin!r}", f"verdict {verdict}"]
    if verdict != "feasible" and abs(q.sigma2 * (1.0 - q.kappa) - 1.0) < 1e-9:
        lines.append(
            "note: sigma2 = 1/(1 - kappa) is only asymptotically on the boundary "
            "(large beta, kappa near 1); at finite beta it can fall just outside"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        payload = {"kappa": q.kappa, "sigma2": q.sigma2, "beta": q.beta,
                   "margin": margin, "verdict": verdict}
        Path(args.out).write_text(dumps(payload, indent=1) + "\n")
    sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ebsparse",
        description="Empirical Bayes posterior for sparse normal means.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output path (default: stdout)")
        if seed:
            p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker cap (default: available CPUs)")

    p = sub.add_parser("fit", help="run the sampler on a data file")
    p.add_argument("data", help="newline-delimited reals, '#' comments allowed")
    common(p)
    p.add_argument("--save-chain", help="also write the retained chain as JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="run a replicated MSE study")
    p.add_argument("study", help="study JSON file, or a bundled study name with --builtin")
    common(p)
    p.add_argument("--builtin", action="store_true", help="treat STUDY as a bundled study name")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="concentration diagnostics for a chain or data file")
    p.add_argument("input", help="chain JSON (from fit --save-chain) or a data file")
    common(p)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--k-const", type=float, default=2.0)
    p.add_argument("--s", type=int, default=None, help="sparsity used for the rate unit")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("feasible", help="signed feasibility margin of (kappa, sigma2)")
    p.add_argument("kappa", type=float)
    p.add_argument("sigma2", type=float)
    p.add_argument("beta", type=float)
    p.add_argument("--out", help="also write the result as JSON")
    p.set_defaults(func=cmd_feasible)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and not getattr(args, "out", None):
        parser.error("simulate requires --out")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, UsageError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
