"""Command-line surface: simulate, reconstruct, certify, scan, threshold.

Results documents are JSON trees {schema_version, command, config, outputs,
warnings}; datasets use the quadrature-v1 text format; scans write CSV.
Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .certify import (
    DETECTION_K,
    CertifierKind,
    certifier_value,
    critical_eta,
    make_report,
    optimal_single_point,
    optimize_two_point,
    parse_certifier,
    region_scan,
    single_point_value,
    two_point_value,
    wigner_min,
    write_scan_csv,
)
from .fock import StateParams, apply_loss, lossy_spats_dist, mandel_q, thermal_dist
from .homodyne import read_dataset, sample, write_dataset
from .phasespace import husimi_diag, wigner_diag
from .tomography import (
    DEFAULT_BINS,
    DEFAULT_CUTOFF,
    bin_data,
    bootstrap,
    fit_eta,
    fit_params,
    mle_diagonal,
    recommended_x_max,
)

SCHEMA_VERSION = 1
ALL_CERTIFIERS = tuple(k.value for k in CertifierKind)


class UsageError(Exception):
    """Invalid invocation; maps to exit code 2."""


def _write_results(path, command: str, config: dict, outputs: dict, warns: list) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "outputs": outputs,
        "warnings": warns,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _check_params(nbar: float, eta: float) -> StateParams:
    if not (math.isfinite(nbar) and nbar >= 0):
        raise UsageError(f"nbar must be >= 0, got {nbar}")
    if not (math.isfinite(eta) and 0 <= eta <= 1):
        raise UsageError(f"eta must lie in [0, 1], got {eta}")
    return StateParams(nbar, eta)


def _parse_kinds(names) -> list[CertifierKind]:
    if not names:
        return list(CertifierKind)
    kinds = []
    for name in names:
        try:
            kind = parse_certifier(name)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if kind not in kinds:
            kinds.append(kind)
    return kinds


def cmd_simulate(args) -> None:
    params = _check_params(args.nbar, args.eta)
    if args.count < 1:
        raise UsageError(f"count must be >= 1, got {args.count}")
    dist = lossy_spats_dist(params)
    ds = sample(dist, args.count, args.seed, params)
    write_dataset(ds, args.out)
    print(f"wrote {ds.count} quadrature records to {args.out}")
    print(f"sample variance: {float(ds.x.var()):.6f}")
    if args.figure:
        from .plots import save_sample_plot

        save_sample_plot(ds, dist, args.figure)


def _reconstruct(ds, cutoff: int, bins: int):
    x_max = recommended_x_max(ds, cutoff)
    binned = bin_data(ds, bins, x_max=x_max)
    return mle_diagonal(binned, cutoff), x_max


def cmd_reconstruct(args) -> None:
    if args.cutoff < 4:
        raise UsageError(f"cutoff must be >= 4, got {args.cutoff}")
    if args.bins < 16:
        raise UsageError(f"bins must be >= 16, got {args.bins}")
    ds = read_dataset(args.data)
    result, x_max = _reconstruct(ds, args.cutoff, args.bins)
    fit = fit_params(result.state)
    warns = []
    if fit.model_mismatch:
        warns.append(
            f"model mismatch: fit residual {fit.residual:.4f} exceeds 0.05"
        )
    if not result.converged:
        warns.append("reconstruction stopped at the iteration cap without converging")
    outputs = {
        "probs": [float(p) for p in result.state.probs],
        "fit": {
            "nbar": float(fit.params.nbar),
            "eta": float(fit.params.eta),
            "residual": float(fit.residual),
            "model_mismatch": bool(fit.model_mismatch),
        },
        "loglik": float(result.loglik_trace[-1]),
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "x_max": float(x_max),
    }
    config = {"data": str(args.data), "cutoff": args.cutoff, "bins": args.bins}
    _write_results(args.out, "reconstruct", config, outputs, warns)
    print(f"wrote reconstruction results to {args.out}")
    if args.figure:
        from .plots import save_distribution_plot

        model = lossy_spats_dist(fit.params, cutoff_hint=len(outputs["probs"]) - 1)
        save_distribution_plot(
            outputs["probs"],
            args.figure,
            truth=model.probs[: len(outputs["probs"])],
            title=f"fit: nbar={fit.params.nbar:.3f}, eta={fit.params.eta:.3f}",
        )


def _analytic_reports(kinds, state, params, k, warns):
    reports = []
    for kind in kinds:
        try:
            value, points = certifier_value(kind, state)
        except ValueError as exc:
            warns.append(f"{kind.value}: {exc}; skipped")
            continue
        reports.append(make_report(kind, value, 0.0, points, params, k))
    return reports


def _model_evaluators(kinds, model, warns):
    """Per-certifier evaluators acting on fitted model distributions.

    Evaluation points are optimized once on the full-data fitted model;
    two-point and single-point values are second-order insensitive to
    point error, so resampled models are re-evaluated at fixed points.
    Kinds undefined for the full-data model are warned about and skipped.
    """
    points = {}
    evaluators = {}
    for kind in kinds:
        if kind is CertifierKind.MULTI_POINT_WIGNER:
            res = optimize_two_point(model)
            a1, a2 = res.points
            points[kind] = (a1, a2)
            evaluators[kind] = lambda m, a1=a1, a2=a2: two_point_value(m, a1, a2)
        elif kind is CertifierKind.WIGNER_VS_Q:
            alpha, _ = optimal_single_point(model, step=0.05)
            points[kind] = (alpha,)
            evaluators[kind] = lambda m, a=alpha: single_point_value(m, a)
        elif kind is CertifierKind.WIGNER_NEGATIVITY:
            alpha, _ = wigner_min(model)
            points[kind] = (alpha,)
            evaluators[kind] = lambda m: wigner_min(m)[1]
        else:
            try:
                mandel_q(model)
            except ValueError as exc:
                warns.append(f"{kind.value}: {exc}; skipped")
                continue
            points[kind] = ()
            evaluators[kind] = mandel_q
    return points, evaluators


def cmd_certify(args) -> None:
    analytic = args.nbar is not None or args.eta is not None
    if args.data and analytic:
        raise UsageError("give either --data or --nbar/--eta, not both")
    if not args.data and not analytic:
        raise UsageError("one of --data or --nbar/--eta is required")
    if analytic and (args.nbar is None or args.eta is None):
        raise UsageError("analytic mode requires both --nbar and --eta")
    kinds = _parse_kinds(args.certifier)
    k = args.confidence_k
    if not (math.isfinite(k) and k >= 0):
        raise UsageError(f"confidence k must be >= 0, got {k}")
    warns: list[str] = []
    outputs: dict = {}

    if analytic:
        params = _check_params(args.nbar, args.eta)
        if args.add_photon:
            state = lossy_spats_dist(params)
        else:
            state = apply_loss(thermal_dist(params.nbar), params.eta)
        reports = _analytic_reports(kinds, state, params, k, warns)
        config = {
            "mode": "analytic",
            "nbar": float(params.nbar),
            "eta": float(params.eta),
            "add_photon": bool(args.add_photon),
            "certifiers": [kind.value for kind in kinds],
            "confidence_k": float(k),
        }
        profile_state = state
    else:
        if args.seed is None:
            raise UsageError("--seed is required with --data")
        if args.resamples < 2:
            raise UsageError(f"resamples must be >= 2, got {args.resamples}")
        if args.cutoff < 4:
            raise UsageError(f"cutoff must be >= 4, got {args.cutoff}")
        if args.bins < 16:
            raise UsageError(f"bins must be >= 16, got {args.bins}")
        ds = read_dataset(args.data)
        result, x_max = _reconstruct(ds, args.cutoff, args.bins)
        # nbar comes from the dataset's nominal metadata (calibrated source
        # setting); only the channel efficiency is re-estimated from data.
        fit = fit_eta(result.state, ds.params.nbar)
        if fit.model_mismatch:
            warns.append(f"model mismatch: fit residual {fit.residual:.4f} exceeds 0.05")
        model = lossy_spats_dist(fit.params)
        points, evaluators = _model_evaluators(kinds, model, warns)
        order = [kind for kind in kinds if kind in evaluators]

        def pipeline(d):
            rec, _ = _reconstruct(d, args.cutoff, args.bins)
            refit = fit_eta(rec.state, ds.params.nbar, init=fit.params.eta)
            m = lossy_spats_dist(refit.params)
            return np.array([evaluators[kind](m) for kind in order])

        boot = bootstrap(ds, pipeline, n_resamples=args.resamples, seed=args.seed)
        values = np.atleast_2d(np.asarray(boot.samples))
        means = np.atleast_1d(boot.value)
        sigmas = np.atleast_1d(boot.sigma)
        reports = [
            make_report(kind, means[i], sigmas[i], points[kind], fit.params, k)
            for i, kind in enumerate(order)
        ]
        outputs["fit"] = {
            "nbar": float(fit.params.nbar),
            "eta": float(fit.params.eta),
            "residual": float(fit.residual),
            "model_mismatch": bool(fit.model_mismatch),
        }
        outputs["bootstrap_samples"] = [
            [float(v) for v in values[:, i]] for i in range(len(order))
        ]
        config = {
            "mode": "dataset",
            "data": str(args.data),
            "certifiers": [kind.value for kind in kinds],
            "confidence_k": float(k),
            "resamples": int(args.resamples),
            "seed": int(args.seed),
            "cutoff": int(args.cutoff),
            "bins": int(args.bins),
        }
        profile_state = result.state

    outputs["reports"] = [
        {
            "kind": rep.kind.value,
            "value": float(rep.value),
            "sigma": float(rep.sigma),
            "detected": bool(rep.detected),
            "confidence_k": float(rep.confidence_k),
            "points": [[float(p.real), float(p.imag)] for p in rep.points],
        }
        for rep in reports
    ]
    _write_results(args.out, "certify", config, outputs, warns)
    for rep in reports:
        print(
            f"{rep.kind.value}: value={rep.value:.6g} sigma={rep.sigma:.6g} "
            f"detected={rep.detected}"
        )
    if args.figure:
        from .plots import save_certificate_plot

        rr = np.linspace(0.0, 4.0, 400)
        w = wigner_diag(profile_state, rr)
        q2 = 2 * math.pi * husimi_diag(profile_state, rr) ** 2
        save_certificate_plot(reports, args.figure, profile=(rr, w, q2))


def cmd_scan(args) -> None:
    if args.steps < 2:
        raise UsageError(f"steps must be >= 2, got {args.steps}")
    nbar_steps = args.nbar_steps if args.nbar_steps is not None else args.steps
    eta_steps = args.eta_steps if args.eta_steps is not None else args.steps
    if nbar_steps < 1 or eta_steps < 1:
        raise UsageError("per-axis step counts must be >= 1")
    if not (0 <= args.nbar_min <= args.nbar_max <= 4):
        raise UsageError("nbar range must satisfy 0 <= min <= max <= 4")
    if not (0 <= args.eta_min <= args.eta_max <= 1):
        raise UsageError("eta range must satisfy 0 <= min <= max <= 1")
    nbars = np.linspace(args.nbar_min, args.nbar_max, nbar_steps)
    etas = np.linspace(args.eta_min, args.eta_max, eta_steps)
    rows = region_scan(nbars, etas)
    write_scan_csv(rows, args.out)
    print(f"wrote {len(rows)} scan rows to {args.out}")
    if args.figure:
        from .plots import save_region_map

        save_region_map(rows, args.figure)


def cmd_threshold(args) -> None:
    try:
        kind = parse_certifier(args.certifier)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not (math.isfinite(args.nbar) and args.nbar >= 0):
        raise UsageError(f"nbar must be >= 0, got {args.nbar}")
    if not (0 < args.tol < 1):
        raise UsageError(f"tol must lie in (0, 1), got {args.tol}")
    res = critical_eta(kind, args.nbar, tol=args.tol)
    if res.status == "threshold":
        print(f"critical eta: {res.eta}")
    else:
        print(f"no-threshold: certifier {res.status}")
    warns = []
    if not res.monotone:
        warns.append("certifier value is not single-crossing over the scanned etas")
        print(f"warning: {warns[0]}", file=sys.stderr)
    if args.out:
        outputs = {
            "eta": None if res.eta is None else float(res.eta),
            "status": res.status,
            "monotone": bool(res.monotone),
            "scan": [[float(e), float(v)] for e, v in res.scan],
        }
        config = {
            "certifier": kind.value,
            "nbar": float(args.nbar),
            "tol": float(args.tol),
        }
        _write_results(args.out, "threshold", config, outputs, warns)
    if args.figure:
        from .plots import save_threshold_plot

        save_threshold_plot(res, args.figure)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spatscert",
        description=(
            "Certify nonclassicality of lossy photon-added thermal states "
            "from phase-space inequalities, on analytic states or simulated "
            "homodyne data."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a phase-randomized homodyne dataset")
    p.add_argument("--nbar", type=float, required=True, help="thermal mean photon number")
    p.add_argument("--eta", type=float, required=True, help="detection efficiency in [0, 1]")
    p.add_argument("--count", type=int, required=True, help="number of quadrature records")
    p.add_argument("--seed", type=int, required=True, help="RNG seed")
    p.add_argument("--out", required=True, help="output dataset path")
    p.add_argument("--figure", help="optional figure path (sample histogram vs pdf)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="maximum-likelihood photon-number distribution")
    p.add_argument("--data", required=True, help="input dataset path")
    p.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF, help="Fock cutoff")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS, help="histogram bins")
    p.add_argument("--out", required=True, help="output results path (JSON)")
    p.add_argument("--figure", help="optional figure path (distribution bars)")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("certify", help="evaluate nonclassicality certifiers")
    p.add_argument("--data", help="dataset path (statistical mode)")
    p.add_argument("--nbar", type=float, help="thermal mean photon number (analytic mode)")
    p.add_argument("--eta", type=float, help="detection efficiency (analytic mode)")
    p.add_argument(
        "--add-photon",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="certify the photon-added state (--no-add-photon for thermal only)",
    )
    p.add_argument(
        "--certifier",
        action="append",
        metavar="NAME",
        help=f"certifier to run (repeatable; default all of: {', '.join(ALL_CERTIFIERS)})",
    )
    p.add_argument("--confidence-k", type=float, default=DETECTION_K,
                   help="sigmas required for detection")
    p.add_argument("--resamples", type=int, default=50, help="bootstrap resamples")
    p.add_argument("--seed", type=int, help="bootstrap seed (required with --data)")
    p.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF, help="Fock cutoff")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS, help="histogram bins")
    p.add_argument("--out", required=True, help="output results path (JSON)")
    p.add_argument("--figure", help="optional figure path (values with error bars)")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("scan", help="map detection regions over the (nbar, eta) plane")
    p.add_argument("--nbar-min", type=float, default=0.0)
    p.add_argument("--nbar-max", type=float, default=4.0)
    p.add_argument("--eta-min", type=float, default=0.0)
    p.add_argument("--eta-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=40, help="grid steps per axis")
    p.add_argument("--nbar-steps", type=int, help="override steps along nbar")
    p.add_argument("--eta-steps", type=int, help="override steps along eta")
    p.add_argument("--out", required=True, help="output table path (CSV)")
    p.add_argument("--figure", help="optional figure path (region map)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("threshold", help="critical efficiency of a certifier")
    p.add_argument("--certifier", required=True, help="certifier name or alias")
    p.add_argument("--nbar", type=float, required=True, help="thermal mean photon number")
    p.add_argument("--tol", type=float, default=1e-3, help="bisection tolerance")
    p.add_argument("--out", help="optional results path (JSON)")
    p.add_argument("--figure", help="optional figure path (value vs eta)")
    p.set_defaults(func=cmd_threshold)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
