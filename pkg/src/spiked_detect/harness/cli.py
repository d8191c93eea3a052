"""Command-line interface.

Exit status: 0 on success, 2 on invalid input (bad flags, malformed files,
parameters outside a formula's domain), 3 when a numerical routine fails.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .. import __version__
from ..errors import DomainError, NumericalError, ValidationError
from ..lss import TestParams, run_test
from ..models import ModelSpec, generate, load_spike, make_rng
from ..noise import estimate_w4, kde_fit, load_samples, noise_from_dict, split_half_w4
from ..transform import TransformSpec, entrywise_transform, pca_detect, resolve_alpha, transformed_pca_detect
from .experiments import ExperimentConfig, run_experiment
from .io import read_json, read_matrix_csv, write_json, write_matrix_csv

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
W4_SPLIT_TOLERANCE = 0.2
DEFAULT_OUT = "spiked_detect_out"


def _emit(doc, out=None):
    # NaN is not valid JSON; unknown quantities are reported as null
    doc = {k: None if isinstance(v, float) and v != v else v for k, v in doc.items()}
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        write_json(out, doc)
    print(text)


def _noise_arg(text, nu=5.0):
    if text in ("gaussian", "bimodal"):
        return noise_from_dict({"kind": text})
    if text == "student_t":
        return noise_from_dict({"kind": "student_t", "params": {"nu": nu}})
    return noise_from_dict(read_json(text))


def _alpha_arg(text):
    if text is None or text in ("score", "sqrt_fisher", "optimal"):
        return text
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"--alpha must be a number or one of score, sqrt_fisher, optimal; got {text!r}")


# -- subcommands -------------------------------------------------------------------


def cmd_generate(args):
    doc = read_json(args.spec) if args.spec else {}
    for key in ("kind", "M", "N", "snr", "noise", "prior_u", "prior_v"):
        val = getattr(args, key)
        if val is not None:
            doc[key] = val
    if args.seed is not None:
        doc["seed"] = args.seed
    if "M" not in doc or "N" not in doc:
        raise ValidationError("the model needs M and N (from --spec or flags)")
    spec = ModelSpec.from_dict(doc)
    u = load_spike(args.spike_file) if args.spike_file else None
    kw = {"u": u} if u is not None and spec.kind != "null" else {}
    data = generate(spec, make_rng(spec.seed), **kw)
    write_matrix_csv(args.out, data.values)
    if args.spike_out and data.planted_u is not None:
        write_matrix_csv(args.spike_out, data.planted_u)
    manifest = {"spec": spec.to_dict(), "tool_version": __version__, "matrix": str(args.out)}
    write_json(Path(args.out).with_suffix(".manifest.json"), manifest)
    print(args.out)
    return EXIT_OK


def cmd_pca(args):
    Y = read_matrix_csv(args.matrix)
    verdict = pca_detect(Y, args.ratio, args.margin, snr=args.snr)
    _emit(verdict.to_dict(), args.out)
    return EXIT_OK


def cmd_transform_pca(args):
    Y = read_matrix_csv(args.matrix)
    noise = _noise_arg(args.noise, args.nu)
    alpha = resolve_alpha(_alpha_arg(args.alpha), noise, snr=args.snr_hint, kind=args.kind)
    spec = TransformSpec(alpha, noise)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        verdict = transformed_pca_detect(Y, spec, args.ratio, args.margin, snr=args.snr_hint, kind=args.kind)
        if args.export:
            write_matrix_csv(args.export, entrywise_transform(Y, spec))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit({**verdict.to_dict(), "alpha": alpha}, args.out)
    return EXIT_OK


def cmd_lss_test(args):
    Y = read_matrix_csv(args.matrix)
    M, N = Y.shape
    d = args.ratio if args.ratio is not None else M / N
    if args.estimate_w4:
        w4 = estimate_w4(Y)
        a, b = split_half_w4(Y)
        if abs(a - b) > W4_SPLIT_TOLERANCE:
            print(
                f"warning: fourth-moment estimates on the two column halves differ ({a:.3f} vs {b:.3f})",
                file=sys.stderr,
            )
    else:
        w4 = args.w4
    result = run_test(Y, TestParams(args.omega, d, w4))
    _emit(result.to_dict(), args.out)
    return EXIT_OK


def _load_config(args, allowed):
    doc = read_json(args.config)
    if args.trials is not None:
        doc["trials"] = args.trials
    if args.seed is not None:
        doc["master_seed"] = args.seed
    if args.out_dir is not None:
        doc["output_dir"] = args.out_dir
    doc.setdefault("output_dir", DEFAULT_OUT)
    if getattr(args, "spike_file", None):
        doc.setdefault("options", {})["spike_file"] = args.spike_file
    cfg = ExperimentConfig.from_dict(doc)
    if cfg.experiment not in allowed:
        raise ValidationError(f"this subcommand runs {' or '.join(allowed)}, config asks for {cfg.experiment}")
    return cfg


def _run_config(args, allowed):
    cfg = _load_config(args, allowed)
    table = run_experiment(cfg, workers=args.threads)
    print(Path(cfg.output_dir) / f"{table.name}.csv")
    return EXIT_OK


def cmd_sweep(args):
    return _run_config(args, ("ErrorSweep", "TransitionSweep"))


def cmd_clt_check(args):
    return _run_config(args, ("CltCheck",))


def cmd_reconstruct(args):
    return _run_config(args, ("Reconstruction",))


def cmd_kde_run(args):
    if args.samples:
        if not args.out:
            raise ValidationError("--samples needs --out for the fitted model")
        model = kde_fit(load_samples(args.samples), args.bandwidth)
        write_json(args.out, model.to_dict())
        print(json.dumps({"fisher": model.fisher, "bandwidth": model.bandwidth, "out": args.out}))
        return EXIT_OK
    if not args.config:
        raise ValidationError("kde-run needs --config or --samples")
    return _run_config(args, ("KdePipeline",))


# -- parser ----------------------------------------------------------------------------


def _experiment_flags(p, config_required=True):
    p.add_argument("--config", required=config_required, help="experiment config (JSON)")
    p.add_argument("--trials", type=int, help="override the trial count")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out-dir", help=f"output directory (default: config value or ./{DEFAULT_OUT})")
    p.add_argument("--threads", type=int, help="worker processes (overrides SPIKED_DETECT_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spiked-detect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a data matrix from a model spec")
    p.add_argument("--spec", help="model spec (JSON)")
    p.add_argument("--kind", choices=["additive", "multiplicative", "null"])
    p.add_argument("--M", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--snr", type=float)
    p.add_argument("--noise", choices=["gaussian", "bimodal", "student_t"])
    p.add_argument("--prior-u", dest="prior_u", choices=["spherical", "rademacher"])
    p.add_argument("--prior-v", dest="prior_v", choices=["spherical", "rademacher"])
    p.add_argument("--seed", type=int)
    p.add_argument("--spike-file", help="fixed spike direction, one number per line")
    p.add_argument("--spike-out", help="also write the planted u")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("pca", help="plain PCA detection")
    p.add_argument("--matrix", required=True)
    p.add_argument("--ratio", type=float)
    p.add_argument("--margin", type=float)
    p.add_argument("--snr", type=float, help="SNR, only used for the predicted outlier")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("transform-pca", help="entrywise score transform followed by PCA")
    p.add_argument("--matrix", required=True)
    p.add_argument("--noise", default="gaussian", help="gaussian, bimodal, student_t, or a fitted model JSON")
    p.add_argument("--nu", type=float, default=5.0, help="degrees of freedom for student_t")
    p.add_argument("--kind", choices=["additive", "multiplicative"], default="additive")
    p.add_argument("--alpha", help="number, score, sqrt_fisher or optimal")
    p.add_argument("--snr-hint", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--margin", type=float)
    p.add_argument("--export", help="write the transformed matrix to this CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_transform_pca)

    p = sub.add_parser("lss-test", help="linear-spectral-statistic test for a weak spike")
    p.add_argument("--matrix", required=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--ratio", type=float)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--w4", type=float)
    g.add_argument("--estimate-w4", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lss_test)

    p = sub.add_parser("sweep", help="error sweep or transition sweep")
    _experiment_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("clt-check", help="moments and normality of the LSS statistic")
    _experiment_flags(p)
    p.set_defaults(func=cmd_clt_check)

    p = sub.add_parser("reconstruct", help="spike recovery, raw vs transformed PCA")
    _experiment_flags(p)
    p.add_argument("--spike-file")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("kde-run", help="fit a KDE noise model or run the KDE pipeline")
    _experiment_flags(p, config_required=False)
    p.add_argument("--samples", help="numeric file to fit")
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--out", help="where to write the fitted model")
    p.set_defaults(func=cmd_kde_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
