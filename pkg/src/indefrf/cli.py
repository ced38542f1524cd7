"""Command-line entry point: ``indefrf {spectrum,features,bench,classify,sample-diag}``.

Every emitted file carries the resolved configuration (a ``# config=`` line in
CSV files, a ``config`` key in JSON files, PNG metadata for figures). Files are
written to a temporary name and renamed into place. Failures print a single
JSON line on standard error and exit with status 1.
"""

import argparse
import io
import json
import logging
import math
import os
import sys
import tempfile
import warnings

import numpy as np
from scipy import stats

from . import kernels as K
from .bench import (
    BenchConfig,
    benchmark_run,
    curve_csv,
    error_curve,
    reports_csv,
    reports_jsonl,
    scheme_mse,
)
from .data import Dataset, l2_normalize, load_libsvm, minmax_normalize, synthetic_blobs
from .errors import DimensionMismatch, UnsupportedSpectrum
from .features import build_feature_map, map_points
from .linear import train_classifier
from .measures import DEFAULT_RMAX, compute_mass, jordan_split
from .sampling import (
    SCHEMES,
    RngStream,
    chi_square_radial,
    radial_cdf,
    sample_gaussian,
    sample_radius_rejection,
)
from .spectra import SpectrumSpec, decompose_kernel, numeric_spectrum, spectrum_of

log = logging.getLogger("indefrf")

OUT_ENV = "INDEFRF_OUT_DIR"
DEFAULT_DIM = 16


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("UsageError", message)


def _fail(kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message)}) + "\n")
    sys.exit(1)


# ---------------------------------------------------------------- output


def _write_atomic(path, payload):
    """Write ``payload`` (str or bytes) to a sibling temp file, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    data = payload.encode() if isinstance(payload, str) else payload
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.splitext(path)[1])
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_figure(path, draw, *args, **kwargs):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".png")
    os.close(fd)
    try:
        draw(*args, path=tmp, **kwargs)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _config_line(config):
    return "# config=" + json.dumps(_clean(config), sort_keys=True) + "\n"


def _out(args, name):
    return os.path.join(args.out, name)


# ---------------------------------------------------------------- parsing helpers


def _csv_list(text, cast=str):
    items = [t.strip() for t in str(text).split(",") if t.strip()]
    if not items:
        raise CliError(f"empty list {text!r}")
    return [cast(t) for t in items]


def resolve_s(text, d):
    """Resolve ``"2d,8d,64"`` against the input dimension ``d``."""
    out = []
    for tok in _csv_list(text):
        try:
            val = int(tok[:-1] or 1) * d if tok.endswith("d") else int(tok)
        except ValueError:
            raise CliError(f"bad --s entry {tok!r}") from None
        if val < 1:
            raise CliError(f"--s entry {tok!r} resolves to {val}")
        out.append(val)
    return out


def _schemes(text):
    schemes = _csv_list(text)
    for s in schemes:
        if s not in SCHEMES:
            raise CliError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
    return schemes


def kernel_specs(args, d):
    """One kernel per requested order (``--p`` may be a comma list)."""
    fam = args.kernel
    if fam == K.GAUSSIAN:
        return [K.KernelSpec.gaussian(args.tau, d)]
    if fam == K.DELTA_GAUSSIAN:
        return [K.KernelSpec.delta_gaussian(args.tau1, args.tau2, d)]
    if fam == K.SPHERICAL_POLYNOMIAL:
        return [K.KernelSpec.spherical_polynomial(args.a, p, d) for p in _csv_list(args.p, int)]
    return [K.KernelSpec(fam, d)]


def _single_kernel(args, d):
    specs = kernel_specs(args, d)
    if len(specs) != 1:
        raise CliError("this command takes a single --p value")
    return specs[0]


def _synthetic(text, d, seed):
    """``N`` or ``n=N,classes=C,spread=S``."""
    opts = {"n": 300, "classes": 2, "spread": 0.35}
    for tok in _csv_list(text):
        if "=" in tok:
            k, v = tok.split("=", 1)
            if k not in opts:
                raise CliError(f"unknown synthetic option {k!r}")
            opts[k] = float(v) if k == "spread" else int(v)
        else:
            opts["n"] = int(tok)
    return synthetic_blobs(opts["n"], d, opts["classes"], opts["spread"],
                           RngStream(seed).child("synthetic"))


def _prepare(data, d, args, spherical):
    if data.d == 0 and data.n == 0:
        data = Dataset(np.zeros((0, d)), np.zeros(0, dtype=int), data.normalized)
    if data.d < d:
        # sparse files may omit trailing all-zero columns
        data = Dataset(np.pad(data.rows, ((0, 0), (0, d - data.d))), data.labels, data.normalized)
    elif data.d > d:
        raise DimensionMismatch(f"dataset has {data.d} columns but --dim is {d}")
    if data.n == 0:
        return data
    if args.normalize == "l2":
        data = l2_normalize(data)
    elif args.normalize == "minmax":
        data = minmax_normalize(data)
    if spherical:
        K.check_unit_rows(data.rows)
    return data


def load_data(args, path=None, dim=None):
    """Dataset from ``--data`` (or ``path``) or ``--synthetic``; returns (data, d)."""
    path = path or args.data
    if path:
        data = load_libsvm(path)
        d = dim or args.dim or data.d
        if d == 0:
            raise CliError("empty dataset: pass --dim to fix the input dimension")
    elif args.synthetic:
        d = args.dim or DEFAULT_DIM
        data = _synthetic(args.synthetic, d, args.seed)
    else:
        raise CliError("one of --data or --synthetic is required")
    spherical = args.kernel in K.SPHERICAL_FAMILIES
    return _prepare(data, d, args, spherical), d


def _decompose(kernel, args):
    return decompose_kernel(kernel, args.rmax, sampling_radius=args.subinterval)


def _base_config(args, **extra):
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out", "verbose")}
    cfg.update(extra)
    return cfg


# ---------------------------------------------------------------- commands


def cmd_spectrum(args):
    d = args.dim or DEFAULT_DIM
    kernel = _single_kernel(args, d)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if kernel.family == K.NTK or args.numeric:
            mu = numeric_spectrum(kernel, args.rmax)
        else:
            try:
                mu = spectrum_of(SpectrumSpec(kernel, 1, args.rmax))
            except UnsupportedSpectrum as exc:
                raise UnsupportedSpectrum(f"{exc}; rerun with --numeric") from None
        if kernel.family in (K.GAUSSIAN, K.DELTA_GAUSSIAN):
            dec = decompose_kernel(kernel, args.rmax)
        else:
            dec = jordan_split(mu)
        signed = compute_mass(mu, signed=True).value
    grid = np.linspace(0.0, args.rmax, args.points)
    dens = mu(grid)
    sign = np.sign(dens).astype(int)
    config = _base_config(args, kernel=kernel.to_dict(), dim=d)
    summary = {
        "config": config,
        "kernel": kernel.describe(),
        "provenance": mu.provenance,
        "mass_plus": dec.mass_plus,
        "mass_minus": dec.mass_minus,
        "total_mass": dec.total_mass,
        "signed_mass": signed,
        "calibration_constant": mu.meta.get("kappa", 1.0),
        "tail_bound": mu.tail_bound(),
        "tail_finite": math.isfinite(mu.tail_bound()),
        "negative_points": int(np.sum(sign < 0)),
        "warnings": sorted({str(w.message) for w in caught}),
    }
    buf = io.StringIO()
    buf.write(_config_line(config))
    buf.write("omega,density,sign\n")
    for w, v, sg in zip(grid, dens, sign):
        buf.write(f"{w:.10g},{v:.17g},{sg}\n")
    _write_atomic(_out(args, "spectrum.csv"), buf.getvalue())
    _write_atomic(_out(args, "spectrum.json"), _json(summary))
    if not args.no_plot:
        from .plotting import plot_spectrum

        _write_figure(_out(args, "spectrum.png"), plot_spectrum, grid, dens,
                      title=kernel.describe(), config=_clean(config))
    print(_json({k: v for k, v in summary.items() if k != "config"}), end="")
    return 0


def cmd_features(args):
    data, d = load_data(args)
    kernel = _single_kernel(args, d)
    s = resolve_s(args.s, d)[0]
    scheme = _schemes(args.scheme)[0]
    dec = _decompose(kernel, args)
    model = build_feature_map(dec, s, scheme, RngStream(args.seed).child("features"),
                              args.surrogate_tau)
    feats = map_points(model, data)
    config = _base_config(args, kernel=kernel.to_dict(), dim=d, s_resolved=s)
    name = "features." + args.format
    if args.format == "bin":
        payload = feats.to_bytes()
    else:
        payload = _config_line(config) + feats.to_csv()
    _write_atomic(_out(args, name), payload)
    sidecar = {
        "config": config,
        "kernel": kernel.describe(),
        "s": s,
        "scheme": scheme,
        "seed": args.seed,
        "n": feats.n,
        "feature_dim": model.feature_dim,
        "scale_plus": model.scale_plus,
        "scale_minus": model.scale_minus,
        "file": name,
    }
    _write_atomic(_out(args, "features.json"), _json(sidecar))
    print(json.dumps({"file": name, "n": feats.n, "feature_dim": model.feature_dim}))
    return 0


def cmd_bench(args):
    data, d = load_data(args)
    test = None
    if args.test:
        test, _ = load_data(args, args.test, d)
    s_values = resolve_s(args.s, d)
    schemes = _schemes(args.scheme)
    reports = []
    for kernel in kernel_specs(args, d):
        cfg = BenchConfig(kernel, data, s_values, schemes, args.trials, args.seed,
                          args.subsample, test, args.classify, args.rmax, args.surrogate_tau,
                          args.jobs, args.epochs)
        reports += benchmark_run(cfg, _decompose(kernel, args))
    config = _base_config(args, dim=d, n=data.n, s_resolved=s_values,
                          kernels=[k.to_dict() for k in kernel_specs(args, d)])
    curve = error_curve(reports)
    failures = [r for r in reports if r.error is not None]
    summary = {
        "config": config,
        "rows": len(reports),
        "failed_cells": len(failures),
        "scheme_mse": scheme_mse(reports),
        "curve": curve,
    }
    _write_atomic(_out(args, "bench_reports.csv"), reports_csv(reports, _clean(config)))
    _write_atomic(_out(args, "bench_reports.jsonl"), reports_jsonl(reports, _clean(config)))
    _write_atomic(_out(args, "bench_curve.csv"), curve_csv(curve, _clean(config)))
    _write_atomic(_out(args, "bench_summary.json"), _json(summary))
    if not args.no_plot and curve:
        from .plotting import plot_error_curve

        _write_figure(_out(args, "bench_curve.png"), plot_error_curve, curve,
                      config=_clean(config))
    print(json.dumps(_clean({"rows": len(reports), "failed_cells": len(failures),
                             "scheme_mse": summary["scheme_mse"]}), sort_keys=True))
    return 1 if failures else 0


def cmd_classify(args):
    data, d = load_data(args)
    if args.test:
        train, (test, _) = data, load_data(args, args.test, d)
    else:
        perm = RngStream(args.seed).child("split").generator().permutation(data.n)
        half = data.n // 2
        train, test = data.subset(np.sort(perm[:half])), data.subset(np.sort(perm[half:]))
    kernel = _single_kernel(args, d)
    s = resolve_s(args.s, d)[0]
    scheme = _schemes(args.scheme)[0]
    stream = RngStream(args.seed)
    model = build_feature_map(_decompose(kernel, args), s, scheme, stream.child("features"),
                              args.surrogate_tau)
    clf = train_classifier(map_points(model, train), train.labels, args.reg, args.epochs,
                           stream.child("classifier"))
    acc = clf.accuracy(map_points(model, test), test.labels)
    result = {
        "config": _base_config(args, kernel=kernel.to_dict(), dim=d, s_resolved=s),
        "kernel": kernel.describe(),
        "train_size": train.n,
        "test_size": test.n,
        "test_accuracy": acc,
        "C": getattr(clf, "C", None),
    }
    _write_atomic(_out(args, "classify.json"), _json(result))
    print(json.dumps(_clean({"test_accuracy": acc, "C": result["C"]})))
    return 0


def _diagnose(component, mass, s, stream):
    if mass == 0:
        return None
    if component.gaussian_tau is not None:
        radii = np.linalg.norm(
            sample_gaussian(component.gaussian_tau, component.ambient_dim, s, stream), axis=1)
        component = component.with_support(max(component.support_radius, radii.max()))
        rate, envelope, breaches = 1.0, None, 0
    else:
        draw = sample_radius_rejection(component, s, stream)
        radii, rate, envelope, breaches = draw
    chi2, p_chi2 = chi_square_radial(component, radii)
    grid, cdf = radial_cdf(component)
    ks = stats.kstest(radii, lambda r: np.interp(r, grid, cdf))
    return radii, {
        "mass": mass,
        "acceptance_rate": rate,
        "envelope": envelope,
        "envelope_breaches": breaches,
        "chi2": chi2,
        "chi2_pvalue": p_chi2,
        "ks_statistic": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "mean_radius": float(radii.mean()),
    }


def cmd_sample_diag(args):
    d = args.dim or DEFAULT_DIM
    kernel = _single_kernel(args, d)
    s = resolve_s(args.s, d)[0]
    dec = _decompose(kernel, args)
    config = _base_config(args, kernel=kernel.to_dict(), dim=d, s_resolved=s)
    stream = RngStream(args.seed).child("sample-diag")
    result = {"config": config, "kernel": kernel.describe()}
    buf = io.StringIO()
    buf.write(_config_line(config))
    buf.write("component,radius\n")
    for name, comp, mass in (("plus", dec.mu_plus, dec.mass_plus),
                             ("minus", dec.mu_minus, dec.mass_minus)):
        out = _diagnose(comp, mass, s, stream.child(name))
        result[name] = None if out is None else out[1]
        if out is not None:
            for r in out[0]:
                buf.write(f"{name},{r:.17g}\n")
    _write_atomic(_out(args, "sample_diag.json"), _json(result))
    _write_atomic(_out(args, "sample_radii.csv"), buf.getvalue())
    print(json.dumps(_clean({k: result[k] for k in ("plus", "minus")}), sort_keys=True))
    return 0


# ---------------------------------------------------------------- parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = common.add_argument_group("kernel")
    g.add_argument("--kernel", choices=K.FAMILIES, default=K.GAUSSIAN)
    g.add_argument("--tau", type=float, default=1.0, help="Gaussian bandwidth")
    g.add_argument("--tau1", type=float, default=1.0)
    g.add_argument("--tau2", type=float, default=10.0)
    g.add_argument("--a", type=float, default=2.0, help="spherical polynomial scale")
    g.add_argument("--p", default="2", help="polynomial order; comma list sweeps orders in bench")
    g.add_argument("--dim", type=int, default=None, help="input dimension")
    g.add_argument("--rmax", type=float, default=DEFAULT_RMAX, help="spectral truncation radius")
    g.add_argument("--subinterval", type=float, default=None,
                   help="sample frequencies only on (0, SUBINTERVAL] after calibration at --rmax")
    d = common.add_argument_group("data and sampling")
    d.add_argument("--data", help="LIBSVM file")
    d.add_argument("--synthetic", help="N or n=N,classes=C,spread=S blobs on the sphere")
    d.add_argument("--normalize", choices=("l2", "minmax", "none"), default="l2")
    d.add_argument("--s", default="8d", help="feature counts, e.g. 2d,8d,32d or 64")
    d.add_argument("--scheme", default="mc", help="mc, omc or importance (comma list in bench)")
    d.add_argument("--surrogate-tau", type=float, default=None,
                   help="Gaussian surrogate scale for importance sampling")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default=os.environ.get(OUT_ENV, "."),
                   help=f"output directory (default ${OUT_ENV} or .)")
    d.add_argument("--no-plot", action="store_true", help="skip PNG figures")
    d.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="indefrf", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", parents=[common], allow_abbrev=False,
                       help="tabulate the signed spectral density")
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--numeric", action="store_true", help="use the numeric forward transform")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("features", parents=[common], allow_abbrev=False,
                       help="map a dataset to 4s random features")
    p.add_argument("--format", choices=("csv", "bin"), default="csv")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("bench", parents=[common], allow_abbrev=False,
                       help="Gram-matrix error benchmark")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--subsample", type=int, default=300)
    p.add_argument("--classify", action="store_true", help="also report test accuracy")
    p.add_argument("--test", help="LIBSVM test file for --classify")
    p.add_argument("--epochs", type=int, default=20)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("classify", parents=[common], allow_abbrev=False,
                       help="linear SVM on random features")
    p.add_argument("--test", help="LIBSVM test file (default: 50/50 split)")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--reg", type=float, default=None, help="fixed C (default: 5-fold CV)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sample-diag", parents=[common], allow_abbrev=False,
                       help="radial sampler diagnostics")
    p.set_defaults(func=cmd_sample_diag)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # one machine-readable line, never a traceback
        log.debug("command failed", exc_info=True)
        _fail(type(exc).__name__, exc)


if __name__ == "__main__":
    sys.exit(main())
