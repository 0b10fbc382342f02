"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or numerical error. Messages go
to standard error; data goes to files or standard output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import LAYOUTS, ROWS_ARE_SAMPLES, DataError, load_csv, save_csv, scale, synth_circles, synth_features, synth_helix
from .diffmaps import spectrum
from .isde import DivergenceError
from .manifolds import parse_reference
from .normalize import fit_pca, normalize
from .reduction import select_m
from .sampler import PipelineError, PipelineOptions, concentration_stats, epsilon_hint, generate, manifest, marginal_pdf

log = logging.getLogger("manifold_sampler")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


FMT = argparse.ArgumentDefaultsHelpFormatter


def _common(p, epsilon=False, data=True):
    if data:
        p.add_argument("--input", help="input CSV (comma-delimited, optional header line)")
        p.add_argument("--layout", choices=LAYOUTS, default=ROWS_ARE_SAMPLES, help="orientation of the input CSV")
        p.add_argument("--scale", action=argparse.BooleanOptionalAction, default=False,
                       help="min-max scale features first; needed when features have unrelated units")
        p.add_argument("--eps-s", type=float, default=1e-9, help="offset added after scaling so no value is 0")
        p.add_argument("--rank-tol", type=float, default=1e-12,
                       help="relative cutoff under which covariance eigenvalues are dropped")
    if epsilon:
        p.add_argument("--epsilon", type=float, default=None,
                       help="diffusion-kernel smoothing parameter; required, no selection rule exists "
                            "(use `diagnose` for a heuristic starting value)")
    p.add_argument("--config", help="JSON file of option values; command-line flags win")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the column-parallel force")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="manifold-sampler", description=__doc__.splitlines()[0], formatter_class=FMT)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic data set", formatter_class=FMT)
    p.add_argument("kind", choices=["circles", "helix", "features"])
    p.add_argument("--n-samples", type=int, default=None, help="N (defaults: circles 230, helix 400, features 2000)")
    p.add_argument("--noise", type=float, default=0.02, help="noise standard deviation (small fluctuation case)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--output", default="-", help="output CSV ('-' for stdout)")
    _common(p, data=False)

    p = sub.add_parser("scale", help="min-max scale a data set", formatter_class=FMT)
    _common(p)
    p.add_argument("--output", default="-", help="scaled CSV ('-' for stdout)")
    p.add_argument("--map-output", help="ScalingMap JSON")

    p = sub.add_parser("normalize", help="PCA-normalize a data set", formatter_class=FMT)
    _common(p)
    p.add_argument("--output", default="-", help="normalized CSV, one sample per row ('-' for stdout)")
    p.add_argument("--model-output", help="PcaModel JSON")

    p = sub.add_parser("spectrum", help="eigenvalues of the transition matrix", formatter_class=FMT)
    _common(p, epsilon=True)
    p.add_argument("--m-max", type=int, default=50, help="number of leading eigenvalues")
    p.add_argument("--output", default="-", help="CSV (index,eigenvalue); '-' for stdout")

    p = sub.add_parser("select-m", help="smallest basis size meeting the covariance criterion", formatter_class=FMT)
    _common(p, epsilon=True)
    p.add_argument("--kappa", type=int, default=1, help="diffusion time scale; does not change the samples")
    p.add_argument("--tol", type=float, default=1e-3, help="acceptance threshold for e_red(m)")
    p.add_argument("--m-max", type=int, default=None, help="largest m tried (default min(N, 200))")
    p.add_argument("--output", help="CSV curve (m,e_red)")

    p = sub.add_parser("sample", help="generate new realizations", formatter_class=FMT)
    _common(p, epsilon=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--reduced", dest="reduced", action="store_true", default=True,
                      help="reduced-order system projected on the diffusion basis (keeps samples on the manifold)")
    mode.add_argument("--full", dest="reduced", action="store_false", help="full-order system (baseline)")
    p.add_argument("--kappa", type=int, default=1, help="diffusion time scale; does not change the samples")
    p.add_argument("--m", type=int, default=None, help="basis size; omitted means select it with --tol")
    p.add_argument("--tol", type=float, default=1e-3, help="e_red threshold when selecting m")
    p.add_argument("--m-max", type=int, default=None, help="largest m tried when selecting")
    p.add_argument("--f0", type=float, default=1.5, help="damping; 1.5 kills transients quickly")
    p.add_argument("--fac", type=float, default=20.0, help="oversampling factor: step = 2 pi s_hat / fac")
    p.add_argument("--delta-r", type=float, default=None, help="explicit step, overrides --fac")
    p.add_argument("--m0", type=int, default=110, help="steps between retained samples (raised to the decay bound)")
    p.add_argument("--nmc", type=int, default=1, help="number of retained matrices, each of N samples")
    p.add_argument("--seed", type=int, default=0, help="noise stream seed")
    p.add_argument("--allow-short-m0", action="store_true", help="keep an M0 below the decay bound (warn only)")
    p.add_argument("--output", default="-", help="generated samples CSV ('-' for stdout)")
    p.add_argument("--output-layout", choices=LAYOUTS, default=ROWS_ARE_SAMPLES, help="orientation of the output CSV")
    p.add_argument("--report", help="report JSON (default <output>.report.json)")
    p.add_argument("--manifest", help="run manifest JSON (default <output>.manifest.json)")

    p = sub.add_parser("diagnose", help="data summary, or compare generated samples with data", formatter_class=FMT)
    _common(p)
    p.add_argument("--generated", help="generated samples CSV (same layout as --input)")
    p.add_argument("--reference", help="'circles', 'helix' or a manifold JSON file for exact distances")
    p.add_argument("--marginals", help="CSV of 1-D marginal densities (given vs generated)")
    p.add_argument("--component", type=int, default=0, help="component for --marginals")
    p.add_argument("--grid", type=int, default=200, help="grid points for --marginals")
    p.add_argument("--output", default="-", help="JSON result ('-' for stdout)")
    return parser


def _resolve(parser, argv):
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required (see --help)")
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_matrix(path, values, layout=ROWS_ARE_SAMPLES, header=None):
    if path in (None, "-"):
        table = values.T if layout == ROWS_ARE_SAMPLES else values
        if header:
            sys.stdout.write(",".join(header) + "\n")
        for row in np.atleast_2d(table):
            sys.stdout.write(",".join(f"{v:.17g}" for v in row) + "\n")
    else:
        save_csv(path, values, layout, header)


def _load(args):
    if not args.input:
        raise UsageError("--input is required")
    x = load_csv(args.input, args.layout)
    return x


def _prepared(args):
    x = _load(args)
    data = scale(x, args.eps_s)[0] if args.scale else x
    pca = fit_pca(data, args.rank_tol)
    return x, data, pca, normalize(data, pca)


def _need_epsilon(args):
    if args.epsilon is None:
        raise UsageError("--epsilon is required (flag or config file)")


def cmd_synth(args):
    if args.kind == "circles":
        x = synth_circles(args.n_samples or 230, noise_sigma=args.noise, seed=args.seed)
    elif args.kind == "helix":
        x = synth_helix(args.n_samples or 400, noise_sigma=args.noise, seed=args.seed)
    else:
        x = synth_features(args.n_samples or 2000, noise_sigma=args.noise, seed=args.seed)
    _write_matrix(args.output, x.values)


def cmd_scale(args):
    x = _load(args)
    scaled, smap = scale(x, args.eps_s)
    _write_matrix(args.output, scaled.values)
    if args.map_output:
        smap.save(args.map_output)


def cmd_normalize(args):
    _, _, pca, eta = _prepared(args)
    _write_matrix(args.output, eta.eta)
    if args.model_output:
        pca.save(args.model_output)
    log.info("nu = %d", pca.nu)


def cmd_spectrum(args):
    _need_epsilon(args)
    _, _, _, eta = _prepared(args)
    lam = spectrum(eta, args.epsilon, min(args.m_max, eta.N))
    rows = np.vstack([np.arange(1, lam.size + 1), lam])
    _write_matrix(args.output, rows, header=["index", "eigenvalue"])


def cmd_select_m(args):
    _need_epsilon(args)
    _, data, pca, eta = _prepared(args)
    m_max = args.m_max or min(eta.N, 200)
    diag = select_m(data, pca, eta, args.epsilon, args.kappa, args.tol, m_max)
    if args.output:
        save_csv(args.output, np.vstack([diag.m_values, diag.e_red]), header=["m", "e_red"])
    print(f"m={diag.m_selected if diag.m_selected is not None else 'none'}")
    print(f"gap_m={diag.gap_m}")
    if diag.m_selected is None:
        raise DataError(f"no m <= {m_max} reaches e_red <= {args.tol}")


def cmd_sample(args):
    _need_epsilon(args)
    x = _load(args)
    options = PipelineOptions(
        epsilon=args.epsilon, kappa=args.kappa, m=args.m, tol=args.tol, m_max=args.m_max,
        reduced=args.reduced, scale=args.scale, eps_s=args.eps_s, rank_tol=args.rank_tol,
        f0=args.f0, fac=args.fac, delta_r=args.delta_r, m0=args.m0, n_mc=args.nmc, seed=args.seed,
        enforce_m0_bound=not args.allow_short_m0, workers=args.threads,
    )

    def progress(done, total):
        log.info("retained %d/%d", done, total)

    generated, report = generate(x, options, progress=progress)
    _write_matrix(args.output, generated, args.output_layout)
    stem = None if args.output == "-" else args.output
    report_path = args.report or (stem and stem + ".report.json")
    manifest_path = args.manifest or (stem and stem + ".manifest.json")
    if report_path:
        report.save(report_path)
    if manifest_path:
        Path(manifest_path).write_text(json.dumps(manifest(options, args.input), indent=2))
    log.info("generated %d samples (m=%s, nu=%d)", report.n_generated, report.m_selected, report.nu)


def cmd_diagnose(args):
    x, _, pca, eta = _prepared(args)
    out = {"n": x.n, "N": x.N, "nu": pca.nu, "epsilon_hint_median_sq_distance": epsilon_hint(eta)}
    if args.generated:
        gen = load_csv(args.generated, args.layout)
        ref = parse_reference(args.reference) if args.reference else None
        out["concentration"] = concentration_stats(x, gen, ref)
        if args.marginals:
            v = np.concatenate([x.values[args.component], gen.values[args.component]])
            pad = 0.1 * (v.max() - v.min())
            grid = (v.min() - pad, v.max() + pad, args.grid)
            t, given = marginal_pdf(x, args.component, grid)
            _, generated = marginal_pdf(gen, args.component, grid)
            save_csv(args.marginals, np.vstack([t, given, generated]), header=["x", "given", "generated"])
            out["marginal_sup_gap"] = float(np.max(np.abs(given - generated)))
    _write_text(args.output, json.dumps(out, indent=2) + "\n")


COMMANDS = {
    "synth": cmd_synth,
    "scale": cmd_scale,
    "normalize": cmd_normalize,
    "spectrum": cmd_spectrum,
    "select-m": cmd_select_m,
    "sample": cmd_sample,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _resolve(parser, argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                            format="%(levelname)s %(message)s", stream=sys.stderr)
        resolved = {k: v for k, v in vars(args).items() if k != "config"}
        print(json.dumps({"resolved_config": resolved}, default=str), file=sys.stderr)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, PipelineError, DivergenceError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
