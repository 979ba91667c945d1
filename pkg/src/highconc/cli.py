"""``highconc`` command-line interface.

Exit codes: 0 success, 2 input error, 3 numerical degeneracy.
"""

import argparse
import os
import sys

from . import io
from .angular import (RotSymModel, classify_high_concentration, from_name,
                      moments_asymptotic, moments_exact)
from .conditions import check_condition_F, check_condition_FLAN, verify_lemma_constants
from .geometry import as_unit, basis_vector
from .inference import (DegenerateError, confidence_cap_feasible, confidence_cap_oracle,
                        fvml_concentration_mle, location_test, mean_resultant_length,
                        spherical_mean)
from .montecarlo import (ExperimentConfig, run_cap_experiment, run_expansion_verifier,
                         run_lan_experiment, run_power_experiment)
from .rng import SeededStream, default_seed
from .sampling import sample

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 2, 3


def _vector(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got %r" % text)


def _common(parser, model=False, data=False, level=False):
    parser.add_argument("--out", help="write the JSON report here instead of stdout")
    if model:
        parser.add_argument("--p", type=int, default=3)
        parser.add_argument("--kappa", type=float, default=10.0)
        parser.add_argument("--family", default="fvml",
                            help="fvml, powerexp, polynomial or arctan")
        parser.add_argument("--b", type=float, default=None, help="family exponent")
    if data:
        parser.add_argument("input", help="CSV file of observations")
        parser.add_argument("--format", default="cartesian-csv", choices=io.FORMATS)
        parser.add_argument("--decinc-convention", default="math", choices=["math"],
                            help="only the mathematical convention is implemented")
    if level:
        parser.add_argument("--level", type=float, default=0.95)


def build_parser():
    ap = argparse.ArgumentParser(prog="highconc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a sample and write it as CSV")
    _common(p, model=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--theta", type=_vector, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("moments", help="exact and asymptotic moments of x'theta")
    _common(p, model=True)

    p = sub.add_parser("classify", help="does the angular function give high concentration")
    _common(p, model=True)

    p = sub.add_parser("estimate", help="spherical mean, resultant length and FvML kappa")
    _common(p, data=True)

    p = sub.add_parser("cap", help="confidence cap for the location")
    _common(p, data=True, level=True)
    p.add_argument("--kappa-phi", type=float, default=None,
                   help="true kappa*phi_f(kappa); gives the oracle cap")

    p = sub.add_parser("test", help="Watson and Wald tests of theta = theta0")
    _common(p, data=True)
    p.add_argument("--theta0", type=_vector, required=True)
    p.add_argument("--level", type=float, default=0.05, help="test size")

    p = sub.add_parser("analyze", help="full real-data analysis")
    _common(p, data=True, level=True)
    p.add_argument("--theta0", type=_vector, default=None)
    p.add_argument("--loo", action="store_true", help="also run leave-one-out")

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    p.add_argument("kind", choices=["cap", "power", "lan", "expansions"])
    p.add_argument("config", nargs="?", help="ExperimentConfig JSON (optional for expansions)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--full", action="store_true", help="use M = 10000 replicates")
    p.add_argument("--csv", help="plot-ready CSV output path")
    p.add_argument("--out")

    p = sub.add_parser("verify", help="condition checkers and limiting constants")
    _common(p, model=True)
    p.add_argument("--n", type=int, default=1000, help="sample size for the LAN condition")
    return ap


def _angular(args):
    return from_name(args.family, args.b)


def _emit(args, payload, kind):
    text = io.report_json(payload, kind)
    if args.out:
        io.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _load(args):
    return io.ingest(args.input, args.format)


def cmd_sample(args):
    f = _angular(args)
    theta = as_unit(args.theta) if args.theta else basis_vector(args.p, 0)
    if theta.p != args.p:
        raise ValueError("--theta must have p coordinates")
    seed = default_seed(args.seed)
    data = sample(RotSymModel(theta, args.kappa, f), args.n, SeededStream(seed, 0))
    header = "p=%d kappa=%r family=%s seed=%d" % (args.p, args.kappa, f.name, seed)
    if args.out:
        io.write_dataset_csv(args.out, data.rows, header)
    else:
        sys.stdout.write("# %s\n" % header)
        for row in data.rows:
            sys.stdout.write(",".join(repr(float(v)) for v in row) + "\n")


def cmd_moments(args):
    f = _angular(args)
    out = {"p": args.p, "kappa": args.kappa, "family": f.name,
           "exact": vars(moments_exact(args.p, args.kappa, f))}
    try:
        out["asymptotic"] = vars(moments_asymptotic(args.p, args.kappa, f))
    except ValueError as exc:
        out["asymptotic"] = {"error": str(exc)}
    _emit(args, out, "moments")


def cmd_classify(args):
    f = _angular(args)
    _emit(args, {"family": f.name, "high_concentration": classify_high_concentration(f).value,
                 "kappa_phi": f.kappa_phi(args.kappa)}, "classify")


def cmd_estimate(args):
    data = _load(args)
    out = {"n": data.n, "p": data.p, "spherical_mean": spherical_mean(data).tolist(),
           "mean_resultant_length": mean_resultant_length(data),
           "kappa_hat": fvml_concentration_mle(data)}
    _emit(args, out, "estimate")


def cmd_cap(args):
    data = _load(args)
    if args.kappa_phi is not None:
        cap = confidence_cap_oracle(data, args.level, args.kappa_phi)
    else:
        cap = confidence_cap_feasible(data, args.level)
    _emit(args, cap.to_dict(), "cap")


def cmd_test(args):
    data = _load(args)
    res = [location_test(data, args.theta0, args.level, k).to_dict() for k in ("watson", "wald")]
    _emit(args, {"theta0": list(as_unit(args.theta0).coords), "tests": res}, "test")


def cmd_analyze(args):
    data = _load(args)
    prov = {"input": os.path.abspath(args.input), "format": args.format}
    rep = io.analyze(data, (args.level,), args.theta0, prov)
    out = {"analysis": rep.to_dict()}
    if args.loo and rep.error is None:
        out["leave_one_out"] = io.leave_one_out(data, (args.level,)).to_dict()
    _emit(args, out, "analysis")
    if rep.error is not None:
        return EXIT_DEGENERATE


def cmd_experiment(args):
    cfg = None
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
    elif args.kind != "expansions":
        raise ValueError("a config file is required for %s experiments" % args.kind)
    if cfg is not None:
        if args.seed is not None:
            cfg.seed = args.seed
        if args.threads is not None:
            cfg.threads = max(1, args.threads)
        if args.full:
            cfg.M = 10000
    out = args.out or (cfg.out_json if cfg else None)
    csv_path = args.csv or (cfg.out_csv if cfg else None)
    if args.kind == "cap":
        rep = run_cap_experiment(cfg)
        payload = rep.to_dict()
        if csv_path:
            root, ext = os.path.splitext(csv_path)
            for name, hist in rep.histograms.items():
                io.atomic_write("%s_%s%s" % (root, name, ext or ".csv"), io.histogram_csv(hist))
    elif args.kind == "power":
        rep = run_power_experiment(cfg)
        payload = rep.to_dict()
        if csv_path:
            io.atomic_write(csv_path, io.power_csv(rep.rows))
    elif args.kind == "lan":
        payload = run_lan_experiment(cfg).to_dict()
        payload["config"] = cfg.to_dict()
    else:
        payload = run_expansion_verifier()
    text = io.report_json(payload, "experiment-" + args.kind)
    if out:
        io.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def cmd_verify(args):
    f = _angular(args)
    grid = [10.0, 1e2, 1e3, 1e4]
    out = {"family": f.name, "p": args.p,
           "condition_F": check_condition_F(f, args.p, grid).to_dict()}
    try:
        var, rem = check_condition_FLAN(f, args.p, args.kappa, 1.0, args.n)
        out["condition_FLAN"] = {"variance": var.to_dict(), "remainder": rem.to_dict()}
    except (ValueError, ArithmeticError) as exc:
        out["condition_FLAN"] = {"error": str(exc)}
    try:
        out["lemma_constants"] = verify_lemma_constants(args.p, f, kappa_phi_grid=[1e2, 1e3, 1e4]).to_dict()
    except (ValueError, ArithmeticError) as exc:
        out["lemma_constants"] = {"error": str(exc)}
    _emit(args, out, "verify")


COMMANDS = {"sample": cmd_sample, "moments": cmd_moments, "classify": cmd_classify,
            "estimate": cmd_estimate, "cap": cmd_cap, "test": cmd_test,
            "analyze": cmd_analyze, "experiment": cmd_experiment, "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        code = COMMANDS[args.command](args)
    except DegenerateError as exc:
        sys.stderr.write("degenerate: %s\n" % exc)
        return EXIT_DEGENERATE
    except (ValueError, OSError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return EXIT_INPUT
    return EXIT_OK if code is None else code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
