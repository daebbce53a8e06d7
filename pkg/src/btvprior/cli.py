"""Command-line interface.

Subcommands
-----------
fit              fit a skew-symmetric model to a one-column CSV file
prior-density    tabulate a prior density of lambda on a uniform grid
elicit           Beta hyperparameters matching two quantiles of M_TV
sample           draw variates from a skew-symmetric model
density-shapes   density curves at given percentages of relocated mass
study            run a simulation study from a JSON configuration
replay           re-run a command from its manifest

Every command that writes to a file (``-o``) also writes
``<output>.manifest.json`` recording the resolved options, seed, package
version and the SHA-256 of the input file; ``replay`` re-runs it.

Exit codes: 0 success, 2 invalid input or options, 3 improper posterior,
4 sampler initialisation failure, 5 infeasible elicitation targets.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .exceptions import BtvError, DomainError, ElicitationError, InitializationError, ProprietyError
from .inference import summarize
from .mcmc import ChainConfig, PosteriorSpec, check_propriety, run_chain
from .perturbation import m_tv_inverse
from .priors import elicit_beta, parse_prior
from .simstudy import THREADS_ENV, StudyConfig, default_threads, emit_table, run_study
from .skew_symmetric import PRESETS, SkewSymmetricModel, family_from_name

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROPRIETY = 3
EXIT_INIT = 4
EXIT_ELICIT = 5

FIT_SCHEMA = "btvprior.fit/1"
ELICIT_SCHEMA = "btvprior.elicit/1"
MANIFEST_SCHEMA = "btvprior.manifest/1"


class InputError(Exception):
    """Malformed input file or option; maps to exit code 2."""


# -- input --------------------------------------------------------------------


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_dataset(path) -> np.ndarray:
    """Read a UTF-8 CSV file holding one numeric column.

    A first row whose cell is not numeric is taken as a header.  Blank lines
    are skipped.  Errors name the offending line.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    values = []
    first = True
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not cells or all(c == "" for c in cells):
            continue
        if len(cells) != 1:
            raise InputError(f"{path}, line {lineno}: expected one column, found {len(cells)}")
        cell = cells[0]
        if first and not _is_number(cell):
            first = False
            continue
        first = False
        try:
            v = float(cell)
        except ValueError:
            raise InputError(f"{path}, line {lineno}: non-numeric value {cell!r}") from None
        if not math.isfinite(v):
            raise InputError(f"{path}, line {lineno}: non-finite value {cell!r}")
        values.append(v)
    if not values:
        raise InputError(f"{path}: no data values")
    return np.array(values)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _pair(text, what):
    parts = text.split(",")
    if len(parts) != 2 or not all(_is_number(p) for p in parts):
        raise InputError(f"{what} must be two comma-separated numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


# -- output -------------------------------------------------------------------


def _write(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _num(v):
    return repr(float(v))


def build_manifest(command, options, seed=None, input_path=None):
    return {
        "schema": MANIFEST_SCHEMA,
        "command": command,
        "options": options,
        "seed": seed,
        "version": __version__,
        "input_sha256": _sha256(input_path) if input_path else None,
    }


def _write_manifest(manifest, output):
    if output in (None, "-"):
        return
    Path(str(output) + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _options(args, skip=("func", "output", "command")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _family(args):
    if args.family == "skew-t" and args.dof is None:
        raise InputError("the skew-t family needs --dof")
    try:
        return family_from_name(args.family, args.dof)
    except DomainError as exc:
        raise InputError(str(exc)) from None


def _prior(spec, family):
    try:
        return parse_prior(spec, family)
    except DomainError as exc:
        raise InputError(str(exc)) from None


# -- commands -----------------------------------------------------------------


def cmd_fit(args):
    data = read_dataset(args.data)
    family = _family(args)
    prior = _prior(args.prior, family)
    check_propriety(data)
    try:
        config = ChainConfig.for_retained(args.retained, args.burn_in, args.thin, args.seed)
    except DomainError as exc:
        raise InputError(str(exc)) from None
    chain = run_chain(PosteriorSpec(family, data, prior), config)
    report = summarize(chain, prior, args.level, family=str(family))
    doc = {"schema": FIT_SCHEMA, "n": int(data.size), **report.to_dict()}
    _write(json.dumps(doc, indent=2) + "\n", args.output)
    _write_manifest(build_manifest("fit", _options(args), args.seed, args.data), args.output)


def _grid(lo, hi, points):
    if points < 1:
        raise InputError("--points must be >= 1")
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi or (lo == hi and points > 1):
        raise InputError(f"malformed range ({lo}, {hi}); need lo < hi")
    return np.array([lo]) if points == 1 else np.linspace(lo, hi, points)


def cmd_prior_density(args):
    family = _family(args)
    prior = _prior(args.prior, family)
    lo, hi = _pair(args.range, "--range")
    grid = _grid(lo, hi, args.points)
    dens = prior.density(grid)
    lines = ["lambda,density"] + [f"{_num(x)},{_num(d)}" for x, d in zip(grid, np.atleast_1d(dens))]
    _write("\n".join(lines) + "\n", args.output)
    _write_manifest(build_manifest("prior-density", _options(args)), args.output)


def cmd_elicit(args):
    alpha, beta = elicit_beta(args.p_lo, args.q_lo, args.p_hi, args.q_hi)
    achieved = stats.beta(alpha, beta).ppf([args.p_lo, args.p_hi]) - 0.5
    doc = {
        "schema": ELICIT_SCHEMA,
        "alpha": alpha,
        "beta": beta,
        "targets": {"p_lo": args.p_lo, "q_lo": args.q_lo, "p_hi": args.p_hi, "q_hi": args.q_hi},
        "achieved": {"q_lo": float(achieved[0]), "q_hi": float(achieved[1])},
    }
    _write(json.dumps(doc, indent=2) + "\n", args.output)
    _write_manifest(build_manifest("elicit", _options(args)), args.output)


def cmd_sample(args):
    family = _family(args)
    if not args.sigma > 0:
        raise InputError("--sigma must be > 0")
    if args.n < 1:
        raise InputError("-n must be >= 1")
    x = SkewSymmetricModel(family, args.mu, args.sigma, args.lam).sample(args.n, seed=args.seed)
    _write("x\n" + "".join(f"{_num(v)}\n" for v in x), args.output)
    _write_manifest(build_manifest("sample", _options(args), args.seed), args.output)


SHAPE_STEP = 1e-3


def shape_grid(limit, points):
    """Symmetric grid containing 0, dense near 0: ``x = sinh(u)``, u uniform."""
    if points < 3 or points % 2 == 0:
        raise InputError("--points must be odd and >= 3")
    if not limit > 0:
        raise InputError("--limit must be > 0")
    u = np.linspace(-math.asinh(limit), math.asinh(limit), points)
    x = np.sinh(u)
    x[points // 2] = 0.0
    return x


def cmd_density_shapes(args):
    family = _family(args)
    try:
        masses = [float(m) for m in args.masses.split(",")]
    except ValueError:
        raise InputError(f"--masses must be comma-separated numbers, got {args.masses!r}") from None
    if any(not (-100 < m < 100) for m in masses):
        raise InputError("mass percentages must lie in (-100, 100)")
    limit = args.limit if args.limit is not None else _default_limit(family)
    points = args.points
    if points is None:
        points = 2 * math.ceil(math.asinh(limit) / SHAPE_STEP) + 1
    x = shape_grid(limit, points)
    lines = ["mass_percent,lambda,x,density"]
    for m in masses:
        lam = 0.0 if m == 0 else float(m_tv_inverse(family, m / 200.0))
        dens = SkewSymmetricModel(family, 0.0, 1.0, lam).pdf(x)
        lines += [f"{_num(m)},{_num(lam)},{_num(xi)},{_num(d)}" for xi, d in zip(x, dens)]
    _write("\n".join(lines) + "\n", args.output)
    _write_manifest(build_manifest("density-shapes", _options(args)), args.output)


def _default_limit(family):
    if family.name == "skew-normal":
        return 12.0
    if family.name == "skew-t":
        # two-sided tail mass of the base t beyond the limit stays below ~1e-9
        return 10.0 ** (10.0 / family.dof + 1.0)
    return 40.0


_STUDY_KEYS = {
    "family": str,
    "dof": (int, float, type(None)),
    "truth": list,
    "n": int,
    "replications": int,
    "priors": list,
    "retained": int,
    "burn_in": int,
    "thin": int,
    "base_seed": int,
    "level": float,
}
_STUDY_REQUIRED = ("family", "truth", "n", "replications", "priors")


def load_study_config(path, threads=None) -> StudyConfig:
    """Parse a JSON study configuration (see README for the schema)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}, line {exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be an object")
    for key, value in doc.items():
        if key not in _STUDY_KEYS:
            raise InputError(f"{path}: unknown key {key!r}")
        want = _STUDY_KEYS[key]
        if want is float:
            want = (int, float)
        if isinstance(value, bool) or not isinstance(value, want):
            raise InputError(f"{path}: key {key!r} has the wrong type")
    for key in _STUDY_REQUIRED:
        if key not in doc:
            raise InputError(f"{path}: missing key {key!r}")
    try:
        family = family_from_name(doc["family"], doc.get("dof"))
    except DomainError as exc:
        raise InputError(f"{path}: key 'family': {exc}") from None
    if len(doc["truth"]) != 3 or not all(_is_real(v) for v in doc["truth"]):
        raise InputError(f"{path}: key 'truth' must be [mu, sigma, lambda]")
    priors = []
    for spec in doc["priors"]:
        if not isinstance(spec, str):
            raise InputError(f"{path}: key 'priors' must list prior specifications")
        try:
            priors.append(parse_prior(spec, family))
        except DomainError as exc:
            raise InputError(f"{path}: key 'priors': {exc}") from None
    kw = {k: doc[k] for k in ("retained", "burn_in", "thin", "base_seed", "level") if k in doc}
    try:
        return StudyConfig(family, tuple(doc["truth"]), doc["n"], doc["replications"], tuple(priors),
                           threads=threads, **kw)
    except DomainError as exc:
        raise InputError(f"{path}: {exc}") from None


def _is_real(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def cmd_study(args):
    threads = args.threads
    if threads is None:
        try:
            threads = default_threads()
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be a positive integer") from None
    if threads < 1:
        raise InputError("--threads must be >= 1")
    config = load_study_config(args.config, threads)
    report = run_study(config)
    prefix = args.output
    Path(prefix + ".csv").write_text(emit_table(report, "csv"), encoding="utf-8")
    Path(prefix + ".json").write_text(emit_table(report, "json"), encoding="utf-8")
    options = _options(args, skip=("func", "command"))
    options["threads"] = threads
    manifest = build_manifest("study", options, config.base_seed, args.config)
    Path(prefix + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"{report.replications - report.failed} of {report.replications} replications succeeded;"
          f" wrote {prefix}.csv, {prefix}.json")


def cmd_replay(args):
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        command, options = manifest["command"], dict(manifest["options"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read manifest {args.manifest}: {exc}") from None
    if manifest.get("schema") != MANIFEST_SCHEMA or command not in _HANDLERS or command == "replay":
        raise InputError(f"{args.manifest}: not a replayable manifest")
    if args.output is not None or command != "study":
        options["output"] = args.output
    if manifest.get("input_sha256"):
        source = options.get("data") or options.get("config")
        if source is None or _sha256(source) != manifest["input_sha256"]:
            raise InputError(f"input file of {args.manifest} is missing or has changed")
    return _HANDLERS[command](argparse.Namespace(**options))


_HANDLERS = {
    "fit": cmd_fit,
    "prior-density": cmd_prior_density,
    "elicit": cmd_elicit,
    "sample": cmd_sample,
    "density-shapes": cmd_density_shapes,
    "study": cmd_study,
    "replay": cmd_replay,
}


# -- argument parsing ---------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _family_args(p, prior=False):
    p.add_argument("--family", default="skew-normal", choices=PRESETS)
    p.add_argument("--dof", type=float, default=None, help="degrees of freedom (skew-t only)")
    if prior:
        p.add_argument("--prior", default="jeffreys-tv",
                       help="btv:A,B | uniform-tv | jeffreys-tv | btv-exact:A,B | jeffreys | cs13:M,S,L | t:D,S")


def build_parser():
    parser = _Parser(prog="btvprior", description="Total-variation priors for skew-symmetric models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="posterior summary for a data file")
    p.add_argument("data", help="CSV file with one numeric column")
    _family_args(p, prior=True)
    p.add_argument("--retained", type=int, default=10_000)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--thin", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("prior-density", help="prior density of lambda on a grid")
    _family_args(p, prior=True)
    p.add_argument("--range", default="-10,10", help="LO,HI")
    p.add_argument("--points", type=int, default=401)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_prior_density)

    p = sub.add_parser("elicit", help="Beta hyperparameters from two quantiles of M_TV")
    p.add_argument("p_lo", type=float)
    p.add_argument("q_lo", type=float)
    p.add_argument("p_hi", type=float)
    p.add_argument("q_hi", type=float)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_elicit)

    p = sub.add_parser("sample", help="draw variates from a model")
    _family_args(p)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("-n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("density-shapes", help="densities at given percentages of relocated mass")
    _family_args(p)
    p.add_argument("--masses", default="10,25,50,75,90", help="percentages of the maximal relocation")
    p.add_argument("--limit", type=float, default=None, help="grid half-width")
    p.add_argument("--points", type=int, default=None,
                   help="odd grid size (default: spacing 0.001 in asinh(x))")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_density_shapes)

    p = sub.add_parser("study", help="simulation study from a JSON configuration")
    p.add_argument("config")
    p.add_argument("--threads", type=int, default=None, help=f"worker processes (default ${THREADS_ENV} or CPU count)")
    p.add_argument("-o", "--output", default="study", help="output prefix")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    prog = parser.prog
    try:
        args.func(args)
    except InputError as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ProprietyError as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_PROPRIETY
    except InitializationError as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_INIT
    except ElicitationError as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_ELICIT
    except (DomainError, BtvError) as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
