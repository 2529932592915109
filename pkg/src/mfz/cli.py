"""mfz command line: JSON for scalar reports, CSV (x,value,direction) for curves."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

from . import kernels
from .errors import BudgetExceeded, MfzError
from .system import DEFAULT_MAX_ATOMS, DigitSystem, system_from_spec

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(args) -> DigitSystem:
    if not args.config:
        raise UsageError("--config is required")
    try:
        with open(args.config) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise UsageError(f"--config: cannot read {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: invalid JSON ({exc})") from None
    return system_from_spec(spec)


def _need_k(args, minimum: int = 1) -> int:
    if args.k is None:
        raise UsageError("--k is required")
    if args.k < minimum:
        raise UsageError(f"--k must be >= {minimum}, got {args.k}")
    return args.k


def _need_b(args) -> int:
    if args.b is None:
        raise UsageError("--b: barrier digit required")
    return args.b


def _guard_atoms(sys_: DigitSystem, k: int, args) -> None:
    n = sys_.n_atoms(k)
    if n > args.max_atoms:
        raise BudgetExceeded(f"level {k} has {n} atoms > --max-atoms {args.max_atoms}")


def _emit(text: str, args) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj, args) -> None:
    _emit(json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n", args)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if hasattr(x, "tolist"):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _csv(rows, header, args) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    _emit(buf.getvalue(), args)


def _grid(args):
    from .spectra import q_grid

    return q_grid(args.q_min, args.q_max, args.q_step)


# -- commands ---------------------------------------------------------------

def cmd_describe(args) -> None:
    from .dims import alpha_bar, dim_at_xi, formalism_holds, isolated_top
    from .system import barrier_digits

    s = _load(args)
    _json({"d": s.d, "m": s.m, "p": list(s.p), "delta": s.delta, "xi": str(s.xi),
           "xi_float": float(s.xi), "theta": s.theta, "a": s.a,
           "barrier_digits": barrier_digits(s), "formalism_holds": formalism_holds(s),
           "isolated_top": isolated_top(s),
           "alpha_bar": {"value": alpha_bar(s), "direction": "exact"},
           "dim_at_xi": {"value": dim_at_xi(s), "direction": "exact"},
           "backend": kernels.BACKEND}, args)


def cmd_atoms(args) -> None:
    from .atoms import atom_masses, entropy_sum

    s = _load(args)
    k = _need_k(args)
    lvl = atom_masses(s, k, args.max_atoms)
    if args.dump == "csv":
        _csv(enumerate(lvl.log_mass.tolist()), ["j", "mass_log"], args)
        return
    _json({"k": k, "n_atoms": lvl.n_atoms, "min_log_mass": float(lvl.log_mass.min()),
           "max_log_mass": float(lvl.log_mass.max()),
           "entropy_sum": {"value": entropy_sum(s, k, args.max_atoms), "direction": "upper"}}, args)


def cmd_barrier(args) -> None:
    from .system import find_barrier

    s = _load(args)
    level, atoms = find_barrier(s, args.max_level)
    _json({"level": level, "atoms": atoms, "iterate": {"k": level, "d": s.d**level}}, args)


def cmd_iterate(args) -> None:
    from .system import iterate

    s = _load(args)
    it = iterate(s, _need_k(args), args.max_atoms)
    _json(it.to_spec(), args)


def cmd_bounds(args) -> None:
    from .matrices import jsr_bounds, restricted_min_bounds

    s = _load(args)
    k = _need_k(args)
    if args.restricted:
        br = restricted_min_bounds(s, k, threads=args.threads, max_words=args.max_words)
    else:
        br = jsr_bounds(s, k, prune=args.prune, threads=args.threads, max_words=args.max_words)
    # delta < 0 reverses the radius bracket
    dim = {"lower": s.delta * br.meta["log_upper"], "upper": s.delta * br.meta["log_lower"]}
    _json({"lower": br.lower, "upper": br.upper, "k": k, "norm": br.meta["norm"],
           "restricted": bool(args.restricted), "dimension": dim, "method": br.meta["method"]}, args)


def cmd_dims(args) -> None:
    from .dims import report

    s = _load(args)
    k = _need_k(args)
    _guard_atoms(s, k, args)
    rep = report(s, k, mode=_mode(args), samples=args.samples, seed=args.seed, threads=args.threads)
    _json(rep.to_dict(), args)


def _mode(args) -> str:
    mode = {"mc": "montecarlo"}.get(args.mode, args.mode)
    if mode == "montecarlo" and args.seed is None:
        raise UsageError("--seed is required with --mode mc")
    return mode


def cmd_gamma(args) -> None:
    from .dims import gamma_bracket

    s = _load(args)
    k = _need_k(args)
    ke = args.k_entropy or k
    _guard_atoms(s, ke, args)
    br = gamma_bracket(s, ke, k, _mode(args), args.samples, args.seed, args.threads)
    _json(br.to_dict(), args)


def cmd_tau(args) -> None:
    from .spectra import tau_curve

    s = _load(args)
    k = _need_k(args)
    _guard_atoms(s, k, args)
    _csv(tau_curve(s, k, _grid(args)).rows(), ["x", "value", "direction"], args)


def cmd_tau_hat(args) -> None:
    from .spectra import tau_hat_curve

    s = _load(args)
    b = _need_b(args)
    k = _need_k(args, 2)
    _guard_atoms(s, k - 1, args)
    _csv(tau_hat_curve(s, b, k, _grid(args)).rows(), ["x", "value", "direction"], args)


def cmd_fh(args) -> None:
    from .spectra import multifractal_spectrum

    s = _load(args)
    b = _need_b(args)
    k = _need_k(args, 2)
    _guard_atoms(s, k - 1, args)
    spec = multifractal_spectrum(s, b, k, _grid(args))
    rows = ((x, v, "approx" if t else "untrusted")
            for (x, v, _), t in zip(spec.curve.rows(), spec.trusted))
    _csv(rows, ["x", "value", "direction"], args)


def cmd_dim_range(args) -> None:
    from .spectra import dim_range_inner

    s = _load(args)
    b = _need_b(args)
    k = _need_k(args, 2)
    _guard_atoms(s, k - 1, args)
    r = dim_range_inner(s, b, k)
    _json({"lo": r.lo, "hi": r.hi, "beta_k": r.beta_k, "k": k, "b": b,
           "direction": "inner (contained in the set of attained dimensions)"}, args)


def cmd_periodic(args) -> None:
    from .dims import periodic_dim

    s = _load(args)
    if not args.word:
        raise UsageError("--word is required (comma-separated digits)")
    try:
        word = [int(c) for c in args.word.split(",")]
    except ValueError:
        raise UsageError(f"--word: expected comma-separated digits, got {args.word!r}") from None
    _json({"word": word, "dim": {"value": periodic_dim(s, word), "direction": "exact"}}, args)


def cmd_verify(args) -> int:
    from .verify import run_suite

    results = run_suite(args.suite, echo=lambda line: print(line, file=sys.stderr, flush=True))
    if args.out:
        _json([r.to_dict() for r in results], args)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed", file=sys.stderr)
    return EXIT_OK if passed == len(results) else EXIT_FAIL


COMMANDS = {
    "describe": (cmd_describe, "derived constants of a system"),
    "atoms": (cmd_atoms, "level-k atom masses"),
    "barrier": (cmd_barrier, "smallest level with barrier atoms"),
    "iterate": (cmd_iterate, "the system rewritten in base d^k"),
    "bounds": (cmd_bounds, "generalized or restricted spectral-radius bracket"),
    "dims": (cmd_dims, "dimension report"),
    "gamma": (cmd_gamma, "almost-sure dimension bracket"),
    "tau": (cmd_tau, "finite-k L^q spectrum curve"),
    "tau-hat": (cmd_tau_hat, "finite-k restricted L^q spectrum curve"),
    "fh": (cmd_fh, "Legendre conjugate of tau-hat"),
    "dim-range": (cmd_dim_range, "inner interval of attained local dimensions"),
    "periodic": (cmd_periodic, "local dimension at a periodic point"),
    "verify": (cmd_verify, "run the reproduction suite"),
}


def _threads_default():
    env = os.environ.get("MFZ_THREADS")
    return int(env) if env else None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="system JSON file")
    common.add_argument("--k", type=int)
    common.add_argument("--b", type=int, help="barrier digit")
    common.add_argument("--q-min", type=float, default=-20.0)
    common.add_argument("--q-max", type=float, default=10.0)
    common.add_argument("--q-step", type=float, default=0.05)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--dump", choices=["csv"])
    common.add_argument("--restricted", action="store_true")
    common.add_argument("--prune", action="store_true")
    common.add_argument("--mode", choices=["exact", "mc", "montecarlo"], default="exact")
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--k-entropy", type=int)
    common.add_argument("--threads", type=int, default=_threads_default())
    common.add_argument("--max-atoms", type=int, default=DEFAULT_MAX_ATOMS)
    common.add_argument("--max-words", type=int, default=10**9)
    common.add_argument("--max-level", type=int, default=4)
    common.add_argument("--word")
    common.add_argument("--suite", choices=["fast", "paper", "full"], default="fast")

    parser = argparse.ArgumentParser(prog="mfz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=helptext)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        print("mfz: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    fn = COMMANDS[args.command][0]
    try:
        rc = fn(args)
    except UsageError as exc:
        print(f"mfz {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"mfz {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MfzError as exc:
        print(f"mfz {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK if rc is None else rc


if __name__ == "__main__":
    sys.exit(main())
