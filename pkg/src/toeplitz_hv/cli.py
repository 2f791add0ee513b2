"""Command-line interface: ``toeplitz-hv <subcommand> [options]``.

Options may also come from a flat ``key = value`` config file (``--config``)
or from the file named by ``TOEPLITZ_HV_CONFIG``.  Command-line flags win
over ``--config``, which wins over the environment file, which wins over
built-in defaults.

Exit codes: 0 success, 2 bad input, 3 numerical failure, 4 coefficient
index out of range, 5 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path


from . import blocks as blk
from .errors import (BlockOverflow, DegenerateBlock, InvalidParams, NotDifferentiable, NumericalFailure,
                     RangeExceeded, SpecParseError, ToeplitzError, UndersampledGrid)
from .multiplier import apply_toeplitz, gamma_sequence, read_coeffs
from .numerics import DEFAULT_CONFIG, QuadratureConfig
from .serialize import dumps
from .symbols import HYPOTHESES, check_hypothesis, parse_symbol
from .verification import run_verify
from .weights import check_condition_1_1, check_condition_B, check_normal, parse_weight
from .window import default_n_range, diagnose

ENV_VAR = "TOEPLITZ_HV_CONFIG"

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_RANGE, EXIT_VERIFY = 0, 2, 3, 4, 5

DEFAULTS = {
    "weight": "standard:alpha=1",
    "symbol": None,
    "blocks_builder": None,
    "b": 4.0,
    "count": None,
    "n_min": None,
    "n_max": None,
    "rel_tol": DEFAULT_CONFIG.rel_tol,
    "grid_mult": 4.0,
    "out": None,
    "format": "json",
    "seed": 0,
    "alpha": None,
    "beta": None,
    "k": 1.0,
    "epsilon": None,
    "coeffs": None,
    "trials": 200,
}

BUILDER_ALIASES = {"generic": "generic", "exp": "exp", "exponential": "exp", "normal": "normal"}
DEFAULT_COUNT = {"exp": 30, "normal": 18, "generic": 30}


class InputError(ToeplitzError):
    """Bad command-line or config input."""


# ---------------------------------------------------------------------------
# parser and config merging
# ---------------------------------------------------------------------------

def _shared(p: argparse.ArgumentParser, *names: str) -> None:
    table = {
        "weight": dict(help="weight spec, e.g. standard:alpha=1, exp:alpha=1,beta=1, slowlog, table:<csv>"),
        "symbol": dict(help="symbol spec, e.g. invlog, pow:delta=0.5, const:c=1, trunc:<inner>,s=0.5,side=lo"),
        "blocks-builder": dict(dest="blocks_builder", choices=sorted(BUILDER_ALIASES),
                               help="block construction: generic, exp or normal"),
        "b": dict(type=float, help="block constant b > 2 (also b1 for the (B) scan)"),
        "count": dict(type=int, help="number of blocks"),
        "n-min": dict(dest="n_min", type=int, help="first window / coefficient index"),
        "n-max": dict(dest="n_max", type=int, help="last window / coefficient index"),
        "rel-tol": dict(dest="rel_tol", type=float, help="quadrature relative tolerance"),
        "grid-mult": dict(dest="grid_mult", type=float, help="circle grid oversampling factor (>= 4)"),
        "out": dict(help="output path (default: stdout)"),
        "format": dict(choices=["json", "csv"], help="output format"),
        "seed": dict(type=int, help="seed for randomized checks"),
        "config": dict(help="flat key = value config file"),
    }
    for name in names:
        kw = dict(table[name])
        if name == "blocks-builder":
            p.add_argument("--blocks-builder", "--builder", default=None, **kw)
        else:
            p.add_argument(f"--{name}", default=None, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toeplitz-hv",
                                     description="Toeplitz operators with radial symbols on weighted sup-norm spaces")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    common = ("weight", "rel-tol", "out", "format", "config")

    p = sub.add_parser("weight-report", help="condition (B), normality and the moment-shift condition")
    _shared(p, *common, "b", "seed")
    p.add_argument("--epsilon", type=float, default=None, help="exponent for the moment-shift condition")

    p = sub.add_parser("blocks", help="build a block sequence")
    _shared(p, *common, "blocks-builder", "b", "count", "seed")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--k", type=float, default=None, help="exponent of the geometric builder")

    p = sub.add_parser("gamma", help="multiplier sequence gamma_0..gamma_N")
    _shared(p, *common, "symbol", "n-min", "n-max", "seed")

    p = sub.add_parser("diagnose", help="boundary hypotheses and the window-norm criterion")
    _shared(p, *common, "symbol", "blocks-builder", "b", "count", "n-min", "n-max", "grid-mult", "seed")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--k", type=float, default=None)

    p = sub.add_parser("apply", help="apply the Toeplitz multiplier to Taylor coefficients")
    _shared(p, *common, "symbol", "n-max", "seed")
    p.add_argument("--coeffs", default=None, help="CSV file with header n,re,im")

    p = sub.add_parser("verify", help="randomized and scanned inequality checks")
    _shared(p, *common, "seed")
    p.add_argument("--trials", type=int, default=None)
    return parser


def _subparser_actions(parser: argparse.ArgumentParser, command: str) -> dict[str, argparse.Action]:
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    actions = {}
    for act in sub.choices[command]._actions:
        for opt in act.option_strings:
            if opt.startswith("--"):
                actions[opt[2:]] = act
    return actions


def read_config(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("_", "-")] = value.strip()
    return out


def resolve(parser: argparse.ArgumentParser, ns: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from the config files and the defaults."""
    actions = _subparser_actions(parser, ns.command)
    layers = []
    env_path = os.environ.get(ENV_VAR)
    if env_path:
        layers.append((env_path, read_config(env_path)))
    if ns.config:
        layers.append((ns.config, read_config(ns.config)))
    merged = {}
    for path, entries in layers:
        for key, raw in entries.items():
            act = actions.get(key)
            if act is None or key in ("config", "help"):
                raise InputError(f"{path}: unknown key {key!r} for {ns.command}")
            try:
                value = act.type(raw) if act.type else raw
            except ValueError as exc:
                raise InputError(f"{path}: bad value for {key}: {raw!r}") from exc
            if act.choices is not None and value not in act.choices:
                raise InputError(f"{path}: {key} must be one of {sorted(act.choices)}")
            merged[act.dest] = value
    for dest, default in DEFAULTS.items():
        if getattr(ns, dest, None) is None and hasattr(ns, dest):
            setattr(ns, dest, merged.get(dest, default))
    return ns


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(x, ".17g") if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _require_json(ns, what: str) -> None:
    if ns.format != "json":
        raise InputError(f"{what} output is available as json only")


def _cfg(ns) -> QuadratureConfig:
    return QuadratureConfig(rel_tol=ns.rel_tol)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_weight_report(ns) -> int:
    _require_json(ns, "weight-report")
    w = parse_weight(ns.weight)
    eps = ns.epsilon
    if eps is None:
        eps = 1.0 / (w.beta + 1.0) if w.kind == "exponential" else 0.5
    reports = [check_condition_B(w, ns.b), check_normal(w), check_condition_1_1(w, eps, cfg=_cfg(ns))]
    _emit(dumps({"weight": w.spec_string, "reports": [r.to_dict() for r in reports]}), ns.out)
    return EXIT_OK


def _builder(ns, w) -> str:
    if ns.blocks_builder:
        return BUILDER_ALIASES[ns.blocks_builder]
    if w.kind == "exponential":
        return "exp"
    if w.kind == "standard":
        return "normal"
    return "generic"


def build_blocks(ns, w) -> blk.BlockSequence:
    kind = _builder(ns, w)
    count = ns.count if ns.count is not None else DEFAULT_COUNT[kind]
    if count < 2:
        raise InvalidParams("count must be at least 2")
    if kind == "exp":
        alpha = ns.alpha if ns.alpha is not None else (w.alpha if w.kind == "exponential" else None)
        beta = ns.beta if ns.beta is not None else (w.beta if w.kind == "exponential" else None)
        if alpha is None or beta is None:
            raise InvalidParams("the exp builder needs --alpha and --beta or an exponential weight")
        return blk.build_blocks_exponential(alpha, beta, count)
    if kind == "normal":
        return blk.build_blocks_normal(ns.k if ns.k is not None else DEFAULTS["k"], count, w)
    return blk.build_blocks_generic(w, ns.b, count)


def cmd_blocks(ns) -> int:
    w = parse_weight(ns.weight)
    seq = build_blocks(ns, w)
    stats = blk.ratio_statistics(seq) if len(seq) >= 3 else None
    if ns.format == "csv":
        radii = seq.radii or (None,) * len(seq)
        _emit(_csv(["n", "m", "r"], zip(seq.labels, seq.indices, radii)), ns.out)
    else:
        _emit(dumps({**seq.to_dict(), "ratio_bound": stats}), ns.out)
    if stats is not None:
        print(f"max (m_(n+1)-m_n)/(m_n-m_(n-1)) = {stats['gap_ratio']:.6g}", file=sys.stderr)
    return EXIT_OK


def _symbol(ns):
    if not ns.symbol:
        raise InputError("--symbol is required")
    return parse_symbol(ns.symbol)


def cmd_gamma(ns) -> int:
    w, a = parse_weight(ns.weight), _symbol(ns)
    n_max = ns.n_max if ns.n_max is not None else 100
    n_min = ns.n_min or 0
    if not 0 <= n_min <= n_max:
        raise InvalidParams("need 0 <= n-min <= n-max")
    seq = gamma_sequence(w, a, n_max, _cfg(ns))
    rows = [(n, float(seq.gammas[n])) for n in range(n_min, n_max + 1)]
    if ns.format == "csv":
        _emit(_csv(["n", "gamma"], rows), ns.out)
    else:
        _emit(dumps({"weight": w.spec_string, "symbol": a.spec_string, "n_max": n_max,
                     "gammas": [{"n": n, "gamma": g} for n, g in rows]}), ns.out)
    return EXIT_OK


def _hypotheses(w, a) -> list[dict]:
    out = []
    for h in HYPOTHESES:
        if h in ("1.4", "1.5") and w.kind != "exponential":
            continue
        try:
            out.append(check_hypothesis(a, h, w.beta if w.kind == "exponential" else None).to_dict())
        except NotDifferentiable as exc:
            out.append({"hypothesis": h, "verdict": "not_applicable", "note": str(exc)})
    return out


def cmd_diagnose(ns) -> int:
    w, a = parse_weight(ns.weight), _symbol(ns)
    seq = build_blocks(ns, w)
    ns_range = list(default_n_range(seq))
    if ns.n_min is not None or ns.n_max is not None:
        lo = ns.n_min if ns.n_min is not None else seq.labels[1]
        hi = ns.n_max if ns.n_max is not None else seq.labels[-2]
        if lo < seq.labels[1] or hi > seq.labels[-2] or lo > hi:
            raise InvalidParams(f"window range must lie in {seq.labels[1]}..{seq.labels[-2]}")
        ns_range = list(range(lo, hi + 1))
    hyps = _hypotheses(w, a)
    report = diagnose(w, a, seq, ns_range, grid_mult=ns.grid_mult, cfg=_cfg(ns))
    if ns.format == "csv":
        buf = io.StringIO()
        report_path = ns.out
        if report_path:
            report.to_csv(report_path)
        else:
            rows = [(r.n, r.m_prev, r.m_mid, r.m_next, r.l1_norm, r.bound_3_1, r.bound_3_2)
                    for r in report.records]
            buf.write(_csv(["n", "m_prev", "m_mid", "m_next", "l1_norm", "bound31", "bound32"], rows))
            sys.stdout.write(buf.getvalue())
    else:
        _emit(dumps({"weight": w.spec_string, "symbol": a.spec_string,
                     "blocks": {"provenance": seq.provenance, "b": seq.b, "count": len(seq)},
                     "hypotheses": hyps, "diagnosis": report.to_dict()}), ns.out)
    summary = ", ".join(f"({h['hypothesis']}) {h['verdict']}" for h in hyps)
    print(f"hypotheses: {summary}", file=sys.stderr)
    print(f"criterion: bounded {report.verdict_bounded}, compact {report.verdict_compact}", file=sys.stderr)
    return EXIT_OK


def cmd_apply(ns) -> int:
    if not ns.coeffs:
        raise InputError("--coeffs is required")
    w, a = parse_weight(ns.weight), _symbol(ns)
    h = read_coeffs(ns.coeffs)
    n_max = ns.n_max if ns.n_max is not None else h.degree
    g = gamma_sequence(w, a, n_max, _cfg(ns))
    out = apply_toeplitz(g, h)
    rows = [(n, float(c.real), float(c.imag)) for n, c in enumerate(out.coeffs)]
    if ns.format == "csv":
        _emit(_csv(["n", "re", "im"], rows), ns.out)
    else:
        _emit(dumps({"weight": w.spec_string, "symbol": a.spec_string,
                     "coeffs": [{"n": n, "re": re, "im": im} for n, re, im in rows]}), ns.out)
    return EXIT_OK


def cmd_verify(ns) -> int:
    _require_json(ns, "verify")
    w = parse_weight(ns.weight)
    summary = run_verify(w, seed=ns.seed, trials=ns.trials, cfg=_cfg(ns))
    _emit(dumps({"weight": w.spec_string, **summary.to_dict()}), ns.out)
    for c in summary.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} {json.dumps(c.scale)}", file=sys.stderr)
    return EXIT_OK if summary.passed else EXIT_VERIFY


COMMANDS = {"weight-report": cmd_weight_report, "blocks": cmd_blocks, "gamma": cmd_gamma,
            "diagnose": cmd_diagnose, "apply": cmd_apply, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ns = resolve(parser, ns)
        return COMMANDS[ns.command](ns)
    except RangeExceeded as exc:
        code, err = EXIT_RANGE, exc
    except (NumericalFailure, UndersampledGrid, BlockOverflow, DegenerateBlock) as exc:
        code, err = EXIT_NUMERIC, exc
    except (InputError, SpecParseError, InvalidParams, OSError) as exc:
        code, err = EXIT_INPUT, exc
    print(f"error: {err}", file=sys.stderr)
    return code

if __name__ == "__main__":
    sys.exit(main())
