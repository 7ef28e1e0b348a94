"""Command line driver.

Subcommands build on each other: ``classify`` stops after recognising the
bifurcation, ``skeleton`` adds branch series and Newton-refined samples,
``fit`` adds the matched form coefficients over a parameter grid,
``conjugacy`` builds the change of coordinates at one parameter value,
``verify`` additionally runs derivative probes (and escape-time matching
below a saddle-node), and ``all`` does everything.

Every run writes ``report.json`` into the output directory; ``skeleton``,
``fit``, and the conjugacy commands also write a CSV next to it.  Exit
status: 0 on success, 1 for configuration or expression errors, 2 when the
map does not classify as a supported bifurcation, 3 when a numeric stage
fails (the partial report is still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .classify import DEFAULT_TOL, Kind, classify
from .errors import BifurcateError, ConfigError, ParseError
from .expr import MapSpec, spec_from_dict
from .normalform import default_fit_grid, fit_over_grid
from .pipeline import conjugacy_analysis, conjugacy_samples, refined_branches

SETTINGS_KEYS = ("mu", "mu_grid", "tol")

_GRID_RE = re.compile(r"^([^:]+):([^:]+):(\d+)(log|lin)$")


def parse_mu_grid(text: str) -> list:
    """Parse ``a:b:n(log|lin)`` into an n-point grid from a to b."""
    m = _GRID_RE.match(text.strip())
    if not m:
        raise ConfigError(
            f"bad mu grid '{text}': expected a:b:n(log|lin), "
            "for example 1e-4:1e-2:8log", field="mu_grid")
    try:
        a, b = float(m.group(1)), float(m.group(2))
    except ValueError:
        raise ConfigError(f"bad mu grid endpoint in '{text}'",
                          field="mu_grid") from None
    n = int(m.group(3))
    if n < 1:
        raise ConfigError("mu grid needs at least one point", field="mu_grid")
    if m.group(4) == "log":
        if a * b <= 0:
            raise ConfigError(
                "log grid endpoints must be nonzero and share a sign",
                field="mu_grid")
        return [float(v) for v in np.geomspace(a, b, n)]
    return [float(v) for v in np.linspace(a, b, n)]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bifurcate",
        description="classify a one-parameter interval map and verify its "
                    "reduction to an extended normal form")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in [
            ("classify", "recognise the bifurcation at (x, mu) = (0, 0)"),
            ("skeleton", "branch locations and multipliers"),
            ("fit", "matched form coefficients over a mu grid"),
            ("conjugacy", "build the conjugacy to the form at one mu"),
            ("verify", "conjugacy plus derivative-probe verification"),
            ("all", "every stage")]:
        p = sub.add_parser(name, help=blurb)
        p.add_argument("config", help="TOML map configuration")
        p.add_argument("-o", "--out", default="./out",
                       help="output directory (default ./out)")
        p.add_argument("--mu", type=float, default=None,
                       help="parameter value for the conjugacy stages "
                            "(default: trust_mu from the config)")
        p.add_argument("--mu-grid", default=None, metavar="A:B:N(log|lin)",
                       help="parameter grid for skeleton and fit stages")
        p.add_argument("--tol", type=float, default=None,
                       help="classification tolerance (default 1e-9)")
        p.add_argument("--degree", type=int, default=None,
                       help="series truncation degree (overrides config)")
        p.add_argument("--no-timings", action="store_true",
                       help="omit wall-clock timings from report.json")
    return parser


def _read_toml(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None


def _settings(raw: dict, args) -> dict:
    """Merge defaults, config settings, and flags (flags win)."""
    out = {"mu": None, "mu_grid": None, "tol": DEFAULT_TOL}
    if "mu" in raw:
        out["mu"] = float(raw["mu"])
    if "tol" in raw:
        out["tol"] = float(raw["tol"])
    if "mu_grid" in raw:
        if not isinstance(raw["mu_grid"], str):
            raise ConfigError("field 'mu_grid' must be a grid string",
                              field="mu_grid")
        out["mu_grid"] = parse_mu_grid(raw["mu_grid"])
    if args.mu is not None:
        out["mu"] = args.mu
    if args.tol is not None:
        out["tol"] = args.tol
    if args.mu_grid is not None:
        out["mu_grid"] = parse_mu_grid(args.mu_grid)
    return out


def _jsonable(obj):
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _sanitize(obj):
    """NaN and infinities have no JSON encoding; report them as null."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return None
    return obj


def _write_report(report: dict, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    text = json.dumps(_sanitize(report), sort_keys=True, indent=2,
                      allow_nan=False, default=_jsonable)
    path.write_text(text + "\n")
    return path


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _branch_dict(branch) -> dict:
    return {
        "label": str(branch.label),
        "param": branch.param,
        "location": [float(c) for c in branch.location.c],
        "multiplier": [float(c) for c in branch.multiplier.c],
        "samples": [{
            "mu": s.mu, "x": s.x, "partner": s.partner,
            "multiplier": s.multiplier, "series_x": s.series_x,
            "abs_err": s.abs_err, "valid": s.valid, "note": s.note,
        } for s in branch.samples],
    }


def _fit_dict(fit) -> dict:
    return {
        "kind": str(fit.kind),
        "nu_prime_0": fit.leading.nu_prime_0,
        "a0": fit.leading.a0,
        "b0": fit.leading.b0,
        "points": [{"mu": p.mu, "nu": p.nu, "a": p.a, "b": p.b,
                    "residual": p.residual} for p in fit.fitted],
        "validity": list(fit.validity),
    }


def _run(args) -> int:
    try:
        raw = _read_toml(args.config)
        settings = _settings(raw, args)
        map_table = {k: v for k, v in raw.items() if k not in SETTINGS_KEYS}
        if args.degree is not None:
            map_table["degree"] = args.degree
        spec = spec_from_dict(map_table)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_dir = Path(args.out)
    timings: dict = {}
    report = {
        "version": __version__,
        "command": args.command,
        "input": {
            "config": str(args.config),
            "expression": spec.expression,
            "params": dict(spec.params),
            "degree": spec.degree,
            "trust_x": spec.trust_x,
            "trust_mu": spec.trust_mu,
            "tol": settings["tol"],
            "mu": settings["mu"],
            "mu_grid": settings["mu_grid"],
        },
    }
    if not args.no_timings:
        report["timings"] = timings

    def staged(name, fn):
        t0 = time.perf_counter()
        result = fn()
        timings[name] = time.perf_counter() - t0
        return result

    want = args.command
    do_skeleton = want in ("skeleton", "all")
    do_fit = want in ("fit", "all")
    do_conj = want in ("conjugacy", "verify", "all")
    with_probes = want in ("verify", "all")

    try:
        cls = staged("classify", lambda: classify(spec, tol=settings["tol"]))
        report["classification"] = {
            "kind": str(cls.kind),
            "note": cls.note,
            "flip_x": cls.flip_x,
            "flip_mu": cls.flip_mu,
            "origin_fixed_for_all_mu": cls.origin_fixed_for_all_mu,
            "margins": {k: float(v) for k, v in cls.margins.items()},
        }
        print(f"kind: {cls.kind}" + (f" ({cls.note})" if cls.note else ""))
        if cls.kind in (Kind.NONE, Kind.DEGENERATE):
            _write_report(report, out_dir)
            print(f"report -> {out_dir / 'report.json'}")
            return 2

        grid = settings["mu_grid"]
        if grid is None:
            grid = default_fit_grid(spec.trust_mu)
        nmap = spec.normalized(cls.flip_x, cls.flip_mu)

        if do_skeleton:
            branches = staged(
                "skeleton", lambda: refined_branches(nmap, cls.kind, grid))
            report["branches"] = [_branch_dict(b) for b in branches]
            rows = [(s.mu, str(b.label), s.x, s.multiplier, s.series_x,
                     s.abs_err)
                    for b in branches for s in b.samples if s.valid]
            _write_csv(out_dir / "skeleton.csv",
                       ("mu", "branch", "x", "multiplier", "series_x",
                        "abs_err"), rows)
            print(f"skeleton: {len(branches)} branches on {len(grid)} "
                  f"mu values -> {out_dir / 'skeleton.csv'}")

        if do_fit:
            fit = staged("fit",
                         lambda: fit_over_grid(nmap, cls.kind, grid))
            report["fit"] = _fit_dict(fit)
            _write_csv(out_dir / "fit.csv",
                       ("mu", "nu", "a", "b", "residual"),
                       [(p.mu, p.nu, p.a, "" if p.b is None else p.b,
                         p.residual) for p in fit.fitted])
            b0 = "" if fit.leading.b0 is None else f" b0: {fit.leading.b0:.12g}"
            print(f"nu'(0): {fit.leading.nu_prime_0:.12g} "
                  f"a0: {fit.leading.a0:.12g}{b0}")
            print(f"fit: {len(fit.fitted)} points -> {out_dir / 'fit.csv'}")

        if do_conj:
            summary = staged(
                "conjugacy",
                lambda: conjugacy_analysis(spec, mu=settings["mu"],
                                           with_probes=with_probes))
            report["conjugacy"] = summary.as_dict()
            rows = staged("samples", lambda: conjugacy_samples(summary))
            _write_csv(out_dir / "conjugacy.csv",
                       ("x", "h_x", "residual"), rows)
            worst = max(p.residual for p in summary.pieces)
            print(f"conjugacy: mu={summary.mu:g} nu={summary.nu:.9g} "
                  f"{len(summary.pieces)} pieces, worst residual "
                  f"{worst:.3g} -> {out_dir / 'conjugacy.csv'}")
            if with_probes:
                verdicts = [pr.verdict for p in summary.pieces
                            for pr in p.probes]
                ok = sum(v == "convergent" for v in verdicts)
                line = f"verify: probes convergent ({ok}/{len(verdicts)})"
                if summary.escape is not None:
                    match = (summary.escape["n"] == summary.escape["form_n"]
                             and abs(summary.escape["phase"]
                                     - summary.escape["form_phase"]) <= 1e-8)
                    line += (", escape matched" if match
                             else ", escape MISMATCH")
                if summary.lift_residual is not None:
                    line += f", lift residual {summary.lift_residual:.3g}"
                print(line)
    except BifurcateError as exc:
        report["error"] = str(exc)
        _write_report(report, out_dir)
        print(f"error: {exc}", file=sys.stderr)
        print(f"report -> {out_dir / 'report.json'}")
        return 3

    _write_report(report, out_dir)
    print(f"report -> {out_dir / 'report.json'}")
    return 0


def main(argv=None) -> int:
    return _run(_build_parser().parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
