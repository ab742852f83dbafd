"""Command line entry point: ``fueter-kit <suite> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone

from .errors import ConfigError
from .suites import DEFAULT_TOLERANCES, SUITES, RunConfig, run_suite

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser():
    p = argparse.ArgumentParser(prog="fueter-kit", description="Numerical verification suites.")
    p.add_argument("suite", choices=SUITES + ("all",))
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                   help="override a tolerance; names: " + ", ".join(sorted(DEFAULT_TOLERANCES)))
    p.add_argument("--out", help="write the JSON report to this path")
    p.add_argument("--config", help="JSON config file (flags take precedence)")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--text", dest="fmt", action="store_const", const="text")
    p.set_defaults(fmt="json")
    return p


def _parse_tol(items):
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError as exc:
            raise ConfigError(f"tolerance {name!r} is not a number: {value!r}") from exc
    return out


def load_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - {"n", "k", "seed", "samples", "tolerances", "out", "fefferman_c"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name in ("n", "k", "seed", "samples", "out"):
        v = getattr(args, name)
        if v is not None:
            data[name] = v
    tols = dict(data.get("tolerances", {}))
    tols.update(_parse_tol(args.tol))
    data["tolerances"] = tols
    return RunConfig(**data)


def build_report(suite, cfg):
    names = SUITES if suite == "all" else (suite,)
    suites, walls = [], {}
    start = time.perf_counter()
    for name in names:
        t0 = time.perf_counter()
        suites.append(run_suite(name, cfg))
        walls[name] = time.perf_counter() - t0
    report = {
        "schema": SCHEMA,
        "command": suite,
        "config": cfg.echo(),
        "suites": suites,
        "pass": all(s["pass"] for s in suites),
        "meta": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "wall_time": time.perf_counter() - start,
            "suite_wall_times": walls,
        },
    }
    return report


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=2)


def deterministic_part(report):
    """The report without its timing field."""
    return {k: v for k, v in report.items() if k != "meta"}


def render_text(report):
    lines = [f"fueter-kit {report['command']}  n={report['config']['n']} k={report['config']['k']} "
             f"seed={report['config']['seed']}"]
    for s in report["suites"]:
        lines.append(f"[{'PASS' if s['pass'] else 'FAIL'}] {s['suite']}")
        for c in s["checks"]:
            if "verdict" in c:
                detail = f"verdict={c['verdict']} residual={c['max_abs_err']:.3e}"
            elif c.get("metric") == "slope":
                detail = f"worst slope={c['worst_slope']:.3f} required<={c['tolerance']:.2f}"
            elif c.get("metric") == "count":
                detail = f"failures={int(c['max_abs_err'])} of {c['points']}"
            elif "max_rel_err" in c:
                detail = f"abs={c['max_abs_err']:.3e} rel={c['max_rel_err']:.3e} tol={c['tolerance']:.1e}"
            elif "slope" in c:
                detail = f"slope={c['slope']:.3f} required>={c['required']:.2f}"
            else:
                detail = c.get("skipped", "")
            lines.append(f"    {'ok ' if c['pass'] else 'BAD'} {c['name']}: {detail}")
    lines.append("overall: " + ("PASS" if report["pass"] else "FAIL"))
    return "\n".join(lines)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        report = build_report(args.suite, cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = dumps(report)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    print(text if args.fmt == "json" else render_text(report))
    return EXIT_OK if report["pass"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
