"""Command-line front end.

Subcommands: simulate, theta, gramian, probe, list-scenarios.  Exit codes:
0 success, 1 validation/usage error, 2 runtime failure (non-convergence,
hold violation, I/O).  A flat `key = value` config file can preload any
flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys

from . import chain_gramian, ctrl_fn, engine, mappability, scenarios, sim, stepwise
from .pendulum import NoRealRoot


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the contract wants 1
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let vector values with a leading minus ("--x0 -2,1,-1,0.5") parse
        # as values rather than unknown flags
        self._negative_number_matcher = re.compile(r"^-(\d|\.\d)")

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


_RUNTIME_ERRORS = (
    engine.Timeout,
    engine.NonFinite,
    stepwise.StepTimeout,
    stepwise.HoldViolation,
    stepwise.DomainError,
    ctrl_fn.NonConvergence,
    chain_gramian.GramianConditionError,
    scenarios.RootBracketFailure,
    NoRealRoot,
    mappability.RegularityViolation,
    mappability.RankDeficient,
    mappability.CapExceeded,
    OSError,
)


def _parse_floats(text: str, what: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise ValueError(f"{what} must be comma-separated floats, got {text!r}") from None


def _parse_param(tok: str):
    if "=" not in tok:
        raise ValueError(f"--param needs key=value, got {tok!r}")
    key, val = tok.split("=", 1)
    key = key.strip()
    val = val.strip()
    if ";" in val:
        return key, [float(v) for v in val.split(";") if v.strip() != ""]
    try:
        return key, int(val) if val.lstrip("+-").isdigit() else float(val)
    except ValueError:
        return key, val


def _load_config(path: str) -> dict:
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{ln}: expected key = value, got {line!r}")
                key, val = line.split("=", 1)
                out[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise ValueError(f"could not read config {path}: {exc}") from None
    return out


def _cfg_fill(args, config: dict, key: str, cast=None):
    """Fill a missing CLI value from the config file."""
    if getattr(args, key) is None and key in config:
        val = config[key]
        setattr(args, key, cast(val) if cast is not None else val)


def _build_scenario(name: str, param_tokens) -> scenarios.Scenario:
    params = dict(_parse_param(tok) for tok in (param_tokens or []))
    return scenarios.get_scenario(name, **params)


def _cmd_simulate(args) -> int:
    config = _load_config(args.config) if args.config else {}
    _cfg_fill(args, config, "scenario")
    _cfg_fill(args, config, "x0")
    _cfg_fill(args, config, "dt", float)
    _cfg_fill(args, config, "tmax", float)
    _cfg_fill(args, config, "out_dir")
    _cfg_fill(args, config, "chart")
    _cfg_fill(args, config, "x0_chart")
    _cfg_fill(args, config, "delta", float)
    if args.param is None and "param" in config:
        args.param = [tok.strip() for tok in config["param"].split(",") if tok.strip()]

    if args.scenario is None:
        raise ValueError("--scenario is required (flag or config)")
    if args.x0 is None:
        raise ValueError("--x0 is required (flag or config)")
    scn = _build_scenario(args.scenario, args.param)
    x0 = _parse_floats(args.x0, "--x0")
    cfg = engine.IntegratorConfig(
        dt=args.dt if args.dt is not None else 1e-4,
        t_max=args.tmax if args.tmax is not None else 100.0,
    )
    chart = args.chart if args.chart is not None else "z"
    x0_chart = args.x0_chart if args.x0_chart is not None else "x"
    delta = args.delta if args.delta is not None else 1e-8

    traj, summary = sim.simulate(scn, x0, cfg, chart=chart, delta=delta, x0_chart=x0_chart)

    out_dir = args.out_dir if args.out_dir is not None else "."
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "traj.csv")
    json_path = os.path.join(out_dir, "summary.json")
    sim.emit_csv(traj, csv_path)
    sim.emit_json(summary, json_path)
    written = [csv_path, json_path]
    for (i, j) in sim.default_projections(scn.n):
        svg_path = os.path.join(out_dir, f"traj_x{i}x{j}.svg")
        sim.emit_svg(traj, (i, j), svg_path)
        written.append(svg_path)

    print(f"T_total = {summary.T_total:.9g}")
    print(f"step_times = {[round(t, 9) for t in summary.step_times]}")
    print(f"final_state_norm = {summary.final_state_norm:.6e}")
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_theta(args) -> int:
    gram = chain_gramian.gram_n1(args.k)
    x = _parse_floats(args.x, "--x")
    if len(x) != args.k:
        raise ValueError(f"--x must have {args.k} entries, got {len(x)}")
    q = gram.n1_inv[args.k - 1][args.k - 1]
    d = args.d if args.d is not None else math.sqrt(args.a0 * q / 2.0)
    synth = ctrl_fn.LinearSynth(gram=gram, a0=args.a0, d=d)
    ev = ctrl_fn.theta_of(synth, x)
    print(
        json.dumps(
            {
                "k": args.k,
                "a0": args.a0,
                "d": d,
                "theta": float(ev.theta),
                "w": [float(v) for v in ev.w],
                "v": float(ev.v),
                "sigma": float(ev.sigma),
            },
            indent=2,
        )
    )
    return 0


def _cmd_gramian(args) -> int:
    gram = chain_gramian.gram_n1(args.k)
    as_lists = lambda m: [[float(v) for v in row] for row in m]
    out = {
        "k": args.k,
        "n1": as_lists(gram.n1),
        "n1_inv": as_lists(gram.n1_inv),
    }
    if args.theta is not None:
        out["theta"] = args.theta
        out["n_theta"] = as_lists(chain_gramian.gram_theta(gram, args.theta))
    print(json.dumps(out, indent=2))
    return 0


def _parse_box(text: str, n: int) -> tuple:
    parts = [p for p in text.split(";") if p.strip()]
    if len(parts) == 1:
        lo, hi = _parse_floats(parts[0], "--box")
        return tuple((lo, hi) for _ in range(n))
    if len(parts) != n:
        raise ValueError(f"--box needs 1 or {n} lo,hi pairs, got {len(parts)}")
    box = []
    for part in parts:
        lo, hi = _parse_floats(part, "--box")
        box.append((lo, hi))
    return tuple(box)


def _cmd_probe(args) -> int:
    config = _load_config(args.config) if args.config else {}
    _cfg_fill(args, config, "scenario")
    _cfg_fill(args, config, "box")
    _cfg_fill(args, config, "samples", int)
    if args.scenario is None:
        raise ValueError("--scenario is required (flag or config)")
    scn = _build_scenario(args.scenario, args.param)
    if scn.probe is None:
        raise ValueError(f"scenario {scn.name} does not expose probe fields")
    box = _parse_box(args.box, scn.n) if args.box is not None else scn.probe.box
    count = args.samples if args.samples is not None else 32
    samples = mappability.halton_samples(box, count)
    report = mappability.select_columns(scn.probe.a, scn.probe.bs, samples)
    print(
        json.dumps(
            {
                "scenario": scn.name,
                "kept": [list(pair) for pair in report.kept],
                "indices": list(report.indices),
                "rank_history": list(report.rank_history),
                "samples": int(samples.shape[0]),
                "svd_tol": report.svd_tol,
            },
            indent=2,
        )
    )
    return 0


def _cmd_list(args) -> int:
    for name in scenarios.SCENARIO_NAMES:
        print(name)
    return 0


def _make_parser() -> _Parser:
    top = _Parser(prog="stepsynth", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write traj.csv/summary.json/SVGs")
    p.add_argument("--scenario")
    p.add_argument("--x0", help="comma-separated initial state (original chart)")
    p.add_argument("--dt", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--chart", choices=["z", "x"], help="integration chart (default z)")
    p.add_argument(
        "--x0-chart",
        dest="x0_chart",
        choices=["x", "z"],
        help="chart x0 is given in (default x, the original coordinates)",
    )
    p.add_argument("--delta", type=float, help="per-block done tolerance")
    p.add_argument("--param", action="append", help="scenario parameter key=value")
    p.add_argument("--config", help="flat key = value file; flags override")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("theta", help="evaluate the controllability function at x")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--a0", type=float, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--d", type=float, help="control bound (default: tight for a0)")
    p.set_defaults(fn=_cmd_theta)

    p = sub.add_parser("gramian", help="print N(1), its inverse, optionally N(theta)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--theta", type=float)
    p.set_defaults(fn=_cmd_gramian)

    p = sub.add_parser("probe", help="numeric reducibility probe for a scenario")
    p.add_argument("--scenario")
    p.add_argument("--box", help="lo,hi or lo,hi;lo,hi;... sample box")
    p.add_argument("--samples", type=int)
    p.add_argument("--param", action="append", help="scenario parameter key=value")
    p.add_argument("--config", help="flat key = value file; flags override")
    p.set_defaults(fn=_cmd_probe)

    p = sub.add_parser("list-scenarios", help="print registered scenario names")
    p.set_defaults(fn=_cmd_list)
    return top


def main(argv=None) -> int:
    parser = _make_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _RUNTIME_ERRORS as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
