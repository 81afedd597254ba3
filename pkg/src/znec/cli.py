"""Command-line entry point: bounds tables, sweeps, simulated sessions and the converse demo."""

from __future__ import annotations

import argparse
import os
import random
import sys
from pathlib import Path

from .adversary import confusion_replay, parse_strategy
from .bounds import (
    FourNodeCode,
    InvalidParameters,
    NetworkParams,
    bound_report,
    confusion_attack,
    four_node_cut,
    parameter_grid,
    theorem1_bound,
    tight_condition,
)
from .codec import UnsupportedParameters
from .harness import (
    REPORT_COLUMNS,
    SessionConfig,
    report_row,
    reports_csv,
    run_session,
    symbol_digest,
    transcripts_csv,
)

TINY_PRESETS = {
    "tiny": dict(n=2, m=2, a=2, b=1, c=1, z=1, q=2),
}


def read_config(path: str) -> dict:
    """Parse a key=value file; blank lines and # comments are ignored."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _default_seed() -> int:
    try:
        return int(os.environ.get("ZNEC_SEED", "0"))
    except ValueError:
        return 0


def _add_params(sp: argparse.ArgumentParser, with_q: bool = True) -> None:
    for name in ("n", "m", "a", "b", "c", "z"):
        sp.add_argument(f"--{name}", type=int, required=False)
    if with_q:
        sp.add_argument("--q", type=int, default=257)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="znec", description=__doc__)
    ap.add_argument("--config", help="key=value file; command-line flags take precedence")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="bound report for one parameter tuple")
    _add_params(b)
    b.add_argument("--csv", help="write the table to this path")

    s = sub.add_parser("sweep", help="bound reports over a parameter grid")
    for name, dflt in (("a_max", 8), ("c_max", 7), ("b_max", 7), ("n_max", 6), ("m_max", 8), ("z_max", 3)):
        s.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int, default=dflt)
    s.add_argument("--tight-only", action="store_true")
    s.add_argument("--csv")

    sim = sub.add_parser("simulate", help="run a multi-round session")
    _add_params(sim)
    sim.add_argument("--rounds", type=int, default=10)
    sim.add_argument("--strategy", default="none", help="NAME[:ARGS], e.g. single:up1:5 or random:3")
    sim.add_argument("--seed", type=int, default=_default_seed())
    sim.add_argument("--key-seed", type=int, default=0)
    sim.add_argument("--csv")

    d = sub.add_parser("attack-demo", help="two-branch confusion attack on a tiny instance")
    d.add_argument("--tiny-preset", default="tiny", choices=sorted(TINY_PRESETS))
    d.add_argument("--seed", type=int, default=_default_seed())
    return ap


def _coerce(parser: argparse.ArgumentParser, argv, config: dict) -> argparse.Namespace:
    """Re-parse with config values installed as subcommand defaults, so flags still win."""
    ns = parser.parse_args(argv)
    if not config:
        return ns
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[ns.command]
    known = {a.dest: a for a in sp._actions}
    defaults = {}
    for k, v in config.items():
        if k not in known:
            parser.error(f"unknown config key {k!r} for {ns.command}")
        act = known[k]
        if act.type is not None:
            defaults[k] = act.type(v)
        elif isinstance(act, argparse._StoreTrueAction):
            defaults[k] = v.lower() in ("1", "true", "yes")
        else:
            defaults[k] = v
    sp.set_defaults(**defaults)
    for act in sp._actions:
        if act.dest in defaults:
            act.required = False
    return parser.parse_args(argv)


def _params(ns, parser) -> NetworkParams:
    missing = [k for k in ("n", "m", "a", "b", "c", "z") if getattr(ns, k, None) is None]
    if missing:
        parser.error("missing parameters: " + ", ".join("--" + k for k in missing))
    try:
        return NetworkParams(n=ns.n, m=ns.m, a=ns.a, b=ns.b, c=ns.c, z=ns.z, q=ns.q)
    except InvalidParameters as exc:
        parser.error(str(exc))


def _table(header, rows) -> str:
    rows = [[str(v) for v in r] for r in rows]
    widths = [max(len(str(h)), *(len(r[i]) for r in rows)) if rows else len(str(h)) for i, h in enumerate(header)]
    lines = ["  ".join(str(h).rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows]
    return "\n".join(lines)


def _emit_csv(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)


def cmd_bounds(ns, parser) -> int:
    p = _params(ns, parser)
    print(_table(REPORT_COLUMNS, [report_row(p, bound_report(p))]))
    _emit_csv(ns.csv, reports_csv([p]))
    return 0


def cmd_sweep(ns, parser) -> int:
    grid = [p for p in parameter_grid(ns.a_max, ns.n_max, ns.m_max, ns.z_max)
            if p.c <= ns.c_max and p.b <= ns.b_max and (tight_condition(p) or not ns.tight_only)]
    rows = [report_row(p, bound_report(p)) for p in grid]
    print(_table(REPORT_COLUMNS, rows))
    tight = sum(r[12] for r in rows)
    print(f"# {len(rows)} tuples, {tight} tight")
    _emit_csv(ns.csv, reports_csv(grid))
    return 0


def cmd_simulate(ns, parser) -> int:
    p = _params(ns, parser)
    try:
        strategy = parse_strategy(ns.strategy, p, ns.seed)
        cfg = SessionConfig(p, ns.rounds, strategy, ns.seed, key_seed=ns.key_seed)
        result = run_session(cfg)
    except (ValueError, UnsupportedParameters) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = transcripts_csv(result.transcripts)
    sys.stdout.write(text)
    events = sum(t.event for t in result.transcripts)
    print(f"# verdict {result.verdict}; event rounds {events}; identified "
          f"{' '.join(map(str, sorted(result.identified))) or '-'}")
    _emit_csv(ns.csv, text)
    return 0 if result.ok else 1


def cmd_attack_demo(ns, parser) -> int:
    p = NetworkParams(**TINY_PRESETS[ns.tiny_preset])
    Z1, Z2 = ["up1"], ["dn1"]
    M = theorem1_bound(four_node_cut(p), Z1, Z2, p.z)
    rng = random.Random(ns.seed)
    codebook = rng.sample(range(10 ** 6), p.q ** M + 1)
    code = FourNodeCode(p, ns.seed)
    pair = confusion_attack(p, codebook, Z1, Z2, code=code)
    replay = confusion_replay(p, pair, code)
    print(f"preset {ns.tiny_preset}: {p}")
    print(f"bound M = {M}; codebook size {len(codebook)} > q^M = {p.q ** M}")
    print(f"x  = codeword #{pair.index} ({pair.x}); errors on Z1 {pair.errors_z1}")
    print(f"x' = codeword #{pair.other_index} ({pair.x_prime}); errors on Z2 {pair.errors_z2}")
    for name, obs in (("branch 1", replay.branch1), ("branch 2", replay.branch2)):
        flat = [v for _, vals in obs for v in vals]
        print(f"{name}: {' '.join(f'{k}={list(v)}' for k, v in obs)}  digest {symbol_digest(flat)}")
    print("observations identical" if replay.identical else "observations differ")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = parser.parse_args(argv)
    config = read_config(pre.config) if pre.config else {}
    ns = _coerce(parser, argv, config)
    handler = {"bounds": cmd_bounds, "sweep": cmd_sweep, "simulate": cmd_simulate,
               "attack-demo": cmd_attack_demo}[ns.command]
    return handler(ns, parser)


cli = main

if __name__ == "__main__":
    sys.exit(main())
