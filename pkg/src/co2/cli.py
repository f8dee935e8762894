"""Command-line entry point: `co2 <command> ...`."""
from __future__ import annotations

import argparse
import json
import os
import sys

from co2 import contracts as C
from co2.abstraction import DEFAULT_ABSTRACT_CAP, AbstractCapExceeded
from co2.frontend import (
    ParseError, parse_bilateral, parse_contract, parse_formula, parse_system, render, render_bilateral,
    render_contract, render_file,
)
from co2.honesty import check_sharp_honesty
from co2.ltl import ltl_holds
from co2.simulate import POLICIES, ScriptError, simulate
from co2.syntax import Name, ProcessError

EX_USAGE = 64
EX_DATAERR = 65
EX_SOFTWARE = 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _state_cap(default: int) -> int:
    raw = os.environ.get("CO2_STATE_CAP")
    if not raw:
        return default
    try:
        cap = int(raw)
    except ValueError:
        raise UsageError(f"CO2_STATE_CAP must be an integer, got {raw!r}")
    if cap <= 0:
        raise UsageError("CO2_STATE_CAP must be positive")
    return cap


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")


def _contract_arg(text: str) -> C.Contract:
    """A contract given inline, or the path of a file holding one."""
    if os.path.isfile(text):
        text = _read(text)
    return parse_contract(text.strip())


def _emit(args, data: dict, text: str):
    if getattr(args, "json", False):
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(text)


def _load(args):
    src = parse_system(_read(args.file))
    state = src.initial()
    if getattr(args, "script", None):
        trace = simulate(state, src.definitions, "fixed-script", max_steps=len(args.script), script=args.script)
        state = trace.final
    return src, state


def _session_of(state, name: str) -> C.BilateralContract:
    g = state.session(Name(name))
    if g is None:
        known = ", ".join(n.name for n, _ in state.sessions) or "none"
        raise UsageError(f"no session {name} in the system (sessions: {known})")
    return g


def _split_script(text: str | None) -> list[str] | None:
    if text is None:
        return None
    if os.path.isfile(text):
        text = _read(text)
    return [s.strip() for s in text.replace("\n", ",").split(",") if s.strip()]


# -- commands ------------------------------------------------------------------------


def cmd_parse(args) -> int:
    src = parse_system(_read(args.file))
    out = render_file(src)
    data = {
        "contracts": {k: render_contract(c) for k, c in src.contracts.items()},
        "definitions": sorted(src.definitions),
        "system": render(src.initial()) if src.system is not None else None,
    }
    _emit(args, data, out)
    return 0


def cmd_compliance(args) -> int:
    c, d = _contract_arg(args.c), _contract_arg(args.d)
    res = C.is_compliant(c, d, _state_cap(C.DEFAULT_STATE_CAP))
    if res.compliant:
        _emit(args, {"compliant": True, "witness": None}, "compliant")
        return 0
    g = C.BilateralContract.of("A", c, "B", d)
    states = [render_bilateral(g)]
    for lab in res.witness:
        g = C.step(g, lab)
        states.append(render_bilateral(g))
    labels = [str(lab) for lab in res.witness]
    lines = ["not compliant", f"  {states[0]}"]
    lines += [f"  --{lab}--> {st}" for lab, st in zip(labels, states[1:])]
    _emit(args, {"compliant": False, "witness": {"labels": labels, "states": states}}, "\n".join(lines))
    return 1


def cmd_dual(args) -> int:
    d = C.dual(_contract_arg(args.c))
    _emit(args, {"dual": render_contract(d)}, render_contract(d))
    return 0


def cmd_culpable(args) -> int:
    _, state = _load(args)
    g = _session_of(state, args.session)
    culprits = [p for p in sorted(g.participants) if C.is_culpable(g, p)]
    _emit(
        args,
        {"session": args.session, "contract": render_bilateral(g), "culpable": culprits},
        "\n".join(culprits) if culprits else "(none)",
    )
    return 0


def cmd_exculpate(args) -> int:
    _, state = _load(args)
    g = _session_of(state, args.session)
    if args.participant not in g.participants:
        raise UsageError(f"{args.participant} is not a party of session {args.session}")
    trace = C.exculpate(g, args.participant)
    labels = [str(lab) for lab in trace]
    _emit(args, {"session": args.session, "participant": args.participant, "trace": labels},
          "\n".join(labels) if labels else "(already not culpable)")
    return 0


def cmd_simulate(args) -> int:
    src = parse_system(_read(args.file))
    if args.policy == "fixed-script" and not args.script:
        raise UsageError("--policy fixed-script needs --script")
    if args.policy == "participant-solo" and not args.participant:
        raise UsageError("--policy participant-solo needs --participant")
    steps = args.steps
    if args.policy == "fixed-script" and steps is None:
        steps = len(args.script)
    trace = simulate(
        src.initial(), src.definitions, args.policy, steps or 100, args.seed, args.script, args.participant,
        frontier=_state_cap(10_000),
    )
    lines = [str(trace.states[0])]
    for lab, st in zip(trace.labels, trace.states[1:]):
        lines.append(f"--{lab}-->")
        lines.append(str(st))
    culprits = [f"{p} in {s}" for i, s, p, c in trace.culpability if c and i == len(trace.states) - 1]
    lines.append("culpable: " + (", ".join(culprits) if culprits else "none"))
    _emit(args, trace.to_json(), "\n".join(lines))
    return 0


def cmd_ltl(args) -> int:
    text = _read(args.file)
    phi = parse_formula(args.phi)
    try:
        src = parse_system(text)
    except ParseError:
        src = None
    if src is not None and src.system is not None:
        if not args.session:
            raise UsageError("--session is required for a system file")
        _, state = _load(args)
        g = _session_of(state, args.session)
    else:
        g = parse_bilateral(text.strip())
    ok = ltl_holds(g, phi, _state_cap(C.DEFAULT_STATE_CAP))
    _emit(args, {"holds": ok, "contract": render_bilateral(g), "formula": args.phi}, "true" if ok else "false")
    return 0 if ok else 1


def cmd_check_honesty(args) -> int:
    src = parse_system(_read(args.file))
    p = src.box_process(args.participant)
    v = check_sharp_honesty(args.participant, p, src.definitions, _state_cap(DEFAULT_ABSTRACT_CAP))
    lines = [v.status]
    for r in v.reasons:
        detail = ", ".join(f"{k}={json.dumps(val)}" for k, val in r.items() if k != "kind")
        lines.append(f"  {r['kind']}: {detail}")
    _emit(args, v.to_json(), "\n".join(lines))
    return v.exit_code


# -- wiring ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="co2", description="Contracts, processes and honesty checking.")
    ap.add_argument("--jobs", type=int, default=1, help="worker count (output is identical for any value)")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = add("parse", cmd_parse, "parse a .co2 file and print it in canonical form")
    p.add_argument("file")

    p = add("compliance", cmd_compliance, "check two contracts for compliance (exit 1 with a witness if not)")
    p.add_argument("c", help="contract text or file")
    p.add_argument("d", help="contract text or file")

    p = add("dual", cmd_dual, "print the dual of a contract")
    p.add_argument("c", help="contract text or file")

    for name, fn, help_ in (
        ("culpable", cmd_culpable, "list the culpable parties of a session"),
        ("exculpate", cmd_exculpate, "shortest solo trace that makes a participant not culpable"),
    ):
        p = add(name, fn, help_)
        p.add_argument("file")
        p.add_argument("--session", required=True)
        p.add_argument("--script", type=_split_script, help="steps to replay first (comma-separated or a file)")
        if name == "exculpate":
            p.add_argument("--participant", required=True)

    p = add("simulate", cmd_simulate, "run the system under a scheduling policy")
    p.add_argument("file")
    p.add_argument("--policy", choices=POLICIES, default="seeded-random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=None, help="maximum number of steps (default 100)")
    p.add_argument("--script", type=_split_script, help="steps for fixed-script (comma-separated or a file)")
    p.add_argument("--participant", help="participant for participant-solo")

    p = add("ltl", cmd_ltl, "evaluate an LTL formula on a session (exit 0 if it holds, 1 otherwise)")
    p.add_argument("file", help="a .co2 file, or a file holding one bilateral contract")
    p.add_argument("--session")
    p.add_argument("--phi", required=True)
    p.add_argument("--script", type=_split_script, help="steps to replay first")

    p = add("check-honesty", cmd_check_honesty, "static honesty check (exit 0 pass, 1 fail, 2 unsupported)")
    p.add_argument("file")
    p.add_argument("--participant", required=True)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.jobs < 1:
        ap.error("--jobs must be at least 1")
    if getattr(args, "steps", None) is not None and args.steps <= 0:
        ap.error("--steps must be positive")
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"co2: {e}", file=sys.stderr)
        return EX_USAGE
    except ScriptError as e:
        print(f"co2: {e}", file=sys.stderr)
        return EX_USAGE
    except (ParseError, C.ContractError, ProcessError) as e:
        print(f"co2: {e}", file=sys.stderr)
        return EX_DATAERR
    except (C.StateCapExceeded, AbstractCapExceeded) as e:
        print(f"co2: {e} (raise CO2_STATE_CAP to explore further)", file=sys.stderr)
        return EX_SOFTWARE
    except (AssertionError, RuntimeError) as e:
        print(f"co2: internal error: {e}", file=sys.stderr)
        return EX_SOFTWARE


if __name__ == "__main__":
    sys.exit(main())
