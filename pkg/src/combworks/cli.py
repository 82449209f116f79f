"""Command-line entry point: ``combworks {work,nm,verify,random,export}``."""
from __future__ import annotations

import argparse
import sys

from .nonmarkov import nm_bracket
from .optimize import OptimizerConfig
from .protocols import gap_report
from .rand import as_rng
from .scenarios import SCENARIOS, random_process, scenario
from .serialization import serialize_process
from .verify import (
    CHECK_GROUPS,
    VerificationRecord,
    digest,
    emit_report,
    exit_status,
    expected_records,
    protocol_values,
    resolve_target,
    value_records,
    verify_suite,
)

DEFAULTS = dict(energy=1.0, temperature=1.0, steps=None, seed=42, restarts=32, tol=1e-6, format="json",
                ancilla_dim=None, out=None, checks=None, sys_dim=2, env_dim=2, env_init="random")
_TYPES = dict(energy=float, temperature=float, steps=int, seed=int, restarts=int, tol=float, format=str,
              ancilla_dim=int, out=str, checks=str, sys_dim=int, env_dim=int, env_init=str)


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment, dashes and underscores are interchangeable."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _TYPES:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _TYPES[key](value)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # defaults are None so that config-file values can be told apart from flags
    common.add_argument("--energy", type=float, help="excited-level energy E (default 1)")
    common.add_argument("--temperature", type=float, help="temperature kT (default 1)")
    common.add_argument("--steps", type=int, help="number of steps n where the target allows it")
    common.add_argument("--seed", type=int, help="optimizer and ensemble seed (default 42)")
    common.add_argument("--restarts", type=int, help="multi-start budget (default 32)")
    common.add_argument("--tol", type=float, help="optimizer tolerance (default 1e-6)")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    common.add_argument("--ancilla-dim", type=int, help="ancilla dimension of searched strategies (default d^2)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--config", help="key = value file mirroring the flags; flags take precedence")

    ap = argparse.ArgumentParser(prog="combworks", description="Work extraction from multitime quantum processes.")
    sub = ap.add_subparsers(dest="command", required=True)
    targets = f"scenario name ({', '.join(SCENARIOS)}) or process file"
    p = sub.add_parser("work", parents=[common], help="run the four extraction protocols")
    p.add_argument("target", help=targets)
    p = sub.add_parser("nm", parents=[common], help="bracket the non-Markovianity")
    p.add_argument("target", help=targets)
    p = sub.add_parser("verify", parents=[common], help="check bounds and reference values")
    p.add_argument("target", help=targets)
    p.add_argument("--checks", help=f"comma-separated subset of {','.join(CHECK_GROUPS)}")
    p = sub.add_parser("random", parents=[common], help="write a random system-environment process")
    p.add_argument("--sys-dim", type=int)
    p.add_argument("--env-dim", type=int)
    p.add_argument("--env-init", choices=("random", "thermal"))
    p = sub.add_parser("export", parents=[common], help="write a scenario as a process file")
    p.add_argument("scenario", choices=sorted(SCENARIOS))
    return ap


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    return settings


def _config(s: dict) -> OptimizerConfig:
    return OptimizerConfig(restarts=s["restarts"], seed=s["seed"], tol=s["tol"], ancilla_dim=s["ancilla_dim"])


def _write(data: bytes, out: str | None) -> None:
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())


def _work(args, s) -> int:
    opt = _config(s)
    t = resolve_target(args.target, s["energy"], s["temperature"], s["steps"], s["seed"])
    rep = gap_report(t.process, t.ctx, opt)
    records = value_records(t, protocol_values(rep), opt)
    for i, lhs, rhs, tol, kind, prov in expected_records(t, rep, s["energy"], s["temperature"]):
        records.append(VerificationRecord(i, lhs, rhs, tol, kind, opt.seed, digest(t.source, i, opt), prov))
    _write(emit_report(records, s["format"]), s["out"])
    return exit_status(records)


def _nm(args, s) -> int:
    opt = _config(s)
    t = resolve_target(args.target, s["energy"], s["temperature"], s["steps"], s["seed"])
    br = nm_bracket(t.process, t.ctx, opt)
    vals = dict(nm_lower=br.lower, nm_upper=br.upper, nm_exact=float(br.exact))
    records = value_records(t, vals, opt, "upper side is heuristic" if br.heuristic_upper else "computed")
    records.append(VerificationRecord("nm_bracket", br.lower, br.upper, 1e-9, "le", opt.seed,
                                      digest(t.source, "nm_bracket", opt)))
    _write(emit_report(records, s["format"]), s["out"])
    return exit_status(records)


def _verify(args, s) -> int:
    checks = None if not s["checks"] else [c.strip() for c in s["checks"].split(",") if c.strip()]
    records = verify_suite(args.target, checks, _config(s), s["energy"], s["temperature"], s["steps"])
    _write(emit_report(records, s["format"]), s["out"])
    return exit_status(records)


def _random(args, s) -> int:
    n = s["steps"] or 2
    p = random_process(n, s["sys_dim"], s["env_dim"], as_rng(s["seed"]), s["env_init"], s["energy"],
                       s["temperature"])
    diag = [s["energy"] * k for k in range(s["sys_dim"])]
    _write(serialize_process(p, diag, s["temperature"]), s["out"])
    return 0


def _export(args, s) -> int:
    p = scenario(args.scenario, s["energy"], s["temperature"], s["steps"], s["seed"])
    _write(serialize_process(p), s["out"])
    return 0


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        s = resolve_settings(args)
        handler = {"work": _work, "nm": _nm, "verify": _verify, "random": _random, "export": _export}[args.command]
        return handler(args, s)
    except (ValueError, OSError) as exc:
        print(f"combworks: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
