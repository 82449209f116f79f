"""Verification records for bounds and reference values, and their JSON/CSV reports."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .comb import ProcessTensor
from .optimize import OptimizerConfig
from .protocols import ProtocolReport, gap_report
from .rand import random_state
from .scenarios import SCENARIOS, expected_values, scenario
from .serialization import parse_process, serialize_process
from .thermo import ThermalContext, lemma_s2_bound

FIELDS = ("id", "lhs", "rhs", "margin", "tol", "pass", "seed", "digest", "kind", "provenance")

CHECK_GROUPS = ("expected", "hierarchy", "bounds", "brackets", "lemma_s2")

# tolerance for each reference quantity, matched to how it is computed
EXPECTED_TOL = {
    "w_seq": 1e-6,
    "w_joint": 1e-3,
    "w_global": 1e-3,
    "d_wi": 2e-3,
    "w_comb": 1e-6,
    "nm": 2e-3,
}
SATURATION_TOL = 3e-3
LEMMA_SAMPLES = 1000

_GROUP_OF = {
    "hierarchy_seq_joint": "hierarchy",
    "hierarchy_joint_global": "hierarchy",
    "hierarchy_global_comb": "hierarchy",
    "comb_bracket": "brackets",
}


@dataclass(frozen=True)
class VerificationRecord:
    id: str
    lhs: float
    rhs: float
    tol: float
    kind: str = "le"
    seed: int = 0
    digest: str = ""
    provenance: str = ""

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if self.kind == "value":
            return True
        if math.isnan(self.lhs) or math.isnan(self.rhs):
            return False
        if self.kind == "eq":
            return abs(self.lhs - self.rhs) <= self.tol
        if self.kind == "ge":
            return self.lhs >= self.rhs - self.tol
        return self.lhs <= self.rhs + self.tol

    def row(self) -> dict:
        return {"id": self.id, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin, "tol": self.tol,
                "pass": self.passed, "seed": self.seed, "digest": self.digest, "kind": self.kind,
                "provenance": self.provenance}


# ---------------------------------------------------------------------------
# targets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Target:
    process: ProcessTensor
    ctx: ThermalContext
    scenario: str | None
    source: bytes


def resolve_target(target: str | ProcessTensor, energy: float = 1.0, temperature: float = 1.0,
                   steps: int | None = None, seed: int = 0) -> Target:
    """A scenario name, a path to a process file, or a process object."""
    if isinstance(target, ProcessTensor):
        p, name = target, None
    elif target in SCENARIOS:
        p, name = scenario(target, energy, temperature, steps, seed), target
    elif os.path.isfile(target):
        with open(target, "rb") as fh:
            p, name = parse_process(fh.read()), None
    else:
        raise ValueError(f"{target!r} is neither a scenario ({', '.join(sorted(SCENARIOS))}) nor a process file")
    meta = p.metadata
    diag = meta.get("hamiltonian_diag")
    if name is None and diag is not None:
        h = np.diag(np.asarray(diag, dtype=float)).astype(complex)
    else:
        h = np.diag(energy * np.arange(p.sys_dim, dtype=float)).astype(complex)
    temp = float(meta.get("temperature", temperature)) if name is None else temperature
    ctx = ThermalContext(h, temp)
    src = serialize_process(p, np.real(np.diag(h)), temp)
    return Target(p, ctx, name, src)


def digest(source: bytes, check_id: str, opt: OptimizerConfig) -> str:
    h = hashlib.sha256(source)
    h.update(json.dumps([check_id, opt.restarts, opt.max_iters, opt.seed, opt.tol, opt.method,
                         opt.ancilla_dim]).encode())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# record builders
# ---------------------------------------------------------------------------


def protocol_values(rep: ProtocolReport) -> dict[str, float]:
    return {
        "w_seq": rep.w_seq.value,
        "w_joint": rep.w_joint.value,
        "w_global": rep.w_global.value,
        "w_comb_lower": rep.w_comb.lower.value,
        "w_comb_upper": rep.w_comb.upper,
        "d_wi": rep.gaps["d_wi"],
        "d_mtc": rep.gaps["d_mtc"],
        "d_sec_lower": rep.gaps["d_sec"].lower,
        "d_sec_upper": rep.gaps["d_sec"].upper,
        "d_n_lower": rep.gaps["d_n"].lower,
        "d_n_upper": rep.gaps["d_n"].upper,
        "nm_lower": rep.nm.lower,
        "nm_upper": rep.nm.upper,
    }


def expected_records(t: Target, rep: ProtocolReport, energy: float, temperature: float) -> list[tuple]:
    """``(id, lhs, rhs, tol, kind, provenance)`` for each reference value of a scenario."""
    if t.scenario is None:
        return []
    vals = protocol_values(rep)
    out = []
    for key, (ref, kind, prov) in expected_values(t.scenario, energy, temperature, t.process.steps).items():
        tol = EXPECTED_TOL[key]
        if key in ("w_comb", "nm"):
            sides = {"eq": ("lower", "upper"), "ge": ("lower",), "le": ("upper",)}[kind]
            for side in sides:
                out.append((f"expected:{key}_{side}", vals[f"{key}_{side}"], ref, tol, kind, prov))
        else:
            out.append((f"expected:{key}", vals[key], ref, tol, kind, prov))
    for name in SCENARIOS[t.scenario].saturates:
        c = rep.check(name)
        out.append((f"saturation:{name}", c.lhs, c.rhs, SATURATION_TOL, "eq", "bound attained"))
    return out


def lemma_s2_samples(count: int = LEMMA_SAMPLES, dim: int = 2, seed: int = 0) -> list[tuple[float, float]]:
    """Both sides of the continuity bound on seeded random quadruples.

    Pure ``tau`` is avoided so the right-hand side stays finite; states near
    each other are mixed in to probe the small-distance regime.
    """
    rng = np.random.default_rng([seed, 5151])
    out = []
    for k in range(count):
        sigma = random_state(dim, rng)
        tau = random_state(dim, rng)
        rho1 = random_state(dim, rng, rank=1 + k % dim)
        if k % 3 == 0:
            # close pair
            eps = 10.0 ** rng.uniform(-6, -1)
            rho2 = (1 - eps) * rho1 + eps * random_state(dim, rng)
        elif k % 3 == 1:
            # both close to tau
            eps = 10.0 ** rng.uniform(-4, 0)
            rho1 = (1 - eps) * tau + eps * rho1
            rho2 = (1 - eps) * tau + eps * random_state(dim, rng)
        else:
            rho2 = random_state(dim, rng)
        out.append(lemma_s2_bound(rho1, rho2, sigma, tau))
    return out


def verify_suite(target: str | ProcessTensor, checks: Sequence[str] | None = None,
                 opt: OptimizerConfig = OptimizerConfig(), energy: float = 1.0, temperature: float = 1.0,
                 steps: int | None = None, report: ProtocolReport | None = None) -> list[VerificationRecord]:
    """One record per check on ``target``; ``checks`` selects groups from :data:`CHECK_GROUPS`."""
    groups = tuple(CHECK_GROUPS if checks is None else checks)
    bad = set(groups) - set(CHECK_GROUPS)
    if bad:
        raise ValueError(f"unknown check groups {sorted(bad)}; choose from {CHECK_GROUPS}")
    t = resolve_target(target, energy, temperature, steps, opt.seed)
    rows: list[tuple] = []
    if set(groups) - {"lemma_s2"}:
        rep = report or gap_report(t.process, t.ctx, opt)
        if "expected" in groups:
            rows += expected_records(t, rep, energy, temperature)
        for c in rep.checks:
            if _GROUP_OF.get(c.name, "bounds") in groups:
                rows.append((c.name, c.lhs, c.rhs, c.tol, "le", c.note))
        if "brackets" in groups:
            rows.append(("nm_bracket", rep.nm.lower, rep.nm.upper, 1e-9, "le", ""))
    if "lemma_s2" in groups:
        samples = lemma_s2_samples(LEMMA_SAMPLES, t.process.sys_dim, opt.seed)
        worst = max(l - r for l, r in samples)
        rows.append(("lemma_s2", worst, 0.0, 0.0, "le", f"largest lhs - rhs over {len(samples)} samples"))
    return [VerificationRecord(i, float(l), float(r), float(tol), kind, opt.seed, digest(t.source, i, opt), prov)
            for i, l, r, tol, kind, prov in rows]


def value_records(t: Target, values: dict[str, float], opt: OptimizerConfig,
                  provenance: str = "computed") -> list[VerificationRecord]:
    return [VerificationRecord(k, float(v), float(v), 0.0, "value", opt.seed, digest(t.source, k, opt), provenance)
            for k, v in values.items()]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _real(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(format(x, ".12g"))


def _fmt(x: float) -> str:
    v = _real(x)
    return v if isinstance(v, str) else format(v, ".12g")


def emit_report(records: Iterable[VerificationRecord], fmt: str = "json") -> bytes:
    """Serialize records with a fixed field order and reals at 12 significant digits."""
    rows = [r.row() for r in records]
    if fmt == "json":
        doc = {"records": [{k: (_real(v) if isinstance(v, float) else v) for k, v in row.items()} for row in rows]}
        return (json.dumps(doc, indent=2, allow_nan=False) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else (str(v).lower() if isinstance(v, bool) else v)
                        for v in (row[f] for f in FIELDS)])
        return buf.getvalue().encode()
    raise ValueError(f"unknown report format {fmt!r}; use json or csv")


def exit_status(records: Iterable[VerificationRecord]) -> int:
    return 0 if all(r.passed for r in records) else 1

