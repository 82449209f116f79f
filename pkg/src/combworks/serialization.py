"""Text format ``combworks-process-v1`` for process tensors.

A JSON document::

    {"version": "combworks-process-v1", "n": 2, "sys_dim": 2,
     "space_order": "in-out-interleaved",
     "choi_re": [...], "choi_im": [...],
     "metadata": {"name": ..., "hamiltonian_diag": [...], "temperature": ...}}

Matrix entries are row-major and printed with 17 significant digits, which
round-trips IEEE doubles exactly. Parsing validates the comb and rejects
unknown versions.
"""
from __future__ import annotations

import json

import numpy as np

from .comb import ProcessTensor, validate_comb

VERSION = "combworks-process-v1"
SPACE_ORDER = "in-out-interleaved"


class ProcessFormatError(ValueError):
    pass


def _reals(values) -> str:
    return "[" + ", ".join(format(float(v), ".17g") for v in values) + "]"


def serialize_process(p: ProcessTensor, hamiltonian_diag=None, temperature: float | None = None) -> bytes:
    meta = dict(p.metadata)
    meta.setdefault("name", p.name)
    if hamiltonian_diag is not None:
        meta["hamiltonian_diag"] = [float(x) for x in hamiltonian_diag]
    if temperature is not None:
        meta["temperature"] = float(temperature)
    flat = p.choi.reshape(-1)
    head = json.dumps({"version": VERSION, "n": p.steps, "sys_dim": p.sys_dim, "space_order": SPACE_ORDER})
    text = (head[:-1]
            + ', "choi_re": ' + _reals(flat.real)
            + ', "choi_im": ' + _reals(flat.imag)
            + ', "metadata": ' + json.dumps(meta, sort_keys=True)
            + "}\n")
    return text.encode("utf-8")


def parse_process(data: bytes | str, validate: bool = True) -> ProcessTensor:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProcessFormatError(f"malformed process document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProcessFormatError("process document must be a JSON object")
    if doc.get("version") != VERSION:
        raise ProcessFormatError(f"unsupported version {doc.get('version')!r}")
    if doc.get("space_order") != SPACE_ORDER:
        raise ProcessFormatError(f"unsupported space order {doc.get('space_order')!r}")
    try:
        n, d = int(doc["n"]), int(doc["sys_dim"])
        re = np.asarray(doc["choi_re"], dtype=float)
        im = np.asarray(doc["choi_im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProcessFormatError(f"malformed process document: {exc}") from exc
    dim = d ** (2 * n)
    if re.size != dim * dim or im.size != dim * dim:
        raise ProcessFormatError(f"choi has {re.size} entries, expected {dim * dim}")
    meta = doc.get("metadata") or {}
    p = ProcessTensor(n, d, (re + 1j * im).reshape(dim, dim), None, meta.get("name", ""), meta)
    if validate:
        rep = validate_comb(p)
        if not rep.passed:
            if rep.failed_levels:
                lvl = rep.failed_levels[-1]
                raise ProcessFormatError(
                    f"causality violated at level {lvl} (residual {rep.residuals[lvl - 1]:.3e})")
            raise ProcessFormatError(f"choi is not positive semidefinite/Hermitian (min eig {rep.psd_min:.3e})")
    return p
