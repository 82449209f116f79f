from __future__ import annotations

import json

import numpy as np
import pytest

from combworks.comb import ProcessTensor
from combworks.scenarios import fig2b, random_process, scenario
from combworks.serialization import VERSION, ProcessFormatError, parse_process, serialize_process


def test_round_trip_is_exact():
    p = random_process(2, 2, 2, 17)
    q = parse_process(serialize_process(p))
    assert np.array_equal(p.choi, q.choi)
    assert (q.steps, q.sys_dim) == (2, 2)


def test_bytes_are_reproducible():
    assert serialize_process(random_process(2, 2, 2, 4)) == serialize_process(random_process(2, 2, 2, 4))
    data = serialize_process(scenario("fig2b"))
    assert serialize_process(parse_process(data)) == data


def test_metadata_round_trip():
    data = serialize_process(fig2b(), hamiltonian_diag=[0.0, 1.0], temperature=2.0)
    doc = json.loads(data)
    assert doc["version"] == VERSION
    assert doc["metadata"]["temperature"] == 2.0
    assert parse_process(data).metadata["hamiltonian_diag"] == [0.0, 1.0]


def _doc():
    return json.loads(serialize_process(random_process(2, 2, 2, 1)))


def test_unknown_version_rejected():
    doc = _doc()
    doc["version"] = "combworks-process-v2"
    with pytest.raises(ProcessFormatError, match="version"):
        parse_process(json.dumps(doc))


def test_malformed_rejected():
    with pytest.raises(ProcessFormatError):
        parse_process(b"{not json")
    doc = _doc()
    doc["choi_re"] = doc["choi_re"][:-1]
    with pytest.raises(ProcessFormatError):
        parse_process(json.dumps(doc))
    doc = _doc()
    del doc["n"]
    with pytest.raises(ProcessFormatError):
        parse_process(json.dumps(doc))


def test_causality_violation_named():
    # product of a maximally mixed-output map on step 1 and signalling from o2 back into i1
    c = np.zeros((16, 16))
    c[np.diag_indices(16)] = 0.25
    c[0, 0] = 1.0  # breaks the trace condition on the top level
    c[15, 15] = 0.0
    doc = _doc()
    doc["choi_re"] = c.ravel().tolist()
    doc["choi_im"] = [0.0] * 256
    with pytest.raises(ProcessFormatError, match="causality violated at level"):
        parse_process(json.dumps(doc))
    # validation can be skipped
    p = parse_process(json.dumps(doc), validate=False)
    assert isinstance(p, ProcessTensor)
