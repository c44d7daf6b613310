"""
Tests for the channel file codec
"""

import json
import math

import numpy as np
import numpy.testing as npt
import pytest

from conftest import bit_flip
from seqmetrology.channel_io import (
    decode_matrix,
    dumps_json,
    encode_matrix,
    load_channel_file,
    load_json,
    load_matrix_file,
    parse_channel_file,
    to_jsonable,
    write_channel_file,
)
from seqmetrology.channels import DerivativeKind, derivative, kraus_to_transition
from seqmetrology.conditions import HlStatus, HnksStatus
from seqmetrology.errors import MalformedInput, NotCPTP
from seqmetrology.scenarios import qutrit_decay, qutrit_input_state


def _transition_json(ch):
    return encode_matrix(kraus_to_transition(ch).t)


def test_scenario_file_reloads(tmp_path):
    pc = qutrit_decay(0.1)
    rho0 = qutrit_input_state(0.9)
    path = write_channel_file(tmp_path / "qutrit.json", pc, rho0)
    loaded = load_channel_file(path)
    assert loaded.channel.name == "qutrit"
    assert loaded.channel.theta0 == pytest.approx(0.1)
    npt.assert_allclose(loaded.channel.at(0.1).t, pc.at(0.1).t, atol=1e-15)
    npt.assert_allclose(derivative(loaded.channel), derivative(pc), atol=1e-15)
    npt.assert_allclose(loaded.rho0.rho, rho0.rho, atol=1e-15)
    assert len(loaded.kraus.kraus_ops) == 5
    assert len(loaded.kraus_dots) == 5


def test_file_without_tdot_uses_samples():
    data = {
        "dim": 2,
        "theta0": 0.2,
        "samples": [
            {"theta": 0.1, "transition": _transition_json(bit_flip(0.1))},
            {"theta": 0.2, "transition": _transition_json(bit_flip(0.2))},
            {"theta": 0.3, "transition": _transition_json(bit_flip(0.3))},
        ],
    }
    pc = parse_channel_file(data).channel
    assert pc.derivative_mode.kind is DerivativeKind.CENTRAL
    slope = kraus_to_transition(bit_flip(1.0)).t - kraus_to_transition(bit_flip(0.0)).t
    npt.assert_allclose(derivative(pc), slope, atol=1e-12)


def test_kraus_representation_is_static():
    pc = parse_channel_file({"dim": 2, "kraus_ops": [encode_matrix(m) for m in bit_flip(0.3).kraus_ops]}).channel
    assert np.linalg.norm(derivative(pc)) == 0


def test_exactly_one_representation():
    t = _transition_json(bit_flip(0.1))
    with pytest.raises(MalformedInput):
        parse_channel_file({"dim": 2})
    with pytest.raises(MalformedInput):
        parse_channel_file({"dim": 2, "transition": t, "kraus_ops": [encode_matrix(np.eye(2))]})


def test_broken_channels_are_rejected():
    with pytest.raises(NotCPTP):
        parse_channel_file({"dim": 2, "transition": encode_matrix(2 * np.eye(4))})
    with pytest.raises(NotCPTP):
        parse_channel_file({"dim": 2, "kraus_ops": [encode_matrix(np.eye(2)), encode_matrix(np.eye(2))]})


def test_kraus_sidecar_must_match_transition():
    data = {
        "dim": 2,
        "transition": encode_matrix(np.eye(4)),
        "kraus": [encode_matrix(m) for m in bit_flip(0.3).kraus_ops],
    }
    with pytest.raises(MalformedInput, match="disagrees"):
        parse_channel_file(data)


def test_header_and_payload_errors():
    t = _transition_json(bit_flip(0.1))
    with pytest.raises(MalformedInput):
        parse_channel_file([1, 2])
    with pytest.raises(MalformedInput):
        parse_channel_file({"transition": t})
    with pytest.raises(MalformedInput):
        parse_channel_file({"dim": 2, "transition": t, "rho0": encode_matrix(np.eye(3) / 3)})
    with pytest.raises(MalformedInput):
        parse_channel_file({"dim": 2, "transition": t, "kraus_dots": [encode_matrix(np.eye(2))]})
    with pytest.raises(MalformedInput, match="unusable"):
        parse_channel_file({"dim": 2, "samples": [{"theta": 0.0, "transition": t}]})


def test_decode_accepts_reals_and_pairs():
    npt.assert_array_equal(decode_matrix([[1, [0, 2]], [0.5, [3, -1]]]), [[1, 2j], [0.5, 3 - 1j]])
    with pytest.raises(MalformedInput):
        decode_matrix([[1, 2], [3]])
    with pytest.raises(MalformedInput):
        decode_matrix([["a"]])


def test_load_json_errors(tmp_path):
    with pytest.raises(MalformedInput, match="not found"):
        load_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(MalformedInput, match="invalid JSON"):
        load_json(bad)


def test_load_matrix_file(tmp_path):
    bare = tmp_path / "bare.json"
    bare.write_text(json.dumps([[0, 1], [0, 0]]))
    wrapped = tmp_path / "wrapped.json"
    wrapped.write_text(json.dumps({"r0": encode_matrix(np.diag([1, -1]))}))
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    npt.assert_array_equal(load_matrix_file(bare), [[0, 1], [0, 0]])
    npt.assert_array_equal(load_matrix_file(wrapped), np.diag([1, -1]))
    with pytest.raises(MalformedInput):
        load_matrix_file(empty)


def test_json_output_is_deterministic():
    data = {"b": HlStatus.ACHIEVABLE, "a": [np.float64(1.5), 1 + 2j], "c": np.eye(2) * 1j}
    text = dumps_json(data)
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == to_jsonable(data)
    assert to_jsonable(data) == {
        "a": [1.5, [1.0, 2.0]],
        "b": "Achievable",
        "c": [[[0.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]],
    }
    assert to_jsonable(HnksStatus.ILL_DEFINED) == "IllDefined"
    assert to_jsonable(np.arange(3)) == [0, 1, 2]
    assert to_jsonable(math.pi) == math.pi
