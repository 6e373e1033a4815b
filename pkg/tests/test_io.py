import json
from fractions import Fraction as F
from pathlib import Path

import pytest

from groupsde.corpus import cyclic_group, quaternion_group
from groupsde.errors import ValidationError
from groupsde.io import (
    SpecError,
    group_to_doc,
    load_automorphism,
    load_group,
    load_measure,
    measure_to_doc,
)
from groupsde.measures import RationalMeasure

SPECS = Path(__file__).resolve().parents[1] / "specs"


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=1))
    return path


def test_load_shipped_group():
    group, autos = load_group(SPECS / "z4.json")
    assert group.order == 4 and group.name == "Z4"
    assert autos["neg"].map == (0, 3, 2, 1)


def test_group_round_trip(tmp_path):
    q8 = quaternion_group()
    group, autos = load_group(write(tmp_path, "q8.json", group_to_doc(q8)))
    assert group.same_as(q8) and autos == {}


def test_flat_cayley(tmp_path):
    doc = {"order": 3, "identity": 0, "cayley": [(i + j) % 3 for i in range(3) for j in range(3)]}
    group, _ = load_group(write(tmp_path, "z3.json", doc))
    assert group.same_as(cyclic_group(3))


@pytest.mark.parametrize(
    "doc,reason",
    [
        ({"order": 2, "identity": 0, "cayley": [[0, 1], [0, 1]]}, "not_latin_square"),
        ({"order": 2, "identity": 0, "cayley": [[0, 1]]}, "spec_shape"),
        ({"order": 2, "identity": 0}, "spec_missing_field"),
        ({"order": 2, "identity": 0, "cayley": [[0, 1], [1, 0]], "colour": 1}, "spec_unknown_field"),
        ({"order": 2, "identity": 0, "cayley": [[0, 1], [1, 0]], "automorphisms": {"bad": [1, 0]}}, "not_homomorphism"),
    ],
)
def test_group_spec_errors(tmp_path, doc, reason):
    with pytest.raises(SpecError) as info:
        load_group(write(tmp_path, "g.json", doc))
    assert info.value.reason == reason
    assert "g.json" in str(info.value)


def test_malformed_json_reports_line(tmp_path):
    path = write(tmp_path, "g.json", '{"order": 2,\n "identity": 0,\n "cayley": [[0, 1], [1 0]]}')
    with pytest.raises(SpecError) as info:
        load_group(path)
    assert info.value.line == 3 and info.value.reason == "spec_syntax"


def test_automorphism_resolution(tmp_path):
    group, autos = load_group(SPECS / "z4.json")
    assert load_automorphism("id", group, autos).is_identity()
    assert load_automorphism(None, group, autos).is_identity()
    assert load_automorphism("neg", group, autos) is autos["neg"]
    assert load_automorphism(str(SPECS / "z4_neg.json"), group).map == (0, 3, 2, 1)
    with pytest.raises(SpecError, match="known"):
        load_automorphism("nope", group, autos)
    with pytest.raises(ValidationError):
        load_automorphism(str(write(tmp_path, "a.json", {"map": [0, 2, 1, 3]})), group)


def test_measure_formats(tmp_path):
    z4 = cyclic_group(4)
    expected = RationalMeasure.from_dict(z4, {1: F(1, 2), 3: F(1, 2)})
    assert load_measure(SPECS / "z4_uniform_1_3.json", z4) == expected
    wrapped = write(tmp_path, "m.json", {"weights": [[1, "1/2"], [3, "1/2"]]})
    assert load_measure(wrapped, z4) == expected
    # repeated indices are summed
    split = write(tmp_path, "s.json", [[1, "1/4"], [3, "1/2"], [1, "1/4"]])
    assert load_measure(split, z4) == expected
    assert measure_to_doc(expected) == [[1, "1/2"], [3, "1/2"]]


def test_measure_not_summing_to_one():
    with pytest.raises(SpecError) as info:
        load_measure(SPECS / "z4_bad_sum.json", cyclic_group(4))
    assert info.value.reason == "invalid_measure"
    assert "3/2" in str(info.value)


def test_measure_negative_weight_line(tmp_path):
    path = write(tmp_path, "m.json", '[\n  [0, "3/2"],\n  [1, "-1/2"]\n]\n')
    with pytest.raises(SpecError) as info:
        load_measure(path, cyclic_group(4))
    assert info.value.line == 3
    assert "-1/2" in str(info.value)


@pytest.mark.parametrize(
    "pairs",
    [[[0, 0.5], [1, "1/2"]], [[7, "1"]], [[0, "1/0"]], [[0, "1/2", 3]], [["a", "1"]]],
)
def test_measure_entry_errors(tmp_path, pairs):
    with pytest.raises(SpecError) as info:
        load_measure(write(tmp_path, "m.json", pairs), cyclic_group(4))
    assert info.value.reason == "invalid_measure"
    assert "entry" in str(info.value)
