import json

import pytest

from twistorkit.bundles import line_sum
from twistorkit.cli import main
from twistorkit.errors import SchemaError, UsageError
from twistorkit.jsonio import (
    SCHEMA,
    decode_bundle,
    decode_bundle_family,
    decode_laurent,
    decode_matrix,
    decode_scalar,
    decode_section,
    decode_twistor_data,
    dumps,
    encode_bundle,
    encode_laurent,
    encode_scalar,
    encode_section,
    encode_twistor_data,
    load_document,
    parse_laurent_text,
    parse_scalar_text,
    require,
    to_jsonable,
)
from twistorkit.laurent import LaurentMatrix, LaurentPoly
from twistorkit.linalg import is_zero_matrix
from twistorkit.scalars import EXACT, FLOAT
from twistorkit.twistor_flat import real_section_from_point


@pytest.mark.parametrize(
    "text, re, im",
    [("1/2 - 3i", "1/2", -3), ("0.5", "1/2", 0), ("(1+i)/2", "1/2", "1/2"), ("-i", 0, -1), ("7", 7, 0)],
)
def test_parse_scalar_text(text, re, im):
    """Tests that scalar text parses to the expected Gaussian rational."""
    assert parse_scalar_text(text) == EXACT.from_parts(re, im)


@pytest.mark.parametrize("text", ["sqrt(2)", "x", "1 +", "(1"])
def test_parse_scalar_text_rejects(text):
    """Tests that irrational, unknown or unbalanced scalar text is a schema error."""
    with pytest.raises(SchemaError):
        parse_scalar_text(text)


def test_float_scalars():
    """Tests scalar decoding on the float backend."""
    assert parse_scalar_text("1/2 - 3i", FLOAT) == pytest.approx(0.5 - 3j)
    assert decode_scalar({"re": 0.25, "im": -1.0}, FLOAT) == 0.25 - 1j


def test_encode_scalar_exact_parts():
    """Tests the {"re", "im"} form of exact scalars and its error cases."""
    assert encode_scalar(EXACT.from_parts("1/2", -3)) == {"re": "1/2", "im": "-3/1"}
    assert decode_scalar({"re": "1/2", "im": "-3/1"}) == EXACT.from_parts("1/2", -3)
    with pytest.raises(SchemaError):
        decode_scalar({"re": 1})
    with pytest.raises(SchemaError):
        decode_scalar(True)


def test_parse_laurent_text():
    """Tests Laurent text with negative powers, 1/z and fractional exponents."""
    p = parse_laurent_text("z^-1 + 2i z")
    assert p == LaurentPoly({-1: 1, 1: EXACT.from_parts(0, 2)})
    assert parse_laurent_text("1/z") == LaurentPoly.monomial(-1)
    assert parse_laurent_text("0").is_zero()
    with pytest.raises(SchemaError):
        parse_laurent_text("z^(1/2)")


def test_bundle_documents(bundle_doc):
    """Tests bundle documents with text entries, power mappings and a written bundle."""
    E = decode_bundle(bundle_doc(2, ["z", "0", "0", "z"]))
    assert E.T == LaurentMatrix.monomial_diagonal([1, 1])
    mapping = decode_bundle(bundle_doc(1, [{"-3": {"re": "1/1", "im": "0/1"}}]))
    assert mapping.winding == -3
    again = decode_bundle(json.loads(dumps(encode_bundle(line_sum([2, -1])))))
    assert again.T == line_sum([2, -1]).T


def test_bundle_document_shape_errors(bundle_doc):
    """Tests that a wrong entry count or rank 0 is a schema error."""
    with pytest.raises(SchemaError):
        decode_bundle(bundle_doc(2, ["z", "0", "0"]))
    with pytest.raises(SchemaError):
        decode_bundle(bundle_doc(0, []))


def test_require_checks_schema_and_kind(bundle_doc):
    """Tests the schema tag and kind checks on input documents."""
    with pytest.raises(SchemaError):
        require({"schema": "other/1", "kind": "bundle"}, "bundle")
    with pytest.raises(SchemaError):
        require(bundle_doc(1, ["z"]), "matrix")
    with pytest.raises(SchemaError):
        require([1, 2], "bundle")
    with pytest.raises(SchemaError, match="unknown input document kind"):
        require({"schema": SCHEMA, "kind": "sheaf"}, "bundle")


def test_matrix_payload_forms():
    """Tests the flat matrix payload and a missing entry list."""
    i = EXACT.i
    flat = {"schema": SCHEMA, "kind": "matrix", "rows": 2, "cols": 2, "entries": [0, "-i", "i", 0]}
    incomplete = {"schema": SCHEMA, "kind": "matrix", "entries": None}
    M = decode_matrix(flat)
    assert is_zero_matrix(M - EXACT.array([[0, -i], [i, 0]]), EXACT)
    with pytest.raises(SchemaError):
        decode_matrix(incomplete)


def test_section_document(gaussian):
    """Tests that a section document decodes to the section it was written from."""
    s = real_section_from_point([1], [gaussian(0, 2)])
    back = decode_section(encode_section(s))
    assert back.equals(s)


def test_twistor_data_keeps_omega_as_given(flat_data):
    """Tests that a stored Omega is used without renormalizing its phase."""
    doc = encode_twistor_data(flat_data)
    doc["Omega"] = [["0", "-1"], ["1", "0"]]
    D = decode_twistor_data(doc)
    assert is_zero_matrix(D.Omega - EXACT.array([[0, -1], [1, 0]]), EXACT)
    assert D.mu == EXACT.i


def test_bundle_family_document():
    """Tests a one-parameter bundle family document."""
    doc = {"schema": SCHEMA, "kind": "bundle_family", "rank": 2, "entries": ["1/z", "t", "0", "z"]}
    F = decode_bundle_family(doc)
    assert F.params == 1
    assert F.at([0]).T == LaurentMatrix.monomial_diagonal([-1, 1])
    assert F.transition_at([2])[0, 1] == LaurentPoly.constant(2)


def test_two_parameter_family():
    """Tests multi-index coefficients and a non-polynomial parameter dependence."""
    doc = {
        "schema": SCHEMA, "kind": "bundle_family", "rank": 2, "params": 2,
        "entries": ["z", "t1 + t2*z", "0", "1/z"],
    }
    F = decode_bundle_family(doc)
    assert set(F.coefficients) == {(0, 0), (1, 0), (0, 1)}
    with pytest.raises(SchemaError):
        decode_bundle_family(dict(doc, entries=["z", "1/t1", "0", "1/z"]))


def test_to_jsonable_replaces_scalars():
    """Tests that scalars and arrays nested in results become JSON values."""
    value = to_jsonable({"m": EXACT.eye(2), "pair": (EXACT.one, 3)})
    assert value["m"][0][0] == {"re": "1/1", "im": "0/1"}
    assert value["pair"][1] == 3


def test_load_document_errors(tmp_path):
    """Tests missing and malformed input files."""
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SchemaError):
        load_document(bad)
    with pytest.raises(UsageError):
        load_document(tmp_path / "missing.json")


def term(k, re, im="0/1"):
    return {"pow": k, "re": re, "im": im}


def test_laurent_term_list_is_the_written_form():
    """encode_laurent writes sorted {"pow", "re", "im"} terms and reads them back."""
    p = LaurentPoly({2: EXACT.from_parts(0, -1), -1: "1/3"})
    assert encode_laurent(p) == [term(-1, "1/3"), term(2, "0/1", "-1/1")]
    assert decode_laurent(encode_laurent(p)) == p
    assert decode_laurent([]).is_zero()


def test_bundle_with_term_list_entries(bundle_doc, write_doc):
    """A bundle written entry by entry as term lists decodes and splits."""
    doc = bundle_doc(2, [[term(-1, "1")], [term(0, "1")], [], [term(1, "1")]])
    E = decode_bundle(doc)
    assert E.T[0, 0] == LaurentPoly.monomial(-1)
    assert E.winding == 0
    assert main(["split", "--bundle", str(write_doc("terms.json", doc))]) == 0
    assert decode_bundle(json.loads(dumps(encode_bundle(E)))).T == E.T


@pytest.mark.parametrize(
    "value",
    [
        [term(1, "1"), term(1, "2")],
        [{"pow": 1, "re": "1"}],
        [term(True, "1")],
        [term(0, "1/0")],
        [term(0, "abc")],
        [term(0, 0.5)],
    ],
)
def test_bad_term_lists(value):
    """Duplicate powers, missing parts and bad numbers are schema errors."""
    with pytest.raises(SchemaError):
        decode_laurent(value)


def test_expressions_cannot_reach_python(tmp_path):
    """Only arithmetic tokens reach the parser; anything else is refused unevaluated."""
    marker = tmp_path / "written"
    payload = f"__import__('pathlib').Path({str(marker)!r}).write_text('x') * 0 + 1"
    with pytest.raises(SchemaError):
        parse_scalar_text(payload)
    with pytest.raises(SchemaError):
        parse_laurent_text("z + exec('1')")
    with pytest.raises(SchemaError):
        decode_bundle_family(
            {"schema": SCHEMA, "kind": "bundle_family", "rank": 1, "entries": ["t.__class__"]}
        )
    assert not marker.exists()


@pytest.mark.parametrize("text", ["9^9^9^9", "z^1000", "(" * 40 + "1" + ")" * 40, "1; 2", "I", ""])
def test_expression_limits(text):
    """Long exponents, deep nesting, stray names and separators are rejected."""
    with pytest.raises(SchemaError):
        parse_laurent_text(text)


def test_small_exponents_still_parse():
    """z^-1, z**(-2) and (1+i)^2 stay inside the grammar."""
    assert parse_laurent_text("z^-1 + z**(-2)") == LaurentPoly({-1: 1, -2: 1})
    assert parse_scalar_text("(1+i)^2") == EXACT.from_parts(0, 2)
