"""JSON documents of the ``twistorkit/1`` schema.

Every document is an object with ``"schema": "twistorkit/1"`` and a ``kind``:

* ``bundle``: ``rank`` and row-major ``entries`` (Laurent polynomials),
* ``matrix``: ``rows``, ``cols`` and row-major ``entries`` (scalars),
* ``section_ab``: vectors ``a`` and ``b``,
* ``twistor_data``: ``n``, ``A`` and ``Omega`` (matrix payloads) and ``mu``,
* ``bundle_family``: ``rank``, ``params`` and ``entries`` polynomial in ``t``.

Scalars are written as ``{"re": ..., "im": ...}``: exact parts are ``"p/q"``
strings, float parts are numbers. A Laurent polynomial is a list of terms
``{"pow": k, "re": ..., "im": ...}`` with distinct powers. On input a scalar
may also be a number or an expression such as ``"1/2 - 3i"``, and a Laurent
polynomial may be a mapping ``{power: scalar}`` or an expression in ``z``
such as ``"z^-1 + 2i z"``. Expressions are checked token by token (numbers,
``+ - * / ^``, parentheses, ``i`` and the expected variable names) before
sympy sees them.
"""

import json
import re
from pathlib import Path
from tokenize import TokenError
from typing import Any

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication,
    parse_expr,
    rationalize,
    standard_transformations,
)
from sympy.polys.domains import QQ_I
from sympy.polys.polyerrors import CoercionFailed, PolynomialError

from twistorkit.bundles import BundleCP1
from twistorkit.deformation import BundleFamily
from twistorkit.errors import BackendError, SchemaError, UsageError
from twistorkit.hypercomplex import TwistorData
from twistorkit.laurent import LaurentMatrix, LaurentPoly
from twistorkit.quaternionic import SectionAB, check_quaternionic
from twistorkit.scalars import EXACT, Backend, GaussianRational

SCHEMA = "twistorkit/1"
INPUT_KINDS = ("bundle", "matrix", "section_ab", "twistor_data", "bundle_family")

TRANSFORMATIONS = standard_transformations + (implicit_multiplication, convert_xor, rationalize)
_IMAG_UNIT = re.compile(r"(?<![A-Za-z_])i(?![A-Za-z_0-9])")
_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^()]))"
)
_EXPONENT = re.compile(r"\s*(?:\(\s*[-+]?\s*\d{1,3}\s*\)|[-+]?\s*\d{1,3}(?![\d.]))(?!\s*(?:\^|\*\*))")
MAX_TEXT = 10_000
MAX_DEPTH = 32
Z = sympy.Symbol("z")


def _check_tokens(text: str, names) -> None:
    """Admit only numbers, + - * / ^ and parentheses, i and the given names.

    Exponents must be integers of at most three digits and cannot be
    stacked, so ``9^9^9`` is refused. Raises SchemaError before the text
    reaches the sympy parser.
    """
    if len(text) > MAX_TEXT:
        raise SchemaError(f"expression longer than {MAX_TEXT} characters")
    pos, depth = 0, 0
    while pos < len(text):
        if text[pos:].isspace():
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SchemaError(f"unexpected character {text[pos:].lstrip()[:1]!r} in {text!r}")
        name, op = m.group("name"), m.group("op")
        if name is not None and name != "i" and name not in names:
            raise SchemaError(f"unknown name {name!r} in {text!r}")
        if op == "(":
            depth += 1
            if depth > MAX_DEPTH:
                raise SchemaError(f"parentheses nested deeper than {MAX_DEPTH} in {text!r}")
        elif op == ")":
            depth -= 1
        elif op in ("^", "**") and not _EXPONENT.match(text, m.end()):
            raise SchemaError(f"exponents must be small integers in {text!r}")
        pos = m.end()


def _sympify(text: str, symbols: dict[str, sympy.Symbol]) -> sympy.Expr:
    if not text.strip():
        raise SchemaError("empty expression")
    _check_tokens(text, symbols)
    local = {"I": sympy.I, **symbols}
    try:
        return sympy.expand(parse_expr(_IMAG_UNIT.sub("I", text), local_dict=local,
                                       transformations=TRANSFORMATIONS))
    except (SyntaxError, TokenError, TypeError, ValueError, ZeroDivisionError, sympy.SympifyError) as e:
        raise SchemaError(f"cannot parse {text!r}: {e}") from e


def _number(expr: sympy.Expr, backend: Backend, text: str):
    if expr.free_symbols:
        raise SchemaError(f"{text!r} is not a number")
    if backend.exact:
        try:
            return QQ_I.from_sympy(expr)
        except CoercionFailed as e:
            raise SchemaError(f"{text!r} is not a Gaussian rational") from e
    try:
        value = complex(expr.evalf())
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{text!r} is not a finite number") from e
    if not np.isfinite(value):
        raise SchemaError(f"{text!r} is not a finite number")
    return value


def parse_scalar_text(text: str, backend: Backend = EXACT):
    """Parse "3/4 - 2i", "0.5" or "(1+i)/2" into a backend scalar."""
    return _number(_sympify(text, {}), backend, text)


def encode_scalar(x, backend: Backend = EXACT) -> dict:
    re_part, im_part = backend.parts(x)
    return {"re": backend.encode_part(re_part), "im": backend.encode_part(im_part)}


def _from_parts(re_part, im_part, backend: Backend):
    if isinstance(re_part, bool) or isinstance(im_part, bool):
        raise SchemaError("scalar parts must be numbers or \"p/q\" strings")
    try:
        return backend.from_parts(re_part, im_part)
    except (BackendError, TypeError, ValueError, ZeroDivisionError) as e:
        raise SchemaError(f"bad scalar parts {re_part!r}, {im_part!r}: {e}") from e


def decode_scalar(value: Any, backend: Backend = EXACT):
    if isinstance(value, dict):
        if set(value) != {"re", "im"}:
            raise SchemaError(f"scalar object needs exactly 're' and 'im': {value!r}")
        return _from_parts(value["re"], value["im"], backend)
    if isinstance(value, str):
        return parse_scalar_text(value, backend)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"not a scalar: {value!r}")
    try:
        return backend.convert(value)
    except BackendError as e:
        raise SchemaError(str(e)) from e


def _laurent_terms(expr: sympy.Expr, backend: Backend, text: str) -> dict[int, Any]:
    terms: dict[int, Any] = {}
    for term in sympy.Add.make_args(expr):
        coeff, power = term.as_coeff_exponent(Z)
        if not power.is_Integer:
            raise SchemaError(f"non-integer power of z in {text!r}")
        k = int(power)
        value = _number(coeff, backend, text)
        terms[k] = terms[k] + value if k in terms else value
    return terms


def parse_laurent_text(text: str, backend: Backend = EXACT) -> LaurentPoly:
    expr = _sympify(text, {"z": Z, "zeta": Z})
    if expr == 0:
        return LaurentPoly.zero(backend)
    return LaurentPoly(_laurent_terms(expr, backend, text), backend)


def encode_laurent(p: LaurentPoly) -> list[dict]:
    """Terms as ``[{"pow": k, "re": ..., "im": ...}]`` in increasing power."""
    return [{"pow": k, **encode_scalar(p.terms[k], p.backend)} for k in sorted(p.terms)]


def _decode_term_list(value: list, backend: Backend) -> LaurentPoly:
    terms: dict[int, Any] = {}
    for item in value:
        if not isinstance(item, dict) or set(item) != {"pow", "re", "im"}:
            raise SchemaError(f"Laurent term needs exactly 'pow', 're' and 'im': {item!r}")
        k = item["pow"]
        if isinstance(k, bool) or not isinstance(k, int):
            raise SchemaError(f"Laurent power must be an integer: {k!r}")
        if k in terms:
            raise SchemaError(f"power {k} appears twice")
        terms[k] = _from_parts(item["re"], item["im"], backend)
    return LaurentPoly(terms, backend)


def decode_laurent(value: Any, backend: Backend = EXACT) -> LaurentPoly:
    """Decode a Laurent polynomial.

    The term list written by ``encode_laurent`` is the canonical form. A
    ``{power: scalar}`` mapping, an expression in ``z`` and a bare scalar are
    also accepted.
    """
    if isinstance(value, list):
        return _decode_term_list(value, backend)
    if isinstance(value, str):
        return parse_laurent_text(value, backend)
    if isinstance(value, dict) and set(value) != {"re", "im"}:
        try:
            return LaurentPoly({int(k): decode_scalar(v, backend) for k, v in value.items()}, backend)
        except ValueError as e:
            raise SchemaError(f"Laurent powers must be integers: {value!r}") from e
    return LaurentPoly.constant(decode_scalar(value, backend), backend)


def document(kind: str, **payload) -> dict:
    return {"schema": SCHEMA, "kind": kind, **payload}


def require(doc: Any, kind: str) -> dict:
    """Check the schema tag and kind of a decoded document."""
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise SchemaError(f"expected schema {SCHEMA!r}, got {doc.get('schema')!r}")
    if doc.get("kind") not in INPUT_KINDS:
        raise SchemaError(f"unknown input document kind {doc.get('kind')!r}")
    if doc.get("kind") != kind:
        raise SchemaError(f"expected kind {kind!r}, got {doc.get('kind')!r}")
    return doc


def _field(doc: dict, key: str):
    if key not in doc:
        raise SchemaError(f"missing field {key!r} in {doc.get('kind')} document")
    return doc[key]


def _square_entries(entries, size: int, what: str) -> list:
    if not isinstance(entries, list) or len(entries) != size * size:
        raise SchemaError(f"{what} needs {size * size} row-major entries")
    return [entries[i * size : (i + 1) * size] for i in range(size)]


def encode_bundle(E: BundleCP1) -> dict:
    entries = [encode_laurent(e) for row in E.T.rows for e in row]
    return document("bundle", rank=E.rank, entries=entries)


def decode_bundle(doc: Any, backend: Backend = EXACT) -> BundleCP1:
    doc = require(doc, "bundle")
    r = _positive_int(_field(doc, "rank"), "rank")
    rows = _square_entries(_field(doc, "entries"), r, "bundle")
    T = LaurentMatrix([[decode_laurent(v, backend) for v in row] for row in rows], backend)
    return BundleCP1(T)


def _positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise SchemaError(f"{name} must be a positive integer")
    return value


def matrix_payload(M: np.ndarray, backend: Backend = EXACT) -> dict:
    rows, cols = M.shape
    return {"rows": rows, "cols": cols, "entries": [encode_scalar(v, backend) for v in M.ravel()]}


def decode_matrix_payload(payload: Any, backend: Backend = EXACT) -> np.ndarray:
    if isinstance(payload, list):
        # nested rows are accepted for hand-written input
        if not payload or not all(isinstance(r, list) and len(r) == len(payload[0]) for r in payload):
            raise SchemaError("matrix rows must be lists of equal length")
        return backend.array([[decode_scalar(v, backend) for v in r] for r in payload])
    if not isinstance(payload, dict):
        raise SchemaError("matrix must be an object with rows, cols and entries")
    rows = _positive_int(_field(payload, "rows"), "rows")
    cols = _positive_int(_field(payload, "cols"), "cols")
    entries = _field(payload, "entries")
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise SchemaError(f"matrix needs {rows * cols} entries")
    flat = [decode_scalar(v, backend) for v in entries]
    return backend.array(flat).reshape(rows, cols)


def decode_matrix(doc: Any, backend: Backend = EXACT) -> np.ndarray:
    return decode_matrix_payload(require(doc, "matrix"), backend)


def encode_vector(v, backend: Backend = EXACT) -> list:
    return [encode_scalar(x, backend) for x in v]


def decode_vector(value: Any, backend: Backend = EXACT) -> np.ndarray:
    if not isinstance(value, list):
        raise SchemaError("vector must be a list of scalars")
    return backend.array([decode_scalar(v, backend) for v in value])


def encode_section(s: SectionAB) -> dict:
    return document("section_ab", a=encode_vector(s.a, s.backend), b=encode_vector(s.b, s.backend))


def decode_section(doc: Any, backend: Backend = EXACT) -> SectionAB:
    doc = require(doc, "section_ab")
    return SectionAB(decode_vector(_field(doc, "a"), backend), decode_vector(_field(doc, "b"), backend), backend)


def encode_twistor_data(D: TwistorData, **extra) -> dict:
    bk = D.backend
    return document(
        "twistor_data",
        n=D.n,
        A=matrix_payload(D.Q.A, bk),
        Omega=matrix_payload(D.Omega, bk),
        mu=encode_scalar(D.mu, bk),
        **extra,
    )


def decode_twistor_data(doc: Any, backend: Backend = EXACT) -> TwistorData:
    """Twistor data exactly as stored: Omega is taken as given, only A is validated."""
    doc = require(doc, "twistor_data")
    n = _positive_int(_field(doc, "n"), "n")
    Q = check_quaternionic(decode_matrix_payload(_field(doc, "A"), backend), backend)
    Omega = decode_matrix_payload(_field(doc, "Omega"), backend)
    mu = decode_scalar(doc["mu"], backend) if "mu" in doc else None
    return TwistorData(n, Q, Omega, mu, backend)


def _family_symbols(params: int) -> list[sympy.Symbol]:
    if params == 1:
        return [sympy.Symbol("t")]
    return [sympy.Symbol(f"t{k + 1}") for k in range(params)]


def _split_family_entry(value: Any, ts: list[sympy.Symbol], backend: Backend) -> dict[tuple, LaurentPoly]:
    if not isinstance(value, str):
        return {(0,) * len(ts): decode_laurent(value, backend)}
    names = {s.name: s for s in ts} | {"z": Z, "zeta": Z}
    expr = _sympify(value, names)
    out: dict[tuple, LaurentPoly] = {}
    if expr == 0:
        return out
    try:
        poly = sympy.Poly(expr, *ts)
    except PolynomialError as e:
        raise SchemaError(f"{value!r} is not polynomial in the parameters") from e
    for monom, coeff in poly.terms():
        out[tuple(monom)] = LaurentPoly(_laurent_terms(sympy.expand(coeff), backend, value), backend)
    return out


def decode_bundle_family(doc: Any, backend: Backend = EXACT) -> BundleFamily:
    """Family whose entries are expressions polynomial in t (or t1, t2, ...) and Laurent in z."""
    doc = require(doc, "bundle_family")
    r = _positive_int(_field(doc, "rank"), "rank")
    params = _positive_int(doc.get("params", 1), "params")
    rows = _square_entries(_field(doc, "entries"), r, "bundle_family")
    ts = _family_symbols(params)
    zero = LaurentPoly.zero(backend)
    coeffs: dict[tuple, list[list[LaurentPoly]]] = {}
    for i, row in enumerate(rows):
        for j, value in enumerate(row):
            for monom, poly in _split_family_entry(value, ts, backend).items():
                grid = coeffs.setdefault(monom, [[zero] * r for _ in range(r)])
                grid[i][j] = poly
    if not coeffs:
        raise SchemaError("bundle_family has only zero entries")
    return BundleFamily(
        rank=r,
        params=params,
        coefficients={m: LaurentMatrix(g, backend) for m, g in coeffs.items()},
        backend=backend,
    )


def to_jsonable(value: Any, backend: Backend = EXACT) -> Any:
    """Replace scalars, arrays and tuples inside a report by JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v, backend) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v, backend) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v, backend) for v in value.tolist()]
    if isinstance(value, (GaussianRational, complex)):
        return encode_scalar(value, backend)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2)


def load_document(path: str | Path) -> Any:
    """Read a JSON document from disk.

    Raises:
        UsageError: If the file cannot be read.
        SchemaError: If it is not valid JSON.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from e
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise SchemaError(f"{path} is not valid JSON: {e}") from e


def write_document(doc: Any, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(doc) + "\n")
