"""Problem files: JSON description of constraints, a Gaussian and a Hamiltonian.

Complex numbers are ``[re, im]`` pairs and matrices are row-major nested lists.
Errors carry the line of the offending entry so messages read
``file:line: path: reason``.
"""

import json
from dataclasses import dataclass, field
from json.decoder import scanstring

import jsonschema
import numpy as np

from .dynamics import QuadraticHamiltonian
from .errors import ConstrainedGaussianError, InvalidInputError
from .gaussian import GaussianState
from .symplectic import ConstraintSet, MeasuredSubspace

_NUMBER = {"type": "number"}
_COMPLEX = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}
_REAL_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "items": _NUMBER}}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["n", "k", "constraints"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 0},
        "constraints": {
            "type": "object",
            "required": ["basis"],
            "additionalProperties": False,
            "properties": {
                "basis": {"type": "array", "items": {"type": "array", "items": _NUMBER}},
                "measure_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "gaussian": {
            "type": "object",
            "required": ["c", "A"],
            "additionalProperties": False,
            "properties": {
                "c": _COMPLEX,
                "A": {"type": "array", "minItems": 1,
                      "items": {"type": "array", "items": _COMPLEX}},
            },
        },
        "hamiltonian": {
            "type": "object",
            "required": ["H_PP", "H_QP", "H_QQ"],
            "additionalProperties": False,
            "properties": {
                "H_PP": _REAL_MATRIX, "H_QP": _REAL_MATRIX, "H_QQ": _REAL_MATRIX,
                "epsilon": _COMPLEX,
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"t_final": _NUMBER, "dt": {"type": "number", "exclusiveMinimum": 0}},
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"grid_points": {"type": "integer", "minimum": 64},
                           "box": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
}


class ProblemError(InvalidInputError):
    """Invalid problem file; ``line`` is 1-based or ``None``."""

    def __init__(self, source, path, line, reason):
        self.source, self.path, self.line, self.reason = source, tuple(path), line, reason
        where = f"{source}:{line}" if line else str(source)
        dotted = ".".join(str(p) for p in self.path) or "<root>"
        super().__init__(f"{where}: {dotted}: {reason}")


def value_lines(text):
    """Map each JSON path (tuple of keys/indices) to the 1-based line where its value starts."""
    decoder = json.JSONDecoder()
    lines = {}

    def skip(i):
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def line_of(i):
        return text.count("\n", 0, i) + 1

    def parse(i, path):
        i = skip(i)
        lines[path] = line_of(i)
        ch = text[i]
        if ch == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                i = skip(i)
                key, i = scanstring(text, i + 1)
                i = skip(i)
                lines.setdefault(path + (key,), line_of(i))
                i = parse(i + 1, path + (key,))
                i = skip(i)
                if text[i] == "}":
                    return i + 1
                i += 1
        if ch == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            idx = 0
            while True:
                i = parse(i, path + (idx,))
                i = skip(i)
                if text[i] == "]":
                    return i + 1
                i += 1
                idx += 1
        _, end = decoder.raw_decode(text, i)
        return end

    parse(0, ())
    return lines


def _line(lines, path):
    path = tuple(path)
    while path and path not in lines:
        path = path[:-1]
    return lines.get(path)


def _complex(pair):
    return complex(pair[0], pair[1])


def _complex_matrix(rows):
    return np.array([[_complex(x) for x in row] for row in rows], dtype=complex)


@dataclass(frozen=True)
class Problem:
    source: str
    n: int
    constraints: ConstraintSet
    gaussian: GaussianState = None
    hamiltonian: QuadraticHamiltonian = None
    time: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    name: str = ""

    @property
    def k(self):
        return self.constraints.k


def parse_problem(text, source="<problem>", tol=1e-9):
    """Parse and validate problem JSON text."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(source, (), exc.lineno, f"malformed JSON: {exc.msg}") from None
    lines = value_lines(text)
    validator = jsonschema.Draft7Validator(PROBLEM_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise ProblemError(source, err.absolute_path, _line(lines, err.absolute_path), err.message)

    def fail(path, reason):
        raise ProblemError(source, path, _line(lines, path), reason)

    n, k = data["n"], data["k"]
    basis = data["constraints"]["basis"]
    if len(basis) != k:
        fail(("constraints", "basis"), f"expected {k} constraint vectors, found {len(basis)}")
    for a, row in enumerate(basis):
        if len(row) != 2 * n:
            fail(("constraints", "basis", a), f"expected {2 * n} entries, found {len(row)}")
    try:
        rows = np.array(basis, dtype=float).reshape(k, 2 * n)
        L = ConstraintSet(MeasuredSubspace(n, rows, data["constraints"].get("measure_scale", 1.0)), tol)
    except ConstrainedGaussianError as exc:
        fail(("constraints", "basis"), str(exc))

    g = None
    if "gaussian" in data:
        A_rows = data["gaussian"]["A"]
        if len(A_rows) != n or any(len(r) != n for r in A_rows):
            fail(("gaussian", "A"), f"A must be {n} x {n}")
        try:
            g = GaussianState(_complex(data["gaussian"]["c"]), _complex_matrix(A_rows), tol)
        except ConstrainedGaussianError as exc:
            key = "c" if "c must" in str(exc) else "A"
            fail(("gaussian", key), str(exc))

    H = None
    if "hamiltonian" in data:
        h = data["hamiltonian"]
        for name in ("H_PP", "H_QP", "H_QQ"):
            if len(h[name]) != n or any(len(r) != n for r in h[name]):
                fail(("hamiltonian", name), f"{name} must be {n} x {n}")
        try:
            H = QuadraticHamiltonian(h["H_PP"], h["H_QP"], h["H_QQ"],
                                     _complex(h.get("epsilon", [0.0, 0.0])), tol)
        except ConstrainedGaussianError as exc:
            name = next((nm for nm in ("H_PP", "H_QP", "H_QQ") if nm in str(exc)), "epsilon")
            fail(("hamiltonian", name), str(exc))

    return Problem(source, n, L, g, H, dict(data.get("time", {})), dict(data.get("oracle", {})),
                   data.get("name", ""))


def load_problem(path, tol=1e-9):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProblemError(path, (), None, f"cannot read file: {exc.strerror}") from None
    return parse_problem(text, str(path), tol)


__all__ = ["PROBLEM_SCHEMA", "Problem", "ProblemError", "parse_problem", "load_problem",
           "value_lines"]
