"""Built-in problem fixtures.

The six gap/equality counterexample matrices are stored in factor form
M = U V* with the printed normalizations (1/2, 1/sqrt(2), 1/sqrt(3)),
plus two small sanity problems used by the command-line interface and
the test suite.
"""

import json

import numpy as np

from .structure import parse_problem

_S2 = 1.0 / np.sqrt(2.0)
_S3 = 1.0 / np.sqrt(3.0)


def _rows(a):
    a = np.asarray(a, dtype=complex)
    out = []
    for row in a:
        out.append([c.real if c.imag == 0.0 else [c.real, c.imag]
                    for c in row])
    return out


def _factor_doc(u, v, blocks):
    return {
        "blocks": blocks,
        "factors": {"U": {"rows": _rows(u)}, "V": {"rows": _rows(v)}},
    }


def _full(sizes):
    return [{"kind": "full", "size": s} for s in sizes]


_CE1_U = 0.5 * np.array([
    [1, 1, 0], [1, -1, 0], [1, 0, 1], [1, 0, -1], [0, 1, 1], [0, 1, -1],
], dtype=float)
_CE1_V = _S2 * np.array([
    [0, 0, 1], [0, 0, 1], [0, 1, 0], [0, 1, 0], [1, 0, 0], [1, 0, 0],
], dtype=float)

_CE2_U = 0.5 * np.array([
    [1, 0], [1, 1], [1, 1j], [1, -1 - 1j],
])
_CE2_V = 0.5 * np.array([
    [0, 1], [1, -1], [1, -1j], [1 - 1j, 1],
])

_CE3_U = 0.5 * np.array([
    [np.sqrt(2), 0], [1, np.sqrt(2)], [1, -np.sqrt(2)],
])
_CE3_V = 0.5 * np.array([
    [0, np.sqrt(2)], [np.sqrt(2), -1], [np.sqrt(2), 1],
])

_CE45_U = _S3 * np.array([
    [1, -1], [1, 1], [1, 0], [0, 1],
], dtype=float)
_CE45_V = _S3 * np.array([
    [1, 1], [1, -1], [0, 1], [1, 0],
], dtype=float)

_CE6_U = _S2 * np.array([
    [1, -1], [1, 1], [0, 0],
], dtype=float)
_CE6_V = _S2 * np.array([
    [1, 1], [-1, 1], [0, 0],
], dtype=float)


_DOCS = {
    "counterexample1": _factor_doc(_CE1_U, _CE1_V, _full([1] * 6)),
    "counterexample2": _factor_doc(_CE2_U, _CE2_V, _full([1] * 4)),
    "counterexample3": _factor_doc(_CE3_U, _CE3_V, _full([1] * 3)),
    "counterexample4": _factor_doc(
        _CE45_U, _CE45_V,
        [{"kind": "repeated-scalar", "size": 2}] + _full([1, 1])),
    "counterexample5": _factor_doc(
        _CE45_U, _CE45_V,
        [{"kind": "repeated-scalar", "size": 2},
         {"kind": "repeated-scalar", "size": 2}]),
    "counterexample6": _factor_doc(
        _CE6_U, _CE6_V,
        [{"kind": "repeated-scalar", "size": 2}] + _full([1])),
    "twoscalar": {
        "blocks": _full([1, 1]),
        "matrix": {"rows": [[0, 4], [1, 0]]},
    },
    "identity3": {
        "blocks": _full([1, 1, 1]),
        "matrix": {"rows": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]},
    },
}

NAMES = sorted(_DOCS)


def fixture_text(name):
    """Problem-file JSON for a named fixture."""
    return json.dumps(_DOCS[name])


def load(name):
    """Parse a named fixture into a Problem."""
    return parse_problem(fixture_text(name))
