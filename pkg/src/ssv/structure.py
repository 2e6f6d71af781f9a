"""Uncertainty structure model and problem-file parsing.

A block structure is an ordered list of uncertainty blocks partitioning
the matrix dimension.  Repeated-scalar blocks (delta_j * I) come first,
followed by full blocks, matching the row-partition indexing used
throughout the certificate construction.

Problem files are JSON:

    {"blocks": [{"kind": "full", "size": 1}, ...],
     "matrix": {"rows": [[ [re, im] | re, ... ], ...]}}

A matrix of the form M = U V* may instead be given in factor form:

    {"factors": {"U": {"rows": ...}, "V": {"rows": ...}}}

Complex entries are [re, im] pairs; a bare number means imaginary part 0.
"""

import json
from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Block:
    kind: str  # "repeated-scalar" | "full"
    size: int

    def __post_init__(self):
        if self.kind not in ("repeated-scalar", "full"):
            raise ValidationError(f"unknown block kind {self.kind!r}")
        if self.size < 1:
            raise ValidationError("block size must be >= 1")


@dataclass(frozen=True)
class BlockStructure:
    blocks: tuple

    def __post_init__(self):
        if not self.blocks:
            raise ValidationError("at least one block required")
        seen_full = False
        for b in self.blocks:
            if b.kind == "full":
                seen_full = True
            elif seen_full:
                raise ValidationError("repeated-scalar block after a full block")

    @property
    def n(self):
        return sum(b.size for b in self.blocks)

    @property
    def S(self):
        return sum(1 for b in self.blocks if b.kind == "repeated-scalar")

    @property
    def F(self):
        return sum(1 for b in self.blocks if b.kind == "full")

    @property
    def sizes(self):
        return [b.size for b in self.blocks]

    def slices(self):
        out = []
        off = 0
        for b in self.blocks:
            out.append(slice(off, off + b.size))
            off += b.size
        return out

    def full_sizes(self):
        return [b.size for b in self.blocks if b.kind == "full"]


def full_blocks(sizes):
    """Convenience constructor: all-full structure from a size list."""
    return BlockStructure(tuple(Block("full", s) for s in sizes))


@dataclass(frozen=True)
class Problem:
    matrix: np.ndarray = field(repr=False)
    structure: BlockStructure

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("matrix must be square")
        if m.shape[0] != self.structure.n:
            raise ValidationError(
                f"matrix dimension {m.shape[0]} != structure dimension {self.structure.n}")

    @property
    def is_real(self):
        return np.isrealobj(self.matrix)


def _entry_to_complex(e):
    if isinstance(e, (int, float)):
        return complex(e, 0.0)
    if isinstance(e, list) and len(e) == 2:
        return complex(e[0], e[1])
    raise ValidationError(f"bad matrix entry {e!r}")


def _rows_to_array(obj):
    if not isinstance(obj, dict) or "rows" not in obj:
        raise ValidationError("matrix object must contain 'rows'")
    rows = obj["rows"]
    data = [[_entry_to_complex(e) for e in row] for row in rows]
    widths = {len(r) for r in data}
    if len(widths) != 1:
        raise ValidationError("ragged matrix rows")
    arr = np.array(data, dtype=complex)
    if np.all(arr.imag == 0.0):
        arr = arr.real.copy()
    return arr


def parse_problem(text):
    """Parse a problem file into a Problem.

    Raises json.JSONDecodeError on malformed syntax and ValidationError
    on structural problems.
    """
    doc = json.loads(text)
    if "blocks" not in doc:
        raise ValidationError("missing 'blocks'")
    blocks = tuple(Block(b.get("kind", "full"), int(b.get("size", 0)))
                   for b in doc["blocks"])
    structure = BlockStructure(blocks)
    if "matrix" in doc:
        m = _rows_to_array(doc["matrix"])
    elif "factors" in doc:
        u = _rows_to_array(doc["factors"]["U"])
        v = _rows_to_array(doc["factors"]["V"])
        if u.shape != v.shape:
            raise ValidationError("factor shapes differ")
        m = u @ v.conj().T
        if np.isrealobj(u) and np.isrealobj(v):
            m = m.real if np.iscomplexobj(m) else m
    else:
        raise ValidationError("missing 'matrix' or 'factors'")
    return Problem(m, structure)


def _entry_from_complex(c):
    if c.imag == 0.0:
        return c.real
    return [c.real, c.imag]


def serialize_problem(problem):
    """Serialize a Problem back to the JSON format (inverse of parse)."""
    m = np.asarray(problem.matrix, dtype=complex)
    rows = [[_entry_from_complex(m[i, j]) for j in range(m.shape[1])]
            for i in range(m.shape[0])]
    doc = {
        "blocks": [{"kind": b.kind, "size": b.size}
                   for b in problem.structure.blocks],
        "matrix": {"rows": rows},
    }
    return json.dumps(doc)


def block_rows(structure, w):
    """Split the rows of w by block: returns S+F submatrices."""
    w = np.asarray(w)
    if w.shape[0] != structure.n:
        raise ValidationError(
            f"matrix has {w.shape[0]} rows, structure needs {structure.n}")
    return [w[sl] for sl in structure.slices()]
