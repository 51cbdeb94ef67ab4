"""Plain-text readers and writers for matrices, vectors and problems.

Matrix block::

    rows cols nnz
    row col value      (nnz lines, sorted by row then column, zero-based)

Vector block: one value per line, infinities spelled ``inf`` / ``-inf``.

A problem file concatenates the five blocks, each introduced by a
marker line ``# P``, ``# q``, ``# A``, ``# l``, ``# u``. P is stored as
its upper triangle.
"""
import io as _io
from pathlib import Path

import numpy as np

from .precision import DEFAULT_DTYPE
from .problem import QpProblem
from .sparse import CooMatrix, FormatError, coo_to_csr, csr_to_coo

_SECTIONS = ("P", "q", "A", "l", "u")


def _fmt(v):
    return repr(float(v))


def _write_matrix_lines(m, out):
    coo = csr_to_coo(m)
    out.write(f"{m.rows} {m.cols} {m.nnz}\n")
    for r, c, v in zip(coo.row_indices.tolist(), coo.col_indices.tolist(), coo.values.tolist()):
        out.write(f"{r} {c} {_fmt(v)}\n")


def _parse_matrix_lines(lines, dtype):
    if not lines:
        raise FormatError("missing matrix header")
    header = lines[0].split()
    if len(header) != 3:
        raise FormatError(f"bad matrix header {lines[0]!r}")
    rows, cols, nnz = (int(t) for t in header)
    body = lines[1:]
    if len(body) != nnz:
        raise FormatError(f"header announces {nnz} entries, found {len(body)}")
    if nnz:
        arr = np.loadtxt(_io.StringIO("\n".join(body)), dtype=float, ndmin=2)
        if arr.shape[1] != 3:
            raise FormatError("matrix entries need 'row col value'")
        r, c, v = arr[:, 0], arr[:, 1], arr[:, 2]
    else:
        r = c = np.zeros(0, dtype=np.int64)
        v = np.zeros(0)
    return coo_to_csr(CooMatrix(rows, cols, v, r, c, dtype=dtype))


def _content_lines(text):
    return [ln.strip() for ln in text.splitlines() if ln.strip()]


def write_matrix(path, m):
    with open(path, "w") as f:
        _write_matrix_lines(m, f)


def read_matrix(path, dtype=None):
    return _parse_matrix_lines(_content_lines(Path(path).read_text()), dtype or DEFAULT_DTYPE)


def write_vector(path, v):
    with open(path, "w") as f:
        f.writelines(_fmt(x) + "\n" for x in np.asarray(v))


def read_vector(path, dtype=None):
    return np.array([float(t) for t in _content_lines(Path(path).read_text())], dtype=dtype or DEFAULT_DTYPE)


def write_problem(path, problem):
    with open(path, "w") as f:
        f.write("# P\n")
        _write_matrix_lines(problem.p_upper, f)
        f.write("# q\n")
        f.writelines(_fmt(x) + "\n" for x in problem.q)
        f.write("# A\n")
        _write_matrix_lines(problem.a, f)
        for name, vec in (("l", problem.l), ("u", problem.u)):
            f.write(f"# {name}\n")
            f.writelines(_fmt(x) + "\n" for x in vec)


def read_problem(path, dtype=None):
    dtype = np.dtype(dtype or DEFAULT_DTYPE)
    sections = {}
    current = None
    for line in _content_lines(Path(path).read_text()):
        if line.startswith("#"):
            current = line[1:].strip()
            if current not in _SECTIONS or current in sections:
                raise FormatError(f"unexpected section marker {line!r}")
            sections[current] = []
        elif current is None:
            raise FormatError("data before the first section marker")
        else:
            sections[current].append(line)
    missing = [s for s in _SECTIONS if s not in sections]
    if missing:
        raise FormatError(f"problem file lacks sections {missing}")
    p = _parse_matrix_lines(sections["P"], dtype)
    a = _parse_matrix_lines(sections["A"], dtype)
    q, l, u = ([float(t) for t in sections[s]] for s in ("q", "l", "u"))
    return QpProblem(p, q, a, l, u)
