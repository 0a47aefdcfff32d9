"""Text formats: gate matrices, columnar tables and key-value result records."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import ContractError

MATRIX_UNITARY_TOL = 1e-6


def _complex_token(z: complex) -> str:
    return f"{float(z.real)!r}{float(z.imag):+}j".replace("+-", "-")


def write_matrix(path, u) -> Path:
    """One row per line, four complex tokens like ``0.5-0.5j`` separated by spaces."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ContractError(f"matrix must be 4x4, got {u.shape}")
    path = Path(path)
    lines = [" ".join(_complex_token(z) for z in row) for row in u]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_matrix(path, tol=MATRIX_UNITARY_TOL) -> np.ndarray:
    """Read 16 complex entries (row-major, any whitespace/commas) and check unitarity."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ContractError(f"cannot read matrix {path}: {exc}") from exc
    tokens = [t for line in text.splitlines() if not line.lstrip().startswith("#")
              for t in line.replace(",", " ").split()]
    if len(tokens) != 16:
        raise ContractError(f"{path}: expected 16 complex entries, found {len(tokens)}")
    try:
        u = np.array([complex(t.replace("i", "j")) for t in tokens]).reshape(4, 4)
    except ValueError as exc:
        raise ContractError(f"{path}: {exc}") from exc
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(4))))
    if not defect <= tol:
        raise ContractError(f"{path}: matrix is not unitary (defect {defect:.3e} > {tol:.0e})")
    return u


def write_table(path, header, rows) -> Path:
    """Tab-separated table with a single header line."""
    header = list(header)
    lines = ["\t".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ContractError(f"row has {len(row)} fields, header has {len(header)}")
        lines.append("\t".join(_cell(v) for v in row))
    return atomic_write(path, "\n".join(lines) + "\n")


def read_table(path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split("\t")
    return header, [line.split("\t") for line in lines[1:] if line]


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def format_record(sections) -> str:
    """Render ``{section: {key: value}}`` (or raw text) as an INI-like record."""
    parts = []
    for name, body in sections.items():
        if isinstance(body, str):
            parts.append(body.rstrip("\n"))
            continue
        lines = [f"[{name}]"]
        for key, value in body.items():
            lines.append(f"{key} = {_cell(value)}")
        parts.append("\n".join(lines))
    return "\n\n".join(parts) + "\n"


def read_record(path) -> dict:
    """Parse a record into ``{section: {key: str}}``; the trace table is kept as a list of lines."""
    sections, current = {}, None
    for line in Path(path).read_text().splitlines():
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = {} if current != "trace" else []
        elif current == "trace":
            if line:
                sections[current].append(line)
        elif current and " = " in line:
            key, value = line.split(" = ", 1)
            sections[current][key] = value
    return sections
