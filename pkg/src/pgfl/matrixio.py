"""Dense matrix file formats.

CSV: n rows of n comma-separated values.
Binary: 16-byte header — magic b"PGFL", two little-endian u32 copies of n —
followed by n*n float64 values row-major.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FileFormatError

MAGIC = b"PGFL"


def read_matrix_csv(path) -> np.ndarray:
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    if M.shape[0] != M.shape[1]:
        raise FileFormatError(
            f"{path}: expected a square matrix, got {M.shape[0]}x{M.shape[1]}"
        )
    return M


def write_matrix_csv(path, M: np.ndarray) -> None:
    np.savetxt(path, np.asarray(M, dtype=float), delimiter=",")


def read_matrix_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) < 16 or header[:4] != MAGIC:
            raise FileFormatError(f"{path}: bad header (expected magic {MAGIC!r})")
        n1, n2 = struct.unpack("<II", header[4:12])
        if n1 != n2:
            raise FileFormatError(f"{path}: header dimensions disagree ({n1} vs {n2})")
        data = np.fromfile(fh, dtype="<f8", count=n1 * n1)
    if data.size != n1 * n1:
        raise FileFormatError(
            f"{path}: truncated payload ({data.size} of {n1 * n1} values)"
        )
    return data.reshape(n1, n1)


def write_matrix_binary(path, M: np.ndarray) -> None:
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n, n))
        fh.write(b"\x00" * 4)  # pad header to 16 bytes
        M.astype("<f8").tofile(fh)


def read_matrix(path) -> np.ndarray:
    """Dispatch on contents: binary if the magic matches, else CSV."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_matrix_binary(path)
    return read_matrix_csv(path)
