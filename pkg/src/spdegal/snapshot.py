"""Bit-specified binary snapshots of a state vector.

Layout (all little-endian):

    8 bytes   magic "SPDEGAL1"
    u32       format version (1)
    u8        spatial dimension
    u8        model kind code (cbf=0, mhd=1, boussinesq=2, dynamo=3,
              micropolar=4, tropical=5)
    u16       field count
    u32       cutoff
    u64       mode count
    f64       time
    per field:
        u16   name length, then UTF-8 name
        u16   component count
        component-major complex coefficients: mode-count f64 (re, im) pairs
        per component, in basis order

Roundtrips are bit-exact.
"""

import struct

import numpy as np

from .errors import SnapshotFormatError
from .models import KIND_CODES, KINDS, _DIVFREE
from .spectral import SpectralBasis
from .state import Field, StateVector

MAGIC = b"SPDEGAL1"
VERSION = 1
_HEADER = struct.Struct("<8sIBBHIQd")


def write_snapshot(path, state: StateVector, model_kind: str, time: float = 0.0):
    if model_kind not in KIND_CODES:
        raise ValueError(f"unknown model kind {model_kind!r}")
    basis = state.basis
    blob = bytearray()
    blob += _HEADER.pack(
        MAGIC,
        VERSION,
        basis.d,
        KIND_CODES[model_kind],
        len(state.fields),
        basis.cutoff,
        basis.n_modes,
        float(time),
    )
    for name, f in state.fields.items():
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded)) + encoded
        blob += struct.pack("<H", f.components)
        coeffs = np.ascontiguousarray(f.coeffs, dtype="<c16")
        blob += coeffs.tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def read_snapshot(path) -> tuple[StateVector, dict]:
    """Read a snapshot; returns (state, header) with header keys
    time, kind, d, cutoff, n_modes, version."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise SnapshotFormatError("truncated header")
    magic, version, d, kind_code, n_fields, cutoff, n_modes, time = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported version {version}")
    if kind_code >= len(KINDS):
        raise SnapshotFormatError(f"unknown model kind code {kind_code}")
    kind = KINDS[kind_code]
    basis = SpectralBasis(d, cutoff)
    if basis.n_modes != n_modes:
        raise SnapshotFormatError(
            f"mode count {n_modes} does not match basis ({basis.n_modes})"
        )
    offset = _HEADER.size
    fields = {}
    for _ in range(n_fields):
        if offset + 2 > len(blob):
            raise SnapshotFormatError("truncated field header")
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        if offset + 2 > len(blob):
            raise SnapshotFormatError("truncated field header")
        (ncomp,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        nbytes = ncomp * n_modes * 16
        if offset + nbytes > len(blob):
            raise SnapshotFormatError(f"truncated payload for field {name!r}")
        coeffs = np.frombuffer(blob, dtype="<c16", count=ncomp * n_modes, offset=offset)
        offset += nbytes
        coeffs = coeffs.reshape(ncomp, n_modes).astype(np.complex128)
        fields[name] = Field(basis, coeffs, divergence_free=name in _DIVFREE)
    if offset != len(blob):
        raise SnapshotFormatError(f"{len(blob) - offset} trailing bytes")
    header = {
        "time": time,
        "kind": kind,
        "d": d,
        "cutoff": cutoff,
        "n_modes": n_modes,
        "version": version,
    }
    return StateVector(basis, fields), header
