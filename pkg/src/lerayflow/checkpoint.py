"""Binary checkpoints: fixed little-endian header + packed coefficients.

Layout (all little-endian, no padding)::

    magic            4s   b"LFCK"
    format version   u16  (currently 1)
    dim              u8
    has_b            u8   (1 if a magnetic field follows the velocity)
    n                u32
    L                f64
    dealias_cutoff   u32
    model kind       u8   (index into KIND_ORDER)
    nu               f64
    nu2              f64  (0 when absent)
    alpha            f64
    theta            f64
    n_deconv         u32
    t                f64
    payload length   u64  (bytes)
    checksum         u32  (CRC32 of the header with this field zeroed,
                           followed by the payload)

The payload is the velocity coefficients, then the magnetic ones if present:
component by component (x first), each a C-order complex128 array over the
FFT-layout axes.  Round trips are bit-exact, which is what makes resumed runs
reproduce uninterrupted trajectories.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib

import numpy as np

from .dynamics import ModelConfig, ModelKind, SimState
from .errors import InvariantViolation
from .fields import SpectralVectorField
from .grid import WaveGrid

__all__ = ["save_checkpoint", "load_checkpoint", "FORMAT_VERSION"]

MAGIC = b"LFCK"
FORMAT_VERSION = 1
KIND_ORDER = (ModelKind.NSE, ModelKind.LERAY_ALPHA,
              ModelKind.LERAY_DECONV, ModelKind.MHD_DECONV)
_HEADER_FMT = "<4sHBBIdIBddddIdQI"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)


def _payload_bytes(state: SimState) -> bytes:
    chunks = []
    for field in (state.u, state.b):
        if field is None:
            continue
        for comp in range(field.grid.dim):
            arr = np.ascontiguousarray(field.coeffs[comp]).astype("<c16",
                                                                  copy=False)
            chunks.append(arr.tobytes())
    return b"".join(chunks)


def save_checkpoint(path: str, state: SimState, cfg: ModelConfig) -> None:
    """Write the state atomically (temp file + rename)."""
    grid = state.u.grid
    payload = _payload_bytes(state)
    header_wo_crc = struct.pack(
        _HEADER_FMT, MAGIC, FORMAT_VERSION, grid.dim,
        1 if state.b is not None else 0, grid.n, grid.L,
        grid.dealias_cutoff, KIND_ORDER.index(cfg.kind), cfg.nu,
        cfg.nu2 if cfg.nu2 is not None else 0.0, cfg.filter.alpha,
        cfg.filter.theta, cfg.filter.n_deconv, state.t, len(payload), 0)
    crc = zlib.crc32(payload, zlib.crc32(header_wo_crc))
    header = header_wo_crc[:-4] + struct.pack("<I", crc)

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str) -> tuple[SimState, dict]:
    """Read a checkpoint; returns the state and a metadata dict with the
    reconstructed grid and the stored model descriptor."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER_SIZE)
        payload = fh.read()
    if len(header) != _HEADER_SIZE:
        raise InvariantViolation(f"{path}: truncated checkpoint header")
    (magic, version, dim, has_b, n, L, cutoff, kind_idx, nu, nu2, alpha,
     theta, n_deconv, t, payload_len, crc) = struct.unpack(_HEADER_FMT, header)
    if magic != MAGIC:
        raise InvariantViolation(f"{path}: not a lerayflow checkpoint")
    if version != FORMAT_VERSION:
        raise InvariantViolation(
            f"{path}: unsupported checkpoint version {version}")
    if payload_len != len(payload):
        raise InvariantViolation(f"{path}: payload length mismatch")
    expect_crc = zlib.crc32(payload, zlib.crc32(header[:-4] + b"\x00" * 4))
    if crc != expect_crc:
        raise InvariantViolation(f"{path}: checksum mismatch")

    grid = WaveGrid(dim, n, L, dealias_cutoff=cutoff)
    per_field = dim * grid.n_total * 16
    fields = []
    offset = 0
    for _ in range(1 + has_b):
        raw = np.frombuffer(payload, dtype="<c16",
                            count=dim * grid.n_total, offset=offset)
        coeffs = raw.reshape((dim,) + grid.shape).astype(complex, copy=True)
        fields.append(SpectralVectorField(grid, coeffs, solenoidal=True))
        offset += per_field
    state = SimState(t, fields[0], fields[1] if has_b else None)
    meta = {
        "grid": grid,
        "kind": KIND_ORDER[kind_idx],
        "nu": nu,
        "nu2": nu2 if KIND_ORDER[kind_idx] is ModelKind.MHD_DECONV else None,
        "alpha": alpha,
        "theta": theta,
        "n_deconv": n_deconv,
    }
    return state, meta
