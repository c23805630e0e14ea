"""Binary field containers: magic, a JSON header and little-endian float64 arrays.

Layout: ``GLFIELD1`` | uint32 header length | header JSON | payload.  The header lists
the arrays in payload order with their shapes; complex arrays are stored as
interleaved real/imaginary pairs.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .grid import Domain, VectorField

MAGIC = b"GLFIELD1"


class FieldFormatError(ValueError):
    pass


def save_fields(path, domain: Domain, arrays: dict, meta: dict | None = None):
    """Write named arrays (real or complex, each of any shape) with the domain."""
    entries, chunks = [], []
    for name, arr in arrays.items():
        a = np.asarray(arr)
        cplx = np.iscomplexobj(a)
        data = np.ascontiguousarray(a, dtype=np.complex128 if cplx else np.float64)
        entries.append({"name": name, "shape": list(a.shape), "complex": bool(cplx)})
        chunks.append(data.view(np.float64).astype("<f8").tobytes())
    header = json.dumps({"domain": domain.to_dict(), "arrays": entries, "meta": meta or {}},
                        sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for c in chunks:
            fh.write(c)


def load_fields(path):
    """Return (domain, {name: array}, meta)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise FieldFormatError(f"{path}: not a field container (bad magic)")
    (n,) = struct.unpack("<I", raw[8:12])
    try:
        header = json.loads(raw[12:12 + n])
    except json.JSONDecodeError as exc:
        raise FieldFormatError(f"{path}: corrupt header ({exc.msg})") from None
    off = 12 + n
    out = {}
    for e in header["arrays"]:
        count = int(np.prod(e["shape"], dtype=np.int64)) * (2 if e["complex"] else 1)
        end = off + 8 * count
        if end > len(raw):
            raise FieldFormatError(f"{path}: truncated payload in array {e['name']!r}")
        a = np.frombuffer(raw[off:end], dtype="<f8").astype(np.float64)
        if e["complex"]:
            a = a.view(np.complex128)
        out[e["name"]] = a.reshape(e["shape"])
        off = end
    return Domain.from_dict(header["domain"]), out, header.get("meta", {})


def save_configuration(path, domain: Domain, u, A: VectorField, meta: dict | None = None):
    save_fields(path, domain, {"u": u, "A_x": A.x, "A_y": A.y}, meta)


def load_configuration(path):
    """Return (domain, u, A, meta) from a container written by save_configuration."""
    domain, arr, meta = load_fields(path)
    for k in ("u", "A_x", "A_y"):
        if k not in arr:
            raise FieldFormatError(f"{path}: missing array {k!r}")
    return domain, arr["u"], VectorField(arr["A_x"], arr["A_y"]), meta
