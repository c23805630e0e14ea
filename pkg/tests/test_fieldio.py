import numpy as np
import pytest

from glvortex.fieldio import (FieldFormatError, load_configuration, load_fields, save_configuration,
                              save_fields)
from glvortex.grid import VectorField


def test_round_trip_bitwise(tmp_path, disk32, rng):
    u = rng.standard_normal(disk32.shape2) + 1j * rng.standard_normal(disk32.shape2)
    A = VectorField.zeros(disk32)
    A.x[...] = rng.standard_normal(A.x.shape)
    A.y[...] = rng.standard_normal(A.y.shape)
    save_configuration(tmp_path / "c.glf", disk32, u, A, {"note": "x"})
    dom, u2, A2, meta = load_configuration(tmp_path / "c.glf")
    assert dom.to_dict() == disk32.to_dict()
    assert np.array_equal(u, u2) and np.array_equal(A.x, A2.x) and np.array_equal(A.y, A2.y)
    assert meta == {"note": "x"}


def test_bad_magic_and_truncation(tmp_path, disk32):
    p = tmp_path / "f.glf"
    save_fields(p, disk32, {"a": np.arange(10.0)})
    raw = p.read_bytes()
    (tmp_path / "bad.glf").write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(FieldFormatError, match="magic"):
        load_fields(tmp_path / "bad.glf")
    (tmp_path / "short.glf").write_bytes(raw[:-8])
    with pytest.raises(FieldFormatError, match="truncated"):
        load_fields(tmp_path / "short.glf")
    with pytest.raises(FieldFormatError, match="missing"):
        load_configuration(p)
