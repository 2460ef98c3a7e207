import struct

import numpy as np
import pytest

from artscore import checkpoint
from artscore import model_zoo as mz
from artscore.errors import FormatError


def test_generator_roundtrip_within_float32(tmp_path):
    gen = mz.new_photoreal_generator(mz.GeneratorSpec(seed=4))
    path = tmp_path / "g.arsc"
    checkpoint.save_generator(path, gen)
    back = checkpoint.load_generator(path)
    assert back.spec == gen.spec
    for (w, b), (w2, b2) in zip(gen.layers, back.layers):
        np.testing.assert_array_equal(w.astype(np.float32), w2)
        np.testing.assert_array_equal(b.astype(np.float32), b2)


def test_header_layout():
    data = checkpoint.pack(checkpoint.SCORER_SECTION, [(np.ones((2, 3)), np.zeros(2))], {"k": "v"})
    assert data[:4] == b"ARSC"
    assert struct.unpack("<H", data[4:6]) == (1,)
    assert data[6:10] == b"SCOR"
    # last four bytes checksum the payload between header and trailer
    import zlib
    assert struct.unpack("<I", data[-4:])[0] == zlib.crc32(data[6:-4])


def test_weights_are_little_endian_float32():
    w = np.array([[1.5, -2.0]])
    data = checkpoint.pack(checkpoint.GENERATOR_SECTION, [(w, np.array([0.25]))])
    assert struct.pack("<ff", 1.5, -2.0) + struct.pack("<f", 0.25) in data


def test_corruption_detected():
    data = bytearray(checkpoint.pack(checkpoint.SCORER_SECTION, [(np.ones((1, 2)), np.zeros(1))]))
    data[20] ^= 0xFF
    with pytest.raises(FormatError, match="checksum"):
        checkpoint.unpack(bytes(data))


@pytest.mark.parametrize("blob", [b"", b"XXXX\x01\x00" + b"\0" * 20, b"ARSC\x02\x00" + b"\0" * 20])
def test_rejects_foreign_bytes(blob):
    with pytest.raises(FormatError):
        checkpoint.unpack(blob)


def test_section_mismatch(tmp_path):
    path = tmp_path / "s.arsc"
    checkpoint.save(path, checkpoint.SCORER_SECTION, [(np.ones((1, 2)), np.zeros(1))])
    with pytest.raises(FormatError):
        checkpoint.load_generator(path)
