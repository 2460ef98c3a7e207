"""The ``ARSC`` parameter container shared by generators and scorers.

Layout (all little-endian)::

    b"ARSC"              magic
    u16                  format version (1)
    payload:
        4 bytes          section tag, b"GENR" or b"SCOR"
        u32 + bytes      metadata, key=value UTF-8 text
        u32              layer count
        per layer:
            u32          block length in bytes (excluding this field)
            u32, u32     rows, cols of the weight matrix
            f32[rows*cols]  weights, row-major
            f32[rows]    bias
    u32                  CRC-32 of the payload

Values are stored as IEEE-754 float32; loading widens them to float64.
"""

import struct
import zlib

import numpy as np

from . import kvtext
from .errors import FormatError

MAGIC = b"ARSC"
VERSION = 1
GENERATOR_SECTION = b"GENR"
SCORER_SECTION = b"SCOR"


def pack(section, layers, meta=None):
    if section not in (GENERATOR_SECTION, SCORER_SECTION):
        raise FormatError(f"unknown section tag {section!r}")
    meta_bytes = kvtext.dumps(meta or {}).encode("utf-8")
    parts = [section, struct.pack("<I", len(meta_bytes)), meta_bytes, struct.pack("<I", len(layers))]
    for w, b in layers:
        w = np.asarray(w)
        b = np.asarray(b)
        rows, cols = w.shape
        if b.shape != (rows,):
            raise FormatError(f"bias shape {b.shape} does not match weight rows {rows}")
        body = (
            struct.pack("<II", rows, cols)
            + np.ascontiguousarray(w, dtype="<f4").tobytes()
            + np.ascontiguousarray(b, dtype="<f4").tobytes()
        )
        parts.append(struct.pack("<I", len(body)))
        parts.append(body)
    payload = b"".join(parts)
    return MAGIC + struct.pack("<H", VERSION) + payload + struct.pack("<I", zlib.crc32(payload))


def unpack(data):
    """Parse container bytes into ``(section, layers, meta)``."""
    if len(data) < 6 + 4 + 4 + 4 + 4 or data[:4] != MAGIC:
        raise FormatError("not an ARSC container")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported ARSC version {version}")
    payload = data[6:-4]
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(payload) != crc:
        raise FormatError("ARSC checksum mismatch")
    try:
        section = payload[:4]
        pos = 4
        (meta_len,) = struct.unpack_from("<I", payload, pos)
        pos += 4
        meta = kvtext.parse(payload[pos : pos + meta_len].decode("utf-8"), source="ARSC metadata")
        pos += meta_len
        (count,) = struct.unpack_from("<I", payload, pos)
        pos += 4
        layers = []
        for _ in range(count):
            (block_len,) = struct.unpack_from("<I", payload, pos)
            pos += 4
            rows, cols = struct.unpack_from("<II", payload, pos)
            if block_len != 8 + 4 * (rows * cols + rows):
                raise FormatError("ARSC layer block length does not match its shape")
            w = np.frombuffer(payload, dtype="<f4", count=rows * cols, offset=pos + 8)
            b = np.frombuffer(payload, dtype="<f4", count=rows, offset=pos + 8 + 4 * rows * cols)
            layers.append((w.reshape(rows, cols).astype(np.float64), b.astype(np.float64)))
            pos += block_len
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"truncated or malformed ARSC payload: {exc}") from exc
    if pos != len(payload):
        raise FormatError("trailing bytes in ARSC payload")
    if section not in (GENERATOR_SECTION, SCORER_SECTION):
        raise FormatError(f"unknown section tag {section!r}")
    return section, layers, meta


def save(path, section, layers, meta=None):
    data = pack(section, layers, meta)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise FormatError(f"cannot write {path}: {exc}") from exc


def load(path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return unpack(data)


def save_generator(path, gen):
    s = gen.spec
    meta = {
        "latent_dim": s.latent_dim,
        "layer_widths": ",".join(map(str, s.layer_widths)),
        "activations": ",".join(s.activations),
        "image_shape": ",".join(map(str, s.image_shape)),
        "seed": s.seed,
    }
    save(path, GENERATOR_SECTION, gen.layers, meta)


def load_generator(path):
    from .model_zoo import GeneratorParams, GeneratorSpec

    section, layers, meta = load(path)
    if section != GENERATOR_SECTION:
        raise FormatError(f"{path} holds a {section.decode()} section, not a generator")
    try:
        spec = GeneratorSpec(
            latent_dim=int(meta["latent_dim"]),
            layer_widths=tuple(int(x) for x in meta["layer_widths"].split(",")),
            activations=tuple(meta["activations"].split(",")),
            image_shape=tuple(int(x) for x in meta["image_shape"].split(",")),
            seed=int(meta["seed"]),
        )
    except KeyError as exc:
        raise FormatError(f"generator metadata lacks {exc}") from exc
    return GeneratorParams(spec, layers)
