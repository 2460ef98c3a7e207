"""Flat ``key=value`` text files used for configs, manifests and reports."""

import hashlib
import os

from .errors import ConfigError, FormatError


def parse(text, source="<string>"):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return parse(text, source=os.fspath(path))


def dumps(pairs):
    """Serialise an ordered mapping (or pair list); order is preserved."""
    items = pairs.items() if hasattr(pairs, "items") else pairs
    lines = []
    for key, value in items:
        value = str(value)
        if "\n" in value or "#" in value:
            raise FormatError(f"value for {key!r} cannot contain newlines or '#'")
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def write(path, pairs):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps(pairs))
    except OSError as exc:
        raise FormatError(f"cannot write {path}: {exc}") from exc


def digest(mapping):
    """Order-independent short digest of a flat mapping."""
    text = dumps(sorted((str(k), str(v)) for k, v in mapping.items()))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def parse_bool(value, key):
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def parse_floats(value, key):
    try:
        return tuple(float(x) for x in str(value).split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {value!r}") from exc
