"""Helpers for the line-oriented text artifacts (codebook, dataset, Q-table)."""

from __future__ import annotations

from .errors import FormatError, UnsupportedVersionError


def fmt(x: float) -> str:
    # 17 significant digits round-trips every IEEE double
    return format(float(x), ".17g")


def format_header(magic: str, fields: dict) -> str:
    parts = [magic, "v1"]
    for key, value in fields.items():
        if isinstance(value, float):
            value = fmt(value)
        parts.append(f"{key}={value}")
    return " ".join(parts)


def parse_header(line: str, magic: str, path=None) -> dict:
    tokens = line.split()
    if len(tokens) < 2 or tokens[0] != magic:
        raise FormatError(f"expected {magic!r} header", path, 1)
    if tokens[1] != "v1":
        raise UnsupportedVersionError(
            f"unsupported {magic} version {tokens[1]!r} (only v1 is understood)", path, 1
        )
    fields = {}
    for tok in tokens[2:]:
        key, sep, value = tok.partition("=")
        if not sep or not key:
            raise FormatError(f"malformed header field {tok!r}", path, 1)
        fields[key] = value
    return fields


def header_int(fields: dict, key: str, path=None) -> int:
    try:
        return int(fields[key])
    except KeyError:
        raise FormatError(f"header is missing {key!r}", path, 1) from None
    except ValueError:
        raise FormatError(f"header field {key!r} is not an integer", path, 1) from None


def header_float(fields: dict, key: str, path=None) -> float:
    try:
        return float(fields[key])
    except KeyError:
        raise FormatError(f"header is missing {key!r}", path, 1) from None
    except ValueError:
        raise FormatError(f"header field {key!r} is not a number", path, 1) from None


def parse_floats(tokens, path, lineno) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise FormatError(f"bad number ({exc})", path, lineno) from None


def read_lines(path) -> list[str]:
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    if not text:
        raise FormatError("empty file", path)
    lines = text.split("\n")
    if lines[-1] != "":
        raise FormatError("truncated file (no final newline)", path, len(lines))
    lines.pop()
    return lines


def write_lines(path, lines) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
