"""PLY ingestion and export for voxel point clouds.

Supported subset: a single `vertex` element with x/y/z properties
(integer or floating scalar types) and optional uchar red/green/blue,
in ascii or binary little-endian 1.0. Float coordinates are floored to
the voxel grid. Duplicate coordinates merge on load (first wins); the
merge count is available as `cloud.duplicates_merged`.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .cloud import MAX_BIT_DEPTH, PointCloud


class PlyParseError(ValueError):
    """Malformed PLY input; message names the offending line or byte offset."""


_SCALAR_DTYPES = {
    "char": "<i1",
    "int8": "<i1",
    "uchar": "<u1",
    "uint8": "<u1",
    "short": "<i2",
    "int16": "<i2",
    "ushort": "<u2",
    "uint16": "<u2",
    "int": "<i4",
    "int32": "<i4",
    "uint": "<u4",
    "uint32": "<u4",
    "float": "<f4",
    "float32": "<f4",
    "double": "<f8",
    "float64": "<f8",
}

_COORD_NAMES = ("x", "y", "z")
_COLOR_NAMES = ("red", "green", "blue")


def read_ply(data: bytes, bit_depth: Optional[int] = None) -> PointCloud:
    """Parse PLY bytes into a deduplicated PointCloud.

    Bit depth is chosen automatically (smallest of 8..16 covering the input,
    minimum 10) unless given explicitly.
    """
    header_lines, body_start, line_count = _split_header(data)
    fmt, count, props = _parse_header(header_lines)

    names = [name for name, _ in props]
    for coord in _COORD_NAMES:
        if coord not in names:
            raise PlyParseError(f"vertex element lacks property {coord!r}")
    has_color = all(c in names for c in _COLOR_NAMES)

    if fmt == "ascii":
        raw = _read_ascii_body(data[body_start:], count, props, line_count)
    else:
        raw = _read_binary_body(data[body_start:], count, props, body_start)

    coords = np.stack([raw[c] for c in _COORD_NAMES], axis=1)
    if np.issubdtype(coords.dtype, np.floating):
        if not np.isfinite(coords).all():
            raise PlyParseError("non-finite coordinate in vertex body")
        coords = np.floor(coords).astype(np.int64)
    else:
        coords = coords.astype(np.int64)

    if coords.size and coords.min() < 0:
        bad = int(np.argwhere((coords < 0).any(axis=1))[0][0])
        raise PlyParseError(f"negative coordinate at vertex {bad}")
    if coords.size and coords.max() >= (1 << MAX_BIT_DEPTH):
        bad = int(np.argwhere((coords >= (1 << MAX_BIT_DEPTH)).any(axis=1))[0][0])
        raise PlyParseError(
            f"coordinate at vertex {bad} exceeds {MAX_BIT_DEPTH}-bit grid"
        )

    colors = None
    if has_color:
        colors = np.stack(
            [raw[c].astype(np.uint8) for c in _COLOR_NAMES], axis=1
        )
    return PointCloud(coords, colors, bit_depth=bit_depth)


def write_ply(cloud: PointCloud, fmt: str = "ascii") -> bytes:
    """Serialize a cloud as PLY; read_ply(write_ply(c)) reproduces c's points."""
    if fmt not in ("ascii", "binary"):
        raise ValueError(f"format must be 'ascii' or 'binary', got {fmt!r}")
    has_color = cloud.colors is not None

    lines = ["ply"]
    lines.append(
        "format ascii 1.0" if fmt == "ascii" else "format binary_little_endian 1.0"
    )
    lines.append(f"element vertex {len(cloud)}")
    for name in _COORD_NAMES:
        lines.append(f"property float {name}")
    if has_color:
        for name in _COLOR_NAMES:
            lines.append(f"property uchar {name}")
    lines.append("end_header")
    header = ("\n".join(lines) + "\n").encode("ascii")

    if fmt == "ascii":
        out = [header]
        coords = cloud.coords
        colors = cloud.colors
        for i in range(len(cloud)):
            x, y, z = coords[i]
            if has_color:
                r, g, b = colors[i]
                out.append(f"{x} {y} {z} {r} {g} {b}\n".encode("ascii"))
            else:
                out.append(f"{x} {y} {z}\n".encode("ascii"))
        return b"".join(out)

    fields = [(n, "<f4") for n in _COORD_NAMES]
    if has_color:
        fields += [(n, "<u1") for n in _COLOR_NAMES]
    rec = np.empty(len(cloud), dtype=np.dtype(fields))
    for k, name in enumerate(_COORD_NAMES):
        rec[name] = cloud.coords[:, k].astype(np.float32)
    if has_color:
        for k, name in enumerate(_COLOR_NAMES):
            rec[name] = cloud.colors[:, k]
    return header + rec.tobytes()


def _split_header(data: bytes):
    """Return (header lines, body offset, header line count)."""
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise PlyParseError("missing 'ply' magic or 'end_header' (byte 0)")
    nl = data.find(b"\n", end)
    if nl < 0:
        raise PlyParseError(f"no newline after end_header (byte {end})")
    header_text = data[:nl].decode("ascii", errors="replace")
    lines = [ln.strip("\r") for ln in header_text.split("\n")]
    return lines, nl + 1, len(lines)


def _parse_header(lines: list[str]):
    if lines[0].strip() != "ply":
        raise PlyParseError("first line must be 'ply' (line 1)")

    fmt = None
    count = None
    props: list[tuple[str, str]] = []
    in_vertex = False

    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens:
            continue
        kw = tokens[0]
        if kw == "comment" or kw == "obj_info":
            continue
        if kw == "format":
            if tokens[1:] == ["ascii", "1.0"]:
                fmt = "ascii"
            elif tokens[1:] == ["binary_little_endian", "1.0"]:
                fmt = "binary"
            else:
                raise PlyParseError(f"unsupported format {line!r} (line {lineno})")
        elif kw == "element":
            if len(tokens) != 3:
                raise PlyParseError(f"malformed element line (line {lineno})")
            if tokens[1] == "vertex":
                if count is not None:
                    raise PlyParseError(f"duplicate vertex element (line {lineno})")
                try:
                    count = int(tokens[2])
                except ValueError:
                    raise PlyParseError(
                        f"bad vertex count {tokens[2]!r} (line {lineno})"
                    ) from None
                if count < 0:
                    raise PlyParseError(f"negative vertex count (line {lineno})")
                in_vertex = True
            else:
                raise PlyParseError(
                    f"unsupported element {tokens[1]!r} (line {lineno})"
                )
        elif kw == "property":
            if not in_vertex:
                raise PlyParseError(f"property outside vertex element (line {lineno})")
            if len(tokens) >= 2 and tokens[1] == "list":
                raise PlyParseError(f"list properties unsupported (line {lineno})")
            if len(tokens) != 3:
                raise PlyParseError(f"malformed property line (line {lineno})")
            ptype, name = tokens[1], tokens[2]
            if ptype not in _SCALAR_DTYPES:
                raise PlyParseError(
                    f"unsupported property type {ptype!r} (line {lineno})"
                )
            props.append((name, _SCALAR_DTYPES[ptype]))
        elif kw == "end_header":
            break
        else:
            raise PlyParseError(f"unknown header keyword {kw!r} (line {lineno})")

    if fmt is None:
        raise PlyParseError("header lacks a format line")
    if count is None:
        raise PlyParseError("header lacks an 'element vertex' line")
    if not props:
        raise PlyParseError("vertex element declares no properties")
    return fmt, count, props


def _read_ascii_body(body: bytes, count: int, props, header_lines: int):
    text = body.decode("ascii", errors="replace")
    lines = text.split("\n")
    rows = []
    consumed = 0
    for offset, line in enumerate(lines):
        if consumed == count:
            rest = "".join(lines[offset:]).strip()
            if rest:
                raise PlyParseError(
                    f"trailing data after {count} vertices "
                    f"(line {header_lines + offset + 1})"
                )
            break
        tokens = line.split()
        if not tokens:
            continue
        lineno = header_lines + offset + 1
        if len(tokens) != len(props):
            raise PlyParseError(
                f"expected {len(props)} values, got {len(tokens)} (line {lineno})"
            )
        try:
            rows.append([float(t) for t in tokens])
        except ValueError:
            raise PlyParseError(f"non-numeric vertex value (line {lineno})") from None
        consumed += 1
    if consumed < count:
        raise PlyParseError(
            f"truncated body: header declares {count} vertices, found {consumed}"
        )
    table = np.asarray(rows, dtype=np.float64).reshape(count, len(props))
    return {name: table[:, i] for i, (name, _) in enumerate(props)}


def _read_binary_body(body: bytes, count: int, props, body_start: int):
    dtype = np.dtype([(name, dt) for name, dt in props])
    expected = dtype.itemsize * count
    if len(body) < expected:
        raise PlyParseError(
            f"truncated body: need {expected} bytes for {count} vertices, "
            f"found {len(body)} (byte {body_start + len(body)})"
        )
    if len(body) > expected:
        raise PlyParseError(
            f"trailing data: {len(body) - expected} bytes after vertex body "
            f"(byte {body_start + expected})"
        )
    rec = np.frombuffer(body, dtype=dtype, count=count)
    return {name: rec[name] for name, _ in props}
