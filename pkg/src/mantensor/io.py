"""MVT1 tensor files, raw SPD-image ingestion and report CSVs.

MVT1 layout, all integers little-endian:

    offset  size  field
    0       4     magic b"MVT1"
    4       2     format version (u16, currently 1)
    6       1     endianness tag of the payload (b"<")
    7       1     manifold kind (u8: 0 Euclidean, 1 sphere, 2 SPD)
    8       4     intrinsic dimension (u32)
    12      4     embedding dimension (u32)
    16      4     tensor order n (u32)
    20      8n    shape (u64 each)
    20+8n   ...   payload, float64 little-endian, row-major entry order,
                  embedded coordinates contiguous per entry
"""
from __future__ import annotations

import csv
import io as _io
import math
import os
import struct
from math import prod

import numpy as np

from .errors import BadMagic, InvariantViolation, ShapeMismatch, ValidationError
from .experiments import SweepReport, SweepRow
from .manifold import EUCLIDEAN, SPD, SPHERE, ManifoldDescriptor, project_spd
from .mvtensor import MvTensor

MAGIC = b"MVT1"
VERSION = 1
ENDIAN_TAG = b"<"
KIND_CODES = {EUCLIDEAN: 0, SPHERE: 1, SPD: 2}
CODE_KINDS = {v: k for k, v in KIND_CODES.items()}
_FIXED = struct.Struct("<4sHcBIII")

CSV_COLUMNS = ("method", "rank", "eps_rel", "delta_rel", "lower_bound", "time_s", "iters")


def header_size(order):
    return _FIXED.size + 8 * order


def encode_mvt(T: MvTensor) -> bytes:
    d = T.descriptor
    head = _FIXED.pack(MAGIC, VERSION, ENDIAN_TAG, KIND_CODES[d.kind], d.intrinsic_dim, d.embedding_dim, T.order)
    head += struct.pack(f"<{T.order}Q", *T.shape)
    return head + np.ascontiguousarray(T.coords, dtype="<f8").tobytes()


def _repair(desc, coords):
    if desc.kind == SPHERE:
        return desc.manifold.project_point(coords)
    if desc.kind == SPD:
        n = int(round(math.sqrt(desc.embedding_dim)))
        m = coords.reshape(coords.shape[:-1] + (n, n))
        return project_spd(m).reshape(coords.shape)
    return coords


def decode_mvt(buf: bytes, repair=False) -> MvTensor:
    """Parse MVT1 bytes; with ``repair`` invalid entries are projected back onto the manifold."""
    if len(buf) < _FIXED.size:
        raise BadMagic(f"file too short for an MVT1 header ({len(buf)} bytes)")
    magic, version, tag, kind, dim, emb, order = _FIXED.unpack_from(buf, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise BadMagic(f"unsupported format version {version}")
    if tag != ENDIAN_TAG:
        raise BadMagic(f"unsupported endianness tag {tag!r}")
    if kind not in CODE_KINDS:
        raise BadMagic(f"unknown manifold code {kind}")
    desc = ManifoldDescriptor(CODE_KINDS[kind], dim, emb)
    if order < 1 or len(buf) < header_size(order):
        raise BadMagic("truncated header")
    shape = struct.unpack_from(f"<{order}Q", buf, _FIXED.size)
    need = prod(shape) * emb * 8
    body = len(buf) - header_size(order)
    if body != need:
        raise ShapeMismatch(f"payload has {body} bytes, shape {shape} needs {need}")
    coords = np.frombuffer(buf, dtype="<f8", offset=header_size(order)).astype(float).reshape(shape + (emb,))
    ok = desc.manifold.check_point(coords)
    if not np.all(ok):
        if not repair or not np.all(np.isfinite(coords)):
            bad = tuple(int(i) for i in np.argwhere(~ok)[0])
            raise InvariantViolation(f"entry {bad} is not a point of {desc}")
        coords = _repair(desc, coords)
    return MvTensor(desc, coords)


def write_mvt(path, T: MvTensor):
    with open(path, "wb") as fh:
        fh.write(encode_mvt(T))


def read_mvt(path, repair=False) -> MvTensor:
    with open(path, "rb") as fh:
        return decode_mvt(fh.read(), repair=repair)


def parse_crop(spec, dims):
    """Parse "x0:x1,y0:y1,z" into slices/indices (0-based, half-open ranges)."""
    parts = [s.strip() for s in spec.split(",")]
    if len(parts) != len(dims):
        raise ValidationError(f"crop needs {len(dims)} comma-separated parts, got {len(parts)}")
    out = []
    for part, n in zip(parts, dims):
        if ":" in part:
            lo, hi = part.split(":", 1)
            lo = int(lo) if lo else 0
            hi = int(hi) if hi else n
            if not 0 <= lo < hi <= n:
                raise ValidationError(f"crop range {part} outside 0..{n}")
            out.append(slice(lo, hi))
        else:
            i = int(part)
            if not 0 <= i < n:
                raise ValidationError(f"crop index {i} outside 0..{n - 1}")
            out.append(i)
    return tuple(out)


def ingest_spd_image(path, dims, crop=None, clamp_rel=1e-6) -> MvTensor:
    """Read a raw field of 3x3 matrices and project every voxel onto SPD(3).

    The file holds float64 little-endian values in C order with shape
    dims + (3, 3). ``crop`` is a crop string or a tuple of slices/indices;
    integer entries drop that axis.
    """
    dims = tuple(int(x) for x in dims)
    if any(x < 1 for x in dims):
        raise ValidationError("image dimensions must be positive")
    need = prod(dims) * 9 * 8
    size = os.path.getsize(path)
    if size != need:
        raise ShapeMismatch(f"raw file has {size} bytes, dims {dims} need {need}")
    a = np.fromfile(path, dtype="<f8").astype(float).reshape(dims + (3, 3))
    if crop is not None:
        if isinstance(crop, str):
            crop = parse_crop(crop, dims)
        a = a[tuple(crop)]
    if a.ndim < 3:
        raise ValidationError("crop leaves no tensor axes")
    if not np.all(np.isfinite(a)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(a))[0][:-2])
        raise InvariantViolation(f"non-finite value in voxel {bad}")
    m = project_spd(a, clamp_rel)
    return MvTensor(ManifoldDescriptor.spd(3), m.reshape(m.shape[:-2] + (9,)))


def _fmt(x):
    if x is None:
        return ""
    return "%.17g" % x


def format_rank(r):
    return "x".join(str(int(x)) for x in r)


def parse_rank(s):
    return tuple(int(x) for x in s.split("x"))


def report_to_csv(report: SweepReport, with_timing=True) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in report.rows:
        w.writerow(
            [
                row.method,
                format_rank(row.rank),
                _fmt(row.eps_rel),
                _fmt(row.delta_rel),
                _fmt(row.lower_bound),
                _fmt(row.wall_time) if with_timing else "",
                "" if row.iterations is None else str(int(row.iterations)),
            ]
        )
    return buf.getvalue()


def write_report_csv(path, report: SweepReport, with_timing=True):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report_to_csv(report, with_timing))


def _opt_float(s):
    return float(s) if s != "" else None


def csv_to_report(text) -> SweepReport:
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValidationError(f"report header must be {','.join(CSV_COLUMNS)}")
    out = []
    for r in rows[1:]:
        if len(r) != len(CSV_COLUMNS):
            raise ShapeMismatch(f"report row has {len(r)} fields, expected {len(CSV_COLUMNS)}")
        method, rank, eps, delta, lb, t, iters = r
        out.append(
            SweepRow(
                method,
                parse_rank(rank),
                float(eps),
                _opt_float(delta),
                float(lb),
                _opt_float(t),
                int(iters) if iters != "" else None,
            )
        )
    return SweepReport(rows=out)


def read_report_csv(path) -> SweepReport:
    with open(path, encoding="utf-8", newline="") as fh:
        return csv_to_report(fh.read())
