"""Readers and writers for SPECT volumes, cohort manifests and SBR tables.

Volumes are held as ``(nx, ny, nz)`` float64 arrays; the third axis indexes
axial slices.  Two on-disk encodings are supported:

* single-file NIfTI-1 (``.nii`` or gzip-compressed ``.nii.gz``), either
  endianness, datatypes uint8/int16/int32/float32/float64;
* a raw format: a JSON sidecar describing the grid plus a little-endian
  float32 blob stored x-fastest (the same voxel order as NIfTI).
"""

import csv
import gzip
import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import (
    BadRow,
    DuplicateSubject,
    LengthMismatch,
    MalformedHeader,
    MissingHeader,
    NonFiniteData,
    StriatalShapeError,
    TruncatedData,
    UnsupportedDatatype,
)

EXPECTED_DIMS = (91, 109, 91)
LABELS = ("Normal", "SWEDD", "PD")

# NIfTI-1 datatype code -> numpy base type
_NIFTI_DTYPES = {
    2: "u1",
    4: "i2",
    8: "i4",
    16: "f4",
    64: "f8",
}
_NIFTI_CODES = {np.dtype(v).str[1:]: k for k, v in _NIFTI_DTYPES.items()}


@dataclass(frozen=True)
class Volume:
    """A 3D scalar grid with voxel spacing in millimetres.

    ``data`` has shape ``dims`` and is indexed ``[x, y, z]``.
    """

    data: np.ndarray
    voxel_size_mm: Tuple[float, float, float] = (2.0, 2.0, 2.0)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 3 or min(data.shape) < 1:
            raise MalformedHeader(f"volume must be 3D and non-empty, got shape {data.shape}")
        if len(self.voxel_size_mm) != 3 or not all(
            math.isfinite(s) and s > 0 for s in self.voxel_size_mm
        ):
            raise MissingHeader(f"voxel sizes must be positive, got {self.voxel_size_mm}")
        if not np.all(np.isfinite(data)):
            raise NonFiniteData("volume contains NaN or Inf values")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "voxel_size_mm", tuple(float(s) for s in self.voxel_size_mm))

    @property
    def dims(self):
        return tuple(int(d) for d in self.data.shape)

    @property
    def nz(self):
        return self.data.shape[2]

    def axial_slice(self, k):
        """Slice ``k`` as a ``(ny, nx)`` image, rows = y, columns = x."""
        return self.data[:, :, k].T


def _warn_dims(dims):
    # a single slice of the expected grid is a stored mean image
    if tuple(dims) not in (EXPECTED_DIMS, EXPECTED_DIMS[:2] + (1,)):
        warnings.warn(
            f"volume dims {tuple(dims)} differ from the expected {EXPECTED_DIMS}",
            stacklevel=3,
        )


def _read_bytes(path):
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def read_nifti(path) -> Volume:
    """Read a single-file NIfTI-1 volume.

    Scaling (``scl_slope``/``scl_inter``) is applied; a slope of 0 means
    "no scaling".  Orientation matrices are ignored: the third axis is taken
    to be the axial slice index.
    """
    raw = _read_bytes(path)
    if len(raw) < 348:
        raise MalformedHeader(f"{path}: file shorter than a NIfTI-1 header")

    for endian in "<>":
        if struct.unpack(endian + "i", raw[:4])[0] == 348:
            break
    else:
        raise MalformedHeader(f"{path}: sizeof_hdr is not 348")

    dim = struct.unpack(endian + "8h", raw[40:56])
    datatype, _bitpix = struct.unpack(endian + "2h", raw[70:74])
    pixdim = struct.unpack(endian + "8f", raw[76:108])
    vox_offset, slope, inter = struct.unpack(endian + "3f", raw[108:120])

    ndim = dim[0]
    if ndim == 4 and dim[4] == 1:
        ndim = 3
    if ndim != 3:
        raise MalformedHeader(f"{path}: expected a 3D volume, dim = {dim}")
    dims = tuple(int(d) for d in dim[1:4])
    if min(dims) < 1:
        raise MalformedHeader(f"{path}: non-positive dimension in {dims}")
    if datatype not in _NIFTI_DTYPES:
        raise UnsupportedDatatype(f"{path}: datatype code {datatype}")

    dtype = np.dtype(endian + _NIFTI_DTYPES[datatype])
    count = dims[0] * dims[1] * dims[2]
    offset = int(vox_offset) if vox_offset >= 348 else 352
    need = offset + count * dtype.itemsize
    if len(raw) < need:
        raise TruncatedData(f"{path}: need {need} bytes, file has {len(raw)}")

    values = np.frombuffer(raw, dtype=dtype, count=count, offset=offset).astype(np.float64)
    if slope == 0 or not math.isfinite(slope):
        slope = 1.0
    if not math.isfinite(inter):
        inter = 0.0
    values = values * float(slope) + float(inter)

    _warn_dims(dims)
    voxel = tuple(abs(float(p)) for p in pixdim[1:4])
    return Volume(values.reshape(dims, order="F"), voxel)


def write_nifti(volume: Volume, path, dtype="float32", big_endian=False, scl_slope=1.0, scl_inter=0.0):
    """Write ``volume`` as single-file NIfTI-1.

    ``scl_slope``/``scl_inter`` are stored in the header; the payload holds
    ``(data - inter) / slope`` cast to ``dtype``.
    """
    endian = ">" if big_endian else "<"
    base = np.dtype(dtype).str[1:]
    if base not in _NIFTI_CODES:
        raise UnsupportedDatatype(f"cannot write dtype {dtype}")
    dt = np.dtype(endian + base)

    hdr = bytearray(352)
    struct.pack_into(endian + "i", hdr, 0, 348)
    nx, ny, nz = volume.dims
    struct.pack_into(endian + "8h", hdr, 40, 3, nx, ny, nz, 1, 1, 1, 1)
    struct.pack_into(endian + "2h", hdr, 70, _NIFTI_CODES[base], dt.itemsize * 8)
    struct.pack_into(endian + "8f", hdr, 76, 1.0, *volume.voxel_size_mm, 1.0, 1.0, 1.0, 1.0)
    struct.pack_into(endian + "3f", hdr, 108, 352.0, scl_slope, scl_inter)
    hdr[344:348] = b"n+1\x00"

    payload = (volume.data - scl_inter) / (scl_slope or 1.0)
    payload = payload.astype(dt).tobytes(order="F")
    blob = bytes(hdr) + payload
    path = Path(path)
    if path.suffix == ".gz":
        blob = gzip.compress(blob)
    path.write_bytes(blob)


def _raw_paths(path):
    path = Path(path)
    if path.suffix == ".json":
        return path, path.with_suffix(".f32")
    return path.with_suffix(".json"), path


def read_raw(path) -> Volume:
    """Read the raw format; ``path`` may name either the sidecar or the blob."""
    sidecar, blob = _raw_paths(path)
    if not sidecar.exists():
        raise MissingHeader(f"{sidecar}: sidecar header not found")
    try:
        header = json.loads(sidecar.read_text())
        dims = tuple(int(d) for d in header["dims"])
        voxel = tuple(float(s) for s in header["voxel_size_mm"])
        width = int(header.get("scalar_bytes", 4))
    except (KeyError, TypeError, ValueError) as exc:
        raise MissingHeader(f"{sidecar}: incomplete header ({exc})") from exc
    if len(dims) != 3 or min(dims) < 1:
        raise MissingHeader(f"{sidecar}: bad dims {dims}")
    if len(voxel) != 3 or not all(s > 0 for s in voxel):
        raise MissingHeader(f"{sidecar}: voxel sizes must be positive, got {voxel}")
    if width != 4:
        raise MissingHeader(f"{sidecar}: only 4-byte float scalars are supported")

    data = blob.read_bytes()
    count = dims[0] * dims[1] * dims[2]
    if len(data) != 4 * count:
        raise LengthMismatch(f"{blob}: expected {4 * count} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f4").astype(np.float64)
    _warn_dims(dims)
    return Volume(values.reshape(dims, order="F"), voxel)


def write_raw(volume: Volume, path):
    """Write the raw format; returns ``(sidecar_path, blob_path)``."""
    sidecar, blob = _raw_paths(path)
    header = {
        "dims": list(volume.dims),
        "voxel_size_mm": list(volume.voxel_size_mm),
        "scalar_bytes": 4,
        "byte_order": "little",
        "voxel_order": "x-fastest",
    }
    sidecar.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    blob.write_bytes(volume.data.astype("<f4").tobytes(order="F"))
    return sidecar, blob


def read_volume(path) -> Volume:
    """Dispatch on file name: ``.nii``/``.nii.gz`` or raw format."""
    name = str(path).lower()
    if name.endswith(".nii") or name.endswith(".nii.gz"):
        return read_nifti(path)
    return read_raw(path)


@dataclass(frozen=True)
class ManifestEntry:
    subject_id: str
    path: Path
    label: str
    threshold_override: Optional[float] = None


@dataclass
class CohortManifest:
    entries: List[ManifestEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _canonical_label(text):
    for label in LABELS:
        if text.strip().lower() == label.lower():
            return label
    return None


def load_manifest(path) -> CohortManifest:
    """Load a cohort manifest CSV.

    Columns: ``subject_id,path,label[,threshold_override]``.  Relative paths
    are resolved against the manifest's directory.
    """
    path = Path(path)
    entries, seen = [], set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"subject_id", "path", "label"} - set(reader.fieldnames or ())
        if missing:
            raise MissingHeader(f"{path}: missing columns {sorted(missing)}")
        for i, row in enumerate(reader, start=1):
            sid = (row["subject_id"] or "").strip()
            if not sid:
                raise BadRow(i, "empty subject_id")
            if sid in seen:
                raise DuplicateSubject(f"{path}: subject {sid!r} listed twice")
            seen.add(sid)
            label = _canonical_label(row["label"] or "")
            if label is None:
                raise BadRow(i, f"unknown label {row['label']!r}")
            override = (row.get("threshold_override") or "").strip()
            threshold = None
            if override:
                try:
                    threshold = float(override)
                except ValueError:
                    raise BadRow(i, f"threshold_override {override!r}") from None
                if not 0 < threshold < 1:
                    raise BadRow(i, "threshold_override must lie in (0, 1)")
            vol_path = Path(row["path"].strip())
            if not vol_path.is_absolute():
                vol_path = path.parent / vol_path
            entries.append(ManifestEntry(sid, vol_path, label, threshold))
    return CohortManifest(entries)


def write_manifest(manifest: CohortManifest, path):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "path", "label", "threshold_override"])
        for e in manifest:
            p = e.path
            try:
                p = p.relative_to(path.parent)
            except ValueError:
                pass
            writer.writerow([
                e.subject_id, str(p), e.label,
                "" if e.threshold_override is None else repr(e.threshold_override),
            ])


@dataclass(frozen=True)
class SbrRecord:
    subject_id: str
    caudate_left: float
    caudate_right: float
    putamen_left: float
    putamen_right: float


SBR_COLUMNS = ("subject_id", "caudate_l", "caudate_r", "putamen_l", "putamen_r")


def load_sbr_table(path) -> List[SbrRecord]:
    """Load striatal binding ratios; row indices in errors count data rows from 1."""
    records, seen = [], set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if tuple(header) != SBR_COLUMNS:
            raise MissingHeader(f"{path}: expected header {','.join(SBR_COLUMNS)}")
        for i, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise BadRow(i, f"expected 5 fields, got {len(row)}")
            sid = row[0].strip()
            try:
                values = [float(v) for v in row[1:]]
            except ValueError:
                raise BadRow(i, "non-numeric ratio") from None
            if not all(math.isfinite(v) and v >= 0 for v in values):
                raise BadRow(i, "ratios must be finite and non-negative")
            if sid in seen:
                raise DuplicateSubject(f"{path}: subject {sid!r} listed twice")
            seen.add(sid)
            records.append(SbrRecord(sid, *values))
    return records


def write_sbr_table(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SBR_COLUMNS)
        for r in records:
            writer.writerow([r.subject_id, repr(r.caudate_left), repr(r.caudate_right),
                             repr(r.putamen_left), repr(r.putamen_right)])


__all__ = [
    "Volume", "read_nifti", "write_nifti", "read_raw", "write_raw", "read_volume",
    "CohortManifest", "ManifestEntry", "load_manifest", "write_manifest",
    "SbrRecord", "load_sbr_table", "write_sbr_table", "LABELS", "StriatalShapeError",
]
