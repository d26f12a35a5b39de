"""File formats for covariance sets, feature sets and assignments.

Binary container (shared by covariances and features):

    line 1 (ASCII): ``pilotsim-mat 1``
    line 2 (ASCII): ``cov <N> <M> <S>``  or  ``feat <KIND> <N> <DIM>``
    payload: little-endian float64 (re, im) pairs, C row-major.

Covariance payloads hold the N*S diagonal sector blocks of size M-by-M,
UE-major then sector (off-diagonal sector blocks are structurally zero
and not stored). Feature payloads hold N*DIM entries with zero
imaginary parts. CSV exports carry chart points and pilot assignments.
"""

from __future__ import annotations

import numpy as np

from .assignment import PilotAssignment
from .channel import CovarianceSet
from .features import FEATURE_KINDS, FeatureSet

_MAGIC = "pilotsim-mat 1"


def _write_container(path, header_fields, payload: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(f"{_MAGIC}\n".encode("ascii"))
        fh.write((" ".join(str(f) for f in header_fields) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(payload, dtype="<c16").tobytes())


def _read_container(path):
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii").strip()
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a pilotsim matrix file (bad magic {magic!r})")
        header = fh.readline().decode("ascii").split()
        payload = np.frombuffer(fh.read(), dtype="<c16")
    return header, payload


def save_covariances(path, covariances: CovarianceSet) -> None:
    n, s, m = covariances.blocks.shape[:3]
    _write_container(path, ["cov", n, m, s], covariances.blocks)


def load_covariances(path) -> CovarianceSet:
    header, payload = _read_container(path)
    if header[0] != "cov" or len(header) != 4:
        raise ValueError(f"{path}: expected a covariance header, got {header!r}")
    n, m, s = (int(x) for x in header[1:])
    expected = n * s * m * m
    if payload.size != expected:
        raise ValueError(f"{path}: payload holds {payload.size} entries, expected {expected}")
    return CovarianceSet(blocks=payload.reshape(n, s, m, m).copy())


def save_features(path, features: FeatureSet) -> None:
    n, dim = features.vectors.shape
    _write_container(path, ["feat", features.kind, n, dim],
                     features.vectors.astype(complex))


def load_features(path) -> FeatureSet:
    header, payload = _read_container(path)
    if header[0] != "feat" or len(header) != 4:
        raise ValueError(f"{path}: expected a feature header, got {header!r}")
    kind = header[1]
    if kind not in FEATURE_KINDS:
        raise ValueError(f"{path}: unknown feature kind {kind!r}")
    n, dim = int(header[2]), int(header[3])
    if payload.size != n * dim:
        raise ValueError(f"{path}: payload holds {payload.size} entries, expected {n * dim}")
    return FeatureSet(kind=kind, vectors=payload.reshape(n, dim).real.copy())


def export_chart_csv(path, features: FeatureSet) -> None:
    """Chart points as ``ue_index, coord_1..coord_C`` rows."""
    n, dim = features.vectors.shape
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("ue_index," + ",".join(f"coord_{c + 1}" for c in range(dim)) + "\n")
        for ue in range(n):
            coords = ",".join(f"{v:.12g}" for v in features.vectors[ue])
            fh.write(f"{ue},{coords}\n")


def export_assignment_csv(path, assignment: PilotAssignment) -> None:
    seed = "" if assignment.seed is None else str(assignment.seed)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("ue_index,pilot_index,method,seed\n")
        for ue, pilot in enumerate(assignment.pilots):
            fh.write(f"{ue},{int(pilot)},{assignment.method},{seed}\n")
