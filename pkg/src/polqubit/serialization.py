"""File formats shared by the library and the command line.

Matrices are JSON objects ``{"re": [[...]], "im": [[...]]}``; Poincare vectors
are ``{"rH":, "rD":, "rR":}``. Angles are stored in degrees and path
differences in micrometers; everything in memory uses radians and meters.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import PoincareVector, check_density_matrix, rho_from_poincare
from .counting import CountRecord
from .process import BASIS_ID, ChiMatrix, SphereMap

__all__ = [
    "FormatError",
    "matrix_to_json",
    "matrix_from_json",
    "poincare_to_json",
    "poincare_from_json",
    "state_from_json",
    "chi_to_json",
    "chi_from_json",
    "element_to_json",
    "element_from_json",
    "counts_to_csv",
    "counts_from_csv",
    "sphere_map_to_csv",
    "profile_to_csv",
    "csv_table",
    "equirectangular_svg",
    "dumps",
    "atomic_write",
]

COUNTS_HEADER = ("N0", "N1", "N2", "N3", "duration_s")
SPHERE_MAP_HEADER = ("in_rH", "in_rD", "in_rR", "out_rH", "out_rD", "out_rR", "weight")
PROFILE_HEADER = ("radius", "sigma_radial", "sigma_t1", "sigma_t2")


class FormatError(ValueError):
    """Malformed input file content."""


def _clean(x: float) -> float:
    # -0.0 and 0.0 must serialize identically
    x = float(x)
    return 0.0 if x == 0.0 else x


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "re": [[_clean(v) for v in row] for row in m.real],
        "im": [[_clean(v) for v in row] for row in m.imag],
    }


def matrix_from_json(obj, shape=(2, 2)) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"matrix JSON needs numeric 're' and 'im' arrays: {exc}") from exc
    if re.shape != tuple(shape) or im.shape != tuple(shape):
        raise FormatError(f"matrix must have shape {shape}, got {re.shape} / {im.shape}")
    m = re + 1j * im
    if not np.all(np.isfinite(m)):
        raise FormatError("matrix entries must be finite")
    return m


def poincare_to_json(r) -> dict:
    r_h, r_d, r_r = (float(x) for x in r)
    return {"rH": _clean(r_h), "rD": _clean(r_d), "rR": _clean(r_r)}


def poincare_from_json(obj) -> PoincareVector:
    try:
        return PoincareVector(float(obj["rH"]), float(obj["rD"]), float(obj["rR"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"Poincare JSON needs numeric rH, rD, rR: {exc}") from exc


def state_from_json(obj) -> np.ndarray:
    """Accept either a density matrix or a Poincare vector object."""
    if not isinstance(obj, dict):
        raise FormatError("state JSON must be an object")
    if "re" in obj:
        return check_density_matrix(matrix_from_json(obj))
    if "rH" in obj:
        return rho_from_poincare(poincare_from_json(obj))
    raise FormatError("state JSON needs either 're'/'im' or 'rH'/'rD'/'rR'")


def chi_to_json(chi: ChiMatrix) -> dict:
    out = {"basis": chi.basis, **matrix_to_json(chi.chi)}
    if chi.low_confidence:
        out["low_confidence"] = list(chi.low_confidence)
    return out


def chi_from_json(obj) -> ChiMatrix:
    basis = obj.get("basis", BASIS_ID) if isinstance(obj, dict) else None
    if basis != BASIS_ID:
        raise FormatError(f"unsupported chi basis {basis!r}")
    return ChiMatrix(matrix_from_json(obj, (4, 4)), basis, tuple(obj.get("low_confidence", ())))


def element_to_json(el: dict) -> dict:
    kind = el["kind"]
    if kind in ("hwp", "qwp"):
        return {"kind": kind, "theta_deg": math.degrees(el["theta"])}
    if kind == "waveplate":
        return {
            "kind": kind,
            "retardance_deg": math.degrees(el["retardance"]),
            "theta_deg": math.degrees(el["theta"]),
        }
    if kind == "partial_polarizer":
        return {"kind": kind, "tH": float(el["tH"]), "tV": float(el["tV"])}
    if kind == "decoherer":
        basis = el.get("basis")
        return {
            "kind": kind,
            "opd_um": el["opd"] * 1e6,
            "basis": None if basis is None else matrix_to_json(basis),
        }
    raise FormatError(f"unknown element kind {kind!r}")


def element_from_json(obj) -> dict:
    """Convert a file element (degrees, micrometers) to the in-memory form."""
    try:
        kind = obj["kind"]
        if kind in ("hwp", "qwp"):
            return {"kind": kind, "theta": math.radians(float(obj["theta_deg"]))}
        if kind == "waveplate":
            return {
                "kind": kind,
                "retardance": math.radians(float(obj["retardance_deg"])),
                "theta": math.radians(float(obj["theta_deg"])),
            }
        if kind == "partial_polarizer":
            t_h, t_v = float(obj["tH"]), float(obj["tV"])
            if not (0.0 <= t_h <= 1.0 and 0.0 <= t_v <= 1.0):
                raise FormatError("partial polarizer amplitudes must lie in [0, 1]")
            return {"kind": kind, "tH": t_h, "tV": t_v}
        if kind == "decoherer":
            opd = float(obj["opd_um"]) * 1e-6
            if opd < 0:
                raise FormatError("opd_um must be nonnegative")
            basis = obj.get("basis")
            el = {"kind": kind, "opd": opd}
            if basis is not None:
                el["basis"] = matrix_from_json(basis)
            return el
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"bad optical element {obj!r}: {exc}") from exc
    raise FormatError(f"unknown element kind {kind!r}")


def counts_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNTS_HEADER)
    for rec in records:
        w.writerow([*rec.n, repr(float(rec.duration_s))])
    return buf.getvalue()


def counts_from_csv(text: str) -> list[CountRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise FormatError("empty counts file")
    header = tuple(h.strip() for h in rows[0])
    if header[:4] != COUNTS_HEADER[:4]:
        raise FormatError(f"counts header must start with {','.join(COUNTS_HEADER[:4])}")
    records = []
    for i, row in enumerate(rows[1:]):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            n = [int(c) for c in row[:4]]
            duration = float(row[4]) if len(row) > 4 and row[4].strip() else 100.0
            records.append(CountRecord(tuple(n), duration))
        except (ValueError, IndexError) as exc:
            raise FormatError(f"row {i}: {exc}") from exc
    if not records:
        raise FormatError("counts file has no data rows")
    return records


def csv_table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(_clean(x)) for x in row])
    return buf.getvalue()


def sphere_map_to_csv(m: SphereMap) -> str:
    rows = np.column_stack([m.inputs, m.outputs, m.weights])
    return csv_table(SPHERE_MAP_HEADER, rows)


def profile_to_csv(profile) -> str:
    rows = [(e.radius, e.radial_semiaxis, *e.transverse_semiaxes) for e in profile]
    return csv_table(PROFILE_HEADER, rows)


def _lonlat(r) -> tuple[float, float]:
    r = np.asarray(r, dtype=float)
    return math.degrees(math.atan2(r[1], r[0])), math.degrees(math.atan2(r[2], math.hypot(r[0], r[1])))


def equirectangular_svg(points, *, sizes=None, title: str = "", width: int = 720) -> str:
    """Flat longitude/latitude plot of Poincare vectors.

    Longitude is the azimuth in the rH-rD plane, latitude the elevation
    toward rR. Marker radius grows with ``sizes`` (default: vector length).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    height = width // 2
    if sizes is None:
        sizes = np.linalg.norm(pts, axis=1)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white" stroke="black"/>',
        f'<line x1="0" y1="{height / 2:g}" x2="{width}" y2="{height / 2:g}" stroke="#bbb"/>',
        f'<line x1="{width / 2:g}" y1="0" x2="{width / 2:g}" y2="{height}" stroke="#bbb"/>',
    ]
    if title:
        lines.append(f'<text x="6" y="16" font-size="12">{title}</text>')
    for r, s in zip(pts, sizes):
        lon, lat = _lonlat(r)
        x = (lon + 180.0) / 360.0 * width
        y = (90.0 - lat) / 180.0 * height
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{1.0 + 2.0 * float(s):.2f}" fill="steelblue"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def dumps(obj) -> str:
    """Deterministic JSON text."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
