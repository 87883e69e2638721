"""Plain-text field files (CSV, PGM) and the run manifest."""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .moyal import CoefficientField, GridMismatchError, PhaseSpaceGrid

__all__ = [
    "MID_GRAY",
    "write_field_csv",
    "read_field_csv",
    "write_pgm",
    "pgm_levels",
    "write_table_csv",
    "sha256_file",
    "write_manifest",
]

MID_GRAY = 128  # a zero value maps to 127.5, rounded half away from zero


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field_csv(field_: CoefficientField, path) -> Path:
    """Header ``q,p,w`` then one row per grid point, q outer, 17 significant digits."""
    path = Path(path)
    if not np.all(np.isfinite(field_.data)):
        raise ValueError("refusing to write a field with non-finite values")
    q, p, W = field_.grid.q, field_.grid.p, field_.data
    qs = [_fmt(x) for x in q]
    ps = [_fmt(x) for x in p]
    lines = ["q,p,w"]
    for i, qi in enumerate(qs):
        row = W[i]
        lines.extend(f"{qi},{pj},{_fmt(row[j])}" for j, pj in enumerate(ps))
    path.write_text("\n".join(lines) + "\n")
    return path


def _grid_from_axes(q: np.ndarray, p: np.ndarray, hbar: float, mass: float) -> PhaseSpaceGrid:
    def axis(x):
        n = x.size
        J = int(round(math.log2(n)))
        if 2**J != n:
            raise GridMismatchError(f"axis length {n} is not a power of two")
        step = (x[-1] - x[0]) / (n - 1)
        return float(x[0]), float(step * n), J

    q0, Lq, Jq = axis(q)
    p0, Lp, Jp = axis(p)
    return PhaseSpaceGrid(q0, Lq, p0, Lp, Jq, Jp, hbar, mass)


def read_field_csv(path, grid: PhaseSpaceGrid | None = None, hbar: float = 1.0, mass: float = 1.0) -> CoefficientField:
    """Inverse of :func:`write_field_csv`; values are reproduced bit-exactly.

    Without ``grid`` the box is inferred from the coordinate columns.
    """
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != "q,p,w":
        raise ValueError(f"{path}: expected header 'q,p,w'")
    rows = [line.split(",") for line in text[1:] if line.strip()]
    qv = np.array([float(r[0]) for r in rows])
    pv = np.array([float(r[1]) for r in rows])
    wv = np.array([float(r[2]) for r in rows])
    q = qv[np.r_[True, qv[1:] != qv[:-1]]]
    p = pv[: np.argmax(qv != qv[0])] if np.any(qv != qv[0]) else pv
    if q.size * p.size != wv.size:
        raise ValueError(f"{path}: {wv.size} rows do not form a {q.size} x {p.size} grid")
    if grid is None:
        grid = _grid_from_axes(q, p, hbar, mass)
    elif grid.shape != (q.size, p.size) or not (
        np.allclose(grid.q, q, rtol=0, atol=1e-9 * grid.Lq) and np.allclose(grid.p, p, rtol=0, atol=1e-9 * grid.Lp)
    ):
        raise GridMismatchError(f"{path}: coordinates do not match the supplied grid")
    return CoefficientField(grid, wv.reshape(q.size, p.size))


def pgm_levels(data: np.ndarray, clip: float | None = None) -> np.ndarray:
    """Map [-clip, clip] linearly onto 0..255, saturating, rounding half away from zero."""
    data = np.asarray(data, dtype=float)
    c = float(np.max(np.abs(data))) if clip is None or clip <= 0 else float(clip)
    if c == 0:
        return np.full(data.shape, MID_GRAY, dtype=int)
    v = (np.clip(data, -c, c) + c) / (2 * c) * 255.0
    return np.floor(v + 0.5).astype(int)  # v >= 0, so this is half-away-from-zero


def write_pgm(field_: CoefficientField, path, clip: float | None = None) -> Path:
    """Plain P2 image with q along the width and p increasing upwards."""
    path = Path(path)
    levels = pgm_levels(field_.data, clip)
    img = levels.T[::-1]
    h, w = img.shape
    lines = ["P2", f"{w} {h}", "255"]
    lines.extend(" ".join(map(str, row)) for row in img)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_table_csv(path, header, rows) -> Path:
    path = Path(path)
    out = [",".join(header)]
    for r in rows:
        out.append(",".join(v if isinstance(v, str) else _fmt(v) for v in r))
    path.write_text("\n".join(out) + "\n")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, payload: dict, files) -> Path:
    """Manifest with every emitted file and its sha256; no timestamps, so reruns match."""
    out_dir = Path(out_dir)
    entries = {}
    for f in sorted(Path(x) for x in files):
        entries[str(f.relative_to(out_dir))] = sha256_file(f)
    doc = dict(payload)
    doc["files"] = entries
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
