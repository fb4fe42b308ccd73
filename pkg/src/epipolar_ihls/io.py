"""File formats: correspondence CSV, matrix JSON and scene sidecars.

Correspondence CSV header is ``x,y,xp,yp`` optionally followed by ``w``
(per-match weight) and up to four side-info columns ``f1..f4``. Floats
are written with ``repr`` so a write/read round trip is exact.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .exceptions import InvalidInputError, ParseError
from .geometry import CorrespondenceSet
from .pose import RelativePose

POINT_COLUMNS = ("x", "y", "xp", "yp")
WEIGHT_COLUMN = "w"
MAX_SIDE_INFO = 4


def _fmt(v):
    return repr(float(v))


def correspondence_header(has_weights, n_side_info):
    if not 0 <= n_side_info <= MAX_SIDE_INFO:
        raise InvalidInputError(f"at most {MAX_SIDE_INFO} side-info columns, got {n_side_info}")
    cols = list(POINT_COLUMNS)
    if has_weights:
        cols.append(WEIGHT_COLUMN)
    return cols + [f"f{k + 1}" for k in range(n_side_info)]


def _check_header(header, path):
    cols = [c.strip() for c in header]
    n_side = len(cols) - len(POINT_COLUMNS) - (WEIGHT_COLUMN in cols)
    has_w = WEIGHT_COLUMN in cols
    if n_side < 0 or n_side > MAX_SIDE_INFO or cols != correspondence_header(has_w, n_side):
        raise ParseError(
            f"bad header {','.join(cols)!r}; expected x,y,xp,yp[,w][,f1..f4]", path, 1
        )
    return has_w, n_side


def read_correspondences(path):
    """Parse a correspondence CSV into a ``CorrespondenceSet``."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file", path, 1)
        has_w, n_side = _check_header(header, path)
        width = len(header)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} fields, got {len(row)}", path, line_no)
            try:
                values = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(f"not a number ({exc})", path, line_no) from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError("non-finite value", path, line_no)
            if has_w and values[4] < 0:
                raise ParseError("negative weight", path, line_no)
            rows.append(values)
    data = np.array(rows, dtype=float).reshape(-1, width)
    weights = data[:, 4] if has_w else None
    side = data[:, width - n_side:] if n_side else None
    return CorrespondenceSet(data[:, :2], data[:, 2:4], weights, side)


def write_correspondences(path, corr):
    n_side = 0 if corr.side_info is None else corr.side_info.shape[1]
    cols = [corr.x, corr.xp]
    if corr.weights is not None:
        cols.append(corr.weights[:, None])
    if n_side:
        cols.append(corr.side_info)
    data = np.hstack(cols)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(correspondence_header(corr.weights is not None, n_side))
        writer.writerows([_fmt(v) for v in row] for row in data)


def matrix_to_json(M):
    M = np.asarray(M, dtype=float)
    return {"rows": M.shape[0], "cols": M.shape[1], "data": [float(v) for v in M.ravel()]}


def matrix_from_json(obj):
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed matrix object: {exc}") from None
    if len(data) != rows * cols:
        raise ParseError(f"matrix data has {len(data)} entries, expected {rows * cols}")
    return np.array(data, dtype=float).reshape(rows, cols)


def dump_json(obj, path=None):
    """Serialize with sorted keys; write to ``path`` or return the text."""
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno) from None


def write_matrix(path, M):
    dump_json(matrix_to_json(M), path)


def read_matrix(path):
    return matrix_from_json(load_json(path))


def scene_sidecar(scene):
    return {
        "config": scene.config.to_dict(),
        "K_source": matrix_to_json(scene.K_source),
        "K_target": matrix_to_json(scene.K_target),
        "R": matrix_to_json(scene.pose.R),
        "t": [float(v) for v in scene.pose.t],
        "baseline_vector": [float(v) for v in scene.baseline_vector],
        "f_gt": matrix_to_json(scene.f_gt),
        "inlier_mask": [bool(v) for v in scene.inlier_mask],
    }


def write_scene(scene, stem):
    """Write ``<stem>.csv`` and ``<stem>.json``; returns both paths."""
    stem = Path(stem)
    csv_path = stem.with_suffix(".csv")
    json_path = stem.with_suffix(".json")
    write_correspondences(csv_path, scene.correspondences)
    dump_json(scene_sidecar(scene), json_path)
    return csv_path, json_path


def read_sidecar(path):
    """Load a scene sidecar; matrices come back as arrays."""
    obj = load_json(path)
    out = dict(obj)
    for key in ("K_source", "K_target", "R", "f_gt"):
        out[key] = matrix_from_json(obj[key])
    out["pose"] = RelativePose(R=out["R"], t=np.array(obj["t"], dtype=float))
    out["inlier_mask"] = np.array(obj["inlier_mask"], dtype=bool)
    return out
