"""Dataset ingestion, real-data analysis and report serialization."""

import csv
import datetime
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _config
from .dataset import Dataset
from .geometry import angle_between
from .inference import (DegenerateError, confidence_cap_feasible, fvml_concentration_mle,
                        location_test, mean_resultant_length, spherical_mean)

try:
    from importlib.metadata import version as _pkg_version
    VERSION = _pkg_version("artifact")
except Exception:  # pragma: no cover - running from a source tree
    VERSION = "0.1.0"

FORMATS = ("cartesian-csv", "decinc-csv")


class IngestError(ValueError):
    """Malformed input file; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else "line %d: %s" % (line, message))


# --- ingestion -------------------------------------------------------------

def decinc_to_cartesian(dec, inc):
    """Degrees to unit vectors: ``(cos i cos d, cos i sin d, sin i)``."""
    d = np.radians(np.asarray(dec, dtype=float))
    i = np.radians(np.asarray(inc, dtype=float))
    ci = np.cos(i)
    return np.stack([ci * np.cos(d), ci * np.sin(d), np.sin(i)], axis=-1)


def cartesian_to_decinc(x):
    x = np.asarray(x, dtype=float)
    dec = np.degrees(np.arctan2(x[..., 1], x[..., 0])) % 360.0
    inc = np.degrees(np.arcsin(np.clip(x[..., 2], -1.0, 1.0)))
    return dec, inc


def _read_rows(path):
    rows = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                vals = [float(tok) for tok in s.split(",")]
            except ValueError:
                raise IngestError("cannot parse %r as comma-separated numbers" % s, lineno)
            if not all(math.isfinite(v) for v in vals):
                raise IngestError("non-finite value", lineno)
            rows.append((lineno, vals))
    if not rows:
        raise IngestError("no data rows in %s" % path)
    return rows


def ingest(path, format="cartesian-csv", norm_tol=_config.INGEST_NORM_TOL,
           min_norm=_config.INGEST_MIN_NORM):
    """Read a CSV file into a :class:`Dataset`.

    Cartesian rows are rescaled to unit norm once they pass the norm checks;
    dec/inc rows are two columns in degrees and give ``p = 3``.
    """
    if format not in FORMATS:
        raise ValueError("format must be one of %s" % ", ".join(FORMATS))
    rows = _read_rows(path)
    width = len(rows[0][1])
    for lineno, vals in rows:
        if len(vals) != width:
            raise IngestError("expected %d columns, found %d" % (width, len(vals)), lineno)
    if format == "decinc-csv":
        if width != 2:
            raise IngestError("dec/inc rows need exactly 2 columns", rows[0][0])
        arr = np.array([v for _, v in rows])
        return Dataset(decinc_to_cartesian(arr[:, 0], arr[:, 1]))
    if width < 2:
        raise IngestError("cartesian rows need at least 2 columns", rows[0][0])
    out = []
    for lineno, vals in rows:
        v = np.array(vals)
        r = float(np.linalg.norm(v))
        if r < min_norm:
            raise IngestError("row norm %.3g below %.3g" % (r, min_norm), lineno)
        if abs(r - 1.0) > norm_tol:
            raise IngestError("row norm %.6g deviates from 1 by more than %.3g" % (r, norm_tol),
                              lineno)
        out.append(v / r)
    return Dataset(np.array(out))


def write_dataset_csv(path, data, header=None):
    x = np.asarray(data, dtype=float)
    lines = []
    if header:
        lines.append("# " + header)
    lines.extend(",".join(repr(float(v)) for v in row) for row in x)
    atomic_write(path, "\n".join(lines) + "\n")


# --- atomic output ---------------------------------------------------------

def atomic_write(path, text):
    """Write ``text`` to a sibling temp file, then rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if hasattr(obj, "tolist") and hasattr(obj, "coords"):
        return obj.tolist()
    if hasattr(obj, "value") and hasattr(obj, "name") and not isinstance(obj, str):
        return obj.value
    return obj


def report_json(payload, kind, timestamp=True):
    """Serialize ``payload`` under the versioned envelope.

    Floats use the shortest repr that round-trips exactly; non-finite values
    become ``null``.
    """
    doc = {"schema": _config.SCHEMA_VERSION, "kind": kind, "version": VERSION}
    if timestamp:
        doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    doc["result"] = _plain(payload)
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_report(path, payload, kind):
    atomic_write(path, report_json(payload, kind))


def read_report(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != _config.SCHEMA_VERSION:
        raise ValueError("unsupported report schema %r" % doc.get("schema"))
    return doc


HIST_COLUMNS = ("bin_left", "bin_right", "count", "density", "chi2_density")
POWER_COLUMNS = ("ell", "freq_watson", "freq_wald", "theoretical_power")


def _csv_text(columns, rows):
    buf = [",".join(columns)]
    for r in rows:
        buf.append(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c])
                            for c in columns))
    return "\n".join(buf) + "\n"


def histogram_csv(hist):
    n = len(hist["count"])
    rows = [{c: hist[c][i] for c in HIST_COLUMNS} for i in range(n)]
    return _csv_text(HIST_COLUMNS, rows)


def power_csv(rows):
    return _csv_text(POWER_COLUMNS, rows)


def read_csv_table(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- analysis --------------------------------------------------------------

@dataclass
class AnalysisReport:
    n: int
    p: int
    spherical_mean: list = None
    mean_resultant_length: float = None
    kappa_hat: float = None
    caps: list = field(default_factory=list)
    tests: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    version: str = VERSION
    error: str = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def analyze(data, levels=(0.95,), theta0=None, provenance=None):
    """Spherical mean, resultant length, FvML concentration, feasible caps and optional tests.

    A degenerate sample yields a report whose ``error`` field is set.
    """
    data = data if isinstance(data, Dataset) else Dataset(data)
    rep = AnalysisReport(data.n, data.p, provenance=dict(provenance or {}))
    try:
        rep.spherical_mean = spherical_mean(data).tolist()
        rep.mean_resultant_length = mean_resultant_length(data)
        rep.caps = [confidence_cap_feasible(data, lv).to_dict() for lv in levels]
        if theta0 is not None:
            rep.tests = [location_test(data, theta0, 1.0 - max(levels), kind).to_dict()
                         for kind in ("watson", "wald")]
    except DegenerateError as exc:
        rep.error = str(exc)
        return rep
    try:
        rep.kappa_hat = fvml_concentration_mle(data)
    except DegenerateError as exc:
        # an infinite concentration estimate does not invalidate the mean or caps
        rep.kappa_hat = None
        rep.provenance = dict(rep.provenance, kappa_hat_note=str(exc))
    return rep


@dataclass
class LeaveOneOutReport:
    entries: list
    min_threshold: float
    max_threshold: float
    max_angle_deg: float
    kappa_hat_range: list
    degenerate: int

    def to_dict(self):
        return asdict(self)


def leave_one_out(data, levels=(0.95,)):
    """Analysis of each of the ``n`` samples with one row held out."""
    data = data if isinstance(data, Dataset) else Dataset(data)
    if data.n < 3:
        raise ValueError("leave-one-out needs n >= 3")
    full = spherical_mean(data)
    entries = []
    for i in range(data.n):
        r = analyze(data.drop(i), levels)
        e = {"index": i, "error": r.error, "spherical_mean": r.spherical_mean,
             "kappa_hat": r.kappa_hat,
             "threshold": r.caps[0]["threshold"] if r.caps else None,
             "angle_deg": (math.degrees(angle_between(full.coords, r.spherical_mean))
                           if r.spherical_mean is not None else None)}
        entries.append(e)
    good = [e for e in entries if e["error"] is None]
    th = [e["threshold"] for e in good]
    kh = [e["kappa_hat"] for e in good if e["kappa_hat"] is not None]
    return LeaveOneOutReport(
        entries=entries,
        min_threshold=min(th) if th else None,
        max_threshold=max(th) if th else None,
        max_angle_deg=max(e["angle_deg"] for e in good) if good else None,
        kappa_hat_range=[min(kh), max(kh)] if kh else None,
        degenerate=len(entries) - len(good))
