"""File-based result store and artifact formats.

Layout: ``<output_dir>/<experiment>/<command>/...``. JSON is written with
sorted keys and two-space indentation; CSV floats use ``repr`` so values
survive a round trip exactly. Every I/O failure is raised as
``StoreError`` carrying the offending path.
"""

import csv
import io
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from ..models.common import FEATURE_DIM, N_COEFFICIENTS
from ..models.features import FeatureVector, Point
from ..models.interference import FLATTENING_ORDER, FitReport, ProfileSample, QuadraticInterferenceModel
from ..models.config import SCHEMA_VERSION
from ..models.simulation import WorkloadSpec
from ..models.task import FileKind, TaskProfile
from .exceptions import ModelNotFound, StoreError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

WORKLOAD_HEADER = ("id", "file_kind", "data_size_mb", "process_count", "io_rate", "arrival_s")
PROFILE_HEADER = tuple(f"vm{v}_p{i}" for v in (1, 2) for i in range(1, FEATURE_DIM + 1)) + ("runtime_s",)


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise StoreError(f"cannot write file: {e.strerror or e}", path=str(path)) from e


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise StoreError(f"cannot read file: {e.strerror or e}", path=str(path)) from e


def dump_json(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _read_csv(path: Path) -> Tuple[List[str], List[List[str]]]:
    rows = [row for row in csv.reader(io.StringIO(_read(path))) if row]
    if not rows:
        raise StoreError("CSV file is empty", path=str(path))
    return rows[0], rows[1:]


def _expect_header(path: Path, header: Sequence[str], expected: Sequence[str]) -> None:
    if tuple(h.strip() for h in header) != tuple(expected):
        raise StoreError(
            "unexpected CSV header", path=str(path), context={"expected": ",".join(expected)}
        )


# --- workloads ---------------------------------------------------------------


def write_workload_csv(path: PathLike, tasks: Sequence[TaskProfile]) -> Path:
    """Write tasks without their base runtime (schedulers never see it)."""
    path = Path(path)
    rows = [
        (t.id, t.file_kind.value, t.data_size, t.process_count, t.io_rate, t.arrival_time) for t in tasks
    ]
    _write(path, render_csv(WORKLOAD_HEADER, rows))
    return path


def read_workload_csv(path: PathLike, spec: Optional[WorkloadSpec] = None) -> List[TaskProfile]:
    """Read a workload file, re-deriving base runtimes from ``spec.runtime_rates``.

    Raises:
        StoreError: If the file is unreadable or a row is malformed
    """
    path = Path(path)
    spec = spec or WorkloadSpec()
    header, rows = _read_csv(path)
    _expect_header(path, header, WORKLOAD_HEADER)
    tasks = []
    for line, row in enumerate(rows, start=2):
        try:
            kind = FileKind(row[1])
            size = float(row[2])
            tasks.append(
                TaskProfile(
                    id=row[0],
                    file_kind=kind,
                    data_size=size,
                    process_count=int(row[3]),
                    io_rate=float(row[4]),
                    arrival_time=float(row[5]),
                    base_runtime=spec.runtime_rates[kind] * size,
                )
            )
        except (IndexError, ValueError, ValidationError) as e:
            raise StoreError(f"malformed workload row: {e}", path=str(path), context={"line": line}) from e
    return tasks


# --- profiles ----------------------------------------------------------------


def write_profile_csv(path: PathLike, samples: Sequence[ProfileSample]) -> Path:
    path = Path(path)
    rows = [(*s.features_vm1.p, *s.features_vm2.p, s.observed_runtime) for s in samples]
    _write(path, render_csv(PROFILE_HEADER, rows))
    return path


def read_profile_csv(path: PathLike) -> List[ProfileSample]:
    path = Path(path)
    header, rows = _read_csv(path)
    _expect_header(path, header, PROFILE_HEADER)
    samples = []
    for line, row in enumerate(rows, start=2):
        try:
            values = [float(v) for v in row]
            samples.append(
                ProfileSample(
                    features_vm1=FeatureVector.from_array(values[:FEATURE_DIM]),
                    features_vm2=FeatureVector.from_array(values[FEATURE_DIM : 2 * FEATURE_DIM]),
                    observed_runtime=values[2 * FEATURE_DIM],
                )
            )
        except (IndexError, ValueError, ValidationError) as e:
            raise StoreError(f"malformed profile row: {e}", path=str(path), context={"line": line}) from e
    return samples


# --- points ------------------------------------------------------------------


def read_points_csv(path: PathLike) -> List[Point]:
    """Read clustering points; an optional header may name a ``weight`` column."""
    path = Path(path)
    text_rows = [row for row in csv.reader(io.StringIO(_read(path))) if row]
    if not text_rows:
        raise StoreError("points file is empty", path=str(path))
    weight_col: Optional[int] = None
    first = text_rows[0]
    try:
        [float(v) for v in first]
        body = text_rows
    except ValueError:
        names = [h.strip().lower() for h in first]
        weight_col = names.index("weight") if "weight" in names else None
        body = text_rows[1:]

    points = []
    for line, row in enumerate(body, start=1 if body is text_rows else 2):
        try:
            values = [float(v) for v in row]
            if weight_col is None:
                points.append(Point(coords=values))
            else:
                coords = values[:weight_col] + values[weight_col + 1 :]
                points.append(Point(coords=coords, weight=values[weight_col]))
        except (ValueError, IndexError, ValidationError) as e:
            raise StoreError(f"malformed point row: {e}", path=str(path), context={"line": line}) from e
    return points


# --- models ------------------------------------------------------------------


def model_to_payload(model: QuadraticInterferenceModel, report: Optional[FitReport] = None) -> Dict[str, Any]:
    """Model document with coefficients as exact hex floats."""
    payload: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "flattening_order": FLATTENING_ORDER,
        "coefficients": [float(v).hex() for v in model.to_vector()],
    }
    if report is not None:
        payload["fit_report"] = report.to_dict()
    return payload


def model_from_payload(payload: Dict[str, Any], *, path: str = "<memory>") -> QuadraticInterferenceModel:
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise StoreError("unsupported model schema version", path=path, context={"found": payload.get("schema_version")})
    if payload.get("flattening_order") != FLATTENING_ORDER:
        raise StoreError("model uses a different coefficient order", path=path)
    coefficients = payload.get("coefficients")
    if not isinstance(coefficients, list) or len(coefficients) != N_COEFFICIENTS:
        raise StoreError(f"model needs {N_COEFFICIENTS} coefficients", path=path)
    try:
        return QuadraticInterferenceModel.from_vector([float.fromhex(str(c)) for c in coefficients])
    except (TypeError, ValueError) as e:
        raise StoreError(f"bad coefficient: {e}", path=path) from e


def load_model(path: PathLike) -> QuadraticInterferenceModel:
    """Load a model file.

    Raises:
        ModelNotFound: If the file does not exist
        StoreError: If it cannot be read or parsed
    """
    path = Path(path)
    if not path.is_file():
        raise ModelNotFound("model file not found; run profile-fit first", path=str(path))
    try:
        payload = json.loads(_read(path))
    except ValueError as e:
        raise StoreError(f"model file is not valid JSON: {e}", path=str(path)) from e
    if not isinstance(payload, dict):
        raise StoreError("model file must hold a JSON object", path=str(path))
    return model_from_payload(payload, path=str(path))


# --- store -------------------------------------------------------------------


class ResultStore:
    """Writes a command's artifacts under ``<root>/<experiment>/<command>/``."""

    def __init__(self, root: PathLike, experiment: str, *, timestamp: bool = True) -> None:
        self.root = Path(root)
        self.experiment = experiment
        self.timestamp = timestamp

    @property
    def base(self) -> Path:
        return self.root / self.experiment

    def path(self, command: str, *parts: str) -> Path:
        return self.base.joinpath(command, *parts)

    def write_json(self, path: Path, payload: Dict[str, Any]) -> Path:
        """Write ``payload`` with an optional ``generated_at`` stamp."""
        document = dict(payload)
        if self.timestamp:
            document["generated_at"] = datetime.now(timezone.utc).isoformat()
        _write(path, dump_json(document))
        logger.debug("wrote %s", path)
        return path

    def write_text(self, path: Path, text: str) -> Path:
        _write(path, text)
        logger.debug("wrote %s", path)
        return path

    def write_csv(self, path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        return self.write_text(path, render_csv(header, rows))

    def write_model(self, path: Path, model: QuadraticInterferenceModel, report: Optional[FitReport] = None) -> Path:
        return self.write_json(path, model_to_payload(model, report))
