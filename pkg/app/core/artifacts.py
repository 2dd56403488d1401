"""
Reading and writing of every on-disk artifact: iterate CSVs, verify CSVs and
JSON documents (configs, summaries, results, fluid models).

Floats are written with repr(), the shortest text that parses back to the same
double, so parse(emit(x)) == x and reruns are byte-identical.
"""

import csv
import io
import logging
from pathlib import Path
from typing import List, Type, TypeVar

from pydantic import BaseModel, ValidationError

from app.core.exceptions import ArtifactError, ParameterError
from app.schemas.experiment import SweepCaseRow
from app.schemas.fluid import FluidModel
from app.schemas.optimizer import IterateRecord

logger = logging.getLogger(__name__)

ITERATE_COLUMNS = ["i", "theta", "k", "F", "Fc_prime", "d"]
VERIFY_COLUMNS = ["seed", "k", "N", "N_s", "N_1", "delta_L", "ipa", "E", "bound"]

M = TypeVar("M", bound=BaseModel)


def _format(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _rows_to_csv(columns: List[str], rows: List[BaseModel]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        data = row.model_dump()
        writer.writerow([_format(data[c]) for c in columns])
    return buf.getvalue()


def _rows_from_csv(text: str, columns: List[str], model: Type[M]) -> List[M]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != columns:
        raise ParameterError(f"unexpected CSV header {reader.fieldnames}, expected {columns}")
    try:
        return [model.model_validate(row) for row in reader]
    except ValidationError as e:
        raise ParameterError(f"malformed CSV row: {e}") from e


def iterates_to_csv(records: List[IterateRecord]) -> str:
    return _rows_to_csv(ITERATE_COLUMNS, records)


def iterates_from_csv(text: str) -> List[IterateRecord]:
    return _rows_from_csv(text, ITERATE_COLUMNS, IterateRecord)


def verify_rows_to_csv(rows: List[SweepCaseRow]) -> str:
    return _rows_to_csv(VERIFY_COLUMNS, rows)


def verify_rows_from_csv(text: str) -> List[SweepCaseRow]:
    return _rows_from_csv(text, VERIFY_COLUMNS, SweepCaseRow)


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise ArtifactError(str(path), e) from e
    logger.debug(f"[IO] Wrote {path}")
    return path


def read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise ArtifactError(str(path), e) from e


def to_json(model: BaseModel) -> str:
    return model.model_dump_json(indent=2) + "\n"


def from_json(text: str, model: Type[M]) -> M:
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        raise ParameterError(f"invalid {model.__name__} document: {e}") from e


def write_json(path: str | Path, model: BaseModel) -> Path:
    return write_text(path, to_json(model))


def read_json(path: str | Path, model: Type[M]) -> M:
    return from_json(read_text(path), model)


def read_fluid_model(path: str | Path) -> FluidModel:
    """{"t_f": ..., "x0": ..., "segments": [{"start": ..., "alpha": ..., "beta": ...}, ...]}"""
    return read_json(path, FluidModel)
