"""Reading datum, operator and vector-family files; writing results."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, StrictInt, ValidationError

from ..errors import DimensionMismatch, InputError
from ..models.datum import BLDatum
from ..models.matrices import RationalMat, fraction_to_str, to_fraction
from ..models.operator import CPOperator
from ..models.polytope import VectorFamily

Entry = Union[StrictInt, float, str]


class ExponentsSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    numerators: List[StrictInt]
    denominator: StrictInt = Field(ge=1)


class DatumSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: StrictInt = Field(ge=1)
    maps: List[List[List[Entry]]] = Field(min_length=1)
    p: ExponentsSchema


class OperatorSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n1: StrictInt = Field(ge=1)
    n2: StrictInt = Field(ge=1)
    kraus: List[List[List[Entry]]] = Field(min_length=1)


class FamilySchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: StrictInt = Field(ge=1)
    vectors: List[List[Entry]] = Field(min_length=1)


# ----------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------
def _read_json(path: Union[str, Path]) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc.msg}", line=exc.lineno) from exc


def _validate(schema, payload: Any, path: Union[str, Path]):
    try:
        return schema.model_validate(payload)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise InputError(f"invalid {path}: {first['msg']}", field=location) from exc


def _matrix(rows: Sequence[Sequence[Entry]], cols: int, field: str) -> RationalMat:
    if not rows:
        raise InputError("matrix has no rows", field=field)
    for index, row in enumerate(rows):
        if len(row) != cols:
            raise InputError(f"row has {len(row)} entries, expected {cols}", field=f"{field}.{index}")
    try:
        return RationalMat.from_rows(rows, cols=cols)
    except InputError as exc:
        raise InputError(str(exc), field=field) from exc


def datum_from_payload(payload: Any, source: str = "datum") -> BLDatum:
    parsed = _validate(DatumSchema, payload, source)
    if len(parsed.p.numerators) != len(parsed.maps):
        raise InputError(
            f"{len(parsed.maps)} maps but {len(parsed.p.numerators)} exponent numerators",
            field="p.numerators",
        )
    if any(c < 1 for c in parsed.p.numerators):
        raise InputError("exponent numerators must be positive", field="p.numerators")
    maps = [_matrix(rows, parsed.n, f"maps.{j}") for j, rows in enumerate(parsed.maps)]
    return BLDatum.from_exact(parsed.n, maps, parsed.p.numerators, parsed.p.denominator)


def operator_from_payload(payload: Any, source: str = "operator") -> CPOperator:
    parsed = _validate(OperatorSchema, payload, source)
    matrices = []
    for k, rows in enumerate(parsed.kraus):
        if len(rows) != parsed.n2:
            raise InputError(f"Kraus matrix has {len(rows)} rows, expected {parsed.n2}", field=f"kraus.{k}")
        matrices.append(_matrix(rows, parsed.n1, f"kraus.{k}"))
    return CPOperator.from_exact(matrices)


def family_from_payload(payload: Any, source: str = "family") -> VectorFamily:
    parsed = _validate(FamilySchema, payload, source)
    vectors = []
    for index, vector in enumerate(parsed.vectors):
        if len(vector) != parsed.n:
            raise InputError(f"vector has {len(vector)} entries, expected {parsed.n}", field=f"vectors.{index}")
        try:
            vectors.append(tuple(to_fraction(value) for value in vector))
        except InputError as exc:
            raise InputError(str(exc), field=f"vectors.{index}") from exc
    return VectorFamily(parsed.n, tuple(vectors))


def load_datum(path: Union[str, Path]) -> BLDatum:
    return datum_from_payload(_read_json(path), str(path))


def load_operator(path: Union[str, Path]) -> CPOperator:
    return operator_from_payload(_read_json(path), str(path))


def load_family(path: Union[str, Path]) -> VectorFamily:
    return family_from_payload(_read_json(path), str(path))


def parse_exponents(text: str) -> List[Fraction]:
    """Comma-separated rationals such as ``"2/3,2/3,2/3"``."""

    parts = [part for part in text.split(",") if part.strip()]
    if not parts:
        raise InputError("no exponents given", field="p")
    try:
        return [to_fraction(part) for part in parts]
    except InputError as exc:
        raise InputError(str(exc), field="p") from exc


# ----------------------------------------------------------------------
# Emission
# ----------------------------------------------------------------------
def to_jsonable(value: Any) -> Any:
    """Exact rationals as ``"p/q"``, non-finite floats as strings, arrays as lists."""

    if isinstance(value, Fraction):
        return fraction_to_str(value)
    if isinstance(value, RationalMat):
        return value.to_strings()
    if isinstance(value, (bool, str, int)) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    return str(value)


def dump_json(payload: Dict[str, Any]) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip float repr."""

    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2)


def dump_json_line(payload: Dict[str, Any]) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True)


def trace_frame(rows: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows))


def dump_csv(rows: Sequence[Dict[str, Any]]) -> str:
    """CSV with 17 significant digits for floats."""

    return trace_frame(rows).to_csv(index=False, float_format="%.17g", lineterminator="\n")


def datum_to_payload(datum: BLDatum) -> Dict[str, Any]:
    if datum.exact is None:
        raise DimensionMismatch("only exact data can be written as datum files")
    return datum.to_dict()


__all__ = [
    "DatumSchema",
    "FamilySchema",
    "OperatorSchema",
    "datum_from_payload",
    "datum_to_payload",
    "dump_csv",
    "dump_json",
    "dump_json_line",
    "family_from_payload",
    "load_datum",
    "load_family",
    "load_operator",
    "operator_from_payload",
    "parse_exponents",
    "to_jsonable",
    "trace_frame",
]
