"""
Dataset CSV I/O for the raw and prepared schemas.

Files use comma separators, '.' decimals, LF line endings and UTF-8.
The schema is recognised by an exact header match.
"""

import logging
import os
from enum import Enum
from typing import List, Sequence, Tuple, Union

import pandas as pd

from ..errors import ConfigError, DatasetValidationError, ParseError, SchemaError
from .model import PREPARED_COLUMNS, RAW_COLUMNS, FlowKey, FlowRecord, PreparedRow

logger = logging.getLogger(__name__)

Row = Union[FlowRecord, PreparedRow]


class Schema(str, Enum):
    RAW = "raw"
    PREPARED = "prepared"

    @property
    def columns(self) -> Tuple[str, ...]:
        return RAW_COLUMNS if self is Schema.RAW else PREPARED_COLUMNS


RAW_DTYPES = {
    "timestamp": "int64",
    "datapath_id": "int64",
    "flow_id": "uint64",
    "ip_src": "str",
    "tp_src": "int64",
    "ip_dst": "str",
    "tp_dst": "int64",
    "ip_proto": "int64",
    "icmp_code": "int64",
    "icmp_type": "int64",
    "flow_duration_sec": "int64",
    "flow_duration_nsec": "int64",
    "idle_timeout": "int64",
    "hard_timeout": "int64",
    "flags": "int64",
    "packet_count": "int64",
    "byte_count": "int64",
    "packet_count_per_sec": "float64",
    "packet_count_per_nsec": "float64",
    "byte_count_per_sec": "float64",
    "byte_count_per_nsec": "float64",
    "label": "int64",
}

PREPARED_DTYPES = {name: RAW_DTYPES.get(name, "float64") for name in PREPARED_COLUMNS}
PREPARED_DTYPES.update({"ip_src": "int64", "ip_dst": "int64", "inner_time_flow": "float64"})


def schema_of(rows: Sequence[Row]) -> Schema:
    """Schema shared by every row, RAW for an empty sequence"""
    kinds = {type(row) for row in rows}
    if len(kinds) > 1:
        raise SchemaError("Rows mix raw and prepared schemas")
    if not kinds or kinds == {FlowRecord}:
        return Schema.RAW
    if kinds == {PreparedRow}:
        return Schema.PREPARED
    raise SchemaError(f"Unsupported row type: {kinds.pop().__name__}")


def to_frame(rows: Sequence[Row], schema: Schema = None) -> pd.DataFrame:
    """DataFrame with the schema's column order and dtypes"""
    schema = schema or schema_of(rows)
    dtypes = RAW_DTYPES if schema is Schema.RAW else PREPARED_DTYPES
    frame = pd.DataFrame([row.to_row() for row in rows], columns=list(schema.columns))
    return frame.astype({name: (object if dtype == "str" else dtype) for name, dtype in dtypes.items()})


def write_dataset(rows: Sequence[Row], path: str, schema: Schema = None) -> int:
    """
    Write rows as CSV with the header of their schema.

    Args:
        rows: FlowRecords or PreparedRows, not mixed
        path: Output file
        schema: Header to use for an empty sequence (default raw)

    Returns:
        int: Number of data rows written
    """
    rows = list(rows)
    if rows:
        detected = schema_of(rows)
        if schema is not None and schema is not detected:
            raise SchemaError(f"Rows are {detected.value} but {schema.value} was requested")
        schema = detected
    schema = schema or Schema.RAW

    frame = to_frame(rows, schema)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8", float_format="%.17g")
    logger.info(f"Wrote {len(frame)} {schema.value} rows to {path}")
    return len(frame)


def _detect(columns: List[str]) -> Schema:
    for schema in Schema:
        if tuple(columns) == schema.columns:
            return schema
    raise SchemaError(f"Unknown dataset header: {','.join(columns)}")


def _record_from(values: dict) -> FlowRecord:
    key = FlowKey(
        ip_src=values["ip_src"],
        tp_src=int(values["tp_src"]),
        ip_dst=values["ip_dst"],
        tp_dst=int(values["tp_dst"]),
        ip_proto=int(values["ip_proto"]),
    )
    return FlowRecord(
        timestamp=int(values["timestamp"]),
        datapath_id=int(values["datapath_id"]),
        key=key,
        flow_id=int(values["flow_id"]),
        icmp_code=int(values["icmp_code"]),
        icmp_type=int(values["icmp_type"]),
        flow_duration_sec=int(values["flow_duration_sec"]),
        flow_duration_nsec=int(values["flow_duration_nsec"]),
        packet_count=int(values["packet_count"]),
        byte_count=int(values["byte_count"]),
        label=int(values["label"]),
        flags=int(values["flags"]),
        idle_timeout=int(values["idle_timeout"]),
        hard_timeout=int(values["hard_timeout"]),
    )


def _prepared_from(values: dict) -> PreparedRow:
    return PreparedRow(**{
        name: float(values[name]) if name == "inner_time_flow" else int(values[name])
        for name in PREPARED_COLUMNS
    })


def read_frame(path: str) -> Tuple[pd.DataFrame, Schema]:
    """
    Load a dataset as a typed DataFrame without building row objects.

    Raises:
        ConfigError: no file at path
        SchemaError: the header matches neither schema
    """
    if not os.path.exists(path):
        raise ConfigError(f"Dataset not found: {path}")
    header = pd.read_csv(path, nrows=0, encoding="utf-8")
    schema = _detect(list(header.columns))
    dtypes = RAW_DTYPES if schema is Schema.RAW else PREPARED_DTYPES
    try:
        frame = pd.read_csv(path, dtype=dtypes, encoding="utf-8", keep_default_na=False)
    except (ValueError, TypeError) as e:
        raise ParseError(f"Cannot parse {path}: {e}")
    return frame, schema


def read_dataset(path: str) -> Tuple[List[Row], Schema]:
    """
    Read a dataset written by write_dataset.

    Returns:
        tuple: (rows, schema)

    Raises:
        ConfigError: no file at path
        SchemaError: the header matches neither schema
        DatasetValidationError: a row breaks an invariant; row_index is 0-based
    """
    frame, schema = read_frame(path)
    build = _record_from if schema is Schema.RAW else _prepared_from
    rows: List[Row] = []
    for index, values in enumerate(frame.to_dict(orient="records")):
        try:
            rows.append(build(values))
        except (DatasetValidationError, ParseError, ValueError) as e:
            raise DatasetValidationError(f"Row {index}: {e}", row_index=index)
    logger.debug(f"Read {len(rows)} {schema.value} rows from {path}")
    return rows, schema
