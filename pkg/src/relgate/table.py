"""Immutable, typed, columnar in-memory table with schema validation.

Tables are the substrate every analysis plan executes against.  A table is a
schema plus one value tuple per field; all transforming operations elsewhere
in the package return new tables.

Value domain per column type:
    bool       Python bool
    int        Python int, 64-bit signed range
    float      Python float, finite only
    text       Python str
    timestamp  timezone-aware datetime, UTC, second precision

Any cell may additionally be None (null).  The text value ``"N/A"`` is a
legitimate categorical state and is *not* a null: empty CSV cells become
null, the literal string ``N/A`` stays text.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Iterable, Sequence

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

#: Token used for nulls in the canonical serialization.  Text cells are JSON
#: quoted, so a text value "null" renders as '"null"' and cannot collide.
NULL_TOKEN = "null"


class TableError(Exception):
    """Base class for table construction and ingestion errors."""


class SchemaError(TableError):
    """Schema or field specification violates an invariant."""


class CsvHeaderError(TableError):
    """CSV header does not resolve against the schema."""


class CellParseError(TableError):
    """A CSV cell could not be parsed as its column's type."""

    def __init__(self, row: int, column: str, raw: str, reason: str):
        self.row = row
        self.column = column
        self.raw = raw
        self.reason = reason
        super().__init__(
            f"row {row}, column {column!r}: cannot parse {raw!r}: {reason}"
        )


class ColumnType(enum.Enum):
    BOOL = "bool"
    INT = "int"
    FLOAT = "float"
    TEXT = "text"
    TIMESTAMP = "timestamp"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


#: Column types with a total order usable by range comparators and min/max.
ORDERED_TYPES = frozenset({ColumnType.INT, ColumnType.FLOAT, ColumnType.TIMESTAMP})
#: Column types accepted by sum/mean/median.
NUMERIC_TYPES = frozenset({ColumnType.INT, ColumnType.FLOAT})


@dataclass(frozen=True)
class FieldSpec:
    """One typed, documented column.

    ``states``, when present, is the closed list of admissible text values
    for a categorical field; every non-null cell of the column must be a
    member.
    """

    name: str
    type: ColumnType
    description: str = ""
    states: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("field name must be non-empty")
        if self.states is not None:
            if self.type is not ColumnType.TEXT:
                raise SchemaError(
                    f"field {self.name!r}: states only apply to text columns"
                )
            if not self.states:
                raise SchemaError(f"field {self.name!r}: states list is empty")
            if len(set(self.states)) != len(self.states):
                raise SchemaError(f"field {self.name!r}: duplicate states")


@dataclass(frozen=True)
class Schema:
    """Ordered list of fields with case-insensitively unique names."""

    fields: tuple[FieldSpec, ...]

    def __post_init__(self) -> None:
        if not self.fields:
            raise SchemaError("schema needs at least one field")
        seen: set[str] = set()
        for f in self.fields:
            key = f.name.lower()
            if key in seen:
                raise SchemaError(f"duplicate field name (case-insensitive): {f.name!r}")
            seen.add(key)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def resolve(self, name: str) -> FieldSpec | None:
        """Case-insensitive field lookup, returning the canonical spec."""
        want = name.lower()
        for f in self.fields:
            if f.name.lower() == want:
                return f
        return None

    def field_by_name(self, name: str) -> FieldSpec:
        spec = self.resolve(name)
        if spec is None:
            raise SchemaError(f"unknown field {name!r}")
        return spec


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by :func:`validate`."""

    field: str
    row: int | None
    reason: str


def _check_value(spec: FieldSpec, value: Any) -> str | None:
    """Return a reason string if ``value`` does not satisfy ``spec``."""
    if value is None:
        return None
    t = spec.type
    if t is ColumnType.BOOL:
        if not isinstance(value, bool):
            return f"expected bool, got {type(value).__name__}"
    elif t is ColumnType.INT:
        if isinstance(value, bool) or not isinstance(value, int):
            return f"expected int, got {type(value).__name__}"
        if not INT64_MIN <= value <= INT64_MAX:
            return "integer out of 64-bit range"
    elif t is ColumnType.FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return f"expected float, got {type(value).__name__}"
        if isinstance(value, float) and (value != value or value in (float("inf"), float("-inf"))):
            return "non-finite float"
    elif t is ColumnType.TEXT:
        if not isinstance(value, str):
            return f"expected text, got {type(value).__name__}"
        if spec.states is not None and value not in spec.states:
            return f"value {value!r} not in states {list(spec.states)}"
    elif t is ColumnType.TIMESTAMP:
        if not isinstance(value, datetime):
            return f"expected timestamp, got {type(value).__name__}"
        if value.tzinfo is None or value.utcoffset() != timezone.utc.utcoffset(None):
            return "timestamp not normalized to UTC"
        if value.microsecond != 0:
            return "timestamp has sub-second precision"
    return None


class Table:
    """Immutable columnar table.

    Construction validates every cell against the schema; ``validate`` exists
    to re-check tables whose internals were deliberately corrupted in tests.
    """

    __slots__ = ("schema", "columns", "row_count")

    def __init__(
        self,
        schema: Schema,
        columns: Sequence[Sequence[Any]],
        *,
        _skip_checks: bool = False,
    ):
        cols = tuple(tuple(c) for c in columns)
        if not _skip_checks:
            if len(cols) != len(schema.fields):
                raise TableError(
                    f"{len(schema.fields)} fields but {len(cols)} columns"
                )
            n = len(cols[0]) if cols else 0
            for spec, col in zip(schema.fields, cols):
                if len(col) != n:
                    raise TableError(
                        f"ragged column {spec.name!r}: {len(col)} values, expected {n}"
                    )
                for i, v in enumerate(col):
                    reason = _check_value(spec, v)
                    if reason is not None:
                        raise TableError(f"field {spec.name!r}, row {i}: {reason}")
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "row_count", len(cols[0]) if cols else 0)

    def __setattr__(self, name: str, value: Any) -> None:  # pragma: no cover
        raise AttributeError("Table is immutable")

    def column(self, name: str) -> tuple[Any, ...]:
        for spec, col in zip(self.schema.fields, self.columns):
            if spec.name.lower() == name.lower():
                return col
        raise SchemaError(f"unknown field {name!r}")

    def row(self, i: int) -> tuple[Any, ...]:
        return tuple(col[i] for col in self.columns)

    def rows(self) -> Iterable[tuple[Any, ...]]:
        for i in range(self.row_count):
            yield self.row(i)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Table):
            return NotImplemented
        return self.schema == other.schema and self.columns == other.columns

    def __repr__(self) -> str:
        return f"Table({len(self.schema.fields)} fields, {self.row_count} rows)"


def parse_timestamp(raw: str) -> datetime:
    """Parse an ISO-8601 timestamp, normalizing to UTC at second precision.

    Accepts ``YYYY-MM-DD[ T]HH:MM:SS`` with optional ``Z`` or numeric UTC
    offset, and a bare date (midnight).  Naive values are taken as UTC.
    """
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    else:
        dt = dt.astimezone(timezone.utc)
    return dt.replace(microsecond=0)


def format_timestamp(value: datetime) -> str:
    return value.strftime("%Y-%m-%dT%H:%M:%SZ")


_BOOL_TOKENS = {"true": True, "false": False}


def parse_cell(spec: FieldSpec, raw: str) -> Any:
    """Parse one CSV cell.  Empty cells are null; ``N/A`` is text."""
    if raw == "":
        return None
    t = spec.type
    if t is ColumnType.TEXT:
        return raw
    if t is ColumnType.BOOL:
        v = _BOOL_TOKENS.get(raw.strip().lower())
        if v is None:
            raise ValueError("not a boolean (expected true/false)")
        return v
    if t is ColumnType.INT:
        v = int(raw.strip())
        if not INT64_MIN <= v <= INT64_MAX:
            raise ValueError("integer out of 64-bit range")
        return v
    if t is ColumnType.FLOAT:
        f = float(raw.strip())
        if f != f or f in (float("inf"), float("-inf")):
            raise ValueError("non-finite float")
        return f
    if t is ColumnType.TIMESTAMP:
        return parse_timestamp(raw)
    raise AssertionError(f"unhandled column type {t}")  # pragma: no cover


def load_csv(source: bytes | str | io.IOBase, schema: Schema) -> Table:
    """Load a UTF-8 CSV (RFC-4180, header row) against ``schema``.

    Header names resolve case-insensitively; all schema fields must be
    present and extra columns are rejected.  Cell errors report row, column
    and raw text; data rows are numbered from 1.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvHeaderError("empty input: missing header row") from None

    specs: list[FieldSpec] = []
    seen: set[str] = set()
    for name in header:
        spec = schema.resolve(name.strip())
        if spec is None:
            raise CsvHeaderError(f"unknown column {name!r} not in schema")
        if spec.name in seen:
            raise CsvHeaderError(f"duplicate column {name!r} in header")
        seen.add(spec.name)
        specs.append(spec)
    missing = [f.name for f in schema.fields if f.name not in seen]
    if missing:
        raise CsvHeaderError(f"schema fields missing from header: {missing}")

    by_name: dict[str, list[Any]] = {spec.name: [] for spec in specs}
    for rownum, record in enumerate(reader, start=1):
        if len(record) != len(specs):
            raise CellParseError(
                rownum, specs[min(len(record), len(specs)) - 1].name,
                ",".join(record), f"expected {len(specs)} cells, got {len(record)}",
            )
        for spec, raw in zip(specs, record):
            try:
                value = parse_cell(spec, raw)
            except (ValueError, TableError) as exc:
                raise CellParseError(rownum, spec.name, raw, str(exc)) from None
            if value is not None and spec.states is not None and value not in spec.states:
                raise CellParseError(
                    rownum, spec.name, raw,
                    f"value not in states {list(spec.states)}",
                )
            by_name[spec.name].append(value)

    columns = [by_name[f.name] for f in schema.fields]
    return Table(schema, columns)


def validate(table: Table) -> list[Violation]:
    """Re-check all table invariants.  Violations are data, not faults."""
    out: list[Violation] = []
    if len(table.columns) != len(table.schema.fields):
        out.append(Violation("<table>", None, "column count differs from schema"))
        return out
    for spec, col in zip(table.schema.fields, table.columns):
        if len(col) != table.row_count:
            out.append(
                Violation(spec.name, None,
                          f"ragged column: {len(col)} values, expected {table.row_count}")
            )
            continue
        for i, v in enumerate(col):
            reason = _check_value(spec, v)
            if reason is not None:
                out.append(Violation(spec.name, i, reason))
    return out


def render_value(value: Any) -> str:
    """Canonical, injective text form of one cell value."""
    if value is None:
        return NULL_TOKEN
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, datetime):
        return format_timestamp(value)
    raise TypeError(f"unrenderable value type {type(value).__name__}")


def canonical_table_text(table: Table) -> str:
    """Deterministic serialization: header line, then one line per row.

    Fields in schema order, rows in input order, floats in shortest
    round-trip form, nulls as a reserved token distinct from text ``"N/A"``.
    """
    lines = [",".join(json.dumps(n, ensure_ascii=False) for n in table.schema.names)]
    for i in range(table.row_count):
        lines.append(",".join(render_value(col[i]) for col in table.columns))
    return "\n".join(lines) + "\n"


def export_csv_text(table: Table) -> str:
    """RFC-4180 CSV text; nulls as empty cells, round-trips via load_csv."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.schema.names)
    for i in range(table.row_count):
        record = []
        for col in table.columns:
            v = col[i]
            if v is None:
                record.append("")
            elif isinstance(v, bool):
                record.append("true" if v else "false")
            elif isinstance(v, float):
                record.append(repr(v))
            elif isinstance(v, datetime):
                record.append(format_timestamp(v))
            else:
                record.append(str(v))
        writer.writerow(record)
    return buf.getvalue()


def table_from_rows(schema: Schema, rows: Iterable[Sequence[Any]]) -> Table:
    """Build a table from row tuples (helper for executors and tests)."""
    rows = list(rows)
    columns: list[list[Any]] = [[] for _ in schema.fields]
    for r in rows:
        for j, v in enumerate(r):
            columns[j].append(v)
    return Table(schema, columns)
