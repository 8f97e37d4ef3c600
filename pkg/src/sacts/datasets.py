"""Dataset ingestion: the Monash-archive ``.tsf`` text format and plain CSV.

The ``.tsf`` grammar accepted here::

    # comment lines are ignored
    @attribute <name> <string|numeric|date>     (one per colon-separated field)
    @frequency <yearly|quarterly|monthly|weekly|daily|hourly|...>
    @horizon <positive int>
    @missing <true|false>
    @equallength <true|false>
    @data
    <field>:<field>:...:v1,v2,v3,...

Missing observations are written as ``?`` and recorded as NaN until a
missing-value policy is applied (:func:`apply_missing_policy`); a parsed
dataset is not fed to the model while it still contains NaN.  Unknown
two-token ``@`` metadata lines are tolerated, matching the archive's own
reference loader.  Timestamps use the archive's ``%Y-%m-%d %H-%M-%S`` form
and are kept for labeling only.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import ParseError, SeriesTooShort, SplitError

TIMESTAMP_FORMAT = "%Y-%m-%d %H-%M-%S"

FREQUENCIES = (
    "yearly",
    "quarterly",
    "monthly",
    "weekly",
    "daily",
    "hourly",
    "half_hourly",
    "minutely",
    "4_seconds",
    "10_minutes",
)

_ATTRIBUTE_TYPES = ("string", "numeric", "date")


@dataclass(frozen=True)
class TimeSeries:
    """One univariate observation sequence.

    ``values`` may contain NaN straight after parsing (recorded missing
    slots); after :func:`apply_missing_policy` every value is finite.
    """

    id: str
    values: np.ndarray
    start_timestamp: datetime | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.float64)
        )
        if self.values.ndim != 1:
            raise ParseError(f"series {self.id!r} is not one-dimensional")
        if np.isinf(self.values).any():
            raise ParseError(f"series {self.id!r} contains infinite values")

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.id == other.id
            and self.start_timestamp == other.start_timestamp
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


@dataclass(frozen=True)
class Dataset:
    """A named collection of series plus the archive's forecast protocol."""

    name: str
    series: list[TimeSeries]
    frequency: str | None
    horizon: int
    contains_missing: bool = False
    equal_length: bool = False
    extra_attributes: dict[str, list] = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.frequency == other.frequency
            and self.horizon == other.horizon
            and self.contains_missing == other.contains_missing
            and self.equal_length == other.equal_length
            and self.series == other.series
        )

    def __len__(self) -> int:
        return len(self.series)


def _parse_bool(token: str, line_no: int) -> bool:
    lowered = token.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ParseError(f"expected a boolean, got {token!r}", line_no)


def _parse_value(token: str, line_no: int) -> float:
    token = token.strip()
    if token == "?":
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"value {token!r} is not a real number", line_no) from None
    if math.isinf(value):
        raise ParseError(f"value {token!r} is not finite", line_no)
    return value


def parse_tsf(source: str | bytes, name: str = "dataset", horizon: int | None = None) -> Dataset:
    """Parse ``.tsf`` text into a :class:`Dataset`.

    Parameters
    ----------
    source : str or bytes
        Full file contents.
    name : str
        Dataset name recorded on the result.
    horizon : int, optional
        Fallback forecast horizon when the file has no ``@horizon`` line.

    Raises
    ------
    ParseError
        Malformed header or data lines, with the 1-based line number.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")

    attr_names: list[str] = []
    attr_types: list[str] = []
    frequency: str | None = None
    file_horizon: int | None = None
    contains_missing = False
    equal_length = False
    in_data = False
    series: list[TimeSeries] = []
    extra: dict[str, list] = {}
    saw_missing = False

    for line_no, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        if line.startswith("@"):
            if in_data:
                raise ParseError("metadata after @data section", line_no)
            tokens = line.split()
            tag = tokens[0].lower()
            if tag == "@data":
                if len(tokens) != 1:
                    raise ParseError("@data takes no value", line_no)
                if not attr_names:
                    raise ParseError("@data before any @attribute declaration", line_no)
                in_data = True
            elif tag == "@attribute":
                if len(tokens) != 3:
                    raise ParseError("@attribute needs a name and a type", line_no)
                if tokens[2] not in _ATTRIBUTE_TYPES:
                    raise ParseError(f"unknown attribute type {tokens[2]!r}", line_no)
                attr_names.append(tokens[1])
                attr_types.append(tokens[2])
            elif tag == "@frequency":
                if len(tokens) != 2:
                    raise ParseError("@frequency needs one value", line_no)
                frequency = tokens[1].lower()
            elif tag == "@horizon":
                if len(tokens) != 2:
                    raise ParseError("@horizon needs one value", line_no)
                try:
                    file_horizon = int(tokens[1])
                except ValueError:
                    raise ParseError(
                        f"horizon {tokens[1]!r} is not an integer", line_no
                    ) from None
            elif tag == "@missing":
                if len(tokens) != 2:
                    raise ParseError("@missing needs one value", line_no)
                contains_missing = _parse_bool(tokens[1], line_no)
            elif tag == "@equallength":
                if len(tokens) != 2:
                    raise ParseError("@equallength needs one value", line_no)
                equal_length = _parse_bool(tokens[1], line_no)
            elif len(tokens) == 2:
                # Unknown metadata (e.g. @relation); tolerated like the
                # archive's reference loader.
                continue
            else:
                raise ParseError(f"malformed header line {line!r}", line_no)
            continue

        if not in_data:
            raise ParseError("data line before @data tag", line_no)

        fields = line.split(":")
        if len(fields) != len(attr_names) + 1:
            raise ParseError(
                f"expected {len(attr_names)} attribute fields plus values, "
                f"got {len(fields) - 1}",
                line_no,
            )

        series_id = f"T{len(series) + 1}"
        start = None
        for attr_name, attr_type, token in zip(attr_names, attr_types, fields):
            token = token.strip()
            if attr_type == "string":
                value = token
                if attr_name in ("series_name", "series_id", "name", "id"):
                    series_id = token
            elif attr_type == "numeric":
                try:
                    value = int(token)
                except ValueError:
                    raise ParseError(
                        f"attribute {attr_name!r}: {token!r} is not numeric", line_no
                    ) from None
            else:  # date
                try:
                    value = datetime.strptime(token, TIMESTAMP_FORMAT)
                except ValueError:
                    raise ParseError(
                        f"attribute {attr_name!r}: bad timestamp {token!r}", line_no
                    ) from None
                if attr_name == "start_timestamp":
                    start = value
            extra.setdefault(attr_name, []).append(value)

        values = [_parse_value(tok, line_no) for tok in fields[-1].split(",")]
        if not values:
            raise ParseError("series has no values", line_no)
        if any(math.isnan(v) for v in values):
            saw_missing = True
        series.append(
            TimeSeries(id=series_id, values=np.array(values), start_timestamp=start)
        )

    if not in_data:
        raise ParseError("no @data section found")

    resolved_horizon = file_horizon if file_horizon is not None else horizon
    if resolved_horizon is None:
        raise ParseError("no @horizon line and no fallback horizon supplied")
    if resolved_horizon < 1:
        raise ParseError(f"horizon must be >= 1, got {resolved_horizon}")

    return Dataset(
        name=name,
        series=series,
        frequency=frequency,
        horizon=resolved_horizon,
        contains_missing=contains_missing or saw_missing,
        equal_length=equal_length,
    )


def write_tsf(ds: Dataset) -> str:
    """Serialize a dataset back to ``.tsf`` text.

    ``parse_tsf(write_tsf(ds))`` reparses to an equal dataset.
    """
    has_timestamps = any(s.start_timestamp is not None for s in ds.series)
    lines = ["@attribute series_name string"]
    if has_timestamps:
        lines.append("@attribute start_timestamp date")
    if ds.frequency is not None:
        lines.append(f"@frequency {ds.frequency}")
    lines.append(f"@horizon {ds.horizon}")
    lines.append(f"@missing {'true' if ds.contains_missing else 'false'}")
    lines.append(f"@equallength {'true' if ds.equal_length else 'false'}")
    lines.append("@data")
    for s in ds.series:
        fields = [s.id]
        if has_timestamps:
            stamp = s.start_timestamp or datetime(1900, 1, 1)
            fields.append(stamp.strftime(TIMESTAMP_FORMAT))
        fields.append(
            ",".join("?" if math.isnan(v) else repr(float(v)) for v in s.values)
        )
        lines.append(":".join(fields))
    return "\n".join(lines) + "\n"


def parse_csv(source: str | bytes, name: str = "dataset", horizon: int = 1,
              frequency: str | None = None) -> Dataset:
    """Parse one-series-per-column CSV with a header row of series ids.

    Empty cells and ``?`` mark missing values; trailing empties simply end
    a shorter series.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    if horizon < 1:
        raise ParseError(f"horizon must be >= 1, got {horizon}")
    reader = csv.reader(io.StringIO(source))
    rows = [row for row in reader if row]
    if not rows:
        raise ParseError("empty CSV input")
    header = [h.strip() for h in rows[0]]
    if not header or all(not h for h in header):
        raise ParseError("CSV header row has no series ids", 1)

    columns: list[list[float]] = [[] for _ in header]
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) > len(header):
            raise ParseError(
                f"row has {len(row)} cells but header declares {len(header)}", line_no
            )
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                columns[j].append(math.nan)
            else:
                columns[j].append(_parse_value(cell, line_no))
        for j in range(len(row), len(header)):
            columns[j].append(math.nan)

    series = []
    saw_missing = False
    for sid, col in zip(header, columns):
        values = np.array(col, dtype=np.float64)
        # Trailing NaN is padding from shorter columns, not missing data.
        finite = np.flatnonzero(~np.isnan(values))
        if finite.size == 0:
            continue
        values = values[: finite[-1] + 1]
        if np.isnan(values).any():
            saw_missing = True
        series.append(TimeSeries(id=sid, values=values))

    return Dataset(
        name=name,
        series=series,
        frequency=frequency,
        horizon=horizon,
        contains_missing=saw_missing,
        equal_length=len({len(s) for s in series}) <= 1,
    )


MISSING_POLICIES = ("forward-fill", "drop-series")


def apply_missing_policy(ds: Dataset, policy: str = "forward-fill") -> Dataset:
    """Resolve recorded missing values so every series is finite.

    ``forward-fill`` propagates the last seen observation (leading gaps take
    the first observed value); ``drop-series`` removes any series containing
    a gap.  Values are never silently zeroed.
    """
    if policy not in MISSING_POLICIES:
        raise ValueError(f"unknown missing-value policy {policy!r}")

    out = []
    for s in ds.series:
        mask = np.isnan(s.values)
        if not mask.any():
            out.append(s)
            continue
        if policy == "drop-series":
            continue
        if mask.all():
            continue  # nothing to fill from
        values = s.values.copy()
        idx = np.arange(len(values))
        last_seen = np.maximum.accumulate(np.where(mask, -1, idx))
        first = idx[~mask][0]
        last_seen[last_seen < 0] = first
        values = values[last_seen]
        out.append(replace(s, values=values))
    return replace(ds, series=out, contains_missing=False)


def check_min_lengths(ds: Dataset) -> Dataset:
    """Reject series too short to train on after the horizon is held out.

    A series needs ``horizon + 3`` points so the training part can form at
    least one window of size 2 over its difference sequence.
    """
    minimum = ds.horizon + 3
    bad = [s.id for s in ds.series if len(s) < minimum]
    if bad:
        raise SeriesTooShort(
            f"series {', '.join(bad)} shorter than horizon + 3 = {minimum} points"
        )
    return ds


def load_dataset(path: str | Path, missing_policy: str = "forward-fill",
                 horizon: int | None = None) -> Dataset:
    """Read a ``.tsf`` or ``.csv`` file and resolve missing values."""
    path = Path(path)
    text = path.read_text(encoding="cp1252", errors="replace")
    if path.suffix.lower() == ".csv":
        if horizon is None:
            raise ParseError("CSV datasets need an explicit horizon")
        ds = parse_csv(text, name=path.stem, horizon=horizon)
    else:
        ds = parse_tsf(text, name=path.stem, horizon=horizon)
    return apply_missing_policy(ds, missing_policy)


def split_train_test(ds: Dataset) -> tuple[Dataset, Dataset]:
    """Hold out the final ``horizon`` points of every series as the test part.

    Concatenating the two outputs reproduces the input exactly.

    Raises
    ------
    SplitError
        If any series has no more points than the horizon.
    """
    if ds.horizon < 1:
        raise SplitError(f"horizon must be >= 1, got {ds.horizon}")
    train, test = [], []
    for s in ds.series:
        if len(s) <= ds.horizon:
            raise SplitError(
                f"series {s.id!r} has {len(s)} points, cannot hold out "
                f"horizon {ds.horizon}"
            )
        train.append(replace(s, values=s.values[: -ds.horizon]))
        test.append(replace(s, values=s.values[-ds.horizon:]))
    return (
        replace(ds, name=f"{ds.name}-train", series=train),
        replace(ds, name=f"{ds.name}-test", series=test),
    )
